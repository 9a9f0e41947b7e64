#include <httplib.h>

#include "tomguide/errors.hpp"
#include "tomguide/service.hpp"

namespace tomguide {

namespace {

void send(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
    send(res, status, {{"code", code}, {"message", msg}});
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ServiceError& e) {
            send_error(res, e.status(), e.code(), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "bad_json", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

nlohmann::json body_json(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    return nlohmann::json::parse(req.body);
}

}  // namespace

void install_routes(httplib::Server& server, ExperimentService& service) {
    server.Get("/tasks", guarded([&](const httplib::Request&, httplib::Response& res) {
        send(res, 200, service.tasks());
    }));
    server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
        send(res, 201, service.create_session(body_json(req)));
    }));
    server.Get(R"(/sessions/([A-Za-z0-9]+)/state)",
               guarded([&](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, service.state(req.matches[1]));
               }));
    server.Post(R"(/sessions/([A-Za-z0-9]+)/action)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, service.action(req.matches[1], body_json(req)));
                }));
    server.Post(R"(/sessions/([A-Za-z0-9]+)/survey)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    send(res, 201, service.survey(req.matches[1], body_json(req)));
                }));
    server.Get(R"(/sessions/([A-Za-z0-9]+)/log)",
               guarded([&](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, service.log(req.matches[1]));
               }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send_error(res, res.status, "not_found", "no such route");
    });
}

bool serve_http(ExperimentService& service, const std::string& host, int port) {
    httplib::Server server;
    install_routes(server, service);
    return server.listen(host, port);
}

}  // namespace tomguide
