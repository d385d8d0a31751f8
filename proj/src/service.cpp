#include "mgmem/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdio>

namespace mgmem {
namespace {

void reply_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, Json{{"error", message}});
}

Json parse_body(const httplib::Request& req) {
    Json body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        throw Error("request body must be a JSON object");
    }
    return body;
}

} // namespace

MemoryService::MemoryService(Pipeline& pipeline) : pipeline_(pipeline) {}

std::mutex& MemoryService::session_mutex(int index) {
    auto it = session_mutexes_.find(index);
    if (it == session_mutexes_.end()) {
        it = session_mutexes_.emplace(index, std::make_unique<std::mutex>()).first;
    }
    return *it->second;
}

void MemoryService::register_routes(httplib::Server& server) {
    server.Post("/sessions", [this](const httplib::Request&, httplib::Response& res) {
        std::lock_guard<std::mutex> lock(master_mutex_);
        Session& session = pipeline_.open_session();
        session_mutex(session.index());
        reply_json(res, 200, Json{{"session_id", session.index()}});
    });

    server.Post(R"(/sessions/(\d+)/turns)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    const int index = std::stoi(req.matches[1]);
                    Session* session = nullptr;
                    std::mutex* turn_lock = nullptr;
                    {
                        std::lock_guard<std::mutex> lock(master_mutex_);
                        session = pipeline_.find_session(index);
                        if (session) turn_lock = &session_mutex(index);
                    }
                    if (!session) return reply_error(res, 404, "unknown session");
                    try {
                        const Json body = parse_body(req);
                        const Speaker speaker =
                            speaker_from_string(body.value("speaker", std::string("user")));
                        const std::string text = body.at("text").get<std::string>();
                        std::optional<std::string> hint;
                        if (body.contains("timestamp_hint") && body.at("timestamp_hint").is_string()) {
                            hint = body.at("timestamp_hint").get<std::string>();
                        }
                        std::lock_guard<std::mutex> lock(*turn_lock);
                        const TurnRecord u = session->make_turn(speaker, text, hint);
                        reply_json(res, 200, to_json(pipeline_.process_turn(u, *session)));
                    } catch (const Json::exception& e) {
                        reply_error(res, 400, e.what());
                    } catch (const Error& e) {
                        reply_error(res, 400, e.what());
                    }
                });

    server.Post(R"(/sessions/(\d+)/query)",
                [this](const httplib::Request& req, httplib::Response& res) {
                    const int index = std::stoi(req.matches[1]);
                    Session* session = nullptr;
                    std::mutex* turn_lock = nullptr;
                    {
                        std::lock_guard<std::mutex> lock(master_mutex_);
                        session = pipeline_.find_session(index);
                        if (session) turn_lock = &session_mutex(index);
                    }
                    if (!session) return reply_error(res, 404, "unknown session");
                    try {
                        const Json body = parse_body(req);
                        const std::string question = body.at("question").get<std::string>();
                        const bool retrieval_only = body.value("retrieval_only", false);
                        std::lock_guard<std::mutex> lock(*turn_lock);
                        reply_json(res, 200,
                                   to_json(pipeline_.answer_query(question, *session,
                                                                  retrieval_only)));
                    } catch (const Json::exception& e) {
                        reply_error(res, 400, e.what());
                    } catch (const Error& e) {
                        reply_error(res, 400, e.what());
                    }
                });

    server.Get(R"(/sessions/(\d+)/memory)",
               [this](const httplib::Request& req, httplib::Response& res) {
                   const int index = std::stoi(req.matches[1]);
                   {
                       std::lock_guard<std::mutex> lock(master_mutex_);
                       if (!pipeline_.find_session(index)) {
                           return reply_error(res, 404, "unknown session");
                       }
                   }
                   std::optional<Granularity> filter;
                   if (req.has_param("granularity")) {
                       try {
                           filter = granularity_from_string(req.get_param_value("granularity"));
                       } catch (const Error& e) {
                           return reply_error(res, 400, e.what());
                       }
                   }
                   Json entries = Json::array();
                   for (const auto& e : pipeline_.store().all()) {
                       if (e.meta.turn_id.session != index) continue;
                       if (filter && e.granularity != *filter) continue;
                       entries.push_back(to_canonical_json(e));
                   }
                   reply_json(res, 200, Json{{"entries", entries}});
               });
}

int run_service(Pipeline& pipeline, const std::string& host, int port) {
    MemoryService service(pipeline);
    httplib::Server server;
    service.register_routes(server);
    std::printf("serving on %s:%d\n", host.c_str(), port);
    std::fflush(stdout);
    return server.listen(host, port) ? 0 : 1;
}

} // namespace mgmem
