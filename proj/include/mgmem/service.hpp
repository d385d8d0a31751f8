/*
 * mgmem - HTTP service surface
 *
 * JSON endpoints over the pipeline:
 *   POST /sessions                      -> {"session_id": n}
 *   POST /sessions/{id}/turns           -> TurnOutcome
 *   POST /sessions/{id}/query           -> TurnOutcome (flag: retrieval_only)
 *   GET  /sessions/{id}/memory?granularity=raw|fact|episode -> {"entries":[...]}
 *
 * Turns within one session are serialized; distinct sessions may proceed
 * concurrently (the store serializes writes internally).
 */
#pragma once

#include "mgmem/pipeline.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace httplib {
class Server;
}

namespace mgmem {

class MemoryService {
public:
    explicit MemoryService(Pipeline& pipeline);

    void register_routes(httplib::Server& server);

private:
    std::mutex& session_mutex(int index);

    Pipeline& pipeline_;
    std::mutex master_mutex_; // guards session creation + mutex map
    std::map<int, std::unique_ptr<std::mutex>> session_mutexes_;
};

// Blocking; serves until the process is stopped.
int run_service(Pipeline& pipeline, const std::string& host, int port);

} // namespace mgmem
