/*
 * mgmem - command-line interface
 *
 * Subcommands: ingest, query, chat, eval, serve, compact.
 */
#include "mgmem/config.hpp"
#include "mgmem/corpus.hpp"
#include "mgmem/eval.hpp"
#include "mgmem/service.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

namespace {

mgmem::EngineConfig load_config(const std::string& path) {
    if (!path.empty()) return mgmem::EngineConfig::load_file(path);
    if (std::filesystem::exists("mgmem.json")) {
        return mgmem::EngineConfig::load_file("mgmem.json");
    }
    return mgmem::EngineConfig{};
}

void print_outcome(const mgmem::TurnOutcome& outcome, bool verbose) {
    if (outcome.response) {
        std::cout << *outcome.response << "\n";
    }
    if (!verbose) return;
    std::cout << "-- evidence (" << outcome.validated.size() << " entries"
              << (outcome.best_effort ? ", unverified" : "") << ")\n";
    for (const auto& e : outcome.validated) {
        std::cout << "   [" << e.id << "] (" << mgmem::to_string(e.granularity) << ") "
                  << e.content << "\n";
    }
    std::cout << "-- rounds " << outcome.rounds_used << ", tokens "
              << outcome.token_usage.total_tokens() << ", latency " << outcome.latency_seconds
              << "s";
    if (outcome.degraded) std::cout << " [degraded: " << outcome.note << "]";
    std::cout << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-granularity self-maintaining memory engine"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "JSON config file (default: ./mgmem.json if present)");

    std::string corpus_path;
    auto* ingest_cmd = app.add_subcommand("ingest", "ingest a JSONL dialogue corpus");
    ingest_cmd->add_option("corpus", corpus_path, "corpus .jsonl file")->required();

    std::string query_text;
    bool retrieval_only = false;
    auto* query_cmd = app.add_subcommand("query", "answer one question against the store");
    query_cmd->add_option("text", query_text, "question text")->required();
    query_cmd->add_flag("--retrieval-only", retrieval_only, "skip response generation");

    auto* chat_cmd = app.add_subcommand("chat", "interactive turn loop on stdin");

    std::string qa_path;
    std::string report_path;
    auto* eval_cmd = app.add_subcommand("eval", "run a QA evaluation");
    eval_cmd->add_option("qa", qa_path, "QA .jsonl file (question/gold/category)")->required();
    eval_cmd->add_option("--report", report_path, "write the JSON report here");

    std::string host = "127.0.0.1";
    int port = 8877;
    auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
    serve_cmd->add_option("--host", host, "bind address");
    serve_cmd->add_option("--port", port, "bind port");

    auto* compact_cmd = app.add_subcommand("compact", "physically drop tombstoned entries");

    CLI11_PARSE(app, argc, argv);

    try {
        mgmem::EngineConfig config = load_config(config_path);
        mgmem::Engine engine = mgmem::build_engine(config);

        if (ingest_cmd->parsed()) {
            try {
                const auto result = mgmem::ingest_corpus(corpus_path, *engine.pipeline);
                std::cout << "ingested " << result.turns << " turns across " << result.sessions
                          << " sessions; store now holds " << engine.store->size()
                          << " entries\n";
            } catch (const mgmem::MalformedRecordError& e) {
                std::cerr << "error: " << e.what() << "\n";
                std::cerr << "kept partial progress: " << e.turns << " turns across "
                          << e.sessions << " sessions\n";
                return 1;
            }
        } else if (query_cmd->parsed()) {
            auto& session = engine.pipeline->open_session();
            print_outcome(engine.pipeline->answer_query(query_text, session, retrieval_only),
                          true);
        } else if (chat_cmd->parsed()) {
            auto& session = engine.pipeline->open_session();
            std::string line;
            std::cout << "> " << std::flush;
            while (std::getline(std::cin, line)) {
                if (!line.empty()) {
                    const auto u = session.make_turn(mgmem::Speaker::User, line);
                    print_outcome(engine.pipeline->process_turn(u, session), false);
                }
                std::cout << "> " << std::flush;
            }
        } else if (eval_cmd->parsed()) {
            const auto items = mgmem::load_qa_jsonl(qa_path);
            const auto report = mgmem::run_eval(items, *engine.pipeline);
            std::cout << report.to_table();
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                out << report.to_json().dump(2) << "\n";
                std::cout << "report written to " << report_path << "\n";
            }
        } else if (serve_cmd->parsed()) {
            return mgmem::run_service(*engine.pipeline, host, port);
        } else if (compact_cmd->parsed()) {
            const auto dropped = engine.store->compact();
            std::cout << "compacted: dropped " << dropped << " tombstoned entries\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
