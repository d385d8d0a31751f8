/*
 * mgmem - turn pipeline
 *
 * Orchestrates one full turn: Retriever -> Judge -> {bounded Retry loop |
 * Refresher} -> Constructor -> response generation. Queries run the same
 * verification flow but are not committed to memory unless configured.
 *
 * Degradation: gateway failures fail open for the response (window-only
 * answer) and fail closed for writes (no memory commit); storage failures
 * abort the turn.
 */
#pragma once

#include "mgmem/constructor.hpp"
#include "mgmem/core.hpp"
#include "mgmem/gateway.hpp"
#include "mgmem/judge.hpp"
#include "mgmem/refresher.hpp"
#include "mgmem/retriever.hpp"
#include "mgmem/store.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mgmem {

enum class Mode { FullInference, RetrievalOnly };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

enum class TurnAction { Retrieve, Retry, Refresh, Construct, Respond };

std::string to_string(TurnAction a);

struct PipelineConfig {
    int k_r = 2;              // max verification rounds per turn
    int k_min = 5;            // retrieval floor
    int window_capacity = 20; // context window turns
    Mode mode = Mode::FullInference;
    bool commit_queries = false; // when true, answer_query also constructs memory

    void validate() const;
};

struct TurnOutcome {
    std::optional<std::string> response; // present iff FullInference
    std::vector<MemoryEntry> validated;  // the consistency-checked evidence
    std::vector<TurnAction> actions_taken;
    int rounds_used = 0;
    TokenUsage token_usage;
    double latency_seconds = 0.0;
    bool best_effort = false; // retry budget exhausted, validated is unverified
    bool degraded = false;    // gateway failure; memory commit skipped
    std::string note;
};

Json to_json(const TurnOutcome&);

class Session {
public:
    Session(int index, std::size_t window_capacity) : index_(index), window_(window_capacity) {}

    int index() const { return index_; }
    ContextWindow& window() { return window_; }
    const ContextWindow& window() const { return window_; }

    // Allocates the next turn id for new dialogue.
    TurnRecord make_turn(Speaker speaker, std::string text,
                         std::optional<std::string> timestamp_hint = std::nullopt);

    // Builds a query turn without consuming a turn number.
    TurnRecord peek_turn(std::string text) const;

    // Keeps the counter ahead of externally numbered turns (corpus ingest).
    void note_turn(const TurnId& id);

private:
    int index_;
    ContextWindow window_;
    std::int64_t next_turn_ = 0;
};

class Pipeline {
public:
    using Clock = std::function<DateTime()>;

    Pipeline(LlmGateway& gateway, MemoryStore& store, PipelineConfig config,
             Clock clock = nullptr);

    const PipelineConfig& config() const { return config_; }

    Session& open_session();
    Session& session_for(int index); // creates on first use
    Session* find_session(int index);
    std::vector<int> session_indices() const;

    // Full turn: retrieval, verification (bounded by k_r), optional refresh,
    // construction, response.
    TurnOutcome process_turn(const TurnRecord& u, Session& session);

    // Same flow but the question is not committed to memory (unless
    // commit_queries). retrieval_only forces RetrievalOnly for this call.
    TurnOutcome answer_query(const std::string& question, Session& session,
                             bool retrieval_only = false);

    LlmGateway& gateway() { return gateway_; }
    MemoryStore& store() { return store_; }

private:
    struct VerificationResult {
        std::vector<MemoryEntry> validated;
        int rounds_used = 0;
        bool best_effort = false;
    };

    VerificationResult verify_loop(const TurnRecord& u, Session& session, TurnOutcome& out);
    void respond(const TurnRecord& u, const std::string& window_text,
                 const std::vector<MemoryEntry>& validated, Mode mode, TurnOutcome& out);

    LlmGateway& gateway_;
    MemoryStore& store_;
    PipelineConfig config_;
    Clock clock_;

    Constructor constructor_;
    Retriever retriever_;
    Judge judge_;
    Refresher refresher_;

    std::map<int, Session> sessions_;
};

} // namespace mgmem
