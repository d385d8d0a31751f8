#include "mgmem/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace mgmem {

std::string to_string(Mode m) {
    return m == Mode::FullInference ? "full" : "retrieval_only";
}

Mode mode_from_string(const std::string& s) {
    if (s == "full" || s == "full_inference") return Mode::FullInference;
    if (s == "retrieval_only" || s == "retrieval-only") return Mode::RetrievalOnly;
    throw ConfigError("unknown mode: \"" + s + "\"");
}

std::string to_string(TurnAction a) {
    switch (a) {
    case TurnAction::Retrieve: return "Retrieve";
    case TurnAction::Retry: return "Retry";
    case TurnAction::Refresh: return "Refresh";
    case TurnAction::Construct: return "Construct";
    case TurnAction::Respond: return "Respond";
    }
    return "?";
}

void PipelineConfig::validate() const {
    if (k_r < 1) throw ConfigError("k_r must be >= 1");
    if (k_min < 1) throw ConfigError("k_min must be >= 1");
    if (window_capacity < 1) throw ConfigError("window_capacity must be >= 1");
}

Json to_json(const TurnOutcome& o) {
    Json actions = Json::array();
    for (TurnAction a : o.actions_taken) actions.push_back(to_string(a));
    Json validated = Json::array();
    for (const auto& e : o.validated) validated.push_back(to_canonical_json(e));
    return Json{{"response", o.response ? Json(*o.response) : Json(nullptr)},
                {"validated", validated},
                {"actions_taken", actions},
                {"rounds_used", o.rounds_used},
                {"token_usage", to_json(o.token_usage)},
                {"latency_seconds", o.latency_seconds},
                {"best_effort", o.best_effort},
                {"degraded", o.degraded},
                {"note", o.note}};
}

// ---------------------------------------------------------------------------
// Session

TurnRecord Session::make_turn(Speaker speaker, std::string text,
                              std::optional<std::string> timestamp_hint) {
    TurnRecord u;
    u.turn_id = {index_, next_turn_++};
    u.speaker = speaker;
    u.text = std::move(text);
    u.timestamp_hint = std::move(timestamp_hint);
    u.validate();
    return u;
}

TurnRecord Session::peek_turn(std::string text) const {
    TurnRecord u;
    u.turn_id = {index_, next_turn_};
    u.speaker = Speaker::User;
    u.text = std::move(text);
    u.validate();
    return u;
}

void Session::note_turn(const TurnId& id) {
    next_turn_ = std::max(next_turn_, id.turn + 1);
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(LlmGateway& gateway, MemoryStore& store, PipelineConfig config, Clock clock)
    : gateway_(gateway), store_(store), config_(config),
      clock_(clock ? std::move(clock) : Clock(&system_now)), constructor_(gateway, store),
      retriever_(gateway, store), judge_(gateway), refresher_(gateway, store) {
    config_.validate();
}

Session& Pipeline::open_session() {
    const int index = sessions_.empty() ? 0 : sessions_.rbegin()->first + 1;
    return session_for(index);
}

Session& Pipeline::session_for(int index) {
    auto it = sessions_.find(index);
    if (it == sessions_.end()) {
        it = sessions_
                 .emplace(index, Session(index, static_cast<std::size_t>(config_.window_capacity)))
                 .first;
    }
    return it->second;
}

Session* Pipeline::find_session(int index) {
    auto it = sessions_.find(index);
    return it == sessions_.end() ? nullptr : &it->second;
}

std::vector<int> Pipeline::session_indices() const {
    std::vector<int> out;
    out.reserve(sessions_.size());
    for (const auto& [index, s] : sessions_) out.push_back(index);
    return out;
}

Pipeline::VerificationResult Pipeline::verify_loop(const TurnRecord& u, Session& session,
                                                   TurnOutcome& out) {
    VerificationResult result;

    RouteResult route = retriever_.rewrite_and_classify(u, session.window());
    std::vector<ScoredEntry> pool = retriever_.retrieve(route, config_.k_min);
    out.actions_taken.push_back(TurnAction::Retrieve);

    while (true) {
        const JudgeVerdict verdict = judge_.verify(u, pool, session.window());
        ++result.rounds_used;

        if (verdict.action == JudgeAction::Retry) {
            out.actions_taken.push_back(TurnAction::Retry);
            if (result.rounds_used >= config_.k_r) {
                // Budget exhausted: proceed with the whole pool, unverified.
                result.best_effort = true;
                for (const auto& s : pool) result.validated.push_back(s.entry);
                break;
            }
            pool = retriever_.retry_expand(pool, route, result.rounds_used);
            continue;
        }

        if (verdict.action == JudgeAction::Pass) {
            const std::set<std::int64_t> keep(verdict.relevant.begin(), verdict.relevant.end());
            for (const auto& s : pool) {
                if (keep.count(s.entry.id)) result.validated.push_back(s.entry);
            }
            break;
        }

        // Refresh: resolve conflicts once, then proceed with the repaired set.
        out.actions_taken.push_back(TurnAction::Refresh);
        const std::set<std::int64_t> conflict_ids(verdict.conflicts.begin(),
                                                  verdict.conflicts.end());
        std::vector<MemoryEntry> conflict_entries;
        for (const auto& s : pool) {
            if (conflict_ids.count(s.entry.id)) conflict_entries.push_back(s.entry);
        }
        const RefreshPlan plan = refresher_.plan(conflict_entries, u);
        const std::vector<MemoryEntry> survivors =
            refresher_.apply(plan, conflict_entries, clock_());
        std::map<std::int64_t, MemoryEntry> survivor_by_id;
        for (const auto& e : survivors) survivor_by_id.emplace(e.id, e);
        for (const auto& s : pool) {
            if (!conflict_ids.count(s.entry.id)) {
                result.validated.push_back(s.entry);
            } else if (auto it = survivor_by_id.find(s.entry.id); it != survivor_by_id.end()) {
                result.validated.push_back(it->second);
            }
        }
        break;
    }
    return result;
}

void Pipeline::respond(const TurnRecord& u, const std::string& window_text,
                       const std::vector<MemoryEntry>& validated, Mode mode, TurnOutcome& out) {
    if (mode != Mode::FullInference) return;

    // Evidence block, newest first.
    std::vector<MemoryEntry> ordered = validated;
    std::sort(ordered.begin(), ordered.end(),
              [](const MemoryEntry& a, const MemoryEntry& b) { return a.created_at > b.created_at; });
    std::string evidence;
    for (const auto& e : ordered) {
        evidence += "- ";
        if (e.title) evidence += *e.title + ": ";
        evidence += e.content;
        if (e.meta.timestamp) evidence += " (" + e.meta.timestamp->to_string() + ")";
        evidence += "\n";
    }

    const std::string prompt = gateway_.render(PromptKind::Responder,
                                               {{"user_input", u.text},
                                                {"context_window", window_text},
                                                {"evidence", evidence}});
    try {
        out.response = gateway_.complete_text(prompt);
        out.actions_taken.push_back(TurnAction::Respond);
    } catch (const StorageFailureError&) {
        throw;
    } catch (const Error& e) {
        out.response = "";
        out.degraded = true;
        if (!out.note.empty()) out.note += "; ";
        out.note += e.what();
    }
}

TurnOutcome Pipeline::process_turn(const TurnRecord& u, Session& session) {
    u.validate();
    session.note_turn(u.turn_id);
    const TokenUsage usage_before = gateway_.usage();
    TurnOutcome out;

    std::vector<MemoryEntry> validated;
    try {
        VerificationResult vr = verify_loop(u, session, out);
        out.rounds_used = vr.rounds_used;
        out.best_effort = vr.best_effort;
        validated = std::move(vr.validated);
    } catch (const StorageFailureError&) {
        throw;
    } catch (const Error& e) {
        out.degraded = true;
        out.note = e.what();
        validated.clear();
    }

    // Window snapshot before this turn enters it; the responder sees the
    // history plus the current input separately.
    const std::string window_text = render_window_text(session.window());

    if (!out.degraded) {
        try {
            constructor_.ingest_turn(u, session.window(), validated, clock_());
            out.actions_taken.push_back(TurnAction::Construct);
        } catch (const StorageFailureError&) {
            throw;
        } catch (const Error& e) {
            out.degraded = true;
            if (!out.note.empty()) out.note += "; ";
            out.note += e.what();
            session.window().push(u);
        }
    } else {
        session.window().push(u);
    }

    if (out.degraded) validated.clear(); // fail-open response uses the window only
    respond(u, window_text, validated, config_.mode, out);

    out.validated = std::move(validated);
    const TokenUsage used = gateway_.usage() - usage_before;
    out.token_usage = used;
    out.latency_seconds = used.latency_seconds;
    return out;
}

TurnOutcome Pipeline::answer_query(const std::string& question, Session& session,
                                   bool retrieval_only) {
    if (config_.commit_queries && !retrieval_only) {
        return process_turn(session.make_turn(Speaker::User, question), session);
    }

    const TurnRecord u = session.peek_turn(question);
    const TokenUsage usage_before = gateway_.usage();
    const Mode mode = retrieval_only ? Mode::RetrievalOnly : config_.mode;
    TurnOutcome out;

    std::vector<MemoryEntry> validated;
    try {
        VerificationResult vr = verify_loop(u, session, out);
        out.rounds_used = vr.rounds_used;
        out.best_effort = vr.best_effort;
        validated = std::move(vr.validated);
    } catch (const StorageFailureError&) {
        throw;
    } catch (const Error& e) {
        out.degraded = true;
        out.note = e.what();
        validated.clear();
    }

    respond(u, render_window_text(session.window()), validated, mode, out);

    out.validated = std::move(validated);
    const TokenUsage used = gateway_.usage() - usage_before;
    out.token_usage = used;
    out.latency_seconds = used.latency_seconds;
    return out;
}

} // namespace mgmem
