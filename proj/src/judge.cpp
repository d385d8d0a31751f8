#include "mgmem/judge.hpp"

#include "mgmem/constructor.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace mgmem {
namespace {

std::vector<std::int64_t> read_id_array(const Json& j, const char* key) {
    std::vector<std::int64_t> out;
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return out;
    for (const auto& v : *it) {
        if (v.is_string()) {
            out.push_back(std::stoll(v.get<std::string>()));
        } else {
            out.push_back(v.get<std::int64_t>());
        }
    }
    return out;
}

} // namespace

Judge::Judge(LlmGateway& gateway) : gateway_(gateway) {}

JudgeVerdict Judge::verify(const TurnRecord& u, const std::vector<ScoredEntry>& candidates,
                           const ContextWindow& w) {
    if (candidates.empty()) {
        // Nothing to audit; signal the retriever without burning a call.
        return make_judge_verdict(JudgeAction::Retry, {}, {}, "no candidates retrieved", 1.0);
    }

    std::set<std::int64_t> candidate_ids;
    std::vector<MemoryEntry> entries;
    entries.reserve(candidates.size());
    for (const auto& s : candidates) {
        candidate_ids.insert(s.entry.id);
        entries.push_back(s.entry);
    }

    auto ids_in_candidates = [&](const Json& payload) {
        for (const char* key : {"conflict_ids", "relevant_ids"}) {
            for (std::int64_t id : read_id_array(payload, key)) {
                if (!candidate_ids.count(id)) {
                    throw ContractViolationError(
                        "verdict names id " + std::to_string(id) + " outside the candidate set",
                        "verdict", payload.dump());
                }
            }
        }
    };

    const Json payload = gateway_.complete_json(
        PromptKind::Judge,
        {{"information", render_entries_text(entries)},
         {"user_input", u.text},
         {"context_window", render_window_text(w)}},
        Contract::Verdict, ids_in_candidates);

    const JudgeAction action = judge_action_from_string(payload.at("Action").get<std::string>());
    std::vector<std::int64_t> conflicts = read_id_array(payload, "conflict_ids");
    std::vector<std::int64_t> relevant = read_id_array(payload, "relevant_ids");
    if (action == JudgeAction::Pass && relevant.empty()) {
        relevant.assign(candidate_ids.begin(), candidate_ids.end());
    }
    if (action == JudgeAction::Refresh && relevant.empty()) {
        for (std::int64_t id : candidate_ids) {
            if (std::find(conflicts.begin(), conflicts.end(), id) == conflicts.end()) {
                relevant.push_back(id);
            }
        }
    }
    if (action == JudgeAction::Retry) relevant.clear();

    return make_judge_verdict(action, std::move(relevant), std::move(conflicts),
                              payload.at("reason").get<std::string>(),
                              payload.at("confidence").get<double>());
}

} // namespace mgmem
