#include "mgmem/refresher.hpp"

#include "mgmem/constructor.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace mgmem {

bool contains_forget_instruction(const std::string& text) {
    static const char* kMarkers[] = {"forget", "delete", "remove", "erase",
                                     "cancel", "discard", "invalidate"};
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (const char* m : kMarkers) {
        if (lower.find(m) != std::string::npos) return true;
    }
    return false;
}

Refresher::Refresher(LlmGateway& gateway, MemoryStore& store)
    : gateway_(gateway), store_(store) {}

RefreshPlan Refresher::plan(const std::vector<MemoryEntry>& conflicts, const TurnRecord& u) {
    if (conflicts.empty()) throw Error("refresh planning requires a non-empty conflict set");

    std::set<std::int64_t> conflict_ids;
    for (const auto& e : conflicts) conflict_ids.insert(e.id);

    auto edits_in_conflicts = [&](const Json& payload) {
        auto dl = payload.find("dataList");
        if (dl == payload.end() || !dl->is_array()) return;
        for (const auto& item : *dl) {
            const Json& idv = item.at("id");
            const std::int64_t id =
                idv.is_string() ? std::stoll(idv.get<std::string>()) : idv.get<std::int64_t>();
            if (!conflict_ids.count(id)) {
                throw ContractViolationError(
                    "plan targets id " + std::to_string(id) + " outside the conflict set",
                    "refresh", payload.dump());
            }
        }
    };

    const Json payload = gateway_.complete_json(
        PromptKind::Refresher,
        {{"memory_entries", render_entries_text(conflicts)}, {"user_input", u.text}},
        Contract::Refresh, edits_in_conflicts);

    RefreshPlan plan;
    plan.action = refresh_action_from_string(payload.at("Action").get<std::string>());
    if (payload.contains("dataList") && payload.at("dataList").is_array()) {
        for (const auto& item : payload.at("dataList")) {
            RefreshEdit edit;
            const Json& idv = item.at("id");
            edit.id = idv.is_string() ? std::stoll(idv.get<std::string>()) : idv.get<std::int64_t>();
            if (item.contains("new_content") && item.at("new_content").is_string()) {
                edit.new_content = item.at("new_content").get<std::string>();
            }
            plan.edits.push_back(std::move(edit));
        }
    }
    // The model's memory_type claim is ignored; ids are authoritative.
    plan.granularity = conflicts.front().granularity;
    plan.reason = payload.at("reason").get<std::string>();
    if (payload.contains("timestamp") && payload.at("timestamp").is_string()) {
        const std::string ts = payload.at("timestamp").get<std::string>();
        if (ts != "empty") plan.timestamp = parse_datetime(ts);
    }

    if (plan.action == RefreshAction::Delete && !contains_forget_instruction(u.text)) {
        plan.action = RefreshAction::NoOp;
        plan.edits.clear();
        plan.reason += " (delete downgraded: no explicit forget instruction)";
    }
    plan.validate();
    return plan;
}

std::vector<MemoryEntry> Refresher::apply(const RefreshPlan& plan,
                                          const std::vector<MemoryEntry>& conflicts,
                                          DateTime now) {
    plan.validate();

    std::vector<std::int64_t> conflict_ids;
    for (const auto& e : conflicts) conflict_ids.push_back(e.id);

    // Validate all targets and precompute embeddings before mutating
    // anything, so a failure leaves the store untouched.
    for (const auto& edit : plan.edits) {
        auto existing = store_.audit(edit.id);
        if (!existing) throw NotFoundError("plan targets unknown id " + std::to_string(edit.id));
        if (existing->deleted) {
            throw DeletedError("plan targets deleted id " + std::to_string(edit.id));
        }
    }

    std::set<std::int64_t> removed;
    std::set<std::int64_t> updated;
    if (plan.action == RefreshAction::Update) {
        std::vector<std::vector<float>> embeddings;
        embeddings.reserve(plan.edits.size());
        for (const auto& edit : plan.edits) {
            embeddings.push_back(gateway_.embed_text(edit.new_content).values);
        }
        for (std::size_t i = 0; i < plan.edits.size(); ++i) {
            store_.update_content(plan.edits[i].id, plan.edits[i].new_content,
                                  std::move(embeddings[i]), plan.timestamp);
            updated.insert(plan.edits[i].id);
        }
    } else if (plan.action == RefreshAction::Delete) {
        for (const auto& edit : plan.edits) {
            store_.remove(edit.id);
            removed.insert(edit.id);
        }
    }

    for (std::int64_t id : store_.purge_expired(conflict_ids, now)) {
        removed.insert(id);
    }

    std::vector<MemoryEntry> survivors;
    for (const auto& e : conflicts) {
        if (removed.count(e.id)) continue;
        if (updated.count(e.id)) {
            if (auto fresh = store_.get(e.id)) survivors.push_back(*fresh);
        } else {
            survivors.push_back(e);
        }
    }
    return survivors;
}

} // namespace mgmem
