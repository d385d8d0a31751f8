#include "mgmem/retriever.hpp"

#include "mgmem/constructor.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

namespace mgmem {

Granularity route_granularity(const IntentVector& intent) {
    if (intent.b_fine == 1) return Granularity::Raw;
    if (intent.b_abs == 1 || intent.b_event == 1) return Granularity::Episode;
    return Granularity::Fact;
}

int effective_k(int k_dyn, int k_min) {
    return std::max(k_dyn, k_min);
}

Granularity next_in_fallback_cycle(Granularity g) {
    switch (g) {
    case Granularity::Fact: return Granularity::Raw;
    case Granularity::Raw: return Granularity::Episode;
    case Granularity::Episode: return Granularity::Fact;
    }
    return Granularity::Fact;
}

Retriever::Retriever(LlmGateway& gateway, MemoryStore& store)
    : gateway_(gateway), store_(store) {}

RouteResult Retriever::rewrite_and_classify(const TurnRecord& u, const ContextWindow& w) {
    u.validate();
    const Json payload = gateway_.complete_json(
        PromptKind::Retriever,
        {{"memory_window", render_window_text(w)}, {"user_input", u.text}}, Contract::Route);

    RouteResult route;
    route.rewritten = payload.at("rewrite_query").get<std::string>();
    const Json& iv = payload.at("intent_vector");
    auto bit = [](const Json& v) { return v.is_boolean() ? (v.get<bool>() ? 1 : 0) : v.get<int>(); };
    route.intent.b_fine = bit(iv.at("b_fine"));
    route.intent.b_abs = bit(iv.at("b_abs"));
    route.intent.b_event = bit(iv.at("b_event"));
    route.intent.b_atomic = bit(iv.at("b_atomic"));
    route.intent.k_dyn = payload.at("K_dyn").get<int>();
    route.intent.validate();
    route.llm_memory_type = payload.at("memory_type").get<std::string>();
    route.target = route_granularity(route.intent); // local rule wins
    return route;
}

std::vector<ScoredEntry> Retriever::retrieve(RouteResult& route, int k_min) {
    route.query_embedding = gateway_.embed_text(route.rewritten).values;
    const int k = effective_k(route.intent.k_dyn, k_min);
    return store_.top_k(route.target, route.query_embedding, k);
}

std::vector<ScoredEntry> Retriever::retrieve(RouteResult& route) {
    return retrieve(route, store_.config().k_min);
}

std::vector<ScoredEntry> Retriever::retry_expand(const std::vector<ScoredEntry>& prev,
                                                 const RouteResult& route, int round) const {
    if (round < 1) throw Error("retry_expand requires round >= 1");

    std::map<std::int64_t, ScoredEntry> pool;
    for (const auto& s : prev) pool.emplace(s.entry.id, s);

    Granularity g = route.target;
    for (int i = 0; i < round; ++i) g = next_in_fallback_cycle(g);
    const int k = effective_k(route.intent.k_dyn, store_.config().k_min);
    for (auto& s : store_.top_k(g, route.query_embedding, k)) {
        pool.emplace(s.entry.id, std::move(s));
    }

    // Relation expansion: pull everything reachable through the relation
    // indices of the current pool, scored against the same query vector.
    std::vector<TurnId> relations;
    for (const auto& s : prev) {
        relations.insert(relations.end(), s.entry.relations.begin(), s.entry.relations.end());
    }
    for (auto& e : store_.get_by_turn_ids(relations)) {
        const double score = cosine_similarity(route.query_embedding, e.embedding);
        pool.emplace(e.id, ScoredEntry{std::move(e), score});
    }

    std::vector<ScoredEntry> out;
    out.reserve(pool.size());
    for (auto& [id, s] : pool) out.push_back(std::move(s));
    std::sort(out.begin(), out.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entry.created_at < b.entry.created_at;
    });
    return out;
}

} // namespace mgmem
