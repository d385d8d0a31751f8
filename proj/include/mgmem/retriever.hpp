/*
 * mgmem - Retriever agent
 *
 * Rewrites the query into a self-contained form, classifies intent, routes
 * to a granularity by the priority rule, and performs bounded top-k
 * retrieval with relation-based expansion on retries.
 */
#pragma once

#include "mgmem/core.hpp"
#include "mgmem/gateway.hpp"
#include "mgmem/store.hpp"

#include <string>
#include <vector>

namespace mgmem {

struct RouteResult {
    std::string rewritten;
    IntentVector intent;
    Granularity target = Granularity::Fact;
    // What the model claimed; recorded only, the local rule is authoritative.
    std::string llm_memory_type;
    // Query embedding, filled by retrieve() and reused across retry rounds.
    std::vector<float> query_embedding;
};

// Priority rule: Raw if b_fine, else Episode if b_abs or b_event, else Fact.
Granularity route_granularity(const IntentVector& intent);

// Effective retrieval cutoff: the dynamic budget never falls below the floor.
int effective_k(int k_dyn, int k_min);

// Next granularity in the fixed retry fallback cycle Fact -> Raw -> Episode.
Granularity next_in_fallback_cycle(Granularity g);

class Retriever {
public:
    Retriever(LlmGateway& gateway, MemoryStore& store);

    RouteResult rewrite_and_classify(const TurnRecord& u, const ContextWindow& w);

    // top_k over route.target with k = max(k_dyn, k_min); embeds the
    // rewritten query and caches the vector on the route.
    std::vector<ScoredEntry> retrieve(RouteResult& route, int k_min);
    std::vector<ScoredEntry> retrieve(RouteResult& route); // k_min from store config

    // Round r >= 1: union of prev, top_k over the granularity r steps after
    // route.target in the fallback cycle, and the relation neighborhood of
    // prev. Deduplicated by id, re-sorted by score.
    std::vector<ScoredEntry> retry_expand(const std::vector<ScoredEntry>& prev,
                                          const RouteResult& route, int round) const;

private:
    LlmGateway& gateway_;
    MemoryStore& store_;
};

} // namespace mgmem
