/*
 * mgmem - Judge agent
 *
 * Sequential dual verification of retrieved candidates: relevance and
 * sufficiency gating (Retry), then conflict detection (Refresh). Read-only:
 * never touches the store.
 */
#pragma once

#include "mgmem/core.hpp"
#include "mgmem/gateway.hpp"
#include "mgmem/store.hpp"

#include <vector>

namespace mgmem {

class Judge {
public:
    explicit Judge(LlmGateway& gateway);

    // Empty candidate sets short-circuit to Retry without a model call.
    // A verdict naming ids outside the candidate set is a contract
    // violation (anti-hallucination guard).
    JudgeVerdict verify(const TurnRecord& u, const std::vector<ScoredEntry>& candidates,
                        const ContextWindow& w);

private:
    LlmGateway& gateway_;
};

} // namespace mgmem
