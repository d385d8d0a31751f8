/*
 * mgmem - Refresher agent
 *
 * Converts a conflict set into an Update/Delete/No-Op plan and applies it
 * against the store, yielding the surviving consistent entries. Deletes are
 * tombstones; the retention purge runs on every apply.
 */
#pragma once

#include "mgmem/core.hpp"
#include "mgmem/gateway.hpp"
#include "mgmem/store.hpp"

#include <vector>

namespace mgmem {

// Explicit forget/cancel detection: the Delete branch is only honored when
// the input carries such an instruction; otherwise the plan is downgraded
// to No-Op.
bool contains_forget_instruction(const std::string& text);

class Refresher {
public:
    Refresher(LlmGateway& gateway, MemoryStore& store);

    // conflicts must be non-empty; every edit id must name a conflict entry.
    RefreshPlan plan(const std::vector<MemoryEntry>& conflicts, const TurnRecord& u);

    // Applies the plan and the retention purge; returns the surviving
    // post-edit conflict entries (edited in place, deletions excluded).
    // All ids are validated before the first mutation.
    std::vector<MemoryEntry> apply(const RefreshPlan& plan,
                                   const std::vector<MemoryEntry>& conflicts, DateTime now);

private:
    LlmGateway& gateway_;
    MemoryStore& store_;
};

} // namespace mgmem
