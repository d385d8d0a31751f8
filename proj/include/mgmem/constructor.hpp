/*
 * mgmem - Constructor agent
 *
 * Turns an incoming utterance plus context into raw/fact entries, decides
 * episode triggering, synthesizes episodes, and encodes everything into the
 * store as one atomic batch.
 */
#pragma once

#include "mgmem/core.hpp"
#include "mgmem/gateway.hpp"
#include "mgmem/store.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mgmem {

struct FactSet {
    std::vector<std::string> facts;
    std::vector<TurnId> related;
    std::string timestamp_raw = "empty"; // normalized time text or "empty"
};

struct EpisodeDraft {
    std::string title;
    std::string content; // third-person narrative
    DateTime timestamp;
};

struct TriggerDecision {
    int fire = 0;
    std::string reason;
    double confidence = 0.0;
    std::string topic_summary; // empty when fire == 0
};

// Rendering helpers shared by the agents (deterministic text blocks).
std::string render_window_text(const ContextWindow& w);
std::string render_entries_text(const std::vector<MemoryEntry>& entries);

class Constructor {
public:
    Constructor(LlmGateway& gateway, MemoryStore& store);

    // Extracts atomic facts and related turn ids from the current input.
    // Related ids are filtered to turns actually present in the window.
    FactSet extract_facts(const TurnRecord& u, const ContextWindow& w,
                          const std::vector<MemoryEntry>& validated);

    // Pure: explicit timestamp wins, system time otherwise.
    static MetaInfo assemble_meta(const TurnRecord& u, const FactSet& fs, DateTime now);

    // One raw entry plus one fact entry per extracted fact, all sharing
    // relations and meta. Entries come back unencoded (empty embedding).
    static std::vector<MemoryEntry> materialize(const TurnRecord& u, const FactSet& fs,
                                                const MetaInfo& meta);

    // Episode boundary decision; fire is forced to 1 when the window is at
    // capacity, regardless of the model output.
    TriggerDecision check_trigger(const TurnRecord& u, const ContextWindow& w);

    EpisodeDraft synthesize_episode(const ContextWindow& w, const std::string& boundary_reason);

    // Embeds each entry from its content and inserts the whole batch
    // all-or-nothing. Returns ids in input order.
    std::vector<std::int64_t> encode_and_commit(std::vector<MemoryEntry> entries);

    struct TurnResult {
        std::vector<std::int64_t> ids; // raw, facts..., episode?
        TriggerDecision trigger;
        bool episode_created = false;
    };

    // Full construction flow for one turn. On trigger the episode covers the
    // pre-turn window; the window is then cleared to the current turn.
    TurnResult ingest_turn(const TurnRecord& u, ContextWindow& w,
                           const std::vector<MemoryEntry>& validated, DateTime now);

private:
    LlmGateway& gateway_;
    MemoryStore& store_;
};

} // namespace mgmem
