/*
 * mgmem - shared domain types
 *
 * Every type here is an immutable value with a canonical JSON form (field
 * names are part of the wire/persistence contract). No I/O.
 */
#pragma once

#include "mgmem/datetime.hpp"
#include "mgmem/errors.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace mgmem {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// identifiers

// Dialogue turn identifier: j-th turn of the s-th session, canonical text
// form "D_{s:j}".
struct TurnId {
    std::int64_t session = 0;
    std::int64_t turn = 0;

    friend bool operator==(const TurnId& a, const TurnId& b) {
        return a.session == b.session && a.turn == b.turn;
    }
    friend bool operator!=(const TurnId& a, const TurnId& b) { return !(a == b); }
    friend bool operator<(const TurnId& a, const TurnId& b) {
        return std::tie(a.session, a.turn) < std::tie(b.session, b.turn);
    }
    friend bool operator<=(const TurnId& a, const TurnId& b) { return a < b || a == b; }
};

std::string format_turn_id(const TurnId& t);

// Inverse of format_turn_id on its image. Leading zeros are accepted and
// canonicalized away on reformat. Throws MalformedIdError otherwise.
TurnId parse_turn_id(const std::string& text);

// ---------------------------------------------------------------------------
// enums

enum class Speaker { User, Assistant };

std::string to_string(Speaker s);
Speaker speaker_from_string(const std::string& s); // throws Error

enum class Granularity { Raw, Fact, Episode };

std::string to_string(Granularity g);
Granularity granularity_from_string(const std::string& s); // throws Error

// ---------------------------------------------------------------------------
// meta-information attached to every memory entry

struct MetaInfo {
    std::optional<DateTime> timestamp; // nullopt = unknown
    TurnId turn_id;
    Speaker speaker = Speaker::User;

    friend bool operator==(const MetaInfo& a, const MetaInfo& b);
};

// ---------------------------------------------------------------------------
// memory entry

struct MemoryEntry {
    std::int64_t id = 0; // store-assigned, monotone
    Granularity granularity = Granularity::Raw;
    std::string content;
    std::optional<std::string> title; // episodes only
    std::vector<TurnId> relations;
    MetaInfo meta;
    std::vector<float> embedding;
    std::int64_t created_at = 0; // ingestion sequence number
    bool deleted = false;        // tombstone

    // Checks the structural invariants (content/title/relations); embedding
    // dimension is checked by the store against its configuration.
    void validate() const; // throws InvariantError
};

// ---------------------------------------------------------------------------
// retrieval intent

struct IntentVector {
    int b_fine = 0;
    int b_abs = 0;
    int b_event = 0;
    int b_atomic = 0;
    int k_dyn = 1;

    void validate() const; // throws InvariantError
};

// ---------------------------------------------------------------------------
// judge verdict

enum class JudgeAction { Pass, Retry, Refresh };

std::string to_string(JudgeAction a);
JudgeAction judge_action_from_string(const std::string& s);

struct JudgeVerdict {
    JudgeAction action = JudgeAction::Pass;
    std::vector<std::int64_t> relevant;  // validated entry ids
    std::vector<std::int64_t> conflicts; // contradicting entry ids
    std::string reason;
    double confidence = 1.0;

    void validate() const; // throws InvariantError
};

// Validating constructor; rejects action/conflict combinations that violate
// the verdict invariants.
JudgeVerdict make_judge_verdict(JudgeAction action, std::vector<std::int64_t> relevant,
                                std::vector<std::int64_t> conflicts, std::string reason,
                                double confidence);

// ---------------------------------------------------------------------------
// refresh plan

enum class RefreshAction { Update, Delete, NoOp };

std::string to_string(RefreshAction a); // "Update" | "Delete" | "No-Op"
RefreshAction refresh_action_from_string(const std::string& s);

struct RefreshEdit {
    std::int64_t id = 0;
    std::string new_content; // ignored for Delete
};

struct RefreshPlan {
    RefreshAction action = RefreshAction::NoOp;
    std::vector<RefreshEdit> edits;
    Granularity granularity = Granularity::Fact;
    std::optional<DateTime> timestamp;
    std::string reason;

    void validate() const; // throws InvariantError
};

// ---------------------------------------------------------------------------
// dialogue ingestion

struct TurnRecord {
    TurnId turn_id;
    Speaker speaker = Speaker::User;
    std::string text;
    std::optional<std::string> timestamp_hint; // raw, not yet normalized

    void validate() const; // throws InvariantError (text non-empty)
};

// Short ordered buffer of recent turns fed to every agent prompt.
class ContextWindow {
public:
    explicit ContextWindow(std::size_t capacity = 20);

    // Appends a turn; enforces TurnId ordering and evicts the oldest turn
    // when already at capacity.
    void push(const TurnRecord& turn);

    void clear() { recent_.clear(); }
    bool empty() const { return recent_.empty(); }
    std::size_t size() const { return recent_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool at_capacity() const { return recent_.size() >= capacity_; }

    const std::deque<TurnRecord>& recent() const { return recent_; }
    std::vector<TurnId> turn_ids() const;

private:
    std::deque<TurnRecord> recent_;
    std::size_t capacity_;
};

// ---------------------------------------------------------------------------
// canonical JSON
//
// Field names follow the type definitions; keys are emitted in sorted order
// so the dump of a value is byte-stable.

Json to_canonical_json(const MetaInfo&);
Json to_canonical_json(const MemoryEntry&);
Json to_canonical_json(const IntentVector&);
Json to_canonical_json(const JudgeVerdict&);
Json to_canonical_json(const RefreshPlan&);
Json to_canonical_json(const TurnRecord&);
Json to_canonical_json(const ContextWindow&);

MetaInfo meta_info_from_json(const Json&);
MemoryEntry memory_entry_from_json(const Json&);
IntentVector intent_vector_from_json(const Json&);
JudgeVerdict judge_verdict_from_json(const Json&);
RefreshPlan refresh_plan_from_json(const Json&);
TurnRecord turn_record_from_json(const Json&);
ContextWindow context_window_from_json(const Json&);

// dump() of the canonical JSON form
std::string canonical_dump(const MemoryEntry&);

} // namespace mgmem
