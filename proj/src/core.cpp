#include "mgmem/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>

namespace mgmem {
namespace {

bool parse_decimal(const std::string& s, std::size_t begin, std::size_t end, std::int64_t& out) {
    if (begin >= end || end - begin > 18) return false;
    std::int64_t v = 0;
    for (std::size_t i = begin; i < end; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// TurnId

std::string format_turn_id(const TurnId& t) {
    return "D_{" + std::to_string(t.session) + ":" + std::to_string(t.turn) + "}";
}

TurnId parse_turn_id(const std::string& text) {
    // shape: D_{<digits>:<digits>}
    if (text.size() < 7 || text.compare(0, 3, "D_{") != 0 || text.back() != '}') {
        throw MalformedIdError("malformed turn id: \"" + text + "\"");
    }
    const std::size_t colon = text.find(':', 3);
    if (colon == std::string::npos) {
        throw MalformedIdError("malformed turn id: \"" + text + "\"");
    }
    TurnId t;
    if (!parse_decimal(text, 3, colon, t.session) ||
        !parse_decimal(text, colon + 1, text.size() - 1, t.turn)) {
        throw MalformedIdError("malformed turn id: \"" + text + "\"");
    }
    return t;
}

// ---------------------------------------------------------------------------
// enums

std::string to_string(Speaker s) {
    return s == Speaker::User ? "user" : "assistant";
}

Speaker speaker_from_string(const std::string& s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "user") return Speaker::User;
    if (lower == "assistant") return Speaker::Assistant;
    throw Error("unknown speaker: \"" + s + "\"");
}

std::string to_string(Granularity g) {
    switch (g) {
    case Granularity::Raw: return "raw";
    case Granularity::Fact: return "fact";
    case Granularity::Episode: return "episode";
    }
    return "raw";
}

Granularity granularity_from_string(const std::string& s) {
    if (s == "raw") return Granularity::Raw;
    if (s == "fact") return Granularity::Fact;
    if (s == "episode") return Granularity::Episode;
    throw Error("unknown granularity: \"" + s + "\"");
}

std::string to_string(JudgeAction a) {
    switch (a) {
    case JudgeAction::Pass: return "Pass";
    case JudgeAction::Retry: return "Retry";
    case JudgeAction::Refresh: return "Refresh";
    }
    return "Pass";
}

JudgeAction judge_action_from_string(const std::string& s) {
    if (s == "Pass") return JudgeAction::Pass;
    if (s == "Retry") return JudgeAction::Retry;
    if (s == "Refresh") return JudgeAction::Refresh;
    throw Error("unknown judge action: \"" + s + "\"");
}

std::string to_string(RefreshAction a) {
    switch (a) {
    case RefreshAction::Update: return "Update";
    case RefreshAction::Delete: return "Delete";
    case RefreshAction::NoOp: return "No-Op";
    }
    return "No-Op";
}

RefreshAction refresh_action_from_string(const std::string& s) {
    if (s == "Update") return RefreshAction::Update;
    if (s == "Delete") return RefreshAction::Delete;
    if (s == "No-Op") return RefreshAction::NoOp;
    throw Error("unknown refresh action: \"" + s + "\"");
}

// ---------------------------------------------------------------------------
// invariants

bool operator==(const MetaInfo& a, const MetaInfo& b) {
    return a.timestamp == b.timestamp && a.turn_id == b.turn_id && a.speaker == b.speaker;
}

void MemoryEntry::validate() const {
    if (content.empty() && !deleted) {
        throw InvariantError("memory entry content must be non-empty");
    }
    const bool is_episode = granularity == Granularity::Episode;
    if (is_episode && (!title || title->empty())) {
        throw InvariantError("episode entry requires a title");
    }
    if (!is_episode && title) {
        throw InvariantError("title is only valid on episode entries");
    }
}

void IntentVector::validate() const {
    auto bit = [](int b) { return b == 0 || b == 1; };
    if (!bit(b_fine) || !bit(b_abs) || !bit(b_event) || !bit(b_atomic)) {
        throw InvariantError("intent bits must be 0 or 1");
    }
    if (k_dyn < 1) {
        throw InvariantError("k_dyn must be >= 1");
    }
}

void JudgeVerdict::validate() const {
    if (confidence < 0.0 || confidence > 1.0) {
        throw InvariantError("confidence must lie in [0,1]");
    }
    if (action == JudgeAction::Refresh && conflicts.empty()) {
        throw InvariantError("Refresh verdict requires a non-empty conflict set");
    }
    if (action != JudgeAction::Refresh && !conflicts.empty()) {
        throw InvariantError(to_string(action) + " verdict must carry no conflicts");
    }
}

JudgeVerdict make_judge_verdict(JudgeAction action, std::vector<std::int64_t> relevant,
                                std::vector<std::int64_t> conflicts, std::string reason,
                                double confidence) {
    JudgeVerdict v{action, std::move(relevant), std::move(conflicts), std::move(reason), confidence};
    v.validate();
    return v;
}

void RefreshPlan::validate() const {
    switch (action) {
    case RefreshAction::Update:
        if (edits.empty()) throw InvariantError("Update plan requires edits");
        for (const auto& e : edits) {
            if (e.new_content.empty()) {
                throw InvariantError("Update edit requires non-empty new content");
            }
        }
        break;
    case RefreshAction::Delete:
        if (edits.empty()) throw InvariantError("Delete plan requires target ids");
        break;
    case RefreshAction::NoOp:
        if (!edits.empty()) throw InvariantError("No-Op plan must carry no edits");
        break;
    }
}

void TurnRecord::validate() const {
    if (text.empty()) {
        throw InvariantError("turn text must be non-empty");
    }
}

// ---------------------------------------------------------------------------
// ContextWindow

ContextWindow::ContextWindow(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

void ContextWindow::push(const TurnRecord& turn) {
    if (!recent_.empty() && !(recent_.back().turn_id < turn.turn_id)) {
        throw InvariantError("context window turns must arrive in TurnId order");
    }
    if (recent_.size() >= capacity_) {
        recent_.pop_front();
    }
    recent_.push_back(turn);
}

std::vector<TurnId> ContextWindow::turn_ids() const {
    std::vector<TurnId> ids;
    ids.reserve(recent_.size());
    for (const auto& t : recent_) ids.push_back(t.turn_id);
    return ids;
}

// ---------------------------------------------------------------------------
// canonical JSON

namespace {

Json timestamp_json(const std::optional<DateTime>& ts) {
    if (!ts) return nullptr;
    return ts->to_string();
}

std::optional<DateTime> timestamp_from_json(const Json& j, const char* ctx) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_string()) throw Error(std::string(ctx) + ": timestamp must be string or null");
    return parse_datetime(j.get<std::string>());
}

Json relations_json(const std::vector<TurnId>& rel) {
    Json arr = Json::array();
    for (const auto& r : rel) arr.push_back(format_turn_id(r));
    return arr;
}

std::vector<TurnId> relations_from_json(const Json& j) {
    if (!j.is_array()) throw Error("relations must be an array");
    std::vector<TurnId> out;
    out.reserve(j.size());
    for (const auto& item : j) {
        if (!item.is_string()) throw Error("relations entries must be turn-id strings");
        out.push_back(parse_turn_id(item.get<std::string>()));
    }
    return out;
}

const Json& field(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw Error(std::string("missing field \"") + name + "\"");
    return *it;
}

} // namespace

Json to_canonical_json(const MetaInfo& m) {
    return Json{{"timestamp", timestamp_json(m.timestamp)},
                {"turn_id", format_turn_id(m.turn_id)},
                {"speaker", to_string(m.speaker)}};
}

MetaInfo meta_info_from_json(const Json& j) {
    MetaInfo m;
    m.timestamp = timestamp_from_json(field(j, "timestamp"), "meta");
    m.turn_id = parse_turn_id(field(j, "turn_id").get<std::string>());
    m.speaker = speaker_from_string(field(j, "speaker").get<std::string>());
    return m;
}

Json to_canonical_json(const MemoryEntry& e) {
    return Json{{"id", e.id},
                {"granularity", to_string(e.granularity)},
                {"content", e.content},
                {"title", e.title ? Json(*e.title) : Json(nullptr)},
                {"relations", relations_json(e.relations)},
                {"meta", to_canonical_json(e.meta)},
                {"embedding", e.embedding},
                {"created_at", e.created_at},
                {"deleted", e.deleted}};
}

MemoryEntry memory_entry_from_json(const Json& j) {
    MemoryEntry e;
    e.id = field(j, "id").get<std::int64_t>();
    e.granularity = granularity_from_string(field(j, "granularity").get<std::string>());
    e.content = field(j, "content").get<std::string>();
    const Json& title = field(j, "title");
    if (!title.is_null()) e.title = title.get<std::string>();
    e.relations = relations_from_json(field(j, "relations"));
    e.meta = meta_info_from_json(field(j, "meta"));
    e.embedding = field(j, "embedding").get<std::vector<float>>();
    e.created_at = field(j, "created_at").get<std::int64_t>();
    e.deleted = field(j, "deleted").get<bool>();
    return e;
}

Json to_canonical_json(const IntentVector& v) {
    return Json{{"b_fine", v.b_fine},
                {"b_abs", v.b_abs},
                {"b_event", v.b_event},
                {"b_atomic", v.b_atomic},
                {"k_dyn", v.k_dyn}};
}

IntentVector intent_vector_from_json(const Json& j) {
    IntentVector v;
    v.b_fine = field(j, "b_fine").get<int>();
    v.b_abs = field(j, "b_abs").get<int>();
    v.b_event = field(j, "b_event").get<int>();
    v.b_atomic = field(j, "b_atomic").get<int>();
    v.k_dyn = field(j, "k_dyn").get<int>();
    v.validate();
    return v;
}

Json to_canonical_json(const JudgeVerdict& v) {
    return Json{{"action", to_string(v.action)},
                {"relevant", v.relevant},
                {"conflicts", v.conflicts},
                {"reason", v.reason},
                {"confidence", v.confidence}};
}

JudgeVerdict judge_verdict_from_json(const Json& j) {
    JudgeVerdict v;
    v.action = judge_action_from_string(field(j, "action").get<std::string>());
    v.relevant = field(j, "relevant").get<std::vector<std::int64_t>>();
    v.conflicts = field(j, "conflicts").get<std::vector<std::int64_t>>();
    v.reason = field(j, "reason").get<std::string>();
    v.confidence = field(j, "confidence").get<double>();
    v.validate();
    return v;
}

Json to_canonical_json(const RefreshPlan& p) {
    Json edits = Json::array();
    for (const auto& e : p.edits) {
        edits.push_back(Json{{"id", e.id}, {"new_content", e.new_content}});
    }
    return Json{{"action", to_string(p.action)},
                {"edits", edits},
                {"granularity", to_string(p.granularity)},
                {"timestamp", timestamp_json(p.timestamp)},
                {"reason", p.reason}};
}

RefreshPlan refresh_plan_from_json(const Json& j) {
    RefreshPlan p;
    p.action = refresh_action_from_string(field(j, "action").get<std::string>());
    for (const auto& e : field(j, "edits")) {
        p.edits.push_back({field(e, "id").get<std::int64_t>(),
                           field(e, "new_content").get<std::string>()});
    }
    p.granularity = granularity_from_string(field(j, "granularity").get<std::string>());
    p.timestamp = timestamp_from_json(field(j, "timestamp"), "refresh plan");
    p.reason = field(j, "reason").get<std::string>();
    p.validate();
    return p;
}

Json to_canonical_json(const TurnRecord& t) {
    return Json{{"turn_id", format_turn_id(t.turn_id)},
                {"speaker", to_string(t.speaker)},
                {"text", t.text},
                {"timestamp_hint", t.timestamp_hint ? Json(*t.timestamp_hint) : Json(nullptr)}};
}

TurnRecord turn_record_from_json(const Json& j) {
    TurnRecord t;
    t.turn_id = parse_turn_id(field(j, "turn_id").get<std::string>());
    t.speaker = speaker_from_string(field(j, "speaker").get<std::string>());
    t.text = field(j, "text").get<std::string>();
    const Json& hint = field(j, "timestamp_hint");
    if (!hint.is_null()) t.timestamp_hint = hint.get<std::string>();
    t.validate();
    return t;
}

Json to_canonical_json(const ContextWindow& w) {
    Json recent = Json::array();
    for (const auto& t : w.recent()) recent.push_back(to_canonical_json(t));
    return Json{{"recent", recent}, {"capacity", w.capacity()}};
}

ContextWindow context_window_from_json(const Json& j) {
    ContextWindow w(field(j, "capacity").get<std::size_t>());
    for (const auto& t : field(j, "recent")) {
        w.push(turn_record_from_json(t));
    }
    return w;
}

std::string canonical_dump(const MemoryEntry& e) {
    return to_canonical_json(e).dump();
}

} // namespace mgmem
