#include "mgmem/constructor.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace mgmem {

std::string render_window_text(const ContextWindow& w) {
    std::string out;
    for (const auto& t : w.recent()) {
        out += format_turn_id(t.turn_id);
        if (t.timestamp_hint) out += " [" + *t.timestamp_hint + "]";
        out += " " + to_string(t.speaker) + ": " + t.text + "\n";
    }
    return out;
}

std::string render_entries_text(const std::vector<MemoryEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += "[id " + std::to_string(e.id) + "] (" + to_string(e.granularity) + ") ";
        if (e.title) out += *e.title + ": ";
        out += e.content;
        out += " (turn " + format_turn_id(e.meta.turn_id);
        if (e.meta.timestamp) out += ", time " + e.meta.timestamp->to_string();
        out += ")\n";
    }
    return out;
}

Constructor::Constructor(LlmGateway& gateway, MemoryStore& store)
    : gateway_(gateway), store_(store) {}

FactSet Constructor::extract_facts(const TurnRecord& u, const ContextWindow& w,
                                   const std::vector<MemoryEntry>& validated) {
    u.validate();
    const Json payload = gateway_.complete_json(
        PromptKind::Constructor,
        {{"user_input", u.text},
         {"context_window", render_window_text(w)},
         {"validated_memory", render_entries_text(validated)}},
        Contract::Facts);

    FactSet fs;
    for (const auto& f : payload.at("facts")) {
        fs.facts.push_back(f.at("content").get<std::string>());
    }
    fs.timestamp_raw = payload.at("timestamp").get<std::string>();

    // Keep only related ids that actually name a turn in the window (and
    // therefore precede or equal the current turn).
    std::set<TurnId> window_ids;
    for (const auto& id : w.turn_ids()) window_ids.insert(id);
    window_ids.insert(u.turn_id);
    for (const auto& r : payload.at("related_id")) {
        const TurnId tid = parse_turn_id(r.get<std::string>());
        if (window_ids.count(tid) && tid <= u.turn_id) fs.related.push_back(tid);
    }
    return fs;
}

MetaInfo Constructor::assemble_meta(const TurnRecord& u, const FactSet& fs, DateTime now) {
    MetaInfo meta;
    meta.turn_id = u.turn_id;
    meta.speaker = u.speaker;
    if (fs.timestamp_raw == "empty") {
        meta.timestamp = now;
    } else {
        meta.timestamp = parse_datetime(fs.timestamp_raw); // MalformedTimestampError on junk
    }
    return meta;
}

std::vector<MemoryEntry> Constructor::materialize(const TurnRecord& u, const FactSet& fs,
                                                  const MetaInfo& meta) {
    std::vector<MemoryEntry> out;
    out.reserve(1 + fs.facts.size());

    MemoryEntry raw;
    raw.granularity = Granularity::Raw;
    raw.content = u.text;
    raw.relations = fs.related;
    raw.meta = meta;
    out.push_back(std::move(raw));

    for (const auto& fact : fs.facts) {
        MemoryEntry entry;
        entry.granularity = Granularity::Fact;
        entry.content = fact;
        entry.relations = fs.related;
        entry.meta = meta;
        out.push_back(std::move(entry));
    }
    return out;
}

TriggerDecision Constructor::check_trigger(const TurnRecord& u, const ContextWindow& w) {
    const Json payload = gateway_.complete_json(
        PromptKind::Trigger,
        {{"conversation_history", render_window_text(w)}, {"new_messages", u.text}},
        Contract::Trigger);

    TriggerDecision d;
    const Json& fire = payload.at("T_t");
    d.fire = fire.is_boolean() ? (fire.get<bool>() ? 1 : 0) : fire.get<int>();
    d.reason = payload.at("reason").get<std::string>();
    d.confidence = payload.at("confidence").get<double>();
    if (payload.contains("topic_summary") && payload.at("topic_summary").is_string()) {
        d.topic_summary = payload.at("topic_summary").get<std::string>();
    }
    if (w.at_capacity() && d.fire == 0) {
        d.fire = 1;
        d.reason = "context window saturated";
        d.topic_summary = d.topic_summary.empty() ? "window saturation" : d.topic_summary;
    }
    if (d.fire == 0) d.topic_summary.clear();
    return d;
}

EpisodeDraft Constructor::synthesize_episode(const ContextWindow& w,
                                             const std::string& boundary_reason) {
    if (w.empty()) throw EmptyWindowError("cannot synthesize an episode from an empty window");
    const Json payload = gateway_.complete_json(
        PromptKind::Episode,
        {{"conversation", render_window_text(w)}, {"boundary_reason", boundary_reason}},
        Contract::Episode);

    EpisodeDraft draft;
    draft.title = payload.at("title").get<std::string>();
    draft.content = payload.at("content").get<std::string>();
    draft.timestamp = parse_datetime(payload.at("timestamp").get<std::string>());
    return draft;
}

std::vector<std::int64_t> Constructor::encode_and_commit(std::vector<MemoryEntry> entries) {
    // Embed everything first so a backend failure commits nothing.
    for (auto& e : entries) {
        if (!e.embedding.empty()) {
            throw InvariantError("encode_and_commit expects unencoded entries");
        }
        e.embedding = gateway_.embed_text(e.content).values;
    }
    return store_.insert_batch(std::move(entries));
}

Constructor::TurnResult Constructor::ingest_turn(const TurnRecord& u, ContextWindow& w,
                                                 const std::vector<MemoryEntry>& validated,
                                                 DateTime now) {
    const FactSet fs = extract_facts(u, w, validated);
    const MetaInfo meta = assemble_meta(u, fs, now);
    std::vector<MemoryEntry> entries = materialize(u, fs, meta);

    TurnResult result;
    result.trigger = check_trigger(u, w);
    if (result.trigger.fire == 1 && w.empty()) {
        // nothing to summarize; an empty history never opens an episode
        result.trigger.fire = 0;
        result.trigger.topic_summary.clear();
    }
    if (result.trigger.fire == 1) {
        const std::string boundary =
            result.trigger.reason.empty() ? result.trigger.topic_summary : result.trigger.reason;
        const EpisodeDraft draft = synthesize_episode(w, boundary);
        MemoryEntry episode;
        episode.granularity = Granularity::Episode;
        episode.title = draft.title;
        episode.content = draft.content;
        episode.relations = w.turn_ids();
        episode.meta.timestamp = draft.timestamp;
        episode.meta.turn_id = u.turn_id;
        episode.meta.speaker = u.speaker;
        entries.push_back(std::move(episode));
        result.episode_created = true;
    }

    result.ids = encode_and_commit(std::move(entries));

    if (result.episode_created) {
        w.clear();
    }
    w.push(u);
    return result;
}

} // namespace mgmem
