#include "mgmem/corpus.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace mgmem {

TurnRecord CorpusTurn::to_turn_record() const {
    TurnRecord u;
    if (session < 0 || turn < 0) throw Error("session/turn indices must be non-negative");
    u.turn_id = {session, turn};
    u.speaker = speaker_from_string(speaker);
    u.text = text;
    u.timestamp_hint = timestamp;
    u.validate();
    return u;
}

IngestResult ingest_corpus(const std::filesystem::path& path, Pipeline& pipeline) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open corpus file: " + path.string());

    IngestResult result;
    std::set<std::int64_t> seen_sessions;
    std::optional<std::int64_t> current_session;
    std::int64_t last_turn = -1;

    std::string line;
    std::size_t line_no = 0;
    auto malformed = [&](const std::string& why) {
        return MalformedRecordError("corpus line " + std::to_string(line_no) + ": " + why, line_no,
                                    result.sessions, result.turns);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;

        Json record = Json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) throw malformed("invalid JSON");

        CorpusTurn turn;
        try {
            turn.session = record.at("session").get<std::int64_t>();
            turn.turn = record.at("turn").get<std::int64_t>();
            turn.speaker = record.at("speaker").get<std::string>();
            turn.text = record.at("text").get<std::string>();
            if (record.contains("timestamp") && record.at("timestamp").is_string()) {
                turn.timestamp = record.at("timestamp").get<std::string>();
            }
        } catch (const std::exception& e) {
            throw malformed(e.what());
        }

        if (!current_session || *current_session != turn.session) {
            if (seen_sessions.count(turn.session)) {
                throw malformed("session " + std::to_string(turn.session) +
                                " resumes after another session started");
            }
            seen_sessions.insert(turn.session);
            current_session = turn.session;
            last_turn = -1;
            ++result.sessions;
        }
        if (turn.turn <= last_turn) {
            throw malformed("turn ids must be strictly increasing within a session");
        }
        last_turn = turn.turn;

        TurnRecord u;
        try {
            u = turn.to_turn_record();
        } catch (const Error& e) {
            throw malformed(e.what());
        }

        Session& session = pipeline.session_for(static_cast<int>(turn.session));
        pipeline.process_turn(u, session);
        ++result.turns;
    }
    return result;
}

} // namespace mgmem
