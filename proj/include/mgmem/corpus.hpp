/*
 * mgmem - corpus ingestion
 *
 * Corpora are newline-delimited JSON turn records, grouped by session and
 * turn-ordered:
 *   {"session":0,"turn":0,"speaker":"user","text":"...","timestamp":"..."}
 */
#pragma once

#include "mgmem/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mgmem {

struct CorpusTurn {
    std::int64_t session = 0;
    std::int64_t turn = 0;
    std::string speaker;
    std::string text;
    std::optional<std::string> timestamp;

    TurnRecord to_turn_record() const; // throws MalformedRecordError-adjacent Error
};

struct IngestResult {
    std::int64_t sessions = 0;
    std::int64_t turns = 0;
};

// Runs every record through process_turn in file order. Ordering violations
// (a session resuming after another began, or non-increasing turns) raise
// MalformedRecordError carrying the line number and the partial progress,
// which stays committed.
IngestResult ingest_corpus(const std::filesystem::path& path, Pipeline& pipeline);

} // namespace mgmem
