/*
 * mgmem - durable memory store
 *
 * One directory per store:
 *   manifest.json  - embedding_dim + format version
 *   entries.log    - newline-delimited canonical JSON entry records,
 *                    append-oriented; the last record per id wins
 *   vectors.bin    - little-endian float32 rows, row (id-1) holds the
 *                    embedding of entry id
 *
 * Retrieval is an exact cosine scan per granularity: ties broken by
 * ascending created_at. Deletion is a tombstone; compact() removes
 * tombstones physically.
 */
#pragma once

#include "mgmem/core.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace mgmem {

struct StoreConfig {
    std::filesystem::path path;
    int embedding_dim = 8;
    std::optional<std::int64_t> retention_limit_seconds; // max lifespan of conflicting entries
    int k_min = 5;                                       // retrieval floor
};

struct ScoredEntry {
    MemoryEntry entry;
    double score = 0.0; // cosine(query, entry.embedding)
};

// cos(a,b) = a.b / (|a||b|), accumulated in double; 0 when either norm is 0.
double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

class MemoryStore {
public:
    // Opens an existing store or creates a fresh one at config.path.
    explicit MemoryStore(StoreConfig config);
    ~MemoryStore();

    MemoryStore(const MemoryStore&) = delete;
    MemoryStore& operator=(const MemoryStore&) = delete;

    // Write path (serialized store-wide). The entry's id/created_at are
    // assigned by the store; deleted is forced false.
    std::int64_t insert(MemoryEntry entry);

    // All-or-nothing batch insert: on any failure nothing is committed.
    std::vector<std::int64_t> insert_batch(std::vector<MemoryEntry> entries);

    // Replaces content/embedding (and timestamp when given; nullopt keeps
    // the stored value). Id, granularity, relations and speaker survive.
    MemoryEntry update_content(std::int64_t id, std::string new_content,
                               std::vector<float> new_embedding,
                               std::optional<DateTime> new_timestamp = std::nullopt);

    // Tombstones the entry; NotFound for unknown or already-deleted ids.
    MemoryEntry remove(std::int64_t id);

    // Deletes exactly those conflict_ids whose age exceeds the retention
    // limit; no-op when no limit is configured. Entries with unknown
    // timestamps are retained (age incomputable).
    std::vector<std::int64_t> purge_expired(const std::vector<std::int64_t>& conflict_ids,
                                            DateTime now);

    // Read path (non-deleted entries only).
    std::optional<MemoryEntry> get(std::int64_t id) const;
    std::vector<MemoryEntry> scan(Granularity g) const;
    std::vector<MemoryEntry> all(bool include_deleted = false) const;
    std::vector<MemoryEntry> get_by_turn_ids(const std::vector<TurnId>& ids) const;
    std::vector<ScoredEntry> top_k(Granularity g, const std::vector<float>& query, int k) const;

    // Audit accessor; sees tombstones.
    std::optional<MemoryEntry> audit(std::int64_t id) const;

    // Physical removal of tombstones; returns how many were dropped.
    std::size_t compact();

    void flush();

    std::size_t size(bool include_deleted = false) const;
    const StoreConfig& config() const { return config_; }

private:
    void open_files();
    void load();
    void append_log_locked(const MemoryEntry& entry);
    void write_vector_row_locked(std::int64_t id, const std::vector<float>& embedding);
    void index_entry_locked(const MemoryEntry& entry);
    void rebuild_turn_index_locked();
    void check_dim(const std::vector<float>& v) const;

    StoreConfig config_;
    mutable std::shared_mutex mutex_;

    std::map<std::int64_t, MemoryEntry> entries_; // id order == created_at order
    std::unordered_map<std::string, std::vector<std::int64_t>> turn_index_;
    std::int64_t next_id_ = 1;

    std::ofstream log_;
    std::fstream vectors_;
};

} // namespace mgmem
