#include "mgmem/store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <set>

namespace mgmem {
namespace {

constexpr int kFormatVersion = 1;

void encode_le32(float value, unsigned char* out) {
    std::uint32_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    out[0] = static_cast<unsigned char>(bits & 0xff);
    out[1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    out[2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    out[3] = static_cast<unsigned char>((bits >> 24) & 0xff);
}

float decode_le32(const unsigned char* in) {
    const std::uint32_t bits = static_cast<std::uint32_t>(in[0]) |
                               (static_cast<std::uint32_t>(in[1]) << 8) |
                               (static_cast<std::uint32_t>(in[2]) << 16) |
                               (static_cast<std::uint32_t>(in[3]) << 24);
    float value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

} // namespace

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatchError("cosine over vectors of different dimension");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

MemoryStore::MemoryStore(StoreConfig config) : config_(std::move(config)) {
    if (config_.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (config_.k_min < 1) throw ConfigError("k_min must be >= 1");

    std::error_code ec;
    std::filesystem::create_directories(config_.path, ec);
    if (ec) throw StorageFailureError("cannot create store directory: " + ec.message());

    const auto manifest_path = config_.path / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        Json manifest = Json::parse(in, nullptr, false);
        if (manifest.is_discarded()) throw StorageFailureError("corrupt manifest.json");
        if (manifest.value("format_version", 0) != kFormatVersion) {
            throw StorageFailureError("unsupported store format version");
        }
        const int dim = manifest.value("embedding_dim", 0);
        if (dim != config_.embedding_dim) {
            throw DimensionMismatchError("store dimension " + std::to_string(dim) +
                                         " does not match configured " +
                                         std::to_string(config_.embedding_dim));
        }
    } else {
        std::ofstream out(manifest_path);
        out << Json{{"format_version", kFormatVersion}, {"embedding_dim", config_.embedding_dim}}
                   .dump()
            << "\n";
        if (!out) throw StorageFailureError("cannot write manifest.json");
    }

    load();
    open_files();
}

MemoryStore::~MemoryStore() {
    try {
        flush();
    } catch (...) {
        // destructor must not throw
    }
}

void MemoryStore::open_files() {
    const auto log_path = config_.path / "entries.log";
    const auto vec_path = config_.path / "vectors.bin";
    log_.open(log_path, std::ios::app);
    if (!log_) throw StorageFailureError("cannot open entries.log");
    if (!std::filesystem::exists(vec_path)) {
        std::ofstream touch(vec_path, std::ios::binary);
    }
    vectors_.open(vec_path, std::ios::in | std::ios::out | std::ios::binary);
    if (!vectors_) throw StorageFailureError("cannot open vectors.bin");
}

void MemoryStore::load() {
    const auto log_path = config_.path / "entries.log";
    if (std::filesystem::exists(log_path)) {
        std::ifstream in(log_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            Json record = Json::parse(line, nullptr, false);
            if (record.is_discarded()) {
                throw StorageFailureError("corrupt entry record at entries.log:" +
                                          std::to_string(line_no));
            }
            MemoryEntry entry;
            try {
                entry = memory_entry_from_json(record);
            } catch (const Error& e) {
                throw StorageFailureError("invalid entry record at entries.log:" +
                                          std::to_string(line_no) + ": " + e.what());
            }
            next_id_ = std::max(next_id_, entry.id + 1);
            entries_[entry.id] = std::move(entry);
        }
    }

    // The sidecar is the authoritative source of the indexed vectors.
    const auto vec_path = config_.path / "vectors.bin";
    if (!entries_.empty()) {
        std::ifstream vin(vec_path, std::ios::binary);
        if (!vin) throw StorageFailureError("missing vectors.bin for a non-empty store");
        vin.seekg(0, std::ios::end);
        const std::int64_t bytes = static_cast<std::int64_t>(vin.tellg());
        const std::int64_t row_bytes = static_cast<std::int64_t>(config_.embedding_dim) * 4;
        if (bytes < (next_id_ - 1) * row_bytes) {
            throw StorageFailureError("vectors.bin shorter than the entry log requires");
        }
        std::vector<unsigned char> buf(static_cast<std::size_t>(row_bytes));
        for (auto& [id, entry] : entries_) {
            vin.seekg((id - 1) * row_bytes);
            vin.read(reinterpret_cast<char*>(buf.data()), row_bytes);
            if (!vin) throw StorageFailureError("failed reading vectors.bin row for id " +
                                                std::to_string(id));
            std::vector<float> emb(static_cast<std::size_t>(config_.embedding_dim));
            for (int i = 0; i < config_.embedding_dim; ++i) {
                emb[static_cast<std::size_t>(i)] = decode_le32(buf.data() + i * 4);
            }
            entry.embedding = std::move(emb);
        }
    }

    rebuild_turn_index_locked();
}

void MemoryStore::check_dim(const std::vector<float>& v) const {
    if (static_cast<int>(v.size()) != config_.embedding_dim) {
        throw DimensionMismatchError("embedding has dimension " + std::to_string(v.size()) +
                                     ", store expects " + std::to_string(config_.embedding_dim));
    }
}

void MemoryStore::append_log_locked(const MemoryEntry& entry) {
    log_ << to_canonical_json(entry).dump() << "\n";
    log_.flush();
    if (!log_) throw StorageFailureError("failed appending to entries.log");
}

void MemoryStore::write_vector_row_locked(std::int64_t id, const std::vector<float>& embedding) {
    const std::int64_t row_bytes = static_cast<std::int64_t>(config_.embedding_dim) * 4;
    std::vector<unsigned char> buf(static_cast<std::size_t>(row_bytes));
    for (int i = 0; i < config_.embedding_dim; ++i) {
        encode_le32(embedding[static_cast<std::size_t>(i)], buf.data() + i * 4);
    }
    vectors_.clear();
    vectors_.seekp((id - 1) * row_bytes);
    vectors_.write(reinterpret_cast<const char*>(buf.data()), row_bytes);
    vectors_.flush();
    if (!vectors_) throw StorageFailureError("failed writing vectors.bin row");
}

void MemoryStore::index_entry_locked(const MemoryEntry& entry) {
    turn_index_[format_turn_id(entry.meta.turn_id)].push_back(entry.id);
    for (const auto& rel : entry.relations) {
        turn_index_[format_turn_id(rel)].push_back(entry.id);
    }
}

void MemoryStore::rebuild_turn_index_locked() {
    turn_index_.clear();
    for (const auto& [id, entry] : entries_) {
        index_entry_locked(entry);
    }
}

std::int64_t MemoryStore::insert(MemoryEntry entry) {
    std::unique_lock lock(mutex_);
    check_dim(entry.embedding);
    entry.deleted = false;
    entry.validate();
    entry.id = next_id_;
    entry.created_at = next_id_;
    ++next_id_;
    append_log_locked(entry);
    write_vector_row_locked(entry.id, entry.embedding);
    index_entry_locked(entry);
    const std::int64_t id = entry.id;
    entries_[id] = std::move(entry);
    return id;
}

std::vector<std::int64_t> MemoryStore::insert_batch(std::vector<MemoryEntry> entries) {
    std::unique_lock lock(mutex_);
    for (auto& e : entries) {
        check_dim(e.embedding);
        e.deleted = false;
        e.validate();
    }
    const std::int64_t first_id = next_id_;
    const auto log_bytes = std::filesystem::file_size(config_.path / "entries.log");
    std::vector<std::int64_t> ids;
    ids.reserve(entries.size());
    try {
        for (auto& e : entries) {
            e.id = next_id_;
            e.created_at = next_id_;
            ++next_id_;
            append_log_locked(e);
            write_vector_row_locked(e.id, e.embedding);
            ids.push_back(e.id);
        }
    } catch (...) {
        // roll the batch back: nothing of it may remain visible
        next_id_ = first_id;
        log_.close();
        std::error_code ec;
        std::filesystem::resize_file(config_.path / "entries.log", log_bytes, ec);
        log_.open(config_.path / "entries.log", std::ios::app);
        throw;
    }
    for (auto& e : entries) {
        index_entry_locked(e);
        const std::int64_t id = e.id;
        entries_[id] = std::move(e);
    }
    return ids;
}

MemoryEntry MemoryStore::update_content(std::int64_t id, std::string new_content,
                                        std::vector<float> new_embedding,
                                        std::optional<DateTime> new_timestamp) {
    std::unique_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFoundError("no entry with id " + std::to_string(id));
    if (it->second.deleted) throw DeletedError("entry " + std::to_string(id) + " is deleted");
    check_dim(new_embedding);
    if (new_content.empty()) throw InvariantError("updated content must be non-empty");

    MemoryEntry updated = it->second;
    updated.content = std::move(new_content);
    updated.embedding = std::move(new_embedding);
    if (new_timestamp) updated.meta.timestamp = *new_timestamp;

    append_log_locked(updated);
    write_vector_row_locked(id, updated.embedding);
    it->second = updated;
    return updated;
}

MemoryEntry MemoryStore::remove(std::int64_t id) {
    std::unique_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.deleted) {
        throw NotFoundError("no live entry with id " + std::to_string(id));
    }
    MemoryEntry tombstone = it->second;
    tombstone.deleted = true;
    append_log_locked(tombstone);
    it->second = tombstone;
    return tombstone;
}

std::vector<std::int64_t> MemoryStore::purge_expired(const std::vector<std::int64_t>& conflict_ids,
                                                     DateTime now) {
    if (!config_.retention_limit_seconds) return {};
    const std::int64_t limit = *config_.retention_limit_seconds;
    std::vector<std::int64_t> purged;
    std::unique_lock lock(mutex_);
    for (std::int64_t id : conflict_ids) {
        auto it = entries_.find(id);
        if (it == entries_.end() || it->second.deleted) continue;
        const auto& ts = it->second.meta.timestamp;
        if (!ts) continue; // age incomputable
        if (now.epoch_seconds() - ts->epoch_seconds() > limit) {
            MemoryEntry tombstone = it->second;
            tombstone.deleted = true;
            append_log_locked(tombstone);
            it->second = tombstone;
            purged.push_back(id);
        }
    }
    return purged;
}

std::optional<MemoryEntry> MemoryStore::get(std::int64_t id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end() || it->second.deleted) return std::nullopt;
    return it->second;
}

std::optional<MemoryEntry> MemoryStore::audit(std::int64_t id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<MemoryEntry> MemoryStore::scan(Granularity g) const {
    std::shared_lock lock(mutex_);
    std::vector<MemoryEntry> out;
    for (const auto& [id, entry] : entries_) {
        if (!entry.deleted && entry.granularity == g) out.push_back(entry);
    }
    return out;
}

std::vector<MemoryEntry> MemoryStore::all(bool include_deleted) const {
    std::shared_lock lock(mutex_);
    std::vector<MemoryEntry> out;
    out.reserve(entries_.size());
    for (const auto& [id, entry] : entries_) {
        if (include_deleted || !entry.deleted) out.push_back(entry);
    }
    return out;
}

std::vector<MemoryEntry> MemoryStore::get_by_turn_ids(const std::vector<TurnId>& ids) const {
    std::shared_lock lock(mutex_);
    std::set<std::int64_t> hit;
    for (const auto& tid : ids) {
        auto it = turn_index_.find(format_turn_id(tid));
        if (it == turn_index_.end()) continue;
        for (std::int64_t id : it->second) hit.insert(id);
    }
    std::vector<MemoryEntry> out;
    for (std::int64_t id : hit) { // std::set iterates in id order == created_at order
        auto it = entries_.find(id);
        if (it != entries_.end() && !it->second.deleted) out.push_back(it->second);
    }
    return out;
}

std::vector<ScoredEntry> MemoryStore::top_k(Granularity g, const std::vector<float>& query,
                                            int k) const {
    if (k < 1) throw Error("top_k requires k >= 1");
    check_dim(query);
    std::shared_lock lock(mutex_);
    std::vector<ScoredEntry> scored;
    for (const auto& [id, entry] : entries_) {
        if (entry.deleted || entry.granularity != g) continue;
        scored.push_back({entry, cosine_similarity(query, entry.embedding)});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredEntry& a, const ScoredEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entry.created_at < b.entry.created_at;
    });
    if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
    return scored;
}

std::size_t MemoryStore::compact() {
    std::unique_lock lock(mutex_);
    std::size_t dropped = 0;
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->second.deleted) {
            it = entries_.erase(it);
            ++dropped;
        } else {
            ++it;
        }
    }

    log_.close();
    vectors_.close();

    const auto log_path = config_.path / "entries.log";
    const auto vec_path = config_.path / "vectors.bin";
    {
        std::ofstream out(log_path, std::ios::trunc);
        for (const auto& [id, entry] : entries_) {
            out << to_canonical_json(entry).dump() << "\n";
        }
        if (!out) throw StorageFailureError("failed rewriting entries.log during compact");
    }
    {
        std::ofstream out(vec_path, std::ios::trunc | std::ios::binary);
        const std::size_t row_bytes = static_cast<std::size_t>(config_.embedding_dim) * 4;
        std::vector<unsigned char> zero(row_bytes, 0);
        std::vector<unsigned char> buf(row_bytes);
        for (std::int64_t id = 1; id < next_id_; ++id) {
            auto it = entries_.find(id);
            if (it == entries_.end()) {
                out.write(reinterpret_cast<const char*>(zero.data()),
                          static_cast<std::streamsize>(row_bytes));
            } else {
                for (int i = 0; i < config_.embedding_dim; ++i) {
                    encode_le32(it->second.embedding[static_cast<std::size_t>(i)],
                                buf.data() + i * 4);
                }
                out.write(reinterpret_cast<const char*>(buf.data()),
                          static_cast<std::streamsize>(row_bytes));
            }
        }
        if (!out) throw StorageFailureError("failed rewriting vectors.bin during compact");
    }

    open_files();
    rebuild_turn_index_locked();
    return dropped;
}

void MemoryStore::flush() {
    std::unique_lock lock(mutex_);
    if (log_.is_open()) log_.flush();
    if (vectors_.is_open()) vectors_.flush();
}

std::size_t MemoryStore::size(bool include_deleted) const {
    std::shared_lock lock(mutex_);
    if (include_deleted) return entries_.size();
    std::size_t n = 0;
    for (const auto& [id, entry] : entries_) {
        if (!entry.deleted) ++n;
    }
    return n;
}

} // namespace mgmem
