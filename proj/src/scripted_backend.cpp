#include "mgmem/scripted_backend.hpp"

#include "mgmem/errors.hpp"

#include <cmath>
#include <random>

namespace mgmem {

std::vector<float> hash_embedding(const std::string& text, int dim, std::uint64_t seed) {
    // FNV-1a 64-bit
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::mt19937_64 rng(h ^ seed);

    // Box-Muller on explicit uniforms keeps the draw sequence
    // implementation-independent.
    auto uniform = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    };
    std::vector<float> v(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; i += 2) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[static_cast<std::size_t>(i)] = static_cast<float>(r * std::cos(2.0 * M_PI * u2));
        if (i + 1 < dim) {
            v[static_cast<std::size_t>(i + 1)] = static_cast<float>(r * std::sin(2.0 * M_PI * u2));
        }
    }
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * static_cast<double>(x);
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0f;
        return v;
    }
    for (float& x : v) x = static_cast<float>(x / norm);
    return v;
}

ScriptedBackend::ScriptedBackend() : ScriptedBackend(Options()) {}

ScriptedBackend::ScriptedBackend(Options options) : options_(options) {
    if (options_.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
}

void ScriptedBackend::script_completion(std::string text) {
    std::lock_guard<std::mutex> lock(mutex_);
    completions_.push_back(std::move(text));
}

void ScriptedBackend::script_completions(std::vector<std::string> texts) {
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& t : texts) completions_.push_back(std::move(t));
}

void ScriptedBackend::script_embedding(std::vector<float> values) {
    std::lock_guard<std::mutex> lock(mutex_);
    embeddings_.push_back(std::move(values));
}

ChatCompletion ScriptedBackend::complete(const std::string& prompt, double /*temperature*/) {
    std::lock_guard<std::mutex> lock(mutex_);
    requests_.push_back({Request::Kind::Chat, prompt});
    if (next_completion_ >= completions_.size()) {
        throw ScriptExhaustedError("scripted backend exhausted after " +
                                   std::to_string(completions_.size()) + " completion(s)");
    }
    ChatCompletion out;
    out.text = completions_[next_completion_++];
    out.usage.prompt_tokens = whitespace_token_count(prompt);
    out.usage.completion_tokens = whitespace_token_count(out.text);
    out.usage.calls = 1;
    out.usage.latency_seconds = options_.per_call_latency;
    return out;
}

std::vector<float> ScriptedBackend::embed(const std::string& text) {
    std::lock_guard<std::mutex> lock(mutex_);
    requests_.push_back({Request::Kind::Embed, text});
    if (!embeddings_.empty()) {
        if (next_embedding_ >= embeddings_.size()) {
            throw ScriptExhaustedError("scripted backend exhausted after " +
                                       std::to_string(embeddings_.size()) + " embedding(s)");
        }
        return embeddings_[next_embedding_++];
    }
    return hash_embedding(text, options_.embedding_dim, options_.embedding_seed);
}

std::vector<ScriptedBackend::Request> ScriptedBackend::requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
}

std::vector<std::string> ScriptedBackend::chat_prompts() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::string> out;
    for (const auto& r : requests_) {
        if (r.kind == Request::Kind::Chat) out.push_back(r.payload);
    }
    return out;
}

std::size_t ScriptedBackend::completions_consumed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return next_completion_;
}

std::size_t ScriptedBackend::completions_remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return completions_.size() - next_completion_;
}

} // namespace mgmem
