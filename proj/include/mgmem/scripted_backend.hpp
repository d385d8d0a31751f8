/*
 * mgmem - deterministic scripted backend for tests and offline runs
 *
 * Completions replay a fixed script in order; embeddings are served from an
 * optional embedding script or, by default, from a seeded hash expanded to a
 * Gaussian vector and L2-normalized. Every request is recorded so scenarios
 * can assert on what was sent. One scripted backend per scenario: replay is
 * serialized internally but order-sensitive.
 */
#pragma once

#include "mgmem/gateway.hpp"

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

namespace mgmem {

// Deterministic embedding: FNV-1a hash of the input seeds a PRNG, Box-Muller
// normal draws fill the vector, then L2 normalization.
std::vector<float> hash_embedding(const std::string& text, int dim,
                                  std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

class ScriptedBackend : public ChatBackend, public EmbeddingBackend {
public:
    struct Options {
        int embedding_dim = 8;
        std::uint64_t embedding_seed = 0x9e3779b97f4a7c15ULL;
        double per_call_latency = 0.0; // deterministic accounting
    };

    ScriptedBackend();
    explicit ScriptedBackend(Options options);

    // Appends canned completions, replayed in order.
    void script_completion(std::string text);
    void script_completions(std::vector<std::string> texts);

    // Appends canned embeddings; when the embedding script is empty,
    // embeddings fall back to the hash mock.
    void script_embedding(std::vector<float> values);

    // ChatBackend. Throws ScriptExhaustedError past the end of the script.
    ChatCompletion complete(const std::string& prompt, double temperature) override;

    // EmbeddingBackend
    std::vector<float> embed(const std::string& text) override;
    int dimension() const override { return options_.embedding_dim; }
    std::string model_tag() const override { return "scripted-hash"; }

    struct Request {
        enum class Kind { Chat, Embed } kind;
        std::string payload; // prompt text or embedded text
    };

    std::vector<Request> requests() const;
    std::vector<std::string> chat_prompts() const;
    std::size_t completions_consumed() const;
    std::size_t completions_remaining() const;

private:
    Options options_;
    mutable std::mutex mutex_;
    std::vector<std::string> completions_;
    std::size_t next_completion_ = 0;
    std::vector<std::vector<float>> embeddings_;
    std::size_t next_embedding_ = 0;
    std::vector<Request> requests_;
};

} // namespace mgmem
