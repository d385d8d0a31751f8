/*
 * mgmem - OpenAI-compatible HTTP backend
 *
 * Speaks the plain REST contract: POST {base}/chat/completions and
 * POST {base}/embeddings with bearer-token auth. No SDK semantics beyond
 * the HTTP JSON shapes.
 */
#pragma once

#include "mgmem/gateway.hpp"

#include <string>
#include <vector>

namespace mgmem {

struct HttpBackendConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o-mini";
    std::string embedding_model = "text-embedding-3-large";
    std::string api_key; // empty = no Authorization header
    int embedding_dim = 3072;
    int timeout_seconds = 120;
};

class HttpBackend : public ChatBackend, public EmbeddingBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    ChatCompletion complete(const std::string& prompt, double temperature) override;

    std::vector<float> embed(const std::string& text) override;
    int dimension() const override { return config_.embedding_dim; }
    std::string model_tag() const override { return config_.embedding_model; }

private:
    Json post_json(const std::string& path, const Json& body, double& latency_seconds);

    HttpBackendConfig config_;
    std::string host_;        // scheme://authority
    std::string path_prefix_; // e.g. "/v1"
};

} // namespace mgmem
