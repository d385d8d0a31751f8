#include "mgmem/http_backend.hpp"

#include "mgmem/errors.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>

namespace mgmem {

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    const std::string& url = config_.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("base_url must include a scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        host_ = url;
    } else {
        host_ = url.substr(0, path_start);
        path_prefix_ = url.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
}

Json HttpBackend::post_json(const std::string& path, const Json& body, double& latency_seconds) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto result = client.Post(path_prefix_ + path, headers, body.dump(), "application/json");
    latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!result) {
        throw BackendUnavailableError("transport failure calling " + host_ + path_prefix_ + path +
                                      ": " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw BackendUnavailableError("HTTP " + std::to_string(result->status) + " from " + path +
                                      ": " + result->body.substr(0, 300));
    }
    Json parsed = Json::parse(result->body, nullptr, false);
    if (parsed.is_discarded()) {
        throw BackendUnavailableError("non-JSON response body from " + path);
    }
    return parsed;
}

ChatCompletion HttpBackend::complete(const std::string& prompt, double temperature) {
    const Json body{{"model", config_.chat_model},
                    {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})},
                    {"temperature", temperature}};
    double latency = 0.0;
    const Json response = post_json("/chat/completions", body, latency);

    ChatCompletion out;
    try {
        out.text = response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw BackendUnavailableError(std::string("malformed chat-completion response: ") +
                                      e.what());
    }
    out.usage.calls = 1;
    out.usage.latency_seconds = latency;
    if (response.contains("usage") && response.at("usage").is_object()) {
        const Json& usage = response.at("usage");
        out.usage.prompt_tokens = usage.value("prompt_tokens", std::int64_t{0});
        out.usage.completion_tokens = usage.value("completion_tokens", std::int64_t{0});
    }
    if (out.usage.prompt_tokens == 0) out.usage.prompt_tokens = whitespace_token_count(prompt);
    if (out.usage.completion_tokens == 0) {
        out.usage.completion_tokens = whitespace_token_count(out.text);
    }
    return out;
}

std::vector<float> HttpBackend::embed(const std::string& text) {
    const Json body{{"model", config_.embedding_model}, {"input", text}};
    double latency = 0.0;
    const Json response = post_json("/embeddings", body, latency);
    try {
        return response.at("data").at(0).at("embedding").get<std::vector<float>>();
    } catch (const std::exception& e) {
        throw BackendUnavailableError(std::string("malformed embeddings response: ") + e.what());
    }
}

} // namespace mgmem
