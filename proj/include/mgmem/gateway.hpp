/*
 * mgmem - LLM gateway
 *
 * Renders prompts, calls a chat-completion and an embedding backend, and
 * enforces the strict JSON output contracts. Malformed completions are
 * retried up to max_retries, then surfaced as ContractViolationError with
 * the raw output attached.
 */
#pragma once

#include "mgmem/core.hpp"
#include "mgmem/prompts.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace mgmem {

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t calls = 0;
    double latency_seconds = 0.0;

    std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
    TokenUsage& operator+=(const TokenUsage& other);
    friend TokenUsage operator-(TokenUsage a, const TokenUsage& b);
};

Json to_json(const TokenUsage&);

// Whitespace-token count; the accounting unit of the mock backend.
std::int64_t whitespace_token_count(const std::string& text);

struct ChatCompletion {
    std::string text;
    TokenUsage usage; // usage of this single call
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatCompletion complete(const std::string& prompt, double temperature) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<float> embed(const std::string& text) = 0;
    virtual int dimension() const = 0;
    virtual std::string model_tag() const = 0;
};

struct EmbeddingVector {
    std::vector<float> values;
    std::string model_tag;
};

struct ChatRequest {
    std::string prompt;
    double temperature = 0.0;
    int max_retries = 2;
};

// ---------------------------------------------------------------------------
// output contracts

enum class Contract { Facts, Trigger, Episode, Route, Verdict, Refresh, JudgeLabel };

Contract contract_from_name(const std::string& name); // "facts", "trigger", ...
std::string contract_name(Contract c);

// First balanced-brace JSON object extractable from a completion; throws
// ContractViolationError when none parses.
Json extract_first_json_object(const std::string& text, const std::string& schema);

// Structural validation of a parsed object against the named contract.
// Throws ContractViolationError (with the object re-serialized as raw output)
// on any missing key, bad enum value, or out-of-range field.
void validate_contract(Contract c, const Json& value);

// ---------------------------------------------------------------------------
// gateway

struct GatewayConfig {
    double temperature = 0.0;
    int max_retries = 2;
};

class LlmGateway {
public:
    LlmGateway(std::shared_ptr<ChatBackend> chat, std::shared_ptr<EmbeddingBackend> embedding,
               PromptSet prompts, GatewayConfig config = {});

    std::string render(PromptKind kind, const std::map<std::string, std::string>& bindings) const;

    // Renders and completes in one step with the configured defaults.
    Json complete_json(PromptKind kind, const std::map<std::string, std::string>& bindings,
                       Contract contract,
                       const std::function<void(const Json&)>& extra_check = {});

    Json complete_json(const ChatRequest& req, Contract contract,
                       const std::function<void(const Json&)>& extra_check = {});

    // Plain completion for the responder (no JSON contract).
    std::string complete_text(const std::string& prompt);

    EmbeddingVector embed_text(const std::string& text);
    int embedding_dimension() const;

    // Accumulated accounting across all calls made through this gateway.
    TokenUsage usage() const;

    const PromptSet& prompts() const { return prompts_; }
    const GatewayConfig& config() const { return config_; }

private:
    ChatCompletion call_chat(const std::string& prompt);

    std::shared_ptr<ChatBackend> chat_;
    std::shared_ptr<EmbeddingBackend> embedding_;
    PromptSet prompts_;
    GatewayConfig config_;

    mutable std::mutex usage_mutex_;
    TokenUsage usage_;
};

} // namespace mgmem
