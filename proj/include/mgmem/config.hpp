/*
 * mgmem - engine configuration and assembly
 *
 * One JSON config file drives the CLI and the service. Backends: "openai"
 * (any OpenAI-compatible endpoint) or "mock" (scripted completions +
 * hash embeddings, fully offline).
 */
#pragma once

#include "mgmem/gateway.hpp"
#include "mgmem/pipeline.hpp"
#include "mgmem/scripted_backend.hpp"
#include "mgmem/store.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace mgmem {

struct BackendSettings {
    std::string kind = "mock"; // "mock" | "openai"
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o-mini";
    std::string embedding_model = "text-embedding-3-large";
    double temperature = 0.0;
    int max_retries = 2;
    std::string api_key_env = "MGMEM_API_KEY"; // falls back to OPENAI_API_KEY
    std::string script_path;                   // mock: canned completions file
};

struct EngineConfig {
    std::string store_path = "memory_store";
    int embedding_dim = 8;
    int k_min = 5;
    int k_r = 2;
    int window_capacity = 20;
    std::optional<double> retention_limit_days;
    std::string mode = "full"; // "full" | "retrieval_only"
    bool commit_queries = false;
    BackendSettings backend;
    // prompt key ("con", "tri", ...) -> template text, or "@path/to/file"
    std::map<std::string, std::string> prompt_overrides;

    static EngineConfig from_json(const Json& j);
    static EngineConfig load_file(const std::filesystem::path& path);

    PipelineConfig pipeline_config() const;
    StoreConfig store_config() const;
    PromptSet prompt_set() const;
};

// Owns backend, gateway, store, and pipeline for one configured engine.
struct Engine {
    std::shared_ptr<ChatBackend> chat;
    std::shared_ptr<EmbeddingBackend> embedding;
    std::shared_ptr<ScriptedBackend> scripted; // non-null for the mock backend
    std::unique_ptr<MemoryStore> store;
    std::unique_ptr<LlmGateway> gateway;
    std::unique_ptr<Pipeline> pipeline;
};

Engine build_engine(const EngineConfig& config);

} // namespace mgmem
