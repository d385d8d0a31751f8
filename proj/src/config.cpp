#include "mgmem/config.hpp"

#include "mgmem/http_backend.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mgmem {
namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string resolve_api_key(const BackendSettings& backend) {
    if (const char* key = std::getenv(backend.api_key_env.c_str())) return key;
    if (const char* key = std::getenv("OPENAI_API_KEY")) return key;
    return "";
}

} // namespace

EngineConfig EngineConfig::from_json(const Json& j) {
    EngineConfig cfg;
    cfg.store_path = j.value("store_path", cfg.store_path);
    cfg.embedding_dim = j.value("embedding_dim", cfg.embedding_dim);
    cfg.k_min = j.value("k_min", cfg.k_min);
    cfg.k_r = j.value("k_r", cfg.k_r);
    cfg.window_capacity = j.value("window_capacity", cfg.window_capacity);
    if (j.contains("retention_limit_days") && !j.at("retention_limit_days").is_null()) {
        cfg.retention_limit_days = j.at("retention_limit_days").get<double>();
    }
    cfg.mode = j.value("mode", cfg.mode);
    cfg.commit_queries = j.value("commit_queries", cfg.commit_queries);

    if (j.contains("backend")) {
        const Json& b = j.at("backend");
        cfg.backend.kind = b.value("kind", cfg.backend.kind);
        cfg.backend.base_url = b.value("base_url", cfg.backend.base_url);
        cfg.backend.chat_model = b.value("chat_model", cfg.backend.chat_model);
        cfg.backend.embedding_model = b.value("embedding_model", cfg.backend.embedding_model);
        cfg.backend.temperature = b.value("temperature", cfg.backend.temperature);
        cfg.backend.max_retries = b.value("max_retries", cfg.backend.max_retries);
        cfg.backend.api_key_env = b.value("api_key_env", cfg.backend.api_key_env);
        cfg.backend.script_path = b.value("script_path", cfg.backend.script_path);
    }
    if (j.contains("prompts")) {
        for (const auto& [key, value] : j.at("prompts").items()) {
            if (!value.is_string()) throw ConfigError("prompt override must be a string: " + key);
            cfg.prompt_overrides[key] = value.get<std::string>();
        }
    }
    return cfg;
}

EngineConfig EngineConfig::load_file(const std::filesystem::path& path) {
    Json j = Json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ConfigError("config file is not a JSON object: " + path.string());
    }
    return from_json(j);
}

PipelineConfig EngineConfig::pipeline_config() const {
    PipelineConfig pc;
    pc.k_r = k_r;
    pc.k_min = k_min;
    pc.window_capacity = window_capacity;
    pc.mode = mode_from_string(mode);
    pc.commit_queries = commit_queries;
    pc.validate();
    return pc;
}

StoreConfig EngineConfig::store_config() const {
    StoreConfig sc;
    sc.path = store_path;
    sc.embedding_dim = embedding_dim;
    sc.k_min = k_min;
    if (retention_limit_days) {
        sc.retention_limit_seconds =
            static_cast<std::int64_t>(std::llround(*retention_limit_days * 86400.0));
    }
    return sc;
}

PromptSet EngineConfig::prompt_set() const {
    PromptSet prompts = default_prompts();
    static const PromptKind kinds[] = {
        PromptKind::Constructor, PromptKind::Trigger,     PromptKind::Episode,
        PromptKind::Retriever,   PromptKind::Judge,       PromptKind::Refresher,
        PromptKind::AnswerJudge, PromptKind::Responder};
    for (PromptKind kind : kinds) {
        auto it = prompt_overrides.find(prompt_key(kind));
        if (it == prompt_overrides.end()) continue;
        std::string text = it->second;
        if (!text.empty() && text.front() == '@') {
            text = read_file(text.substr(1));
        }
        prompts.text(kind) = text;
    }
    validate_prompt_set(prompts);
    return prompts;
}

Engine build_engine(const EngineConfig& config) {
    Engine engine;

    if (config.backend.kind == "mock") {
        ScriptedBackend::Options options;
        options.embedding_dim = config.embedding_dim;
        auto scripted = std::make_shared<ScriptedBackend>(options);
        if (!config.backend.script_path.empty()) {
            Json script = Json::parse(read_file(config.backend.script_path), nullptr, false);
            if (script.is_discarded()) {
                throw ConfigError("script file is not valid JSON: " + config.backend.script_path);
            }
            const Json* steps = &script;
            if (script.is_object() && script.contains("completions")) {
                steps = &script.at("completions");
            }
            if (!steps->is_array()) {
                throw ConfigError("completion script must be a JSON array");
            }
            for (const auto& step : *steps) {
                scripted->script_completion(step.is_string() ? step.get<std::string>()
                                                             : step.dump());
            }
        }
        engine.scripted = scripted;
        engine.chat = scripted;
        engine.embedding = scripted;
    } else if (config.backend.kind == "openai") {
        HttpBackendConfig http;
        http.base_url = config.backend.base_url;
        http.chat_model = config.backend.chat_model;
        http.embedding_model = config.backend.embedding_model;
        http.api_key = resolve_api_key(config.backend);
        http.embedding_dim = config.embedding_dim;
        auto backend = std::make_shared<HttpBackend>(http);
        engine.chat = backend;
        engine.embedding = backend;
    } else {
        throw ConfigError("unknown backend kind: \"" + config.backend.kind + "\"");
    }

    GatewayConfig gc;
    gc.temperature = config.backend.temperature;
    gc.max_retries = config.backend.max_retries;
    engine.gateway =
        std::make_unique<LlmGateway>(engine.chat, engine.embedding, config.prompt_set(), gc);
    engine.store = std::make_unique<MemoryStore>(config.store_config());
    engine.pipeline =
        std::make_unique<Pipeline>(*engine.gateway, *engine.store, config.pipeline_config());
    return engine;
}

} // namespace mgmem
