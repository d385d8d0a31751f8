#include "mgmem/gateway.hpp"

#include "mgmem/datetime.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <limits>

namespace mgmem {

TokenUsage& TokenUsage::operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    calls += other.calls;
    latency_seconds += other.latency_seconds;
    return *this;
}

TokenUsage operator-(TokenUsage a, const TokenUsage& b) {
    a.prompt_tokens -= b.prompt_tokens;
    a.completion_tokens -= b.completion_tokens;
    a.calls -= b.calls;
    a.latency_seconds -= b.latency_seconds;
    return a;
}

Json to_json(const TokenUsage& u) {
    return Json{{"prompt_tokens", u.prompt_tokens},
                {"completion_tokens", u.completion_tokens},
                {"calls", u.calls},
                {"latency_seconds", u.latency_seconds}};
}

std::int64_t whitespace_token_count(const std::string& text) {
    std::int64_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

// ---------------------------------------------------------------------------
// contracts

Contract contract_from_name(const std::string& name) {
    if (name == "facts") return Contract::Facts;
    if (name == "trigger") return Contract::Trigger;
    if (name == "episode") return Contract::Episode;
    if (name == "route") return Contract::Route;
    if (name == "verdict") return Contract::Verdict;
    if (name == "refresh") return Contract::Refresh;
    if (name == "judge_label") return Contract::JudgeLabel;
    throw Error("unknown contract: \"" + name + "\"");
}

std::string contract_name(Contract c) {
    switch (c) {
    case Contract::Facts: return "facts";
    case Contract::Trigger: return "trigger";
    case Contract::Episode: return "episode";
    case Contract::Route: return "route";
    case Contract::Verdict: return "verdict";
    case Contract::Refresh: return "refresh";
    case Contract::JudgeLabel: return "judge_label";
    }
    return "?";
}

Json extract_first_json_object(const std::string& text, const std::string& schema) {
    std::size_t start = text.find('{');
    while (start != std::string::npos) {
        std::size_t depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) {
                    Json parsed = Json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded() && parsed.is_object()) {
                        return parsed;
                    }
                    break;
                }
            }
        }
        start = text.find('{', start + 1);
    }
    throw ContractViolationError("no JSON object found in completion", schema, text);
}

namespace {

[[noreturn]] void fail(Contract c, const std::string& why, const Json& value) {
    throw ContractViolationError("contract \"" + contract_name(c) + "\": " + why,
                                 contract_name(c), value.dump());
}

const Json& need(Contract c, const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(c, std::string("missing key \"") + key + "\"", j);
    return *it;
}

std::string need_string(Contract c, const Json& j, const char* key, bool non_empty = false) {
    const Json& v = need(c, j, key);
    if (!v.is_string()) fail(c, std::string("\"") + key + "\" must be a string", j);
    std::string s = v.get<std::string>();
    if (non_empty && s.empty()) fail(c, std::string("\"") + key + "\" must be non-empty", j);
    return s;
}

double need_confidence(Contract c, const Json& j, const char* key) {
    const Json& v = need(c, j, key);
    if (!v.is_number()) fail(c, std::string("\"") + key + "\" must be a number", j);
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < 0.0 || d > 1.0) {
        fail(c, std::string("\"") + key + "\" must lie in [0,1]", j);
    }
    return d;
}

int bit_value(Contract c, const Json& j, const Json& v, const std::string& what) {
    if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
    if (v.is_number_integer()) {
        const std::int64_t b = v.get<std::int64_t>();
        if (b == 0 || b == 1) return static_cast<int>(b);
    }
    fail(c, what + " must be 0 or 1", j);
}

std::int64_t id_value(Contract c, const Json& j, const Json& v, const std::string& what) {
    if (v.is_number_integer()) {
        if (v.is_number_unsigned() &&
            v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            fail(c, what + " is out of range", j);
        }
        return v.get<std::int64_t>();
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (!s.empty() && s.size() <= 18) {
            std::int64_t out = 0;
            bool ok = true;
            for (char ch : s) {
                if (ch < '0' || ch > '9') {
                    ok = false;
                    break;
                }
                out = out * 10 + (ch - '0');
            }
            if (ok) return out;
        }
    }
    fail(c, what + " must be an integer id", j);
}

std::vector<std::int64_t> optional_id_array(Contract c, const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_array()) fail(c, std::string("\"") + key + "\" must be an array", j);
    std::vector<std::int64_t> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        out.push_back(id_value(c, j, v, std::string("\"") + key + "\" element"));
    }
    return out;
}

void check_timestamp_or_empty(Contract c, const Json& j, const std::string& value) {
    if (value == "empty") return;
    if (!is_normalized_datetime(value)) {
        fail(c, "\"timestamp\" must be a normalized time or \"empty\", got \"" + value + "\"", j);
    }
}

void validate_facts(const Json& j) {
    const Contract c = Contract::Facts;
    const Json& facts = need(c, j, "facts");
    if (!facts.is_array()) fail(c, "\"facts\" must be an array", j);
    for (const auto& f : facts) {
        if (!f.is_object()) fail(c, "\"facts\" elements must be objects", j);
        auto it = f.find("content");
        if (it == f.end() || !it->is_string() || it->get<std::string>().empty()) {
            fail(c, "each fact needs a non-empty \"content\"", j);
        }
    }
    const Json& related = need(c, j, "related_id");
    if (!related.is_array()) fail(c, "\"related_id\" must be an array", j);
    for (const auto& r : related) {
        if (!r.is_string()) fail(c, "\"related_id\" elements must be strings", j);
        try {
            parse_turn_id(r.get<std::string>());
        } catch (const MalformedIdError&) {
            fail(c, "\"related_id\" element is not a turn id: " + r.dump(), j);
        }
    }
    check_timestamp_or_empty(c, j, need_string(c, j, "timestamp"));
}

void validate_trigger(const Json& j) {
    const Contract c = Contract::Trigger;
    const int fire = bit_value(c, j, need(c, j, "T_t"), "\"T_t\"");
    need_string(c, j, "reason");
    need_confidence(c, j, "confidence");
    auto it = j.find("topic_summary");
    if (it != j.end() && !it->is_string() && !it->is_null()) {
        fail(c, "\"topic_summary\" must be a string", j);
    }
    if (fire == 1 && (it == j.end() || !it->is_string() || it->get<std::string>().empty())) {
        fail(c, "\"topic_summary\" is required when T_t = 1", j);
    }
}

void validate_episode(const Json& j) {
    const Contract c = Contract::Episode;
    need_string(c, j, "title", /*non_empty=*/true);
    need_string(c, j, "content", /*non_empty=*/true);
    const std::string ts = need_string(c, j, "timestamp");
    if (!is_canonical_datetime(ts)) {
        fail(c, "\"timestamp\" must match YYYY-MM-DDTHH:MM:SS, got \"" + ts + "\"", j);
    }
}

void validate_route(const Json& j) {
    const Contract c = Contract::Route;
    need_string(c, j, "rewrite_query", /*non_empty=*/true);
    const Json& iv = need(c, j, "intent_vector");
    if (!iv.is_object()) fail(c, "\"intent_vector\" must be an object", j);
    for (const char* key : {"b_fine", "b_abs", "b_event", "b_atomic"}) {
        bit_value(c, j, need(c, iv, key), std::string("\"") + key + "\"");
    }
    const std::string mt = need_string(c, j, "memory_type");
    if (mt != "raw" && mt != "fact" && mt != "episode") {
        fail(c, "\"memory_type\" must be raw|fact|episode, got \"" + mt + "\"", j);
    }
    const Json& k = need(c, j, "K_dyn");
    if (!k.is_number_integer()) fail(c, "\"K_dyn\" must be an integer", j);
    if (k.get<std::int64_t>() < 1) fail(c, "\"K_dyn\" must be >= 1", j);
}

void validate_verdict(const Json& j) {
    const Contract c = Contract::Verdict;
    const std::string action = need_string(c, j, "Action");
    if (action != "Pass" && action != "Retry" && action != "Refresh") {
        fail(c, "\"Action\" must be Pass|Retry|Refresh, got \"" + action + "\"", j);
    }
    need_string(c, j, "reason");
    need_confidence(c, j, "confidence");
    const auto conflicts = optional_id_array(c, j, "conflict_ids");
    optional_id_array(c, j, "relevant_ids");
    if (action == "Refresh" && conflicts.empty()) {
        fail(c, "Refresh requires a non-empty \"conflict_ids\"", j);
    }
    if (action != "Refresh" && !conflicts.empty()) {
        fail(c, "\"conflict_ids\" must be empty unless Action = Refresh", j);
    }
}

void validate_refresh(const Json& j) {
    const Contract c = Contract::Refresh;
    const std::string action = need_string(c, j, "Action");
    if (action != "Update" && action != "Delete" && action != "No-Op") {
        fail(c, "\"Action\" must be Update|Delete|No-Op, got \"" + action + "\"", j);
    }
    auto mt = j.find("memory_type");
    if (mt != j.end() && !mt->is_null()) {
        if (!mt->is_string()) fail(c, "\"memory_type\" must be a string", j);
        const std::string m = mt->get<std::string>();
        if (m != "raw" && m != "fact" && m != "episode") {
            fail(c, "\"memory_type\" must be raw|fact|episode, got \"" + m + "\"", j);
        }
    }
    auto dl = j.find("dataList");
    std::size_t edits = 0;
    if (dl != j.end() && !dl->is_null()) {
        if (!dl->is_array()) fail(c, "\"dataList\" must be an array", j);
        edits = dl->size();
        for (const auto& e : *dl) {
            if (!e.is_object()) fail(c, "\"dataList\" elements must be objects", j);
            id_value(c, j, need(c, e, "id"), "\"dataList\" id");
            if (action == "Update") {
                auto nc = e.find("new_content");
                if (nc == e.end() || !nc->is_string() || nc->get<std::string>().empty()) {
                    fail(c, "Update edits need a non-empty \"new_content\"", j);
                }
            }
        }
    }
    if ((action == "Update" || action == "Delete") && edits == 0) {
        fail(c, action + " requires a non-empty \"dataList\"", j);
    }
    if (action == "No-Op" && edits != 0) {
        fail(c, "No-Op must carry an empty \"dataList\"", j);
    }
    auto ts = j.find("timestamp");
    if (ts != j.end() && !ts->is_null()) {
        if (!ts->is_string()) fail(c, "\"timestamp\" must be a string", j);
        check_timestamp_or_empty(c, j, ts->get<std::string>());
    }
    need_string(c, j, "reason");
}

void validate_judge_label(const Json& j) {
    const Contract c = Contract::JudgeLabel;
    const std::string label = need_string(c, j, "label");
    if (label != "CORRECT" && label != "WRONG") {
        fail(c, "\"label\" must be CORRECT|WRONG, got \"" + label + "\"", j);
    }
    auto it = j.find("reasoning");
    if (it != j.end() && !it->is_null() && !it->is_string()) {
        fail(c, "\"reasoning\" must be a string", j);
    }
}

} // namespace

void validate_contract(Contract c, const Json& value) {
    if (!value.is_object()) {
        throw ContractViolationError("contract \"" + contract_name(c) + "\": not a JSON object",
                                     contract_name(c), value.dump());
    }
    switch (c) {
    case Contract::Facts: validate_facts(value); break;
    case Contract::Trigger: validate_trigger(value); break;
    case Contract::Episode: validate_episode(value); break;
    case Contract::Route: validate_route(value); break;
    case Contract::Verdict: validate_verdict(value); break;
    case Contract::Refresh: validate_refresh(value); break;
    case Contract::JudgeLabel: validate_judge_label(value); break;
    }
}

// ---------------------------------------------------------------------------
// LlmGateway

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> chat,
                       std::shared_ptr<EmbeddingBackend> embedding, PromptSet prompts,
                       GatewayConfig config)
    : chat_(std::move(chat)), embedding_(std::move(embedding)), prompts_(std::move(prompts)),
      config_(config) {
    validate_prompt_set(prompts_);
    if (config_.temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

std::string LlmGateway::render(PromptKind kind,
                               const std::map<std::string, std::string>& bindings) const {
    return render_prompt(prompts_.text(kind), bindings, prompt_placeholders(kind));
}

Json LlmGateway::complete_json(PromptKind kind,
                               const std::map<std::string, std::string>& bindings,
                               Contract contract,
                               const std::function<void(const Json&)>& extra_check) {
    ChatRequest req;
    req.prompt = render(kind, bindings);
    req.temperature = config_.temperature;
    req.max_retries = config_.max_retries;
    return complete_json(req, contract, extra_check);
}

Json LlmGateway::complete_json(const ChatRequest& req, Contract contract,
                               const std::function<void(const Json&)>& extra_check) {
    const int attempts = (req.max_retries < 0 ? 0 : req.max_retries) + 1;
    std::string last_raw;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        const ChatCompletion completion = call_chat(req.prompt);
        last_raw = completion.text;
        try {
            Json obj = extract_first_json_object(completion.text, contract_name(contract));
            validate_contract(contract, obj);
            if (extra_check) extra_check(obj);
            return obj;
        } catch (const ContractViolationError& e) {
            last_error = e.what();
        }
    }
    throw ContractViolationError("contract \"" + contract_name(contract) + "\" violated after " +
                                     std::to_string(attempts) + " attempt(s): " + last_error,
                                 contract_name(contract), last_raw);
}

std::string LlmGateway::complete_text(const std::string& prompt) {
    return call_chat(prompt).text;
}

EmbeddingVector LlmGateway::embed_text(const std::string& text) {
    if (text.empty()) throw EmptyInputError("cannot embed empty text");
    std::vector<float> values = embedding_->embed(text);
    if (static_cast<int>(values.size()) != embedding_->dimension()) {
        throw BackendUnavailableError("embedding backend returned wrong dimension");
    }
    for (float v : values) {
        if (!std::isfinite(v)) {
            throw BackendUnavailableError("embedding backend returned non-finite values");
        }
    }
    {
        std::lock_guard<std::mutex> lock(usage_mutex_);
        usage_.calls += 1;
    }
    return EmbeddingVector{std::move(values), embedding_->model_tag()};
}

int LlmGateway::embedding_dimension() const {
    return embedding_->dimension();
}

TokenUsage LlmGateway::usage() const {
    std::lock_guard<std::mutex> lock(usage_mutex_);
    return usage_;
}

ChatCompletion LlmGateway::call_chat(const std::string& prompt) {
    ChatCompletion completion = chat_->complete(prompt, config_.temperature);
    std::lock_guard<std::mutex> lock(usage_mutex_);
    usage_ += completion.usage;
    return completion;
}

} // namespace mgmem
