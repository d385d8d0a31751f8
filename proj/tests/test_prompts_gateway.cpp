#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgmem/gateway.hpp"
#include "mgmem/scripted_backend.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <memory>

using namespace mgmem;

namespace {

struct Fixture {
    std::shared_ptr<ScriptedBackend> backend;
    std::unique_ptr<LlmGateway> gateway;

    explicit Fixture(int max_retries = 2, int dim = 4) {
        ScriptedBackend::Options options;
        options.embedding_dim = dim;
        backend = std::make_shared<ScriptedBackend>(options);
        GatewayConfig config;
        config.max_retries = max_retries;
        gateway = std::make_unique<LlmGateway>(backend, backend, default_prompts(), config);
    }
};

} // namespace

TEST_CASE("default templates declare their placeholders") {
    CHECK_NOTHROW(validate_prompt_set(default_prompts()));
}

TEST_CASE("render substitutes all required placeholders") {
    Fixture f;
    const std::string text = f.gateway->render(
        PromptKind::Trigger, {{"conversation_history", ""}, {"new_messages", "hi"}});
    CHECK(text.find("hi") != std::string::npos);
    CHECK(text.find("{conversation_history}") == std::string::npos);
    CHECK(text.find("{new_messages}") == std::string::npos);
    // literal JSON braces in the output-format block survive
    CHECK(text.find("\"T_t\"") != std::string::npos);
}

TEST_CASE("render with empty bindings reports the missing names") {
    Fixture f;
    try {
        f.gateway->render(PromptKind::Constructor, {});
        FAIL("expected MissingBindingError");
    } catch (const MissingBindingError& e) {
        CHECK(e.missing.size() == 3);
    }
}

TEST_CASE("render the retriever prompt") {
    Fixture f;
    const std::string text = f.gateway->render(
        PromptKind::Retriever, {{"memory_window", "..."}, {"user_input", "Where do I live?"}});
    CHECK(text.find("Where do I live?") != std::string::npos);
    CHECK(text.find("{memory_window}") == std::string::npos);
}

TEST_CASE("binding values are not re-scanned for placeholders") {
    const std::string out =
        render_prompt("A {x} B", {{"x", "{y}"}, {"y", "nope"}}, {"x"});
    CHECK(out == "A {y} B");
}

TEST_CASE("scripted trigger output is accepted") {
    Fixture f;
    f.backend->script_completion(
        R"({"T_t":1,"reason":"topic shift","confidence":0.9,"topic_summary":"travel plans"})");
    const Json v = f.gateway->complete_json(
        PromptKind::Trigger, {{"conversation_history", "a"}, {"new_messages", "b"}},
        Contract::Trigger);
    CHECK(v.at("T_t") == 1);
    CHECK(v.at("topic_summary") == "travel plans");
}

TEST_CASE("retry recovers from a malformed first completion") {
    Fixture f(/*max_retries=*/1);
    f.backend->script_completion("not json");
    f.backend->script_completion(R"({"Action":"Pass","reason":"ok","confidence":1.0})");
    ChatRequest req;
    req.prompt = "p";
    req.max_retries = 1;
    const Json v = f.gateway->complete_json(req, Contract::Verdict);
    CHECK(v.at("Action") == "Pass");
    CHECK(f.backend->completions_consumed() == 2);
}

TEST_CASE("enum violation with no retries raises ContractViolation") {
    Fixture f;
    f.backend->script_completion(R"({"Action":"Maybe"})");
    ChatRequest req;
    req.prompt = "p";
    req.max_retries = 0;
    CHECK_THROWS_AS(f.gateway->complete_json(req, Contract::Verdict), ContractViolationError);
}

TEST_CASE("contract violation carries the raw output") {
    Fixture f;
    f.backend->script_completion("garbage !!");
    ChatRequest req;
    req.prompt = "p";
    req.max_retries = 0;
    try {
        f.gateway->complete_json(req, Contract::Verdict);
        FAIL("expected ContractViolationError");
    } catch (const ContractViolationError& e) {
        CHECK(e.schema == "verdict");
        CHECK(e.raw_output == "garbage !!");
    }
}

TEST_CASE("first balanced object wins, prose and nesting tolerated") {
    const Json v = extract_first_json_object(
        "Sure! Here is the answer:\n```json\n{\"label\":\"CORRECT\",\"reasoning\":\"ok\"}\n```",
        "judge_label");
    CHECK(v.at("label") == "CORRECT");

    // an unparseable brace blob hides a valid object inside
    const Json inner = extract_first_json_object("{bad {\"a\": 1}}", "x");
    CHECK(inner.at("a") == 1);

    // braces inside strings do not confuse the scanner
    const Json str = extract_first_json_object(R"({"a":"}{","b":2})", "x");
    CHECK(str.at("b") == 2);

    CHECK_THROWS_AS(extract_first_json_object("no braces here", "x"), ContractViolationError);
    CHECK_THROWS_AS(extract_first_json_object("[1,2,3]", "x"), ContractViolationError);
}

TEST_CASE("facts contract shape") {
    auto ok = Json::parse(
        R"({"facts":[{"content":"John moved to Tokyo"}],"source":"user","related_id":["D_{1:4}"],"timestamp":"empty"})");
    CHECK_NOTHROW(validate_contract(Contract::Facts, ok));

    auto missing = Json::parse(R"({"related_id":[],"timestamp":"empty"})");
    CHECK_THROWS_AS(validate_contract(Contract::Facts, missing), ContractViolationError);

    auto bad_time = ok;
    bad_time["timestamp"] = "sometime";
    CHECK_THROWS_AS(validate_contract(Contract::Facts, bad_time), ContractViolationError);

    auto minute_time = ok;
    minute_time["timestamp"] = "2023-05-07 14:30";
    CHECK_NOTHROW(validate_contract(Contract::Facts, minute_time));

    auto bad_related = ok;
    bad_related["related_id"] = Json::array({"turn-3"});
    CHECK_THROWS_AS(validate_contract(Contract::Facts, bad_related), ContractViolationError);

    auto empty_fact = ok;
    empty_fact["facts"] = Json::array({Json{{"content", ""}}});
    CHECK_THROWS_AS(validate_contract(Contract::Facts, empty_fact), ContractViolationError);

    auto no_facts = ok;
    no_facts["facts"] = Json::array();
    CHECK_NOTHROW(validate_contract(Contract::Facts, no_facts)); // zero facts is legal
}

TEST_CASE("episode contract requires the canonical timestamp form") {
    auto ok = Json::parse(
        R"({"title":"Trip planning","content":"They planned a trip.","timestamp":"2023-05-07T14:30:00"})");
    CHECK_NOTHROW(validate_contract(Contract::Episode, ok));

    auto bad = ok;
    bad["timestamp"] = "May 7";
    CHECK_THROWS_AS(validate_contract(Contract::Episode, bad), ContractViolationError);
    bad["timestamp"] = "2023-05-07 14:30:00"; // space form is not canonical
    CHECK_THROWS_AS(validate_contract(Contract::Episode, bad), ContractViolationError);
}

TEST_CASE("route contract") {
    auto ok = Json::parse(
        R"({"rewrite_query":"Where does John live?","intent_vector":{"b_fine":0,"b_abs":0,"b_event":0,"b_atomic":1},"memory_type":"fact","K_dyn":3})");
    CHECK_NOTHROW(validate_contract(Contract::Route, ok));

    auto bad_bit = ok;
    bad_bit["intent_vector"]["b_fine"] = 2;
    CHECK_THROWS_AS(validate_contract(Contract::Route, bad_bit), ContractViolationError);

    auto bad_k = ok;
    bad_k["K_dyn"] = 0;
    CHECK_THROWS_AS(validate_contract(Contract::Route, bad_k), ContractViolationError);

    auto bad_type = ok;
    bad_type["memory_type"] = "vector";
    CHECK_THROWS_AS(validate_contract(Contract::Route, bad_type), ContractViolationError);
}

TEST_CASE("verdict contract couples Action and conflict_ids") {
    auto refresh = Json::parse(
        R"({"Action":"Refresh","reason":"conflict","confidence":0.8,"conflict_ids":[7]})");
    CHECK_NOTHROW(validate_contract(Contract::Verdict, refresh));

    auto refresh_empty = Json::parse(R"({"Action":"Refresh","reason":"x","confidence":0.8})");
    CHECK_THROWS_AS(validate_contract(Contract::Verdict, refresh_empty), ContractViolationError);

    auto pass_with_conflicts = Json::parse(
        R"({"Action":"Pass","reason":"x","confidence":0.8,"conflict_ids":[7]})");
    CHECK_THROWS_AS(validate_contract(Contract::Verdict, pass_with_conflicts),
                    ContractViolationError);

    auto lower = Json::parse(R"({"Action":"pass","reason":"x","confidence":0.8})");
    CHECK_THROWS_AS(validate_contract(Contract::Verdict, lower), ContractViolationError);

    auto bad_conf = Json::parse(R"({"Action":"Pass","reason":"x","confidence":1.4})");
    CHECK_THROWS_AS(validate_contract(Contract::Verdict, bad_conf), ContractViolationError);
}

TEST_CASE("refresh contract per-action dataList rules") {
    auto update = Json::parse(
        R"({"Action":"Update","memory_type":"fact","dataList":[{"id":"3","new_content":"User lives in Tokyo"}],"timestamp":"empty","reason":"move"})");
    CHECK_NOTHROW(validate_contract(Contract::Refresh, update));

    auto update_no_content = Json::parse(
        R"({"Action":"Update","dataList":[{"id":3}],"timestamp":"empty","reason":"r"})");
    CHECK_THROWS_AS(validate_contract(Contract::Refresh, update_no_content),
                    ContractViolationError);

    auto noop = Json::parse(R"({"Action":"No-Op","dataList":[],"timestamp":"empty","reason":"r"})");
    CHECK_NOTHROW(validate_contract(Contract::Refresh, noop));

    auto noop_with_edits = Json::parse(
        R"({"Action":"No-Op","dataList":[{"id":1}],"timestamp":"empty","reason":"r"})");
    CHECK_THROWS_AS(validate_contract(Contract::Refresh, noop_with_edits), ContractViolationError);

    auto del = Json::parse(
        R"({"Action":"Delete","dataList":[{"id":9}],"timestamp":"empty","reason":"forget"})");
    CHECK_NOTHROW(validate_contract(Contract::Refresh, del));

    auto hyphenless = Json::parse(
        R"({"Action":"NoOp","dataList":[],"timestamp":"empty","reason":"r"})");
    CHECK_THROWS_AS(validate_contract(Contract::Refresh, hyphenless), ContractViolationError);
}

TEST_CASE("judge label contract") {
    CHECK_NOTHROW(validate_contract(Contract::JudgeLabel,
                                    Json::parse(R"({"label":"CORRECT","reasoning":"same"})")));
    CHECK_NOTHROW(validate_contract(Contract::JudgeLabel, Json::parse(R"({"label":"WRONG"})")));
    CHECK_THROWS_AS(validate_contract(Contract::JudgeLabel, Json::parse(R"({"label":"MAYBE"})")),
                    ContractViolationError);
}

TEST_CASE("embeddings are deterministic and unit-norm") {
    Fixture f;
    const EmbeddingVector a = f.gateway->embed_text("a");
    const EmbeddingVector b = f.gateway->embed_text("a");
    CHECK(a.values == b.values);

    const auto cat = hash_embedding("cat", 4);
    CHECK(cat.size() == 4);
    double norm = 0.0;
    for (float x : cat) norm += static_cast<double>(x) * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);

    // the mock is its own oracle: re-running reproduces it
    CHECK(hash_embedding("cat", 4) == cat);
    CHECK(hash_embedding("cat", 4) != hash_embedding("dog", 4));

    CHECK_THROWS_AS(f.gateway->embed_text(""), EmptyInputError);
}

TEST_CASE("script replay is ordered, recorded, and exhaustible") {
    Fixture f;
    f.backend->script_completion("one");
    CHECK(f.gateway->complete_text("p1") == "one");
    CHECK_THROWS_AS(f.gateway->complete_text("p2"), ScriptExhaustedError);

    const auto prompts = f.backend->chat_prompts();
    REQUIRE(prompts.size() == 2);
    CHECK(prompts[0] == "p1");
    CHECK(prompts[1] == "p2");
}

TEST_CASE("scripted embeddings replay in order when provided") {
    Fixture f;
    f.backend->script_embedding({1.0f, 0.0f, 0.0f, 0.0f});
    const auto v = f.gateway->embed_text("anything");
    CHECK(v.values == std::vector<float>{1.0f, 0.0f, 0.0f, 0.0f});
    CHECK_THROWS_AS(f.gateway->embed_text("next"), ScriptExhaustedError);
}

TEST_CASE("whitespace token counting") {
    CHECK(whitespace_token_count("") == 0);
    CHECK(whitespace_token_count("   ") == 0);
    CHECK(whitespace_token_count("a") == 1);
    CHECK(whitespace_token_count("a b\tc\nd") == 4);
    CHECK(whitespace_token_count("  a  b  ") == 2);
}

TEST_CASE("gateway accumulates whitespace-token usage under the mock") {
    Fixture f;
    f.backend->script_completion("two words");
    const std::string prompt = "one two three";
    CHECK(f.gateway->complete_text(prompt) == "two words");
    const TokenUsage u = f.gateway->usage();
    CHECK(u.prompt_tokens == 3);
    CHECK(u.completion_tokens == 2);
    CHECK(u.calls == 1);
    CHECK(u.latency_seconds == 0.0);
}

TEST_CASE("retries are accounted per attempt") {
    Fixture f(/*max_retries=*/1);
    f.backend->script_completion("junk");
    f.backend->script_completion(R"({"Action":"Pass","reason":"ok","confidence":1.0})");
    ChatRequest req;
    req.prompt = "a b";
    req.max_retries = 1;
    f.gateway->complete_json(req, Contract::Verdict);
    CHECK(f.gateway->usage().prompt_tokens == 4); // two attempts, same prompt
    CHECK(f.gateway->usage().calls == 2);
}
