#include "mgmem/eval.hpp"

#include "mgmem/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

namespace mgmem {

void QAItem::validate() const {
    if (question.empty()) throw InvariantError("QA item question must be non-empty");
    if (gold.empty()) throw InvariantError("QA item gold answer must be non-empty");
}

JudgeLabel llm_judge(const std::string& question, const std::string& gold,
                     const std::string& prediction, LlmGateway& gateway) {
    try {
        const Json payload = gateway.complete_json(PromptKind::AnswerJudge,
                                                   {{"question", question},
                                                    {"gold_answer", gold},
                                                    {"generated_answer", prediction}},
                                                   Contract::JudgeLabel);
        JudgeLabel out;
        out.label = payload.at("label").get<std::string>();
        if (payload.contains("reasoning") && payload.at("reasoning").is_string()) {
            out.reasoning = payload.at("reasoning").get<std::string>();
        }
        return out;
    } catch (const ContractViolationError& e) {
        return JudgeLabel{"WRONG", e.what(), /*flagged=*/true};
    }
}

std::vector<QAItem> load_qa_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open QA file: " + path.string());
    std::vector<QAItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json record = Json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object()) {
            throw MalformedRecordError("invalid JSON at line " + std::to_string(line_no), line_no);
        }
        QAItem item;
        try {
            item.question = record.at("question").get<std::string>();
            item.gold = record.at("gold").get<std::string>();
            item.category = record.value("category", std::string());
            item.validate();
        } catch (const std::exception& e) {
            throw MalformedRecordError("bad QA record at line " + std::to_string(line_no) + ": " +
                                           e.what(),
                                       line_no);
        }
        items.push_back(std::move(item));
    }
    return items;
}

EvalReport run_eval(const std::vector<QAItem>& items, Pipeline& pipeline) {
    EvalReport report;
    report.items.reserve(items.size());

    for (const auto& item : items) {
        EvalItemResult row;
        row.item = item;
        try {
            item.validate();
            // Isolated session per item: evaluation must not pollute memory.
            Session& session = pipeline.open_session();
            const TurnOutcome outcome = pipeline.answer_query(item.question, session);
            row.prediction = outcome.response.value_or("");
            row.tokens = outcome.token_usage;
            row.latency_seconds = outcome.latency_seconds;
        } catch (const Error& e) {
            row.error = e.what();
            row.prediction.clear();
        }
        row.f1 = metric_f1(row.prediction, item.gold);
        row.bleu1 = metric_bleu1(row.prediction, item.gold);
        const JudgeLabel graded =
            llm_judge(item.question, item.gold, row.prediction, pipeline.gateway());
        row.llm_label = graded.label;
        row.flagged = graded.flagged || !row.error.empty();
        report.items.push_back(std::move(row));
    }

    // aggregates
    const double n = static_cast<double>(report.items.size());
    std::size_t correct = 0;
    std::map<std::string, std::size_t> cat_correct;
    for (const auto& row : report.items) {
        report.mean_f1 += row.f1;
        report.mean_bleu1 += row.bleu1;
        report.total_prompt_tokens += row.tokens.prompt_tokens;
        report.total_completion_tokens += row.tokens.completion_tokens;
        report.mean_latency_seconds += row.latency_seconds;
        if (row.llm_label == "CORRECT") ++correct;

        auto& cat = report.categories[row.item.category];
        cat.items += 1;
        cat.mean_f1 += row.f1;
        cat.mean_bleu1 += row.bleu1;
        if (row.llm_label == "CORRECT") ++cat_correct[row.item.category];
    }
    if (!report.items.empty()) {
        report.mean_f1 /= n;
        report.mean_bleu1 /= n;
        report.mean_latency_seconds /= n;
        report.llm_score_micro = static_cast<double>(correct) / n;
    }
    for (auto& [name, cat] : report.categories) {
        cat.mean_f1 /= static_cast<double>(cat.items);
        cat.mean_bleu1 /= static_cast<double>(cat.items);
        cat.llm_score = static_cast<double>(cat_correct[name]) / static_cast<double>(cat.items);
        report.llm_score_macro += cat.llm_score;
    }
    if (!report.categories.empty()) {
        report.llm_score_macro /= static_cast<double>(report.categories.size());
    }
    return report;
}

Json EvalReport::to_json() const {
    Json rows = Json::array();
    for (const auto& row : items) {
        rows.push_back(Json{{"question", row.item.question},
                            {"gold", row.item.gold},
                            {"category", row.item.category},
                            {"prediction", row.prediction},
                            {"f1", row.f1},
                            {"bleu1", row.bleu1},
                            {"llm_label", row.llm_label},
                            {"flagged", row.flagged},
                            {"error", row.error},
                            {"prompt_tokens", row.tokens.prompt_tokens},
                            {"completion_tokens", row.tokens.completion_tokens},
                            {"latency_seconds", row.latency_seconds}});
    }
    Json cats = Json::object();
    for (const auto& [name, cat] : categories) {
        cats[name] = Json{{"items", cat.items},
                          {"mean_f1", cat.mean_f1},
                          {"mean_bleu1", cat.mean_bleu1},
                          {"llm_score", cat.llm_score}};
    }
    return Json{{"items", rows},
                {"aggregates",
                 Json{{"items", items.size()},
                      {"mean_f1", mean_f1},
                      {"mean_bleu1", mean_bleu1},
                      {"llm_score_micro", llm_score_micro},
                      {"llm_score_macro", llm_score_macro},
                      {"total_prompt_tokens", total_prompt_tokens},
                      {"total_completion_tokens", total_completion_tokens},
                      {"total_tokens", total_prompt_tokens + total_completion_tokens},
                      {"mean_latency_seconds", mean_latency_seconds}}},
                {"categories", cats}};
}

std::string EvalReport::to_table() const {
    char buf[256];
    std::string out;
    out += "category              items  llm_score  mean_f1  mean_bleu1\n";
    for (const auto& [name, cat] : categories) {
        std::snprintf(buf, sizeof(buf), "%-20s %6zu %10.3f %8.3f %11.3f\n",
                      name.empty() ? "(none)" : name.c_str(), cat.items, cat.llm_score,
                      cat.mean_f1, cat.mean_bleu1);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-20s %6zu %10.3f %8.3f %11.3f\n", "overall", items.size(),
                  llm_score_micro, mean_f1, mean_bleu1);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "tokens: %lld prompt + %lld completion; mean latency %.3fs; macro llm_score %.3f\n",
                  static_cast<long long>(total_prompt_tokens),
                  static_cast<long long>(total_completion_tokens), mean_latency_seconds,
                  llm_score_macro);
    out += buf;
    return out;
}

} // namespace mgmem
