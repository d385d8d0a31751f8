/*
 * mgmem - QA evaluation harness
 *
 * Runs each QA item as an isolated query (fresh session, nothing committed),
 * scores with F1 / BLEU-1 / a model-graded CORRECT-WRONG label, and reports
 * per-item rows plus overall and per-category aggregates.
 */
#pragma once

#include "mgmem/gateway.hpp"
#include "mgmem/pipeline.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mgmem {

struct QAItem {
    std::string question;
    std::string gold;
    std::string category; // optional, "" when absent

    void validate() const;
};

struct JudgeLabel {
    std::string label; // "CORRECT" | "WRONG"
    std::string reasoning;
    bool flagged = false; // grading failed; conservatively WRONG
};

// Grades an answer against gold. A contract violation (after gateway
// retries) yields WRONG with flagged set.
JudgeLabel llm_judge(const std::string& question, const std::string& gold,
                     const std::string& prediction, LlmGateway& gateway);

struct EvalItemResult {
    QAItem item;
    std::string prediction;
    double f1 = 0.0;
    double bleu1 = 0.0;
    std::string llm_label;
    bool flagged = false;
    std::string error; // item-level failure, run continues
    TokenUsage tokens;
    double latency_seconds = 0.0;
};

struct CategoryAggregate {
    std::size_t items = 0;
    double mean_f1 = 0.0;
    double mean_bleu1 = 0.0;
    double llm_score = 0.0; // fraction CORRECT within the category
};

struct EvalReport {
    std::vector<EvalItemResult> items;
    double mean_f1 = 0.0;
    double mean_bleu1 = 0.0;
    double llm_score_micro = 0.0; // fraction CORRECT over all items
    double llm_score_macro = 0.0; // mean of per-category fractions
    std::int64_t total_prompt_tokens = 0;
    std::int64_t total_completion_tokens = 0;
    double mean_latency_seconds = 0.0;
    std::map<std::string, CategoryAggregate> categories;

    Json to_json() const;
    std::string to_table() const; // plain-text summary
};

std::vector<QAItem> load_qa_jsonl(const std::filesystem::path& path);

EvalReport run_eval(const std::vector<QAItem>& items, Pipeline& pipeline);

} // namespace mgmem
