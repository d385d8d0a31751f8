#include "mgmem/metrics.hpp"

#include <cctype>
#include <cmath>
#include <unordered_map>

namespace mgmem {

std::vector<std::string> metric_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        } else if (!std::ispunct(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

namespace {

std::unordered_map<std::string, int> bag(const std::vector<std::string>& tokens) {
    std::unordered_map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

int overlap(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    const auto gold_counts = bag(gold);
    auto pred_counts = bag(pred);
    int tp = 0;
    for (const auto& [tok, h] : pred_counts) {
        auto it = gold_counts.find(tok);
        if (it != gold_counts.end()) tp += std::min(h, it->second);
    }
    return tp;
}

} // namespace

double metric_f1(const std::string& pred, const std::string& gold) {
    const auto p = metric_tokens(pred);
    const auto g = metric_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    const int tp = overlap(p, g);
    if (tp == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(p.size());
    const double recall = static_cast<double>(tp) / static_cast<double>(g.size());
    return 2.0 * precision * recall / (precision + recall);
}

double metric_bleu1(const std::string& pred, const std::string& gold) {
    const auto p = metric_tokens(pred);
    const auto g = metric_tokens(gold);
    if (p.empty()) return 0.0;
    const double c = static_cast<double>(p.size());
    const double r = static_cast<double>(g.size());
    const double p1 = static_cast<double>(overlap(p, g)) / c;
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * p1;
}

} // namespace mgmem
