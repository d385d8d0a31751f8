/*
 * mgmem - answer quality metrics
 *
 * Tokenization contract for both metrics: lowercase, strip punctuation,
 * split on whitespace.
 */
#pragma once

#include <string>
#include <vector>

namespace mgmem {

std::vector<std::string> metric_tokens(const std::string& text);

// Token-level F1 (bag overlap): harmonic mean of precision and recall.
// 1 when both sides are empty, 0 when exactly one is.
double metric_f1(const std::string& pred, const std::string& gold);

// Clipped unigram precision times the brevity penalty
// (1 if c > r, else e^(1 - r/c)); 0 for an empty prediction.
double metric_bleu1(const std::string& pred, const std::string& gold);

} // namespace mgmem
