#pragma once

#include <string>
#include <vector>

namespace lmkit::metrics {

double accuracy(const std::vector<int>& predicted, const std::vector<int>& gold);

// Fraction of positions whose predicted tag equals the gold tag.
double tag_precision(const std::vector<std::string>& predicted,
                     const std::vector<std::string>& gold);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Micro-averaged tag-level F1 that ignores the outside tag: a position
// counts as a true positive only when both sides agree on a non-"O" tag.
PRF entity_micro_f1(const std::vector<std::string>& predicted,
                    const std::vector<std::string>& gold,
                    const std::string& outside_tag = "O");

// Answer-string normalization before exact match / token F1: lowercase,
// drop punctuation, drop articles, collapse whitespace.
struct NormalizeConfig {
    std::vector<std::string> articles = {"a", "an", "the"};
};

std::string normalize_answer(const std::string& text, const NormalizeConfig& cfg = {});

// Both take the best score over the references.
double exact_match(const std::string& predicted, const std::vector<std::string>& references,
                   const NormalizeConfig& cfg = {});
double token_f1(const std::string& predicted, const std::vector<std::string>& references,
                const NormalizeConfig& cfg = {});

// Corpus-level BLEU up to 4-grams over whitespace tokens, brevity penalty
// from the closest reference length; a zero n-gram match count falls back
// to an add-one numerator so short corpora stay finite.
double bleu(const std::vector<std::string>& predictions,
            const std::vector<std::vector<std::string>>& references, int max_order = 4);

// Mean sentence-level longest-common-subsequence F-measure; best reference
// per prediction.
double rouge_l(const std::vector<std::string>& predictions,
               const std::vector<std::vector<std::string>>& references);

std::vector<std::string> whitespace_tokens(const std::string& text);

}  // namespace lmkit::metrics
