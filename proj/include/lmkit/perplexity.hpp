#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "lmkit/corpus.hpp"
#include "lmkit/ngram.hpp"
#include "lmkit/scoring.hpp"
#include "lmkit/tokenizer.hpp"

namespace lmkit::ppl {

// All log probabilities are natural logs. Character perplexity normalizes by
// the codepoint count of the ORIGINAL text, so tokenizers with different
// granularities stay comparable.
struct DocScore {
    std::string id;
    std::string lang;
    double log_prob = 0.0;
    std::size_t chars = 0;   // unicode codepoints of the original text
    std::size_t tokens = 0;

    double char_ppl() const;
    double token_ppl() const;
};

DocScore score_document(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                        const corpus::Document& doc);

std::vector<DocScore> score_corpus(const score::ScoringModel& model,
                                   const tok::Tokenizer& tokenizer,
                                   const std::vector<corpus::Document>& docs,
                                   unsigned workers = 1);

// Pooled over documents: exp(-sum(log p) / sum(normalizer)).
struct Aggregate {
    double log_prob = 0.0;
    std::size_t chars = 0;
    std::size_t tokens = 0;
    std::size_t docs = 0;

    double char_ppl() const;
    double token_ppl() const;
};

Aggregate pool(const std::vector<DocScore>& scores);
std::map<std::string, Aggregate> by_language(const std::vector<DocScore>& scores);

// Family value = unweighted mean of its member languages' char perplexities.
std::map<std::string, double> family_char_ppl(const std::map<std::string, Aggregate>& langs);

// Stable 90/10 split: a document lands in the held-out slice when the hash
// of its id falls in the last of ten buckets.
bool is_held_out(const corpus::Document& doc);

struct CompareConfig {
    std::size_t vocab_size = 4096;
    score::NGramConfig ngram;
    unsigned workers = 1;
};

struct StrategyRow {
    tok::Strategy strategy;
    double char_ppl = 0.0;
    double reference = 0.0;  // published full-scale result for context
    std::size_t vocab = 0;
};

// Trains one tokenizer and n-gram model per strategy on the train slice and
// reports held-out character perplexity next to the published full-scale
// reference numbers (reported, never asserted: toy models differ).
std::vector<StrategyRow> compare_strategies(const std::vector<corpus::Document>& docs,
                                            const CompareConfig& cfg);

std::string format_comparison(const std::vector<StrategyRow>& rows);

}  // namespace lmkit::ppl
