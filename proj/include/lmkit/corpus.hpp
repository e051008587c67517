#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lmkit::corpus {

enum class Source { wiki, web };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

struct Document {
    std::string id;
    std::string lang;
    Source source = Source::web;
    std::string text;
};

enum class Verdict { keep, drop_duplicate, drop_entropy, drop_classifier, drop_heuristic };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

// score carries the measurement behind the verdict: compression ratio for
// entropy decisions, positive-class probability for classifier decisions,
// 0 otherwise.
struct FilterDecision {
    std::string doc_id;
    Verdict verdict = Verdict::keep;
    double score = 0.0;
};

struct LangStats {
    std::uint64_t char_count = 0;
    std::uint64_t doc_count = 0;
};

// Per-language counts split by source. Addition merges disjoint shards.
struct CorpusStats {
    std::map<std::string, LangStats> wiki;
    std::map<std::string, LangStats> web;

    LangStats totals() const;
    CorpusStats& operator+=(const CorpusStats& other);
};

std::uint64_t text_hash64(std::string_view text);

// Keeps the first occurrence of each distinct text hash, preserving input
// order. Returns kept docs plus one decision per input doc.
struct DedupResult {
    std::vector<Document> kept;
    std::vector<FilterDecision> decisions;
};
DedupResult deduplicate(const std::vector<Document>& docs);

// compressed bytes / raw UTF-8 bytes, deflate at maximum level.
// Throws std::invalid_argument on empty text.
double compression_ratio(std::string_view text);

struct EntropyFilterConfig {
    double low_quantile = 0.02;
    double high_quantile = 0.98;
    unsigned workers = 1;
};

// Nearest-rank quantile of a sorted sample; q=0 maps to the minimum.
double nearest_rank_quantile(std::vector<double> sorted_values, double q);

// Marks docs whose compression ratio falls outside the batch's empirical
// [low, high] quantile band. Throws on an empty batch or a bad band.
std::vector<FilterDecision> entropy_filter(const std::vector<Document>& docs,
                                           const EntropyFilterConfig& cfg);

struct HeuristicThresholds {
    std::size_t min_length = 200;            // unicode chars
    double max_digit_fraction = 0.3;         // ASCII digits over chars
    double max_repeated_line_fraction = 0.3;
    double max_mean_word_length = 20.0;      // chars per whitespace-split word
};

FilterDecision heuristic_filter(const Document& doc, const HeuristicThresholds& t);

CorpusStats compute_stats(const std::vector<Document>& docs);

// Full cleaning pipeline: stage order is configurable, dedup-first default.
enum class Stage { dedup, entropy, classifier, heuristic };

struct PipelineConfig {
    std::vector<Stage> order{Stage::dedup, Stage::entropy, Stage::heuristic};
    EntropyFilterConfig entropy;
    HeuristicThresholds heuristics;
    double classifier_keep_threshold = 0.5;
    unsigned workers = 1;
};

class QualityClassifier;

struct PipelineResult {
    std::vector<Document> kept;
    std::vector<FilterDecision> decisions;  // one per input doc, input order
    CorpusStats kept_stats;
};

PipelineResult run_pipeline(const std::vector<Document>& docs, const PipelineConfig& cfg,
                            const QualityClassifier* classifier = nullptr);

}  // namespace lmkit::corpus
