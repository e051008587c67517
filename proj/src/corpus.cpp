#include "lmkit/corpus.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "lmkit/quality.hpp"
#include "lmkit/unicode.hpp"
#include "lmkit/util.hpp"

namespace lmkit::corpus {

std::string to_string(Source s) {
    return s == Source::wiki ? "wiki" : "web";
}

Source source_from_string(const std::string& s) {
    if (s == "wiki") return Source::wiki;
    if (s == "web") return Source::web;
    throw std::invalid_argument("unknown source: " + s);
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::keep: return "keep";
        case Verdict::drop_duplicate: return "drop_duplicate";
        case Verdict::drop_entropy: return "drop_entropy";
        case Verdict::drop_classifier: return "drop_classifier";
        case Verdict::drop_heuristic: return "drop_heuristic";
    }
    throw std::logic_error("bad verdict");
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "keep") return Verdict::keep;
    if (s == "drop_duplicate") return Verdict::drop_duplicate;
    if (s == "drop_entropy") return Verdict::drop_entropy;
    if (s == "drop_classifier") return Verdict::drop_classifier;
    if (s == "drop_heuristic") return Verdict::drop_heuristic;
    throw std::invalid_argument("unknown verdict: " + s);
}

LangStats CorpusStats::totals() const {
    LangStats t;
    for (const auto* m : {&wiki, &web}) {
        for (const auto& [lang, s] : *m) {
            t.char_count += s.char_count;
            t.doc_count += s.doc_count;
        }
    }
    return t;
}

CorpusStats& CorpusStats::operator+=(const CorpusStats& other) {
    for (const auto& [lang, s] : other.wiki) {
        wiki[lang].char_count += s.char_count;
        wiki[lang].doc_count += s.doc_count;
    }
    for (const auto& [lang, s] : other.web) {
        web[lang].char_count += s.char_count;
        web[lang].doc_count += s.doc_count;
    }
    return *this;
}

std::uint64_t text_hash64(std::string_view text) {
    return util::fnv1a64(text);
}

DedupResult deduplicate(const std::vector<Document>& docs) {
    DedupResult out;
    out.kept.reserve(docs.size());
    out.decisions.reserve(docs.size());
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(docs.size() * 2);
    for (const auto& d : docs) {
        if (seen.insert(text_hash64(d.text)).second) {
            out.kept.push_back(d);
            out.decisions.push_back({d.id, Verdict::keep, 0.0});
        } else {
            out.decisions.push_back({d.id, Verdict::drop_duplicate, 0.0});
        }
    }
    return out;
}

double compression_ratio(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("compression_ratio: empty text");
    uLong bound = compressBound(static_cast<uLong>(text.size()));
    std::vector<Bytef> buf(bound);
    uLongf out_len = bound;
    int rc = compress2(buf.data(), &out_len, reinterpret_cast<const Bytef*>(text.data()),
                       static_cast<uLong>(text.size()), Z_BEST_COMPRESSION);
    if (rc != Z_OK) throw std::runtime_error("compression_ratio: deflate failed");
    return static_cast<double>(out_len) / static_cast<double>(text.size());
}

double nearest_rank_quantile(std::vector<double> sorted_values, double q) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile of empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile out of [0,1]");
    std::size_t n = sorted_values.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    return sorted_values[rank - 1];
}

std::vector<FilterDecision> entropy_filter(const std::vector<Document>& docs,
                                           const EntropyFilterConfig& cfg) {
    if (docs.empty()) throw std::invalid_argument("entropy_filter: empty batch");
    if (cfg.low_quantile > cfg.high_quantile)
        throw std::invalid_argument("entropy_filter: low quantile above high");
    std::vector<double> ratios(docs.size());
    util::parallel_for(docs.size(), cfg.workers,
                       [&](std::size_t i) { ratios[i] = compression_ratio(docs[i].text); });
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    double lo = nearest_rank_quantile(sorted, cfg.low_quantile);
    double hi = nearest_rank_quantile(sorted, cfg.high_quantile);
    std::vector<FilterDecision> out(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        bool inside = ratios[i] >= lo && ratios[i] <= hi;
        out[i] = {docs[i].id, inside ? Verdict::keep : Verdict::drop_entropy, ratios[i]};
    }
    return out;
}

namespace {

struct TextShape {
    std::size_t chars = 0;
    std::size_t digits = 0;
    double repeated_line_fraction = 0.0;
    double mean_word_length = 0.0;
};

TextShape analyze(const std::string& text) {
    TextShape shape;
    std::size_t i = 0;
    while (i < text.size()) {
        auto d = unicode::decode_at(text, i);
        ++shape.chars;
        if (d.valid && unicode::is_ascii_digit(d.cp)) ++shape.digits;
        i += d.len;
    }

    std::unordered_map<std::uint64_t, std::size_t> line_counts;
    std::size_t lines = 0, repeated = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::size_t end = nl == std::string::npos ? text.size() : nl;
        std::string_view line(text.data() + pos, end - pos);
        if (!line.empty()) {
            ++lines;
            if (++line_counts[util::fnv1a64(line)] > 1) ++repeated;
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    if (lines > 0) shape.repeated_line_fraction = static_cast<double>(repeated) / lines;

    std::size_t words = 0, word_chars = 0, cur = 0;
    i = 0;
    while (i < text.size()) {
        auto d = unicode::decode_at(text, i);
        bool space = d.valid && unicode::is_space(d.cp);
        if (space) {
            if (cur > 0) { ++words; word_chars += cur; cur = 0; }
        } else {
            ++cur;
        }
        i += d.len;
    }
    if (cur > 0) { ++words; word_chars += cur; }
    if (words > 0) shape.mean_word_length = static_cast<double>(word_chars) / words;
    return shape;
}

}  // namespace

FilterDecision heuristic_filter(const Document& doc, const HeuristicThresholds& t) {
    TextShape shape = analyze(doc.text);
    if (shape.chars < t.min_length) return {doc.id, Verdict::drop_heuristic, 0.0};
    if (shape.chars > 0) {
        double digit_fraction = static_cast<double>(shape.digits) / shape.chars;
        if (digit_fraction > t.max_digit_fraction) return {doc.id, Verdict::drop_heuristic, 0.0};
    }
    if (shape.repeated_line_fraction > t.max_repeated_line_fraction)
        return {doc.id, Verdict::drop_heuristic, 0.0};
    if (shape.mean_word_length > t.max_mean_word_length)
        return {doc.id, Verdict::drop_heuristic, 0.0};
    return {doc.id, Verdict::keep, 0.0};
}

CorpusStats compute_stats(const std::vector<Document>& docs) {
    CorpusStats stats;
    for (const auto& d : docs) {
        auto& m = d.source == Source::wiki ? stats.wiki : stats.web;
        auto& s = m[d.lang];
        s.char_count += unicode::count_codepoints(d.text);
        s.doc_count += 1;
    }
    return stats;
}

PipelineResult run_pipeline(const std::vector<Document>& docs, const PipelineConfig& cfg,
                            const QualityClassifier* classifier) {
    // Decisions are recorded per input doc; a doc dropped by an earlier stage
    // keeps that stage's verdict.
    std::unordered_map<std::string, FilterDecision> decision_by_id;
    decision_by_id.reserve(docs.size() * 2);
    std::vector<Document> live = docs;

    for (Stage stage : cfg.order) {
        if (live.empty()) break;
        std::vector<Document> next;
        switch (stage) {
            case Stage::dedup: {
                auto r = deduplicate(live);
                for (const auto& d : r.decisions)
                    if (d.verdict != Verdict::keep) decision_by_id[d.doc_id] = d;
                next = std::move(r.kept);
                break;
            }
            case Stage::entropy: {
                auto decisions = entropy_filter(live, cfg.entropy);
                for (std::size_t i = 0; i < live.size(); ++i) {
                    if (decisions[i].verdict == Verdict::keep)
                        next.push_back(live[i]);
                    else
                        decision_by_id[decisions[i].doc_id] = decisions[i];
                }
                break;
            }
            case Stage::classifier: {
                if (classifier == nullptr)
                    throw std::invalid_argument("pipeline: classifier stage without a model");
                std::vector<double> scores(live.size());
                util::parallel_for(live.size(), cfg.workers,
                                   [&](std::size_t i) { scores[i] = classifier->score(live[i].text); });
                for (std::size_t i = 0; i < live.size(); ++i) {
                    if (scores[i] >= cfg.classifier_keep_threshold)
                        next.push_back(live[i]);
                    else
                        decision_by_id[live[i].id] = {live[i].id, Verdict::drop_classifier, scores[i]};
                }
                break;
            }
            case Stage::heuristic: {
                for (const auto& d : live) {
                    auto dec = heuristic_filter(d, cfg.heuristics);
                    if (dec.verdict == Verdict::keep)
                        next.push_back(d);
                    else
                        decision_by_id[d.id] = dec;
                }
                break;
            }
        }
        live = std::move(next);
    }

    PipelineResult out;
    out.kept = std::move(live);
    out.decisions.reserve(docs.size());
    std::unordered_set<const Document*> kept_set;
    for (const auto& d : docs) {
        auto it = decision_by_id.find(d.id);
        if (it != decision_by_id.end())
            out.decisions.push_back(it->second);
        else
            out.decisions.push_back({d.id, Verdict::keep, 0.0});
    }
    out.kept_stats = compute_stats(out.kept);
    return out;
}

}  // namespace lmkit::corpus
