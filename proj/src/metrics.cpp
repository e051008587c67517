#include "lmkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lmkit/unicode.hpp"

namespace lmkit::metrics {

double accuracy(const std::vector<int>& predicted, const std::vector<int>& gold) {
    if (predicted.size() != gold.size())
        throw std::invalid_argument("accuracy: size mismatch");
    if (predicted.empty()) throw std::invalid_argument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double tag_precision(const std::vector<std::string>& predicted,
                     const std::vector<std::string>& gold) {
    if (predicted.size() != gold.size())
        throw std::invalid_argument("tag_precision: size mismatch");
    if (predicted.empty()) throw std::invalid_argument("tag_precision: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

PRF entity_micro_f1(const std::vector<std::string>& predicted,
                    const std::vector<std::string>& gold, const std::string& outside_tag) {
    if (predicted.size() != gold.size())
        throw std::invalid_argument("entity_micro_f1: size mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        bool p_ent = predicted[i] != outside_tag;
        bool g_ent = gold[i] != outside_tag;
        if (p_ent && predicted[i] == gold[i])
            ++tp;
        else {
            if (p_ent) ++fp;
            if (g_ent) ++fn;
        }
    }
    PRF out;
    out.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    out.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.f1 = out.precision + out.recall == 0.0
                 ? 0.0
                 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

std::string normalize_answer(const std::string& text, const NormalizeConfig& cfg) {
    std::string lowered;
    lowered.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        auto d = unicode::decode_at(text, i);
        if (d.valid && unicode::is_punct(d.cp)) {
            lowered += ' ';  // punctuation acts as a separator, not glue
        } else if (d.valid) {
            unicode::append_utf8(lowered, unicode::to_lower(d.cp));
        } else {
            lowered.append(text.substr(i, static_cast<std::size_t>(d.len)));
        }
        i += static_cast<std::size_t>(d.len);
    }
    std::istringstream iss(lowered);
    std::string word, out;
    while (iss >> word) {
        if (std::find(cfg.articles.begin(), cfg.articles.end(), word) != cfg.articles.end())
            continue;
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream iss(text);
    std::string word;
    while (iss >> word) out.push_back(word);
    return out;
}

double exact_match(const std::string& predicted, const std::vector<std::string>& references,
                   const NormalizeConfig& cfg) {
    if (references.empty()) throw std::invalid_argument("exact_match: no references");
    std::string p = normalize_answer(predicted, cfg);
    for (const auto& r : references)
        if (p == normalize_answer(r, cfg)) return 1.0;
    return 0.0;
}

namespace {

double pair_token_f1(const std::vector<std::string>& p, const std::vector<std::string>& g) {
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& w : g) ++counts[w];
    int overlap = 0;
    for (const auto& w : p) {
        auto it = counts.find(w);
        if (it != counts.end() && it->second > 0) {
            ++overlap;
            --it->second;
        }
    }
    if (overlap == 0) return 0.0;
    double prec = static_cast<double>(overlap) / static_cast<double>(p.size());
    double rec = static_cast<double>(overlap) / static_cast<double>(g.size());
    return 2.0 * prec * rec / (prec + rec);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double token_f1(const std::string& predicted, const std::vector<std::string>& references,
                const NormalizeConfig& cfg) {
    if (references.empty()) throw std::invalid_argument("token_f1: no references");
    auto p = whitespace_tokens(normalize_answer(predicted, cfg));
    double best = 0.0;
    for (const auto& r : references)
        best = std::max(best, pair_token_f1(p, whitespace_tokens(normalize_answer(r, cfg))));
    return best;
}

double bleu(const std::vector<std::string>& predictions,
            const std::vector<std::vector<std::string>>& references, int max_order) {
    if (predictions.size() != references.size())
        throw std::invalid_argument("bleu: size mismatch");
    if (predictions.empty()) throw std::invalid_argument("bleu: empty input");
    if (max_order < 1) throw std::invalid_argument("bleu: max_order must be positive");

    std::vector<long long> matches(static_cast<std::size_t>(max_order), 0);
    std::vector<long long> totals(static_cast<std::size_t>(max_order), 0);
    long long pred_len = 0, ref_len = 0;

    for (std::size_t e = 0; e < predictions.size(); ++e) {
        auto pred = whitespace_tokens(predictions[e]);
        if (references[e].empty()) throw std::invalid_argument("bleu: example without references");
        std::vector<std::vector<std::string>> refs;
        refs.reserve(references[e].size());
        for (const auto& r : references[e]) refs.push_back(whitespace_tokens(r));

        pred_len += static_cast<long long>(pred.size());
        // Closest reference length; ties resolved toward the shorter one.
        std::size_t closest = refs[0].size();
        for (const auto& r : refs) {
            auto diff = [&](std::size_t n) {
                return n > pred.size() ? n - pred.size() : pred.size() - n;
            };
            if (diff(r.size()) < diff(closest) ||
                (diff(r.size()) == diff(closest) && r.size() < closest))
                closest = r.size();
        }
        ref_len += static_cast<long long>(closest);

        for (int n = 1; n <= max_order; ++n) {
            if (pred.size() < static_cast<std::size_t>(n)) break;
            std::map<std::vector<std::string>, long long> clip;
            for (const auto& r : refs) {
                std::map<std::vector<std::string>, long long> counts;
                for (std::size_t i = 0; i + n <= r.size(); ++i)
                    ++counts[{r.begin() + static_cast<std::ptrdiff_t>(i),
                              r.begin() + static_cast<std::ptrdiff_t>(i + n)}];
                for (const auto& [gram, c] : counts) clip[gram] = std::max(clip[gram], c);
            }
            std::map<std::vector<std::string>, long long> pred_counts;
            for (std::size_t i = 0; i + n <= pred.size(); ++i)
                ++pred_counts[{pred.begin() + static_cast<std::ptrdiff_t>(i),
                               pred.begin() + static_cast<std::ptrdiff_t>(i + n)}];
            for (const auto& [gram, c] : pred_counts) {
                auto it = clip.find(gram);
                matches[static_cast<std::size_t>(n - 1)] +=
                    it == clip.end() ? 0 : std::min(c, it->second);
                totals[static_cast<std::size_t>(n - 1)] += c;
            }
        }
    }

    double log_prec_sum = 0.0;
    int used = 0;
    for (int n = 0; n < max_order; ++n) {
        if (totals[static_cast<std::size_t>(n)] == 0) continue;  // order longer than any output
        double m = static_cast<double>(matches[static_cast<std::size_t>(n)]);
        double t = static_cast<double>(totals[static_cast<std::size_t>(n)]);
        double p = m > 0.0 ? m / t : 1.0 / (t + 1.0);  // add-one fallback on zero matches
        log_prec_sum += std::log(p);
        ++used;
    }
    if (used == 0 || pred_len == 0) return 0.0;
    double geo = std::exp(log_prec_sum / used);
    double bp = pred_len < ref_len
                    ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(pred_len))
                    : 1.0;
    return bp * geo;
}

double rouge_l(const std::vector<std::string>& predictions,
               const std::vector<std::vector<std::string>>& references) {
    if (predictions.size() != references.size())
        throw std::invalid_argument("rouge_l: size mismatch");
    if (predictions.empty()) throw std::invalid_argument("rouge_l: empty input");
    double sum = 0.0;
    for (std::size_t e = 0; e < predictions.size(); ++e) {
        auto pred = whitespace_tokens(predictions[e]);
        if (references[e].empty())
            throw std::invalid_argument("rouge_l: example without references");
        double best = 0.0;
        for (const auto& r : references[e]) {
            auto ref = whitespace_tokens(r);
            if (pred.empty() || ref.empty()) continue;
            double lcs = static_cast<double>(lcs_length(pred, ref));
            if (lcs == 0.0) continue;
            double prec = lcs / static_cast<double>(pred.size());
            double rec = lcs / static_cast<double>(ref.size());
            best = std::max(best, 2.0 * prec * rec / (prec + rec));
        }
        sum += best;
    }
    return sum / static_cast<double>(predictions.size());
}

}  // namespace lmkit::metrics
