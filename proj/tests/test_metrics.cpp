#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmkit/metrics.hpp"
#include "lmkit/util.hpp"

using namespace lmkit;

namespace {

std::vector<std::string> words_of(const std::string& s) {
    std::istringstream iss(s);
    std::vector<std::string> out;
    std::string w;
    while (iss >> w) out.push_back(w);
    return out;
}

// Token F1 recomputed through sorted multiset intersection.
double oracle_token_f1_pair(std::vector<std::string> p, std::vector<std::string> g) {
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::sort(p.begin(), p.end());
    std::sort(g.begin(), g.end());
    std::vector<std::string> common;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
    if (common.empty()) return 0.0;
    double prec = static_cast<double>(common.size()) / static_cast<double>(p.size());
    double rec = static_cast<double>(common.size()) / static_cast<double>(g.size());
    return 2.0 * prec * rec / (prec + rec);
}

// LCS length by plain recursion with memoization.
std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> rec = [&](std::size_t i,
                                                                   std::size_t j) -> std::size_t {
        if (i == 0 || j == 0) return 0;
        auto key = std::make_pair(i, j);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::size_t v = a[i - 1] == b[j - 1] ? rec(i - 1, j - 1) + 1
                                             : std::max(rec(i - 1, j), rec(i, j - 1));
        memo[key] = v;
        return v;
    };
    return rec(a.size(), b.size());
}

double oracle_rouge_l(const std::vector<std::string>& preds,
                      const std::vector<std::vector<std::string>>& refs) {
    double sum = 0.0;
    for (std::size_t e = 0; e < preds.size(); ++e) {
        auto p = words_of(preds[e]);
        double best = 0.0;
        for (const auto& rs : refs[e]) {
            auto r = words_of(rs);
            if (p.empty() || r.empty()) continue;
            double l = static_cast<double>(oracle_lcs(p, r));
            if (l == 0.0) continue;
            best = std::max(best, 2.0 * (l / p.size()) * (l / r.size()) /
                                      (l / p.size() + l / r.size()));
        }
        sum += best;
    }
    return sum / static_cast<double>(preds.size());
}

// Corpus BLEU recomputed with joined-string n-gram keys.
double oracle_bleu(const std::vector<std::string>& preds,
                   const std::vector<std::vector<std::string>>& refs, int max_order) {
    std::vector<long long> match(static_cast<std::size_t>(max_order), 0);
    std::vector<long long> total(static_cast<std::size_t>(max_order), 0);
    long long plen = 0, rlen = 0;
    auto grams = [](const std::vector<std::string>& toks, int n) {
        std::unordered_map<std::string, long long> out;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
            std::string key;
            for (int j = 0; j < n; ++j) key += toks[i + static_cast<std::size_t>(j)] + "\x01";
            ++out[key];
        }
        return out;
    };

    for (std::size_t e = 0; e < preds.size(); ++e) {
        auto p = words_of(preds[e]);
        plen += static_cast<long long>(p.size());
        std::size_t best_len = 0;
        long long best_diff = -1;
        for (const auto& rs : refs[e]) {
            auto r = words_of(rs);
            long long diff = std::llabs(static_cast<long long>(r.size()) -
                                        static_cast<long long>(p.size()));
            if (best_diff < 0 || diff < best_diff || (diff == best_diff && r.size() < best_len)) {
                best_diff = diff;
                best_len = r.size();
            }
        }
        rlen += static_cast<long long>(best_len);

        for (int n = 1; n <= max_order; ++n) {
            auto pg = grams(p, n);
            std::unordered_map<std::string, long long> clip;
            for (const auto& rs : refs[e])
                for (const auto& [k, c] : grams(words_of(rs), n))
                    clip[k] = std::max(clip[k], c);
            for (const auto& [k, c] : pg) {
                total[static_cast<std::size_t>(n - 1)] += c;
                auto it = clip.find(k);
                if (it != clip.end()) match[static_cast<std::size_t>(n - 1)] += std::min(c, it->second);
            }
        }
    }

    double lsum = 0.0;
    int used = 0;
    for (int n = 0; n < max_order; ++n) {
        if (total[static_cast<std::size_t>(n)] == 0) continue;
        double t = static_cast<double>(total[static_cast<std::size_t>(n)]);
        double m = static_cast<double>(match[static_cast<std::size_t>(n)]);
        lsum += std::log(m > 0 ? m / t : 1.0 / (t + 1.0));
        ++used;
    }
    if (used == 0 || plen == 0) return 0.0;
    double bp = plen < rlen ? std::exp(1.0 - static_cast<double>(rlen) / static_cast<double>(plen))
                            : 1.0;
    return bp * std::exp(lsum / used);
}

std::string random_sentence(std::mt19937_64& rng, std::size_t max_len) {
    static const char* pool[] = {"u", "v", "w", "uv", "x"};
    std::string out;
    std::size_t n = util::bounded_uint(rng, max_len + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += pool[util::bounded_uint(rng, 5)];
    }
    return out;
}

}  // namespace

TEST_CASE("accuracy and tag precision count exact position matches") {
    CHECK(metrics::accuracy({1, 2, 3, 4}, {1, 0, 3, 0}) == 0.5);
    CHECK(metrics::accuracy({7}, {7}) == 1.0);
    CHECK(metrics::tag_precision({"A", "B", "C"}, {"A", "X", "C"}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    std::mt19937_64 rng(109);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + util::bounded_uint(rng, 30);
        std::vector<int> p(n), g(n);
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = static_cast<int>(util::bounded_uint(rng, 4));
            g[i] = static_cast<int>(util::bounded_uint(rng, 4));
            if (p[i] == g[i]) ++agree;
        }
        CHECK(metrics::accuracy(p, g) ==
              doctest::Approx(static_cast<double>(agree) / static_cast<double>(n)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(metrics::accuracy({1}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::accuracy({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::tag_precision({"A"}, {}), std::invalid_argument);
}

TEST_CASE("entity F1 ignores the outside tag on both sides") {
    // Two of three gold entities found, nothing spurious: P 1, R 2/3, F1 0.8.
    auto prf = metrics::entity_micro_f1({"I-PER", "I-LOC", "O", "O"},
                                        {"I-PER", "I-LOC", "I-ORG", "O"});
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(prf.f1 == doctest::Approx(0.8).epsilon(1e-12));

    // A wrong entity tag is both a false positive and a false negative.
    prf = metrics::entity_micro_f1({"I-LOC"}, {"I-PER"});
    CHECK(prf.precision == 0.0);
    CHECK(prf.recall == 0.0);
    CHECK(prf.f1 == 0.0);

    // All-outside predictions on all-outside gold are trivially zero.
    prf = metrics::entity_micro_f1({"O", "O"}, {"O", "O"});
    CHECK(prf.f1 == 0.0);

    std::mt19937_64 rng(113);
    const char* tags[] = {"O", "I-PER", "I-LOC", "I-ORG"};
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + util::bounded_uint(rng, 40);
        std::vector<std::string> p(n), g(n);
        long long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = tags[util::bounded_uint(rng, 4)];
            g[i] = tags[util::bounded_uint(rng, 4)];
            if (p[i] != "O" && p[i] == g[i])
                ++tp;
            else {
                if (p[i] != "O") ++fp;
                if (g[i] != "O") ++fn;
            }
        }
        auto got = metrics::entity_micro_f1(p, g);
        double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        double f1 = prec + rec == 0.0 ? 0.0 : 2 * prec * rec / (prec + rec);
        CHECK(got.precision == doctest::Approx(prec).epsilon(1e-12));
        CHECK(got.recall == doctest::Approx(rec).epsilon(1e-12));
        CHECK(got.f1 == doctest::Approx(f1).epsilon(1e-12));
    }
}

TEST_CASE("answer normalization lowercases, strips punctuation and articles") {
    CHECK(metrics::normalize_answer("The Quick, Brown Fox!") == "quick brown fox");
    CHECK(metrics::normalize_answer("  An  apple ") == "apple");
    CHECK(metrics::normalize_answer("a an the") == "");
    CHECK(metrics::normalize_answer("x,y") == "x y");
    CHECK(metrics::normalize_answer("ΣΟΦΙΑ") == "σοφια");
    CHECK(metrics::normalize_answer("don't") == "don t");

    metrics::NormalizeConfig keep;
    keep.articles = {};
    CHECK(metrics::normalize_answer("The Fox", keep) == "the fox");
}

TEST_CASE("exact match and token F1 compare normalized answers") {
    CHECK(metrics::exact_match("the answer", {"Answer"}) == 1.0);
    CHECK(metrics::exact_match("An Answer!", {"answer", "other"}) == 1.0);
    CHECK(metrics::exact_match("different", {"answer"}) == 0.0);
    CHECK(metrics::exact_match("", {""}) == 1.0);

    CHECK(metrics::token_f1("x y z", {"y z w"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(metrics::token_f1("y y", {"y"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(metrics::token_f1("", {""}) == 1.0);
    CHECK(metrics::token_f1("x", {""}) == 0.0);
    CHECK(metrics::token_f1("x y", {"w", "x y"}) == 1.0);  // best reference wins

    CHECK_THROWS_AS(metrics::exact_match("x", {}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::token_f1("x", {}), std::invalid_argument);

    std::mt19937_64 rng(127);
    for (int trial = 0; trial < 400; ++trial) {
        std::string pred = random_sentence(rng, 6);
        std::vector<std::string> refs;
        std::size_t nr = 1 + util::bounded_uint(rng, 3);
        for (std::size_t r = 0; r < nr; ++r) refs.push_back(random_sentence(rng, 6));

        double best = 0.0;
        for (const auto& r : refs)
            best = std::max(best, oracle_token_f1_pair(words_of(pred), words_of(r)));
        CHECK(metrics::token_f1(pred, refs) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("corpus BLEU handles identity, clipping, and brevity by hand") {
    // Perfect output on every example scores 1.
    CHECK(metrics::bleu({"u v w x", "w w u"}, {{"u v w x"}, {"w w u"}}) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // Repetition clips to the reference count; zero higher-order matches use
    // the add-one fallback.
    double clipped = metrics::bleu({"the the the the the the the"},
                                   {{"the cat is on the mat"}});
    double geo = std::exp((std::log(2.0 / 7.0) + std::log(1.0 / 7.0) + std::log(1.0 / 6.0) +
                           std::log(1.0 / 5.0)) /
                          4.0);
    CHECK(clipped == doctest::Approx(geo).epsilon(1e-12));

    // Short outputs pay the brevity penalty.
    CHECK(metrics::bleu({"u v"}, {{"u v w x"}}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    // Equidistant reference lengths resolve to the shorter one (no penalty
    // here, since the prediction is then not shorter than the reference).
    CHECK(metrics::bleu({"u v w"}, {{"u v w x", "u v"}}) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(metrics::bleu({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::bleu({"x"}, {{"x"}, {"y"}}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::bleu({"x"}, {{}}), std::invalid_argument);
}

TEST_CASE("corpus BLEU matches an independent reimplementation") {
    std::mt19937_64 rng(131);
    for (int trial = 0; trial < 150; ++trial) {
        std::size_t n = 1 + util::bounded_uint(rng, 5);
        std::vector<std::string> preds;
        std::vector<std::vector<std::string>> refs;
        for (std::size_t e = 0; e < n; ++e) {
            preds.push_back(random_sentence(rng, 8));
            std::vector<std::string> r;
            std::size_t nr = 1 + util::bounded_uint(rng, 3);
            for (std::size_t k = 0; k < nr; ++k) r.push_back(random_sentence(rng, 8));
            refs.push_back(std::move(r));
        }
        int order = 1 + static_cast<int>(util::bounded_uint(rng, 4));
        double want = oracle_bleu(preds, refs, order);
        double got = metrics::bleu(preds, refs, order);
        if (want == 0.0)
            CHECK(got == 0.0);
        else
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("ROUGE-L is the mean best LCS F-measure") {
    CHECK(metrics::rouge_l({"a b c d"}, {{"a c d"}}) ==
          doctest::Approx(6.0 / 7.0).epsilon(1e-12));
    CHECK(metrics::rouge_l({"a b"}, {{"a b"}}) == 1.0);
    CHECK(metrics::rouge_l({"x y"}, {{"u v"}}) == 0.0);
    CHECK(metrics::rouge_l({""}, {{"u v"}}) == 0.0);

    // Word order matters: a reversed prediction shares only a length-1
    // subsequence per alignment direction.
    CHECK(metrics::rouge_l({"c b a"}, {{"a b c"}}) ==
          doctest::Approx(2.0 * (1.0 / 3.0) * (1.0 / 3.0) / (2.0 / 3.0)).epsilon(1e-12));

    std::mt19937_64 rng(137);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + util::bounded_uint(rng, 4);
        std::vector<std::string> preds;
        std::vector<std::vector<std::string>> refs;
        for (std::size_t e = 0; e < n; ++e) {
            preds.push_back(random_sentence(rng, 7));
            std::vector<std::string> r;
            std::size_t nr = 1 + util::bounded_uint(rng, 3);
            for (std::size_t k = 0; k < nr; ++k) r.push_back(random_sentence(rng, 7));
            refs.push_back(std::move(r));
        }
        CHECK(metrics::rouge_l(preds, refs) ==
              doctest::Approx(oracle_rouge_l(preds, refs)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(metrics::rouge_l({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::rouge_l({"x"}, {{}}), std::invalid_argument);
}

TEST_CASE("whitespace tokenization collapses runs and trims ends") {
    CHECK(metrics::whitespace_tokens("  a \t b\nc ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(metrics::whitespace_tokens("").empty());
    CHECK(metrics::whitespace_tokens("one").size() == 1);
}
