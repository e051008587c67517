// End-to-end acceptance run: one pass/fail line per shipped guarantee, each
// measured against its runtime budget. Exits nonzero if any criterion fails.
#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmkit/corpus.hpp"
#include "lmkit/eval.hpp"
#include "lmkit/jsonl.hpp"
#include "lmkit/metrics.hpp"
#include "lmkit/ngram.hpp"
#include "lmkit/perplexity.hpp"
#include "lmkit/report.hpp"
#include "lmkit/tokenizer.hpp"
#include "lmkit/transformer.hpp"
#include "lmkit/unicode.hpp"
#include "lmkit/util.hpp"

#ifndef LMKIT_SOURCE_DIR
#define LMKIT_SOURCE_DIR "."
#endif

namespace {

using namespace lmkit;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

// ---- shared fakes ----------------------------------------------------------

// Assigns every token probability 1/V regardless of context.
struct UniformModel : score::ScoringModel {
    int v;
    explicit UniformModel(int vocab) : v(vocab) {}
    int vocab_size() const override { return v; }
    std::size_t max_context() const override { return 0; }
    std::vector<double> next_log_probs(const std::vector<int>&) const override {
        return std::vector<double>(static_cast<std::size_t>(v), -std::log(static_cast<double>(v)));
    }
    double sequence_log_prob(const std::vector<int>& ids) const override {
        return -static_cast<double>(ids.size()) * std::log(static_cast<double>(v));
    }
};

// Scores the decoded text through an arbitrary function, so evaluation flows
// can be driven by hand-written oracles.
struct TextModel : score::ScoringModel {
    const tok::Tokenizer* tokenizer;
    std::function<double(const std::string&)> f;
    TextModel(const tok::Tokenizer& t, std::function<double(const std::string&)> fn)
        : tokenizer(&t), f(std::move(fn)) {}
    int vocab_size() const override { return static_cast<int>(tokenizer->vocab_size()); }
    std::size_t max_context() const override { return 0; }
    std::vector<double> next_log_probs(const std::vector<int>&) const override {
        auto v = static_cast<std::size_t>(vocab_size());
        return std::vector<double>(v, -std::log(static_cast<double>(v)));
    }
    double sequence_log_prob(const std::vector<int>& ids) const override {
        return f(tokenizer->decode(ids));
    }
};

tok::Tokenizer char_tokenizer(const std::vector<std::string>& texts) {
    tok::TrainConfig cfg;
    cfg.strategy = tok::Strategy::char_level;
    return tok::Tokenizer::train(texts, cfg);
}

// '<' is excluded: a literal marker string in the input is indistinguishable
// from a real marker by design.
std::string random_text(std::mt19937_64& rng, std::size_t len) {
    static const std::u32string ascii = U"abcdefghij stuvwxyz0123456789+-*/=%.,!?ABCDEFGH";
    static const std::u32string wide =
        U"абвгдежзиклмнопрстуфхцчшщэюяАБВГДЕЖЗαβγδεζηθικλμνξοπρστΑΒΓΔΕΖ日本語中文€😀";
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        char32_t cp = util::uniform01(rng) < 0.4 ? wide[util::bounded_uint(rng, wide.size())]
                                                 : ascii[util::bounded_uint(rng, ascii.size())];
        unicode::append_utf8(out, cp);
    }
    return out;
}

std::vector<int> random_ids(std::mt19937_64& rng, int vocab, std::size_t len) {
    std::vector<int> ids(len);
    for (auto& id : ids)
        id = static_cast<int>(util::bounded_uint(rng, static_cast<std::uint64_t>(vocab)));
    return ids;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Independent all-dense forward pass over the published flat-parameter
// layout: plain loops, every layer attends to the full causal prefix.
struct DenseOracle {
    score::TransformerConfig cfg;
    std::vector<double> p;

    struct Layer {
        std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
        std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
    };
    std::vector<Layer> layers;
    std::size_t tok_emb = 0, pos_emb = 0, lnf_g = 0, lnf_b = 0, w_out = 0;

    DenseOracle(const score::TransformerConfig& c, const std::vector<double>& params)
        : cfg(c), p(params) {
        std::size_t d = static_cast<std::size_t>(cfg.d_model);
        std::size_t v = static_cast<std::size_t>(cfg.vocab_size);
        std::size_t f = 4 * d, pos = 0;
        tok_emb = pos;
        pos += v * d;
        pos_emb = pos;
        pos += static_cast<std::size_t>(cfg.max_seq) * d;
        layers.resize(static_cast<std::size_t>(cfg.n_layers));
        for (auto& l : layers) {
            l.ln1_g = pos; pos += d;
            l.ln1_b = pos; pos += d;
            l.wq = pos; pos += d * d;
            l.bq = pos; pos += d;
            l.wk = pos; pos += d * d;
            l.bk = pos; pos += d;
            l.wv = pos; pos += d * d;
            l.bv = pos; pos += d;
            l.wo = pos; pos += d * d;
            l.bo = pos; pos += d;
            l.ln2_g = pos; pos += d;
            l.ln2_b = pos; pos += d;
            l.w1 = pos; pos += d * f;
            l.b1 = pos; pos += f;
            l.w2 = pos; pos += f * d;
            l.b2 = pos; pos += d;
        }
        lnf_g = pos; pos += d;
        lnf_b = pos; pos += d;
        w_out = pos; pos += d * v;
        require(pos == p.size(), "flat parameter layout size mismatch");
    }

    std::vector<double> layer_norm(const std::vector<double>& x, std::size_t g, std::size_t b,
                                   int t_len) const {
        int d = cfg.d_model;
        std::vector<double> y(x.size());
        for (int t = 0; t < t_len; ++t) {
            double mu = 0.0;
            for (int i = 0; i < d; ++i) mu += x[static_cast<std::size_t>(t) * d + i];
            mu /= d;
            double var = 0.0;
            for (int i = 0; i < d; ++i) {
                double c = x[static_cast<std::size_t>(t) * d + i] - mu;
                var += c * c;
            }
            var /= d;
            double r = 1.0 / std::sqrt(var + 1e-5);
            for (int i = 0; i < d; ++i)
                y[static_cast<std::size_t>(t) * d + i] =
                    p[g + static_cast<std::size_t>(i)] *
                        (x[static_cast<std::size_t>(t) * d + i] - mu) * r +
                    p[b + static_cast<std::size_t>(i)];
        }
        return y;
    }

    std::vector<double> matmul(const std::vector<double>& x, std::size_t w, std::size_t b,
                               int t_len, int nin, int nout, bool bias) const {
        std::vector<double> y(static_cast<std::size_t>(t_len) * nout, 0.0);
        for (int t = 0; t < t_len; ++t)
            for (int o = 0; o < nout; ++o) {
                double acc = bias ? p[b + static_cast<std::size_t>(o)] : 0.0;
                for (int i = 0; i < nin; ++i)
                    acc += x[static_cast<std::size_t>(t) * nin + i] *
                           p[w + static_cast<std::size_t>(i) * nout + o];
                y[static_cast<std::size_t>(t) * nout + o] = acc;
            }
        return y;
    }

    std::vector<double> next_log_probs(const std::vector<int>& ctx) const {
        std::vector<int> input{cfg.bos_id};
        input.insert(input.end(), ctx.begin(), ctx.end());
        int t_len = static_cast<int>(input.size());
        int d = cfg.d_model, v = cfg.vocab_size, heads = cfg.n_heads, dh = d / heads, f = 4 * d;
        std::vector<double> x(static_cast<std::size_t>(t_len) * d);
        for (int t = 0; t < t_len; ++t)
            for (int i = 0; i < d; ++i)
                x[static_cast<std::size_t>(t) * d + i] =
                    p[tok_emb +
                      static_cast<std::size_t>(input[static_cast<std::size_t>(t)]) * d + i] +
                    p[pos_emb + static_cast<std::size_t>(t) * d + i];

        for (const auto& l : layers) {
            auto ln1 = layer_norm(x, l.ln1_g, l.ln1_b, t_len);
            auto q = matmul(ln1, l.wq, l.bq, t_len, d, d, true);
            auto k = matmul(ln1, l.wk, l.bk, t_len, d, d, true);
            auto vv = matmul(ln1, l.wv, l.bv, t_len, d, d, true);

            std::vector<double> att(static_cast<std::size_t>(t_len) * d, 0.0);
            for (int h = 0; h < heads; ++h)
                for (int t = 0; t < t_len; ++t) {
                    std::vector<double> w_att(static_cast<std::size_t>(t) + 1);
                    double mx = -1e300;
                    for (int u = 0; u <= t; ++u) {
                        double dot = 0.0;
                        for (int i = 0; i < dh; ++i)
                            dot += q[static_cast<std::size_t>(t) * d + h * dh + i] *
                                   k[static_cast<std::size_t>(u) * d + h * dh + i];
                        w_att[static_cast<std::size_t>(u)] =
                            dot / std::sqrt(static_cast<double>(dh));
                        mx = std::max(mx, w_att[static_cast<std::size_t>(u)]);
                    }
                    double z = 0.0;
                    for (double& wv2 : w_att) {
                        wv2 = std::exp(wv2 - mx);
                        z += wv2;
                    }
                    for (int u = 0; u <= t; ++u)
                        for (int i = 0; i < dh; ++i)
                            att[static_cast<std::size_t>(t) * d + h * dh + i] +=
                                (w_att[static_cast<std::size_t>(u)] / z) *
                                vv[static_cast<std::size_t>(u) * d + h * dh + i];
                }

            auto proj = matmul(att, l.wo, l.bo, t_len, d, d, true);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += proj[i];

            auto ln2 = layer_norm(x, l.ln2_g, l.ln2_b, t_len);
            auto pre = matmul(ln2, l.w1, l.b1, t_len, d, f, true);
            for (double& z : pre) z = 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
            auto out = matmul(pre, l.w2, l.b2, t_len, f, d, true);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += out[i];
        }

        auto lnf = layer_norm(x, lnf_g, lnf_b, t_len);
        auto logits = matmul(lnf, w_out, 0, t_len, d, v, false);
        int t = t_len - 1;
        double mx = -1e300;
        for (int j = 0; j < v; ++j)
            mx = std::max(mx, logits[static_cast<std::size_t>(t) * v + j]);
        double z = 0.0;
        for (int j = 0; j < v; ++j)
            z += std::exp(logits[static_cast<std::size_t>(t) * v + j] - mx);
        double lse = mx + std::log(z);
        std::vector<double> lp(static_cast<std::size_t>(v));
        for (int j = 0; j < v; ++j)
            lp[static_cast<std::size_t>(j)] = logits[static_cast<std::size_t>(t) * v + j] - lse;
        return lp;
    }
};

score::TransformerConfig toy_config() {
    score::TransformerConfig cfg;
    cfg.vocab_size = 32;
    cfg.d_model = 8;
    cfg.n_layers = 2;  // dense layer 0, banded layer 1
    cfg.n_heads = 2;
    cfg.max_seq = 16;
    cfg.window = 4;
    cfg.seed = 99;
    return cfg;
}

// ---- metric oracles --------------------------------------------------------

std::vector<std::string> words_of(const std::string& s) {
    std::istringstream iss(s);
    std::vector<std::string> out;
    std::string w;
    while (iss >> w) out.push_back(w);
    return out;
}

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

std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::vector<std::size_t>> dp(a.size() + 1,
                                             std::vector<std::size_t>(b.size() + 1, 0));
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                            : std::max(dp[i - 1][j], dp[i][j - 1]);
    return dp[a.size()][b.size()];
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
            double pr = l / static_cast<double>(p.size());
            double rc = l / static_cast<double>(r.size());
            best = std::max(best, 2.0 * pr * rc / (pr + rc));
        }
        sum += best;
    }
    return sum / static_cast<double>(preds.size());
}

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
            long long diff =
                std::llabs(static_cast<long long>(r.size()) - static_cast<long long>(p.size()));
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
                for (const auto& [key, c] : grams(words_of(rs), n))
                    clip[key] = std::max(clip[key], c);
            for (const auto& [key, c] : pg) {
                total[static_cast<std::size_t>(n - 1)] += c;
                auto it = clip.find(key);
                if (it != clip.end())
                    match[static_cast<std::size_t>(n - 1)] += std::min(c, it->second);
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
    double bp =
        plen < rlen ? std::exp(1.0 - static_cast<double>(rlen) / static_cast<double>(plen)) : 1.0;
    return bp * std::exp(lsum / used);
}

// ASCII-only reimplementation of answer normalization, valid on the sampled
// domain below: lowercase, punctuation to spaces, drop articles, collapse.
std::string ascii_normalize(const std::string& text) {
    std::string lowered;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::ispunct(u))
            lowered += ' ';
        else
            lowered += static_cast<char>(std::tolower(u));
    }
    std::vector<std::string> keep;
    for (const auto& w : words_of(lowered))
        if (w != "a" && w != "an" && w != "the") keep.push_back(w);
    std::string out;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        if (i) out += ' ';
        out += keep[i];
    }
    return out;
}

// ---- criteria --------------------------------------------------------------

void golden_tokenization() {
    const std::string sentence = "22 Birds + 3 birds = 25 birds";
    auto expect = [&](tok::Strategy strategy, const std::vector<std::string>& want) {
        tok::TrainConfig cfg;
        cfg.strategy = strategy;
        cfg.vocab_size = 512;
        auto t = tok::Tokenizer::train({sentence, sentence, sentence}, cfg);
        require(t.encode_rendered(sentence) == want,
                tok::to_string(strategy) + " sequence mismatch");
    };
    expect(tok::Strategy::bpe_default,
           {"22", " Birds", " +", " 3", " birds", " =", " 25", " birds"});
    expect(tok::Strategy::bpe_case,
           {"22", "<case>", "birds", " +", " 3", " birds", " =", " 25", " birds"});
    expect(tok::Strategy::bpe_arithmetic,
           {"2", "2", "<case>", "birds", " ", "+", " ", "3", " birds", " ", "=", " ", "2", "5",
            " birds"});
    expect(tok::Strategy::bpe_combined,
           {"2", "2", "<case>", "birds", " ", "+", " ", "3", " ", "birds", " ", "=", " ", "2",
            "5", " ", "birds"});
    expect(tok::Strategy::char_level,
           {"2", "2", " ", "B", "i", "r", "d", "s", " ", "+", " ", "3", " ", "b", "i", "r", "d",
            "s", " ", "=", " ", "2", "5", " ", "b", "i", "r", "d", "s"});
}

void round_trip() {
    std::mt19937_64 rng(101);
    std::vector<std::string> corpus;
    for (int d = 0; d < 30; ++d) corpus.push_back(random_text(rng, 150));

    for (auto strategy : tok::all_strategies()) {
        std::vector<std::string> texts;
        for (int i = 0; i < 1000; ++i)
            texts.push_back(random_text(rng, 1 + util::bounded_uint(rng, 60)));

        tok::TrainConfig cfg;
        cfg.strategy = strategy;
        cfg.vocab_size = 320;
        // The char strategy can only restore characters it has seen, so it
        // trains on the strings it is asked to round-trip.
        auto t = strategy == tok::Strategy::char_level ? char_tokenizer(texts)
                                                       : tok::Tokenizer::train(corpus, cfg);
        for (const auto& text : texts)
            require(t.decode(t.encode(text)) == text,
                    tok::to_string(strategy) + " failed to round-trip \"" + text + "\"");
    }
}

void char_perplexity_closed_form() {
    // Six characters that encode to three tokens under a 1/4-per-token
    // scorer: exp(3 * log 4 / 6) = 2.
    tok::TrainConfig cfg;
    cfg.strategy = tok::Strategy::bpe_default;
    auto tokenizer = tok::Tokenizer::train({"aa aa"}, cfg);
    require(tokenizer.encode("aaaaaa").size() == 3, "fixture must encode to 3 tokens");

    UniformModel quarter(4);
    corpus::Document doc{"d", "en", corpus::Source::web, "aaaaaa"};
    auto s = ppl::score_document(quarter, tokenizer, doc);
    require(s.chars == 6 && s.tokens == 3, "fixture char/token counts are off");
    require(std::abs(s.char_ppl() - 2.0) < 1e-12, "char perplexity is not 2.0");

    // Token perplexity of any uniform scorer is its vocabulary size.
    std::mt19937_64 rng(103);
    static const char* pool[] = {"ab", "cd", "ef", "gh", "xy"};
    for (int trial = 0; trial < 100; ++trial) {
        int v = 2 + static_cast<int>(util::bounded_uint(rng, 60));
        std::string text;
        std::size_t n = 1 + util::bounded_uint(rng, 12);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) text += ' ';
            text += pool[util::bounded_uint(rng, 5)];
        }
        auto t = char_tokenizer({text});
        UniformModel u(v);
        corpus::Document random_doc{"d", "en", corpus::Source::web, text};
        auto ds = ppl::score_document(u, t, random_doc);
        require(std::abs(ds.token_ppl() - static_cast<double>(v)) <=
                    1e-12 * static_cast<double>(v),
                "token perplexity differs from the vocabulary size");
    }
}

void distributions_normalized() {
    auto check_model = [](const score::ScoringModel& model, std::mt19937_64& rng,
                          std::size_t max_ctx, double tol, const std::string& name) {
        for (int trial = 0; trial < 1000; ++trial) {
            auto ctx = random_ids(rng, model.vocab_size(), util::bounded_uint(rng, max_ctx + 1));
            auto lp = model.next_log_probs(ctx);
            require(lp.size() == static_cast<std::size_t>(model.vocab_size()),
                    name + ": wrong distribution size");
            double sum = 0.0;
            for (double v : lp) {
                require(std::isfinite(v), name + ": non-finite log probability");
                double pr = std::exp(v);
                require(pr >= 0.0, name + ": negative probability");
                sum += pr;
            }
            require(std::abs(sum - 1.0) < tol, name + ": distribution does not sum to 1");
        }
    };

    std::mt19937_64 rng(107);
    std::vector<std::vector<int>> sequences;
    for (int s = 0; s < 40; ++s) sequences.push_back(random_ids(rng, 50, 30));
    auto ngram = score::NGramModel::train(sequences, 50, score::NGramConfig{});
    check_model(ngram, rng, 6, 1e-9, "ngram");

    score::Transformer transformer(toy_config());
    check_model(transformer, rng, 15, 1e-6, "transformer");
}

void gradient_check() {
    score::Transformer model(toy_config());
    std::mt19937_64 rng(67);
    auto ids = random_ids(rng, 32, 10);

    std::vector<double> grad;
    model.loss_and_grad(ids, grad);
    require(grad.size() == model.param_count(), "gradient size mismatch");

    const double eps = 1e-5;
    auto theta = model.flat_params();
    double max_rel = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        auto bumped = theta;
        bumped[i] = theta[i] + eps;
        model.set_flat_params(bumped);
        double up = model.loss(ids);
        bumped[i] = theta[i] - eps;
        model.set_flat_params(bumped);
        double down = model.loss(ids);
        double numeric = (up - down) / (2.0 * eps);
        // Floor the denominator above the ~1e-11 central-difference noise so
        // near-zero gradients don't report spurious relative error.
        double denom = std::max(1e-6, std::abs(grad[i]) + std::abs(numeric));
        max_rel = std::max(max_rel, std::abs(grad[i] - numeric) / denom);
    }
    require(max_rel < 1e-4,
            "max relative gradient error " + std::to_string(max_rel) + " over " +
                std::to_string(theta.size()) + " parameters");
}

void attention_equivalence_and_causality() {
    // Full-width band: every banded layer sees the whole causal prefix, so
    // the model must match an independently coded all-dense forward.
    auto cfg = toy_config();
    cfg.window = cfg.max_seq;
    score::Transformer full(cfg);
    DenseOracle oracle(cfg, full.flat_params());
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 12; ++trial) {
        auto ctx = random_ids(rng, 32, 1 + util::bounded_uint(rng, 14));
        auto got = full.next_log_probs(ctx);
        auto want = oracle.next_log_probs(ctx);
        for (std::size_t j = 0; j < got.size(); ++j)
            require(std::abs(got[j] - want[j]) < 1e-9, "banded/dense logit divergence");
    }

    // Causality at machine precision: scoring token t inside one full-length
    // forward must equal scoring it from the prefix alone, where the later
    // tokens are physically absent. The identity also holds after perturbing
    // the tail, so earlier positions provably never read later ones.
    for (int window : {16, 3}) {
        auto wcfg = toy_config();
        wcfg.window = window;
        score::Transformer model(wcfg);
        std::mt19937_64 wrng(71);
        for (int trial = 0; trial < 10; ++trial) {
            auto ids = random_ids(wrng, 32, 12);
            for (int variant = 0; variant < 2; ++variant) {
                if (variant == 1) ids.back() = (ids.back() + 7) % 32;
                double chained = 0.0;
                for (std::size_t t = 0; t < ids.size(); ++t) {
                    std::vector<int> prefix(ids.begin(),
                                            ids.begin() + static_cast<std::ptrdiff_t>(t));
                    chained += model.next_log_probs(prefix)[static_cast<std::size_t>(ids[t])];
                }
                require(model.sequence_log_prob(ids) == chained,
                        "full-sequence score is not the exact chain of prefix scores");
                require(model.loss(ids) == -chained / static_cast<double>(ids.size()),
                        "loss is not the exact mean of chained scores");
            }
        }
    }
}

void classification_matches_enumerator() {
    static const char* premises[] = {
        "the cat sleeps", "a dog barks",     "rain falls",      "birds sing",  "the sun rises",
        "kids play",      "the train left",  "she reads books", "he cooks",    "waves crash"};
    static const char* hypotheses[] = {
        "the cat rests",   "a dog is loud",  "water drops",   "music plays", "morning came",
        "children laugh",  "travel happened", "pages turn",   "food is made", "the sea moves",
        "nothing happens", "it is quiet",    "days go by",    "light fades", "work is done",
        "games end",       "words matter",   "heat rises",    "time passes", "stars shine"};

    std::vector<std::string> corpus = {"<s></s>, right? Yes Also No"};
    for (const char* p : premises) corpus.emplace_back(p);
    for (const char* h : hypotheses) corpus.emplace_back(h);
    auto tokenizer = char_tokenizer(corpus);

    std::vector<std::vector<int>> sequences;
    for (const auto& text : corpus) sequences.push_back(tokenizer.encode(text));
    auto model =
        score::NGramModel::train(sequences, static_cast<int>(tokenizer.vocab_size()),
                                 score::NGramConfig{});

    eval::ClassificationTask task;
    task.prompt_template = "<s>{premise}, right? {mask}, {hypothesis}</s>";
    task.verbalizers = {"Yes", "Also", "No"};
    for (int i = 0; i < 200; ++i) {
        eval::ClassificationExample ex;
        ex.fields["premise"] = premises[i % 10];
        ex.fields["hypothesis"] = hypotheses[(i / 10) % 20];
        ex.label = i % 3;
        task.examples.push_back(ex);
    }

    eval::ClassificationOptions options;
    options.workers = 2;
    auto result = eval::classify(model, tokenizer, task, options);
    require(result.predicted.size() == 200, "wrong number of predictions");

    // Brute-force enumerator: chain per-token probabilities independently and
    // keep the earliest lowest-loss verbalizer.
    for (std::size_t i = 0; i < task.examples.size(); ++i) {
        int best = -1;
        double best_nll = 0.0;
        for (std::size_t v = 0; v < task.verbalizers.size(); ++v) {
            auto fields = task.examples[i].fields;
            fields["mask"] = task.verbalizers[v];
            auto ids = tokenizer.encode(eval::render_template(task.prompt_template, fields));
            double nll = 0.0;
            for (std::size_t t = 0; t < ids.size(); ++t) {
                std::vector<int> prefix(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(t));
                nll -= model.next_log_probs(prefix)[static_cast<std::size_t>(ids[t])];
            }
            if (best < 0 || nll < best_nll) {
                best_nll = nll;
                best = static_cast<int>(v);
            }
        }
        require(result.predicted[i] == best,
                "classify() disagrees with the enumerator on example " + std::to_string(i));
    }
}

void labeling_prefixes_and_oracle() {
    std::vector<std::string> words = {"I", "want", "to", "go", "near", "the", "cafeteria", "."};
    require(eval::tag_query_prefix("en", words, {}, 0) ==
                "<s>lang: en \n Tagged sentence:  I_",
            "first-word query prefix mismatch");
    require(eval::tag_query_prefix("en", words, {"PRON"}, 1) ==
                "<s>lang: en \n Tagged sentence: I_PRON want_",
            "second-word query prefix mismatch");

    eval::LabelingTask task;
    task.lang = "en";
    task.tagset = {"ADP", "DET", "NOUN", "PART", "PRON", "PUNCT", "VERB"};
    // Each word carries a single tag so the dictionary scorer can be perfect.
    task.examples.push_back({words, {"PRON", "VERB", "PART", "VERB", "ADP", "DET", "NOUN",
                                     "PUNCT"}});
    task.examples.push_back({{"I", "want", "the", "cafeteria", "."},
                             {"PRON", "VERB", "DET", "NOUN", "PUNCT"}});

    std::map<std::string, std::string> dict;
    for (const auto& ex : task.examples)
        for (std::size_t i = 0; i < ex.words.size(); ++i) dict[ex.words[i]] = ex.tags[i];

    std::vector<std::string> vocab_text = {"<s>lang: en \n Tagged sentence: </s>_"};
    for (const auto& [w, t] : dict) vocab_text.push_back(w + " " + t);
    auto tokenizer = char_tokenizer(vocab_text);

    // Candidates end in "... word_TAG"; reward the dictionary pairing.
    TextModel oracle(tokenizer, [&dict](const std::string& text) {
        auto us = text.rfind('_');
        auto ws = text.rfind(' ', us);
        std::string word = text.substr(ws + 1, us - ws - 1);
        std::string tag = text.substr(us + 1);
        auto it = dict.find(word);
        return it != dict.end() && it->second == tag ? 0.0 : -100.0;
    });

    auto result = eval::label_task(oracle, tokenizer, task);
    require(result.tag_precision == 1.0, "dictionary oracle should tag perfectly");
    require(result.predicted[0] == task.examples[0].tags &&
                result.predicted[1] == task.examples[1].tags,
            "oracle predictions differ from gold tags");
}

void probing_oracle_and_chance() {
    static const char* objects[] = {"Paris", "Rome", "Oslo", "Cairo", "Lima", "Quito"};

    eval::ProbeTask task;
    task.seed = 11;
    for (int i = 0; i < 30; ++i) {
        eval::ProbeExample ex;
        ex.relation = "capital";
        ex.prompt_template = "The capital of {subject} is {object}.";
        ex.subject = "country" + std::to_string(i);
        ex.object = objects[i % 6];
        task.examples.push_back(ex);
    }
    auto tokenizer =
        char_tokenizer({"The capital of country0123456789 is ParisRomeOsloCairoLimaQuito."});

    TextModel oracle(tokenizer, [&](const std::string& text) {
        for (int i = 0; i < 30; ++i) {
            std::string want = "The capital of country" + std::to_string(i) + " is " +
                               objects[i % 6] + ".";
            if (text == want) return 0.0;
        }
        return -50.0;
    });
    auto known = eval::probe(oracle, tokenizer, task);
    require(known.accuracy == 1.0, "gold-pairing oracle should rank perfectly");

    // An indifferent scorer ties every candidate, the earliest shuffled one
    // wins, and the gold filler is first a third of the time.
    eval::ProbeTask big;
    big.seed = 13;
    for (int i = 0; i < 10000; ++i) {
        eval::ProbeExample ex;
        ex.relation = "capital";
        ex.prompt_template = "{subject} {object}";
        ex.subject = "s";
        ex.object = objects[i % 6];
        big.examples.push_back(ex);
    }
    TextModel flat(tokenizer, [](const std::string&) { return 0.0; });
    auto chance = eval::probe(flat, tokenizer, big);
    require(std::abs(chance.accuracy - 1.0 / 3.0) <= 0.02,
            "indifferent scorer accuracy " + std::to_string(chance.accuracy) +
                " is not within 0.02 of 1/3");
}

void metrics_match_oracles() {
    std::mt19937_64 rng(109);

    // Hand-derived cases first.
    require(metrics::accuracy({1, 2, 3, 4}, {1, 0, 3, 0}) == 0.5, "accuracy hand case");
    require(std::abs(metrics::tag_precision({"A", "B", "C"}, {"A", "X", "C"}) - 2.0 / 3.0) <
                1e-12,
            "tag precision hand case");
    auto prf = metrics::entity_micro_f1({"I-PER", "I-LOC", "O", "O"},
                                        {"I-PER", "I-LOC", "I-ORG", "O"});
    require(prf.precision == 1.0 && std::abs(prf.recall - 2.0 / 3.0) < 1e-12 &&
                std::abs(prf.f1 - 0.8) < 1e-12,
            "entity F1 hand case");
    require(metrics::exact_match("An Answer!", {"answer", "other"}) == 1.0, "EM hand case");
    require(std::abs(metrics::token_f1("x y z", {"y z w"}) - 2.0 / 3.0) < 1e-12,
            "token F1 hand case");
    require(std::abs(metrics::bleu({"u v w x"}, {{"u v w x"}}) - 1.0) < 1e-12,
            "BLEU identity hand case");
    require(std::abs(metrics::rouge_l({"u v w x"}, {{"u v x w"}}) - 0.75) < 1e-12,
            "ROUGE-L hand case");

    static const char* tags[] = {"O", "I-PER", "I-LOC", "I-ORG"};
    static const char* plain[] = {"u", "v", "w", "uv", "x"};
    static const char* noisy[] = {"The", "quick?", "fox,", "a",     "An!",
                                  "THE", "jumps",  "over.", "lazy", "dogs"};
    auto sentence = [&rng](const char* const* pool, std::size_t pool_n, std::size_t max_len) {
        std::string out;
        std::size_t n = util::bounded_uint(rng, max_len + 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out += ' ';
            out += pool[util::bounded_uint(rng, pool_n)];
        }
        return out;
    };

    for (int trial = 0; trial < 1000; ++trial) {
        // accuracy / tag precision: recount position agreements.
        std::size_t n = 1 + util::bounded_uint(rng, 30);
        std::vector<int> pi(n), gi(n);
        std::vector<std::string> pt(n), gt(n);
        std::size_t agree_i = 0, agree_t = 0;
        long long tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            pi[i] = static_cast<int>(util::bounded_uint(rng, 4));
            gi[i] = static_cast<int>(util::bounded_uint(rng, 4));
            if (pi[i] == gi[i]) ++agree_i;
            pt[i] = tags[util::bounded_uint(rng, 4)];
            gt[i] = tags[util::bounded_uint(rng, 4)];
            if (pt[i] == gt[i]) ++agree_t;
            if (pt[i] != "O" && pt[i] == gt[i])
                ++tp;
            else {
                if (pt[i] != "O") ++fp;
                if (gt[i] != "O") ++fn;
            }
        }
        require(std::abs(metrics::accuracy(pi, gi) -
                         static_cast<double>(agree_i) / static_cast<double>(n)) < 1e-12,
                "accuracy diverged from the recount");
        require(std::abs(metrics::tag_precision(pt, gt) -
                         static_cast<double>(agree_t) / static_cast<double>(n)) < 1e-12,
                "tag precision diverged from the recount");
        auto got = metrics::entity_micro_f1(pt, gt);
        double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        double f1 = prec + rec == 0.0 ? 0.0 : 2 * prec * rec / (prec + rec);
        require(std::abs(got.f1 - f1) < 1e-12, "entity F1 diverged from the recount");

        // EM through an independent ASCII normalizer.
        std::string pred = sentence(noisy, 10, 5);
        std::vector<std::string> refs;
        std::size_t nr = 1 + util::bounded_uint(rng, 3);
        for (std::size_t r = 0; r < nr; ++r) refs.push_back(sentence(noisy, 10, 5));
        double em = 0.0;
        for (const auto& r : refs)
            if (ascii_normalize(pred) == ascii_normalize(r)) em = 1.0;
        require(metrics::exact_match(pred, refs) == em, "exact match diverged from the oracle");

        // token F1 / BLEU / ROUGE-L on an already-normalized vocabulary.
        pred = sentence(plain, 5, 6);
        refs.clear();
        nr = 1 + util::bounded_uint(rng, 3);
        for (std::size_t r = 0; r < nr; ++r) refs.push_back(sentence(plain, 5, 6));
        double best = 0.0;
        for (const auto& r : refs)
            best = std::max(best, oracle_token_f1_pair(words_of(pred), words_of(r)));
        require(std::abs(metrics::token_f1(pred, refs) - best) < 1e-12,
                "token F1 diverged from the oracle");

        std::vector<std::string> preds;
        std::vector<std::vector<std::string>> ref_sets;
        std::size_t ne = 1 + util::bounded_uint(rng, 3);
        for (std::size_t e = 0; e < ne; ++e) {
            preds.push_back(sentence(plain, 5, 8));
            std::vector<std::string> rs;
            std::size_t k = 1 + util::bounded_uint(rng, 2);
            for (std::size_t r = 0; r < k; ++r) rs.push_back(sentence(plain, 5, 8));
            ref_sets.push_back(rs);
        }
        double want_bleu = oracle_bleu(preds, ref_sets, 4);
        require(std::abs(metrics::bleu(preds, ref_sets) - want_bleu) <=
                    1e-12 * std::max(1.0, want_bleu),
                "BLEU diverged from the oracle");
        double want_rouge = oracle_rouge_l(preds, ref_sets);
        require(std::abs(metrics::rouge_l(preds, ref_sets) - want_rouge) < 1e-12,
                "ROUGE-L diverged from the oracle");
    }
}

// Shared by the pipeline and determinism criteria: build the planted corpus,
// run the cleaning pipeline, assert the drops, and return the serialized
// decision report.
std::string pipeline_report() {
    static const char* pool[] = {"stream", "valley", "copper", "meadow", "harbor", "signal",
                                 "lantern", "orchard", "timber", "quarry", "market", "garden",
                                 "bridge", "castle", "forest", "meteor", "anchor", "barrel",
                                 "candle", "dancer"};
    std::mt19937_64 rng(404);
    std::vector<corpus::Document> docs;
    std::set<std::string> planted;

    for (int i = 0; i < 8200; ++i) {
        corpus::Document d;
        d.id = "base-" + std::to_string(i);
        d.lang = i % 3 == 0 ? "en" : (i % 3 == 1 ? "ru" : "el");
        d.source = i % 4 == 0 ? corpus::Source::wiki : corpus::Source::web;
        std::string text;
        for (int w = 0; w < 70; ++w) {
            if (w) text += ' ';
            text += pool[util::bounded_uint(rng, 20)];
        }
        d.text = text + " #" + std::to_string(i);
        docs.push_back(std::move(d));
    }
    for (int i = 0; i < 150; ++i) {
        corpus::Document d;
        d.id = "low-" + std::to_string(i);
        d.lang = "en";
        d.text = std::string(500, 'z') + " #" + std::to_string(i);
        planted.insert(d.id);
        docs.push_back(std::move(d));
    }
    for (int i = 0; i < 150; ++i) {
        corpus::Document d;
        d.id = "high-" + std::to_string(i);
        d.lang = "en";
        std::string text;
        for (int c = 0; c < 600; ++c)
            text += static_cast<char>(33 + util::bounded_uint(rng, 94));
        d.text = text;
        planted.insert(d.id);
        docs.push_back(std::move(d));
    }
    for (int i = 0; i < 1500; ++i) {
        corpus::Document d;
        d.id = "dup-" + std::to_string(i);
        d.lang = docs[static_cast<std::size_t>(i)].lang;
        d.text = docs[static_cast<std::size_t>(i)].text;
        docs.push_back(std::move(d));
    }
    require(docs.size() == 10000, "fixture should hold 10,000 documents");
    util::shuffle(docs, rng);

    corpus::PipelineConfig cfg;
    cfg.order = {corpus::Stage::dedup, corpus::Stage::entropy};
    cfg.entropy.low_quantile = 0.02;
    cfg.entropy.high_quantile = 0.98;
    cfg.entropy.workers = 4;
    cfg.workers = 4;
    auto result = corpus::run_pipeline(docs, cfg);

    require(result.decisions.size() == docs.size(), "one decision per input document");
    std::size_t dup = 0, entropy = 0, kept = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto& d = result.decisions[i];
        require(d.doc_id == docs[i].id, "decisions must follow input order");
        if (d.verdict == corpus::Verdict::drop_duplicate) ++dup;
        if (d.verdict == corpus::Verdict::drop_entropy) ++entropy;
        if (d.verdict == corpus::Verdict::keep) ++kept;
        if (planted.count(d.doc_id))
            require(d.verdict == corpus::Verdict::drop_entropy,
                    "planted outlier " + d.doc_id + " was not dropped by the entropy filter");
    }
    require(dup == 1500, "expected exactly 1,500 duplicate drops, saw " + std::to_string(dup));
    require(entropy >= 300, "entropy filter missed planted outliers");
    require(dup + entropy + kept == docs.size(), "verdicts must partition the corpus");
    require(result.kept.size() == kept, "kept set size must match keep verdicts");
    for (const auto& d : result.kept)
        require(!planted.count(d.id), "planted outlier survived the pipeline");

    auto path = std::filesystem::temp_directory_path() / "acceptance_decisions.jsonl";
    jsonl::write_decisions(path.string(), result.decisions);
    auto bytes = read_file(path.string());
    std::filesystem::remove(path);
    return bytes;
}

// Shared by the comparison and determinism criteria: run the five-strategy
// held-out comparison on the bundled corpus and return the formatted table.
std::string comparison_report() {
    auto docs =
        jsonl::read_documents(std::string(LMKIT_SOURCE_DIR) + "/data/mini_corpus.jsonl");
    require(!docs.empty(), "bundled corpus is missing or empty");

    ppl::CompareConfig cfg;
    cfg.workers = 4;
    auto rows = ppl::compare_strategies(docs, cfg);
    require(rows.size() == 5, "expected one row per strategy");

    const double references[] = {6.94, 8.13, 7.99, 8.43, 9.47};
    auto order = tok::all_strategies();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i].strategy == order[i], "rows must follow the canonical strategy order");
        require(std::isfinite(rows[i].char_ppl) && rows[i].char_ppl > 0.0,
                tok::to_string(rows[i].strategy) + " perplexity is not finite and positive");
        require(rows[i].reference == references[i], "published reference column mismatch");
    }
    return ppl::format_comparison(rows);
}

std::string g_pipeline_bytes;
std::string g_comparison_table;

void pipeline_fixture() { g_pipeline_bytes = pipeline_report(); }

void strategy_comparison() {
    g_comparison_table = comparison_report();
    std::fputs(g_comparison_table.c_str(), stdout);
}

void determinism() {
    require(pipeline_report() == g_pipeline_bytes,
            "pipeline decision report changed between identical runs");
    require(comparison_report() == g_comparison_table,
            "strategy comparison table changed between identical runs");
}

void carbon_estimate() {
    report::CarbonConfig cfg;
    cfg.pue = 1.3;
    cfg.intensity_g_per_kwh = 400.0;
    require(std::abs(report::co2_kg(100.0, cfg) - 52.0) < 1e-12,
            "100 kWh at PUE 1.3 and 400 g/kWh must give 52 kg");
    require(report::co2_kg(0.0, cfg) == 0.0, "zero energy must give zero emissions");

    std::mt19937_64 rng(131);
    for (int trial = 0; trial < 300; ++trial) {
        report::CarbonConfig c;
        c.pue = 1.0 + util::uniform01(rng);
        c.intensity_g_per_kwh = 1.0 + 999.0 * util::uniform01(rng);
        double e = 1.0 + 1e6 * util::uniform01(rng);
        double a = 0.1 + 9.9 * util::uniform01(rng);

        double scaled = report::co2_kg(a * e, c);
        require(std::abs(scaled - a * report::co2_kg(e, c)) <= 1e-9 * std::abs(scaled),
                "emissions are not linear in energy");

        auto doubled = c;
        doubled.intensity_g_per_kwh *= 2.0;
        require(std::abs(report::co2_kg(e, doubled) - 2.0 * report::co2_kg(e, c)) <=
                    1e-9 * report::co2_kg(e, doubled),
                "emissions are not linear in grid intensity");

        double back = report::energy_kwh_from_co2(report::co2_kg(e, c), c);
        require(std::abs(back - e) <= 1e-9 * e, "energy inversion does not round-trip");
    }
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* description;
        double budget_s;  // 0 = untimed
        std::function<void()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "all five strategies reproduce the reference tokenization", 1.0,
         golden_tokenization},
        {2, "decode(encode(t)) restores 1,000 random strings per strategy", 30.0, round_trip},
        {3, "uniform scorer: char perplexity 2.0, token perplexity = V", 0.0,
         char_perplexity_closed_form},
        {4, "next-token distributions are normalized on both backends", 0.0,
         distributions_normalized},
        {5, "analytic gradients match finite differences on every parameter", 120.0,
         gradient_check},
        {6, "full-width band equals dense attention; causality is exact", 0.0,
         attention_equivalence_and_causality},
        {7, "classify() matches a chained-probability enumerator, 200 examples", 0.0,
         classification_matches_enumerator},
        {8, "tagging prefixes match the documented format; oracle precision 1.0", 0.0,
         labeling_prefixes_and_oracle},
        {9, "probing: oracle scorer perfect, indifferent scorer at chance 1/3", 0.0,
         probing_oracle_and_chance},
        {10, "metrics match independent reimplementations on random instances", 0.0,
         metrics_match_oracles},
        {11, "pipeline drops exactly the planted duplicates and entropy outliers", 30.0,
         pipeline_fixture},
        {12, "strategy comparison on the bundled corpus: five finite results", 300.0,
         strategy_comparison},
        {13, "reruns of the pipeline and comparison are byte-identical", 0.0, determinism},
        {14, "carbon estimate: 100 kWh -> 52 kg and linear throughout", 0.0, carbon_estimate},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        if (error.empty() && c.budget_s > 0.0 && secs > c.budget_s)
            error = "exceeded the " + std::to_string(c.budget_s) + "s budget";
        if (error.empty()) {
            std::printf("PASS criterion %2d: %s (%.1fs)\n", c.number, c.description, secs);
        } else {
            std::printf("FAIL criterion %2d: %s (%.1fs) -- %s\n", c.number, c.description, secs,
                        error.c_str());
            ++failed;
        }
        std::fflush(stdout);
    }
    if (failed) std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
