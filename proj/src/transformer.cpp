#include "lmkit/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lmkit/util.hpp"

namespace lmkit::score {

namespace {

constexpr double kLnEps = 1e-5;

double gelu(double z) {
    return 0.5 * z * (1.0 + std::erf(z / std::sqrt(2.0)));
}

double gelu_grad(double z) {
    return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))) +
           z * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
}

void linear_fwd(const double* x, const double* w, const double* b, int t_len, int nin, int nout,
                double* y) {
    for (int t = 0; t < t_len; ++t) {
        double* yt = y + static_cast<std::size_t>(t) * nout;
        for (int o = 0; o < nout; ++o) yt[o] = b ? b[o] : 0.0;
        const double* xt = x + static_cast<std::size_t>(t) * nin;
        for (int i = 0; i < nin; ++i) {
            double xv = xt[i];
            const double* wrow = w + static_cast<std::size_t>(i) * nout;
            for (int o = 0; o < nout; ++o) yt[o] += xv * wrow[o];
        }
    }
}

// dx accumulates; dw/db accumulate. dx/db may be null.
void linear_bwd(const double* x, const double* w, const double* dy, int t_len, int nin, int nout,
                double* dx, double* dw, double* db) {
    for (int t = 0; t < t_len; ++t) {
        const double* dyt = dy + static_cast<std::size_t>(t) * nout;
        const double* xt = x + static_cast<std::size_t>(t) * nin;
        if (db)
            for (int o = 0; o < nout; ++o) db[o] += dyt[o];
        for (int i = 0; i < nin; ++i) {
            const double* wrow = w + static_cast<std::size_t>(i) * nout;
            double* dwrow = dw + static_cast<std::size_t>(i) * nout;
            double acc = 0.0;
            double xv = xt[i];
            for (int o = 0; o < nout; ++o) {
                acc += dyt[o] * wrow[o];
                dwrow[o] += xv * dyt[o];
            }
            if (dx) dx[static_cast<std::size_t>(t) * nin + i] += acc;
        }
    }
}

void ln_fwd(const double* x, const double* g, const double* b, int t_len, int dim, double* y,
            double* mean, double* rstd) {
    for (int t = 0; t < t_len; ++t) {
        const double* xt = x + static_cast<std::size_t>(t) * dim;
        double mu = 0.0;
        for (int i = 0; i < dim; ++i) mu += xt[i];
        mu /= dim;
        double var = 0.0;
        for (int i = 0; i < dim; ++i) var += (xt[i] - mu) * (xt[i] - mu);
        var /= dim;
        double r = 1.0 / std::sqrt(var + kLnEps);
        mean[t] = mu;
        rstd[t] = r;
        double* yt = y + static_cast<std::size_t>(t) * dim;
        for (int i = 0; i < dim; ++i) yt[i] = g[i] * (xt[i] - mu) * r + b[i];
    }
}

// dx accumulates; dg/db accumulate.
void ln_bwd(const double* x, const double* g, const double* mean, const double* rstd,
            const double* dy, int t_len, int dim, double* dx, double* dg, double* db) {
    for (int t = 0; t < t_len; ++t) {
        const double* xt = x + static_cast<std::size_t>(t) * dim;
        const double* dyt = dy + static_cast<std::size_t>(t) * dim;
        double mu = mean[t], r = rstd[t];
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            double xhat = (xt[i] - mu) * r;
            double dyh = dyt[i] * g[i];
            s1 += dyh;
            s2 += dyh * xhat;
            dg[i] += dyt[i] * xhat;
            db[i] += dyt[i];
        }
        s1 /= dim;
        s2 /= dim;
        double* dxt = dx + static_cast<std::size_t>(t) * dim;
        for (int i = 0; i < dim; ++i) {
            double xhat = (xt[i] - mu) * r;
            dxt[i] += r * (dyt[i] * g[i] - s1 - xhat * s2);
        }
    }
}

}  // namespace

struct Transformer::Cache {
    std::vector<int> input;
    struct Layer {
        std::vector<double> x_in, ln1_out, ln1_mean, ln1_rstd;
        std::vector<double> q, k, v, att_p, att_concat, att_proj;
        std::vector<double> x_mid, ln2_out, ln2_mean, ln2_rstd;
        std::vector<double> ff_pre, ff_act, ff_out;
    };
    std::vector<Layer> layers;
    std::vector<double> x_final, lnf_out, lnf_mean, lnf_rstd;
    std::vector<double> log_probs;  // T x V
};

void Transformer::compute_offsets() {
    std::size_t d = static_cast<std::size_t>(cfg_.d_model);
    std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
    std::size_t s = static_cast<std::size_t>(cfg_.max_seq);
    std::size_t f = 4 * d;
    std::size_t p = 0;
    off_.tok_emb = p;
    p += v * d;
    off_.pos_emb = p;
    p += s * d;
    off_.layers.resize(static_cast<std::size_t>(cfg_.n_layers));
    for (auto& l : off_.layers) {
        l.ln1_g = p; p += d;
        l.ln1_b = p; p += d;
        l.wq = p; p += d * d;
        l.bq = p; p += d;
        l.wk = p; p += d * d;
        l.bk = p; p += d;
        l.wv = p; p += d * d;
        l.bv = p; p += d;
        l.wo = p; p += d * d;
        l.bo = p; p += d;
        l.ln2_g = p; p += d;
        l.ln2_b = p; p += d;
        l.w1 = p; p += d * f;
        l.b1 = p; p += f;
        l.w2 = p; p += f * d;
        l.b2 = p; p += d;
    }
    off_.lnf_g = p; p += d;
    off_.lnf_b = p; p += d;
    off_.w_out = p; p += d * v;
    off_.total = p;
}

Transformer::Transformer(const TransformerConfig& cfg) : cfg_(cfg) {
    if (cfg.vocab_size < 2) throw std::invalid_argument("transformer: vocab_size must be >= 2");
    if (cfg.d_model < 1 || cfg.n_layers < 1 || cfg.n_heads < 1)
        throw std::invalid_argument("transformer: bad dimensions");
    if (cfg.d_model % cfg.n_heads != 0)
        throw std::invalid_argument("transformer: d_model must divide evenly into heads");
    if (cfg.max_seq < 2) throw std::invalid_argument("transformer: max_seq must be >= 2");
    if (cfg.window < 1) throw std::invalid_argument("transformer: window must be >= 1");
    if (cfg.bos_id < 0 || cfg.bos_id >= cfg.vocab_size)
        throw std::invalid_argument("transformer: bos_id out of range");

    compute_offsets();
    params_.assign(off_.total, 0.0);

    // Box-Muller over the shared 53-bit uniform keeps init byte-identical
    // across standard libraries.
    std::mt19937_64 rng(cfg.seed);
    auto normal02 = [&rng]() {
        double u1 = util::uniform01(rng);
        double u2 = util::uniform01(rng);
        if (u1 < 1e-300) u1 = 1e-300;
        return 0.02 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    auto fill_normal = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) params_[off + i] = normal02();
    };
    auto fill_ones = [&](std::size_t off, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) params_[off + i] = 1.0;
    };

    std::size_t d = static_cast<std::size_t>(cfg_.d_model);
    std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
    std::size_t s = static_cast<std::size_t>(cfg_.max_seq);
    std::size_t f = 4 * d;
    fill_normal(off_.tok_emb, v * d);
    fill_normal(off_.pos_emb, s * d);
    for (const auto& l : off_.layers) {
        fill_ones(l.ln1_g, d);
        fill_normal(l.wq, d * d);
        fill_normal(l.wk, d * d);
        fill_normal(l.wv, d * d);
        fill_normal(l.wo, d * d);
        fill_ones(l.ln2_g, d);
        fill_normal(l.w1, d * f);
        fill_normal(l.w2, f * d);
    }
    fill_ones(off_.lnf_g, d);
    fill_normal(off_.w_out, d * v);
}

void Transformer::forward(const std::vector<int>& input, Cache& cache) const {
    int t_len = static_cast<int>(input.size());
    if (t_len < 1 || t_len > cfg_.max_seq)
        throw std::invalid_argument("transformer: input length out of range");
    int d = cfg_.d_model, v = cfg_.vocab_size, heads = cfg_.n_heads;
    int dh = d / heads;
    int f = 4 * d;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const double* p = params_.data();

    cache.input = input;
    cache.layers.resize(static_cast<std::size_t>(cfg_.n_layers));

    std::vector<double> x(static_cast<std::size_t>(t_len) * d);
    for (int t = 0; t < t_len; ++t) {
        int id = input[static_cast<std::size_t>(t)];
        if (id < 0 || id >= v) throw std::invalid_argument("transformer: token id out of range");
        const double* te = p + off_.tok_emb + static_cast<std::size_t>(id) * d;
        const double* pe = p + off_.pos_emb + static_cast<std::size_t>(t) * d;
        for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(t) * d + i] = te[i] + pe[i];
    }

    for (int l = 0; l < cfg_.n_layers; ++l) {
        auto& lc = cache.layers[static_cast<std::size_t>(l)];
        const auto& lo = off_.layers[static_cast<std::size_t>(l)];
        lc.x_in = x;
        lc.ln1_out.resize(x.size());
        lc.ln1_mean.resize(static_cast<std::size_t>(t_len));
        lc.ln1_rstd.resize(static_cast<std::size_t>(t_len));
        ln_fwd(lc.x_in.data(), p + lo.ln1_g, p + lo.ln1_b, t_len, d, lc.ln1_out.data(),
               lc.ln1_mean.data(), lc.ln1_rstd.data());

        lc.q.resize(x.size());
        lc.k.resize(x.size());
        lc.v.resize(x.size());
        linear_fwd(lc.ln1_out.data(), p + lo.wq, p + lo.bq, t_len, d, d, lc.q.data());
        linear_fwd(lc.ln1_out.data(), p + lo.wk, p + lo.bk, t_len, d, d, lc.k.data());
        linear_fwd(lc.ln1_out.data(), p + lo.wv, p + lo.bv, t_len, d, d, lc.v.data());

        bool banded = layer_is_banded(l);
        lc.att_p.assign(static_cast<std::size_t>(heads) * t_len * t_len, 0.0);
        lc.att_concat.assign(x.size(), 0.0);
        for (int h = 0; h < heads; ++h) {
            int hd = h * dh;
            for (int t = 0; t < t_len; ++t) {
                int lo_u = banded ? std::max(0, t - cfg_.window + 1) : 0;
                double max_s = -1e300;
                std::vector<double> s(static_cast<std::size_t>(t - lo_u + 1));
                for (int u = lo_u; u <= t; ++u) {
                    double dot = 0.0;
                    const double* qt = lc.q.data() + static_cast<std::size_t>(t) * d + hd;
                    const double* ku = lc.k.data() + static_cast<std::size_t>(u) * d + hd;
                    for (int i = 0; i < dh; ++i) dot += qt[i] * ku[i];
                    s[static_cast<std::size_t>(u - lo_u)] = dot * scale;
                    max_s = std::max(max_s, dot * scale);
                }
                double z = 0.0;
                for (double& sv : s) {
                    sv = std::exp(sv - max_s);
                    z += sv;
                }
                double* prow =
                    lc.att_p.data() + (static_cast<std::size_t>(h) * t_len + t) * t_len;
                double* out = lc.att_concat.data() + static_cast<std::size_t>(t) * d + hd;
                for (int u = lo_u; u <= t; ++u) {
                    double pv = s[static_cast<std::size_t>(u - lo_u)] / z;
                    prow[u] = pv;
                    const double* vu = lc.v.data() + static_cast<std::size_t>(u) * d + hd;
                    for (int i = 0; i < dh; ++i) out[i] += pv * vu[i];
                }
            }
        }

        lc.att_proj.resize(x.size());
        linear_fwd(lc.att_concat.data(), p + lo.wo, p + lo.bo, t_len, d, d, lc.att_proj.data());
        lc.x_mid.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) lc.x_mid[i] = lc.x_in[i] + lc.att_proj[i];

        lc.ln2_out.resize(x.size());
        lc.ln2_mean.resize(static_cast<std::size_t>(t_len));
        lc.ln2_rstd.resize(static_cast<std::size_t>(t_len));
        ln_fwd(lc.x_mid.data(), p + lo.ln2_g, p + lo.ln2_b, t_len, d, lc.ln2_out.data(),
               lc.ln2_mean.data(), lc.ln2_rstd.data());

        lc.ff_pre.resize(static_cast<std::size_t>(t_len) * f);
        linear_fwd(lc.ln2_out.data(), p + lo.w1, p + lo.b1, t_len, d, f, lc.ff_pre.data());
        lc.ff_act.resize(lc.ff_pre.size());
        for (std::size_t i = 0; i < lc.ff_pre.size(); ++i) lc.ff_act[i] = gelu(lc.ff_pre[i]);
        lc.ff_out.resize(x.size());
        linear_fwd(lc.ff_act.data(), p + lo.w2, p + lo.b2, t_len, f, d, lc.ff_out.data());

        for (std::size_t i = 0; i < x.size(); ++i) x[i] = lc.x_mid[i] + lc.ff_out[i];
    }

    cache.x_final = x;
    cache.lnf_out.resize(x.size());
    cache.lnf_mean.resize(static_cast<std::size_t>(t_len));
    cache.lnf_rstd.resize(static_cast<std::size_t>(t_len));
    ln_fwd(cache.x_final.data(), p + off_.lnf_g, p + off_.lnf_b, t_len, d, cache.lnf_out.data(),
           cache.lnf_mean.data(), cache.lnf_rstd.data());

    cache.log_probs.resize(static_cast<std::size_t>(t_len) * v);
    std::vector<double> logits(static_cast<std::size_t>(v));
    for (int t = 0; t < t_len; ++t) {
        const double* yt = cache.lnf_out.data() + static_cast<std::size_t>(t) * d;
        for (int j = 0; j < v; ++j) logits[static_cast<std::size_t>(j)] = 0.0;
        for (int i = 0; i < d; ++i) {
            double yv = yt[i];
            const double* wrow = p + off_.w_out + static_cast<std::size_t>(i) * v;
            for (int j = 0; j < v; ++j) logits[static_cast<std::size_t>(j)] += yv * wrow[j];
        }
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double lg : logits) z += std::exp(lg - mx);
        double lse = mx + std::log(z);
        double* lp = cache.log_probs.data() + static_cast<std::size_t>(t) * v;
        for (int j = 0; j < v; ++j) lp[j] = logits[static_cast<std::size_t>(j)] - lse;
    }
}

void Transformer::backward(const Cache& cache, const std::vector<int>& targets, double weight,
                           std::vector<double>& grad) const {
    int t_len = static_cast<int>(cache.input.size());
    int d = cfg_.d_model, v = cfg_.vocab_size, heads = cfg_.n_heads;
    int dh = d / heads;
    int f = 4 * d;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const double* p = params_.data();
    double* g = grad.data();

    // Softmax cross entropy: dlogits = weight * (prob - onehot(target)).
    std::vector<double> dlogits(static_cast<std::size_t>(t_len) * v, 0.0);
    for (int t = 0; t < t_len; ++t) {
        if (targets[static_cast<std::size_t>(t)] < 0) continue;  // unweighted position
        const double* lp = cache.log_probs.data() + static_cast<std::size_t>(t) * v;
        double* dl = dlogits.data() + static_cast<std::size_t>(t) * v;
        for (int j = 0; j < v; ++j) dl[j] = weight * std::exp(lp[j]);
        dl[targets[static_cast<std::size_t>(t)]] -= weight;
    }

    std::vector<double> dlnf(static_cast<std::size_t>(t_len) * d, 0.0);
    linear_bwd(cache.lnf_out.data(), p + off_.w_out, dlogits.data(), t_len, d, v, dlnf.data(),
               g + off_.w_out, nullptr);

    std::vector<double> dx(static_cast<std::size_t>(t_len) * d, 0.0);
    ln_bwd(cache.x_final.data(), p + off_.lnf_g, cache.lnf_mean.data(), cache.lnf_rstd.data(),
           dlnf.data(), t_len, d, dx.data(), g + off_.lnf_g, g + off_.lnf_b);

    for (int l = cfg_.n_layers - 1; l >= 0; --l) {
        const auto& lc = cache.layers[static_cast<std::size_t>(l)];
        const auto& lo = off_.layers[static_cast<std::size_t>(l)];

        // dx is d(loss)/d(x_out); feed-forward path adds into dx_mid.
        std::vector<double> dff_act(static_cast<std::size_t>(t_len) * f, 0.0);
        linear_bwd(lc.ff_act.data(), p + lo.w2, dx.data(), t_len, f, d, dff_act.data(), g + lo.w2,
                   g + lo.b2);
        std::vector<double> dff_pre(dff_act.size());
        for (std::size_t i = 0; i < dff_act.size(); ++i)
            dff_pre[i] = dff_act[i] * gelu_grad(lc.ff_pre[i]);
        std::vector<double> dln2(static_cast<std::size_t>(t_len) * d, 0.0);
        linear_bwd(lc.ln2_out.data(), p + lo.w1, dff_pre.data(), t_len, d, f, dln2.data(),
                   g + lo.w1, g + lo.b1);
        std::vector<double> dx_mid = dx;  // residual branch
        ln_bwd(lc.x_mid.data(), p + lo.ln2_g, lc.ln2_mean.data(), lc.ln2_rstd.data(), dln2.data(),
               t_len, d, dx_mid.data(), g + lo.ln2_g, g + lo.ln2_b);

        // Attention path: x_mid = x_in + att_proj.
        std::vector<double> datt_concat(static_cast<std::size_t>(t_len) * d, 0.0);
        linear_bwd(lc.att_concat.data(), p + lo.wo, dx_mid.data(), t_len, d, d, datt_concat.data(),
                   g + lo.wo, g + lo.bo);

        bool banded = layer_is_banded(l);
        std::vector<double> dq(static_cast<std::size_t>(t_len) * d, 0.0);
        std::vector<double> dk(dq.size(), 0.0);
        std::vector<double> dv(dq.size(), 0.0);
        for (int h = 0; h < heads; ++h) {
            int hd = h * dh;
            for (int t = 0; t < t_len; ++t) {
                int lo_u = banded ? std::max(0, t - cfg_.window + 1) : 0;
                const double* prow =
                    lc.att_p.data() + (static_cast<std::size_t>(h) * t_len + t) * t_len;
                const double* dcat =
                    datt_concat.data() + static_cast<std::size_t>(t) * d + hd;
                double sdot = 0.0;
                std::vector<double> dp(static_cast<std::size_t>(t - lo_u + 1));
                for (int u = lo_u; u <= t; ++u) {
                    const double* vu = lc.v.data() + static_cast<std::size_t>(u) * d + hd;
                    double dpv = 0.0;
                    for (int i = 0; i < dh; ++i) dpv += dcat[i] * vu[i];
                    dp[static_cast<std::size_t>(u - lo_u)] = dpv;
                    sdot += prow[u] * dpv;
                    double* dvu = dv.data() + static_cast<std::size_t>(u) * d + hd;
                    for (int i = 0; i < dh; ++i) dvu[i] += prow[u] * dcat[i];
                }
                const double* qt = lc.q.data() + static_cast<std::size_t>(t) * d + hd;
                double* dqt = dq.data() + static_cast<std::size_t>(t) * d + hd;
                for (int u = lo_u; u <= t; ++u) {
                    double ds = prow[u] * (dp[static_cast<std::size_t>(u - lo_u)] - sdot) * scale;
                    const double* ku = lc.k.data() + static_cast<std::size_t>(u) * d + hd;
                    double* dku = dk.data() + static_cast<std::size_t>(u) * d + hd;
                    for (int i = 0; i < dh; ++i) {
                        dqt[i] += ds * ku[i];
                        dku[i] += ds * qt[i];
                    }
                }
            }
        }

        std::vector<double> dln1(static_cast<std::size_t>(t_len) * d, 0.0);
        linear_bwd(lc.ln1_out.data(), p + lo.wq, dq.data(), t_len, d, d, dln1.data(), g + lo.wq,
                   g + lo.bq);
        linear_bwd(lc.ln1_out.data(), p + lo.wk, dk.data(), t_len, d, d, dln1.data(), g + lo.wk,
                   g + lo.bk);
        linear_bwd(lc.ln1_out.data(), p + lo.wv, dv.data(), t_len, d, d, dln1.data(), g + lo.wv,
                   g + lo.bv);

        std::vector<double> dx_in = dx_mid;  // residual branch
        ln_bwd(lc.x_in.data(), p + lo.ln1_g, lc.ln1_mean.data(), lc.ln1_rstd.data(), dln1.data(),
               t_len, d, dx_in.data(), g + lo.ln1_g, g + lo.ln1_b);
        dx = std::move(dx_in);
    }

    for (int t = 0; t < t_len; ++t) {
        int id = cache.input[static_cast<std::size_t>(t)];
        double* dte = g + off_.tok_emb + static_cast<std::size_t>(id) * d;
        double* dpe = g + off_.pos_emb + static_cast<std::size_t>(t) * d;
        const double* dxt = dx.data() + static_cast<std::size_t>(t) * d;
        for (int i = 0; i < d; ++i) {
            dte[i] += dxt[i];
            dpe[i] += dxt[i];
        }
    }
}

std::vector<int> Transformer::clamp_input(const std::vector<int>& ids) const {
    std::size_t max_ctx = max_context();
    std::vector<int> input;
    input.reserve(std::min(ids.size(), max_ctx) + 1);
    input.push_back(cfg_.bos_id);
    std::size_t start = ids.size() > max_ctx ? ids.size() - max_ctx : 0;
    input.insert(input.end(), ids.begin() + static_cast<std::ptrdiff_t>(start), ids.end());
    return input;
}

std::vector<double> Transformer::next_log_probs(const std::vector<int>& ctx) const {
    Cache cache;
    forward(clamp_input(ctx), cache);
    std::size_t last = cache.input.size() - 1;
    auto begin = cache.log_probs.begin() +
                 static_cast<std::ptrdiff_t>(last * static_cast<std::size_t>(cfg_.vocab_size));
    return std::vector<double>(begin, begin + cfg_.vocab_size);
}

double Transformer::sequence_log_prob(const std::vector<int>& ids) const {
    double sum = 0.0;
    std::size_t chunk = static_cast<std::size_t>(cfg_.max_seq);
    for (std::size_t start = 0; start < ids.size(); start += chunk) {
        std::size_t len = std::min(chunk, ids.size() - start);
        std::vector<int> input;
        input.reserve(len);
        input.push_back(cfg_.bos_id);
        input.insert(input.end(), ids.begin() + static_cast<std::ptrdiff_t>(start),
                     ids.begin() + static_cast<std::ptrdiff_t>(start + len - 1));
        Cache cache;
        forward(input, cache);
        for (std::size_t t = 0; t < len; ++t)
            sum += cache.log_probs[t * static_cast<std::size_t>(cfg_.vocab_size) +
                                   static_cast<std::size_t>(ids[start + t])];
    }
    return sum;
}

double Transformer::loss(const std::vector<int>& ids) const {
    if (ids.empty()) throw std::invalid_argument("transformer: empty sequence");
    if (ids.size() > static_cast<std::size_t>(cfg_.max_seq))
        throw std::invalid_argument("transformer: sequence longer than max_seq");
    std::vector<int> input;
    input.reserve(ids.size());
    input.push_back(cfg_.bos_id);
    input.insert(input.end(), ids.begin(), ids.end() - 1);
    Cache cache;
    forward(input, cache);
    double nll = 0.0;
    for (std::size_t t = 0; t < ids.size(); ++t)
        nll -= cache.log_probs[t * static_cast<std::size_t>(cfg_.vocab_size) +
                               static_cast<std::size_t>(ids[t])];
    return nll / static_cast<double>(ids.size());
}

double Transformer::loss_and_grad(const std::vector<int>& ids, std::vector<double>& grad) const {
    if (ids.empty()) throw std::invalid_argument("transformer: empty sequence");
    if (ids.size() > static_cast<std::size_t>(cfg_.max_seq))
        throw std::invalid_argument("transformer: sequence longer than max_seq");
    grad.assign(off_.total, 0.0);
    std::vector<int> input;
    input.reserve(ids.size());
    input.push_back(cfg_.bos_id);
    input.insert(input.end(), ids.begin(), ids.end() - 1);
    Cache cache;
    forward(input, cache);
    double nll = 0.0;
    for (std::size_t t = 0; t < ids.size(); ++t)
        nll -= cache.log_probs[t * static_cast<std::size_t>(cfg_.vocab_size) +
                               static_cast<std::size_t>(ids[t])];
    backward(cache, ids, 1.0 / static_cast<double>(ids.size()), grad);
    return nll / static_cast<double>(ids.size());
}

double Transformer::train_step(const std::vector<std::vector<int>>& batch, double lr) {
    if (batch.empty()) throw std::invalid_argument("transformer: empty batch");
    std::vector<double> total(off_.total, 0.0);
    std::vector<double> grad;
    double loss_sum = 0.0;
    for (const auto& seq : batch) {
        loss_sum += loss_and_grad(seq, grad);
        for (std::size_t i = 0; i < total.size(); ++i) total[i] += grad[i];
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * inv * total[i];
    return loss_sum * inv;
}

void Transformer::set_flat_params(const std::vector<double>& flat) {
    if (flat.size() != params_.size())
        throw std::invalid_argument("transformer: parameter size mismatch");
    params_ = flat;
}

void Transformer::save(const std::string& path) const {
    nlohmann::json j;
    j["config"] = {
        {"vocab_size", cfg_.vocab_size}, {"d_model", cfg_.d_model},
        {"n_layers", cfg_.n_layers},     {"n_heads", cfg_.n_heads},
        {"max_seq", cfg_.max_seq},       {"window", cfg_.window},
        {"bos_id", cfg_.bos_id},         {"seed", cfg_.seed},
    };
    j["params"] = params_;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("transformer: cannot write " + path);
    out << j.dump() << "\n";
}

Transformer Transformer::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("transformer: cannot read " + path);
    nlohmann::json j;
    in >> j;
    const auto& c = j.at("config");
    TransformerConfig cfg;
    cfg.vocab_size = c.at("vocab_size").get<int>();
    cfg.d_model = c.at("d_model").get<int>();
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.max_seq = c.at("max_seq").get<int>();
    cfg.window = c.at("window").get<int>();
    cfg.bos_id = c.at("bos_id").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    Transformer t(cfg);
    t.set_flat_params(j.at("params").get<std::vector<double>>());
    return t;
}

}  // namespace lmkit::score
