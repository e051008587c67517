#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmkit/scoring.hpp"

namespace lmkit::score {

// Small decoder-only transformer: pre-norm blocks, learned positions,
// exact-erf GELU, untied input/output embeddings, no output-head bias.
// Attention alternates by depth: even layers attend to the full causal
// prefix, odd layers to a trailing band of `window` positions. All math is
// in double precision so finite-difference checks are meaningful.
struct TransformerConfig {
    int vocab_size = 0;
    int d_model = 32;
    int n_layers = 2;
    int n_heads = 2;
    int max_seq = 64;
    int window = 8;
    int bos_id = 0;
    std::uint64_t seed = 42;
};

class Transformer : public ScoringModel {
public:
    explicit Transformer(const TransformerConfig& cfg);

    int vocab_size() const override { return cfg_.vocab_size; }
    std::size_t max_context() const override { return static_cast<std::size_t>(cfg_.max_seq - 1); }
    std::vector<double> next_log_probs(const std::vector<int>& ctx) const override;
    // Long sequences are scored in consecutive max_seq-sized chunks, each
    // restarted from the BOS token.
    double sequence_log_prob(const std::vector<int>& ids) const override;

    const TransformerConfig& config() const { return cfg_; }
    bool layer_is_banded(int layer) const { return layer % 2 == 1; }

    // Mean next-token negative log likelihood of a BOS-prefixed sequence.
    double loss(const std::vector<int>& ids) const;
    double loss_and_grad(const std::vector<int>& ids, std::vector<double>& grad) const;
    double train_step(const std::vector<std::vector<int>>& batch, double lr);

    const std::vector<double>& flat_params() const { return params_; }
    void set_flat_params(const std::vector<double>& flat);
    std::size_t param_count() const { return params_.size(); }

    void save(const std::string& path) const;
    static Transformer load(const std::string& path);

private:
    struct Cache;
    void forward(const std::vector<int>& input, Cache& cache) const;
    void backward(const Cache& cache, const std::vector<int>& targets, double weight,
                  std::vector<double>& grad) const;
    std::vector<int> clamp_input(const std::vector<int>& ids) const;

    TransformerConfig cfg_;
    std::vector<double> params_;

    // Flat-parameter layout, computed once from the config.
    struct LayerOffsets {
        std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
        std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
    };
    struct Offsets {
        std::size_t tok_emb, pos_emb;
        std::vector<LayerOffsets> layers;
        std::size_t lnf_g, lnf_b, w_out, total;
    };
    Offsets off_;
    void compute_offsets();
};

}  // namespace lmkit::score
