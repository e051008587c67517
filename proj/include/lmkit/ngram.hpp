#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lmkit/scoring.hpp"

namespace lmkit::score {

struct NGramConfig {
    int order = 3;
    double add_k = 1.0;
    // Mixture weight per order 1..order; renormalized over the orders a
    // context is long enough to support. Default: uniform.
    std::vector<double> lambdas;
};

// Interpolated additive-smoothing n-gram model. Each order-n component is
// (count(ctx,next)+k) / (count(ctx)+k*V), so the mixture is exactly
// normalized over the vocabulary for any context.
class NGramModel : public ScoringModel {
public:
    static NGramModel train(const std::vector<std::vector<int>>& sequences, int vocab_size,
                            const NGramConfig& cfg);

    int vocab_size() const override { return vocab_size_; }
    std::size_t max_context() const override { return static_cast<std::size_t>(cfg_.order - 1); }
    std::vector<double> next_log_probs(const std::vector<int>& ctx) const override;
    double sequence_log_prob(const std::vector<int>& ids) const override;

    double log_prob(const std::vector<int>& ctx, int next) const;

    void save(const std::string& path) const;
    static NGramModel load(const std::string& path);

private:
    NGramModel() = default;

    // Key = ids packed little-endian, 4 bytes each; exact, collision-free.
    static std::string pack(const int* ids, std::size_t n);

    NGramConfig cfg_;
    int vocab_size_ = 0;
    // cont_[n-1]: packed (n-1)-id context -> continuation counts per next id.
    // ctx_totals_[n-1]: the same context -> total continuations seen.
    std::vector<std::unordered_map<std::string, std::unordered_map<int, long long>>> cont_;
    std::vector<std::unordered_map<std::string, long long>> ctx_totals_;
};

}  // namespace lmkit::score
