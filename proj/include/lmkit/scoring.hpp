#pragma once

#include <cstddef>
#include <random>
#include <vector>

namespace lmkit::score {

// Autoregressive scorer over a fixed token vocabulary. next_log_probs must
// return a full, exactly normalized distribution (logs of probabilities that
// sum to 1); sequence_log_prob must handle sequences of any length.
class ScoringModel {
public:
    virtual ~ScoringModel() = default;

    virtual int vocab_size() const = 0;
    virtual std::size_t max_context() const = 0;
    virtual std::vector<double> next_log_probs(const std::vector<int>& ctx) const = 0;
    virtual double sequence_log_prob(const std::vector<int>& ids) const = 0;
};

struct SampleConfig {
    double top_p = 1.0;  // nucleus: smallest prefix of the sorted distribution
                         // whose mass reaches top_p; 1.0 disables
    int top_k = 0;       // keep k most probable tokens; 0 disables, 1 is greedy
};

// Deterministic given the RNG state: candidates are ordered by (probability
// desc, id asc) before truncation, and the draw uses a fixed 53-bit mapping.
int sample_token(const std::vector<double>& log_probs, std::mt19937_64& rng,
                 const SampleConfig& cfg);

}  // namespace lmkit::score
