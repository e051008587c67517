#include "lmkit/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lmkit/util.hpp"

namespace lmkit::score {

int sample_token(const std::vector<double>& log_probs, std::mt19937_64& rng,
                 const SampleConfig& cfg) {
    if (log_probs.empty()) throw std::invalid_argument("sample_token: empty distribution");
    if (cfg.top_p <= 0.0 || cfg.top_p > 1.0)
        throw std::invalid_argument("sample_token: top_p out of (0,1]");
    if (cfg.top_k < 0) throw std::invalid_argument("sample_token: negative top_k");

    std::vector<int> order(log_probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (log_probs[a] != log_probs[b]) return log_probs[a] > log_probs[b];
        return a < b;
    });

    std::size_t keep = order.size();
    if (cfg.top_k > 0) keep = std::min<std::size_t>(keep, static_cast<std::size_t>(cfg.top_k));
    if (cfg.top_p < 1.0) {
        double mass = 0.0;
        std::size_t nucleus = 0;
        while (nucleus < keep) {
            mass += std::exp(log_probs[order[nucleus]]);
            ++nucleus;
            if (mass >= cfg.top_p) break;
        }
        keep = std::max<std::size_t>(1, nucleus);
    }

    double total = 0.0;
    for (std::size_t i = 0; i < keep; ++i) total += std::exp(log_probs[order[i]]);
    double u = util::uniform01(rng) * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        acc += std::exp(log_probs[order[i]]);
        if (u < acc) return order[i];
    }
    return order[keep - 1];
}

}  // namespace lmkit::score
