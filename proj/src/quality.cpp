#include "lmkit/quality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "lmkit/util.hpp"

namespace lmkit::corpus {

QualityClassifier::QualityClassifier() : weights_(kFeatureDim, 0.0) {}

std::vector<std::pair<std::uint32_t, double>> QualityClassifier::featurize(std::string_view text) {
    std::map<std::uint32_t, double> counts;
    if (text.size() >= 3) {
        for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
            std::uint64_t h = util::fnv1a64(text.substr(i, 3));
            counts[static_cast<std::uint32_t>(h & (kFeatureDim - 1))] += 1.0;
        }
    }
    double norm = 0.0;
    for (const auto& [k, v] : counts) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<std::pair<std::uint32_t, double>> out;
    out.reserve(counts.size());
    for (const auto& [k, v] : counts) out.emplace_back(k, norm > 0.0 ? v / norm : 0.0);
    return out;
}

namespace {
double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}
}  // namespace

void QualityClassifier::train(const std::vector<std::string>& texts, const std::vector<int>& labels,
                              const TrainConfig& cfg) {
    if (texts.size() != labels.size())
        throw std::invalid_argument("classifier: texts/labels size mismatch");
    if (texts.empty()) throw std::invalid_argument("classifier: empty training set");

    std::vector<std::vector<std::pair<std::uint32_t, double>>> features(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) features[i] = featurize(texts[i]);

    std::vector<std::size_t> order(texts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::mt19937_64 rng(cfg.seed);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t idx : order) {
            double z = bias_;
            for (const auto& [k, v] : features[idx]) z += weights_[k] * v;
            double grad = sigmoid(z) - static_cast<double>(labels[idx]);
            for (const auto& [k, v] : features[idx])
                weights_[k] -= cfg.learning_rate * (grad * v + cfg.l2 * weights_[k]);
            bias_ -= cfg.learning_rate * grad;
        }
    }
}

double QualityClassifier::score(std::string_view text) const {
    double z = bias_;
    for (const auto& [k, v] : featurize(text)) z += weights_[k] * v;
    return sigmoid(z);
}

void QualityClassifier::save(const std::string& path) const {
    // Sparse dump: only nonzero weights.
    nlohmann::json j;
    j["feature_bits"] = kFeatureBits;
    j["bias"] = bias_;
    nlohmann::json w = nlohmann::json::object();
    for (std::size_t i = 0; i < weights_.size(); ++i)
        if (weights_[i] != 0.0) w[std::to_string(i)] = weights_[i];
    j["weights"] = std::move(w);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("classifier: cannot write " + path);
    out << j.dump(2) << "\n";
}

QualityClassifier QualityClassifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("classifier: cannot read " + path);
    nlohmann::json j;
    in >> j;
    if (j.at("feature_bits").get<std::size_t>() != kFeatureBits)
        throw std::runtime_error("classifier: feature space mismatch");
    QualityClassifier c;
    c.bias_ = j.at("bias").get<double>();
    for (const auto& [k, v] : j.at("weights").items())
        c.weights_.at(std::stoul(k)) = v.get<double>();
    return c;
}

}  // namespace lmkit::corpus
