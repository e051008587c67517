#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lmkit::corpus {

// Logistic regression over hashed character 3-gram counts. Feature space is
// 2^18 buckets; 3-grams are byte triples hashed with FNV-1a. Counts are
// L2-normalized per document so score is length-invariant.
class QualityClassifier {
public:
    static constexpr std::size_t kFeatureBits = 18;
    static constexpr std::size_t kFeatureDim = std::size_t{1} << kFeatureBits;

    struct TrainConfig {
        double learning_rate = 0.5;
        double l2 = 1e-6;
        int epochs = 20;
        std::uint64_t seed = 17;
    };

    QualityClassifier();

    // labels: 1 = high quality, 0 = low quality. Shuffles per epoch with the
    // config seed; training is deterministic for a fixed seed.
    void train(const std::vector<std::string>& texts, const std::vector<int>& labels,
               const TrainConfig& cfg);

    // Probability the text is high quality.
    double score(std::string_view text) const;

    void save(const std::string& path) const;
    static QualityClassifier load(const std::string& path);

    // Sparse hashed-3-gram feature vector, L2-normalized.
    static std::vector<std::pair<std::uint32_t, double>> featurize(std::string_view text);

private:
    std::vector<double> weights_;
    double bias_ = 0.0;
};

}  // namespace lmkit::corpus
