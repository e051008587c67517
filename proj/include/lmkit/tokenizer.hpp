#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lmkit::tok {

// default/case/arithmetic/combined are byte-level BPE over different
// pre-segmentations; char_level is a plain character vocabulary.
enum class Strategy { bpe_default, bpe_case, bpe_arithmetic, bpe_combined, char_level };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::vector<Strategy> all_strategies();

inline constexpr std::string_view kCaseMarker = "<case>";
inline constexpr std::string_view kSpaceCaseMarker = " <case>";
inline constexpr std::string_view kUnk = "<unk>";

// Reversible lowercasing: each markable uppercase char becomes the marker
// string followed by its lowercase form. Identity for default/char.
std::string pretransform(std::string_view text, Strategy strategy);
std::string detransform(std::string_view text, Strategy strategy);

struct Piece {
    std::string text;  // raw bytes; the space-absorbing marker keeps its space
    bool special = false;
};

// Pretransformed text split into marker specials and plain segments. A marker
// absorbs one immediately preceding U+0020 so printed sequences show no
// stray space token, while decode still restores the original byte stream.
std::vector<Piece> pretokenize(std::string_view text, Strategy strategy);

struct TrainConfig {
    Strategy strategy = Strategy::bpe_default;
    std::size_t vocab_size = 4096;
};

class Tokenizer {
public:
    static Tokenizer train(const std::vector<std::string>& texts, const TrainConfig& cfg);

    std::vector<int> encode(std::string_view text) const;
    std::string decode(const std::vector<int>& ids) const;

    // Display forms: the space-absorbing marker renders like the bare marker.
    std::string render(int id) const;
    std::vector<std::string> encode_rendered(std::string_view text) const;

    Strategy strategy() const { return strategy_; }
    std::size_t vocab_size() const { return vocab_.size(); }
    const std::string& token_bytes(int id) const;
    const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

    void save(const std::string& path) const;
    static Tokenizer load(const std::string& path);

private:
    Tokenizer() = default;
    void rebuild_index();
    std::vector<int> encode_segment(const std::string& segment) const;

    Strategy strategy_ = Strategy::bpe_default;
    std::vector<std::string> vocab_;  // raw token bytes, index = id
    std::vector<bool> is_special_;
    std::unordered_map<std::string, int> token_ids_;
    std::vector<std::pair<std::string, std::string>> merges_;  // rank order

    struct PairHash {
        std::size_t operator()(const std::pair<std::string, std::string>& p) const {
            std::size_t h1 = std::hash<std::string>{}(p.first);
            std::size_t h2 = std::hash<std::string>{}(p.second);
            return h1 ^ (h2 + 0x9e3779b97f4a7c15ULL + (h1 << 6) + (h1 >> 2));
        }
    };
    std::unordered_map<std::pair<std::string, std::string>, int, PairHash> merge_ranks_;
};

// \xHH escaping for bytes outside printable ASCII (backslash included), so
// token tables survive a text round trip.
std::string escape_bytes(std::string_view raw);
std::string unescape_bytes(std::string_view escaped);

}  // namespace lmkit::tok
