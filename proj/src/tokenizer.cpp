#include "lmkit/tokenizer.hpp"

#include <algorithm>
#include <climits>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "lmkit/unicode.hpp"

namespace lmkit::tok {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::bpe_default: return "default";
        case Strategy::bpe_case: return "case";
        case Strategy::bpe_arithmetic: return "arithmetic";
        case Strategy::bpe_combined: return "combined";
        case Strategy::char_level: return "char";
    }
    throw std::logic_error("bad strategy");
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "default") return Strategy::bpe_default;
    if (s == "case") return Strategy::bpe_case;
    if (s == "arithmetic") return Strategy::bpe_arithmetic;
    if (s == "combined") return Strategy::bpe_combined;
    if (s == "char") return Strategy::char_level;
    throw std::invalid_argument("unknown strategy: " + s);
}

std::vector<Strategy> all_strategies() {
    return {Strategy::bpe_default, Strategy::bpe_case, Strategy::bpe_arithmetic,
            Strategy::bpe_combined, Strategy::char_level};
}

namespace {

bool uses_markers(Strategy s) {
    return s == Strategy::bpe_case || s == Strategy::bpe_arithmetic ||
           s == Strategy::bpe_combined;
}

bool is_arith_char(char32_t cp) {
    return unicode::is_ascii_digit(cp) || cp == U'+' || cp == U'-' || cp == U'*' ||
           cp == U'/' || cp == U'=' || cp == U'%';
}

// Whitespace runs and words; a run's trailing U+0020 attaches to the word
// that follows it.
std::vector<std::string> split_space_words(std::string_view s) {
    std::vector<std::pair<std::string, bool>> runs;  // (text, is_whitespace)
    std::size_t i = 0;
    while (i < s.size()) {
        auto d = unicode::decode_at(s, i);
        bool ws = d.valid && unicode::is_space(d.cp);
        std::string run;
        while (i < s.size()) {
            auto e = unicode::decode_at(s, i);
            bool ews = e.valid && unicode::is_space(e.cp);
            if (ews != ws) break;
            run.append(s.substr(i, e.len));
            i += e.len;
        }
        runs.emplace_back(std::move(run), ws);
    }
    std::vector<std::string> segs;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        if (!runs[r].second) {
            segs.push_back(runs[r].first);
            continue;
        }
        std::string ws = runs[r].first;
        bool donate = r + 1 < runs.size() && ws.back() == ' ';
        if (donate) ws.pop_back();
        if (!ws.empty()) segs.push_back(std::move(ws));
        if (donate) {
            segs.push_back(" " + runs[r + 1].first);
            ++r;
        }
    }
    return segs;
}

void split_atomic(std::string_view seg, bool (*atomic)(char32_t), std::vector<std::string>& out) {
    std::string cur;
    std::size_t i = 0;
    while (i < seg.size()) {
        auto d = unicode::decode_at(seg, i);
        if (d.valid && atomic(d.cp)) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
            out.emplace_back(seg.substr(i, d.len));
        } else {
            cur.append(seg.substr(i, d.len));
        }
        i += d.len;
    }
    if (!cur.empty()) out.push_back(std::move(cur));
}

void segment_span(std::string_view span, Strategy strategy, std::vector<Piece>& out) {
    switch (strategy) {
        case Strategy::bpe_default:
        case Strategy::bpe_case:
            for (auto& seg : split_space_words(span)) out.push_back({std::move(seg), false});
            break;
        case Strategy::bpe_arithmetic: {
            std::vector<std::string> atoms;
            for (auto& seg : split_space_words(span)) split_atomic(seg, is_arith_char, atoms);
            for (auto& seg : atoms) out.push_back({std::move(seg), false});
            break;
        }
        case Strategy::bpe_combined: {
            std::vector<std::string> atoms;
            split_atomic(span,
                         [](char32_t cp) {
                             return is_arith_char(cp) || unicode::is_space(cp) ||
                                    unicode::is_punct(cp);
                         },
                         atoms);
            for (auto& seg : atoms) out.push_back({std::move(seg), false});
            break;
        }
        case Strategy::char_level:
            throw std::logic_error("char strategy has no spans");
    }
}

}  // namespace

std::string pretransform(std::string_view text, Strategy strategy) {
    if (!uses_markers(strategy)) return std::string(text);
    std::string out;
    out.reserve(text.size() + text.size() / 4);
    std::size_t i = 0;
    while (i < text.size()) {
        auto d = unicode::decode_at(text, i);
        if (d.valid && unicode::is_case_markable(d.cp)) {
            out.append(kCaseMarker);
            unicode::append_utf8(out, unicode::to_lower(d.cp));
        } else {
            out.append(text.substr(i, d.len));
        }
        i += d.len;
    }
    return out;
}

std::string detransform(std::string_view text, Strategy strategy) {
    if (!uses_markers(strategy)) return std::string(text);
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text.compare(i, kCaseMarker.size(), kCaseMarker) == 0) {
            i += kCaseMarker.size();
            if (i < text.size()) {
                auto d = unicode::decode_at(text, i);
                if (d.valid)
                    unicode::append_utf8(out, unicode::to_upper(d.cp));
                else
                    out.append(text.substr(i, d.len));
                i += d.len;
            }
            continue;
        }
        auto d = unicode::decode_at(text, i);
        out.append(text.substr(i, d.len));
        i += d.len;
    }
    return out;
}

std::vector<Piece> pretokenize(std::string_view text, Strategy strategy) {
    std::vector<Piece> pieces;
    if (strategy == Strategy::char_level) {
        std::size_t i = 0;
        while (i < text.size()) {
            auto d = unicode::decode_at(text, i);
            pieces.push_back({std::string(text.substr(i, d.len)), false});
            i += d.len;
        }
        return pieces;
    }
    std::string pre = pretransform(text, strategy);
    if (!uses_markers(strategy)) {
        segment_span(pre, strategy, pieces);
        return pieces;
    }
    std::size_t pos = 0;
    while (pos <= pre.size()) {
        std::size_t m = pre.find(kCaseMarker, pos);
        if (m == std::string::npos) {
            if (pos < pre.size()) segment_span(std::string_view(pre).substr(pos), strategy, pieces);
            break;
        }
        std::string_view span = std::string_view(pre).substr(pos, m - pos);
        bool absorb = !span.empty() && span.back() == ' ';
        if (absorb) span.remove_suffix(1);
        if (!span.empty()) segment_span(span, strategy, pieces);
        pieces.push_back({std::string(absorb ? kSpaceCaseMarker : kCaseMarker), true});
        pos = m + kCaseMarker.size();
    }
    return pieces;
}

void Tokenizer::rebuild_index() {
    token_ids_.clear();
    token_ids_.reserve(vocab_.size() * 2);
    for (std::size_t i = 0; i < vocab_.size(); ++i) token_ids_[vocab_[i]] = static_cast<int>(i);
    merge_ranks_.clear();
    for (std::size_t r = 0; r < merges_.size(); ++r)
        merge_ranks_[merges_[r]] = static_cast<int>(r);
}

Tokenizer Tokenizer::train(const std::vector<std::string>& texts, const TrainConfig& cfg) {
    Tokenizer t;
    t.strategy_ = cfg.strategy;

    if (cfg.strategy == Strategy::char_level) {
        // Vocab = reserved unknown + observed characters ordered by codepoint.
        std::set<std::pair<char32_t, std::string>> chars;
        for (const auto& text : texts) {
            std::size_t i = 0;
            while (i < text.size()) {
                auto d = unicode::decode_at(text, i);
                chars.emplace(d.cp, text.substr(i, d.len));
                i += d.len;
            }
        }
        t.vocab_.emplace_back(kUnk);
        t.is_special_.push_back(true);
        for (const auto& [cp, raw] : chars) {
            t.vocab_.push_back(raw);
            t.is_special_.push_back(false);
        }
        t.rebuild_index();
        return t;
    }

    for (int b = 0; b < 256; ++b) {
        t.vocab_.push_back(std::string(1, static_cast<char>(b)));
        t.is_special_.push_back(false);
    }
    std::vector<std::string> specials;
    if (uses_markers(cfg.strategy)) specials = {std::string(kCaseMarker), std::string(kSpaceCaseMarker)};
    for (const auto& sp : specials) {
        t.vocab_.push_back(sp);
        t.is_special_.push_back(true);
    }
    if (cfg.vocab_size < t.vocab_.size())
        throw std::invalid_argument("vocab_size below byte and special token floor");

    // Distinct segments with occurrence counts, ordered for determinism.
    std::map<std::string, long long> seg_count_map;
    for (const auto& text : texts)
        for (auto& piece : pretokenize(text, cfg.strategy))
            if (!piece.special) ++seg_count_map[piece.text];

    std::vector<long long> seg_n;
    std::vector<std::vector<std::string>> seg_toks;
    for (const auto& [seg, n] : seg_count_map) {
        seg_n.push_back(n);
        std::vector<std::string> toks;
        toks.reserve(seg.size());
        for (char c : seg) toks.emplace_back(1, c);
        seg_toks.push_back(std::move(toks));
    }

    using Pair = std::pair<std::string, std::string>;
    std::unordered_map<Pair, long long, PairHash> pair_counts;
    std::unordered_map<Pair, std::set<std::size_t>, PairHash> pair_segs;
    for (std::size_t s = 0; s < seg_toks.size(); ++s) {
        for (std::size_t i = 0; i + 1 < seg_toks[s].size(); ++i) {
            Pair p{seg_toks[s][i], seg_toks[s][i + 1]};
            pair_counts[p] += seg_n[s];
            pair_segs[p].insert(s);
        }
    }

    struct HeapEntry {
        long long count;
        Pair p;
        bool operator<(const HeapEntry& o) const {
            if (count != o.count) return count < o.count;
            return p > o.p;  // smaller pair wins ties
        }
    };
    std::priority_queue<HeapEntry> heap;
    for (const auto& [p, c] : pair_counts) heap.push({c, p});

    std::unordered_set<std::string> special_bytes(specials.begin(), specials.end());

    while (t.vocab_.size() < cfg.vocab_size && !heap.empty()) {
        HeapEntry top = heap.top();
        heap.pop();
        auto it = pair_counts.find(top.p);
        if (it == pair_counts.end() || it->second != top.count) continue;  // stale
        if (top.count < 2) break;
        std::string merged = top.p.first + top.p.second;
        if (special_bytes.count(merged)) {
            pair_counts.erase(it);  // never merge into a special's byte string
            continue;
        }

        t.merges_.push_back(top.p);
        t.vocab_.push_back(merged);
        t.is_special_.push_back(false);

        std::set<std::size_t> affected = pair_segs[top.p];
        std::unordered_set<Pair, PairHash> changed;
        for (std::size_t s : affected) {
            auto& toks = seg_toks[s];
            long long n = seg_n[s];
            for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
                Pair p{toks[i], toks[i + 1]};
                pair_counts[p] -= n;
                pair_segs[p].erase(s);
                changed.insert(p);
            }
            std::vector<std::string> nt;
            nt.reserve(toks.size());
            std::size_t i = 0;
            while (i < toks.size()) {
                if (i + 1 < toks.size() && toks[i] == top.p.first && toks[i + 1] == top.p.second) {
                    nt.push_back(merged);
                    i += 2;
                } else {
                    nt.push_back(toks[i]);
                    ++i;
                }
            }
            toks = std::move(nt);
            for (std::size_t j = 0; j + 1 < toks.size(); ++j) {
                Pair p{toks[j], toks[j + 1]};
                pair_counts[p] += n;
                pair_segs[p].insert(s);
                changed.insert(p);
            }
        }
        for (const auto& p : changed) {
            auto cit = pair_counts.find(p);
            if (cit == pair_counts.end()) continue;
            if (cit->second <= 0) {
                pair_counts.erase(cit);
                pair_segs.erase(p);
            } else {
                heap.push({cit->second, p});
            }
        }
    }

    t.rebuild_index();
    return t;
}

std::vector<int> Tokenizer::encode_segment(const std::string& segment) const {
    std::vector<std::string> toks;
    toks.reserve(segment.size());
    for (char c : segment) toks.emplace_back(1, c);
    while (toks.size() >= 2) {
        int best_rank = INT_MAX;
        std::pair<std::string, std::string> best;
        for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
            auto it = merge_ranks_.find({toks[i], toks[i + 1]});
            if (it != merge_ranks_.end() && it->second < best_rank) {
                best_rank = it->second;
                best = it->first;
            }
        }
        if (best_rank == INT_MAX) break;
        std::vector<std::string> nt;
        nt.reserve(toks.size());
        std::size_t i = 0;
        while (i < toks.size()) {
            if (i + 1 < toks.size() && toks[i] == best.first && toks[i + 1] == best.second) {
                nt.push_back(best.first + best.second);
                i += 2;
            } else {
                nt.push_back(toks[i]);
                ++i;
            }
        }
        toks = std::move(nt);
    }
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& tk : toks) ids.push_back(token_ids_.at(tk));
    return ids;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
    std::vector<int> ids;
    if (strategy_ == Strategy::char_level) {
        std::size_t i = 0;
        while (i < text.size()) {
            auto d = unicode::decode_at(text, i);
            auto it = token_ids_.find(std::string(text.substr(i, d.len)));
            ids.push_back(it == token_ids_.end() ? 0 : it->second);
            i += d.len;
        }
        return ids;
    }
    std::unordered_map<std::string, std::vector<int>> cache;
    for (auto& piece : pretokenize(text, strategy_)) {
        if (piece.special) {
            ids.push_back(token_ids_.at(piece.text));
            continue;
        }
        auto it = cache.find(piece.text);
        if (it == cache.end()) it = cache.emplace(piece.text, encode_segment(piece.text)).first;
        ids.insert(ids.end(), it->second.begin(), it->second.end());
    }
    return ids;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
    std::string raw;
    for (int id : ids) raw += token_bytes(id);
    return detransform(raw, strategy_);
}

const std::string& Tokenizer::token_bytes(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_.size())
        throw std::out_of_range("token id " + std::to_string(id));
    return vocab_[static_cast<std::size_t>(id)];
}

std::string Tokenizer::render(int id) const {
    const std::string& raw = token_bytes(id);
    if (is_special_[static_cast<std::size_t>(id)] && raw == kSpaceCaseMarker)
        return std::string(kCaseMarker);
    return raw;
}

std::vector<std::string> Tokenizer::encode_rendered(std::string_view text) const {
    std::vector<std::string> out;
    for (int id : encode(text)) out.push_back(render(id));
    return out;
}

std::string escape_bytes(std::string_view raw) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (c >= 0x20 && c < 0x7f && c != '\\') {
            out.push_back(static_cast<char>(c));
        } else {
            out += "\\x";
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

std::string unescape_bytes(std::string_view escaped) {
    auto hex_val = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    out.reserve(escaped.size());
    std::size_t i = 0;
    while (i < escaped.size()) {
        if (escaped[i] == '\\' && i + 3 < escaped.size() && escaped[i + 1] == 'x') {
            int hi = hex_val(escaped[i + 2]);
            int lo = hex_val(escaped[i + 3]);
            if (hi < 0 || lo < 0) throw std::invalid_argument("bad byte escape");
            out.push_back(static_cast<char>(hi * 16 + lo));
            i += 4;
        } else if (escaped[i] == '\\') {
            throw std::invalid_argument("bad byte escape");
        } else {
            out.push_back(escaped[i]);
            ++i;
        }
    }
    return out;
}

void Tokenizer::save(const std::string& path) const {
    nlohmann::json j;
    j["strategy"] = to_string(strategy_);
    if (strategy_ == Strategy::char_level) {
        nlohmann::json vocab = nlohmann::json::array();
        for (const auto& tk : vocab_) vocab.push_back(escape_bytes(tk));
        j["vocab"] = std::move(vocab);
    } else {
        nlohmann::json merges = nlohmann::json::array();
        for (const auto& [l, r] : merges_)
            merges.push_back({escape_bytes(l), escape_bytes(r)});
        j["merges"] = std::move(merges);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("tokenizer: cannot write " + path);
    out << j.dump(1) << "\n";
}

Tokenizer Tokenizer::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("tokenizer: cannot read " + path);
    nlohmann::json j;
    in >> j;
    Tokenizer t;
    t.strategy_ = strategy_from_string(j.at("strategy").get<std::string>());
    if (t.strategy_ == Strategy::char_level) {
        for (const auto& tk : j.at("vocab")) {
            t.vocab_.push_back(unescape_bytes(tk.get<std::string>()));
            t.is_special_.push_back(t.vocab_.back() == kUnk && t.vocab_.size() == 1);
        }
    } else {
        for (int b = 0; b < 256; ++b) {
            t.vocab_.push_back(std::string(1, static_cast<char>(b)));
            t.is_special_.push_back(false);
        }
        if (uses_markers(t.strategy_)) {
            for (auto sp : {kCaseMarker, kSpaceCaseMarker}) {
                t.vocab_.emplace_back(sp);
                t.is_special_.push_back(true);
            }
        }
        for (const auto& m : j.at("merges")) {
            std::string l = unescape_bytes(m.at(0).get<std::string>());
            std::string r = unescape_bytes(m.at(1).get<std::string>());
            t.merges_.emplace_back(l, r);
            t.vocab_.push_back(l + r);
            t.is_special_.push_back(false);
        }
    }
    t.rebuild_index();
    return t;
}

}  // namespace lmkit::tok
