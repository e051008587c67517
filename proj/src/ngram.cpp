#include "lmkit/ngram.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmkit::score {

std::string NGramModel::pack(const int* ids, std::size_t n) {
    std::string key(n * 4, '\0');
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t v = static_cast<std::uint32_t>(ids[i]);
        std::memcpy(key.data() + i * 4, &v, 4);
    }
    return key;
}

NGramModel NGramModel::train(const std::vector<std::vector<int>>& sequences, int vocab_size,
                             const NGramConfig& cfg) {
    if (vocab_size <= 0) throw std::invalid_argument("ngram: vocab_size must be positive");
    if (cfg.order < 1) throw std::invalid_argument("ngram: order must be at least 1");
    if (cfg.add_k <= 0.0) throw std::invalid_argument("ngram: add_k must be positive");

    NGramModel m;
    m.cfg_ = cfg;
    m.vocab_size_ = vocab_size;
    if (m.cfg_.lambdas.empty()) {
        m.cfg_.lambdas.assign(cfg.order, 1.0 / cfg.order);
    } else if (m.cfg_.lambdas.size() != static_cast<std::size_t>(cfg.order)) {
        throw std::invalid_argument("ngram: one lambda per order required");
    } else {
        double sum = 0.0;
        for (double l : m.cfg_.lambdas) {
            if (l < 0.0) throw std::invalid_argument("ngram: negative lambda");
            sum += l;
        }
        if (sum <= 0.0) throw std::invalid_argument("ngram: lambdas sum to zero");
        for (double& l : m.cfg_.lambdas) l /= sum;
    }

    m.cont_.resize(cfg.order);
    m.ctx_totals_.resize(cfg.order);
    for (const auto& seq : sequences) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i] < 0 || seq[i] >= vocab_size)
                throw std::invalid_argument("ngram: token id out of range");
            for (int n = 1; n <= cfg.order; ++n) {
                if (i + 1 < static_cast<std::size_t>(n)) break;
                std::string ctx = pack(seq.data() + i - (n - 1), static_cast<std::size_t>(n - 1));
                ++m.cont_[n - 1][ctx][seq[i]];
                ++m.ctx_totals_[n - 1][ctx];
            }
        }
    }
    return m;
}

std::vector<double> NGramModel::next_log_probs(const std::vector<int>& ctx) const {
    std::vector<double> probs(static_cast<std::size_t>(vocab_size_), 0.0);
    std::vector<char> seen(static_cast<std::size_t>(vocab_size_), 0);
    double v = static_cast<double>(vocab_size_);

    // Orders the context can support, with renormalized weights.
    double weight_sum = 0.0;
    for (int n = 1; n <= cfg_.order; ++n)
        if (ctx.size() >= static_cast<std::size_t>(n - 1)) weight_sum += cfg_.lambdas[n - 1];

    for (int n = 1; n <= cfg_.order; ++n) {
        if (ctx.size() < static_cast<std::size_t>(n - 1)) continue;
        double w = cfg_.lambdas[n - 1] / weight_sum;
        std::string key = pack(ctx.data() + ctx.size() - (n - 1), static_cast<std::size_t>(n - 1));
        auto tit = ctx_totals_[n - 1].find(key);
        double total = tit == ctx_totals_[n - 1].end() ? 0.0 : static_cast<double>(tit->second);
        double denom = total + cfg_.add_k * v;
        // Each id gets w * (count + k) / denom as ONE term, so every entry is
        // bitwise identical to what log_prob computes for that id.
        auto cit = cont_[n - 1].find(key);
        if (cit != cont_[n - 1].end())
            for (const auto& [next, c] : cit->second) {
                probs[static_cast<std::size_t>(next)] +=
                    w * (static_cast<double>(c) + cfg_.add_k) / denom;
                seen[static_cast<std::size_t>(next)] = 1;
            }
        double unseen = w * (0.0 + cfg_.add_k) / denom;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (seen[i])
                seen[i] = 0;
            else
                probs[i] += unseen;
        }
    }

    std::vector<double> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = std::log(probs[i]);
    return out;
}

double NGramModel::log_prob(const std::vector<int>& ctx, int next) const {
    if (next < 0 || next >= vocab_size_) throw std::invalid_argument("ngram: token id out of range");
    double v = static_cast<double>(vocab_size_);
    double weight_sum = 0.0;
    for (int n = 1; n <= cfg_.order; ++n)
        if (ctx.size() >= static_cast<std::size_t>(n - 1)) weight_sum += cfg_.lambdas[n - 1];

    double p = 0.0;
    for (int n = 1; n <= cfg_.order; ++n) {
        if (ctx.size() < static_cast<std::size_t>(n - 1)) continue;
        double w = cfg_.lambdas[n - 1] / weight_sum;
        std::string key = pack(ctx.data() + ctx.size() - (n - 1), static_cast<std::size_t>(n - 1));
        auto tit = ctx_totals_[n - 1].find(key);
        double total = tit == ctx_totals_[n - 1].end() ? 0.0 : static_cast<double>(tit->second);
        double count = 0.0;
        auto cit = cont_[n - 1].find(key);
        if (cit != cont_[n - 1].end()) {
            auto nit = cit->second.find(next);
            if (nit != cit->second.end()) count = static_cast<double>(nit->second);
        }
        p += w * (count + cfg_.add_k) / (total + cfg_.add_k * v);
    }
    return std::log(p);
}

double NGramModel::sequence_log_prob(const std::vector<int>& ids) const {
    double sum = 0.0;
    std::vector<int> ctx;
    ctx.reserve(max_context());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::size_t start = i > max_context() ? i - max_context() : 0;
        ctx.assign(ids.begin() + static_cast<std::ptrdiff_t>(start),
                   ids.begin() + static_cast<std::ptrdiff_t>(i));
        sum += log_prob(ctx, ids[i]);
    }
    return sum;
}

void NGramModel::save(const std::string& path) const {
    nlohmann::json j;
    j["order"] = cfg_.order;
    j["add_k"] = cfg_.add_k;
    j["lambdas"] = cfg_.lambdas;
    j["vocab_size"] = vocab_size_;
    nlohmann::json orders = nlohmann::json::array();
    for (int n = 1; n <= cfg_.order; ++n) {
        nlohmann::json level = nlohmann::json::object();
        for (const auto& [key, nexts] : cont_[n - 1]) {
            std::ostringstream ctx_key;
            for (std::size_t i = 0; i * 4 < key.size(); ++i) {
                std::uint32_t v;
                std::memcpy(&v, key.data() + i * 4, 4);
                if (i) ctx_key << ' ';
                ctx_key << v;
            }
            nlohmann::json cont = nlohmann::json::object();
            for (const auto& [next, c] : nexts) cont[std::to_string(next)] = c;
            level[ctx_key.str()] = std::move(cont);
        }
        orders.push_back(std::move(level));
    }
    j["orders"] = std::move(orders);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("ngram: cannot write " + path);
    out << j.dump() << "\n";
}

NGramModel NGramModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ngram: cannot read " + path);
    nlohmann::json j;
    in >> j;
    NGramModel m;
    m.cfg_.order = j.at("order").get<int>();
    m.cfg_.add_k = j.at("add_k").get<double>();
    m.cfg_.lambdas = j.at("lambdas").get<std::vector<double>>();
    m.vocab_size_ = j.at("vocab_size").get<int>();
    m.cont_.resize(m.cfg_.order);
    m.ctx_totals_.resize(m.cfg_.order);
    const auto& orders = j.at("orders");
    for (int n = 1; n <= m.cfg_.order; ++n) {
        for (const auto& [ctx_key, cont] : orders.at(n - 1).items()) {
            std::vector<int> ctx_ids;
            std::istringstream iss(ctx_key);
            std::uint32_t v;
            while (iss >> v) ctx_ids.push_back(static_cast<int>(v));
            std::string key = pack(ctx_ids.data(), ctx_ids.size());
            long long total = 0;
            for (const auto& [next, c] : cont.items()) {
                long long cv = c.get<long long>();
                m.cont_[n - 1][key][std::stoi(next)] = cv;
                total += cv;
            }
            m.ctx_totals_[n - 1][key] = total;
        }
    }
    return m;
}

}  // namespace lmkit::score
