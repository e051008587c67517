#include "lmkit/perplexity.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "lmkit/registry.hpp"
#include "lmkit/unicode.hpp"
#include "lmkit/util.hpp"

namespace lmkit::ppl {

namespace {

double normalized_ppl(double log_prob, std::size_t units) {
    if (units == 0) throw std::invalid_argument("perplexity of zero-length input");
    return std::exp(-log_prob / static_cast<double>(units));
}

}  // namespace

double DocScore::char_ppl() const { return normalized_ppl(log_prob, chars); }
double DocScore::token_ppl() const { return normalized_ppl(log_prob, tokens); }
double Aggregate::char_ppl() const { return normalized_ppl(log_prob, chars); }
double Aggregate::token_ppl() const { return normalized_ppl(log_prob, tokens); }

DocScore score_document(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                        const corpus::Document& doc) {
    if (doc.text.empty()) throw std::invalid_argument("cannot score empty document " + doc.id);
    std::vector<int> ids = tokenizer.encode(doc.text);
    DocScore s;
    s.id = doc.id;
    s.lang = doc.lang;
    s.log_prob = model.sequence_log_prob(ids);
    s.chars = unicode::count_codepoints(doc.text);
    s.tokens = ids.size();
    return s;
}

std::vector<DocScore> score_corpus(const score::ScoringModel& model,
                                   const tok::Tokenizer& tokenizer,
                                   const std::vector<corpus::Document>& docs, unsigned workers) {
    std::vector<DocScore> out(docs.size());
    util::parallel_for(docs.size(), workers,
                       [&](std::size_t i) { out[i] = score_document(model, tokenizer, docs[i]); });
    return out;
}

Aggregate pool(const std::vector<DocScore>& scores) {
    Aggregate a;
    for (const auto& s : scores) {
        a.log_prob += s.log_prob;
        a.chars += s.chars;
        a.tokens += s.tokens;
        a.docs += 1;
    }
    return a;
}

std::map<std::string, Aggregate> by_language(const std::vector<DocScore>& scores) {
    std::map<std::string, std::vector<DocScore>> groups;
    for (const auto& s : scores) groups[s.lang].push_back(s);
    std::map<std::string, Aggregate> out;
    for (const auto& [lang, group] : groups) out[lang] = pool(group);
    return out;
}

std::map<std::string, double> family_char_ppl(const std::map<std::string, Aggregate>& langs) {
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (const auto& [lang, agg] : langs) {
        auto& [sum, n] = sums[registry::family_of(lang)];
        sum += agg.char_ppl();
        n += 1;
    }
    std::map<std::string, double> out;
    for (const auto& [family, sn] : sums) out[family] = sn.first / static_cast<double>(sn.second);
    return out;
}

bool is_held_out(const corpus::Document& doc) {
    return corpus::text_hash64(doc.id) % 10 == 9;
}

std::vector<StrategyRow> compare_strategies(const std::vector<corpus::Document>& docs,
                                            const CompareConfig& cfg) {
    std::vector<corpus::Document> train, held;
    for (const auto& d : docs) (is_held_out(d) ? held : train).push_back(d);
    if (train.empty() || held.empty())
        throw std::invalid_argument("strategy comparison needs both split slices populated");

    std::vector<std::string> train_texts;
    train_texts.reserve(train.size());
    for (const auto& d : train) train_texts.push_back(d.text);

    // Reference char perplexities of the published full-scale runs, shown
    // alongside for orientation.
    auto reference = [](tok::Strategy s) {
        switch (s) {
            case tok::Strategy::bpe_default: return 6.94;
            case tok::Strategy::bpe_case: return 8.13;
            case tok::Strategy::bpe_arithmetic: return 7.99;
            case tok::Strategy::bpe_combined: return 8.43;
            case tok::Strategy::char_level: return 9.47;
        }
        return 0.0;
    };

    std::vector<StrategyRow> rows;
    for (tok::Strategy strategy : tok::all_strategies()) {
        tok::TrainConfig tc;
        tc.strategy = strategy;
        tc.vocab_size = cfg.vocab_size;
        tok::Tokenizer tokenizer = tok::Tokenizer::train(train_texts, tc);

        std::vector<std::vector<int>> sequences(train_texts.size());
        util::parallel_for(train_texts.size(), cfg.workers,
                           [&](std::size_t i) { sequences[i] = tokenizer.encode(train_texts[i]); });
        score::NGramModel model = score::NGramModel::train(
            sequences, static_cast<int>(tokenizer.vocab_size()), cfg.ngram);

        auto scores = score_corpus(model, tokenizer, held, cfg.workers);
        StrategyRow row;
        row.strategy = strategy;
        row.char_ppl = pool(scores).char_ppl();
        row.reference = reference(strategy);
        row.vocab = tokenizer.vocab_size();
        rows.push_back(row);
    }
    return rows;
}

std::string format_comparison(const std::vector<StrategyRow>& rows) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "strategy" << std::right << std::setw(8) << "vocab"
        << std::setw(12) << "char-ppl" << std::setw(12) << "reference" << "\n";
    out << std::string(44, '-') << "\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        out << std::left << std::setw(12) << tok::to_string(r.strategy) << std::right
            << std::setw(8) << r.vocab << std::setw(12) << r.char_ppl << std::setw(12)
            << r.reference << "\n";
    }
    return out.str();
}

}  // namespace lmkit::ppl
