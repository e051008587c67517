#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lmkit/corpus.hpp"
#include "lmkit/eval.hpp"
#include "lmkit/jsonl.hpp"
#include "lmkit/metrics.hpp"
#include "lmkit/model_io.hpp"
#include "lmkit/ngram.hpp"
#include "lmkit/perplexity.hpp"
#include "lmkit/quality.hpp"
#include "lmkit/registry.hpp"
#include "lmkit/report.hpp"
#include "lmkit/scoring.hpp"
#include "lmkit/tokenizer.hpp"
#include "lmkit/transformer.hpp"
#include "lmkit/util.hpp"

namespace {

using namespace lmkit;

std::string utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// The timestamp is the only field that varies between identical runs; it is
// kept at the top level so consumers can drop it and diff the rest.
void write_manifest(const std::string& path, nlohmann::json body) {
    body["timestamp"] = utc_now();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << body.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::vector<corpus::Stage> parse_stages(const std::string& spec) {
    std::vector<corpus::Stage> stages;
    std::istringstream iss(spec);
    std::string name;
    while (std::getline(iss, name, ',')) {
        if (name == "dedup")
            stages.push_back(corpus::Stage::dedup);
        else if (name == "entropy")
            stages.push_back(corpus::Stage::entropy);
        else if (name == "classifier")
            stages.push_back(corpus::Stage::classifier);
        else if (name == "heuristic")
            stages.push_back(corpus::Stage::heuristic);
        else
            throw CLI::ValidationError("--stages", "unknown stage: " + name);
    }
    if (stages.empty()) throw CLI::ValidationError("--stages", "no stages given");
    return stages;
}

int cmd_pipeline(const std::string& input, const std::string& output,
                 const std::string& decisions_path, const std::string& stages_spec,
                 const std::string& classifier_path, corpus::PipelineConfig cfg) {
    cfg.order = parse_stages(stages_spec);
    auto docs = jsonl::read_documents(input);
    std::unique_ptr<corpus::QualityClassifier> classifier;
    if (!classifier_path.empty())
        classifier = std::make_unique<corpus::QualityClassifier>(
            corpus::QualityClassifier::load(classifier_path));
    auto result = corpus::run_pipeline(docs, cfg, classifier.get());

    jsonl::write_documents(output, result.kept);
    if (!decisions_path.empty()) jsonl::write_decisions(decisions_path, result.decisions);

    std::map<std::string, std::size_t> verdicts;
    for (const auto& d : result.decisions) ++verdicts[corpus::to_string(d.verdict)];
    std::cout << "input documents:  " << docs.size() << "\n";
    std::cout << "kept documents:   " << result.kept.size() << "\n";
    for (const auto& [verdict, n] : verdicts)
        if (verdict != "keep") std::cout << "  " << verdict << ": " << n << "\n";
    return 0;
}

int cmd_stats(const std::string& input, bool by_family) {
    auto docs = jsonl::read_documents(input);
    auto stats = corpus::compute_stats(docs);
    std::cout << "lang    source   docs       chars\n";
    auto dump = [](const std::map<std::string, corpus::LangStats>& m, const char* source) {
        for (const auto& [lang, s] : m)
            std::printf("%-7s %-8s %-10llu %llu\n", lang.c_str(), source,
                        static_cast<unsigned long long>(s.doc_count),
                        static_cast<unsigned long long>(s.char_count));
    };
    dump(stats.wiki, "wiki");
    dump(stats.web, "web");
    auto totals = stats.totals();
    std::printf("total            %-10llu %llu\n",
                static_cast<unsigned long long>(totals.doc_count),
                static_cast<unsigned long long>(totals.char_count));
    if (by_family) {
        std::map<std::string, corpus::LangStats> fam;
        for (const auto* m : {&stats.wiki, &stats.web}) {
            for (const auto& [lang, s] : *m) {
                auto& f = fam[registry::family_of(lang)];
                f.char_count += s.char_count;
                f.doc_count += s.doc_count;
            }
        }
        std::cout << "\nfamily                     docs       chars\n";
        for (const auto& [family, s] : fam)
            std::printf("%-26s %-10llu %llu\n", family.c_str(),
                        static_cast<unsigned long long>(s.doc_count),
                        static_cast<unsigned long long>(s.char_count));
    }
    return 0;
}

int cmd_train_quality(const std::string& positive, const std::string& negative,
                      const std::string& output, corpus::QualityClassifier::TrainConfig cfg) {
    auto pos = jsonl::read_documents(positive);
    auto neg = jsonl::read_documents(negative);
    std::vector<std::string> texts;
    std::vector<int> labels;
    for (const auto& d : pos) {
        texts.push_back(d.text);
        labels.push_back(1);
    }
    for (const auto& d : neg) {
        texts.push_back(d.text);
        labels.push_back(0);
    }
    corpus::QualityClassifier clf;
    clf.train(texts, labels, cfg);
    clf.save(output);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < texts.size(); ++i)
        if ((clf.score(texts[i]) >= 0.5) == (labels[i] == 1)) ++correct;
    std::cout << "training accuracy: " << static_cast<double>(correct) / texts.size() << "\n";
    std::cout << "saved " << output << "\n";
    return 0;
}

int cmd_tok_train(const std::string& input, const std::string& strategy, std::size_t vocab_size,
                  const std::string& output) {
    auto docs = jsonl::read_documents(input);
    std::vector<std::string> texts;
    texts.reserve(docs.size());
    for (const auto& d : docs) texts.push_back(d.text);
    tok::TrainConfig cfg;
    cfg.strategy = tok::strategy_from_string(strategy);
    cfg.vocab_size = vocab_size;
    tok::Tokenizer t = tok::Tokenizer::train(texts, cfg);
    t.save(output);
    std::cout << "strategy: " << strategy << "\nvocab size: " << t.vocab_size() << "\nsaved "
              << output << "\n";
    return 0;
}

int cmd_tok_encode(const std::string& tokenizer_path, const std::string& text,
                   const std::string& file, bool ids_only) {
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    std::string payload = text;
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot read " + file);
        std::ostringstream ss;
        ss << in.rdbuf();
        payload = ss.str();
    }
    if (ids_only) {
        auto ids = t.encode(payload);
        for (std::size_t i = 0; i < ids.size(); ++i)
            std::cout << ids[i] << (i + 1 < ids.size() ? " " : "\n");
        return 0;
    }
    std::cout << nlohmann::json(t.encode_rendered(payload)).dump() << "\n";
    return 0;
}

int cmd_tok_decode(const std::string& tokenizer_path, const std::vector<int>& ids) {
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    std::cout << t.decode(ids) << "\n";
    return 0;
}

std::vector<std::vector<int>> encode_corpus(const tok::Tokenizer& t,
                                            const std::vector<corpus::Document>& docs,
                                            unsigned workers) {
    std::vector<std::vector<int>> out(docs.size());
    util::parallel_for(docs.size(), workers,
                       [&](std::size_t i) { out[i] = t.encode(docs[i].text); });
    return out;
}

int cmd_train_ngram(const std::string& input, const std::string& tokenizer_path, int order,
                    double add_k, const std::string& output, unsigned workers) {
    auto docs = jsonl::read_documents(input);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    score::NGramConfig cfg;
    cfg.order = order;
    cfg.add_k = add_k;
    auto model =
        score::NGramModel::train(encode_corpus(t, docs, workers),
                                 static_cast<int>(t.vocab_size()), cfg);
    model.save(output);
    std::cout << "order " << order << " model over vocab " << t.vocab_size() << "\nsaved "
              << output << "\n";
    return 0;
}

int cmd_train_lm(const std::string& input, const std::string& tokenizer_path,
                 const std::string& output, score::TransformerConfig cfg, int steps, int batch,
                 double lr, std::uint64_t data_seed) {
    auto docs = jsonl::read_documents(input);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    cfg.vocab_size = static_cast<int>(t.vocab_size());

    std::vector<std::vector<int>> windows;
    for (const auto& d : docs) {
        auto ids = t.encode(d.text);
        for (std::size_t s = 0; s + 2 <= ids.size();
             s += static_cast<std::size_t>(cfg.max_seq)) {
            std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(cfg.max_seq),
                                                    ids.size() - s);
            windows.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(s),
                                 ids.begin() + static_cast<std::ptrdiff_t>(s + len));
        }
    }
    if (windows.empty()) throw std::runtime_error("no training windows");

    score::Transformer model(cfg);
    std::mt19937_64 rng(data_seed);
    for (int step = 0; step < steps; ++step) {
        std::vector<std::vector<int>> batch_seqs;
        for (int b = 0; b < batch; ++b)
            batch_seqs.push_back(windows[util::bounded_uint(rng, windows.size())]);
        double loss = model.train_step(batch_seqs, lr);
        if (step % 10 == 0 || step + 1 == steps)
            std::cout << "step " << step << " loss " << loss << "\n";
    }
    model.save(output);
    std::cout << "saved " << output << "\n";
    return 0;
}

int cmd_ppl(const std::string& input, const std::string& tokenizer_path,
            const std::string& model_path, bool by_lang, bool by_family, bool per_doc,
            unsigned workers) {
    auto docs = jsonl::read_documents(input);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    auto model = score::load_model(model_path);
    auto scores = ppl::score_corpus(*model, t, docs, workers);

    if (per_doc)
        for (const auto& s : scores)
            std::printf("%-16s %-5s char-ppl %10.4f  token-ppl %10.4f\n", s.id.c_str(),
                        s.lang.c_str(), s.char_ppl(), s.token_ppl());
    auto total = ppl::pool(scores);
    std::printf("overall: docs %zu  char-ppl %.4f  token-ppl %.4f\n", total.docs,
                total.char_ppl(), total.token_ppl());
    auto langs = ppl::by_language(scores);
    if (by_lang)
        for (const auto& [lang, agg] : langs)
            std::printf("lang %-5s docs %zu  char-ppl %.4f  token-ppl %.4f\n", lang.c_str(),
                        agg.docs, agg.char_ppl(), agg.token_ppl());
    if (by_family)
        for (const auto& [family, value] : ppl::family_char_ppl(langs))
            std::printf("family %-24s char-ppl %.4f\n", family.c_str(), value);
    return 0;
}

int cmd_compare(const std::string& input, std::size_t vocab_size, int order, double add_k,
                const std::string& chart_path, unsigned workers) {
    auto docs = jsonl::read_documents(input);
    ppl::CompareConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.ngram.order = order;
    cfg.ngram.add_k = add_k;
    cfg.workers = workers;
    auto rows = ppl::compare_strategies(docs, cfg);
    std::cout << ppl::format_comparison(rows);
    if (!chart_path.empty()) {
        std::vector<report::Bar> bars;
        for (const auto& r : rows) bars.push_back({tok::to_string(r.strategy), r.char_ppl});
        write_text(chart_path,
                   report::bar_chart_svg(bars, "Held-out character perplexity by tokenization",
                                         "char-ppl (lower is better)"));
        std::cout << "chart written to " << chart_path << "\n";
    }
    return 0;
}

int cmd_eval_classify(const std::string& task_path, const std::string& tokenizer_path,
                      const std::string& model_path, int few_shot, const std::string& output,
                      unsigned workers) {
    auto task = eval::load_classification(task_path);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    auto model = score::load_model(model_path);
    eval::ClassificationOptions opt;
    opt.few_shot_k = few_shot;
    opt.workers = workers;
    auto result = eval::classify(*model, t, task, opt);
    std::printf("task %s: accuracy %.4f over %zu examples\n", task.name.c_str(), result.accuracy,
                result.gold.size());
    if (!output.empty()) {
        std::ofstream out(output);
        for (std::size_t i = 0; i < result.predicted.size(); ++i)
            out << nlohmann::json{{"index", i},
                                  {"predicted", result.predicted[i]},
                                  {"gold", result.gold[i]}}
                       .dump()
                << "\n";
    }
    return 0;
}

int cmd_eval_label(const std::string& task_path, const std::string& tokenizer_path,
                   const std::string& model_path, bool gold_prefix, int few_shot,
                   const std::string& output, unsigned workers) {
    auto task = eval::load_labeling(task_path);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    auto model = score::load_model(model_path);
    eval::LabelingOptions opt;
    opt.gold_prefix = gold_prefix;
    opt.few_shot_k = few_shot;
    opt.workers = workers;
    auto result = eval::label_task(*model, t, task, opt);
    std::printf("task %s: tag precision %.4f  entity F1 %.4f (P %.4f R %.4f)\n",
                task.name.c_str(), result.tag_precision, result.entity_f1.f1,
                result.entity_f1.precision, result.entity_f1.recall);
    if (!output.empty()) {
        std::ofstream out(output);
        for (std::size_t i = 0; i < result.predicted.size(); ++i)
            out << nlohmann::json{{"index", i},
                                  {"words", task.examples[i].words},
                                  {"predicted", result.predicted[i]},
                                  {"gold", task.examples[i].tags}}
                       .dump()
                << "\n";
    }
    return 0;
}

int cmd_probe(const std::string& task_path, const std::string& tokenizer_path,
              const std::string& model_path, unsigned workers) {
    auto task = eval::load_probe(task_path);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    auto model = score::load_model(model_path);
    eval::ProbeOptions opt;
    opt.workers = workers;
    auto result = eval::probe(*model, t, task, opt);
    std::printf("task %s: accuracy %.4f over %zu examples\n", task.name.c_str(), result.accuracy,
                result.correct.size());
    return 0;
}

int cmd_generate(const std::string& task_path, const std::string& tokenizer_path,
                 const std::string& model_path, std::string preset, std::uint64_t seed,
                 int max_tokens_override, bool with_metrics, const std::string& output,
                 unsigned workers) {
    auto task = eval::load_generation(task_path);
    tok::Tokenizer t = tok::Tokenizer::load(tokenizer_path);
    auto model = score::load_model(model_path);
    if (preset.empty()) preset = task.preset;
    if (preset.empty()) throw std::runtime_error("no preset given by flag or task file");
    eval::GenerationConfig cfg = eval::generation_preset(preset);
    cfg.seed = seed;
    if (max_tokens_override > 0) cfg.max_tokens = max_tokens_override;
    auto outputs = eval::run_generation(*model, t, task, cfg, workers);

    std::ofstream out;
    if (!output.empty()) out.open(output);
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        std::cout << "[" << i << "] " << outputs[i].text << "\n";
        if (out.is_open())
            out << nlohmann::json{{"index", i},
                                  {"text", outputs[i].text},
                                  {"tokens", outputs[i].tokens},
                                  {"stopped", outputs[i].stopped}}
                       .dump()
                << "\n";
    }

    bool has_refs = !task.examples.empty() && !task.examples[0].references.empty();
    if (with_metrics && has_refs) {
        std::vector<std::string> preds;
        std::vector<std::vector<std::string>> refs;
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            preds.push_back(outputs[i].text);
            refs.push_back(task.examples[i].references);
        }
        double em_sum = 0.0, f1_sum = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            em_sum += metrics::exact_match(preds[i], refs[i]);
            f1_sum += metrics::token_f1(preds[i], refs[i]);
        }
        std::printf("bleu %.4f  rouge-l %.4f  em %.4f  token-f1 %.4f\n",
                    metrics::bleu(preds, refs), metrics::rouge_l(preds, refs),
                    em_sum / preds.size(), f1_sum / preds.size());
    }
    return 0;
}

int cmd_carbon(double energy_kwh, double co2, int devices, double days, double pue,
               double intensity) {
    report::CarbonConfig cfg{pue, intensity};
    if (energy_kwh > 0.0) {
        std::printf("energy %.2f kWh -> %.2f kg CO2 (PUE %.2f, %.0f g/kWh)\n", energy_kwh,
                    report::co2_kg(energy_kwh, cfg), cfg.pue, cfg.intensity_g_per_kwh);
        return 0;
    }
    if (co2 > 0.0) {
        std::printf("footprint %.2f kg CO2 -> %.2f kWh\n", co2,
                    report::energy_kwh_from_co2(co2, cfg));
        if (devices > 0 && days > 0.0)
            std::printf("implied mean device power: %.1f W over %d devices for %.1f days\n",
                        report::implied_device_power_w(co2, devices, days, cfg), devices, days);
        return 0;
    }
    std::cerr << "give --energy-kwh or --co2-kg\n";
    return 1;
}

int cmd_chart(const std::string& input, const std::string& output, const std::string& title,
              const std::string& value_label) {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot read " + input);
    nlohmann::json j;
    in >> j;
    std::vector<report::Bar> bars;
    for (const auto& row : j)
        bars.push_back({row.at("label").get<std::string>(), row.at("value").get<double>()});
    write_text(output, report::bar_chart_svg(bars, title, value_label));
    std::cout << "chart written to " << output << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilingual LM data curation, tokenization, and evaluation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->envname("LMKIT_CONFIG");

    unsigned workers = 1;
    app.add_option("--workers", workers, "worker threads for parallel stages")
        ->capture_default_str();
    std::string manifest_path = "lmkit-manifest.json";
    bool no_manifest = false;
    app.add_option("--manifest", manifest_path, "run manifest destination")
        ->capture_default_str();
    app.add_flag("--no-manifest", no_manifest, "skip writing the run manifest");

    // pipeline
    std::string in_path, out_path, decisions_path, classifier_path;
    std::string stages = "dedup,entropy,heuristic";
    corpus::PipelineConfig pcfg;
    auto* pipeline = app.add_subcommand("pipeline", "clean a document corpus");
    pipeline->add_option("--input", in_path)->required();
    pipeline->add_option("--output", out_path)->required();
    pipeline->add_option("--decisions", decisions_path);
    pipeline->add_option("--stages", stages, "comma list: dedup,entropy,classifier,heuristic")
        ->capture_default_str();
    pipeline->add_option("--classifier", classifier_path);
    pipeline->add_option("--keep-threshold", pcfg.classifier_keep_threshold)
        ->capture_default_str();
    pipeline->add_option("--entropy-low", pcfg.entropy.low_quantile)->capture_default_str();
    pipeline->add_option("--entropy-high", pcfg.entropy.high_quantile)->capture_default_str();
    pipeline->add_option("--min-length", pcfg.heuristics.min_length)->capture_default_str();
    pipeline->add_option("--max-digit-fraction", pcfg.heuristics.max_digit_fraction)
        ->capture_default_str();
    pipeline->add_option("--max-repeated-line-fraction",
                         pcfg.heuristics.max_repeated_line_fraction)
        ->capture_default_str();
    pipeline->add_option("--max-mean-word-length", pcfg.heuristics.max_mean_word_length)
        ->capture_default_str();

    // stats
    std::string stats_input;
    bool stats_by_family = false;
    auto* stats = app.add_subcommand("stats", "per-language corpus statistics");
    stats->add_option("--input", stats_input)->required();
    stats->add_flag("--by-family", stats_by_family);

    // train-quality
    std::string tq_pos, tq_neg, tq_out;
    corpus::QualityClassifier::TrainConfig tq_cfg;
    auto* train_quality = app.add_subcommand("train-quality", "fit the quality classifier");
    train_quality->add_option("--positive", tq_pos)->required();
    train_quality->add_option("--negative", tq_neg)->required();
    train_quality->add_option("--output", tq_out)->required();
    train_quality->add_option("--epochs", tq_cfg.epochs)->capture_default_str();
    train_quality->add_option("--lr", tq_cfg.learning_rate)->capture_default_str();
    train_quality->add_option("--seed", tq_cfg.seed)->capture_default_str();

    // tok-train
    std::string tt_input, tt_strategy = "default", tt_out;
    std::size_t tt_vocab = 4096;
    auto* tok_train = app.add_subcommand("tok-train", "learn a tokenizer from a corpus");
    tok_train->add_option("--input", tt_input)->required();
    tok_train->add_option("--strategy", tt_strategy, "default|case|arithmetic|combined|char")
        ->capture_default_str();
    tok_train->add_option("--vocab-size", tt_vocab)->capture_default_str();
    tok_train->add_option("--output", tt_out)->required();

    // tok-encode
    std::string te_tok, te_text, te_file;
    bool te_ids = false;
    auto* tok_encode = app.add_subcommand("tok-encode", "tokenize text");
    tok_encode->add_option("--tokenizer", te_tok)->required();
    tok_encode->add_option("--text", te_text);
    tok_encode->add_option("--file", te_file);
    tok_encode->add_flag("--ids", te_ids, "print token ids instead of rendered tokens");

    // tok-decode
    std::string td_tok;
    std::vector<int> td_ids;
    auto* tok_decode = app.add_subcommand("tok-decode", "detokenize ids");
    tok_decode->add_option("--tokenizer", td_tok)->required();
    tok_decode->add_option("--ids", td_ids)->required()->expected(-1);

    // train-ngram
    std::string tn_input, tn_tok, tn_out;
    int tn_order = 3;
    double tn_add_k = 1.0;
    auto* train_ngram = app.add_subcommand("train-ngram", "fit the n-gram scorer");
    train_ngram->add_option("--input", tn_input)->required();
    train_ngram->add_option("--tokenizer", tn_tok)->required();
    train_ngram->add_option("--order", tn_order)->capture_default_str();
    train_ngram->add_option("--add-k", tn_add_k)->capture_default_str();
    train_ngram->add_option("--output", tn_out)->required();

    // train-lm
    std::string tl_input, tl_tok, tl_out;
    score::TransformerConfig tl_cfg;
    int tl_steps = 50, tl_batch = 8;
    double tl_lr = 0.1;
    std::uint64_t tl_data_seed = 1;
    auto* train_lm = app.add_subcommand("train-lm", "fit the toy transformer scorer");
    train_lm->add_option("--input", tl_input)->required();
    train_lm->add_option("--tokenizer", tl_tok)->required();
    train_lm->add_option("--output", tl_out)->required();
    train_lm->add_option("--d-model", tl_cfg.d_model)->capture_default_str();
    train_lm->add_option("--layers", tl_cfg.n_layers)->capture_default_str();
    train_lm->add_option("--heads", tl_cfg.n_heads)->capture_default_str();
    train_lm->add_option("--max-seq", tl_cfg.max_seq)->capture_default_str();
    train_lm->add_option("--window", tl_cfg.window)->capture_default_str();
    train_lm->add_option("--seed", tl_cfg.seed)->capture_default_str();
    train_lm->add_option("--steps", tl_steps)->capture_default_str();
    train_lm->add_option("--batch", tl_batch)->capture_default_str();
    train_lm->add_option("--lr", tl_lr)->capture_default_str();

    // ppl
    std::string pp_input, pp_tok, pp_model;
    bool pp_by_lang = false, pp_by_family = false, pp_per_doc = false;
    auto* ppl_cmd = app.add_subcommand("ppl", "character and token perplexity");
    ppl_cmd->add_option("--input", pp_input)->required();
    ppl_cmd->add_option("--tokenizer", pp_tok)->required();
    ppl_cmd->add_option("--model", pp_model)->required();
    ppl_cmd->add_flag("--by-lang", pp_by_lang);
    ppl_cmd->add_flag("--by-family", pp_by_family);
    ppl_cmd->add_flag("--per-doc", pp_per_doc);

    // compare-strategies
    std::string cs_input, cs_chart;
    std::size_t cs_vocab = 4096;
    int cs_order = 3;
    double cs_add_k = 1.0;
    auto* compare = app.add_subcommand("compare-strategies",
                                       "held-out char perplexity per tokenization strategy");
    compare->add_option("--input", cs_input)->required();
    compare->add_option("--vocab-size", cs_vocab)->capture_default_str();
    compare->add_option("--order", cs_order)->capture_default_str();
    compare->add_option("--add-k", cs_add_k)->capture_default_str();
    compare->add_option("--chart", cs_chart, "also write an SVG bar chart");

    // eval-classify
    std::string ec_task, ec_tok, ec_model, ec_out;
    int ec_few = 0;
    auto* eval_classify = app.add_subcommand("eval-classify", "rank verbalized prompts");
    eval_classify->add_option("--task", ec_task)->required();
    eval_classify->add_option("--tokenizer", ec_tok)->required();
    eval_classify->add_option("--model", ec_model)->required();
    eval_classify->add_option("--few-shot", ec_few)->capture_default_str();
    eval_classify->add_option("--output", ec_out);

    // eval-label
    std::string el_task, el_tok, el_model, el_out;
    bool el_gold = false;
    int el_few = 0;
    auto* eval_label = app.add_subcommand("eval-label", "left-to-right sequence tagging");
    eval_label->add_option("--task", el_task)->required();
    eval_label->add_option("--tokenizer", el_tok)->required();
    eval_label->add_option("--model", el_model)->required();
    eval_label->add_flag("--gold-prefix", el_gold, "feed gold tags into the prefix");
    eval_label->add_option("--few-shot", el_few)->capture_default_str();
    eval_label->add_option("--output", el_out);

    // probe
    std::string pr_task, pr_tok, pr_model;
    auto* probe = app.add_subcommand("probe", "rank gold fillers against distractors");
    probe->add_option("--task", pr_task)->required();
    probe->add_option("--tokenizer", pr_tok)->required();
    probe->add_option("--model", pr_model)->required();

    // generate
    std::string ge_task, ge_tok, ge_model, ge_preset, ge_out;
    std::uint64_t ge_seed = 0;
    int ge_max = 0;
    bool ge_metrics = false;
    auto* generate = app.add_subcommand("generate", "sample continuations for a task");
    generate->add_option("--task", ge_task)->required();
    generate->add_option("--tokenizer", ge_tok)->required();
    generate->add_option("--model", ge_model)->required();
    generate->add_option("--preset", ge_preset, "overrides the task file's preset");
    generate->add_option("--seed", ge_seed)->capture_default_str();
    generate->add_option("--max-tokens", ge_max, "overrides the preset budget");
    generate->add_flag("--metrics", ge_metrics, "score against references");
    generate->add_option("--output", ge_out);

    // carbon
    double ca_energy = 0.0, ca_co2 = 0.0, ca_days = 0.0, ca_pue = 1.3, ca_intensity = 400.0;
    int ca_devices = 0;
    auto* carbon = app.add_subcommand("carbon", "training footprint arithmetic");
    carbon->add_option("--energy-kwh", ca_energy);
    carbon->add_option("--co2-kg", ca_co2);
    carbon->add_option("--devices", ca_devices);
    carbon->add_option("--days", ca_days);
    carbon->add_option("--pue", ca_pue)->capture_default_str();
    carbon->add_option("--intensity", ca_intensity, "grid g CO2 per kWh")->capture_default_str();

    // chart
    std::string ch_input, ch_output, ch_title = "values", ch_label = "value";
    auto* chart = app.add_subcommand("chart", "render label/value rows as an SVG bar chart");
    chart->add_option("--input", ch_input)->required();
    chart->add_option("--output", ch_output)->required();
    chart->add_option("--title", ch_title)->capture_default_str();
    chart->add_option("--value-label", ch_label)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    int rc = 0;
    try {
        pcfg.workers = workers;
        pcfg.entropy.workers = workers;
        if (pipeline->parsed())
            rc = cmd_pipeline(in_path, out_path, decisions_path, stages, classifier_path, pcfg);
        else if (stats->parsed())
            rc = cmd_stats(stats_input, stats_by_family);
        else if (train_quality->parsed())
            rc = cmd_train_quality(tq_pos, tq_neg, tq_out, tq_cfg);
        else if (tok_train->parsed())
            rc = cmd_tok_train(tt_input, tt_strategy, tt_vocab, tt_out);
        else if (tok_encode->parsed())
            rc = cmd_tok_encode(te_tok, te_text, te_file, te_ids);
        else if (tok_decode->parsed())
            rc = cmd_tok_decode(td_tok, td_ids);
        else if (train_ngram->parsed())
            rc = cmd_train_ngram(tn_input, tn_tok, tn_order, tn_add_k, tn_out, workers);
        else if (train_lm->parsed())
            rc = cmd_train_lm(tl_input, tl_tok, tl_out, tl_cfg, tl_steps, tl_batch, tl_lr,
                              tl_data_seed);
        else if (ppl_cmd->parsed())
            rc = cmd_ppl(pp_input, pp_tok, pp_model, pp_by_lang, pp_by_family, pp_per_doc,
                         workers);
        else if (compare->parsed())
            rc = cmd_compare(cs_input, cs_vocab, cs_order, cs_add_k, cs_chart, workers);
        else if (eval_classify->parsed())
            rc = cmd_eval_classify(ec_task, ec_tok, ec_model, ec_few, ec_out, workers);
        else if (eval_label->parsed())
            rc = cmd_eval_label(el_task, el_tok, el_model, el_gold, el_few, el_out, workers);
        else if (probe->parsed())
            rc = cmd_probe(pr_task, pr_tok, pr_model, workers);
        else if (generate->parsed())
            rc = cmd_generate(ge_task, ge_tok, ge_model, ge_preset, ge_seed, ge_max, ge_metrics,
                              ge_out, workers);
        else if (carbon->parsed())
            rc = cmd_carbon(ca_energy, ca_co2, ca_devices, ca_days, ca_pue, ca_intensity);
        else if (chart->parsed())
            rc = cmd_chart(ch_input, ch_output, ch_title, ch_label);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (rc == 0 && !no_manifest) {
        std::string config_text = app.config_to_str(true, false);
        nlohmann::json m;
        m["command"] = app.get_subcommands().front()->get_name();
        m["version"] = "0.1.0";
        m["config"] = config_text;
        char hash[20];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(util::fnv1a64(config_text)));
        m["config_hash"] = hash;
        write_manifest(manifest_path, std::move(m));
    }
    return rc;
}
