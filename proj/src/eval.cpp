#include "lmkit/eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "lmkit/util.hpp"

namespace lmkit::eval {

std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& fields) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        std::size_t open = tpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        out.append(tpl, pos, open - pos);
        std::size_t close = tpl.find('}', open);
        if (close == std::string::npos)
            throw std::invalid_argument("template: unterminated slot in " + tpl);
        std::string key = tpl.substr(open + 1, close - open - 1);
        auto it = fields.find(key);
        if (it == fields.end()) throw std::invalid_argument("template: no value for {" + key + "}");
        out += it->second;
        pos = close + 1;
    }
    return out;
}

namespace {

double candidate_score(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                       const std::string& text) {
    return -model.sequence_log_prob(tokenizer.encode(text));
}

}  // namespace

ClassificationResult classify(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                              const ClassificationTask& task,
                              const ClassificationOptions& options) {
    if (task.verbalizers.empty()) throw std::invalid_argument("classify: no verbalizers");
    if (task.examples.empty()) throw std::invalid_argument("classify: no examples");
    if (options.few_shot_k > 0 &&
        task.demos.size() < static_cast<std::size_t>(options.few_shot_k))
        throw std::invalid_argument("classify: not enough demonstrations");

    std::string demo_block;
    for (int k = 0; k < options.few_shot_k; ++k) {
        const auto& demo = task.demos[static_cast<std::size_t>(k)];
        auto fields = demo.fields;
        fields["mask"] = task.verbalizers.at(static_cast<std::size_t>(demo.label));
        demo_block += render_template(task.prompt_template, fields);
        demo_block += options.separator;
    }

    ClassificationResult result;
    result.predicted.resize(task.examples.size());
    result.gold.resize(task.examples.size());
    util::parallel_for(task.examples.size(), options.workers, [&](std::size_t i) {
        const auto& ex = task.examples[i];
        int best = 0;
        double best_score = 0.0;
        for (std::size_t v = 0; v < task.verbalizers.size(); ++v) {
            auto fields = ex.fields;
            fields["mask"] = task.verbalizers[v];
            std::string prompt = demo_block + render_template(task.prompt_template, fields);
            double s = candidate_score(model, tokenizer, prompt);
            if (v == 0 || s < best_score) {
                best_score = s;
                best = static_cast<int>(v);
            }
        }
        result.predicted[i] = best;
        result.gold[i] = ex.label;
    });
    result.accuracy = metrics::accuracy(result.predicted, result.gold);
    return result;
}

std::string tag_query_prefix(const std::string& lang, const std::vector<std::string>& words,
                             const std::vector<std::string>& prefix_tags, std::size_t index) {
    if (index >= words.size()) throw std::invalid_argument("tag prefix: index out of range");
    if (prefix_tags.size() < index) throw std::invalid_argument("tag prefix: missing prefix tags");
    std::string out = "<s>lang: " + lang + " \n Tagged sentence: ";
    for (std::size_t j = 0; j < index; ++j) {
        if (j) out += ' ';
        out += words[j] + "_" + prefix_tags[j];
    }
    out += ' ';
    out += words[index] + "_";
    return out;
}

std::string tagged_demo(const std::string& lang, const LabelingExample& example) {
    std::string out = "<s>lang: " + lang + " \n Tagged sentence: ";
    for (std::size_t j = 0; j < example.words.size(); ++j) {
        if (j) out += ' ';
        out += example.words[j] + "_" + example.tags[j];
    }
    out += "</s>";
    return out;
}

std::vector<std::string> label_sequence(const score::ScoringModel& model,
                                        const tok::Tokenizer& tokenizer,
                                        const LabelingTask& task,
                                        const std::vector<std::string>& words,
                                        const LabelingOptions& options,
                                        const std::vector<std::string>* gold_tags) {
    if (task.tagset.empty()) throw std::invalid_argument("labeling: empty tagset");
    if (options.gold_prefix && (gold_tags == nullptr || gold_tags->size() != words.size()))
        throw std::invalid_argument("labeling: gold prefix requested without gold tags");
    if (options.few_shot_k > 0 &&
        task.demos.size() < static_cast<std::size_t>(options.few_shot_k))
        throw std::invalid_argument("labeling: not enough demonstrations");

    std::string demo_block;
    for (int k = 0; k < options.few_shot_k; ++k) {
        demo_block += tagged_demo(task.lang, task.demos[static_cast<std::size_t>(k)]);
        demo_block += options.separator;
    }

    std::vector<std::string> predicted;
    predicted.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        const std::vector<std::string>& prefix = options.gold_prefix ? *gold_tags : predicted;
        std::string base = demo_block + tag_query_prefix(task.lang, words, prefix, i);
        std::size_t best = 0;
        double best_score = 0.0;
        for (std::size_t t = 0; t < task.tagset.size(); ++t) {
            double s = candidate_score(model, tokenizer, base + task.tagset[t]);
            if (t == 0 || s < best_score) {
                best_score = s;
                best = t;
            }
        }
        predicted.push_back(task.tagset[best]);
    }
    return predicted;
}

LabelingResult label_task(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                          const LabelingTask& task, const LabelingOptions& options) {
    if (task.examples.empty()) throw std::invalid_argument("labeling: no examples");
    LabelingResult result;
    result.predicted.resize(task.examples.size());
    util::parallel_for(task.examples.size(), options.workers, [&](std::size_t i) {
        const auto& ex = task.examples[i];
        result.predicted[i] =
            label_sequence(model, tokenizer, task, ex.words, options, &ex.tags);
    });
    std::vector<std::string> flat_pred, flat_gold;
    for (std::size_t i = 0; i < task.examples.size(); ++i) {
        flat_pred.insert(flat_pred.end(), result.predicted[i].begin(), result.predicted[i].end());
        flat_gold.insert(flat_gold.end(), task.examples[i].tags.begin(),
                         task.examples[i].tags.end());
    }
    result.tag_precision = metrics::tag_precision(flat_pred, flat_gold);
    result.entity_f1 = metrics::entity_micro_f1(flat_pred, flat_gold);
    return result;
}

ProbeResult probe(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                  const ProbeTask& task, const ProbeOptions& options) {
    if (task.examples.empty()) throw std::invalid_argument("probe: no examples");
    if (options.distractors < 1) throw std::invalid_argument("probe: need at least 1 distractor");

    // Fallback pools: every gold object seen for the same relation.
    std::map<std::string, std::set<std::string>> relation_objects;
    for (const auto& ex : task.examples) relation_objects[ex.relation].insert(ex.object);

    ProbeResult result;
    result.correct.resize(task.examples.size());
    result.shown.resize(task.examples.size());
    util::parallel_for(task.examples.size(), options.workers, [&](std::size_t i) {
        const auto& ex = task.examples[i];
        std::mt19937_64 rng = util::stream_rng(task.seed, i);

        std::vector<std::string> pool;
        if (!ex.candidates.empty()) {
            std::set<std::string> dedup(ex.candidates.begin(), ex.candidates.end());
            pool.assign(dedup.begin(), dedup.end());
        } else {
            const auto& objs = relation_objects.at(ex.relation);
            pool.assign(objs.begin(), objs.end());
        }
        pool.erase(std::remove(pool.begin(), pool.end(), ex.object), pool.end());
        util::shuffle(pool, rng);
        if (pool.size() > static_cast<std::size_t>(options.distractors))
            pool.resize(static_cast<std::size_t>(options.distractors));

        std::vector<std::string> candidates = {ex.object};
        candidates.insert(candidates.end(), pool.begin(), pool.end());
        util::shuffle(candidates, rng);
        result.shown[i] = candidates;

        std::size_t best = 0;
        double best_score = 0.0;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            std::string prompt = render_template(
                ex.prompt_template, {{"subject", ex.subject}, {"object", candidates[c]}});
            double s = candidate_score(model, tokenizer, prompt);
            if (c == 0 || s < best_score) {  // strict: ties keep the earliest
                best_score = s;
                best = c;
            }
        }
        result.correct[i] = candidates[best] == ex.object ? 1 : 0;
    });
    double hits = 0;
    for (int c : result.correct) hits += c;
    result.accuracy = hits / static_cast<double>(result.correct.size());
    return result;
}

GenerationConfig generation_preset(const std::string& name) {
    GenerationConfig cfg;
    if (name == "tapaco-zero") {
        cfg.sample = {0.85, 0};
        cfg.max_tokens = 50;
    } else if (name == "tapaco-few") {
        cfg.sample = {0.95, 0};
        cfg.max_tokens = 250;
        cfg.few_shot_k = 5;
    } else if (name == "qg-zero") {
        cfg.sample = {0.9, 0};
        cfg.max_tokens = 150;
    } else if (name == "qg-few") {
        cfg.sample = {0.95, 1};
        cfg.max_tokens = 150;
        cfg.few_shot_k = 3;
    } else if (name == "xquad-zero") {
        cfg.sample = {0.95, 1};
        cfg.max_tokens = 50;
    } else if (name == "xquad-few") {
        cfg.sample = {0.95, 0};
        cfg.max_tokens = 1250;
        cfg.few_shot_k = 3;
    } else {
        throw std::invalid_argument("unknown generation preset: " + name);
    }
    return cfg;
}

std::vector<std::string> preset_names() {
    return {"tapaco-zero", "tapaco-few", "qg-zero", "qg-few", "xquad-zero", "xquad-few"};
}

Generation generate(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                    const std::string& prompt, const GenerationConfig& cfg,
                    std::mt19937_64& rng) {
    if (cfg.max_tokens < 1) throw std::invalid_argument("generate: max_tokens must be positive");
    std::vector<int> ctx = tokenizer.encode(prompt);
    std::vector<int> produced;
    Generation out;
    for (int step = 0; step < cfg.max_tokens; ++step) {
        std::vector<double> lp = model.next_log_probs(ctx);
        int id = score::sample_token(lp, rng, cfg.sample);
        ctx.push_back(id);
        produced.push_back(id);
        std::string text = tokenizer.decode(produced);
        for (const auto& stop : cfg.stop) {
            std::size_t pos = text.find(stop);
            if (pos != std::string::npos) {
                out.text = text.substr(0, pos);
                out.tokens = static_cast<int>(produced.size());
                out.stopped = true;
                return out;
            }
        }
    }
    out.text = tokenizer.decode(produced);
    out.tokens = static_cast<int>(produced.size());
    return out;
}

std::string build_prompt(const GenerationTask& task, const GenerationExample& example,
                         const GenerationConfig& cfg) {
    if (cfg.few_shot_k > 0 && task.demos.size() < static_cast<std::size_t>(cfg.few_shot_k))
        throw std::invalid_argument("generation: not enough demonstrations");
    std::string prompt;
    for (int k = 0; k < cfg.few_shot_k; ++k) {
        if (task.demo_template.empty())
            throw std::invalid_argument("generation: few-shot run without demo_template");
        prompt += render_template(task.demo_template,
                                  task.demos[static_cast<std::size_t>(k)].fields);
        prompt += cfg.separator;
    }
    prompt += render_template(task.prompt_template, example.fields);
    return prompt;
}

std::vector<Generation> run_generation(const score::ScoringModel& model,
                                       const tok::Tokenizer& tokenizer,
                                       const GenerationTask& task, const GenerationConfig& cfg,
                                       unsigned workers) {
    if (task.examples.empty()) throw std::invalid_argument("generation: no examples");
    std::vector<Generation> outputs(task.examples.size());
    util::parallel_for(task.examples.size(), workers, [&](std::size_t i) {
        std::mt19937_64 rng = util::stream_rng(cfg.seed, i);
        outputs[i] = generate(model, tokenizer, build_prompt(task, task.examples[i], cfg), cfg, rng);
    });
    return outputs;
}

namespace {

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("task: cannot read " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

std::map<std::string, std::string> fields_of(const nlohmann::json& j) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : j.items()) out[k] = v.get<std::string>();
    return out;
}

}  // namespace

std::string task_type(const std::string& path) {
    return load_json(path).at("type").get<std::string>();
}

ClassificationTask load_classification(const std::string& path) {
    auto j = load_json(path);
    if (j.at("type") != "classification") throw std::invalid_argument(path + ": not a classification task");
    ClassificationTask t;
    t.name = j.value("name", path);
    t.prompt_template = j.at("template").get<std::string>();
    t.verbalizers = j.at("verbalizers").get<std::vector<std::string>>();
    auto parse_example = [&](const nlohmann::json& e) {
        ClassificationExample ex;
        ex.fields = fields_of(e.at("fields"));
        ex.label = e.at("label").get<int>();
        if (ex.label < 0 || ex.label >= static_cast<int>(t.verbalizers.size()))
            throw std::invalid_argument(path + ": label out of range");
        return ex;
    };
    for (const auto& e : j.at("examples")) t.examples.push_back(parse_example(e));
    if (j.contains("demos"))
        for (const auto& e : j.at("demos")) t.demos.push_back(parse_example(e));
    return t;
}

LabelingTask load_labeling(const std::string& path) {
    auto j = load_json(path);
    if (j.at("type") != "labeling") throw std::invalid_argument(path + ": not a labeling task");
    LabelingTask t;
    t.name = j.value("name", path);
    t.lang = j.at("lang").get<std::string>();
    t.tagset = j.at("tagset").get<std::vector<std::string>>();
    std::set<std::string> tags(t.tagset.begin(), t.tagset.end());
    auto parse_example = [&](const nlohmann::json& e) {
        LabelingExample ex;
        ex.words = e.at("words").get<std::vector<std::string>>();
        ex.tags = e.at("tags").get<std::vector<std::string>>();
        if (ex.words.size() != ex.tags.size() || ex.words.empty())
            throw std::invalid_argument(path + ": words/tags mismatch");
        for (const auto& tag : ex.tags)
            if (!tags.count(tag)) throw std::invalid_argument(path + ": tag outside tagset: " + tag);
        return ex;
    };
    for (const auto& e : j.at("examples")) t.examples.push_back(parse_example(e));
    if (j.contains("demos"))
        for (const auto& e : j.at("demos")) t.demos.push_back(parse_example(e));
    return t;
}

ProbeTask load_probe(const std::string& path) {
    auto j = load_json(path);
    if (j.at("type") != "probe") throw std::invalid_argument(path + ": not a probe task");
    ProbeTask t;
    t.name = j.value("name", path);
    t.seed = j.value("seed", std::uint64_t{7});
    for (const auto& e : j.at("examples")) {
        ProbeExample ex;
        ex.relation = e.at("relation").get<std::string>();
        ex.prompt_template = e.at("template").get<std::string>();
        ex.subject = e.at("subject").get<std::string>();
        ex.object = e.at("object").get<std::string>();
        if (e.contains("candidates"))
            ex.candidates = e.at("candidates").get<std::vector<std::string>>();
        t.examples.push_back(std::move(ex));
    }
    return t;
}

GenerationTask load_generation(const std::string& path) {
    auto j = load_json(path);
    if (j.at("type") != "generation") throw std::invalid_argument(path + ": not a generation task");
    GenerationTask t;
    t.name = j.value("name", path);
    t.preset = j.value("preset", std::string{});
    t.prompt_template = j.at("prompt_template").get<std::string>();
    t.demo_template = j.value("demo_template", std::string{});
    for (const auto& e : j.at("examples")) {
        GenerationExample ex;
        ex.fields = fields_of(e.at("fields"));
        if (e.contains("references"))
            ex.references = e.at("references").get<std::vector<std::string>>();
        t.examples.push_back(std::move(ex));
    }
    if (j.contains("demos")) {
        for (const auto& e : j.at("demos")) {
            GenerationExample ex;
            ex.fields = fields_of(e.at("fields"));
            t.demos.push_back(std::move(ex));
        }
    }
    return t;
}

}  // namespace lmkit::eval
