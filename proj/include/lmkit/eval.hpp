#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lmkit/metrics.hpp"
#include "lmkit/scoring.hpp"
#include "lmkit/tokenizer.hpp"

namespace lmkit::eval {

// Replaces every {name} slot with its field value; unknown slots throw.
std::string render_template(const std::string& tpl,
                            const std::map<std::string, std::string>& fields);

// ---- classification by ranking ------------------------------------------

struct ClassificationExample {
    std::map<std::string, std::string> fields;
    int label = -1;
};

struct ClassificationTask {
    std::string name;
    std::string prompt_template;           // field slots plus a {mask} slot
    std::vector<std::string> verbalizers;  // position defines the label id
    std::vector<ClassificationExample> examples;
    std::vector<ClassificationExample> demos;
};

struct ClassificationOptions {
    int few_shot_k = 0;
    std::string separator = "\n";
    unsigned workers = 1;
};

struct ClassificationResult {
    std::vector<int> predicted;
    std::vector<int> gold;
    double accuracy = 0.0;
};

// A candidate's score is the total (length-unnormalized) negative log
// likelihood of the fully rendered prompt; the lowest-scoring verbalizer
// wins, earliest index on ties.
ClassificationResult classify(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                              const ClassificationTask& task,
                              const ClassificationOptions& options = {});

// ---- left-to-right sequence labeling -------------------------------------

struct LabelingExample {
    std::vector<std::string> words;
    std::vector<std::string> tags;
};

struct LabelingTask {
    std::string name;
    std::string lang;
    std::vector<std::string> tagset;
    std::vector<LabelingExample> examples;
    std::vector<LabelingExample> demos;
};

struct LabelingOptions {
    bool gold_prefix = false;  // default feeds previously PREDICTED tags back
    int few_shot_k = 0;
    std::string separator = "\n";
    unsigned workers = 1;
};

// Query prefix for the word at `index` given already-assigned prefix tags.
std::string tag_query_prefix(const std::string& lang, const std::vector<std::string>& words,
                             const std::vector<std::string>& prefix_tags, std::size_t index);

// A fully tagged sentence, used as a few-shot demonstration.
std::string tagged_demo(const std::string& lang, const LabelingExample& example);

std::vector<std::string> label_sequence(const score::ScoringModel& model,
                                        const tok::Tokenizer& tokenizer,
                                        const LabelingTask& task,
                                        const std::vector<std::string>& words,
                                        const LabelingOptions& options = {},
                                        const std::vector<std::string>* gold_tags = nullptr);

struct LabelingResult {
    std::vector<std::vector<std::string>> predicted;
    double tag_precision = 0.0;
    metrics::PRF entity_f1;
};

LabelingResult label_task(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                          const LabelingTask& task, const LabelingOptions& options = {});

// ---- knowledge probing ----------------------------------------------------

struct ProbeExample {
    std::string relation;
    std::string prompt_template;  // {subject} and {object} slots
    std::string subject;
    std::string object;                   // gold filler
    std::vector<std::string> candidates;  // optional explicit pool
};

struct ProbeTask {
    std::string name;
    std::uint64_t seed = 7;
    std::vector<ProbeExample> examples;
};

struct ProbeOptions {
    int distractors = 2;
    unsigned workers = 1;
};

struct ProbeResult {
    std::vector<int> correct;  // 0/1 per example
    std::vector<std::vector<std::string>> shown;  // shuffled candidate lists
    double accuracy = 0.0;
};

// Each example ranks the gold filler against seeded distractors drawn from
// the example's candidate pool (or the union of gold objects sharing its
// relation). Candidate order is shuffled per example and ties go to the
// earliest shuffled candidate, so a constant scorer is exactly at chance.
ProbeResult probe(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                  const ProbeTask& task, const ProbeOptions& options = {});

// ---- sampling-based generation --------------------------------------------

struct GenerationConfig {
    score::SampleConfig sample;
    int max_tokens = 50;
    int few_shot_k = 0;
    std::vector<std::string> stop = {"</s>"};
    std::string separator = "\n";
    std::uint64_t seed = 0;
};

// Named presets covering the supported generation tasks, zero- and few-shot.
GenerationConfig generation_preset(const std::string& name);
std::vector<std::string> preset_names();

struct GenerationExample {
    std::map<std::string, std::string> fields;
    std::vector<std::string> references;
};

struct GenerationTask {
    std::string name;
    std::string preset;
    std::string prompt_template;
    std::string demo_template;  // includes the target completion slot
    std::vector<GenerationExample> examples;
    std::vector<GenerationExample> demos;
};

struct Generation {
    std::string text;
    int tokens = 0;
    bool stopped = false;  // a stop string ended it before the budget
};

Generation generate(const score::ScoringModel& model, const tok::Tokenizer& tokenizer,
                    const std::string& prompt, const GenerationConfig& cfg,
                    std::mt19937_64& rng);

std::string build_prompt(const GenerationTask& task, const GenerationExample& example,
                         const GenerationConfig& cfg);

// One generation per example, each from its own seed-derived RNG stream.
std::vector<Generation> run_generation(const score::ScoringModel& model,
                                       const tok::Tokenizer& tokenizer,
                                       const GenerationTask& task, const GenerationConfig& cfg,
                                       unsigned workers = 1);

// ---- task files ------------------------------------------------------------

std::string task_type(const std::string& path);
ClassificationTask load_classification(const std::string& path);
LabelingTask load_labeling(const std::string& path);
ProbeTask load_probe(const std::string& path);
GenerationTask load_generation(const std::string& path);

}  // namespace lmkit::eval
