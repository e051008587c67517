// Generates the bundled demo data: a small three-language corpus (Latin,
// Cyrillic, and Greek scripts) plus one task file per evaluation mode. All
// output is a pure function of --seed, so regenerating never dirties the
// checked-in files.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmkit/corpus.hpp"
#include "lmkit/jsonl.hpp"
#include "lmkit/unicode.hpp"
#include "lmkit/util.hpp"

namespace {

using namespace lmkit;

struct Syllables {
    std::vector<std::string> onsets;
    std::vector<std::string> vowels;
    std::vector<std::string> codas;
};

const Syllables& syllables_for(const std::string& lang) {
    static const Syllables en{
        {"b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "w", "st", "th", "br",
         "cl"},
        {"a", "e", "i", "o", "u", "ea", "ou", "ai"},
        {"", "", "n", "r", "s", "t", "nd", "st", "ck"}};
    static const Syllables ru{
        {"б", "в", "г", "д", "ж", "з", "к", "л", "м", "н", "п", "р", "с", "т", "ч", "ст", "пр"},
        {"а", "е", "и", "о", "у", "я", "ы"},
        {"", "", "н", "р", "с", "т", "в", "л", "й"}};
    static const Syllables el{
        {"β", "γ", "δ", "θ", "κ", "λ", "μ", "ν", "π", "ρ", "σ", "τ", "φ", "χ", "στ", "πρ"},
        {"α", "ε", "η", "ι", "ο", "υ", "ω", "ου"},
        {"", "", "ν", "ς", "ρ"}};
    if (lang == "en") return en;
    if (lang == "ru") return ru;
    return el;
}

std::string make_word(const Syllables& s, std::mt19937_64& rng) {
    std::size_t n = 1 + util::bounded_uint(rng, 3);
    std::string w;
    for (std::size_t i = 0; i < n; ++i) {
        w += s.onsets[util::bounded_uint(rng, s.onsets.size())];
        w += s.vowels[util::bounded_uint(rng, s.vowels.size())];
        w += s.codas[util::bounded_uint(rng, s.codas.size())];
    }
    return w;
}

// A fixed per-language lexicon sampled with a squared-uniform index, so a
// few words dominate the way natural frequencies do.
std::vector<std::string> make_lexicon(const std::string& lang, std::mt19937_64& rng) {
    const auto& s = syllables_for(lang);
    std::vector<std::string> words;
    words.reserve(400);
    for (int i = 0; i < 400; ++i) words.push_back(make_word(s, rng));
    return words;
}

std::string pick_word(const std::vector<std::string>& lexicon, std::mt19937_64& rng) {
    double u = util::uniform01(rng);
    auto idx = static_cast<std::size_t>(u * u * static_cast<double>(lexicon.size()));
    return lexicon[std::min(idx, lexicon.size() - 1)];
}

std::string capitalize(const std::string& word) {
    auto d = unicode::decode_at(word, 0);
    std::string out = unicode::to_utf8(unicode::to_upper(d.cp));
    out += word.substr(d.len);
    return out;
}

std::string make_sentence(const std::vector<std::string>& lexicon, std::mt19937_64& rng) {
    std::size_t n = 5 + util::bounded_uint(rng, 10);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        std::string w = pick_word(lexicon, rng);
        if (i == 0)
            w = capitalize(w);
        else if (util::uniform01(rng) < 0.04)
            w = capitalize(w);  // occasional proper noun
        if (i > 0) s += (i + 1 < n && util::uniform01(rng) < 0.06) ? ", " : " ";
        s += w;
    }
    if (util::uniform01(rng) < 0.1) {
        auto a = util::bounded_uint(rng, 90) + 10;
        auto b = util::bounded_uint(rng, 90) + 10;
        s += " " + std::to_string(a) + " + " + std::to_string(b) + " = " + std::to_string(a + b);
    }
    double t = util::uniform01(rng);
    s += t < 0.8 ? "." : (t < 0.9 ? "?" : "!");
    return s;
}

std::string make_document_text(const std::vector<std::string>& lexicon, std::mt19937_64& rng) {
    std::size_t n = 3 + util::bounded_uint(rng, 7);
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) text += util::uniform01(rng) < 0.15 ? "\n" : " ";
        text += make_sentence(lexicon, rng);
    }
    return text;
}

std::vector<corpus::Document> make_corpus(std::uint64_t seed, std::size_t bytes_per_lang) {
    std::vector<corpus::Document> docs;
    for (const std::string lang : {"en", "ru", "el"}) {
        std::mt19937_64 rng(seed ^ util::fnv1a64(lang));
        auto lexicon = make_lexicon(lang, rng);
        std::size_t bytes = 0;
        int index = 0;
        while (bytes < bytes_per_lang) {
            corpus::Document d;
            d.lang = lang;
            d.source = index % 3 == 0 ? corpus::Source::wiki : corpus::Source::web;
            char id[32];
            std::snprintf(id, sizeof(id), "%s-%s-%05d", lang.c_str(),
                          corpus::to_string(d.source).c_str(), index);
            d.id = id;
            d.text = make_document_text(lexicon, rng);
            bytes += d.text.size();
            docs.push_back(std::move(d));
            ++index;
        }
    }
    return docs;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

nlohmann::json nli_task() {
    auto ex = [](const char* premise, const char* hypothesis, int label) {
        return nlohmann::json{{"fields", {{"premise", premise}, {"hypothesis", hypothesis}}},
                              {"label", label}};
    };
    return {
        {"type", "classification"},
        {"name", "nli-en"},
        {"template", "<s>{premise}, right? {mask}, {hypothesis}</s>"},
        {"verbalizers", {"Yes", "Also", "No"}},
        {"examples",
         {ex("The cat sleeps on the mat", "The cat is resting", 0),
          ex("The cat sleeps on the mat", "The weather is cold today", 1),
          ex("The cat sleeps on the mat", "The cat is running outside", 2),
          ex("Two children play in the park", "Some kids are playing", 0),
          ex("Two children play in the park", "Dinner was served late", 1),
          ex("Two children play in the park", "The park is empty", 2)}},
        {"demos",
         {ex("The train arrived on time", "The train was not late", 0),
          ex("The train arrived on time", "The station is large", 1),
          ex("The train arrived on time", "The train never came", 2)}},
    };
}

nlohmann::json pos_task() {
    auto ex = [](std::vector<std::string> words, std::vector<std::string> tags) {
        return nlohmann::json{{"words", std::move(words)}, {"tags", std::move(tags)}};
    };
    return {
        {"type", "labeling"},
        {"name", "pos-en"},
        {"lang", "en"},
        {"tagset",
         {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON",
          "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"}},
        {"examples",
         {ex({"I", "want", "to", "go", "to", "the", "cafeteria", "."},
             {"PRON", "VERB", "PART", "VERB", "ADP", "DET", "NOUN", "PUNCT"}),
          ex({"She", "reads", "a", "long", "book", "."},
             {"PRON", "VERB", "DET", "ADJ", "NOUN", "PUNCT"}),
          ex({"Birds", "fly", "south", "in", "winter", "."},
             {"NOUN", "VERB", "ADV", "ADP", "NOUN", "PUNCT"})}},
        {"demos",
         {ex({"We", "eat", "fresh", "bread", "."}, {"PRON", "VERB", "ADJ", "NOUN", "PUNCT"}),
          ex({"He", "walks", "to", "school", "."}, {"PRON", "VERB", "ADP", "NOUN", "PUNCT"})}},
    };
}

nlohmann::json ner_task() {
    auto ex = [](std::vector<std::string> words, std::vector<std::string> tags) {
        return nlohmann::json{{"words", std::move(words)}, {"tags", std::move(tags)}};
    };
    return {
        {"type", "labeling"},
        {"name", "ner-en"},
        {"lang", "en"},
        {"tagset", {"I-LOC", "I-MISC", "I-ORG", "I-PER", "O"}},
        {"examples",
         {ex({"Anna", "Petrova", "visited", "Berlin", "in", "May", "."},
             {"I-PER", "I-PER", "O", "I-LOC", "O", "O", "O"}),
          ex({"The", "Acme", "Council", "met", "in", "Oslo", "."},
             {"O", "I-ORG", "I-ORG", "O", "O", "I-LOC", "O"}),
          ex({"Marco", "won", "the", "Winter", "Cup", "."},
             {"I-PER", "O", "O", "I-MISC", "I-MISC", "O"})}},
        {"demos",
         {ex({"Lena", "moved", "to", "Madrid", "."}, {"I-PER", "O", "O", "I-LOC", "O"})}},
    };
}

nlohmann::json probe_task() {
    auto ex = [](const char* subject, const char* object) {
        return nlohmann::json{{"relation", "capital-of"},
                              {"template", "The capital of {subject} is {object}."},
                              {"subject", subject},
                              {"object", object}};
    };
    return {
        {"type", "probe"},
        {"name", "capitals-en"},
        {"seed", 7},
        {"examples",
         {ex("France", "Paris"), ex("Italy", "Rome"), ex("Spain", "Madrid"),
          ex("Norway", "Oslo"), ex("Greece", "Athens"), ex("Austria", "Vienna"),
          ex("Finland", "Helsinki"), ex("Portugal", "Lisbon")}},
    };
}

nlohmann::json rephrase_task() {
    auto ex = [](const char* text, std::vector<std::string> refs) {
        return nlohmann::json{{"fields", {{"text", text}}}, {"references", std::move(refs)}};
    };
    return {
        {"type", "generation"},
        {"name", "rephrase-en"},
        {"preset", "tapaco-zero"},
        {"prompt_template", "Rephrase: {text} ==>"},
        {"demo_template", "Rephrase: {text} ==> {paraphrase}</s>"},
        {"examples",
         {ex("I eat cheese", {"I am eating cheese", "Cheese is what I eat"}),
          ex("The dog runs fast", {"The dog is quick", "That dog runs quickly"}),
          ex("She likes rain", {"Rain pleases her", "She enjoys the rain"})}},
        {"demos",
         {nlohmann::json{{"fields",
                          {{"text", "He reads books"}, {"paraphrase", "Books are what he reads"}}}},
          nlohmann::json{{"fields",
                          {{"text", "We sing songs"}, {"paraphrase", "Songs are sung by us"}}}}}},
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regenerate the bundled demo corpus and task files"};
    std::string out_dir = "data";
    std::uint64_t seed = 7;
    std::size_t bytes_per_lang = 340000;
    app.add_option("--out-dir", out_dir)->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--bytes-per-lang", bytes_per_lang)->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(std::filesystem::path(out_dir) / "tasks");
        auto docs = make_corpus(seed, bytes_per_lang);
        jsonl::write_documents((std::filesystem::path(out_dir) / "mini_corpus.jsonl").string(),
                               docs);
        std::size_t bytes = 0;
        for (const auto& d : docs) bytes += d.text.size();
        std::printf("mini_corpus.jsonl: %zu docs, %zu text bytes\n", docs.size(), bytes);

        auto tasks = std::filesystem::path(out_dir) / "tasks";
        write_json(tasks / "nli_en.json", nli_task());
        write_json(tasks / "pos_en.json", pos_task());
        write_json(tasks / "ner_en.json", ner_task());
        write_json(tasks / "probe_en.json", probe_task());
        write_json(tasks / "rephrase_en.json", rephrase_task());
        std::printf("task files written to %s\n", tasks.string().c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
