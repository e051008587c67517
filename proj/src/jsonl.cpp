#include "lmkit/jsonl.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lmkit::jsonl {

std::vector<corpus::Document> read_documents(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("jsonl: cannot read " + path);
    std::vector<corpus::Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            corpus::Document d;
            d.id = j.at("id").get<std::string>();
            d.lang = j.at("lang").get<std::string>();
            d.source = corpus::source_from_string(j.at("source").get<std::string>());
            d.text = j.at("text").get<std::string>();
            docs.push_back(std::move(d));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

void write_documents(const std::string& path, const std::vector<corpus::Document>& docs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("jsonl: cannot write " + path);
    for (const auto& d : docs) {
        nlohmann::json j{{"id", d.id},
                         {"lang", d.lang},
                         {"source", corpus::to_string(d.source)},
                         {"text", d.text}};
        out << j.dump() << "\n";
    }
}

void write_decisions(const std::string& path, const std::vector<corpus::FilterDecision>& decisions) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("jsonl: cannot write " + path);
    for (const auto& d : decisions) {
        nlohmann::json j{{"doc_id", d.doc_id},
                         {"verdict", corpus::to_string(d.verdict)},
                         {"score", d.score}};
        out << j.dump() << "\n";
    }
}

}  // namespace lmkit::jsonl
