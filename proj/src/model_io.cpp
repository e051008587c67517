#include "lmkit/model_io.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lmkit/ngram.hpp"
#include "lmkit/transformer.hpp"

namespace lmkit::score {

std::unique_ptr<ScoringModel> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model: cannot read " + path);
    nlohmann::json j;
    in >> j;
    in.close();
    if (j.contains("orders")) return std::make_unique<NGramModel>(NGramModel::load(path));
    if (j.contains("config") && j.contains("params"))
        return std::make_unique<Transformer>(Transformer::load(path));
    throw std::runtime_error("model: unrecognized layout in " + path);
}

}  // namespace lmkit::score
