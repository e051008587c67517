#pragma once

#include <memory>
#include <string>

#include "lmkit/scoring.hpp"

namespace lmkit::score {

// Loads whichever scorer the file holds, recognized by its layout.
std::unique_ptr<ScoringModel> load_model(const std::string& path);

}  // namespace lmkit::score
