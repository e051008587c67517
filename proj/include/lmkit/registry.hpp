#pragma once

#include <string>
#include <vector>

namespace lmkit::registry {

struct LanguageInfo {
    std::string code;    // ISO 639 code
    std::string family;  // typological family/branch used for aggregation
};

// The 60 supported languages, ordered by code.
const std::vector<LanguageInfo>& languages();

bool is_known(const std::string& code);
const std::string& family_of(const std::string& code);  // throws on unknown code

// Distinct family names, sorted.
std::vector<std::string> families();

}  // namespace lmkit::registry
