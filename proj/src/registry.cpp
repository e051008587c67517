#include "lmkit/registry.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace lmkit::registry {

const std::vector<LanguageInfo>& languages() {
    static const std::vector<LanguageInfo> table = {
        {"af", "Germanic"},      {"ar", "Afro-Asiatic"},  {"az", "Oghuz"},
        {"ba", "Kipchak"},       {"be", "Slavic"},        {"bg", "Slavic"},
        {"bn", "Indo-Aryan"},    {"bxr", "Mongolic"},     {"cv", "Oghuz"},
        {"da", "Germanic"},      {"de", "Germanic"},      {"el", "Greek"},
        {"en", "Germanic"},      {"es", "Romance"},       {"eu", "Basque"},
        {"fa", "Iranian"},       {"fi", "Uralic"},        {"fr", "Romance"},
        {"he", "Afro-Asiatic"},  {"hi", "Indo-Aryan"},    {"hu", "Uralic"},
        {"hy", "Armenian"},      {"id", "Austronesian"},  {"it", "Romance"},
        {"ja", "Japonic"},       {"ka", "Kartvelian"},    {"kk", "Kipchak"},
        {"ko", "Koreanic"},      {"ky", "Kipchak"},       {"lt", "Baltic"},
        {"lv", "Baltic"},        {"ml", "Dravidian"},     {"mn", "Mongolic"},
        {"mr", "Indo-Aryan"},    {"ms", "Austronesian"},  {"my", "Sino-Tibetan"},
        {"nl", "Germanic"},      {"os", "Iranian"},       {"pl", "Slavic"},
        {"pt", "Romance"},       {"ro", "Romance"},       {"ru", "Slavic"},
        {"sah", "Siberian"},     {"sv", "Germanic"},      {"sw", "Niger-Congo"},
        {"ta", "Dravidian"},     {"te", "Dravidian"},     {"tg", "Iranian"},
        {"th", "Kra-Dai"},       {"tk", "Oghuz"},         {"tr", "Oghuz"},
        {"tt", "Kipchak"},       {"tyv", "Siberian"},     {"uk", "Slavic"},
        {"ur", "Indo-Aryan"},    {"uz", "Karluk"},        {"vi", "Austro-Asiatic"},
        {"xal", "Mongolic"},     {"yo", "Niger-Congo"},   {"zh", "Sino-Tibetan"},
    };
    return table;
}

bool is_known(const std::string& code) {
    const auto& langs = languages();
    return std::any_of(langs.begin(), langs.end(),
                       [&](const LanguageInfo& l) { return l.code == code; });
}

const std::string& family_of(const std::string& code) {
    for (const auto& l : languages())
        if (l.code == code) return l.family;
    throw std::invalid_argument("unknown language code: " + code);
}

std::vector<std::string> families() {
    std::set<std::string> out;
    for (const auto& l : languages()) out.insert(l.family);
    return {out.begin(), out.end()};
}

}  // namespace lmkit::registry
