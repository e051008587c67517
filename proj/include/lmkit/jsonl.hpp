#pragma once

#include <string>
#include <vector>

#include "lmkit/corpus.hpp"

namespace lmkit::jsonl {

// One JSON object per line: {"id": ..., "lang": ..., "source": ..., "text": ...}.
// Blank lines are skipped; malformed lines throw with a line number.
std::vector<corpus::Document> read_documents(const std::string& path);
void write_documents(const std::string& path, const std::vector<corpus::Document>& docs);

void write_decisions(const std::string& path, const std::vector<corpus::FilterDecision>& decisions);

}  // namespace lmkit::jsonl
