#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hrgr/corpus/types.hpp"

namespace hrgr::training {

using KeywordMap = std::vector<std::pair<std::string, std::string>>;

// True when the sentence contains the keyword as a whole-token run.
bool sentence_mentions(const corpus::Sentence& sentence, const corpus::Sentence& keyword);

// Appends the mapped normal sentence for every keyword no sentence mentions,
// in keyword_map order. Throws ContractError if a mapped sentence does not
// itself mention its keyword, since the result would not be idempotent.
corpus::Report postprocess_report(const corpus::Report& report, const KeywordMap& keyword_map);

}  // namespace hrgr::training
