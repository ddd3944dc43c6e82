#include "hrgr/training/postprocess.hpp"

#include <algorithm>

#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/errors.hpp"

namespace hrgr::training {

bool sentence_mentions(const corpus::Sentence& sentence, const corpus::Sentence& keyword) {
  if (keyword.empty()) return false;
  return std::search(sentence.begin(), sentence.end(), keyword.begin(), keyword.end()) != sentence.end();
}

corpus::Report postprocess_report(const corpus::Report& report, const KeywordMap& keyword_map) {
  corpus::Report out = report;
  for (const auto& [kw, text] : keyword_map) {
    const auto keyword = corpus::tokenize(kw);
    auto sentence = corpus::tokenize(text);
    if (!sentence_mentions(sentence, keyword)) {
      throw ContractError("postprocess: sentence '" + text + "' does not mention its keyword '" + kw + "'");
    }
    const bool found = std::any_of(out.begin(), out.end(),
                                   [&](const corpus::Sentence& s) { return sentence_mentions(s, keyword); });
    if (!found) out.push_back(std::move(sentence));
  }
  return out;
}

}  // namespace hrgr::training
