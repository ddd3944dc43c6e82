#pragma once

#include <string>
#include <string_view>

#include "hrgr/corpus/types.hpp"

namespace hrgr::corpus {

// Lowercases, splits on whitespace and emits every ASCII punctuation
// character as its own token: "The lungs are clear." -> the lungs are clear .
Sentence tokenize(std::string_view text);

// Inverse of tokenize for already-tokenized text: tokens joined by one space.
std::string detokenize(const Sentence& tokens);

}  // namespace hrgr::corpus
