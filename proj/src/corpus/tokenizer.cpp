#include "hrgr/corpus/tokenizer.hpp"

#include <cctype>

namespace hrgr::corpus {

Sentence flatten(const Report& report) {
  Sentence out;
  for (const auto& s : report) out.insert(out.end(), s.begin(), s.end());
  return out;
}

Sentence tokenize(std::string_view text) {
  Sentence tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, raw);
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

std::string detokenize(const Sentence& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace hrgr::corpus
