#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hrgr/corpus/types.hpp"

namespace hrgr::corpus {

// Bidirectional token <-> id map. Ids 0..3 are reserved for PAD, BOS, EOS and
// UNK; every other token was seen at least min_freq times in the corpus it
// was built from.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumSpecials = 4;

  static Vocabulary build(std::span<const ReportSample> corpus, int min_freq);
  // `tokens` lists every token in id order, specials included.
  static Vocabulary from_tokens(std::vector<std::string> tokens, int min_freq);

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  bool contains(std::string_view token) const;
  std::size_t size() const { return id_to_token_.size(); }
  int min_freq() const { return min_freq_; }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // Token ids followed by EOS.
  std::vector<TokenId> encode(const Sentence& sentence) const;
  // Stops at the first EOS; PAD and BOS are dropped.
  Sentence decode(std::span<const TokenId> ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.min_freq_ == b.min_freq_ && a.id_to_token_ == b.id_to_token_;
  }

 private:
  int min_freq_ = 1;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

}  // namespace hrgr::corpus
