#include "hrgr/corpus/vocabulary.hpp"

#include <algorithm>
#include <map>

#include "hrgr/errors.hpp"

namespace hrgr::corpus {

namespace {
const std::vector<std::string> kSpecials = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary Vocabulary::build(std::span<const ReportSample> corpus, int min_freq) {
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& sample : corpus) {
    for (const auto& sentence : sample.report) {
      for (const auto& tok : sentence) ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= static_cast<std::size_t>(min_freq) &&
        std::find(kSpecials.begin(), kSpecials.end(), tok) == kSpecials.end()) {
      kept.emplace_back(tok, n);
    }
  }
  // Most frequent first; ties alphabetical (counts is already sorted by token).
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = kSpecials;
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return from_tokens(std::move(tokens), min_freq);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, int min_freq) {
  if (tokens.size() < kNumSpecials ||
      !std::equal(kSpecials.begin(), kSpecials.end(), tokens.begin())) {
    throw DataError("vocabulary: token list must start with <pad> <bos> <eos> <unk>");
  }
  Vocabulary v;
  v.min_freq_ = min_freq;
  v.id_to_token_ = std::move(tokens);
  for (std::size_t i = 0; i < v.id_to_token_.size(); ++i) {
    if (!v.token_to_id_.emplace(v.id_to_token_[i], static_cast<TokenId>(i)).second) {
      throw DataError("vocabulary: duplicate token '" + v.id_to_token_[i] + "'");
    }
  }
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= id_to_token_.size()) throw ContractError("vocabulary: id out of range");
  return id_to_token_[id];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.contains(std::string(token));
}

std::vector<TokenId> Vocabulary::encode(const Sentence& sentence) const {
  std::vector<TokenId> ids;
  ids.reserve(sentence.size() + 1);
  for (const auto& t : sentence) ids.push_back(id(t));
  ids.push_back(kEos);
  return ids;
}

Sentence Vocabulary::decode(std::span<const TokenId> ids) const {
  Sentence out;
  for (TokenId id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    out.push_back(token(id));
  }
  return out;
}

}  // namespace hrgr::corpus
