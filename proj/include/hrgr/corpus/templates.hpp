#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hrgr/corpus/types.hpp"

namespace hrgr::corpus {

struct TemplateCandidate {
  Sentence sentence;
  std::size_t df = 0;  // number of documents containing the sentence at least once

  friend bool operator==(const TemplateCandidate&, const TemplateCandidate&) = default;
};

// Sentences whose document frequency is at least df_threshold, sorted by df
// descending (ties: lexicographic on the token sequence).
std::vector<TemplateCandidate> mine_templates(std::span<const ReportSample> corpus,
                                              std::size_t df_threshold);

// Decides which sentences are "the same template". Two sentences are grouped
// iff their normalized keys are equal. Normalization lowercases, drops
// punctuation, deletes stop words and (when order_insensitive) sorts the
// remaining tokens, so "no pleural effusion or pneumothorax" and
// "there is no pneumothorax or pleural effusion" share a key.
struct NormalizationRule {
  std::vector<std::string> stop_words = default_stop_words();
  bool order_insensitive = true;

  static std::vector<std::string> default_stop_words();
  std::string key(const Sentence& sentence) const;

  friend bool operator==(const NormalizationRule&, const NormalizationRule&) = default;
};

struct TemplateGroup {
  std::vector<TemplateCandidate> variants;  // df descending, ties lexicographic
  std::size_t canonical = 0;                // index of the variant emitted on retrieval

  std::size_t df() const;
  const Sentence& canonical_sentence() const { return variants.at(canonical).sentence; }

  friend bool operator==(const TemplateGroup&, const TemplateGroup&) = default;
};

// Ordered template groups. Group indices are 1-based so that they line up with
// retrieval actions; action 0 means "generate" and never names a template.
class TemplateDatabase {
 public:
  TemplateDatabase() = default;
  TemplateDatabase(std::vector<TemplateGroup> groups, std::size_t df_threshold,
                   NormalizationRule rule, std::size_t document_count);

  std::size_t size() const { return groups_.size(); }
  bool empty() const { return groups_.empty(); }
  const TemplateGroup& group(std::size_t index) const;
  const std::vector<TemplateGroup>& groups() const { return groups_; }
  std::size_t df_threshold() const { return df_threshold_; }
  std::size_t document_count() const { return document_count_; }
  const NormalizationRule& rule() const { return rule_; }

  // Group index whose normalized key equals the sentence's, or 0.
  std::size_t match(const Sentence& sentence) const;

  friend bool operator==(const TemplateDatabase& a, const TemplateDatabase& b) {
    return a.groups_ == b.groups_ && a.df_threshold_ == b.df_threshold_ && a.rule_ == b.rule_ &&
           a.document_count_ == b.document_count_;
  }

 private:
  std::vector<TemplateGroup> groups_;
  std::size_t df_threshold_ = 1;
  NormalizationRule rule_;
  std::size_t document_count_ = 0;
  std::map<std::string, std::size_t> index_;
};

// Groups candidates by normalized key. Groups are ordered by total df
// descending, then by canonical sentence.
TemplateDatabase group_templates(std::span<const TemplateCandidate> candidates,
                                 std::size_t df_threshold, const NormalizationRule& rule,
                                 std::size_t document_count);

}  // namespace hrgr::corpus
