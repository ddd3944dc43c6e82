#include "hrgr/corpus/templates.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "hrgr/errors.hpp"

namespace hrgr::corpus {

namespace {

bool by_df_then_text(const TemplateCandidate& a, const TemplateCandidate& b) {
  if (a.df != b.df) return a.df > b.df;
  return a.sentence < b.sentence;
}

}  // namespace

std::vector<TemplateCandidate> mine_templates(std::span<const ReportSample> corpus,
                                              std::size_t df_threshold) {
  if (df_threshold < 1) throw ConfigError("mine_templates: df_threshold must be >= 1");
  std::map<Sentence, std::size_t> df;
  for (const auto& sample : corpus) {
    std::set<Sentence> seen(sample.report.begin(), sample.report.end());
    for (const auto& s : seen) {
      if (!s.empty()) ++df[s];
    }
  }
  std::vector<TemplateCandidate> out;
  for (auto& [sentence, n] : df) {
    if (n >= df_threshold) out.push_back({sentence, n});
  }
  std::sort(out.begin(), out.end(), by_df_then_text);
  return out;
}

std::vector<std::string> NormalizationRule::default_stop_words() {
  return {"a", "an", "are", "is", "the", "there"};
}

std::string NormalizationRule::key(const Sentence& sentence) const {
  std::vector<std::string> kept;
  for (const auto& tok : sentence) {
    std::string clean;
    for (char c : tok) {
      const auto u = static_cast<unsigned char>(c);
      if (!std::ispunct(u)) clean.push_back(static_cast<char>(std::tolower(u)));
    }
    if (clean.empty()) continue;
    if (std::find(stop_words.begin(), stop_words.end(), clean) != stop_words.end()) continue;
    kept.push_back(std::move(clean));
  }
  if (order_insensitive) std::sort(kept.begin(), kept.end());
  std::string k;
  for (const auto& t : kept) {
    if (!k.empty()) k.push_back(' ');
    k += t;
  }
  return k;
}

std::size_t TemplateGroup::df() const {
  std::size_t total = 0;
  for (const auto& v : variants) total += v.df;
  return total;
}

TemplateDatabase::TemplateDatabase(std::vector<TemplateGroup> groups, std::size_t df_threshold,
                                   NormalizationRule rule, std::size_t document_count)
    : groups_(std::move(groups)),
      df_threshold_(df_threshold),
      rule_(std::move(rule)),
      document_count_(document_count) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& group = groups_[g];
    if (group.variants.empty() || group.canonical >= group.variants.size()) {
      throw DataError("template group " + std::to_string(g + 1) + " has no valid canonical variant");
    }
    for (const auto& v : group.variants) {
      const auto [it, inserted] = index_.emplace(rule_.key(v.sentence), g + 1);
      if (!inserted && it->second != g + 1) {
        throw DataError("template groups " + std::to_string(it->second) + " and " +
                        std::to_string(g + 1) + " share a normalized key");
      }
    }
  }
}

const TemplateGroup& TemplateDatabase::group(std::size_t index) const {
  if (index == 0 || index > groups_.size()) {
    throw ContractError("template index " + std::to_string(index) + " out of range 1.." +
                        std::to_string(groups_.size()));
  }
  return groups_[index - 1];
}

std::size_t TemplateDatabase::match(const Sentence& sentence) const {
  auto it = index_.find(rule_.key(sentence));
  return it == index_.end() ? 0 : it->second;
}

TemplateDatabase group_templates(std::span<const TemplateCandidate> candidates,
                                 std::size_t df_threshold, const NormalizationRule& rule,
                                 std::size_t document_count) {
  std::map<std::string, TemplateGroup> by_key;
  for (const auto& c : candidates) by_key[rule.key(c.sentence)].variants.push_back(c);
  std::vector<TemplateGroup> groups;
  for (auto& [key, group] : by_key) {
    std::sort(group.variants.begin(), group.variants.end(), by_df_then_text);
    group.canonical = 0;
    groups.push_back(std::move(group));
  }
  std::sort(groups.begin(), groups.end(), [](const TemplateGroup& a, const TemplateGroup& b) {
    if (a.df() != b.df()) return a.df() > b.df();
    return a.canonical_sentence() < b.canonical_sentence();
  });
  return TemplateDatabase(std::move(groups), df_threshold, rule, document_count);
}

}  // namespace hrgr::corpus
