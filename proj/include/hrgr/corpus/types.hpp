#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "hrgr/numerics/array.hpp"

namespace hrgr::corpus {

using Token = std::string;
using Sentence = std::vector<Token>;
using Report = std::vector<Sentence>;
using TokenId = std::uint32_t;

// One patient case: a P x D feature grid standing in for CNN features, the
// tokenized findings report, and the latent labels the generator drew.
struct ReportSample {
  std::string id;
  num::Array features;
  Report report;
  std::set<std::string> findings;
  std::set<std::string> abnormal_terms;

  friend bool operator==(const ReportSample&, const ReportSample&) = default;
};

// All sentences of a report concatenated into one token stream.
Sentence flatten(const Report& report);

}  // namespace hrgr::corpus
