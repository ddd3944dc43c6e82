#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hrgr/corpus/types.hpp"

namespace hrgr::metrics {

struct TermCounts {
  std::size_t predicted = 0;       // reports whose prediction mentions the term
  std::size_t true_positive = 0;   // ... and whose gold report mentions it too
  std::size_t false_positive = 0;  // ... but whose gold report does not
  std::size_t gold = 0;            // reports whose gold mentions the term
};

struct TermDetection {
  // Micro-averaged: true-positive mentions / predicted mentions. Reported as
  // 0 with precision_defined = false when nothing was predicted.
  double precision = 0.0;
  bool precision_defined = false;
  // Mean number of false-positive term mentions per report.
  double afp = 0.0;
  std::map<std::string, TermCounts> per_term;
};

// A term is mentioned by a report iff its token sequence occurs contiguously
// in the report's tokens (whole-token match, so "effusion" does not match
// "effusions").
bool mentions(const corpus::Report& report, const corpus::Sentence& term_tokens);

TermDetection term_detection(std::span<const corpus::Report> predictions,
                             std::span<const corpus::Report> gold,
                             std::span<const std::string> terms);

}  // namespace hrgr::metrics
