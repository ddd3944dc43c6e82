#pragma once

#include <ostream>
#include <string>

#include "hrgr/cli/run_config.hpp"

namespace hrgr::cli {

struct CommandOptions {
  RunConfig config;
  bool force = false;
  std::string out;        // overrides the command's default output directory
  std::string sample_id;  // generate only
};

// Each command writes its resolved config as config.<command>.json next to
// its outputs and reports progress on `log`.
void cmd_gen_data(const CommandOptions& opt, std::ostream& log);
void cmd_mine_templates(const CommandOptions& opt, std::ostream& log);
void cmd_train(const CommandOptions& opt, std::ostream& log);
void cmd_evaluate(const CommandOptions& opt, std::ostream& log);
void cmd_generate(const CommandOptions& opt, std::ostream& out);

// Split sizes for n samples: train and val are rounded, test takes the rest.
struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};
SplitSizes split_sizes(std::size_t n, const SplitRatio& ratio);

// Human-readable listing: one block per group with each variant and its df as
// a percentage of training documents.
std::string template_summary(const corpus::TemplateDatabase& db);

}  // namespace hrgr::cli
