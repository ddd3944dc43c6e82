// hrgr: gen-data | mine-templates | train | evaluate | generate
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hrgr/cli/commands.hpp"
#include "hrgr/errors.hpp"

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string ablation;
  bool no_postprocess = false;
  bool force = false;
  std::string out;
  std::string sample;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run config");
  sub->add_option("--seed", f.seed, "random seed (required here or in the config)");
  sub->add_option("--set", f.overrides, "override a config key, e.g. --set train.xe_epochs=5");
  sub->add_option("--ablation", f.ablation, "none | retrieval-only | generation-only");
  sub->add_flag("--no-postprocess", f.no_postprocess, "skip keyword post-processing");
  sub->add_flag("--force", f.force, "overwrite existing outputs");
  sub->add_option("--out", f.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid retrieval-generation report agent"};
  app.require_subcommand(1);
  Flags f;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus and its train/val/test split");
  auto* mine = app.add_subcommand("mine-templates", "mine the template database and vocabulary");
  auto* train = app.add_subcommand("train", "XE pretraining followed by RL fine-tuning");
  auto* eval = app.add_subcommand("evaluate", "greedy decoding and metrics on a split");
  auto* generate = app.add_subcommand("generate", "print one generated report with source tags");
  for (auto* s : {gen, mine, train, eval, generate}) add_common(s, f);
  generate->add_option("--sample", f.sample, "sample id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::vector<std::string> overrides = f.overrides;
    if (f.seed) overrides.push_back("seed=" + std::to_string(*f.seed));
    if (!f.ablation.empty()) overrides.push_back("ablation=\"" + f.ablation + "\"");
    if (f.no_postprocess) overrides.push_back("train.postprocess.enabled=false");
    hrgr::cli::CommandOptions opt;
    opt.config = hrgr::cli::load_run_config(f.config, overrides);
    opt.force = f.force;
    opt.out = f.out;
    opt.sample_id = f.sample;
    if (gen->parsed()) hrgr::cli::cmd_gen_data(opt, std::cerr);
    if (mine->parsed()) hrgr::cli::cmd_mine_templates(opt, std::cerr);
    if (train->parsed()) hrgr::cli::cmd_train(opt, std::cerr);
    if (eval->parsed()) hrgr::cli::cmd_evaluate(opt, std::cerr);
    if (generate->parsed()) hrgr::cli::cmd_generate(opt, std::cout);
  } catch (const hrgr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hrgr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hrgr::DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hrgr::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
