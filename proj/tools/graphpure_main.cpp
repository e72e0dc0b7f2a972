#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphpure/config.hpp"
#include "graphpure/kernels.hpp"
#include "graphpure/runner.hpp"

namespace {

using graphpure::ConfigError;
using graphpure::RunConfig;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::string seeds;
  std::size_t workers = 0;
  std::vector<std::string> overrides;
  std::string kernel_backend = "auto";
};

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw ConfigError("--seeds", "empty seed list");
  return seeds;
}

RunConfig assemble_config(const GlobalOptions& opt) {
  if (opt.config_path.empty()) throw ConfigError("--config", "a config file is required");
  RunConfig cfg = graphpure::load_run_config(opt.config_path, opt.overrides);
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  if (!opt.seeds.empty()) cfg.seeds = parse_seed_list(opt.seeds);
  if (opt.workers > 0) cfg.workers = opt.workers;
  cfg.validate();
  return cfg;
}

void select_backend(const std::string& name) {
  namespace k = graphpure::kernels;
  if (name == "auto") {
    k::set_backend(k::detect_backend());
  } else if (name == "scalar") {
    k::set_backend(k::Backend::Scalar);
  } else if (name == "avx2") {
    k::set_backend(k::Backend::Avx2);
  } else {
    throw ConfigError("--kernel-backend", "must be auto | scalar | avx2");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph structure purification workbench"};
  app.require_subcommand(1);

  GlobalOptions opt;
  app.add_option("--config", opt.config_path, "path to the run config json")->envname("");
  app.add_option("--out", opt.out_dir, "output directory override");
  app.add_option("--seeds", opt.seeds, "comma-separated run seeds override");
  app.add_option("--workers", opt.workers, "worker thread override");
  app.add_option("--set", opt.overrides, "dotted-path config override key=value (repeatable)");
  app.add_option("--kernel-backend", opt.kernel_backend, "auto | scalar | avx2");

  auto* generate = app.add_subcommand("generate", "generate or import the dataset");
  auto* train_cls = app.add_subcommand("train-classifier", "train the gcn classifier");
  auto* train_diff = app.add_subcommand("train-diffusion", "train the structure denoiser");
  auto* attack = app.add_subcommand("attack", "perturb the evaluation graphs");
  auto* purify = app.add_subcommand("purify", "purify the attacked graphs");
  auto* evaluate = app.add_subcommand("evaluate", "score clean/attacked/purified accuracy");
  auto* run_all = app.add_subcommand("run-all", "full pipeline over the seed list");

  auto* sweep = app.add_subcommand("sweep", "repeat run-all over one varying parameter");
  std::string sweep_param;
  std::string sweep_values;
  sweep->add_option("--param", sweep_param, "t_p | lambda | budget | k")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    select_backend(opt.kernel_backend);
    const RunConfig cfg = assemble_config(opt);

    if (generate->parsed()) graphpure::cmd_generate(cfg);
    if (train_cls->parsed()) graphpure::cmd_train_classifier(cfg);
    if (train_diff->parsed()) graphpure::cmd_train_diffusion(cfg);
    if (attack->parsed()) graphpure::cmd_attack(cfg);
    if (purify->parsed()) graphpure::cmd_purify(cfg);
    if (evaluate->parsed()) graphpure::cmd_evaluate(cfg);
    if (run_all->parsed()) graphpure::cmd_run_all(cfg);
    if (sweep->parsed()) {
      std::vector<double> values;
      std::istringstream in(sweep_values);
      std::string tok;
      while (std::getline(in, tok, ','))
        if (!tok.empty()) values.push_back(std::stod(tok));
      graphpure::cmd_sweep(cfg, sweep_param, values);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
