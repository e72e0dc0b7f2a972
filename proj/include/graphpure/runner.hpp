#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "graphpure/config.hpp"

namespace graphpure {

// In-memory dataset: one graph for node tasks, many for graph tasks. The
// split indexes nodes or graphs accordingly.
struct Dataset {
  Task task = Task::Node;
  std::vector<Graph> graphs;
  DatasetSplit split;

  std::size_t feature_dim() const { return graphs.empty() ? 0 : graphs.front().features.cols(); }
  std::size_t num_classes() const;
};

Dataset build_dataset(const RunConfig& cfg, std::uint64_t run_seed, bool vary_with_seed);
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Pipeline commands. Each reads its upstream artifacts from cfg.output_dir
// and writes its own there; missing inputs raise errors naming the artifact.
void cmd_generate(const RunConfig& cfg);
void cmd_train_classifier(const RunConfig& cfg);
void cmd_train_diffusion(const RunConfig& cfg);
void cmd_attack(const RunConfig& cfg);
void cmd_purify(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_run_all(const RunConfig& cfg);
void cmd_sweep(const RunConfig& cfg, const std::string& parameter,
               const std::vector<double>& values);

}  // namespace graphpure
