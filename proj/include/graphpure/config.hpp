#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphpure/diffusion.hpp"
#include "graphpure/entropy.hpp"
#include "graphpure/gnn.hpp"
#include "graphpure/graph.hpp"
#include "graphpure/lid.hpp"
#include "graphpure/purifier.hpp"

namespace graphpure {

// Configuration problems carry the dotted path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field_path, const std::string& message)
      : std::runtime_error(field_path + ": " + message), field_path_(std::move(field_path)) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

enum class FeatureMode { Degree, Identity, BlockOnehotNoisy };

struct DatasetConfig {
  enum class Kind { Sbm, SbmCollection, EdgeList };
  Kind kind = Kind::Sbm;

  // sbm / sbm_collection
  std::size_t num_nodes = 100;
  std::size_t num_blocks = 2;
  double intra_prob = 0.3;
  double inter_prob = 0.05;
  std::uint64_t seed = 1;
  FeatureMode feature_mode = FeatureMode::Degree;
  double feature_noise = 0.1;

  // sbm_collection: one intra probability per graph class
  std::size_t num_graphs = 40;
  std::vector<double> class_intra = {0.45, 0.2};

  // edge_list
  std::string path;
  std::string features_path;
};

struct SplitConfig {
  std::array<double, 3> ratios = {0.1, 0.1, 0.8};
  std::uint64_t seed = 2;
};

struct ClassifierSection {
  std::size_t hidden1 = 16;
  std::size_t hidden2 = 16;
  TrainConfig train;  // learning_rate 3e-4, adam
};

struct DiffusionSection {
  std::size_t horizon = 50;  // T
  double offset = 0.008;     // s
  DiffusionTrainConfig train;
};

struct AttackSection {
  std::string name = "grad_greedy";  // random | dice | grad_greedy
  double budget_fraction = 0.2;
  std::uint64_t seed = 5;
};

struct PurifySection {
  std::size_t t_p = 6;
  double lambda = 1.0;
  bool guidance = true;
  std::string guidance_sign = "ascend";        // ascend | descend
  std::string gradient_mode = "analytic";      // analytic | finite_difference
  std::string entropy_form = "ratio";          // ratio | difference
  std::size_t k = 0;                           // 0 = module default for n
  double epsilon_dist = 1e-12;
  double sigma = 2.0;
  double alpha = 2.0;
  std::string bandwidth = "fixed";             // fixed | silverman
  std::size_t num_restarts = 1;
  std::uint64_t seed = 6;
  bool fresh_forward_reference = true;
  bool isotropic = false;  // ablation: lambda forced to 1
  bool store_snapshots = false;

  PurifyConfig to_purify_config(std::size_t num_nodes) const;
};

struct RunConfig {
  Task task = Task::Node;
  DatasetConfig dataset;
  SplitConfig split;
  ClassifierSection classifier;
  DiffusionSection diffusion;
  AttackSection attack;
  PurifySection purify;
  std::vector<std::uint64_t> seeds = {0};
  bool seeds_vary_dataset = false;
  std::string output_dir = "out";
  std::size_t workers = 1;

  void validate() const;  // throws ConfigError with the failing field path
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Parse file, apply repeatable dotted-path overrides ("purify.t_p=8"), validate.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

// Derives a per-run-seed stage seed so repeated stages never share streams.
std::uint64_t derive_seed(std::uint64_t stage_seed, std::uint64_t run_seed,
                          std::string_view stage);

}  // namespace graphpure
