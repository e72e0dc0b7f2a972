#include "graphpure/config.hpp"

#include <fstream>
#include <sstream>

namespace graphpure {

namespace {

using nlohmann::json;

// typed getters that rethrow with the dotted field path
template <typename T>
T get_or(const json& j, const std::string& parent, const std::string& key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(parent.empty() ? key : parent + "." + key, "has the wrong type");
  }
}


FeatureMode parse_feature_mode(const std::string& s, const std::string& path) {
  if (s == "degree") return FeatureMode::Degree;
  if (s == "identity") return FeatureMode::Identity;
  if (s == "block_onehot_noisy") return FeatureMode::BlockOnehotNoisy;
  throw ConfigError(path, "must be degree | identity | block_onehot_noisy");
}

}  // namespace

PurifyConfig PurifySection::to_purify_config(std::size_t num_nodes) const {
  PurifyConfig cfg;
  cfg.t_p = t_p;
  cfg.guidance = guidance;
  cfg.guidance_cfg.lambda = lambda;
  if (guidance_sign == "ascend")
    cfg.guidance_cfg.sign = GuidanceSign::Ascend;
  else if (guidance_sign == "descend")
    cfg.guidance_cfg.sign = GuidanceSign::Descend;
  else
    throw ConfigError("purify.guidance_sign", "must be ascend | descend");
  if (gradient_mode == "analytic")
    cfg.guidance_cfg.gradient_mode = GradientMode::AnalyticAlpha2;
  else if (gradient_mode == "finite_difference")
    cfg.guidance_cfg.gradient_mode = GradientMode::FiniteDifference;
  else
    throw ConfigError("purify.gradient_mode", "must be analytic | finite_difference");
  if (entropy_form == "ratio")
    cfg.guidance_cfg.form = TransferEntropyForm::Ratio;
  else if (entropy_form == "difference")
    cfg.guidance_cfg.form = TransferEntropyForm::Difference;
  else
    throw ConfigError("purify.entropy_form", "must be ratio | difference");
  cfg.lid.k = k == 0 ? LidConfig::default_k(num_nodes) : k;
  cfg.lid.epsilon_dist = epsilon_dist;
  cfg.entropy.alpha = alpha;
  cfg.entropy.sigma = sigma;
  if (bandwidth == "fixed")
    cfg.entropy.bandwidth_mode = BandwidthMode::Fixed;
  else if (bandwidth == "silverman")
    cfg.entropy.bandwidth_mode = BandwidthMode::Silverman;
  else
    throw ConfigError("purify.bandwidth", "must be fixed | silverman");
  cfg.num_restarts = num_restarts;
  cfg.seed = seed;
  cfg.fresh_forward_reference = fresh_forward_reference;
  cfg.isotropic_lambda = isotropic;
  cfg.store_snapshots = store_snapshots;
  return cfg;
}

void RunConfig::validate() const {
  if (dataset.kind == DatasetConfig::Kind::Sbm || dataset.kind == DatasetConfig::Kind::SbmCollection) {
    try {
      SbmConfig probe{dataset.num_nodes, dataset.num_blocks, dataset.intra_prob,
                      dataset.inter_prob, dataset.seed};
      probe.validate();
    } catch (const std::exception& e) {
      throw ConfigError("dataset", e.what());
    }
    if (dataset.kind == DatasetConfig::Kind::SbmCollection) {
      if (dataset.num_graphs < 2) throw ConfigError("dataset.num_graphs", "must be >= 2");
      if (dataset.class_intra.size() < 2)
        throw ConfigError("dataset.class_intra", "needs at least two class probabilities");
      for (double p : dataset.class_intra)
        if (!(p > dataset.inter_prob && p <= 1.0))
          throw ConfigError("dataset.class_intra", "entries must lie in (inter_prob, 1]");
    }
  } else if (dataset.path.empty()) {
    throw ConfigError("dataset.path", "required for edge_list datasets");
  }
  if (!(dataset.feature_noise >= 0.0)) throw ConfigError("dataset.feature_noise", "must be >= 0");

  double ratio_sum = 0.0;
  for (double r : split.ratios) {
    if (r < 0.0) throw ConfigError("split.ratios", "entries must be non-negative");
    ratio_sum += r;
  }
  if (std::fabs(ratio_sum - 1.0) > 1e-9) throw ConfigError("split.ratios", "must sum to 1");

  try {
    classifier.train.validate();
  } catch (const std::exception& e) {
    throw ConfigError("classifier", e.what());
  }
  if (classifier.hidden1 == 0 || classifier.hidden2 == 0)
    throw ConfigError("classifier.hidden1", "hidden sizes must be positive");

  if (diffusion.horizon < 2) throw ConfigError("diffusion.T", "horizon must be >= 2");
  if (!(diffusion.offset > 0.0)) throw ConfigError("diffusion.s", "offset must be positive");
  try {
    diffusion.train.validate();
  } catch (const std::exception& e) {
    throw ConfigError("diffusion", e.what());
  }

  if (attack.name != "random" && attack.name != "dice" && attack.name != "grad_greedy")
    throw ConfigError("attack.name", "must be random | dice | grad_greedy");
  if (!(attack.budget_fraction > 0.0 && attack.budget_fraction < 1.0))
    throw ConfigError("attack.budget_fraction", "must be in (0, 1)");

  if (purify.t_p < 1 || purify.t_p >= diffusion.horizon)
    throw ConfigError("purify.t_p", "must satisfy 1 <= t_p < diffusion.T");
  if (!(purify.lambda >= 0.0)) throw ConfigError("purify.lambda", "must be non-negative");
  if (!(purify.sigma > 0.0)) throw ConfigError("purify.sigma", "must be positive");
  if (!(purify.alpha > 0.0) || purify.alpha == 1.0)
    throw ConfigError("purify.alpha", "must be positive and != 1");
  if (purify.num_restarts < 1) throw ConfigError("purify.num_restarts", "must be >= 1");
  // surface enum problems now rather than mid-pipeline
  (void)purify.to_purify_config(std::max<std::size_t>(dataset.num_nodes, 25));

  if (seeds.empty()) throw ConfigError("seeds", "needs at least one seed");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

json RunConfig::to_json() const {
  json j;
  j["task"] = task == Task::Node ? "node" : "graph";
  json d;
  switch (dataset.kind) {
    case DatasetConfig::Kind::Sbm: d["kind"] = "sbm"; break;
    case DatasetConfig::Kind::SbmCollection: d["kind"] = "sbm_collection"; break;
    case DatasetConfig::Kind::EdgeList: d["kind"] = "edge_list"; break;
  }
  d["num_nodes"] = dataset.num_nodes;
  d["num_blocks"] = dataset.num_blocks;
  d["intra_prob"] = dataset.intra_prob;
  d["inter_prob"] = dataset.inter_prob;
  d["seed"] = dataset.seed;
  d["features"] = dataset.feature_mode == FeatureMode::Degree     ? "degree"
                  : dataset.feature_mode == FeatureMode::Identity ? "identity"
                                                                  : "block_onehot_noisy";
  d["feature_noise"] = dataset.feature_noise;
  d["num_graphs"] = dataset.num_graphs;
  d["class_intra"] = dataset.class_intra;
  if (!dataset.path.empty()) d["path"] = dataset.path;
  if (!dataset.features_path.empty()) d["features_path"] = dataset.features_path;
  j["dataset"] = d;

  j["split"] = {{"ratios", split.ratios}, {"seed", split.seed}};
  j["classifier"] = {{"hidden1", classifier.hidden1},
                     {"hidden2", classifier.hidden2},
                     {"learning_rate", classifier.train.learning_rate},
                     {"epochs", classifier.train.epochs},
                     {"optimizer", classifier.train.optimizer == Optimizer::Adam ? "adam" : "sgd"},
                     {"weight_decay", classifier.train.weight_decay},
                     {"seed", classifier.train.seed}};
  j["diffusion"] = {{"T", diffusion.horizon},
                    {"s", diffusion.offset},
                    {"learning_rate", diffusion.train.learning_rate},
                    {"steps", diffusion.train.steps},
                    {"seed", diffusion.train.seed}};
  j["attack"] = {{"name", attack.name},
                 {"budget_fraction", attack.budget_fraction},
                 {"seed", attack.seed}};
  j["purify"] = {{"t_p", purify.t_p},
                 {"lambda", purify.lambda},
                 {"guidance", purify.guidance},
                 {"guidance_sign", purify.guidance_sign},
                 {"gradient_mode", purify.gradient_mode},
                 {"entropy_form", purify.entropy_form},
                 {"k", purify.k},
                 {"epsilon_dist", purify.epsilon_dist},
                 {"sigma", purify.sigma},
                 {"alpha", purify.alpha},
                 {"bandwidth", purify.bandwidth},
                 {"num_restarts", purify.num_restarts},
                 {"seed", purify.seed},
                 {"fresh_forward_reference", purify.fresh_forward_reference},
                 {"isotropic", purify.isotropic},
                 {"store_snapshots", purify.store_snapshots}};
  j["seeds"] = seeds;
  j["seeds_vary_dataset"] = seeds_vary_dataset;
  j["output_dir"] = output_dir;
  j["workers"] = workers;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig cfg;
  const std::string task = get_or<std::string>(j, "", "task", "node");
  if (task == "node")
    cfg.task = Task::Node;
  else if (task == "graph")
    cfg.task = Task::Graph;
  else
    throw ConfigError("task", "must be node | graph");

  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    const std::string kind = get_or<std::string>(d, "dataset", "kind", "sbm");
    if (kind == "sbm")
      cfg.dataset.kind = DatasetConfig::Kind::Sbm;
    else if (kind == "sbm_collection")
      cfg.dataset.kind = DatasetConfig::Kind::SbmCollection;
    else if (kind == "edge_list")
      cfg.dataset.kind = DatasetConfig::Kind::EdgeList;
    else
      throw ConfigError("dataset.kind", "must be sbm | sbm_collection | edge_list");
    cfg.dataset.num_nodes = get_or<std::size_t>(d, "dataset", "num_nodes", cfg.dataset.num_nodes);
    cfg.dataset.num_blocks = get_or<std::size_t>(d, "dataset", "num_blocks", cfg.dataset.num_blocks);
    cfg.dataset.intra_prob = get_or<double>(d, "dataset", "intra_prob", cfg.dataset.intra_prob);
    cfg.dataset.inter_prob = get_or<double>(d, "dataset", "inter_prob", cfg.dataset.inter_prob);
    cfg.dataset.seed = get_or<std::uint64_t>(d, "dataset", "seed", cfg.dataset.seed);
    cfg.dataset.feature_mode = parse_feature_mode(
        get_or<std::string>(d, "dataset", "features", "degree"), "dataset.features");
    cfg.dataset.feature_noise = get_or<double>(d, "dataset", "feature_noise", cfg.dataset.feature_noise);
    cfg.dataset.num_graphs = get_or<std::size_t>(d, "dataset", "num_graphs", cfg.dataset.num_graphs);
    cfg.dataset.class_intra =
        get_or<std::vector<double>>(d, "dataset", "class_intra", cfg.dataset.class_intra);
    cfg.dataset.path = get_or<std::string>(d, "dataset", "path", "");
    cfg.dataset.features_path = get_or<std::string>(d, "dataset", "features_path", "");
  }

  if (j.contains("split")) {
    const json& s = j.at("split");
    const auto ratios = get_or<std::vector<double>>(s, "split", "ratios",
                                                    {cfg.split.ratios.begin(), cfg.split.ratios.end()});
    if (ratios.size() != 3) throw ConfigError("split.ratios", "needs exactly 3 entries");
    std::copy(ratios.begin(), ratios.end(), cfg.split.ratios.begin());
    cfg.split.seed = get_or<std::uint64_t>(s, "split", "seed", cfg.split.seed);
  }

  if (j.contains("classifier")) {
    const json& c = j.at("classifier");
    cfg.classifier.hidden1 = get_or<std::size_t>(c, "classifier", "hidden1", 16);
    cfg.classifier.hidden2 = get_or<std::size_t>(c, "classifier", "hidden2", 16);
    cfg.classifier.train.learning_rate = get_or<double>(c, "classifier", "learning_rate", 3e-4);
    cfg.classifier.train.epochs = get_or<std::size_t>(c, "classifier", "epochs", 200);
    const std::string opt = get_or<std::string>(c, "classifier", "optimizer", "adam");
    if (opt == "adam")
      cfg.classifier.train.optimizer = Optimizer::Adam;
    else if (opt == "sgd")
      cfg.classifier.train.optimizer = Optimizer::Sgd;
    else
      throw ConfigError("classifier.optimizer", "must be adam | sgd");
    cfg.classifier.train.weight_decay = get_or<double>(c, "classifier", "weight_decay", 0.0);
    cfg.classifier.train.seed = get_or<std::uint64_t>(c, "classifier", "seed", 3);
  }

  if (j.contains("diffusion")) {
    const json& d = j.at("diffusion");
    cfg.diffusion.horizon = get_or<std::size_t>(d, "diffusion", "T", 50);
    cfg.diffusion.offset = get_or<double>(d, "diffusion", "s", 0.008);
    cfg.diffusion.train.learning_rate = get_or<double>(d, "diffusion", "learning_rate", 3e-4);
    cfg.diffusion.train.steps = get_or<std::size_t>(d, "diffusion", "steps", 2000);
    cfg.diffusion.train.seed = get_or<std::uint64_t>(d, "diffusion", "seed", 4);
  }

  if (j.contains("attack")) {
    const json& a = j.at("attack");
    cfg.attack.name = get_or<std::string>(a, "attack", "name", "grad_greedy");
    cfg.attack.budget_fraction = get_or<double>(a, "attack", "budget_fraction", 0.2);
    cfg.attack.seed = get_or<std::uint64_t>(a, "attack", "seed", 5);
  }

  if (j.contains("purify")) {
    const json& p = j.at("purify");
    cfg.purify.t_p = get_or<std::size_t>(p, "purify", "t_p", 6);
    cfg.purify.lambda = get_or<double>(p, "purify", "lambda", 1.0);
    cfg.purify.guidance = get_or<bool>(p, "purify", "guidance", true);
    cfg.purify.guidance_sign = get_or<std::string>(p, "purify", "guidance_sign", "ascend");
    cfg.purify.gradient_mode = get_or<std::string>(p, "purify", "gradient_mode", "analytic");
    cfg.purify.entropy_form = get_or<std::string>(p, "purify", "entropy_form", "ratio");
    cfg.purify.k = get_or<std::size_t>(p, "purify", "k", 0);
    cfg.purify.epsilon_dist = get_or<double>(p, "purify", "epsilon_dist", 1e-12);
    cfg.purify.sigma = get_or<double>(p, "purify", "sigma", 2.0);
    cfg.purify.alpha = get_or<double>(p, "purify", "alpha", 2.0);
    cfg.purify.bandwidth = get_or<std::string>(p, "purify", "bandwidth", "fixed");
    cfg.purify.num_restarts = get_or<std::size_t>(p, "purify", "num_restarts", 1);
    cfg.purify.seed = get_or<std::uint64_t>(p, "purify", "seed", 6);
    cfg.purify.fresh_forward_reference =
        get_or<bool>(p, "purify", "fresh_forward_reference", true);
    cfg.purify.isotropic = get_or<bool>(p, "purify", "isotropic", false);
    cfg.purify.store_snapshots = get_or<bool>(p, "purify", "store_snapshots", false);
  }

  cfg.seeds = get_or<std::vector<std::uint64_t>>(j, "", "seeds", {0});
  cfg.seeds_vary_dataset = get_or<bool>(j, "", "seeds_vary_dataset", false);
  cfg.output_dir = get_or<std::string>(j, "", "output_dir", "out");
  cfg.workers = get_or<std::size_t>(j, "", "workers", 1);
  return cfg;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config", std::string("parse error: ") + e.what());
  }

  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set", "expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);

    json* node = &j;
    std::istringstream segs(key);
    std::string seg;
    std::vector<std::string> parts;
    while (std::getline(segs, seg, '.')) parts.push_back(seg);
    if (parts.empty()) throw ConfigError("--set", "empty key in '" + kv + "'");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &((*node)[parts[i]]);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // plain strings stay strings
    (*node)[parts.back()] = parsed;
  }

  RunConfig cfg = RunConfig::from_json(j);
  cfg.validate();
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t stage_seed, std::uint64_t run_seed,
                          std::string_view stage) {
  Rng mixer(stage_seed ^ (run_seed * 0x9e3779b97f4a7c15ull), stage);
  return mixer.next();
}

}  // namespace graphpure
