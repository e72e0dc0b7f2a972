#include "graphpure/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "graphpure/attacks.hpp"
#include "graphpure/checkpoint.hpp"
#include "graphpure/purifier.hpp"

namespace graphpure {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string seed_dir(const std::string& base, std::uint64_t seed) {
  return base + "/s" + std::to_string(seed);
}

std::string graph_file(const std::string& dir, std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "graph_%04zu.%s", index, ext);
  return dir + "/" + buf;
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string("missing ") + what + ": " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(what) + " parse error in " + path + ": " + e.what());
  }
  return j;
}

std::uint64_t config_fingerprint(const RunConfig& cfg) {
  return Rng::fnv1a(cfg.to_json().dump());
}

class StageClock {
 public:
  void start(const std::string& stage) {
    stage_ = stage;
    t0_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto t1 = std::chrono::steady_clock::now();
    timings_[stage_] =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0_).count() / 1000.0;
  }
  json to_json() const {
    json j;
    for (const auto& [k, v] : timings_) j[k] = v;
    return j;
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point t0_;
  std::map<std::string, double> timings_;
};

Matrix block_onehot_noisy(const std::vector<int>& labels, std::size_t num_blocks, double noise,
                          std::uint64_t seed) {
  Rng rng(seed, "features");
  Matrix x(labels.size(), num_blocks);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    x(i, static_cast<std::size_t>(labels[i])) = 1.0;
    for (std::size_t f = 0; f < num_blocks; ++f) x(i, f) += noise * rng.normal();
  }
  return x;
}

void apply_feature_mode(Graph& g, const DatasetConfig& d, std::uint64_t seed) {
  switch (d.feature_mode) {
    case FeatureMode::Degree:
      g.features = degree_features(g.adjacency);
      break;
    case FeatureMode::Identity:
      g.features = Matrix::identity(g.num_nodes());
      break;
    case FeatureMode::BlockOnehotNoisy:
      g.features = block_onehot_noisy(g.node_labels, d.num_blocks, d.feature_noise, seed);
      break;
  }
}

struct Models {
  GcnParams classifier;
  DenoiserParams denoiser;
  NoiseSchedule schedule;
};

// metrics + per-seed observability carried into the report
struct SeedOutcome {
  std::uint64_t seed = 0;
  PurificationMetrics metrics;
  json attack_summary;
  json purify_summary;
};

double mean_edge_density(const Dataset& ds, const std::vector<std::size_t>& indices) {
  double sum = 0.0;
  for (std::size_t i : indices) sum += ds.graphs.at(i).edge_density();
  return indices.empty() ? 0.0 : sum / static_cast<double>(indices.size());
}

std::vector<Graph> training_graphs(const Dataset& ds) {
  if (ds.task == Task::Node) return {ds.graphs.front()};
  std::vector<Graph> out;
  for (std::size_t i : ds.split.train) out.push_back(ds.graphs.at(i));
  return out;
}

TrainResult fit_classifier(const RunConfig& cfg, const Dataset& ds) {
  GcnConfig arch;
  arch.in_dim = ds.feature_dim();
  arch.hidden1 = cfg.classifier.hidden1;
  arch.hidden2 = cfg.classifier.hidden2;
  arch.num_classes = ds.num_classes();
  arch.task = cfg.task;
  if (cfg.task == Task::Node)
    return train_classifier(ds.graphs.front(), ds.split.train, arch, cfg.classifier.train);
  return train_classifier(ds.graphs, ds.split.train, arch, cfg.classifier.train);
}

NoiseSchedule fit_schedule(const RunConfig& cfg, const Dataset& ds) {
  const std::vector<std::size_t> train_idx =
      cfg.task == Task::Node ? std::vector<std::size_t>{0} : ds.split.train;
  double density = mean_edge_density(ds, train_idx);
  density = std::clamp(density, 1e-3, 1.0 - 1e-3);
  return build_schedule(cfg.diffusion.horizon, cfg.diffusion.offset, density);
}

json metrics_to_json(const PurificationMetrics& m) {
  return {{"acc_clean", m.acc_clean},
          {"acc_attacked", m.acc_attacked},
          {"acc_purified", m.acc_purified},
          {"removal_rate", m.adversarial_edge_removal_rate},
          {"preservation_rate", m.clean_edge_preservation_rate},
          {"recovery_ratio", m.recovery_ratio}};
}

json lid_diag_to_json(const LidDiagnostics& d, const std::vector<double>& gamma) {
  json j;
  j["gamma_min"] = d.gamma_min;
  j["gamma_mean"] = d.gamma_mean;
  j["gamma_max"] = d.gamma_max;
  j["floored_distances"] = d.floored_distances;
  j["capped_nodes"] = d.capped_nodes;
  j["clamped_times"] = d.clamped_times;
  j["t_hat_histogram"] = d.t_hat_histogram;
  j["gamma_size"] = gamma.size();
  return j;
}

json trace_steps_to_json(const PurificationTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json rec;
    rec["t"] = s.t;
    rec["mask_density"] = s.mask_density;
    if (std::isfinite(s.transfer_entropy_value))
      rec["transfer_entropy"] = s.transfer_entropy_value;
    else
      rec["transfer_entropy"] = nullptr;
    rec["guidance_grad_norm"] = s.guidance_grad_norm;
    rec["flips_vs_prev"] = s.flips_vs_prev;
    steps.push_back(std::move(rec));
  }
  return steps;
}

void write_flips_file(const Matrix& mask, const std::string& path) {
  Graph flips;
  flips.adjacency = mask;
  flips.features = Matrix(mask.rows(), 0);
  write_edge_list(flips, path);
}

Matrix read_flips_file(const std::string& path) {
  return read_edge_list(path).adjacency;
}

AttackResult run_attack(const RunConfig& cfg, const Graph& graph, const GcnParams& cls,
                        const std::vector<std::size_t>& target_nodes, std::uint64_t seed) {
  const AttackBudget budget = AttackBudget::from_fraction(graph, cfg.attack.budget_fraction);
  if (cfg.attack.name == "random") return attack_random(graph, budget, seed);
  if (cfg.attack.name == "dice") return attack_dice(graph, graph.node_labels, budget, seed);
  return attack_grad_greedy(graph, cls, budget, seed, target_nodes);
}

// attacked/purified graph sets for one run seed, plus their evaluation
SeedOutcome attack_purify_evaluate(const RunConfig& cfg, const Dataset& ds, const Models& models,
                                   std::uint64_t run_seed, const std::string& artifact_dir) {
  SeedOutcome outcome;
  outcome.seed = run_seed;
  const std::uint64_t attack_seed = derive_seed(cfg.attack.seed, run_seed, "attack");
  const std::uint64_t purify_seed = derive_seed(cfg.purify.seed, run_seed, "purify");

  const std::vector<std::size_t> items =
      cfg.task == Task::Node ? std::vector<std::size_t>{0} : ds.split.test;

  std::vector<Graph> attacked = ds.graphs, purified = ds.graphs;
  std::vector<Matrix> flip_masks;
  json attack_items = json::array();
  json purify_items = json::array();

  for (std::size_t item : items) {
    const Graph& clean = ds.graphs.at(item);
    const std::vector<std::size_t> targets =
        cfg.task == Task::Node ? ds.split.test : std::vector<std::size_t>{};
    const AttackResult atk =
        run_attack(cfg, clean, models.classifier, targets, attack_seed + item);
    attacked[item] = atk.perturbed;
    flip_masks.push_back(atk.flipped_mask);
    attack_items.push_back({{"item", item},
                            {"budget", atk.flip_count()},
                            {"partial", atk.partial},
                            {"name", atk.attack_name}});

    PurifyConfig pcfg = cfg.purify.to_purify_config(clean.num_nodes());
    pcfg.seed = purify_seed + item;
    auto [pure, trace] =
        purify(atk.perturbed, models.classifier, models.denoiser, models.schedule, pcfg);
    purified[item] = pure;

    json pj;
    pj["item"] = item;
    pj["lid"] = lid_diag_to_json(trace.lid_diagnostics, trace.gamma);
    pj["steps"] = trace_steps_to_json(trace);
    purify_items.push_back(std::move(pj));

    if (!artifact_dir.empty()) {
      write_edge_list(atk.perturbed, graph_file(artifact_dir + "/attacked", item, "edges"));
      write_flips_file(atk.flipped_mask, graph_file(artifact_dir + "/attacked", item, "flips"));
      write_edge_list(pure, graph_file(artifact_dir + "/purified", item, "edges"));
    }
  }

  outcome.attack_summary = {{"name", cfg.attack.name},
                            {"budget_fraction", cfg.attack.budget_fraction},
                            {"seed", attack_seed},
                            {"items", std::move(attack_items)}};
  outcome.purify_summary = {{"seed", purify_seed}, {"items", std::move(purify_items)}};

  // evaluation
  if (cfg.task == Task::Node) {
    outcome.metrics = evaluate_purification(ds.graphs.front(), attacked.front(), purified.front(),
                                            flip_masks.front(), models.classifier, ds.split.test);
  } else {
    PurificationMetrics m;
    m.acc_clean = predict_accuracy(models.classifier, ds.graphs, ds.split.test);
    m.acc_attacked = predict_accuracy(models.classifier, attacked, ds.split.test);
    m.acc_purified = predict_accuracy(models.classifier, purified, ds.split.test);
    double removal = 0.0, preservation = 0.0;
    for (std::size_t k = 0; k < items.size(); ++k) {
      const std::size_t item = items[k];
      const PurificationMetrics per = evaluate_purification(
          ds.graphs.at(item), attacked.at(item), purified.at(item), flip_masks.at(k),
          models.classifier, {});
      removal += per.adversarial_edge_removal_rate;
      preservation += per.clean_edge_preservation_rate;
    }
    m.adversarial_edge_removal_rate = removal / static_cast<double>(items.size());
    m.clean_edge_preservation_rate = preservation / static_cast<double>(items.size());
    m.recovery_ratio = (m.acc_purified - m.acc_attacked) /
                       std::max(m.acc_clean - m.acc_attacked, 1e-9);
    outcome.metrics = m;
  }
  return outcome;
}

json aggregate_metrics(const std::vector<SeedOutcome>& outcomes) {
  auto stat = [&](auto getter) {
    double mean = 0.0;
    for (const auto& o : outcomes) mean += getter(o.metrics);
    mean /= static_cast<double>(outcomes.size());
    double var = 0.0;
    for (const auto& o : outcomes) {
      const double d = getter(o.metrics) - mean;
      var += d * d;
    }
    var = outcomes.size() > 1 ? var / static_cast<double>(outcomes.size() - 1) : 0.0;
    return std::pair<double, double>{mean, std::sqrt(var)};
  };
  json agg;
  const auto put = [&](const char* name, auto getter) {
    const auto [mean, sd] = stat(getter);
    agg["mean"][name] = mean;
    agg["std"][name] = sd;
  };
  put("acc_clean", [](const PurificationMetrics& m) { return m.acc_clean; });
  put("acc_attacked", [](const PurificationMetrics& m) { return m.acc_attacked; });
  put("acc_purified", [](const PurificationMetrics& m) { return m.acc_purified; });
  put("removal_rate", [](const PurificationMetrics& m) { return m.adversarial_edge_removal_rate; });
  put("preservation_rate",
      [](const PurificationMetrics& m) { return m.clean_edge_preservation_rate; });
  put("recovery_ratio", [](const PurificationMetrics& m) { return m.recovery_ratio; });
  return agg;
}

void write_metrics_csv(const std::vector<SeedOutcome>& outcomes, const json& agg,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(17);
  out << "seed,acc_clean,acc_attacked,acc_purified,removal_rate,preservation_rate,recovery_ratio\n";
  for (const auto& o : outcomes) {
    out << o.seed << "," << o.metrics.acc_clean << "," << o.metrics.acc_attacked << ","
        << o.metrics.acc_purified << "," << o.metrics.adversarial_edge_removal_rate << ","
        << o.metrics.clean_edge_preservation_rate << "," << o.metrics.recovery_ratio << "\n";
  }
  for (const char* row : {"mean", "std"}) {
    out << row;
    for (const char* col : {"acc_clean", "acc_attacked", "acc_purified", "removal_rate",
                            "preservation_rate", "recovery_ratio"})
      out << "," << agg[row][col].get<double>();
    out << "\n";
  }
}

// run the per-seed stage over a worker pool, results kept in seed order
std::vector<SeedOutcome> run_seeds(const RunConfig& cfg, const Dataset& ds, const Models& models,
                                   const std::string& artifact_base) {
  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  std::vector<std::thread> pool;
  std::mutex fail_mutex;
  std::exception_ptr failure;
  std::size_t next = 0;
  std::mutex next_mutex;

  const std::size_t workers = std::min<std::size_t>(cfg.workers, cfg.seeds.size());
  auto work = [&]() {
    while (true) {
      std::size_t idx;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= cfg.seeds.size() || failure) return;
        idx = next++;
      }
      try {
        std::string dir;
        if (!artifact_base.empty()) {
          dir = seed_dir(artifact_base, cfg.seeds[idx]);
          fs::create_directories(dir + "/attacked");
          fs::create_directories(dir + "/purified");
        }
        outcomes[idx] = attack_purify_evaluate(cfg, ds, models, cfg.seeds[idx], dir);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

Models load_models(const RunConfig& cfg) {
  Models m;
  m.classifier = load_classifier(cfg.output_dir + "/classifier.json");
  m.denoiser = load_denoiser(cfg.output_dir + "/denoiser.json");
  m.schedule = load_schedule(cfg.output_dir + "/schedule.json");
  return m;
}

Models train_models(const RunConfig& cfg, const Dataset& ds, json* stage_report,
                    StageClock* clock) {
  Models m;
  if (clock) clock->start("train_classifier");
  const TrainResult cls = fit_classifier(cfg, ds);
  if (clock) clock->stop();
  m.classifier = cls.params;

  m.schedule = fit_schedule(cfg, ds);
  if (clock) clock->start("train_diffusion");
  const DiffusionTrainResult diff =
      train_diffusion(training_graphs(ds), m.schedule, cfg.diffusion.train);
  if (clock) clock->stop();
  m.denoiser = diff.params;

  if (stage_report) {
    json c;
    c["final_loss"] = cls.loss_history.back();
    c["loss_history"] = cls.loss_history;
    if (cfg.task == Task::Node) {
      c["train_accuracy"] = predict_accuracy(m.classifier, ds.graphs.front(), ds.split.train);
      c["val_accuracy"] = ds.split.val.empty()
                              ? 0.0
                              : predict_accuracy(m.classifier, ds.graphs.front(), ds.split.val);
      c["test_accuracy_clean"] = predict_accuracy(m.classifier, ds.graphs.front(), ds.split.test);
    } else {
      c["train_accuracy"] = predict_accuracy(m.classifier, ds.graphs, ds.split.train);
      c["val_accuracy"] =
          ds.split.val.empty() ? 0.0 : predict_accuracy(m.classifier, ds.graphs, ds.split.val);
      c["test_accuracy_clean"] = predict_accuracy(m.classifier, ds.graphs, ds.split.test);
    }
    (*stage_report)["classifier"] = std::move(c);
    json d;
    d["final_loss"] = diff.loss_history.back();
    d["steps"] = diff.loss_history.size();
    d["edge_density"] = m.schedule.edge_density;
    (*stage_report)["diffusion"] = std::move(d);
  }
  return m;
}

}  // namespace

std::size_t Dataset::num_classes() const {
  int max_label = 0;
  for (const Graph& g : graphs) {
    for (int l : g.node_labels) max_label = std::max(max_label, l);
    if (g.graph_label) max_label = std::max(max_label, *g.graph_label);
  }
  return static_cast<std::size_t>(max_label) + 1;
}

Dataset build_dataset(const RunConfig& cfg, std::uint64_t run_seed, bool vary_with_seed) {
  const DatasetConfig& d = cfg.dataset;
  const std::uint64_t dataset_seed =
      vary_with_seed ? derive_seed(d.seed, run_seed, "dataset") : d.seed;
  const std::uint64_t split_seed =
      vary_with_seed ? derive_seed(cfg.split.seed, run_seed, "split") : cfg.split.seed;

  Dataset ds;
  ds.task = cfg.task;
  if (d.kind == DatasetConfig::Kind::EdgeList) {
    Graph g = read_edge_list(d.path);
    if (!d.features_path.empty()) g.features = read_features_csv(d.features_path);
    g.validate();
    ds.graphs.push_back(std::move(g));
  } else if (d.kind == DatasetConfig::Kind::Sbm) {
    Graph g = generate_sbm({d.num_nodes, d.num_blocks, d.intra_prob, d.inter_prob, dataset_seed});
    apply_feature_mode(g, d, dataset_seed);
    ds.graphs.push_back(std::move(g));
  } else {
    const std::size_t classes = d.class_intra.size();
    for (std::size_t i = 0; i < d.num_graphs; ++i) {
      const std::size_t cls = i % classes;
      Graph g = generate_sbm({d.num_nodes, d.num_blocks, d.class_intra[cls], d.inter_prob,
                              dataset_seed + i});
      apply_feature_mode(g, d, dataset_seed + i);
      g.graph_label = static_cast<int>(cls);
      ds.graphs.push_back(std::move(g));
    }
  }

  const std::size_t n_items =
      cfg.task == Task::Node ? ds.graphs.front().num_nodes() : ds.graphs.size();
  ds.split = split_dataset(n_items, cfg.split.ratios, split_seed);
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["format"] = "graphpure.dataset.v1";
  j["task"] = ds.task == Task::Node ? "node" : "graph";
  j["num_graphs"] = ds.graphs.size();
  j["split"] = {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}};
  json labels = json::array();
  for (const Graph& g : ds.graphs)
    labels.push_back(g.graph_label ? json(*g.graph_label) : json(nullptr));
  j["graph_labels"] = std::move(labels);
  write_json(j, dir + "/dataset.json");
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    write_edge_list(ds.graphs[i], graph_file(dir, i, "edges"));
    write_features_csv(ds.graphs[i].features, graph_file(dir, i, "features.csv"));
  }
}

Dataset load_dataset(const std::string& dir) {
  const json j = read_json(dir + "/dataset.json", "dataset manifest");
  if (j.value("format", "") != "graphpure.dataset.v1")
    throw std::runtime_error("dataset manifest " + dir + " has an unknown format tag");
  Dataset ds;
  ds.task = j.at("task").get<std::string>() == "node" ? Task::Node : Task::Graph;
  const std::size_t count = j.at("num_graphs").get<std::size_t>();
  ds.split.train = j.at("split").at("train").get<std::vector<std::size_t>>();
  ds.split.val = j.at("split").at("val").get<std::vector<std::size_t>>();
  ds.split.test = j.at("split").at("test").get<std::vector<std::size_t>>();
  for (std::size_t i = 0; i < count; ++i) {
    Graph g = read_edge_list(graph_file(dir, i, "edges"));
    g.features = read_features_csv(graph_file(dir, i, "features.csv"));
    const json& label = j.at("graph_labels").at(i);
    if (!label.is_null()) g.graph_label = label.get<int>();
    g.validate();
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

void cmd_generate(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_json(cfg.to_json(), cfg.output_dir + "/config.json");
  const Dataset ds = build_dataset(cfg, 0, false);
  save_dataset(ds, cfg.output_dir + "/dataset");
}

void cmd_train_classifier(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.output_dir + "/dataset");
  json stage;
  const Models partial = [&] {
    Models m;
    const TrainResult cls = fit_classifier(cfg, ds);
    m.classifier = cls.params;
    stage["final_loss"] = cls.loss_history.back();
    stage["loss_history"] = cls.loss_history;
    return m;
  }();
  save_classifier(partial.classifier, cfg.output_dir + "/classifier.json");
  write_json(stage, cfg.output_dir + "/classifier_train.json");
}

void cmd_train_diffusion(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.output_dir + "/dataset");
  const NoiseSchedule schedule = fit_schedule(cfg, ds);
  const DiffusionTrainResult r =
      train_diffusion(training_graphs(ds), schedule, cfg.diffusion.train);
  save_denoiser(r.params, cfg.output_dir + "/denoiser.json");
  save_schedule(schedule, cfg.output_dir + "/schedule.json");
  json stage;
  stage["final_loss"] = r.loss_history.back();
  stage["loss_history"] = r.loss_history;
  write_json(stage, cfg.output_dir + "/diffusion_train.json");
}

void cmd_attack(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.output_dir + "/dataset");
  const GcnParams cls = load_classifier(cfg.output_dir + "/classifier.json");
  const std::vector<std::size_t> items =
      cfg.task == Task::Node ? std::vector<std::size_t>{0} : ds.split.test;
  for (std::uint64_t run_seed : cfg.seeds) {
    const std::uint64_t attack_seed = derive_seed(cfg.attack.seed, run_seed, "attack");
    const std::string dir = seed_dir(cfg.output_dir + "/attacked", run_seed);
    fs::create_directories(dir);
    json summary;
    summary["name"] = cfg.attack.name;
    summary["seed"] = attack_seed;
    summary["config_fingerprint"] = config_fingerprint(cfg);
    json item_list = json::array();
    for (std::size_t item : items) {
      const std::vector<std::size_t> targets =
          cfg.task == Task::Node ? ds.split.test : std::vector<std::size_t>{};
      const AttackResult atk =
          run_attack(cfg, ds.graphs.at(item), cls, targets, attack_seed + item);
      write_edge_list(atk.perturbed, graph_file(dir, item, "edges"));
      write_flips_file(atk.flipped_mask, graph_file(dir, item, "flips"));
      item_list.push_back(
          {{"item", item}, {"flips", atk.flip_count()}, {"partial", atk.partial}});
    }
    summary["items"] = std::move(item_list);
    write_json(summary, dir + "/attack.json");
  }
}

void cmd_purify(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.output_dir + "/dataset");
  const Models models = load_models(cfg);
  const std::vector<std::size_t> items =
      cfg.task == Task::Node ? std::vector<std::size_t>{0} : ds.split.test;
  for (std::uint64_t run_seed : cfg.seeds) {
    const std::uint64_t purify_seed = derive_seed(cfg.purify.seed, run_seed, "purify");
    const std::string atk_dir = seed_dir(cfg.output_dir + "/attacked", run_seed);
    const std::string dir = seed_dir(cfg.output_dir + "/purified", run_seed);
    fs::create_directories(dir);
    json summary;
    summary["seed"] = purify_seed;
    summary["config_fingerprint"] = config_fingerprint(cfg);
    json item_list = json::array();
    for (std::size_t item : items) {
      Graph attacked = read_edge_list(graph_file(atk_dir, item, "edges"));
      attacked.features = ds.graphs.at(item).features;
      attacked.node_labels = ds.graphs.at(item).node_labels;
      attacked.graph_label = ds.graphs.at(item).graph_label;

      PurifyConfig pcfg = cfg.purify.to_purify_config(attacked.num_nodes());
      pcfg.seed = purify_seed + item;
      auto [pure, trace] =
          purify(attacked, models.classifier, models.denoiser, models.schedule, pcfg);
      write_edge_list(pure, graph_file(dir, item, "edges"));

      std::ofstream trace_out(graph_file(dir, item, "trace.jsonl"));
      for (const json& rec : trace_steps_to_json(trace)) trace_out << rec.dump() << "\n";

      json pj;
      pj["item"] = item;
      pj["lid"] = lid_diag_to_json(trace.lid_diagnostics, trace.gamma);
      item_list.push_back(std::move(pj));
    }
    summary["items"] = std::move(item_list);
    write_json(summary, dir + "/purify.json");
  }
}

void cmd_evaluate(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.output_dir + "/dataset");
  const GcnParams cls = load_classifier(cfg.output_dir + "/classifier.json");
  const std::vector<std::size_t> items =
      cfg.task == Task::Node ? std::vector<std::size_t>{0} : ds.split.test;

  std::vector<SeedOutcome> outcomes;
  for (std::uint64_t run_seed : cfg.seeds) {
    const std::string atk_dir = seed_dir(cfg.output_dir + "/attacked", run_seed);
    const std::string pure_dir = seed_dir(cfg.output_dir + "/purified", run_seed);

    std::vector<Graph> attacked = ds.graphs, purified = ds.graphs;
    std::vector<Matrix> masks;
    for (std::size_t item : items) {
      Graph a = read_edge_list(graph_file(atk_dir, item, "edges"));
      Graph p = read_edge_list(graph_file(pure_dir, item, "edges"));
      a.features = p.features = ds.graphs.at(item).features;
      a.node_labels = p.node_labels = ds.graphs.at(item).node_labels;
      a.graph_label = p.graph_label = ds.graphs.at(item).graph_label;
      attacked[item] = std::move(a);
      purified[item] = std::move(p);
      masks.push_back(read_flips_file(graph_file(atk_dir, item, "flips")));
    }

    SeedOutcome o;
    o.seed = run_seed;
    if (cfg.task == Task::Node) {
      o.metrics = evaluate_purification(ds.graphs.front(), attacked.front(), purified.front(),
                                        masks.front(), cls, ds.split.test);
    } else {
      PurificationMetrics m;
      m.acc_clean = predict_accuracy(cls, ds.graphs, ds.split.test);
      m.acc_attacked = predict_accuracy(cls, attacked, ds.split.test);
      m.acc_purified = predict_accuracy(cls, purified, ds.split.test);
      double removal = 0.0, preservation = 0.0;
      for (std::size_t k = 0; k < items.size(); ++k) {
        const PurificationMetrics per =
            evaluate_purification(ds.graphs.at(items[k]), attacked.at(items[k]),
                                  purified.at(items[k]), masks.at(k), cls, {});
        removal += per.adversarial_edge_removal_rate;
        preservation += per.clean_edge_preservation_rate;
      }
      m.adversarial_edge_removal_rate = removal / static_cast<double>(items.size());
      m.clean_edge_preservation_rate = preservation / static_cast<double>(items.size());
      m.recovery_ratio =
          (m.acc_purified - m.acc_attacked) / std::max(m.acc_clean - m.acc_attacked, 1e-9);
      o.metrics = m;
    }
    write_json(metrics_to_json(o.metrics),
               cfg.output_dir + "/eval_s" + std::to_string(run_seed) + ".json");
    outcomes.push_back(std::move(o));
  }
  const json agg = aggregate_metrics(outcomes);
  json mj;
  mj["schema_version"] = 1;
  json per_seed = json::array();
  for (const auto& o : outcomes)
    per_seed.push_back({{"seed", o.seed}, {"metrics", metrics_to_json(o.metrics)}});
  mj["per_seed"] = std::move(per_seed);
  mj["aggregate"] = agg;
  write_json(mj, cfg.output_dir + "/metrics.json");
  write_metrics_csv(outcomes, agg, cfg.output_dir + "/metrics.csv");
}

void cmd_run_all(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_json(cfg.to_json(), cfg.output_dir + "/config.json");
  StageClock clock;
  json report;
  report["schema_version"] = 1;
  report["config"] = cfg.to_json();
  report["config_fingerprint"] = config_fingerprint(cfg);

  std::vector<SeedOutcome> outcomes;
  if (cfg.seeds_vary_dataset) {
    // fully independent pipelines per seed
    clock.start("runs");
    for (std::uint64_t run_seed : cfg.seeds) {
      const Dataset ds = build_dataset(cfg, run_seed, true);
      RunConfig per = cfg;
      per.classifier.train.seed = derive_seed(cfg.classifier.train.seed, run_seed, "classifier");
      per.diffusion.train.seed = derive_seed(cfg.diffusion.train.seed, run_seed, "diffusion");
      const Models models = train_models(per, ds, nullptr, nullptr);
      per.seeds = {run_seed};
      const std::string dir = seed_dir(cfg.output_dir + "/runs", run_seed);
      fs::create_directories(dir + "/attacked");
      fs::create_directories(dir + "/purified");
      outcomes.push_back(attack_purify_evaluate(per, ds, models, run_seed, dir));
    }
    clock.stop();
  } else {
    clock.start("generate");
    const Dataset ds = build_dataset(cfg, 0, false);
    save_dataset(ds, cfg.output_dir + "/dataset");
    clock.stop();

    json stages;
    const Models models = train_models(cfg, ds, &stages, &clock);
    save_classifier(models.classifier, cfg.output_dir + "/classifier.json");
    save_denoiser(models.denoiser, cfg.output_dir + "/denoiser.json");
    save_schedule(models.schedule, cfg.output_dir + "/schedule.json");
    report["stages"] = std::move(stages);

    clock.start("attack_purify_evaluate");
    outcomes = run_seeds(cfg, ds, models, cfg.output_dir);
    clock.stop();
  }

  const json agg = aggregate_metrics(outcomes);
  json per_seed = json::array();
  for (const auto& o : outcomes) {
    json row;
    row["seed"] = o.seed;
    row["metrics"] = metrics_to_json(o.metrics);
    row["attack"] = o.attack_summary;
    row["purify"] = o.purify_summary;
    per_seed.push_back(std::move(row));
  }
  report["per_seed"] = per_seed;
  report["aggregate"] = agg;
  report["timings_seconds"] = clock.to_json();
  write_json(report, cfg.output_dir + "/report.json");

  json mj;
  mj["schema_version"] = 1;
  json metric_rows = json::array();
  for (const auto& o : outcomes)
    metric_rows.push_back({{"seed", o.seed}, {"metrics", metrics_to_json(o.metrics)}});
  mj["per_seed"] = std::move(metric_rows);
  mj["aggregate"] = agg;
  write_json(mj, cfg.output_dir + "/metrics.json");
  write_metrics_csv(outcomes, agg, cfg.output_dir + "/metrics.csv");
}

void cmd_sweep(const RunConfig& cfg, const std::string& parameter,
               const std::vector<double>& values) {
  if (values.empty()) throw ConfigError("sweep.values", "needs at least one value");
  const std::set<std::string> known = {"t_p", "lambda", "budget", "k"};
  if (!known.count(parameter))
    throw ConfigError("sweep.parameter", "must be t_p | lambda | budget | k");

  fs::create_directories(cfg.output_dir);
  write_json(cfg.to_json(), cfg.output_dir + "/config.json");

  const Dataset ds = build_dataset(cfg, 0, false);
  const Models models = train_models(cfg, ds, nullptr, nullptr);

  std::ofstream csv(cfg.output_dir + "/sweep.csv");
  if (!csv) throw std::runtime_error("cannot write " + cfg.output_dir + "/sweep.csv");
  csv.precision(17);
  csv << "parameter,value,seed,acc_clean,acc_attacked,acc_purified,removal_rate,"
         "preservation_rate,recovery_ratio\n";

  for (double value : values) {
    RunConfig swept = cfg;
    if (parameter == "t_p")
      swept.purify.t_p = static_cast<std::size_t>(std::llround(value));
    else if (parameter == "lambda")
      swept.purify.lambda = value;
    else if (parameter == "budget")
      swept.attack.budget_fraction = value;
    else
      swept.purify.k = static_cast<std::size_t>(std::llround(value));
    swept.validate();

    const std::vector<SeedOutcome> outcomes = run_seeds(swept, ds, models, "");
    for (const auto& o : outcomes) {
      csv << parameter << "," << value << "," << o.seed << "," << o.metrics.acc_clean << ","
          << o.metrics.acc_attacked << "," << o.metrics.acc_purified << ","
          << o.metrics.adversarial_edge_removal_rate << ","
          << o.metrics.clean_edge_preservation_rate << "," << o.metrics.recovery_ratio << "\n";
    }
    const json agg = aggregate_metrics(outcomes);
    for (const char* row : {"mean", "std"}) {
      csv << parameter << "," << value << "," << row;
      for (const char* col : {"acc_clean", "acc_attacked", "acc_purified", "removal_rate",
                              "preservation_rate", "recovery_ratio"})
        csv << "," << agg[row][col].get<double>();
      csv << "\n";
    }
  }
}

}  // namespace graphpure
