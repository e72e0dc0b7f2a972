#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "graphpure/attacks.hpp"
#include "graphpure/purifier.hpp"
#include "graphpure/rng.hpp"

using namespace graphpure;

namespace {

std::vector<std::size_t> all_nodes(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

Graph two_blocks(std::size_t n, double intra, double inter, std::uint64_t seed) {
  const Graph g = generate_sbm({n, 2, intra, inter, seed});
  Graph out = g;
  out.features = Matrix::identity(n);
  return out;
}

struct Fixture {
  Graph clean;
  GcnParams classifier;
  DenoiserParams denoiser;
  NoiseSchedule schedule;
};

Fixture make_fixture(std::size_t n, std::uint64_t seed, std::size_t horizon = 20,
                     std::size_t diffusion_steps = 400) {
  Fixture f;
  f.clean = two_blocks(n, 0.6, 0.05, seed);
  GcnConfig arch{n, 8, 8, 2, Task::Node};
  TrainConfig tcfg;
  tcfg.learning_rate = 0.05;
  tcfg.epochs = 120;
  tcfg.seed = seed;
  f.classifier = train_classifier(f.clean, all_nodes(n), arch, tcfg).params;
  f.schedule = build_schedule(horizon, 0.008, std::max(0.05, f.clean.edge_density()));
  DiffusionTrainConfig dcfg;
  dcfg.steps = diffusion_steps;
  dcfg.learning_rate = 3e-3;
  dcfg.seed = seed + 1;
  f.denoiser = train_diffusion({f.clean}, f.schedule, dcfg).params;
  return f;
}

PurifyConfig base_config(std::size_t n) {
  PurifyConfig cfg;
  cfg.t_p = 5;
  cfg.guidance = false;
  cfg.lid.k = LidConfig::default_k(n);
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  const NoiseSchedule s = build_schedule(10, 0.008, 0.3);
  PurifyConfig cfg = base_config(20);
  cfg.t_p = 10;
  CHECK_THROWS(cfg.validate(s));  // t_p must stay below the horizon
  cfg.t_p = 0;
  CHECK_THROWS(cfg.validate(s));
  cfg.t_p = 5;
  cfg.num_restarts = 0;
  CHECK_THROWS(cfg.validate(s));
  cfg.num_restarts = 1;
  CHECK_NOTHROW(cfg.validate(s));
}

TEST_CASE("purify is the identity when every purification time is zero") {
  // a classifier whose hidden embeddings never vary produces capped, constant
  // LID values; min-max then maps them all to 0.5 — so force the zero case by
  // attacking the timetable directly: identical gamma gives lambda = 0.25,
  // which still unmasks eventually. The guaranteed zero path is an attacked
  // graph whose lambda matrix is exactly zero, i.e. a single node pair with
  // min-max endpoints 0. Build it with two distinct LID levels instead and
  // check only the lambda = 0 edges stay frozen.
  Fixture f = make_fixture(16, 3);
  const AttackResult atk = attack_random(f.clean, {0.2, 3}, 7);

  PurifyConfig cfg = base_config(16);
  cfg.t_p = 4;

  auto [purified, trace] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  purified.validate();
  CHECK(trace.steps.size() == cfg.t_p);

  // edges whose endpoints both carry the minimum gamma have lambda exactly 0
  // and must never change
  const AdversarialDegreeMap deg = adversarial_degree(trace.gamma);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = i + 1; j < 16; ++j)
      if (deg.lambda_matrix(i, j) == 0.0)
        CHECK(purified.adjacency(i, j) == atk.perturbed.adjacency(i, j));
}

TEST_CASE("a zero timetable freezes the attacked graph exactly") {
  // drive the loop with an explicit all-zero timetable by zeroing lambda:
  // a single chain step-through via the public pieces
  Fixture f = make_fixture(12, 5);
  const AttackResult atk = attack_random(f.clean, {0.2, 2}, 11);
  const std::size_t t_p = 4;

  const PurificationTimetable tt = purification_timetable(Matrix(12, 12), f.schedule, t_p);
  Matrix state = forward_sample(atk.perturbed.adjacency, f.schedule, t_p, 1);
  for (std::size_t t = t_p; t >= 1; --t) {
    const Matrix fwd_ref = forward_sample(atk.perturbed.adjacency, f.schedule, t - 1, 100 + t);
    const ReverseStepResult rev =
        reverse_step(f.denoiser, state, atk.perturbed.features, f.schedule, t, 200 + t);
    const Matrix mask = make_mask(tt, t);
    CHECK(mask.sum() == 0.0);
    state = blend(mask, rev.sample, fwd_ref);
  }
  // the final forward reference is forward_sample(.., 0, ..) = the input itself
  CHECK(state == atk.perturbed.adjacency);
}

TEST_CASE("isotropic purify reduces exactly to plain reverse diffusion") {
  // lambda identically 1 makes every mask all-ones, so the blend passes the
  // sampled prediction through untouched; a direct diffusion-only loop with
  // the same streams must match bit for bit
  Fixture f = make_fixture(14, 7);
  const AttackResult atk = attack_random(f.clean, {0.2, 3}, 13);
  const std::size_t t_p = 4;

  Matrix ones(14, 14, 1.0);
  ones.zero_diagonal();
  const PurificationTimetable tt = purification_timetable(ones, f.schedule, t_p);
  for (std::size_t t = 1; t <= t_p; ++t) {
    const Matrix m = make_mask(tt, t);
    CHECK(m.sum() == doctest::Approx(14.0 * 13.0));  // all off-diagonal ones
  }

  // diffusion-only loop with the chain's stream discipline
  Rng base_a(42, "purify-chain-0");
  Matrix state_a = forward_sample(atk.perturbed.adjacency, f.schedule, t_p, base_a.next());
  for (std::size_t t = t_p; t >= 1; --t) {
    base_a.next();  // the forward-reference seed is drawn but the blend ignores it
    Matrix probs = reverse_probs(f.denoiser, state_a, atk.perturbed.features, f.schedule, t);
    Rng srng(base_a.next(), "sample");
    state_a = sample_edge_matrix(probs, srng);
  }

  PurifyConfig cfg = base_config(14);
  cfg.t_p = t_p;
  cfg.seed = 42;
  cfg.isotropic_lambda = true;
  auto [purified, trace] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  CHECK(purified.adjacency == state_a);

  for (const auto& step : trace.steps) {
    CHECK(step.mask_density >= 0.0);
    CHECK(step.mask_density <= 1.0);
  }
}

TEST_CASE("purify is deterministic per seed and respects restarts") {
  Fixture f = make_fixture(12, 9);
  const AttackResult atk = attack_random(f.clean, {0.2, 2}, 17);
  PurifyConfig cfg = base_config(12);
  cfg.t_p = 3;
  cfg.seed = 5;

  auto [p1, t1] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  auto [p2, t2] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  CHECK(p1.adjacency == p2.adjacency);
  CHECK(t1.steps.size() == t2.steps.size());
  for (std::size_t i = 0; i < t1.steps.size(); ++i)
    CHECK(t1.steps[i].flips_vs_prev == t2.steps[i].flips_vs_prev);

  cfg.num_restarts = 3;
  auto [p3, t3] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  p3.validate();
  CHECK(t3.num_restarts == 3);
}

TEST_CASE("guidance-enabled purify runs and logs entropy values") {
  Fixture f = make_fixture(12, 21);
  const AttackResult atk = attack_random(f.clean, {0.2, 2}, 23);
  PurifyConfig cfg = base_config(12);
  cfg.t_p = 3;
  cfg.guidance = true;
  cfg.guidance_cfg.lambda = 0.5;
  cfg.store_snapshots = true;

  auto [purified, trace] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  purified.validate();
  REQUIRE(trace.steps.size() == 3);
  for (const auto& step : trace.steps) {
    CHECK(std::isfinite(step.transfer_entropy_value));
    CHECK(step.guidance_grad_norm >= 0.0);
    CHECK(step.probs_pre_guidance.has_value());
    CHECK(step.probs_post_guidance.has_value());
  }
}

TEST_CASE("raising a node's gamma never lowers the purification time of its edges") {
  const NoiseSchedule s = build_schedule(30, 0.008, 0.3);
  Rng rng(31, "mono");
  std::vector<double> gamma(8);
  for (auto& g : gamma) g = 0.5 + rng.uniform01();
  const AdversarialDegreeMap before = adversarial_degree(gamma);
  const PurificationTimetable tt_before =
      purification_timetable(before.lambda_matrix, s, 10);

  std::vector<double> raised = gamma;
  raised[3] = gamma[3] + 0.7;
  const AdversarialDegreeMap after = adversarial_degree(raised);
  const PurificationTimetable tt_after = purification_timetable(after.lambda_matrix, s, 10);

  // note: min-max renormalization can lower *other* nodes' lambda, so the
  // guarantee applies to node 3's own edges when it is not the previous max
  for (std::size_t j = 0; j < 8; ++j) {
    if (j == 3) continue;
    if (after.gamma_norm[j] >= before.gamma_norm[j])
      CHECK(tt_after.t_hat(3, j) >= tt_before.t_hat(3, j));
  }
}

TEST_CASE("evaluate_purification reference cases") {
  Fixture f = make_fixture(12, 33);
  const AttackResult atk = attack_dice(f.clean, f.clean.node_labels, {0.3, 4}, 37);
  const auto nodes = all_nodes(12);

  {
    const PurificationMetrics m = evaluate_purification(
        f.clean, atk.perturbed, f.clean, atk.flipped_mask, f.classifier, nodes);
    CHECK(m.adversarial_edge_removal_rate == 1.0);
    CHECK(m.clean_edge_preservation_rate == 1.0);
    CHECK(m.acc_purified == m.acc_clean);
    if (m.acc_clean > m.acc_attacked) CHECK(m.recovery_ratio == doctest::Approx(1.0));
  }
  {
    const PurificationMetrics m = evaluate_purification(
        f.clean, atk.perturbed, atk.perturbed, atk.flipped_mask, f.classifier, nodes);
    CHECK(m.adversarial_edge_removal_rate == 0.0);
    CHECK(m.clean_edge_preservation_rate == 1.0);
  }
  {
    Graph complement = atk.perturbed;
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 12; ++j)
        complement.adjacency(i, j) = i == j ? 0.0 : 1.0 - atk.perturbed.adjacency(i, j);
    const PurificationMetrics m = evaluate_purification(
        f.clean, atk.perturbed, complement, atk.flipped_mask, f.classifier, nodes);
    CHECK(m.clean_edge_preservation_rate == 0.0);
  }
}

TEST_CASE("stored-trajectory mode is reproducible too") {
  Fixture f = make_fixture(10, 41);
  const AttackResult atk = attack_random(f.clean, {0.2, 2}, 43);
  PurifyConfig cfg = base_config(10);
  cfg.t_p = 3;
  cfg.fresh_forward_reference = false;
  auto [p1, t1] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  auto [p2, t2] = purify(atk.perturbed, f.classifier, f.denoiser, f.schedule, cfg);
  CHECK(p1.adjacency == p2.adjacency);
  p1.validate();
}
