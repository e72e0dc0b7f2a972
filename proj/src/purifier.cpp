#include "graphpure/purifier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace graphpure {

namespace {

std::size_t upper_hamming(const Matrix& a, const Matrix& b) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if ((a(i, j) != 0.0) != (b(i, j) != 0.0)) ++count;
  return count;
}

// one stored forward trajectory: state at t sampled from state at t-1 by the
// single-step transition
std::vector<Matrix> forward_trajectory(const Matrix& start, const NoiseSchedule& schedule,
                                       std::size_t t_p, Rng& rng) {
  std::vector<Matrix> traj;
  traj.reserve(t_p + 1);
  traj.push_back(start);
  const std::size_t n = start.rows();
  for (std::size_t t = 1; t <= t_p; ++t) {
    const TransitionMatrix q = q_single(schedule, t);
    Matrix next(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const int state = traj.back()(i, j) != 0.0 ? 1 : 0;
        const double v = rng.bernoulli(q.q[state][1]) ? 1.0 : 0.0;
        next(i, j) = v;
        next(j, i) = v;
      }
    traj.push_back(std::move(next));
  }
  return traj;
}

struct ChainResult {
  Matrix final_adjacency;
  std::vector<PurifyStepRecord> steps;
};

ChainResult run_chain(const Graph& attacked, const DenoiserParams& denoiser,
                      const NoiseSchedule& schedule, const PurificationTimetable& timetable,
                      const PurifyConfig& config, std::size_t chain_index, bool record_steps) {
  const std::size_t n = attacked.num_nodes();
  const std::size_t t_p = config.t_p;
  Rng base(config.seed, "purify-chain-" + std::to_string(chain_index));

  std::vector<Matrix> traj;
  Matrix state;
  if (config.fresh_forward_reference) {
    state = forward_sample(attacked.adjacency, schedule, t_p, base.next());
  } else {
    Rng traj_rng = base.stream("trajectory");
    traj = forward_trajectory(attacked.adjacency, schedule, t_p, traj_rng);
    state = traj[t_p];
  }

  ChainResult result;
  const bool snapshot = config.store_snapshots && n <= config.snapshot_max_nodes;

  for (std::size_t t = t_p; t >= 1; --t) {
    try {
      Matrix fwd_ref = config.fresh_forward_reference
                           ? forward_sample(attacked.adjacency, schedule, t - 1, base.next())
                           : traj[t - 1];

      Matrix probs = reverse_probs(denoiser, state, attacked.features, schedule, t);

      PurifyStepRecord rec;
      rec.t = t;
      rec.transfer_entropy_value = std::nan("");
      if (snapshot) rec.probs_pre_guidance = probs;

      if (config.guidance) {
        rec.transfer_entropy_value =
            transfer_entropy(probs, state, attacked.adjacency, attacked.features, config.entropy,
                             config.guidance_cfg.form);
        const Matrix grad = guidance_gradient(probs, state, attacked.adjacency, attacked.features,
                                              config.entropy, config.guidance_cfg);
        rec.guidance_grad_norm = grad.max_abs();
        probs = apply_guidance(probs, grad, schedule, t, config.guidance_cfg);
        if (snapshot) rec.probs_post_guidance = probs;
      }

      Rng sample_rng(base.next(), "sample");
      const Matrix sampled = sample_edge_matrix(probs, sample_rng);
      const Matrix mask = make_mask(timetable, t);
      Matrix next = blend(mask, sampled, fwd_ref);

      if (record_steps) {
        rec.mask_density =
            n > 1 ? mask.sum() / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
        rec.flips_vs_prev = upper_hamming(next, state);
        result.steps.push_back(std::move(rec));
      }
      state = std::move(next);
    } catch (const std::exception& e) {
      throw std::runtime_error("purify failed at step t=" + std::to_string(t) + ": " + e.what());
    }
  }
  result.final_adjacency = std::move(state);
  return result;
}

}  // namespace

void PurifyConfig::validate(const NoiseSchedule& schedule) const {
  if (t_p < 1 || t_p >= schedule.horizon)
    throw std::invalid_argument("purify: t_p must satisfy 1 <= t_p < schedule horizon");
  if (num_restarts < 1) throw std::invalid_argument("purify: num_restarts must be >= 1");
  entropy.validate();
  if (guidance) guidance_cfg.validate();
}

std::pair<Graph, PurificationTrace> purify(const Graph& attacked_graph,
                                           const GcnParams& classifier_params,
                                           const DenoiserParams& denoiser_params,
                                           const NoiseSchedule& schedule,
                                           const PurifyConfig& config) {
  attacked_graph.validate();
  config.validate(schedule);
  const std::size_t n = attacked_graph.num_nodes();

  PurificationTrace trace;
  trace.num_restarts = config.num_restarts;

  Matrix lambda_matrix;
  if (config.isotropic_lambda) {
    trace.gamma.assign(n, 1.0);
    lambda_matrix = Matrix(n, n, 1.0);
    lambda_matrix.zero_diagonal();
  } else {
    // LID from the attacked graph's hidden embeddings, once per run
    const GcnOutput out = gcn_forward(classifier_params, attacked_graph);
    trace.gamma = estimate_lid(out.hidden.z_hidden, config.lid, &trace.lid_diagnostics);
    lambda_matrix = adversarial_degree(trace.gamma).lambda_matrix;
  }
  const PurificationTimetable timetable =
      purification_timetable(lambda_matrix, schedule, config.t_p, &trace.lid_diagnostics);

  Matrix vote_count(n, n);
  for (std::size_t c = 0; c < config.num_restarts; ++c) {
    ChainResult chain = run_chain(attacked_graph, denoiser_params, schedule, timetable, config, c,
                                  /*record_steps=*/c == 0);
    if (c == 0) trace.steps = std::move(chain.steps);
    vote_count += chain.final_adjacency;
  }

  Matrix purified(n, n);
  const double r = static_cast<double>(config.num_restarts);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double ones = vote_count(i, j);
      double v;
      if (2.0 * ones > r)
        v = 1.0;
      else if (2.0 * ones < r)
        v = 0.0;
      else
        v = attacked_graph.adjacency(i, j);  // tie keeps the attacked entry
      purified(i, j) = v;
      purified(j, i) = v;
    }

  Graph result = attacked_graph;
  result.adjacency = purified;
  result.validate();
  trace.final_adjacency = std::move(purified);
  return {std::move(result), std::move(trace)};
}

PurificationMetrics evaluate_purification(const Graph& clean, const Graph& attacked,
                                          const Graph& purified, const Matrix& flipped_mask,
                                          const GcnParams& classifier_params,
                                          const std::vector<std::size_t>& eval_nodes) {
  const std::size_t n = clean.num_nodes();
  if (attacked.num_nodes() != n || purified.num_nodes() != n || flipped_mask.rows() != n)
    throw std::invalid_argument("evaluate_purification: shape mismatch");

  PurificationMetrics m;
  m.acc_clean = predict_accuracy(classifier_params, clean, eval_nodes);
  m.acc_attacked = predict_accuracy(classifier_params, attacked, eval_nodes);
  m.acc_purified = predict_accuracy(classifier_params, purified, eval_nodes);

  std::size_t flipped = 0, reverted = 0, unflipped = 0, preserved = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same_as_clean = (purified.adjacency(i, j) != 0.0) == (clean.adjacency(i, j) != 0.0);
      if (flipped_mask(i, j) != 0.0) {
        ++flipped;
        if (same_as_clean) ++reverted;
      } else {
        ++unflipped;
        if (same_as_clean) ++preserved;
      }
    }
  }
  m.adversarial_edge_removal_rate =
      flipped == 0 ? 1.0 : static_cast<double>(reverted) / static_cast<double>(flipped);
  m.clean_edge_preservation_rate =
      unflipped == 0 ? 1.0 : static_cast<double>(preserved) / static_cast<double>(unflipped);
  m.recovery_ratio =
      (m.acc_purified - m.acc_attacked) / std::max(m.acc_clean - m.acc_attacked, 1e-9);
  return m;
}

}  // namespace graphpure
