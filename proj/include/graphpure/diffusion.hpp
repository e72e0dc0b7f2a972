#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "graphpure/graph.hpp"
#include "graphpure/matrix.hpp"
#include "graphpure/rng.hpp"

namespace graphpure {

// Cosine-schedule two-state edge diffusion toward the marginal edge-state
// distribution m_A = (1 - density, density).
struct NoiseSchedule {
  std::size_t horizon = 0;      // T
  double offset = 0.008;        // s
  double edge_density = 0.0;    // d used to build m_A
  std::vector<double> alpha_bar;  // length T+1
  EdgeStateVector m_a{{1.0, 0.0}};

  void validate() const;  // recomputes the table from (T, s) and checks m_A
};

double cosine_alpha_bar(double t_real, std::size_t horizon, double offset);

NoiseSchedule build_schedule(std::size_t horizon, double offset, double edge_density);

// 2x2 row-stochastic edge-state transition matrix.
struct TransitionMatrix {
  std::array<std::array<double, 2>, 2> q{};

  void validate(double tol = 1e-12) const;
};

// Cumulative transition Q_bar(t) = alpha_bar(t) I + (1 - alpha_bar(t)) 1 m_A^T.
TransitionMatrix qbar(const NoiseSchedule& schedule, std::size_t t);

// Single-step Q(t) = Q_bar(t-1)^{-1} Q_bar(t), analytic 2x2 inverse; t >= 1.
TransitionMatrix q_single(const NoiseSchedule& schedule, std::size_t t);

// Independently corrupts each upper-triangle entry by the Q_bar(t) row of its
// current state, mirrored. t = 0 is the empty product and returns the input
// unchanged (the stored alpha_bar(0) stays slightly below 1 by the formula).
Matrix forward_sample(const Matrix& adjacency, const NoiseSchedule& schedule, std::size_t t,
                      std::uint64_t seed);

// q(state at t-1 | a_t, a_0) by Bayes over the two-state chain; t >= 1.
EdgeStateVector posterior(int a_t_state, int a_0_state, const NoiseSchedule& schedule,
                          std::size_t t);

struct DenoiserConfig {
  std::size_t in_dim = 0;
  std::size_t width = 32;  // node state width D; time embedding shares it
};

// Denoising network: two residual rounds of symmetric-normalized message
// passing over the noisy adjacency with a sinusoidal time embedding added to
// the node states, then a symmetric pairwise scorer
//   logits(i, j) = mlp([h_i .* h_j, h_i + h_j, t_emb])
// predicting the clean edge state.
struct DenoiserParams {
  DenoiserConfig config;
  Matrix w_in, w_m1, w_m2;   // in_dim x D, D x D, D x D
  Matrix w_s1, w_s2;         // 3D x D, D x 2
  std::vector<double> b_in, b_m1, b_m2, b_s1, b_s2;

  static DenoiserParams init(const DenoiserConfig& config, std::uint64_t seed);
  void check_shapes() const;
};

std::vector<double> sinusoidal_time_embedding(std::size_t t, std::size_t dim);

// Probability that each edge's clean state is "present" given the noisy
// adjacency at time t. Symmetric with zero diagonal, entries in [0, 1].
Matrix denoise_predict(const DenoiserParams& params, const Matrix& noisy_adjacency,
                       const Matrix& features, std::size_t t);

struct DiffusionTrainConfig {
  double learning_rate = 3e-4;
  std::size_t steps = 2000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DiffusionTrainResult {
  DenoiserParams params;
  std::vector<double> loss_history;  // per optimizer step
};

// One (graph, t) pair per step: corrupt, then minimize mean per-edge
// cross-entropy against the clean adjacency over the upper triangle.
DiffusionTrainResult train_diffusion(const std::vector<Graph>& clean_graphs,
                                     const NoiseSchedule& schedule,
                                     const DiffusionTrainConfig& config);

// Mean per-edge negative log-likelihood of the clean edges under the
// prediction for a corrupted copy of `graph` at time t.
double denoise_nll(const DenoiserParams& params, const Graph& graph,
                   const NoiseSchedule& schedule, std::size_t t, std::uint64_t seed);

struct DenoiserGradients {
  Matrix w_in, w_m1, w_m2, w_s1, w_s2;
  std::vector<double> b_in, b_m1, b_m2, b_s1, b_s2;
};

// Mean per-edge cross-entropy of the prediction for (noisy, t) against the
// clean adjacency, without sampling (oracle surface for gradient checks).
double denoiser_loss(const DenoiserParams& params, const Matrix& noisy_adjacency,
                     const Matrix& features, const Matrix& clean_adjacency, std::size_t t);

std::pair<double, DenoiserGradients> denoiser_loss_gradients(const DenoiserParams& params,
                                                             const Matrix& noisy_adjacency,
                                                             const Matrix& features,
                                                             const Matrix& clean_adjacency,
                                                             std::size_t t);

// Pre-sampling marginal p(state at t-1 = present) for every edge:
// sum over predicted clean states of posterior(a_t, a_0, t).
Matrix reverse_probs(const DenoiserParams& params, const Matrix& noisy_adjacency,
                     const Matrix& features, const NoiseSchedule& schedule, std::size_t t);

// Bernoulli sample of a symmetric adjacency from an edge-probability matrix.
Matrix sample_edge_matrix(const Matrix& probs, Rng& rng);

struct ReverseStepResult {
  Matrix sample;  // adjacency at t-1
  Matrix probs;   // pre-sampling probabilities (guidance hook)
};

ReverseStepResult reverse_step(const DenoiserParams& params, const Matrix& noisy_adjacency,
                               const Matrix& features, const NoiseSchedule& schedule,
                               std::size_t t, std::uint64_t seed);

}  // namespace graphpure
