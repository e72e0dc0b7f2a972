#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphpure/graph.hpp"
#include "graphpure/matrix.hpp"
#include "graphpure/rng.hpp"

namespace graphpure {

enum class Task { Node, Graph };

struct GcnConfig {
  std::size_t in_dim = 0;
  std::size_t hidden1 = 16;
  std::size_t hidden2 = 16;
  std::size_t num_classes = 0;
  Task task = Task::Node;
};

// Two-layer GCN with a linear head. Graph task mean-pools the second
// hidden layer before the head.
struct GcnParams {
  GcnConfig config;
  Matrix w1, w2, w_out;
  std::vector<double> b1, b2, b_out;

  static GcnParams init(const GcnConfig& config, std::uint64_t seed);
  void check_shapes() const;
};

struct HiddenEmbeddings {
  Matrix z_hidden;  // N x hidden2, post-relu activations of layer 2
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 3e-4;
  std::size_t epochs = 200;
  Optimizer optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GcnOutput {
  Matrix logits;   // node task: N x C; graph task: 1 x C
  HiddenEmbeddings hidden;
};

// D^{-1/2} (A + I) D^{-1/2} with D = diag(rowsum(A + I)). Accepts
// continuous relaxations of A with entries in [0, 1].
Matrix sym_normalized_adjacency(const Matrix& a);

// Adjoint of sym_normalized_adjacency: maps dL/dA_hat to dL/dA including
// the degree-dependence terms. Free-matrix gradient, no symmetrization.
Matrix sym_norm_adjoint(const Matrix& a, const Matrix& g_ahat);

GcnOutput gcn_forward(const GcnParams& params, const Graph& graph);

struct TrainResult {
  GcnParams params;
  std::vector<double> loss_history;
};

// Node task: cross-entropy over the listed node indices of one graph.
TrainResult train_classifier(const Graph& graph, const std::vector<std::size_t>& train_nodes,
                             const GcnConfig& arch, const TrainConfig& config);

// Graph task: cross-entropy over the listed graph indices.
TrainResult train_classifier(const std::vector<Graph>& graphs,
                             const std::vector<std::size_t>& train_graphs,
                             const GcnConfig& arch, const TrainConfig& config);

// d(mean cross-entropy over target nodes or the graph label)/dA, treated as a
// continuous free matrix, then symmetrized with zero diagonal.
Matrix grad_wrt_adjacency(const GcnParams& params, const Graph& graph,
                          const std::vector<std::size_t>& target_nodes);

struct GcnGradients {
  Matrix w1, w2, w_out;
  std::vector<double> b1, b2, b_out;
};

// Analytic parameter gradients of the classification loss (oracle surface for
// finite-difference checks; training uses the same path).
GcnGradients classification_gradients(const GcnParams& params, const Graph& graph,
                                      const std::vector<std::size_t>& target_nodes);

// Cross-entropy of the current predictions (used by attacks and training diagnostics).
double classification_loss(const GcnParams& params, const Graph& graph,
                           const std::vector<std::size_t>& target_nodes);

double predict_accuracy(const GcnParams& params, const Graph& graph,
                        const std::vector<std::size_t>& nodes);
double predict_accuracy(const GcnParams& params, const std::vector<Graph>& graphs,
                        const std::vector<std::size_t>& graph_indices);

// argmax with ties toward the smaller class index
std::size_t argmax_row(const Matrix& m, std::size_t row);

}  // namespace graphpure
