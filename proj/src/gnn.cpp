#include "graphpure/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphpure {

namespace {

void add_row_vector(Matrix& m, const std::vector<double>& v) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += v[j];
}

std::vector<double> colsum(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j);
  return out;
}

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = (2.0 * rng.uniform01() - 1.0) * limit;
  return m;
}

// softmax of one logits row; returns probabilities
std::vector<double> softmax_row(const Matrix& logits, std::size_t row) {
  const std::size_t c = logits.cols();
  std::vector<double> p(c);
  double mx = logits(row, 0);
  for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits(row, j));
  double z = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    p[j] = std::exp(logits(row, j) - mx);
    z += p[j];
  }
  for (std::size_t j = 0; j < c; ++j) p[j] /= z;
  return p;
}

struct ForwardCache {
  Matrix ahat;
  Matrix u1, p1, h1;  // u1 = X W1, p1 = Ahat u1 + b1
  Matrix u2, p2, h2;
  Matrix pool;        // graph task only, 1 x hidden2
  Matrix logits;
};

ForwardCache forward_cached(const GcnParams& params, const Graph& graph) {
  params.check_shapes();
  if (!graph.features.all_finite() || !graph.adjacency.all_finite())
    throw std::invalid_argument("gcn_forward: non-finite input");
  if (graph.features.cols() != params.config.in_dim)
    throw std::invalid_argument("gcn_forward: feature width does not match in_dim");

  ForwardCache c;
  c.ahat = sym_normalized_adjacency(graph.adjacency);
  c.u1 = graph.features * params.w1;
  c.p1 = c.ahat * c.u1;
  add_row_vector(c.p1, params.b1);
  c.h1 = relu(c.p1);
  c.u2 = c.h1 * params.w2;
  c.p2 = c.ahat * c.u2;
  add_row_vector(c.p2, params.b2);
  c.h2 = relu(c.p2);

  if (params.config.task == Task::Node) {
    c.logits = c.h2 * params.w_out;
    add_row_vector(c.logits, params.b_out);
  } else {
    const std::size_t n = c.h2.rows();
    c.pool = Matrix(1, c.h2.cols());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c.h2.cols(); ++j) c.pool(0, j) += c.h2(i, j);
    if (n > 0) c.pool *= 1.0 / static_cast<double>(n);
    c.logits = c.pool * params.w_out;
    add_row_vector(c.logits, params.b_out);
  }
  if (!c.logits.all_finite()) throw std::runtime_error("gcn_forward: non-finite activations");
  return c;
}

struct ParamGrads {
  Matrix w1, w2, w_out;
  std::vector<double> b1, b2, b_out;

  static ParamGrads zeros_like(const GcnParams& p) {
    ParamGrads g;
    g.w1 = Matrix(p.w1.rows(), p.w1.cols());
    g.w2 = Matrix(p.w2.rows(), p.w2.cols());
    g.w_out = Matrix(p.w_out.rows(), p.w_out.cols());
    g.b1.assign(p.b1.size(), 0.0);
    g.b2.assign(p.b2.size(), 0.0);
    g.b_out.assign(p.b_out.size(), 0.0);
    return g;
  }

  void accumulate(const ParamGrads& o, double scale) {
    w1.add_scaled(scale, o.w1);
    w2.add_scaled(scale, o.w2);
    w_out.add_scaled(scale, o.w_out);
    for (std::size_t i = 0; i < b1.size(); ++i) b1[i] += scale * o.b1[i];
    for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += scale * o.b2[i];
    for (std::size_t i = 0; i < b_out.size(); ++i) b_out[i] += scale * o.b_out[i];
  }
};

// Cross-entropy loss + dLogits for the selected rows (or row 0 / graph label).
double loss_and_dlogits(const GcnParams& params, const Graph& graph, const ForwardCache& c,
                        const std::vector<std::size_t>& target_nodes, Matrix& dlogits) {
  dlogits = Matrix(c.logits.rows(), c.logits.cols());
  double loss = 0.0;
  if (params.config.task == Task::Node) {
    if (graph.node_labels.empty())
      throw std::invalid_argument("classification loss: node labels required");
    if (target_nodes.empty()) throw std::invalid_argument("classification loss: empty target set");
    const double invm = 1.0 / static_cast<double>(target_nodes.size());
    for (std::size_t row : target_nodes) {
      const int label = graph.node_labels.at(row);
      auto p = softmax_row(c.logits, row);
      loss += -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300)) * invm;
      for (std::size_t j = 0; j < p.size(); ++j)
        dlogits(row, j) = (p[j] - (static_cast<int>(j) == label ? 1.0 : 0.0)) * invm;
    }
  } else {
    if (!graph.graph_label) throw std::invalid_argument("classification loss: graph label required");
    const int label = *graph.graph_label;
    auto p = softmax_row(c.logits, 0);
    loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
    for (std::size_t j = 0; j < p.size(); ++j)
      dlogits(0, j) = p[j] - (static_cast<int>(j) == label ? 1.0 : 0.0);
  }
  return loss;
}

// Backward pass. Fills grads; when g_ahat is non-null also accumulates
// dL/dAhat for the adjacency gradient path.
void backward(const GcnParams& params, const Graph& graph, const ForwardCache& c,
              const Matrix& dlogits, ParamGrads& grads, Matrix* g_ahat) {
  Matrix dh2;
  if (params.config.task == Task::Node) {
    grads.w_out = c.h2.transpose() * dlogits;
    grads.b_out = colsum(dlogits);
    dh2 = dlogits * params.w_out.transpose();
  } else {
    grads.w_out = c.pool.transpose() * dlogits;
    grads.b_out = colsum(dlogits);
    const Matrix dpool = dlogits * params.w_out.transpose();
    const std::size_t n = c.h2.rows();
    dh2 = Matrix(n, c.h2.cols());
    const double invn = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dh2.cols(); ++j) dh2(i, j) = dpool(0, j) * invn;
  }

  const Matrix dp2 = relu_grad(c.p2, dh2);
  grads.b2 = colsum(dp2);
  const Matrix ahat_t = c.ahat.transpose();
  const Matrix du2 = ahat_t * dp2;
  grads.w2 = c.h1.transpose() * du2;
  if (g_ahat) *g_ahat += dp2 * c.u2.transpose();

  const Matrix dh1 = du2 * params.w2.transpose();
  const Matrix dp1 = relu_grad(c.p1, dh1);
  grads.b1 = colsum(dp1);
  const Matrix du1 = ahat_t * dp1;
  grads.w1 = graph.features.transpose() * du1;
  if (g_ahat) *g_ahat += dp1 * c.u1.transpose();
}

class AdamState {
 public:
  explicit AdamState(const GcnParams& p)
      : mw1_(p.w1.rows(), p.w1.cols()), vw1_(p.w1.rows(), p.w1.cols()),
        mw2_(p.w2.rows(), p.w2.cols()), vw2_(p.w2.rows(), p.w2.cols()),
        mwo_(p.w_out.rows(), p.w_out.cols()), vwo_(p.w_out.rows(), p.w_out.cols()),
        mb1_(p.b1.size(), 0.0), vb1_(p.b1.size(), 0.0),
        mb2_(p.b2.size(), 0.0), vb2_(p.b2.size(), 0.0),
        mbo_(p.b_out.size(), 0.0), vbo_(p.b_out.size(), 0.0) {}

  void step(GcnParams& p, const ParamGrads& g, const TrainConfig& cfg) {
    ++t_;
    update(p.w1.data(), g.w1.data(), mw1_.data(), vw1_.data(), p.w1.size(), cfg);
    update(p.w2.data(), g.w2.data(), mw2_.data(), vw2_.data(), p.w2.size(), cfg);
    update(p.w_out.data(), g.w_out.data(), mwo_.data(), vwo_.data(), p.w_out.size(), cfg);
    update(p.b1.data(), g.b1.data(), mb1_.data(), vb1_.data(), p.b1.size(), cfg);
    update(p.b2.data(), g.b2.data(), mb2_.data(), vb2_.data(), p.b2.size(), cfg);
    update(p.b_out.data(), g.b_out.data(), mbo_.data(), vbo_.data(), p.b_out.size(), cfg);
  }

 private:
  void update(double* w, const double* g, double* m, double* v, std::size_t n,
              const TrainConfig& cfg) {
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < n; ++i) {
      const double grad = g[i] + cfg.weight_decay * w[i];
      m[i] = b1 * m[i] + (1.0 - b1) * grad;
      v[i] = b2 * v[i] + (1.0 - b2) * grad * grad;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }

  long t_ = 0;
  Matrix mw1_, vw1_, mw2_, vw2_, mwo_, vwo_;
  std::vector<double> mb1_, vb1_, mb2_, vb2_, mbo_, vbo_;
};

void sgd_step(GcnParams& p, const ParamGrads& g, const TrainConfig& cfg) {
  auto upd = [&](double* w, const double* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
      w[i] -= cfg.learning_rate * (grad[i] + cfg.weight_decay * w[i]);
  };
  upd(p.w1.data(), g.w1.data(), p.w1.size());
  upd(p.w2.data(), g.w2.data(), p.w2.size());
  upd(p.w_out.data(), g.w_out.data(), p.w_out.size());
  upd(p.b1.data(), g.b1.data(), p.b1.size());
  upd(p.b2.data(), g.b2.data(), p.b2.size());
  upd(p.b_out.data(), g.b_out.data(), p.b_out.size());
}

}  // namespace

Matrix sym_normalized_adjacency(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("adjacency must be square");
  const std::size_t n = a.rows();
  std::vector<double> dinv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;  // self-loop
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    dinv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = a(i, j) + (i == j ? 1.0 : 0.0);
      if (s != 0.0) out(i, j) = s * dinv_sqrt[i] * dinv_sqrt[j];
    }
  }
  return out;
}

Matrix sym_norm_adjoint(const Matrix& a, const Matrix& g_ahat) {
  const std::size_t n = a.rows();
  if (!a.same_shape(g_ahat)) throw std::invalid_argument("sym_norm_adjoint: shape mismatch");
  std::vector<double> deg(n), dinv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    deg[i] = d;
    dinv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  // u_p = sum_j G_pj S_pj / sqrt(d_j), v_q = sum_i G_iq S_iq / sqrt(d_i)
  std::vector<double> u(n, 0.0), v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double s = a(i, j) + (i == j ? 1.0 : 0.0);
      if (s == 0.0) continue;
      u[i] += g_ahat(i, j) * s * dinv_sqrt[j];
      v[j] += g_ahat(i, j) * s * dinv_sqrt[i];
    }
  }
  Matrix out(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    const double up_term = 0.5 * u[p] * dinv_sqrt[p] / deg[p];
    for (std::size_t q = 0; q < n; ++q) {
      const double vq_term = 0.5 * v[q] * dinv_sqrt[q] / deg[q];
      out(p, q) = g_ahat(p, q) * dinv_sqrt[p] * dinv_sqrt[q] - up_term - vq_term;
    }
  }
  return out;
}

void GcnParams::check_shapes() const {
  const auto& c = config;
  const bool ok = w1.rows() == c.in_dim && w1.cols() == c.hidden1 && w2.rows() == c.hidden1 &&
                  w2.cols() == c.hidden2 && w_out.rows() == c.hidden2 &&
                  w_out.cols() == c.num_classes && b1.size() == c.hidden1 &&
                  b2.size() == c.hidden2 && b_out.size() == c.num_classes;
  if (!ok) throw std::invalid_argument("gcn params: inconsistent shapes");
  if (!w1.all_finite() || !w2.all_finite() || !w_out.all_finite())
    throw std::invalid_argument("gcn params: non-finite weights");
}

GcnParams GcnParams::init(const GcnConfig& config, std::uint64_t seed) {
  Rng rng(seed, "gcn-init");
  GcnParams p;
  p.config = config;
  p.w1 = glorot(config.in_dim, config.hidden1, rng);
  p.w2 = glorot(config.hidden1, config.hidden2, rng);
  p.w_out = glorot(config.hidden2, config.num_classes, rng);
  p.b1.assign(config.hidden1, 0.0);
  p.b2.assign(config.hidden2, 0.0);
  p.b_out.assign(config.num_classes, 0.0);
  return p;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("train: learning_rate must be >= 0");
  if (epochs == 0) throw std::invalid_argument("train: epochs must be positive");
}

GcnOutput gcn_forward(const GcnParams& params, const Graph& graph) {
  ForwardCache c = forward_cached(params, graph);
  return {std::move(c.logits), {std::move(c.h2)}};
}

TrainResult train_classifier(const Graph& graph, const std::vector<std::size_t>& train_nodes,
                             const GcnConfig& arch, const TrainConfig& config) {
  config.validate();
  if (arch.task != Task::Node) throw std::invalid_argument("node trainer got a graph-task config");
  GcnParams params = GcnParams::init(arch, config.seed);
  AdamState adam(params);
  std::vector<double> history;
  history.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ForwardCache c = forward_cached(params, graph);
    Matrix dlogits;
    const double loss = loss_and_dlogits(params, graph, c, train_nodes, dlogits);
    if (!std::isfinite(loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    ParamGrads grads = ParamGrads::zeros_like(params);
    backward(params, graph, c, dlogits, grads, nullptr);
    if (config.optimizer == Optimizer::Adam)
      adam.step(params, grads, config);
    else
      sgd_step(params, grads, config);
    history.push_back(loss);
  }
  return {std::move(params), std::move(history)};
}

TrainResult train_classifier(const std::vector<Graph>& graphs,
                             const std::vector<std::size_t>& train_graphs,
                             const GcnConfig& arch, const TrainConfig& config) {
  config.validate();
  if (arch.task != Task::Graph) throw std::invalid_argument("graph trainer got a node-task config");
  if (train_graphs.empty()) throw std::invalid_argument("train: empty graph set");
  GcnParams params = GcnParams::init(arch, config.seed);
  AdamState adam(params);
  std::vector<double> history;
  history.reserve(config.epochs);
  const double invm = 1.0 / static_cast<double>(train_graphs.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ParamGrads total = ParamGrads::zeros_like(params);
    double loss = 0.0;
    for (std::size_t gi : train_graphs) {
      const Graph& g = graphs.at(gi);
      ForwardCache c = forward_cached(params, g);
      Matrix dlogits;
      loss += loss_and_dlogits(params, g, c, {}, dlogits) * invm;
      ParamGrads grads = ParamGrads::zeros_like(params);
      backward(params, g, c, dlogits, grads, nullptr);
      total.accumulate(grads, invm);
    }
    if (!std::isfinite(loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    if (config.optimizer == Optimizer::Adam)
      adam.step(params, total, config);
    else
      sgd_step(params, total, config);
    history.push_back(loss);
  }
  return {std::move(params), std::move(history)};
}

Matrix grad_wrt_adjacency(const GcnParams& params, const Graph& graph,
                          const std::vector<std::size_t>& target_nodes) {
  ForwardCache c = forward_cached(params, graph);
  Matrix dlogits;
  loss_and_dlogits(params, graph, c, target_nodes, dlogits);
  ParamGrads grads = ParamGrads::zeros_like(params);
  Matrix g_ahat(graph.num_nodes(), graph.num_nodes());
  backward(params, graph, c, dlogits, grads, &g_ahat);
  Matrix g = sym_norm_adjoint(graph.adjacency, g_ahat).symmetrized();
  g.zero_diagonal();
  return g;
}

double classification_loss(const GcnParams& params, const Graph& graph,
                           const std::vector<std::size_t>& target_nodes) {
  ForwardCache c = forward_cached(params, graph);
  Matrix dlogits;
  return loss_and_dlogits(params, graph, c, target_nodes, dlogits);
}

GcnGradients classification_gradients(const GcnParams& params, const Graph& graph,
                                      const std::vector<std::size_t>& target_nodes) {
  ForwardCache c = forward_cached(params, graph);
  Matrix dlogits;
  loss_and_dlogits(params, graph, c, target_nodes, dlogits);
  ParamGrads grads = ParamGrads::zeros_like(params);
  backward(params, graph, c, dlogits, grads, nullptr);
  return {std::move(grads.w1),  std::move(grads.w2),  std::move(grads.w_out),
          std::move(grads.b1),  std::move(grads.b2),  std::move(grads.b_out)};
}

std::size_t argmax_row(const Matrix& m, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < m.cols(); ++j)
    if (m(row, j) > m(row, best)) best = j;
  return best;
}

double predict_accuracy(const GcnParams& params, const Graph& graph,
                        const std::vector<std::size_t>& nodes) {
  if (nodes.empty()) return 0.0;
  if (graph.node_labels.empty()) throw std::invalid_argument("accuracy: node labels required");
  const GcnOutput out = gcn_forward(params, graph);
  std::size_t correct = 0;
  for (std::size_t i : nodes)
    if (static_cast<int>(argmax_row(out.logits, i)) == graph.node_labels.at(i)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double predict_accuracy(const GcnParams& params, const std::vector<Graph>& graphs,
                        const std::vector<std::size_t>& graph_indices) {
  if (graph_indices.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t gi : graph_indices) {
    const Graph& g = graphs.at(gi);
    if (!g.graph_label) throw std::invalid_argument("accuracy: graph label required");
    const GcnOutput out = gcn_forward(params, g);
    if (static_cast<int>(argmax_row(out.logits, 0)) == *g.graph_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(graph_indices.size());
}

}  // namespace graphpure
