#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "graphpure/gnn.hpp"
#include "graphpure/graph.hpp"
#include "graphpure/rng.hpp"

using namespace graphpure;

namespace {

Graph random_node_graph(std::size_t n, std::size_t f, std::uint64_t seed, int classes = 2) {
  Rng rng(seed, "test-graph");
  Graph g;
  g.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.4)) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
  g.features = Matrix(n, f);
  for (std::size_t i = 0; i < g.features.size(); ++i)
    g.features.data()[i] = 2.0 * rng.uniform01() - 1.0;
  g.node_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.node_labels[i] = static_cast<int>(rng.below(classes));
  return g;
}

GcnParams random_params(const GcnConfig& cfg, std::uint64_t seed) {
  GcnParams p = GcnParams::init(cfg, seed);
  Rng rng(seed, "test-bias");
  for (auto* b : {&p.b1, &p.b2, &p.b_out})
    for (double& v : *b) v = 0.2 * (2.0 * rng.uniform01() - 1.0);
  return p;
}

double rel_err(double a, double b) {
  const double m = std::max(std::fabs(a), std::fabs(b));
  if (m < 1e-10) return 0.0;
  return std::fabs(a - b) / m;
}

std::vector<std::size_t> all_nodes(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// two disjoint k-cliques with identity features, labels by clique
Graph two_cliques(std::size_t k) {
  const std::size_t n = 2 * k;
  Graph g;
  g.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((i < k) == (j < k)) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
  g.features = Matrix::identity(n);
  g.node_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.node_labels[i] = i < k ? 0 : 1;
  return g;
}

}  // namespace

TEST_CASE("zero weights give zero logits everywhere") {
  const Graph g = random_node_graph(5, 3, 1);
  GcnParams p = GcnParams::init({3, 4, 4, 2, Task::Node}, 0);
  p.w1.fill(0.0);
  p.w2.fill(0.0);
  p.w_out.fill(0.0);
  const GcnOutput out = gcn_forward(p, g);
  CHECK(out.logits.max_abs() == 0.0);
}

TEST_CASE("isolated node with identity weights passes its feature through") {
  Graph g;
  g.adjacency = Matrix(1, 1);
  g.features = Matrix(1, 2);
  g.features(0, 0) = 0.3;
  g.features(0, 1) = 0.7;
  GcnParams p;
  p.config = {2, 2, 2, 2, Task::Node};
  p.w1 = Matrix::identity(2);
  p.w2 = Matrix::identity(2);
  p.w_out = Matrix::identity(2);
  p.b1 = {0.0, 0.0};
  p.b2 = {0.0, 0.0};
  p.b_out = {0.0, 0.0};
  const GcnOutput out = gcn_forward(p, g);
  CHECK(out.logits(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(out.logits(0, 1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("forward matches an independent dense matrix-chain evaluation") {
  const Graph g = random_node_graph(6, 3, 42);
  const GcnParams p = random_params({3, 4, 5, 2, Task::Node}, 7);
  const GcnOutput out = gcn_forward(p, g);

  // oracle: explicit loops, no shared matmul path
  const std::size_t n = 6;
  std::vector<double> deg(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += g.adjacency(i, j);
  auto ahat = [&](std::size_t i, std::size_t j) {
    const double s = g.adjacency(i, j) + (i == j ? 1.0 : 0.0);
    return s / std::sqrt(deg[i] * deg[j]);
  };
  auto layer = [&](const std::vector<std::vector<double>>& x, const Matrix& w,
                   const std::vector<double>& b) {
    std::vector<std::vector<double>> out(n, std::vector<double>(w.cols(), 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < w.cols(); ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double xv = 0.0;
          for (std::size_t f = 0; f < w.rows(); ++f) xv += x[j][f] * w(f, c);
          acc += ahat(i, j) * xv;
        }
        acc += b[c];
        out[i][c] = acc > 0.0 ? acc : 0.0;
      }
    return out;
  };
  std::vector<std::vector<double>> x0(n, std::vector<double>(3));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < 3; ++f) x0[i][f] = g.features(i, f);
  const auto h1 = layer(x0, p.w1, p.b1);
  const auto h2 = layer(h1, p.w2, p.b2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      double acc = p.b_out[c];
      for (std::size_t f = 0; f < p.w_out.rows(); ++f) acc += h2[i][f] * p.w_out(f, c);
      CHECK(out.logits(i, c) == doctest::Approx(acc).epsilon(1e-10));
    }
}

TEST_CASE("parameter gradients match central finite differences") {
  const double h = 1e-4;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Graph g = random_node_graph(7, 3, 100 + seed);
    GcnParams p = random_params({3, 4, 4, 2, Task::Node}, 50 + seed);
    const auto targets = all_nodes(7);
    const GcnGradients grads = classification_gradients(p, g, targets);

    auto check_matrix = [&](Matrix& w, const Matrix& gw) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double orig = w.data()[i];
        w.data()[i] = orig + h;
        const double up = classification_loss(p, g, targets);
        w.data()[i] = orig - h;
        const double dn = classification_loss(p, g, targets);
        w.data()[i] = orig;
        CHECK(rel_err(gw.data()[i], (up - dn) / (2.0 * h)) < 1e-4);
      }
    };
    auto check_vector = [&](std::vector<double>& b, const std::vector<double>& gb) {
      for (std::size_t i = 0; i < b.size(); ++i) {
        const double orig = b[i];
        b[i] = orig + h;
        const double up = classification_loss(p, g, targets);
        b[i] = orig - h;
        const double dn = classification_loss(p, g, targets);
        b[i] = orig;
        CHECK(rel_err(gb[i], (up - dn) / (2.0 * h)) < 1e-4);
      }
    };
    check_matrix(p.w1, grads.w1);
    check_matrix(p.w2, grads.w2);
    check_matrix(p.w_out, grads.w_out);
    check_vector(p.b1, grads.b1);
    check_vector(p.b2, grads.b2);
    check_vector(p.b_out, grads.b_out);
  }
}

TEST_CASE("graph-task gradients match finite differences too") {
  const double h = 1e-4;
  Graph g = random_node_graph(6, 3, 11);
  g.node_labels.clear();
  g.graph_label = 1;
  GcnParams p = random_params({3, 4, 4, 3, Task::Graph}, 5);
  const GcnGradients grads = classification_gradients(p, g, {});
  for (std::size_t i = 0; i < p.w1.size(); ++i) {
    const double orig = p.w1.data()[i];
    p.w1.data()[i] = orig + h;
    const double up = classification_loss(p, g, {});
    p.w1.data()[i] = orig - h;
    const double dn = classification_loss(p, g, {});
    p.w1.data()[i] = orig;
    CHECK(rel_err(grads.w1.data()[i], (up - dn) / (2.0 * h)) < 1e-4);
  }
}

TEST_CASE("adjacency gradient matches finite differences through the normalization") {
  const double h = 1e-4;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Graph g = random_node_graph(6, 3, 200 + seed);
    const GcnParams p = random_params({3, 4, 4, 2, Task::Node}, 60 + seed);
    const auto targets = all_nodes(6);
    const Matrix grad = grad_wrt_adjacency(p, g, targets);
    CHECK(grad.is_symmetric(0.0));
    for (std::size_t i = 0; i < 6; ++i) CHECK(grad(i, i) == 0.0);

    Rng rng(seed, "pick-entries");
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t i = rng.below(6);
      std::size_t j = rng.below(6);
      if (i == j) j = (j + 1) % 6;
      auto fd_at = [&](std::size_t a, std::size_t b) {
        const double orig = g.adjacency(a, b);
        g.adjacency(a, b) = orig + h;
        const double up = classification_loss(p, g, targets);
        g.adjacency(a, b) = orig - h;
        const double dn = classification_loss(p, g, targets);
        g.adjacency(a, b) = orig;
        return (up - dn) / (2.0 * h);
      };
      const double fd_sym = 0.5 * (fd_at(i, j) + fd_at(j, i));
      CHECK(rel_err(grad(i, j), fd_sym) < 1e-4);
    }
  }
}

TEST_CASE("zero features give zero adjacency gradient") {
  // with zero biases the whole forward pass is constant in A
  Graph g = random_node_graph(5, 3, 77);
  g.features.fill(0.0);
  const GcnParams p = GcnParams::init({3, 4, 4, 2, Task::Node}, 8);
  const Matrix grad = grad_wrt_adjacency(p, g, all_nodes(5));
  CHECK(grad.max_abs() == 0.0);
}

TEST_CASE("permutation equivariance") {
  const Graph g = random_node_graph(7, 3, 500);
  const GcnParams p = random_params({3, 4, 4, 2, Task::Node}, 9);
  const GcnOutput out = gcn_forward(p, g);

  // reverse permutation
  const std::size_t n = 7;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = n - 1 - i;
  Graph pg;
  pg.adjacency = Matrix(n, n);
  pg.features = Matrix(n, 3);
  pg.node_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) pg.adjacency(perm[i], perm[j]) = g.adjacency(i, j);
    for (std::size_t f = 0; f < 3; ++f) pg.features(perm[i], f) = g.features(i, f);
    pg.node_labels[perm[i]] = g.node_labels[i];
  }
  const GcnOutput pout = gcn_forward(p, pg);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(std::fabs(pout.logits(perm[i], c) - out.logits(i, c)) < 1e-9);

  // graph task: pooled logits invariant
  Graph gg = g;
  gg.node_labels.clear();
  gg.graph_label = 0;
  Graph pgg = pg;
  pgg.node_labels.clear();
  pgg.graph_label = 0;
  GcnParams gp = random_params({3, 4, 4, 2, Task::Graph}, 9);
  const GcnOutput a = gcn_forward(gp, gg);
  const GcnOutput b = gcn_forward(gp, pgg);
  for (std::size_t c = 0; c < 2; ++c) CHECK(std::fabs(a.logits(0, c) - b.logits(0, c)) < 1e-9);
}

TEST_CASE("training separates two labeled cliques") {
  const Graph g = two_cliques(4);
  GcnConfig arch{8, 16, 16, 2, Task::Node};
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 200;
  cfg.seed = 4;
  const TrainResult r = train_classifier(g, all_nodes(8), arch, cfg);
  CHECK(predict_accuracy(r.params, g, all_nodes(8)) == 1.0);
  CHECK(r.loss_history.size() == 200);
  CHECK(r.loss_history.back() < r.loss_history.front());
}

TEST_CASE("zero learning rate leaves parameters at their initialization") {
  const Graph g = two_cliques(3);
  GcnConfig arch{6, 4, 4, 2, Task::Node};
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 10;
  cfg.seed = 21;
  const TrainResult r = train_classifier(g, all_nodes(6), arch, cfg);
  const GcnParams fresh = GcnParams::init(arch, cfg.seed);
  CHECK(r.params.w1 == fresh.w1);
  CHECK(r.params.w2 == fresh.w2);
  CHECK(r.params.w_out == fresh.w_out);
}

TEST_CASE("training is deterministic per seed") {
  const Graph g = two_cliques(3);
  GcnConfig arch{6, 4, 4, 2, Task::Node};
  TrainConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.epochs = 50;
  cfg.seed = 33;
  const TrainResult a = train_classifier(g, all_nodes(6), arch, cfg);
  const TrainResult b = train_classifier(g, all_nodes(6), arch, cfg);
  CHECK(a.params.w1 == b.params.w1);
  CHECK(a.params.w2 == b.params.w2);
  CHECK(a.params.w_out == b.params.w_out);
  CHECK(a.loss_history == b.loss_history);
}

TEST_CASE("accuracy: perfect logits and the tie rule") {
  Graph g = two_cliques(2);
  // all-equal logits predict class 0 everywhere
  GcnParams p = GcnParams::init({4, 4, 4, 2, Task::Node}, 0);
  p.w1.fill(0.0);
  p.w2.fill(0.0);
  p.w_out.fill(0.0);
  g.node_labels = {0, 0, 0, 0};
  CHECK(predict_accuracy(p, g, all_nodes(4)) == 1.0);
  g.node_labels = {1, 1, 1, 1};
  CHECK(predict_accuracy(p, g, all_nodes(4)) == 0.0);
}

TEST_CASE("untrained networks sit at chance level on random labels") {
  const int classes = 4;
  double acc_sum = 0.0;
  int trials = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Graph g = random_node_graph(10, 3, 900 + seed, classes);
    const GcnParams p = random_params({3, 4, 4, 4, Task::Node}, 300 + seed);
    acc_sum += predict_accuracy(p, g, all_nodes(10));
    ++trials;
  }
  const double mean = acc_sum / trials;
  CHECK(mean > 1.0 / classes - 0.1);
  CHECK(mean < 1.0 / classes + 0.1);
}

TEST_CASE("non-finite input is rejected") {
  Graph g = random_node_graph(4, 2, 1);
  g.features(0, 0) = std::nan("");
  const GcnParams p = GcnParams::init({2, 4, 4, 2, Task::Node}, 0);
  CHECK_THROWS(gcn_forward(p, g));
}
