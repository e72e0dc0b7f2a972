#include "graphpure/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphpure {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

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

struct MpCache {
  Matrix ahat;
  std::vector<double> temb;
  Matrix h0, u1, p1, h1, u2, p2, h2;
};

Matrix sym_norm_for_diffusion(const Matrix& a) {
  // same normalization the classifier uses; kept local to avoid a gnn dependency
  const std::size_t n = a.rows();
  std::vector<double> dinv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    dinv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double s = a(i, j) + (i == j ? 1.0 : 0.0);
      if (s != 0.0) out(i, j) = s * dinv_sqrt[i] * dinv_sqrt[j];
    }
  return out;
}

MpCache mp_forward(const DenoiserParams& params, const Matrix& noisy_adjacency,
                   const Matrix& features, std::size_t t) {
  params.check_shapes();
  if (features.cols() != params.config.in_dim)
    throw std::invalid_argument("denoiser: feature width does not match in_dim");
  MpCache c;
  c.ahat = sym_norm_for_diffusion(noisy_adjacency);
  c.temb = sinusoidal_time_embedding(t, params.config.width);
  c.h0 = features * params.w_in;
  add_row_vector(c.h0, params.b_in);
  add_row_vector(c.h0, c.temb);
  // residual rounds keep node identity visible to the pair scorer even when
  // the noisy adjacency has mixed the neighborhoods beyond recognition
  c.u1 = c.h0 * params.w_m1;
  c.p1 = c.ahat * c.u1;
  add_row_vector(c.p1, params.b_m1);
  c.h1 = relu(c.p1);
  c.h1 += c.h0;
  c.u2 = c.h1 * params.w_m2;
  c.p2 = c.ahat * c.u2;
  add_row_vector(c.p2, params.b_m2);
  c.h2 = relu(c.p2);
  c.h2 += c.h1;
  if (!c.h2.all_finite()) throw std::runtime_error("denoiser: non-finite activations");
  return c;
}

struct DenoiserGrads {
  Matrix w_in, w_m1, w_m2, w_s1, w_s2;
  std::vector<double> b_in, b_m1, b_m2, b_s1, b_s2;

  static DenoiserGrads zeros_like(const DenoiserParams& p) {
    DenoiserGrads g;
    g.w_in = Matrix(p.w_in.rows(), p.w_in.cols());
    g.w_m1 = Matrix(p.w_m1.rows(), p.w_m1.cols());
    g.w_m2 = Matrix(p.w_m2.rows(), p.w_m2.cols());
    g.w_s1 = Matrix(p.w_s1.rows(), p.w_s1.cols());
    g.w_s2 = Matrix(p.w_s2.rows(), p.w_s2.cols());
    g.b_in.assign(p.b_in.size(), 0.0);
    g.b_m1.assign(p.b_m1.size(), 0.0);
    g.b_m2.assign(p.b_m2.size(), 0.0);
    g.b_s1.assign(p.b_s1.size(), 0.0);
    g.b_s2.assign(p.b_s2.size(), 0.0);
    return g;
  }
};

constexpr std::size_t kPairChunk = 1024;

// Builds the scorer input rows [h_i .* h_j, h_i + h_j, temb] for a chunk of
// upper-triangle pairs and runs the scorer forward.
struct ScoredChunk {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  Matrix f, pre1, g1, logits;
};

void score_chunk(const DenoiserParams& params, const MpCache& c, ScoredChunk& chunk) {
  const std::size_t d = params.config.width;
  const std::size_t b = chunk.pairs.size();
  chunk.f = Matrix(b, 3 * d);
  for (std::size_t r = 0; r < b; ++r) {
    const auto [i, j] = chunk.pairs[r];
    const double* hi = c.h2.row(i);
    const double* hj = c.h2.row(j);
    double* row = chunk.f.row(r);
    for (std::size_t k = 0; k < d; ++k) {
      row[k] = hi[k] * hj[k];
      row[d + k] = hi[k] + hj[k];
      row[2 * d + k] = c.temb[k];
    }
  }
  chunk.pre1 = chunk.f * params.w_s1;
  add_row_vector(chunk.pre1, params.b_s1);
  chunk.g1 = Matrix(chunk.pre1.rows(), chunk.pre1.cols());
  for (std::size_t i = 0; i < chunk.pre1.size(); ++i)
    chunk.g1.data()[i] = std::tanh(chunk.pre1.data()[i]);
  chunk.logits = chunk.g1 * params.w_s2;
  add_row_vector(chunk.logits, params.b_s2);
}

double edge_prob_from_logits(const Matrix& logits, std::size_t row) {
  // p(state 1) via stable two-class softmax
  const double z = logits(row, 1) - logits(row, 0);
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<std::pair<std::size_t, std::size_t>> upper_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return pairs;
}

// Mean per-edge cross-entropy against the clean adjacency; accumulates scorer
// grads and dL/dh2 when grads is non-null.
double scorer_loss(const DenoiserParams& params, const MpCache& c, const Matrix& clean_adjacency,
                   DenoiserGrads* grads, Matrix* dh2) {
  const std::size_t n = c.h2.rows();
  const std::size_t d = params.config.width;
  auto pairs = upper_pairs(n);
  if (pairs.empty()) throw std::invalid_argument("denoiser loss: graph has fewer than 2 nodes");
  const double invm = 1.0 / static_cast<double>(pairs.size());

  double loss = 0.0;
  ScoredChunk chunk;
  for (std::size_t start = 0; start < pairs.size(); start += kPairChunk) {
    const std::size_t stop = std::min(start + kPairChunk, pairs.size());
    chunk.pairs.assign(pairs.begin() + start, pairs.begin() + stop);
    score_chunk(params, c, chunk);
    const std::size_t b = chunk.pairs.size();

    Matrix dlogits(b, 2);
    for (std::size_t r = 0; r < b; ++r) {
      const auto [i, j] = chunk.pairs[r];
      const double p1 = edge_prob_from_logits(chunk.logits, r);
      const int label = clean_adjacency(i, j) != 0.0 ? 1 : 0;
      const double p_true = label == 1 ? p1 : 1.0 - p1;
      loss += -std::log(std::max(p_true, 1e-300)) * invm;
      if (grads) {
        dlogits(r, 0) = ((1.0 - p1) - (label == 0 ? 1.0 : 0.0)) * invm;
        dlogits(r, 1) = (p1 - (label == 1 ? 1.0 : 0.0)) * invm;
      }
    }
    if (!grads) continue;

    grads->w_s2 += chunk.g1.transpose() * dlogits;
    const auto dbs2 = colsum(dlogits);
    for (std::size_t k = 0; k < 2; ++k) grads->b_s2[k] += dbs2[k];

    const Matrix dg1 = dlogits * params.w_s2.transpose();
    Matrix dpre1(dg1.rows(), dg1.cols());
    for (std::size_t i = 0; i < dg1.size(); ++i) {
      const double g1 = chunk.g1.data()[i];
      dpre1.data()[i] = dg1.data()[i] * (1.0 - g1 * g1);
    }
    grads->w_s1 += chunk.f.transpose() * dpre1;
    const auto dbs1 = colsum(dpre1);
    for (std::size_t k = 0; k < d; ++k) grads->b_s1[k] += dbs1[k];

    const Matrix df = dpre1 * params.w_s1.transpose();
    for (std::size_t r = 0; r < b; ++r) {
      const auto [i, j] = chunk.pairs[r];
      const double* hi = c.h2.row(i);
      const double* hj = c.h2.row(j);
      const double* dfr = df.row(r);
      double* di = dh2->row(i);
      double* dj = dh2->row(j);
      for (std::size_t k = 0; k < d; ++k) {
        di[k] += dfr[k] * hj[k] + dfr[d + k];
        dj[k] += dfr[k] * hi[k] + dfr[d + k];
      }
    }
  }
  return loss;
}

void mp_backward(const DenoiserParams& params, const Matrix& features, const MpCache& c,
                 const Matrix& dh2, DenoiserGrads& grads) {
  const Matrix ahat_t = c.ahat.transpose();

  const Matrix dp2 = relu_grad(c.p2, dh2);
  grads.b_m2 = colsum(dp2);
  const Matrix du2 = ahat_t * dp2;
  grads.w_m2 = c.h1.transpose() * du2;

  Matrix dh1 = du2 * params.w_m2.transpose();
  dh1 += dh2;  // residual
  const Matrix dp1 = relu_grad(c.p1, dh1);
  grads.b_m1 = colsum(dp1);
  const Matrix du1 = ahat_t * dp1;
  grads.w_m1 = c.h0.transpose() * du1;

  Matrix dh0 = du1 * params.w_m1.transpose();
  dh0 += dh1;  // residual
  grads.w_in = features.transpose() * dh0;
  grads.b_in = colsum(dh0);
}

class DenoiserAdam {
 public:
  explicit DenoiserAdam(const DenoiserParams& p) : m_(DenoiserGrads::zeros_like(p)), v_(DenoiserGrads::zeros_like(p)) {}

  void step(DenoiserParams& p, const DenoiserGrads& g, const DiffusionTrainConfig& cfg) {
    ++t_;
    upd(p.w_in.data(), g.w_in.data(), m_.w_in.data(), v_.w_in.data(), p.w_in.size(), cfg);
    upd(p.w_m1.data(), g.w_m1.data(), m_.w_m1.data(), v_.w_m1.data(), p.w_m1.size(), cfg);
    upd(p.w_m2.data(), g.w_m2.data(), m_.w_m2.data(), v_.w_m2.data(), p.w_m2.size(), cfg);
    upd(p.w_s1.data(), g.w_s1.data(), m_.w_s1.data(), v_.w_s1.data(), p.w_s1.size(), cfg);
    upd(p.w_s2.data(), g.w_s2.data(), m_.w_s2.data(), v_.w_s2.data(), p.w_s2.size(), cfg);
    upd(p.b_in.data(), g.b_in.data(), m_.b_in.data(), v_.b_in.data(), p.b_in.size(), cfg);
    upd(p.b_m1.data(), g.b_m1.data(), m_.b_m1.data(), v_.b_m1.data(), p.b_m1.size(), cfg);
    upd(p.b_m2.data(), g.b_m2.data(), m_.b_m2.data(), v_.b_m2.data(), p.b_m2.size(), cfg);
    upd(p.b_s1.data(), g.b_s1.data(), m_.b_s1.data(), v_.b_s1.data(), p.b_s1.size(), cfg);
    upd(p.b_s2.data(), g.b_s2.data(), m_.b_s2.data(), v_.b_s2.data(), p.b_s2.size(), cfg);
  }

 private:
  void upd(double* w, const double* g, double* m, double* v, std::size_t n,
           const DiffusionTrainConfig& cfg) {
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
      w[i] -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
    }
  }

  long t_ = 0;
  DenoiserGrads m_, v_;
};

}  // namespace

double cosine_alpha_bar(double t_real, std::size_t horizon, double offset) {
  const double x = (t_real / static_cast<double>(horizon) + offset) / (1.0 + offset) * (kPi / 2.0);
  const double c = std::cos(x);
  return c * c;
}

NoiseSchedule build_schedule(std::size_t horizon, double offset, double edge_density) {
  if (horizon < 1) throw std::invalid_argument("schedule: horizon must be >= 1");
  if (!(offset > 0.0)) throw std::invalid_argument("schedule: offset must be positive");
  if (!(edge_density > 0.0 && edge_density < 1.0))
    throw std::invalid_argument("schedule: edge density must be in (0, 1)");
  NoiseSchedule s;
  s.horizon = horizon;
  s.offset = offset;
  s.edge_density = edge_density;
  s.alpha_bar.resize(horizon + 1);
  for (std::size_t t = 0; t <= horizon; ++t)
    s.alpha_bar[t] = cosine_alpha_bar(static_cast<double>(t), horizon, offset);
  s.alpha_bar[horizon] = 0.0;  // cos^2(pi/2), forced exact
  s.m_a = EdgeStateVector{{1.0 - edge_density, edge_density}};
  return s;
}

void NoiseSchedule::validate() const {
  if (horizon < 1 || alpha_bar.size() != horizon + 1)
    throw std::invalid_argument("schedule: bad horizon/table");
  for (std::size_t t = 0; t <= horizon; ++t) {
    double expect = cosine_alpha_bar(static_cast<double>(t), horizon, offset);
    if (t == horizon) expect = 0.0;
    if (std::fabs(alpha_bar[t] - expect) > 1e-12)
      throw std::invalid_argument("schedule: alpha_bar table does not match (T, s)");
    if (t > 0 && !(alpha_bar[t] < alpha_bar[t - 1]))
      throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
  }
  if (!(alpha_bar[0] > 0.99))
    throw std::invalid_argument("schedule: offset too large, alpha_bar(0) must exceed 0.99");
  m_a.validate();
}

void TransitionMatrix::validate(double tol) const {
  for (const auto& row : q) {
    double s = 0.0;
    for (double v : row) {
      if (v < 0.0) throw std::invalid_argument("transition matrix: negative entry");
      s += v;
    }
    if (std::fabs(s - 1.0) > tol)
      throw std::invalid_argument("transition matrix: row does not sum to 1");
  }
}

TransitionMatrix qbar(const NoiseSchedule& schedule, std::size_t t) {
  if (t > schedule.horizon) throw std::invalid_argument("qbar: t out of range");
  const double a = schedule.alpha_bar[t];
  const double m0 = schedule.m_a[0], m1 = schedule.m_a[1];
  TransitionMatrix q;
  q.q[0][0] = a + (1.0 - a) * m0;
  q.q[0][1] = (1.0 - a) * m1;
  q.q[1][0] = (1.0 - a) * m0;
  q.q[1][1] = a + (1.0 - a) * m1;
  return q;
}

TransitionMatrix q_single(const NoiseSchedule& schedule, std::size_t t) {
  if (t < 1 || t > schedule.horizon) throw std::invalid_argument("q_single: t out of range");
  const double a_prev = schedule.alpha_bar[t - 1];
  if (a_prev == 0.0) throw std::invalid_argument("q_single: alpha_bar(t-1) = 0 is degenerate");
  const TransitionMatrix prev = qbar(schedule, t - 1);
  const TransitionMatrix cur = qbar(schedule, t);
  const double det = prev.q[0][0] * prev.q[1][1] - prev.q[0][1] * prev.q[1][0];
  if (std::fabs(det) < 1e-300) throw std::invalid_argument("q_single: Q_bar(t-1) is singular");
  // inv(prev) * cur with the analytic 2x2 inverse
  const double inv00 = prev.q[1][1] / det, inv01 = -prev.q[0][1] / det;
  const double inv10 = -prev.q[1][0] / det, inv11 = prev.q[0][0] / det;
  TransitionMatrix out;
  out.q[0][0] = inv00 * cur.q[0][0] + inv01 * cur.q[1][0];
  out.q[0][1] = inv00 * cur.q[0][1] + inv01 * cur.q[1][1];
  out.q[1][0] = inv10 * cur.q[0][0] + inv11 * cur.q[1][0];
  out.q[1][1] = inv10 * cur.q[0][1] + inv11 * cur.q[1][1];
  // rows sum to 1 analytically; clip the tiny negatives rounding can leave
  for (auto& row : out.q)
    for (double& v : row) {
      if (v < 0.0 && v > -1e-12) v = 0.0;
    }
  return out;
}

Matrix forward_sample(const Matrix& adjacency, const NoiseSchedule& schedule, std::size_t t,
                      std::uint64_t seed) {
  if (t > schedule.horizon) throw std::invalid_argument("forward_sample: t out of range");
  if (t == 0) return adjacency;  // empty product of transitions
  const TransitionMatrix q = qbar(schedule, t);
  const std::size_t n = adjacency.rows();
  Matrix out(n, n);
  Rng rng(seed, "forward-sample");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int state = adjacency(i, j) != 0.0 ? 1 : 0;
      const double p1 = q.q[state][1];
      const double v = rng.bernoulli(p1) ? 1.0 : 0.0;
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

EdgeStateVector posterior(int a_t_state, int a_0_state, const NoiseSchedule& schedule,
                          std::size_t t) {
  if (t < 1 || t > schedule.horizon) throw std::invalid_argument("posterior: t out of range");
  if ((a_t_state != 0 && a_t_state != 1) || (a_0_state != 0 && a_0_state != 1))
    throw std::invalid_argument("posterior: states must be 0 or 1");
  const TransitionMatrix qt = q_single(schedule, t);
  const TransitionMatrix qprev = qbar(schedule, t - 1);
  const double w0 = qt.q[0][a_t_state] * qprev.q[a_0_state][0];
  const double w1 = qt.q[1][a_t_state] * qprev.q[a_0_state][1];
  const double z = w0 + w1;
  if (!(z > 0.0))
    throw std::runtime_error("posterior: zero probability mass for (a_t, a_0, t)");
  return EdgeStateVector{{w0 / z, w1 / z}};
}

std::vector<double> sinusoidal_time_embedding(std::size_t t, std::size_t dim) {
  std::vector<double> emb(dim, 0.0);
  const double td = static_cast<double>(t);
  for (std::size_t i = 0; 2 * i < dim; ++i) {
    const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(dim));
    emb[2 * i] = std::sin(td * freq);
    if (2 * i + 1 < dim) emb[2 * i + 1] = std::cos(td * freq);
  }
  return emb;
}

void DenoiserParams::check_shapes() const {
  const std::size_t d = config.width;
  const bool ok = w_in.rows() == config.in_dim && w_in.cols() == d && w_m1.rows() == d &&
                  w_m1.cols() == d && w_m2.rows() == d && w_m2.cols() == d &&
                  w_s1.rows() == 3 * d && w_s1.cols() == d && w_s2.rows() == d &&
                  w_s2.cols() == 2 && b_in.size() == d && b_m1.size() == d && b_m2.size() == d &&
                  b_s1.size() == d && b_s2.size() == 2;
  if (!ok) throw std::invalid_argument("denoiser params: inconsistent shapes");
}

DenoiserParams DenoiserParams::init(const DenoiserConfig& config, std::uint64_t seed) {
  if (config.in_dim == 0 || config.width == 0)
    throw std::invalid_argument("denoiser: in_dim and width must be positive");
  Rng rng(seed, "denoiser-init");
  DenoiserParams p;
  p.config = config;
  const std::size_t d = config.width;
  p.w_in = glorot(config.in_dim, d, rng);
  p.w_m1 = glorot(d, d, rng);
  p.w_m2 = glorot(d, d, rng);
  // the pair features [h .* h, h + h, temb] run large next to unit-variance
  // inputs; a shrunken first layer keeps the tanh units off their rails
  p.w_s1 = glorot(3 * d, d, rng);
  p.w_s1 *= 0.25;
  p.w_s2 = Matrix(d, 2);  // zero output head: untrained predictions are exactly 0.5
  p.b_in.assign(d, 0.0);
  p.b_m1.assign(d, 0.0);
  p.b_m2.assign(d, 0.0);
  p.b_s1.assign(d, 0.0);
  p.b_s2.assign(2, 0.0);
  return p;
}

Matrix denoise_predict(const DenoiserParams& params, const Matrix& noisy_adjacency,
                       const Matrix& features, std::size_t t) {
  if (t < 1) throw std::invalid_argument("denoise_predict: t must be >= 1");
  const MpCache c = mp_forward(params, noisy_adjacency, features, t);
  const std::size_t n = noisy_adjacency.rows();
  Matrix probs(n, n);
  auto pairs = upper_pairs(n);
  ScoredChunk chunk;
  for (std::size_t start = 0; start < pairs.size(); start += kPairChunk) {
    const std::size_t stop = std::min(start + kPairChunk, pairs.size());
    chunk.pairs.assign(pairs.begin() + start, pairs.begin() + stop);
    score_chunk(params, c, chunk);
    for (std::size_t r = 0; r < chunk.pairs.size(); ++r) {
      const auto [i, j] = chunk.pairs[r];
      const double p1 = edge_prob_from_logits(chunk.logits, r);
      probs(i, j) = p1;
      probs(j, i) = p1;
    }
  }
  if (!probs.all_finite()) throw std::runtime_error("denoise_predict: non-finite output");
  return probs;
}

void DiffusionTrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("diffusion train: bad learning rate");
  if (steps == 0) throw std::invalid_argument("diffusion train: steps must be positive");
}

DiffusionTrainResult train_diffusion(const std::vector<Graph>& clean_graphs,
                                     const NoiseSchedule& schedule,
                                     const DiffusionTrainConfig& config) {
  config.validate();
  if (clean_graphs.empty()) throw std::invalid_argument("diffusion train: no clean graphs");
  const std::size_t in_dim = clean_graphs.front().num_feature_dims();
  for (const Graph& g : clean_graphs)
    if (g.num_feature_dims() != in_dim)
      throw std::invalid_argument("diffusion train: inconsistent feature widths");

  DenoiserParams params = DenoiserParams::init({in_dim, 32}, config.seed);
  DenoiserAdam adam(params);
  Rng rng(config.seed, "diffusion-train");
  std::vector<double> history;
  history.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const Graph& g = clean_graphs[rng.below(clean_graphs.size())];
    const std::size_t t = 1 + rng.below(schedule.horizon);
    const Matrix noisy = forward_sample(g.adjacency, schedule, t, rng.next());

    const MpCache c = mp_forward(params, noisy, g.features, t);
    DenoiserGrads grads = DenoiserGrads::zeros_like(params);
    Matrix dh2(c.h2.rows(), c.h2.cols());
    const double loss = scorer_loss(params, c, g.adjacency, &grads, &dh2);
    if (!std::isfinite(loss))
      throw std::runtime_error("diffusion training diverged at step " + std::to_string(step));
    mp_backward(params, g.features, c, dh2, grads);
    adam.step(params, grads, config);
    history.push_back(loss);
  }
  return {std::move(params), std::move(history)};
}

double denoise_nll(const DenoiserParams& params, const Graph& graph,
                   const NoiseSchedule& schedule, std::size_t t, std::uint64_t seed) {
  const Matrix noisy = forward_sample(graph.adjacency, schedule, t, seed);
  const MpCache c = mp_forward(params, noisy, graph.features, t);
  return scorer_loss(params, c, graph.adjacency, nullptr, nullptr);
}

double denoiser_loss(const DenoiserParams& params, const Matrix& noisy_adjacency,
                     const Matrix& features, const Matrix& clean_adjacency, std::size_t t) {
  const MpCache c = mp_forward(params, noisy_adjacency, features, t);
  return scorer_loss(params, c, clean_adjacency, nullptr, nullptr);
}

std::pair<double, DenoiserGradients> denoiser_loss_gradients(const DenoiserParams& params,
                                                             const Matrix& noisy_adjacency,
                                                             const Matrix& features,
                                                             const Matrix& clean_adjacency,
                                                             std::size_t t) {
  const MpCache c = mp_forward(params, noisy_adjacency, features, t);
  DenoiserGrads grads = DenoiserGrads::zeros_like(params);
  Matrix dh2(c.h2.rows(), c.h2.cols());
  const double loss = scorer_loss(params, c, clean_adjacency, &grads, &dh2);
  mp_backward(params, features, c, dh2, grads);
  DenoiserGradients out;
  out.w_in = std::move(grads.w_in);
  out.w_m1 = std::move(grads.w_m1);
  out.w_m2 = std::move(grads.w_m2);
  out.w_s1 = std::move(grads.w_s1);
  out.w_s2 = std::move(grads.w_s2);
  out.b_in = std::move(grads.b_in);
  out.b_m1 = std::move(grads.b_m1);
  out.b_m2 = std::move(grads.b_m2);
  out.b_s1 = std::move(grads.b_s1);
  out.b_s2 = std::move(grads.b_s2);
  return {loss, std::move(out)};
}

Matrix reverse_probs(const DenoiserParams& params, const Matrix& noisy_adjacency,
                     const Matrix& features, const NoiseSchedule& schedule, std::size_t t) {
  if (t < 1 || t > schedule.horizon) throw std::invalid_argument("reverse: t out of range");
  const Matrix pred = denoise_predict(params, noisy_adjacency, features, t);
  // posterior over the previous state for every (a_t, a_0) combination
  EdgeStateVector post[2][2] = {
      {posterior(0, 0, schedule, t), posterior(0, 1, schedule, t)},
      {posterior(1, 0, schedule, t), posterior(1, 1, schedule, t)},
  };
  const std::size_t n = noisy_adjacency.rows();
  Matrix probs(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int at = noisy_adjacency(i, j) != 0.0 ? 1 : 0;
      const double p1_clean = pred(i, j);
      const double p = (1.0 - p1_clean) * post[at][0][1] + p1_clean * post[at][1][1];
      probs(i, j) = p;
      probs(j, i) = p;
    }
  }
  return probs;
}

Matrix sample_edge_matrix(const Matrix& probs, Rng& rng) {
  const std::size_t n = probs.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rng.bernoulli(probs(i, j)) ? 1.0 : 0.0;
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

ReverseStepResult reverse_step(const DenoiserParams& params, const Matrix& noisy_adjacency,
                               const Matrix& features, const NoiseSchedule& schedule,
                               std::size_t t, std::uint64_t seed) {
  Matrix probs = reverse_probs(params, noisy_adjacency, features, schedule, t);
  Rng rng(seed, "reverse-step");
  Matrix sample = sample_edge_matrix(probs, rng);
  return {std::move(sample), std::move(probs)};
}

}  // namespace graphpure
