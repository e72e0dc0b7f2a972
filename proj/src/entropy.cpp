#include "graphpure/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphpure/gnn.hpp"

namespace graphpure {

namespace {

Matrix trace_normalized(const Matrix& m, const char* what) {
  const double tau = m.trace();
  if (!(tau > 0.0)) throw std::runtime_error(std::string(what) + ": non-positive trace");
  Matrix out = m;
  out *= 1.0 / tau;
  return out;
}

// gaussian kernel matrix K_ij = exp(-sqdist_ij / (2 sigma^2))
Matrix gaussian_kernel(const Matrix& z, double sigma) {
  const Matrix sqdist = pairwise_squared_distances(z);
  const std::size_t n = z.rows();
  const double inv = -1.0 / (2.0 * sigma * sigma);
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::exp(sqdist(i, j) * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

double silverman_sigma(const Matrix& z) {
  const Matrix sqdist = pairwise_squared_distances(z);
  const std::size_t n = z.rows();
  std::size_t m = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      mean += std::sqrt(sqdist(i, j));
      ++m;
    }
  if (m == 0) return 1e-6;
  mean /= static_cast<double>(m);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::sqrt(sqdist(i, j)) - mean;
      var += d * d;
    }
  var /= static_cast<double>(m);
  const double sigma =
      1.06 * std::sqrt(var) * std::pow(static_cast<double>(n), -0.2);
  return std::max(sigma, 1e-6);
}

double entropy_of_spectrum(const std::vector<double>& eig, double alpha, std::size_t n) {
  double sum = 0.0;
  for (double lam : eig) {
    if (lam < -1e-9)
      throw std::runtime_error("renyi_entropy: matrix is not positive semidefinite");
    if (lam < 0.0) lam = 0.0;
    sum += std::pow(lam, alpha);
  }
  if (!(sum > 0.0)) throw std::runtime_error("renyi_entropy: degenerate spectrum");
  double s = std::log(sum) / (1.0 - alpha);
  // numerical slack at the boundaries of [0, log n]
  const double hi = std::log(static_cast<double>(n));
  if (s < 0.0 && s > -1e-9) s = 0.0;
  if (s > hi && s < hi + 1e-9) s = hi;
  return s;
}

// S_2 of h / tr(h) without forming the normalization: 2 log tr(h) - log sum h^2
double s2_of_normalized(const Matrix& h, const char* what) {
  const double tau = h.trace();
  if (!(tau > 0.0)) throw std::runtime_error(std::string(what) + ": non-positive trace");
  const double f = h.sumsq();
  if (!(f > 0.0)) throw std::runtime_error(std::string(what) + ": zero frobenius norm");
  return 2.0 * std::log(tau) - std::log(f);
}

// d s2_of_normalized(h)/dh with h = k_p .* c, accumulated into dkp as
// scale * (2 I/tau - 2 h / F) .* c
void accumulate_s2_grad(const Matrix& kp, const Matrix& c, double scale, Matrix& dkp) {
  const Matrix h = kp.hadamard(c);
  const double tau = h.trace();
  const double f = h.sumsq();
  const std::size_t n = h.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double g = -2.0 * h(i, j) / f;
      if (i == j) g += 2.0 / tau;
      dkp(i, j) += scale * g * c(i, j);
    }
}

struct TeParts {
  GramMatrix kp, kt, ka;
};

TeParts te_grams(const Matrix& g_prev, const Matrix& g_t, const Matrix& g_adv,
                 const Matrix& features, const EntropyConfig& config) {
  if (!g_prev.same_shape(g_t) || !g_prev.same_shape(g_adv))
    throw std::invalid_argument("transfer_entropy: adjacency shape mismatch");
  TeParts parts;
  parts.kp = gram(propagate(g_prev, features), config);
  parts.kt = gram(propagate(g_t, features), config);
  parts.ka = gram(propagate(g_adv, features), config);
  return parts;
}

}  // namespace

void EntropyConfig::validate() const {
  if (!(alpha > 0.0) || alpha == 1.0)
    throw std::invalid_argument("entropy: alpha must be positive and != 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("entropy: sigma must be positive");
}

void GramMatrix::validate(double tol) const {
  const std::size_t n = k_hat.rows();
  if (k_hat.cols() != n) throw std::invalid_argument("gram: must be square");
  if (!k_hat.is_symmetric(tol)) throw std::invalid_argument("gram: must be symmetric");
  const double diag = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(k_hat(i, i) - diag) > tol)
      throw std::invalid_argument("gram: diagonal must equal 1/n");
  if (std::fabs(k_hat.trace() - 1.0) > tol)
    throw std::invalid_argument("gram: trace must equal 1");
}

Matrix propagate(const Matrix& adjacency_or_probs, const Matrix& features) {
  if (adjacency_or_probs.rows() != features.rows())
    throw std::invalid_argument("propagate: node count mismatch");
  return sym_normalized_adjacency(adjacency_or_probs) * features;
}

GramMatrix gram(const Matrix& z, const EntropyConfig& config) {
  config.validate();
  if (!z.all_finite()) throw std::invalid_argument("gram: non-finite representations");
  const std::size_t n = z.rows();
  if (n == 0) throw std::invalid_argument("gram: empty input");
  const double sigma =
      config.bandwidth_mode == BandwidthMode::Silverman ? silverman_sigma(z) : config.sigma;
  const Matrix k = gaussian_kernel(z, sigma);
  GramMatrix out;
  out.sigma_used = sigma;
  out.k_hat = Matrix(n, n);
  const double invn = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.k_hat(i, j) = invn * k(i, j) / std::sqrt(k(i, i) * k(j, j));
  return out;
}

double renyi_entropy(const Matrix& k_hat, double alpha) {
  if (alpha == 1.0) throw std::invalid_argument("renyi_entropy: alpha = 1 is excluded");
  if (!(alpha > 0.0)) throw std::invalid_argument("renyi_entropy: alpha must be positive");
  if (std::fabs(k_hat.trace() - 1.0) > 1e-6)
    throw std::invalid_argument("renyi_entropy: trace must equal 1");
  const auto eig = symmetric_eigenvalues(k_hat);
  return entropy_of_spectrum(eig, alpha, k_hat.rows());
}

double renyi_entropy(const GramMatrix& k_hat, double alpha) {
  return renyi_entropy(k_hat.k_hat, alpha);
}

double renyi_entropy_alpha2_trace(const Matrix& k_hat) {
  const double f = k_hat.sumsq();
  if (!(f > 0.0)) throw std::runtime_error("renyi_entropy_alpha2_trace: zero matrix");
  double s = -std::log(f);
  if (s < 0.0 && s > -1e-9) s = 0.0;
  return s;
}

double joint_entropy(const std::vector<const GramMatrix*>& grams, double alpha) {
  if (grams.empty()) throw std::invalid_argument("joint_entropy: empty gram list");
  const std::size_t n = grams.front()->size();
  Matrix prod = grams.front()->k_hat;
  for (std::size_t g = 1; g < grams.size(); ++g) {
    if (grams[g]->size() != n) throw std::invalid_argument("joint_entropy: size mismatch");
    prod = prod.hadamard(grams[g]->k_hat);
  }
  return renyi_entropy(trace_normalized(prod, "joint_entropy"), alpha);
}

double joint_entropy(const std::vector<GramMatrix>& grams, double alpha) {
  std::vector<const GramMatrix*> ptrs;
  ptrs.reserve(grams.size());
  for (const auto& g : grams) ptrs.push_back(&g);
  return joint_entropy(ptrs, alpha);
}

double transfer_entropy(const Matrix& g_prev_hat, const Matrix& g_t_hat, const Matrix& g_adv,
                        const Matrix& features, const EntropyConfig& config,
                        TransferEntropyForm form) {
  const TeParts p = te_grams(g_prev_hat, g_t_hat, g_adv, features, config);
  const double alpha = config.alpha;

  const Matrix pt = p.kp.k_hat.hadamard(p.kt.k_hat);
  const Matrix ta = p.kt.k_hat.hadamard(p.ka.k_hat);
  const Matrix pta = pt.hadamard(p.ka.k_hat);

  const double s_pt = renyi_entropy(trace_normalized(pt, "transfer_entropy"), alpha);
  const double s_t = renyi_entropy(p.kt.k_hat, alpha);
  const double s_pta = renyi_entropy(trace_normalized(pta, "transfer_entropy"), alpha);
  const double s_ta = renyi_entropy(trace_normalized(ta, "transfer_entropy"), alpha);

  if (form == TransferEntropyForm::Ratio) {
    if (std::fabs(s_t) < 1e-12)
      throw std::runtime_error(
          "transfer_entropy: conditioning entropy S(K_t) is zero (rank-1 gram)");
    if (std::fabs(s_ta) < 1e-12)
      throw std::runtime_error(
          "transfer_entropy: conditioning entropy S(K_t . K_adv) is zero (rank-1 gram)");
    return s_pt / s_t - s_pta / s_ta;
  }
  return (s_pt - s_t) - (s_pta - s_ta);
}

void GuidanceConfig::validate() const {
  // lambda = 0 is allowed and reduces the update to a no-op
  if (!(lambda >= 0.0)) throw std::invalid_argument("guidance: lambda must be non-negative");
  if (!(fd_step > 0.0)) throw std::invalid_argument("guidance: fd_step must be positive");
}

Matrix guidance_gradient(const Matrix& p_prev, const Matrix& g_t_hat, const Matrix& g_adv,
                         const Matrix& features, const EntropyConfig& entropy_config,
                         const GuidanceConfig& guidance_config) {
  entropy_config.validate();
  guidance_config.validate();
  const std::size_t n = p_prev.rows();

  if (guidance_config.gradient_mode == GradientMode::FiniteDifference) {
    const double h = guidance_config.fd_step;
    Matrix grad(n, n);
    Matrix p = p_prev;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        // symmetric perturbation gives d/dij + d/dji in one central difference
        p(i, j) = p_prev(i, j) + h;
        p(j, i) = p_prev(j, i) + h;
        const double up =
            transfer_entropy(p, g_t_hat, g_adv, features, entropy_config, guidance_config.form);
        p(i, j) = p_prev(i, j) - h;
        p(j, i) = p_prev(j, i) - h;
        const double dn =
            transfer_entropy(p, g_t_hat, g_adv, features, entropy_config, guidance_config.form);
        p(i, j) = p_prev(i, j);
        p(j, i) = p_prev(j, i);
        const double g = (up - dn) / (2.0 * h) * 0.5;
        grad(i, j) = g;
        grad(j, i) = g;
      }
    }
    return grad;
  }

  if (entropy_config.alpha != 2.0)
    throw std::invalid_argument("guidance: analytic gradient requires alpha = 2");
  if (guidance_config.form != TransferEntropyForm::Ratio)
    throw std::invalid_argument("guidance: analytic gradient differentiates the ratio form");

  const TeParts parts = te_grams(p_prev, g_t_hat, g_adv, features, entropy_config);
  const Matrix& kp = parts.kp.k_hat;
  const Matrix& kt = parts.kt.k_hat;
  const Matrix& ka = parts.ka.k_hat;
  const Matrix ta = kt.hadamard(ka);

  const double den1 = renyi_entropy_alpha2_trace(kt);
  const double den2 = s2_of_normalized(ta, "guidance");
  if (std::fabs(den1) < 1e-12 || std::fabs(den2) < 1e-12)
    throw std::runtime_error("guidance: zero conditioning entropy");

  // dI/dK_hat_p for I = S2n(kp.*kt)/den1 - S2n(kp.*kt.*ka)/den2
  Matrix dkp(n, n);
  accumulate_s2_grad(kp, kt, 1.0 / den1, dkp);
  accumulate_s2_grad(kp, ta, -1.0 / den2, dkp);

  // through the gram: K_hat = K / n, K_ij = exp(-q_ij / (2 sigma^2));
  // silverman bandwidth, when active, is held at its current value here
  const double sigma = parts.kp.sigma_used;
  const double kscale = -1.0 / (2.0 * sigma * sigma);
  const double invn = 1.0 / static_cast<double>(n);
  const Matrix zp = propagate(p_prev, features);
  Matrix dz(zp.rows(), zp.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double kij = kp(i, j) * static_cast<double>(n);  // unnormalized kernel value
      const double gq = (dkp(i, j) + dkp(j, i)) * invn * kij * kscale;
      // ordered-pair contributions from (i,j) and (j,i) combined: factor 2
      for (std::size_t f = 0; f < zp.cols(); ++f) {
        const double diff = 2.0 * gq * (zp(i, f) - zp(j, f));
        dz(i, f) += diff;
        dz(j, f) -= diff;
      }
    }
  }

  const Matrix d_ahat = dz * features.transpose();
  Matrix grad = sym_norm_adjoint(p_prev, d_ahat).symmetrized();
  grad.zero_diagonal();
  return grad;
}

Matrix apply_guidance(const Matrix& p_prev, const Matrix& grad, const NoiseSchedule& schedule,
                      std::size_t t, const GuidanceConfig& config) {
  config.validate();
  if (t < 1 || t > schedule.horizon) throw std::invalid_argument("apply_guidance: t out of range");
  const double one_minus = 1.0 - schedule.alpha_bar[t];
  if (one_minus < 1e-12)
    throw std::invalid_argument("apply_guidance: 1 - alpha_bar(t) below 1e-12");
  if (!p_prev.same_shape(grad)) throw std::invalid_argument("apply_guidance: shape mismatch");

  const double sign = config.sign == GuidanceSign::Ascend ? 1.0 : -1.0;
  const double scale = sign * config.lambda / one_minus;
  Matrix out = p_prev;
  out.add_scaled(scale, grad);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::clamp(out.data()[i], 0.0, 1.0);
  out.zero_diagonal();
  return out;
}

}  // namespace graphpure
