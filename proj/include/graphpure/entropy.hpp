#pragma once

#include <vector>

#include "graphpure/diffusion.hpp"
#include "graphpure/matrix.hpp"

namespace graphpure {

enum class BandwidthMode { Fixed, Silverman };

struct EntropyConfig {
  double alpha = 2.0;
  double sigma = 2.0;
  BandwidthMode bandwidth_mode = BandwidthMode::Fixed;

  void validate() const;  // alpha > 0, alpha != 1, sigma > 0
};

// Trace-normalized gaussian Gram matrix over node representations.
// k_hat(i, j) = (1/n) K_ij / sqrt(K_ii K_jj), K_ij = exp(-|z_i - z_j|^2 / (2 sigma^2)).
struct GramMatrix {
  Matrix k_hat;
  double sigma_used = 0.0;

  std::size_t size() const { return k_hat.rows(); }
  void validate(double tol = 1e-9) const;
};

// One parameter-free message-passing round: Z = D^{-1/2} (A + I) D^{-1/2} X.
// Accepts continuous relaxations so guidance gradients exist.
Matrix propagate(const Matrix& adjacency_or_probs, const Matrix& features);

GramMatrix gram(const Matrix& z, const EntropyConfig& config);

// S_alpha = 1/(1-alpha) log sum_i lambda_i^alpha, eigenvalue route.
double renyi_entropy(const GramMatrix& k_hat, double alpha);
double renyi_entropy(const Matrix& k_hat, double alpha);

// alpha = 2 closed form: -log tr(K_hat^2) = -log sum_ij K_hat_ij^2.
double renyi_entropy_alpha2_trace(const Matrix& k_hat);

// S_alpha of the trace-normalized Hadamard product of the grams.
double joint_entropy(const std::vector<const GramMatrix*>& grams, double alpha);
double joint_entropy(const std::vector<GramMatrix>& grams, double alpha);

enum class TransferEntropyForm {
  Ratio,       // the literal ratio expression of the derivation
  Difference,  // chain-rule conditional entropies H(a|b) = H(a,b) - H(b)
};

// Conditional mutual information between the next reverse state and the
// attacked graph given the current state, all through shared features.
double transfer_entropy(const Matrix& g_prev_hat, const Matrix& g_t_hat, const Matrix& g_adv,
                        const Matrix& features, const EntropyConfig& config,
                        TransferEntropyForm form = TransferEntropyForm::Ratio);

enum class GuidanceSign { Ascend, Descend };
enum class GradientMode { AnalyticAlpha2, FiniteDifference };

struct GuidanceConfig {
  double lambda = 1.0;
  GuidanceSign sign = GuidanceSign::Ascend;
  GradientMode gradient_mode = GradientMode::AnalyticAlpha2;
  double fd_step = 1e-4;
  TransferEntropyForm form = TransferEntropyForm::Ratio;

  void validate() const;  // lambda >= 0, fd_step > 0
};

// d(transfer entropy)/d(P_prev), symmetrized free-matrix gradient with zero
// diagonal. Analytic mode requires alpha = 2 and the ratio form path it
// differentiates; finite differences work for any configuration.
Matrix guidance_gradient(const Matrix& p_prev, const Matrix& g_t_hat, const Matrix& g_adv,
                         const Matrix& features, const EntropyConfig& entropy_config,
                         const GuidanceConfig& guidance_config);

// P <- clamp[0,1](P + sign * lambda / (1 - alpha_bar(t)) * grad)
Matrix apply_guidance(const Matrix& p_prev, const Matrix& grad, const NoiseSchedule& schedule,
                      std::size_t t, const GuidanceConfig& config);

}  // namespace graphpure
