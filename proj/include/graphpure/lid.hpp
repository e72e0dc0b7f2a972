#pragma once

#include <cstddef>
#include <vector>

#include "graphpure/diffusion.hpp"
#include "graphpure/matrix.hpp"

namespace graphpure {

struct LidConfig {
  std::size_t k = 20;          // neighbor count
  double epsilon_dist = 1e-12; // floor applied to distances before logs
  double gamma_cap = 1e6;      // value assigned when the estimator degenerates

  void validate(std::size_t num_points) const;  // needs 2 <= k < n
  // k = 20 for n >= 40, else max(2, n/4)
  static std::size_t default_k(std::size_t num_points);
};

struct LidDiagnostics {
  double gamma_min = 0.0, gamma_mean = 0.0, gamma_max = 0.0;
  std::size_t floored_distances = 0;  // neighbor distances raised to the floor
  std::size_t capped_nodes = 0;       // nodes mapped to gamma_cap
  std::size_t clamped_times = 0;      // t_hat values clamped into [0, t_p]
  std::vector<std::size_t> t_hat_histogram;  // count per integer step 0..t_p
};

// Maximum-likelihood LID per node from euclidean distances between hidden
// embeddings: gamma_i = -((1/k) sum_j log(r_j / r_k))^{-1}, neighbors
// excluding the node itself, ties broken toward the smaller node index.
std::vector<double> estimate_lid(const Matrix& embeddings, const LidConfig& config,
                                 LidDiagnostics* diag = nullptr);

struct AdversarialDegreeMap {
  std::vector<double> gamma;       // raw LID values
  std::vector<double> gamma_norm;  // min-max normalized; constant input maps to 0.5
  Matrix lambda_matrix;            // outer product, zero diagonal
};

AdversarialDegreeMap adversarial_degree(const std::vector<double>& gamma);

// Unclamped, unrounded purification time of the signal-to-noise remapping;
// requires alpha_bar(t_p) > 0.
double purification_time_real(double lambda, const NoiseSchedule& schedule, std::size_t t_p);

// Clamped to [0, t_p], rounded half-up.
std::size_t purification_time(double lambda, const NoiseSchedule& schedule, std::size_t t_p);

struct PurificationTimetable {
  Matrix t_hat;      // integer values stored as doubles, symmetric
  std::size_t t_p = 0;
};

PurificationTimetable purification_timetable(const Matrix& lambda_matrix,
                                             const NoiseSchedule& schedule, std::size_t t_p,
                                             LidDiagnostics* diag = nullptr);

// mask(i, j) = 1 iff t <= t_hat(i, j); valid for 1 <= t <= t_p
Matrix make_mask(const PurificationTimetable& timetable, std::size_t t);

// mask .* predicted + (1 - mask) .* forward_noisy
Matrix blend(const Matrix& mask, const Matrix& predicted, const Matrix& forward_noisy);

}  // namespace graphpure
