#include "graphpure/lid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphpure {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

void LidConfig::validate(std::size_t num_points) const {
  if (k < 2) throw std::invalid_argument("lid: k must be >= 2");
  if (k >= num_points) throw std::invalid_argument("lid: k must be < number of points");
  if (!(epsilon_dist > 0.0)) throw std::invalid_argument("lid: epsilon_dist must be positive");
  if (!(gamma_cap > 0.0)) throw std::invalid_argument("lid: gamma_cap must be positive");
}

std::size_t LidConfig::default_k(std::size_t num_points) {
  if (num_points >= 40) return 20;
  return std::max<std::size_t>(2, num_points / 4);
}

std::vector<double> estimate_lid(const Matrix& embeddings, const LidConfig& config,
                                 LidDiagnostics* diag) {
  const std::size_t n = embeddings.rows();
  config.validate(n);
  if (!embeddings.all_finite()) throw std::invalid_argument("lid: non-finite embeddings");

  const Matrix sqdist = pairwise_squared_distances(embeddings);
  std::vector<double> gamma(n);
  std::size_t floored = 0, capped = 0;

  std::vector<std::pair<double, std::size_t>> order(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      order[m++] = {std::sqrt(sqdist(i, j)), j};
    }
    std::sort(order.begin(), order.end());  // distance, then smaller index

    double r_k = order[config.k - 1].first;
    if (r_k < config.epsilon_dist) r_k = config.epsilon_dist;
    double log_sum = 0.0;
    for (std::size_t j = 0; j < config.k; ++j) {
      double r = order[j].first;
      if (r < config.epsilon_dist) {
        r = config.epsilon_dist;
        ++floored;
      }
      log_sum += std::log(r / r_k);
    }
    if (log_sum == 0.0) {  // all k distances identical after flooring
      gamma[i] = config.gamma_cap;
      ++capped;
    } else {
      gamma[i] = -static_cast<double>(config.k) / log_sum;
    }
  }

  if (diag) {
    diag->floored_distances = floored;
    diag->capped_nodes = capped;
    diag->gamma_min = *std::min_element(gamma.begin(), gamma.end());
    diag->gamma_max = *std::max_element(gamma.begin(), gamma.end());
    double s = 0.0;
    for (double g : gamma) s += g;
    diag->gamma_mean = s / static_cast<double>(n);
  }
  return gamma;
}

AdversarialDegreeMap adversarial_degree(const std::vector<double>& gamma) {
  if (gamma.empty()) throw std::invalid_argument("adversarial_degree: empty gamma");
  for (double g : gamma)
    if (!(g > 0.0)) throw std::invalid_argument("adversarial_degree: gamma must be positive");

  const std::size_t n = gamma.size();
  const double lo = *std::min_element(gamma.begin(), gamma.end());
  const double hi = *std::max_element(gamma.begin(), gamma.end());

  AdversarialDegreeMap out;
  out.gamma = gamma;
  out.gamma_norm.resize(n);
  if (hi == lo) {
    std::fill(out.gamma_norm.begin(), out.gamma_norm.end(), 0.5);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.gamma_norm[i] = (gamma[i] - lo) / (hi - lo);
  }
  out.lambda_matrix = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out.lambda_matrix(i, j) = out.gamma_norm[i] * out.gamma_norm[j];
  return out;
}

double purification_time_real(double lambda, const NoiseSchedule& schedule, std::size_t t_p) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("purification_time: lambda must be in [0, 1]");
  if (t_p < 1 || t_p > schedule.horizon)
    throw std::invalid_argument("purification_time: t_p out of range");
  const double a = schedule.alpha_bar[t_p];
  if (!(a > 0.0))
    throw std::invalid_argument("purification_time: alpha_bar(t_p) = 0 is degenerate");
  const double inner = a / (lambda * (1.0 - a) + a);
  const double s = schedule.offset;
  const double horizon = static_cast<double>(schedule.horizon);
  return horizon * (2.0 * (1.0 + s) / kPi * std::acos(std::sqrt(inner)) - s);
}

std::size_t purification_time(double lambda, const NoiseSchedule& schedule, std::size_t t_p) {
  double t = purification_time_real(lambda, schedule, t_p);
  t = std::clamp(t, 0.0, static_cast<double>(t_p));
  return static_cast<std::size_t>(std::floor(t + 0.5));
}

PurificationTimetable purification_timetable(const Matrix& lambda_matrix,
                                             const NoiseSchedule& schedule, std::size_t t_p,
                                             LidDiagnostics* diag) {
  const std::size_t n = lambda_matrix.rows();
  if (lambda_matrix.cols() != n) throw std::invalid_argument("timetable: lambda must be square");
  PurificationTimetable tt;
  tt.t_p = t_p;
  tt.t_hat = Matrix(n, n);
  std::size_t clamped = 0;
  std::vector<std::size_t> hist(t_p + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double raw = purification_time_real(lambda_matrix(i, j), schedule, t_p);
      if (raw < 0.0 || raw > static_cast<double>(t_p)) ++clamped;
      const std::size_t t_hat = purification_time(lambda_matrix(i, j), schedule, t_p);
      tt.t_hat(i, j) = static_cast<double>(t_hat);
      tt.t_hat(j, i) = static_cast<double>(t_hat);
      ++hist[t_hat];
    }
  }
  if (diag) {
    diag->clamped_times = clamped;
    diag->t_hat_histogram = std::move(hist);
  }
  return tt;
}

Matrix make_mask(const PurificationTimetable& timetable, std::size_t t) {
  if (t < 1 || t > timetable.t_p) throw std::invalid_argument("make_mask: t out of range");
  const std::size_t n = timetable.t_hat.rows();
  Matrix mask(n, n);
  const double td = static_cast<double>(t);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && td <= timetable.t_hat(i, j)) mask(i, j) = 1.0;
  return mask;
}

Matrix blend(const Matrix& mask, const Matrix& predicted, const Matrix& forward_noisy) {
  if (!mask.same_shape(predicted) || !mask.same_shape(forward_noisy))
    throw std::invalid_argument("blend: shape mismatch");
  Matrix out(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const double m = mask.data()[i];
    out.data()[i] = m * predicted.data()[i] + (1.0 - m) * forward_noisy.data()[i];
  }
  return out;
}

}  // namespace graphpure
