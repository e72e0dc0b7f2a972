#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graphpure/diffusion.hpp"
#include "graphpure/entropy.hpp"
#include "graphpure/gnn.hpp"
#include "graphpure/graph.hpp"
#include "graphpure/lid.hpp"

namespace graphpure {

struct PurifyConfig {
  std::size_t t_p = 6;         // purification horizon, 1 <= t_p < schedule.horizon
  bool guidance = true;
  GuidanceConfig guidance_cfg; // lambda, sign, gradient mode, entropy form
  LidConfig lid;
  EntropyConfig entropy;
  std::size_t num_restarts = 1;
  std::uint64_t seed = 0;
  // fresh draw of the forward reference at every step (default) or one stored
  // forward trajectory shared across steps
  bool fresh_forward_reference = true;
  // ablation: skip LID and treat every edge as fully adversarial (lambda = 1),
  // which makes the masked loop collapse to plain reverse diffusion
  bool isotropic_lambda = false;
  bool store_snapshots = false;
  std::size_t snapshot_max_nodes = 64;

  void validate(const NoiseSchedule& schedule) const;
};

struct PurifyStepRecord {
  std::size_t t = 0;
  double mask_density = 0.0;           // mean of the step mask over off-diagonal entries
  double transfer_entropy_value = 0.0; // NaN when guidance is off
  double guidance_grad_norm = 0.0;     // max-abs of the guidance gradient
  std::size_t flips_vs_prev = 0;       // hamming distance to the previous chain state
  std::optional<Matrix> probs_pre_guidance, probs_post_guidance;  // size-gated
};

struct PurificationTrace {
  std::vector<double> gamma;
  LidDiagnostics lid_diagnostics;
  std::vector<PurifyStepRecord> steps;  // length t_p, outermost restart chain
  Matrix final_adjacency;
  std::size_t num_restarts = 1;
};

// Full purification loop: LID -> adversarial degrees -> timetable -> masked
// reverse diffusion with transfer-entropy guidance. Multiple restarts are
// combined by per-edge majority vote, ties keeping the attacked entry.
std::pair<Graph, PurificationTrace> purify(const Graph& attacked_graph,
                                           const GcnParams& classifier_params,
                                           const DenoiserParams& denoiser_params,
                                           const NoiseSchedule& schedule,
                                           const PurifyConfig& config);

struct PurificationMetrics {
  double acc_clean = 0.0;
  double acc_attacked = 0.0;
  double acc_purified = 0.0;
  double adversarial_edge_removal_rate = 0.0;   // flipped entries reverted
  double clean_edge_preservation_rate = 0.0;    // unflipped entries unchanged
  double recovery_ratio = 0.0;  // (acc_pur - acc_att) / max(acc_clean - acc_att, eps)
};

PurificationMetrics evaluate_purification(const Graph& clean, const Graph& attacked,
                                          const Graph& purified, const Matrix& flipped_mask,
                                          const GcnParams& classifier_params,
                                          const std::vector<std::size_t>& eval_nodes);

}  // namespace graphpure
