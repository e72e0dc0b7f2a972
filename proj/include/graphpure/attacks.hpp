#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphpure/gnn.hpp"
#include "graphpure/graph.hpp"

namespace graphpure {

struct AttackBudget {
  double fraction = 0.0;          // of existing edges
  std::size_t resolved_count = 0; // epsilon, in edge flips

  // round(fraction * |E|), must resolve to >= 1
  static AttackBudget from_fraction(const Graph& graph, double fraction);
};

struct AttackResult {
  Graph perturbed;
  Matrix flipped_mask;  // symmetric 0/1, perturbed = clean XOR mask
  std::string attack_name;
  std::uint64_t seed = 0;
  bool partial = false;  // budget not met because perturbation pools ran dry

  std::size_t flip_count() const;  // upper-triangle flips
};

// Adds exactly `resolved_count` uniformly random non-edges.
AttackResult attack_random(const Graph& graph, const AttackBudget& budget, std::uint64_t seed);

// Deletes intra-class edges and inserts inter-class non-edges, budget split
// evenly (deletions rounded down); falls back to the other pool when one is
// exhausted.
AttackResult attack_dice(const Graph& graph, const std::vector<int>& labels,
                         const AttackBudget& budget, std::uint64_t seed);

// Greedy gradient attack: repeatedly flips the feasible pair whose flip
// direction most increases the classification loss, recomputing the gradient
// after every flip.
AttackResult attack_grad_greedy(const Graph& graph, const GcnParams& classifier_params,
                                const AttackBudget& budget, std::uint64_t seed,
                                const std::vector<std::size_t>& target_nodes);

}  // namespace graphpure
