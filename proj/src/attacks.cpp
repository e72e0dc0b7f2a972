#include "graphpure/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "graphpure/rng.hpp"

namespace graphpure {

namespace {

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

void flip(Graph& g, Matrix& mask, std::size_t i, std::size_t j) {
  const double v = g.adjacency(i, j) != 0.0 ? 0.0 : 1.0;
  g.adjacency(i, j) = v;
  g.adjacency(j, i) = v;
  mask(i, j) = 1.0;
  mask(j, i) = 1.0;
}

PairList sample_pairs(const PairList& pool, std::size_t count, Rng& rng) {
  const auto idx = rng.sample_indices(pool.size(), count);
  PairList out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(pool[k]);
  return out;
}

}  // namespace

std::size_t AttackResult::flip_count() const {
  std::size_t count = 0;
  const std::size_t n = flipped_mask.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (flipped_mask(i, j) != 0.0) ++count;
  return count;
}

AttackBudget AttackBudget::from_fraction(const Graph& graph, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("attack budget: fraction must be in (0, 1)");
  const auto count =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(graph.num_edges())));
  if (count < 1)
    throw std::invalid_argument("attack budget: fraction resolves to zero edge flips");
  return {fraction, count};
}

AttackResult attack_random(const Graph& graph, const AttackBudget& budget, std::uint64_t seed) {
  graph.validate();
  const std::size_t n = graph.num_nodes();
  PairList non_edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (graph.adjacency(i, j) == 0.0) non_edges.emplace_back(i, j);
  if (non_edges.size() < budget.resolved_count)
    throw std::invalid_argument("attack_random: not enough absent pairs for the budget");

  AttackResult result;
  result.perturbed = graph;
  result.flipped_mask = Matrix(n, n);
  result.attack_name = "random";
  result.seed = seed;

  Rng rng(seed, "attack-random");
  for (const auto& [i, j] : sample_pairs(non_edges, budget.resolved_count, rng))
    flip(result.perturbed, result.flipped_mask, i, j);
  return result;
}

AttackResult attack_dice(const Graph& graph, const std::vector<int>& labels,
                         const AttackBudget& budget, std::uint64_t seed) {
  graph.validate();
  const std::size_t n = graph.num_nodes();
  if (labels.size() != n) throw std::invalid_argument("attack_dice: labels required per node");

  PairList intra_edges, inter_non_edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool edge = graph.adjacency(i, j) != 0.0;
      const bool same = labels[i] == labels[j];
      if (edge && same) intra_edges.emplace_back(i, j);
      if (!edge && !same) inter_non_edges.emplace_back(i, j);
    }
  }

  std::size_t deletions = budget.resolved_count / 2;
  std::size_t insertions = budget.resolved_count - deletions;
  if (intra_edges.size() < deletions) {
    insertions += deletions - intra_edges.size();
    deletions = intra_edges.size();
  }
  if (inter_non_edges.size() < insertions) {
    const std::size_t spill = insertions - inter_non_edges.size();
    insertions = inter_non_edges.size();
    deletions = std::min(deletions + spill, intra_edges.size());
  }

  AttackResult result;
  result.perturbed = graph;
  result.flipped_mask = Matrix(n, n);
  result.attack_name = "dice";
  result.seed = seed;
  result.partial = deletions + insertions < budget.resolved_count;

  Rng rng(seed, "attack-dice");
  for (const auto& [i, j] : sample_pairs(intra_edges, deletions, rng))
    flip(result.perturbed, result.flipped_mask, i, j);
  for (const auto& [i, j] : sample_pairs(inter_non_edges, insertions, rng))
    flip(result.perturbed, result.flipped_mask, i, j);
  return result;
}

AttackResult attack_grad_greedy(const Graph& graph, const GcnParams& classifier_params,
                                const AttackBudget& budget, std::uint64_t seed,
                                const std::vector<std::size_t>& target_nodes) {
  graph.validate();
  const std::size_t n = graph.num_nodes();

  AttackResult result;
  result.perturbed = graph;
  result.flipped_mask = Matrix(n, n);
  result.attack_name = "grad_greedy";
  result.seed = seed;

  for (std::size_t step = 0; step < budget.resolved_count; ++step) {
    const Matrix g = grad_wrt_adjacency(classifier_params, result.perturbed, target_nodes);
    bool found = false;
    double best_score = 0.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (result.flipped_mask(i, j) != 0.0) continue;  // never revert a flip
        // adding increases loss when the gradient is positive, removing when negative
        const double score =
            result.perturbed.adjacency(i, j) == 0.0 ? g(i, j) : -g(i, j);
        if (!found || score > best_score) {
          found = true;
          best_score = score;
          bi = i;
          bj = j;
        }
      }
    }
    if (!found) {
      result.partial = true;
      break;
    }
    flip(result.perturbed, result.flipped_mask, bi, bj);
  }
  return result;
}

}  // namespace graphpure
