#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphpure/matrix.hpp"

namespace graphpure {

// Undirected graph over a dense 0/1 adjacency with zero diagonal.
struct Graph {
  Matrix adjacency;              // N x N, entries in {0, 1}, symmetric, zero diagonal
  Matrix features;               // N x F, finite
  std::vector<int> node_labels;  // empty when absent
  std::optional<int> graph_label;

  std::size_t num_nodes() const { return adjacency.rows(); }
  std::size_t num_feature_dims() const { return features.cols(); }
  std::size_t num_edges() const;   // undirected edge count
  double edge_density() const;     // edges / C(N, 2)

  void validate() const;  // throws std::invalid_argument on any broken invariant
};

// Probability vector over the two edge states (0 = absent, 1 = present).
struct EdgeStateVector {
  std::array<double, 2> probabilities;

  double operator[](std::size_t i) const { return probabilities[i]; }
  void validate(double tol = 1e-9) const;
};

struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
};

struct SbmConfig {
  std::size_t num_nodes = 0;
  std::size_t num_blocks = 1;
  double intra_prob = 0.0;
  double inter_prob = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

Graph generate_sbm(const SbmConfig& config);

// feature i = degree(i) / max degree; all zeros when the graph has no edges
Matrix degree_features(const Matrix& adjacency);

Graph read_edge_list(const std::string& path);
void write_edge_list(const Graph& graph, const std::string& path);

Matrix read_features_csv(const std::string& path);
void write_features_csv(const Matrix& features, const std::string& path);

// Largest-remainder split of [0, n) into train/val/test; ratios must sum to 1.
DatasetSplit split_dataset(std::size_t n_items, const std::array<double, 3>& ratios,
                           std::uint64_t seed);

}  // namespace graphpure
