#include "graphpure/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "graphpure/rng.hpp"

namespace graphpure {

std::size_t Graph::num_edges() const {
  const std::size_t n = num_nodes();
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (adjacency(i, j) != 0.0) ++count;
  return count;
}

double Graph::edge_density() const {
  const std::size_t n = num_nodes();
  if (n < 2) return 0.0;
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<double>(num_edges()) / pairs;
}

void Graph::validate() const {
  const std::size_t n = num_nodes();
  if (adjacency.cols() != n) throw std::invalid_argument("adjacency must be square");
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw std::invalid_argument("adjacency diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = adjacency(i, j);
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("adjacency entries must be 0 or 1");
      if (adjacency(i, j) != adjacency(j, i))
        throw std::invalid_argument("adjacency must be symmetric");
    }
  }
  if (features.rows() != n && !(n == 0 && features.rows() == 0))
    throw std::invalid_argument("features row count must match node count");
  if (!features.all_finite()) throw std::invalid_argument("features must be finite");
  if (!node_labels.empty() && node_labels.size() != n)
    throw std::invalid_argument("node label count must match node count");
}

void EdgeStateVector::validate(double tol) const {
  for (double p : probabilities)
    if (!(p >= 0.0)) throw std::invalid_argument("edge state probabilities must be non-negative");
  const double s = probabilities[0] + probabilities[1];
  if (std::fabs(s - 1.0) > tol)
    throw std::invalid_argument("edge state probabilities must sum to 1");
}

void SbmConfig::validate() const {
  if (num_nodes == 0) throw std::invalid_argument("sbm: num_nodes must be positive");
  if (num_blocks == 0) throw std::invalid_argument("sbm: num_blocks must be positive");
  if (num_nodes < num_blocks) throw std::invalid_argument("sbm: num_nodes < num_blocks");
  if (!(inter_prob >= 0.0 && inter_prob < intra_prob && intra_prob <= 1.0))
    throw std::invalid_argument("sbm: need 0 <= inter_prob < intra_prob <= 1");
}

Graph generate_sbm(const SbmConfig& config) {
  config.validate();
  const std::size_t n = config.num_nodes;
  Rng rng(config.seed, "sbm");

  std::vector<int> block(n);
  for (std::size_t i = 0; i < n; ++i)
    block[i] = static_cast<int>(i * config.num_blocks / n);

  Graph g;
  g.adjacency = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = block[i] == block[j] ? config.intra_prob : config.inter_prob;
      if (rng.bernoulli(p)) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
    }
  }
  g.node_labels = std::move(block);
  g.features = degree_features(g.adjacency);
  return g;
}

Matrix degree_features(const Matrix& adjacency) {
  const std::size_t n = adjacency.rows();
  Matrix f(n, 1);
  double max_deg = 0.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += adjacency(i, j);
    max_deg = std::max(max_deg, deg[i]);
  }
  if (max_deg > 0.0)
    for (std::size_t i = 0; i < n; ++i) f(i, 0) = deg[i] / max_deg;
  return f;
}

Graph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);

  std::string line;
  std::size_t line_no = 0;
  auto parse_error = [&](const std::string& msg) {
    return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) throw parse_error("missing header");
  ++line_no;
  std::istringstream header(line);
  std::string word;
  std::size_t n = 0;
  if (!(header >> word >> n) || word != "nodes") throw parse_error("expected 'nodes <N>' header");

  Graph g;
  g.adjacency = Matrix(n, n);
  bool in_labels = false;
  std::size_t labels_read = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "labels") {
      if (in_labels) throw parse_error("duplicate labels section");
      in_labels = true;
      g.node_labels.assign(n, 0);
      continue;
    }
    std::istringstream ls(line);
    if (in_labels) {
      int lab;
      if (!(ls >> lab)) throw parse_error("malformed label line");
      if (labels_read >= n) throw parse_error("too many labels");
      g.node_labels[labels_read++] = lab;
      std::string rest;
      if (ls >> rest) throw parse_error("trailing content after label");
    } else {
      long long i, j;
      if (!(ls >> i >> j)) throw parse_error("malformed edge line");
      std::string rest;
      if (ls >> rest) throw parse_error("trailing content after edge");
      if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
        throw parse_error("edge endpoint out of range");
      if (i == j) throw parse_error("self-loop " + std::to_string(i) + " " + std::to_string(j));
      g.adjacency(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 1.0;
      g.adjacency(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = 1.0;
    }
  }
  if (in_labels && labels_read != n) throw parse_error("labels section incomplete");
  g.features = degree_features(g.adjacency);
  return g;
}

void write_edge_list(const Graph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list: " + path);
  const std::size_t n = graph.num_nodes();
  out << "nodes " << n << "\n";
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (graph.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
  if (!graph.node_labels.empty()) {
    out << "labels\n";
    for (int lab : graph.node_labels) out << lab << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Matrix read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open features csv: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_features_csv(const Matrix& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write features csv: " + path);
  out.precision(17);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      if (j) out << ",";
      out << features(i, j);
    }
    out << "\n";
  }
}

DatasetSplit split_dataset(std::size_t n_items, const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  if (n_items == 0) throw std::invalid_argument("split: empty dataset");
  double ratio_sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw std::invalid_argument("split: negative ratio");
    ratio_sum += r;
  }
  if (std::fabs(ratio_sum - 1.0) > 1e-9) throw std::invalid_argument("split: ratios must sum to 1");

  // largest-remainder apportionment
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = ratios[k] * static_cast<double>(n_items);
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - std::floor(exact);
    assigned += sizes[k];
  }
  while (assigned < n_items) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (remainder[k] > remainder[best]) best = k;
    ++sizes[best];
    remainder[best] = -1.0;
    ++assigned;
  }

  std::vector<std::size_t> order(n_items);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, "split");
  rng.shuffle(order);

  DatasetSplit split;
  auto it = order.begin();
  split.train.assign(it, it + sizes[0]);
  it += sizes[0];
  split.val.assign(it, it + sizes[1]);
  it += sizes[1];
  split.test.assign(it, it + sizes[2]);
  return split;
}

}  // namespace graphpure
