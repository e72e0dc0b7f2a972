#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "graphpure/graph.hpp"

using namespace graphpure;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("graphpure_test_") + name;
}

}  // namespace

TEST_CASE("sbm with extreme probabilities forces two disjoint cliques") {
  SbmConfig cfg{4, 2, 1.0, 0.0, 1};
  const Graph g = generate_sbm(cfg);
  g.validate();
  CHECK(g.node_labels == std::vector<int>{0, 0, 1, 1});
  CHECK(g.adjacency(0, 1) == 1.0);
  CHECK(g.adjacency(2, 3) == 1.0);
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.adjacency(0, 3) == 0.0);
  CHECK(g.adjacency(1, 2) == 0.0);
  CHECK(g.adjacency(1, 3) == 0.0);
}

TEST_CASE("sbm intra-block edge count lands within 3 sigma of its binomial mean") {
  SbmConfig cfg{60, 2, 0.3, 0.02, 7};
  const Graph g = generate_sbm(cfg);
  std::size_t intra = 0;
  for (std::size_t i = 0; i < 60; ++i)
    for (std::size_t j = i + 1; j < 60; ++j)
      if (g.node_labels[i] == g.node_labels[j] && g.adjacency(i, j) != 0.0) ++intra;
  // 2 blocks of 30: 870 intra pairs, mean 261, sigma = sqrt(870 * 0.3 * 0.7)
  const double mean = 870.0 * 0.3;
  const double sigma = std::sqrt(870.0 * 0.3 * 0.7);
  CHECK(std::fabs(static_cast<double>(intra) - mean) < 3.0 * sigma);
}

TEST_CASE("sbm is deterministic per seed") {
  SbmConfig cfg{50, 3, 0.4, 0.05, 99};
  const Graph a = generate_sbm(cfg);
  const Graph b = generate_sbm(cfg);
  CHECK(a.adjacency == b.adjacency);
  CHECK(a.features == b.features);
  CHECK(a.node_labels == b.node_labels);
}

TEST_CASE("sbm rejects invalid configs") {
  CHECK_THROWS(generate_sbm({2, 3, 0.5, 0.1, 0}));   // fewer nodes than blocks
  CHECK_THROWS(generate_sbm({10, 2, 0.1, 0.5, 0}));  // inter >= intra
}

TEST_CASE("sbm outputs satisfy all graph invariants across random configs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SbmConfig cfg{20 + seed, 1 + seed % 4, 0.5, 0.1, seed};
    if (cfg.num_blocks == 1) cfg.inter_prob = 0.0;
    const Graph g = generate_sbm(cfg);
    CHECK_NOTHROW(g.validate());
    for (std::size_t i = 0; i < g.num_nodes(); ++i) CHECK(g.features(i, 0) <= 1.0);
  }
}

TEST_CASE("degree features") {
  Matrix path(3, 3);
  path(0, 1) = path(1, 0) = 1.0;
  path(1, 2) = path(2, 1) = 1.0;
  const Matrix f = degree_features(path);
  CHECK(f(0, 0) == 0.5);
  CHECK(f(1, 0) == 1.0);
  CHECK(f(2, 0) == 0.5);

  const Matrix empty = degree_features(Matrix(3, 3));
  CHECK(empty.sum() == 0.0);

  Matrix clique(4, 4, 1.0);
  clique.zero_diagonal();
  const Matrix fc = degree_features(clique);
  for (std::size_t i = 0; i < 4; ++i) CHECK(fc(i, 0) == 1.0);
}

TEST_CASE("edge list round trip and parse errors") {
  const std::string path = temp_path("roundtrip.edges");

  SUBCASE("simple path graph") {
    std::ofstream out(path);
    out << "nodes 3\n0 1\n1 2\n";
    out.close();
    const Graph g = read_edge_list(path);
    CHECK(g.num_nodes() == 3);
    CHECK(g.adjacency(0, 1) == 1.0);
    CHECK(g.adjacency(1, 2) == 1.0);
    CHECK(g.adjacency(0, 2) == 0.0);
  }

  SUBCASE("write then read an sbm graph") {
    const Graph g = generate_sbm({40, 2, 0.4, 0.05, 3});
    write_edge_list(g, path);
    const Graph h = read_edge_list(path);
    CHECK(h.adjacency == g.adjacency);
    CHECK(h.node_labels == g.node_labels);
  }

  SUBCASE("self loop rejected with the offending pair named") {
    std::ofstream out(path);
    out << "nodes 3\n2 2\n";
    out.close();
    try {
      read_edge_list(path);
      FAIL("expected a parse error");
    } catch (const std::exception& e) {
      const std::string msg = e.what();
      CHECK(msg.find("self-loop") != std::string::npos);
      CHECK(msg.find("2 2") != std::string::npos);
    }
  }

  SUBCASE("malformed line reports its number") {
    std::ofstream out(path);
    out << "nodes 3\n0 1\nnot-an-edge\n";
    out.close();
    try {
      read_edge_list(path);
      FAIL("expected a parse error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }

  SUBCASE("duplicate edges are idempotent") {
    std::ofstream out(path);
    out << "nodes 3\n0 1\n0 1\n";
    out.close();
    const Graph g = read_edge_list(path);
    CHECK(g.num_edges() == 1);
  }

  std::remove(path.c_str());
}

TEST_CASE("edge list round trip is the identity on larger random graphs") {
  const std::string path = temp_path("roundtrip_large.edges");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Graph g = generate_sbm({120 + 17 * seed, 3, 0.2, 0.03, seed});
    write_edge_list(g, path);
    const Graph h = read_edge_list(path);
    CHECK(h.adjacency == g.adjacency);
    CHECK(h.node_labels == g.node_labels);
  }
  std::remove(path.c_str());
}

TEST_CASE("split sizes follow the largest remainder rule") {
  {
    const DatasetSplit s = split_dataset(10, {0.8, 0.1, 0.1}, 0);
    CHECK(s.train.size() == 8);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 1);
  }
  {
    const DatasetSplit s = split_dataset(10, {0.1, 0.1, 0.8}, 0);
    CHECK(s.train.size() == 1);
    CHECK(s.val.size() == 1);
    CHECK(s.test.size() == 8);
  }
  {
    const DatasetSplit s = split_dataset(3, {1.0, 0.0, 0.0}, 0);
    CHECK(s.train.size() == 3);
    CHECK(s.val.size() == 0);
    CHECK(s.test.size() == 0);
  }
}

TEST_CASE("split is a disjoint cover, deterministic per seed") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 17 + seed * 13;
    const DatasetSplit s = split_dataset(n, {0.6, 0.25, 0.15}, seed);
    std::vector<bool> seen(n, false);
    for (const auto* part : {&s.train, &s.val, &s.test})
      for (std::size_t i : *part) {
        CHECK(!seen[i]);
        seen[i] = true;
      }
    for (bool b : seen) CHECK(b);

    const DatasetSplit again = split_dataset(n, {0.6, 0.25, 0.15}, seed);
    CHECK(again.train == s.train);
    CHECK(again.val == s.val);
    CHECK(again.test == s.test);
  }
}

TEST_CASE("split input validation") {
  CHECK_THROWS(split_dataset(0, {0.8, 0.1, 0.1}, 0));
  CHECK_THROWS(split_dataset(10, {0.8, 0.1, 0.2}, 0));
}
