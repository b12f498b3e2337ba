#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <vector>

#include "oracles.hpp"
#include "specgnn/graph.hpp"
#include "specgnn/rng.hpp"

using namespace specgnn;
using Catch::Approx;

namespace {

std::vector<Eigen::VectorXd> random_features(int n, int d, Rng& rng,
                                             bool positive = false) {
  std::vector<Eigen::VectorXd> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].resize(d);
    for (int j = 0; j < d; ++j) {
      out[i](j) = positive ? rng.uniform(0.1, 1.0) : rng.normal();
    }
  }
  return out;
}

int undirected_edge_count(const Eigen::MatrixXd& a) {
  int count = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("edge_weight_same angular similarity endpoints") {
  Eigen::VectorXd x(3);
  x << 1.0, 2.0, -0.5;
  CHECK(edge_weight_same(x, x) == Approx(1.0));

  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  CHECK(edge_weight_same(a, b) == Approx(0.5));
  CHECK(edge_weight_same(x, (-x).eval()) == Approx(0.0).margin(1e-15));
}

TEST_CASE("edge_weight_same zero-norm convention") {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd x(3);
  x << 1.0, 0.0, 0.0;
  std::size_t warnings = 0;
  CHECK(edge_weight_same(z, x, &warnings) == Approx(0.5));
  CHECK(warnings == 1);
  CHECK(edge_weight_same(z, z, &warnings) == Approx(0.5));
  CHECK(warnings == 2);
}

TEST_CASE("edge_weight_same rejects mismatched dims") {
  CHECK_THROWS_AS(
      edge_weight_same(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)),
      InvalidInput);
}

TEST_CASE("edge_weight_cross scales by phi") {
  Eigen::VectorXd x(2);
  x << 0.3, -1.2;
  CHECK(edge_weight_cross(x, x, 0.5) == Approx(0.5));

  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  CHECK(edge_weight_cross(a, b, 2.0) == Approx(1.0));
  // rounding in the cosine keeps arccos a hair short of pi
  CHECK(edge_weight_cross(x, (-x).eval(), 3.0) == Approx(0.0).margin(1e-7));
  CHECK_THROWS_AS(edge_weight_cross(x, x, 0.0), InvalidConfig);
  CHECK_THROWS_AS(edge_weight_cross(x, x, -1.0), InvalidConfig);
}

TEST_CASE("build_interaction_graph single utterance") {
  Rng rng(1);
  auto xt = random_features(1, 4, rng);
  auto xa = random_features(1, 4, rng);
  auto xv = random_features(1, 4, rng);
  const InteractionGraph g = build_interaction_graph(xt, xa, xv, 4, 0.5);
  CHECK(g.n_nodes == 3);
  CHECK(undirected_edge_count(g.adjacency) == 3);  // cross-modal triangle only
  CHECK(g.adjacency.diagonal().isZero(0.0));
}

TEST_CASE("build_interaction_graph N=3 k=1 edge layout") {
  Rng rng(2);
  auto xt = random_features(3, 4, rng, true);
  auto xa = random_features(3, 4, rng, true);
  auto xv = random_features(3, 4, rng, true);
  const InteractionGraph g = build_interaction_graph(xt, xa, xv, 1, 0.5);
  CHECK(g.n_nodes == 9);
  // same-modal pairs (0,1),(1,2) per modality = 6, cross-modal 3 per
  // utterance = 9
  CHECK(undirected_edge_count(g.adjacency) == 15);
  CHECK((g.adjacency - g.adjacency.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // |i-j| > k stays disconnected within each modality
  CHECK(g.adjacency(g.text_node(0), g.text_node(2)) == 0.0);
  CHECK(g.adjacency(g.audio_node(0), g.audio_node(2)) == 0.0);
}

TEST_CASE("build_interaction_graph k=0 disables same-modal edges") {
  Rng rng(3);
  auto xt = random_features(2, 3, rng, true);
  auto xa = random_features(2, 3, rng, true);
  auto xv = random_features(2, 3, rng, true);
  const InteractionGraph g = build_interaction_graph(xt, xa, xv, 0, 1.0);
  CHECK(undirected_edge_count(g.adjacency) == 6);  // two cross-modal triangles
}

TEST_CASE("edge count matches closed form against brute enumeration") {
  Rng rng(4);
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{
           {1, 0}, {2, 5}, {4, 2}, {7, 3}, {9, 12}, {6, 0}}) {
    auto xt = random_features(n, 5, rng, true);
    auto xa = random_features(n, 5, rng, true);
    auto xv = random_features(n, 5, rng, true);
    const InteractionGraph g = build_interaction_graph(xt, xa, xv, k, 0.5);

    // brute-force enumeration of window pairs
    int brute = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (j - i <= k) brute += 3;
      }
    }
    brute += 3 * n;

    const long same = k < n ? long(n) * k - long(k) * (k + 1) / 2
                            : long(n) * (n - 1) / 2;
    CHECK(undirected_edge_count(g.adjacency) == brute);
    CHECK(brute == 3 * same + 3 * n);
  }
}

TEST_CASE("edge weights invariant under feature dim permutation") {
  Rng rng(5);
  const int n = 4, d = 6;
  auto xt = random_features(n, d, rng);
  auto xa = random_features(n, d, rng);
  auto xv = random_features(n, d, rng);
  const InteractionGraph g1 = build_interaction_graph(xt, xa, xv, 2, 0.5);

  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  auto apply = [&](std::vector<Eigen::VectorXd> v) {
    for (auto& x : v) {
      Eigen::VectorXd p(d);
      for (int j = 0; j < d; ++j) p(j) = x(perm[j]);
      x = p;
    }
    return v;
  };
  const InteractionGraph g2 =
      build_interaction_graph(apply(xt), apply(xa), apply(xv), 2, 0.5);
  CHECK((g1.adjacency - g2.adjacency).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("normalized_filters two-node hand values") {
  Eigen::MatrixXd a(2, 2);
  a << 0.0, 1.0, 1.0, 0.0;
  const FilterPair f = normalized_filters(a);
  Eigen::MatrixXd low_expect(2, 2), high_expect(2, 2);
  low_expect << 1.0, 1.0, 1.0, 1.0;
  high_expect << 1.0, -1.0, -1.0, 1.0;
  CHECK((f.low - low_expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((f.high - high_expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("normalized_filters isolated nodes degrade to identity") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  const FilterPair f = normalized_filters(a);
  CHECK(f.low.isIdentity(0.0));
  CHECK(f.high.isIdentity(0.0));
}

TEST_CASE("filter pair sums to 2I exactly") {
  Rng rng(6);
  auto xt = random_features(5, 4, rng);
  auto xa = random_features(5, 4, rng);
  auto xv = random_features(5, 4, rng);
  const InteractionGraph g = build_interaction_graph(xt, xa, xv, 3, 0.7);
  const FilterPair f = normalized_filters(g.adjacency);
  const Eigen::MatrixXd residual =
      f.low + f.high - 2.0 * Eigen::MatrixXd::Identity(g.n_nodes, g.n_nodes);
  CHECK(residual.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter spectra lie in [0, 2]") {
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 3 + trial * 4;
    auto xt = random_features(n, 5, rng);
    auto xa = random_features(n, 5, rng);
    auto xv = random_features(n, 5, rng);
    const InteractionGraph g = build_interaction_graph(xt, xa, xv, 2, 0.5);
    const FilterPair f = normalized_filters(g.adjacency);
    for (const Eigen::MatrixXd* m : {&f.low, &f.high}) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*m);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);
      CHECK(es.eigenvalues().maxCoeff() <= 2.0 + 1e-9);
    }
  }
}

TEST_CASE("smooth signal is annihilated by the high-pass filter") {
  Rng rng(8);
  auto xt = random_features(4, 3, rng, true);
  auto xa = random_features(4, 3, rng, true);
  auto xv = random_features(4, 3, rng, true);
  const InteractionGraph g = build_interaction_graph(xt, xa, xv, 3, 0.5);
  const Eigen::VectorXd degree = g.adjacency.rowwise().sum();
  REQUIRE(degree.minCoeff() > 0.0);

  const FilterPair f = normalized_filters(g.adjacency);
  const Eigen::VectorXd smooth = degree.cwiseSqrt();
  CHECK((f.high * smooth).norm() <= 1e-9 * smooth.norm());
  CHECK((f.low * smooth - 2.0 * smooth).norm() <= 1e-9 * smooth.norm());
}

TEST_CASE("normalized_filters input validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 0.0, 1.0, 0.5, 0.0;
  CHECK_THROWS_AS(normalized_filters(asym), InvalidInput);

  Eigen::MatrixXd negative(2, 2);
  negative << 0.0, -1.0, -1.0, 0.0;
  CHECK_THROWS_AS(normalized_filters(negative), InvalidInput);

  Eigen::MatrixXd selfloop(2, 2);
  selfloop << 1.0, 0.5, 0.5, 0.0;
  CHECK_THROWS_AS(normalized_filters(selfloop), InvalidInput);

  CHECK_THROWS_AS(normalized_filters(Eigen::MatrixXd::Zero(2, 3)),
                  InvalidInput);
}
