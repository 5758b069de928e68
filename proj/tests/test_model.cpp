#include "doctest.h"
#include "fixtures.hpp"
#include "sgnn/model.hpp"
#include "sgnn/rng.hpp"

#include <random>
#include <sstream>

using namespace sgnn;

namespace {

// Center 0 connected to nodes 1 (2,0) and 2 (0,3); center feature is zero.
StructuredGraph two_neighbor_graph()
{
  Eigen::MatrixXd x(2, 3);
  x << 0, 2, 0,
       0, 0, 3;
  return fixtures::untagged_graph(x, {{0, 1}, {0, 2}});
}

Model two_neuron_model(NormMode norm = NormMode::OverK)
{
  Eigen::MatrixXd W(2, 2);
  W << 1, 0,
       0, 1;
  return Model(W, Eigen::Vector2d(1, -1), norm);
}

}  // namespace

TEST_CASE("aggregate: max of rectified inner products")
{
  Eigen::MatrixXd x(2, 2);
  x << 2, 0,
       0, 3;
  auto res = aggregate(Eigen::Vector2d(1, 0), x);
  CHECK(res.activation == 2.0);
  CHECK(res.winner == 0);

  res = aggregate(Eigen::Vector2d(-1, -1), x);
  CHECK(res.activation == 0.0);
  CHECK(res.winner == -1);

  Eigen::MatrixXd single(2, 1);
  single << 5, 0;
  CHECK(aggregate(Eigen::Vector2d(1, 0), single).activation == 5.0);

  CHECK_THROWS_AS(aggregate(Eigen::Vector3d(1, 0, 0), x), Error);
  CHECK_THROWS_AS(aggregate(Eigen::Vector2d(1, 0), Eigen::MatrixXd(2, 0)), Error);
}

TEST_CASE("aggregate ties go to the lowest node id")
{
  Eigen::MatrixXd x(1, 3);
  x << 1, 4, 4;
  const std::vector<NodeId> ids{3, 9, 5};
  CHECK(aggregate(Eigen::VectorXd::Ones(1), x, ids).winner == 2);
}

TEST_CASE("forward hand oracle")
{
  const auto g = two_neighbor_graph();
  auto m = two_neuron_model();
  CHECK(forward(m, g, 0) == doctest::Approx(-0.5));
  m.alive[1] = false;
  CHECK(forward(m, g, 0) == doctest::Approx(1.0));
  m.W.setZero();
  CHECK(forward(m, g, 0) == 0.0);
}

TEST_CASE("forward with a neighborhood override")
{
  const auto g = two_neighbor_graph();
  const auto m = two_neuron_model();
  const std::vector<NodeId> sampled{0, 1};
  CHECK(forward(m, g, 0, std::span<const NodeId>(sampled)) == doctest::Approx(1.0));
}

TEST_CASE("over_surviving divides by the surviving count per sign")
{
  const auto g = two_neighbor_graph();
  Eigen::MatrixXd W(2, 3);
  W << 1, 1, 0,
       0, 0, 1;
  Model m(W, Eigen::Vector3d(1, 1, -1), NormMode::OverSurviving);
  CHECK(forward(m, g, 0) == doctest::Approx(2.0 - 3.0));
  m.alive[0] = false;
  CHECK(forward(m, g, 0) == doctest::Approx(2.0 - 3.0));
  m.norm = NormMode::OverK;
  CHECK(forward(m, g, 0) == doctest::Approx((2.0 - 3.0) / 3.0));
}

TEST_CASE("empirical risk and hinge error oracles")
{
  // Nodes 0 and 1 isolated with scalar features so g = b * max(w x, 0) for K = 1.
  Eigen::MatrixXd x(1, 2);
  x << 2, 2;
  StructuredGraph g(x, {1, -1}, {Tag::Unknown, Tag::Unknown}, {}, 0.0);
  Model m(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Ones(1), NormMode::OverK);
  const std::vector<NodeId> both{0, 1};
  // g = (2, 2), y = (1, -1): risk = -(2 - 2)/2 = 0.
  CHECK(empirical_risk(m, g, both) == doctest::Approx(0.0));
  const std::vector<NodeId> first{0};
  CHECK(empirical_risk(m, g, first) == doctest::Approx(-2.0));

  // Hinge: y g = 2 on node 0, -2 on node 1 -> (0 + 3) / 2.
  const auto err = generalization_error(m, g, both);
  CHECK(err.hinge == doctest::Approx(1.5));
  CHECK(err.zero_one == doctest::Approx(0.5));
  CHECK_THROWS_AS(empirical_risk(m, g, {}), Error);
  CHECK_THROWS_AS(generalization_error(m, g, {}), Error);
}

TEST_CASE("risk and hinge examples with two signs")
{
  Eigen::MatrixXd x(2, 2);
  x << 2, 0,
       0, 3;
  StructuredGraph g(x, {1, -1}, {Tag::Unknown, Tag::Unknown}, {}, 0.0);
  Eigen::MatrixXd W(2, 2);
  W << 1, 0,
       0, 1;
  // g(0) = 2, g(1) = -3 with over_surviving (one neuron per sign).
  Model m(W, Eigen::Vector2d(1, -1));
  const std::vector<NodeId> both{0, 1};
  CHECK(empirical_risk(m, g, both) == doctest::Approx(-(2.0 + 3.0) / 2.0));
  const auto err = generalization_error(m, g, both);
  CHECK(err.hinge == 0.0);
  CHECK(err.zero_one == 0.0);

  // Flip node 1's label: y g = -3 there, 2 on node 0 -> (4 + 0) / 2.
  StructuredGraph flipped(x, {1, 1}, {Tag::Unknown, Tag::Unknown}, {}, 0.0);
  CHECK(generalization_error(m, flipped, both).hinge == doctest::Approx(2.0));
}

TEST_CASE("gradient hand oracle")
{
  Eigen::MatrixXd x(2, 1);
  x << 0.5, -1.5;
  StructuredGraph g(x, {1}, {Tag::Unknown}, {}, 0.0);
  Model m(Eigen::Vector2d(1, 0), Eigen::VectorXd::Ones(1), NormMode::OverK);
  const std::vector<NodeId> d{0};
  const Eigen::MatrixXd grad = gradient(m, g, d);
  CHECK(grad(0, 0) == doctest::Approx(-0.5));
  CHECK(grad(1, 0) == doctest::Approx(1.5));

  m.W = Eigen::Vector2d(-1, 0);
  CHECK(gradient(m, g, d).isZero());
}

TEST_CASE("gradient matches central finite differences")
{
  Rng rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const int d = 5;
    const int K = 3;
    Eigen::MatrixXd x(d, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    // Four labeled centers, each with its own two neighbors.
    std::vector<Edge> edges{{0, 4}, {0, 5}, {1, 5}, {1, 6}, {2, 6}, {2, 7}, {3, 7}, {3, 4}};
    StructuredGraph g(x, {1, -1, 1, -1, 1, 1, -1, -1}, std::vector<Tag>(8, Tag::Unknown), edges, 0.0);
    Eigen::MatrixXd W(d, K);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = normal(rng);
    Model m(W, Eigen::Vector3d(1, -1, 1));
    const std::vector<NodeId> D{0, 1, 2, 3};

    // Skip draws near an argmax tie or a ReLU kink.
    bool stable = true;
    for (NodeId v : D)
      for (int k = 0; k < K; ++k) {
        std::vector<double> acts;
        for (NodeId u : g.neighborhood(v)) acts.push_back(std::max(0.0, W.col(k).dot(g.feature(u))));
        std::sort(acts.rbegin(), acts.rend());
        if (acts[0] - acts[1] < 1e-3 || (acts[0] > 0 && acts[0] < 1e-3)) stable = false;
      }
    if (!stable) continue;

    const Eigen::MatrixXd analytic = gradient(m, g, D);
    const double h = 1e-6;
    Eigen::MatrixXd numeric(d, K);
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      Model plus = m;
      Model minus = m;
      plus.W.data()[i] += h;
      minus.W.data()[i] -= h;
      numeric.data()[i] = (empirical_risk(plus, g, D) - empirical_risk(minus, g, D)) / (2 * h);
    }
    const double rel = (analytic - numeric).norm() / std::max(1e-12, numeric.norm());
    CHECK(rel <= 1e-5);
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("pruned columns do not affect outputs or gradients")
{
  const auto g = two_neighbor_graph();
  auto m = two_neuron_model(NormMode::OverSurviving);
  m.alive[1] = false;
  const double g0 = forward(m, g, 0);
  const std::vector<NodeId> D{0};
  const Eigen::MatrixXd grad0 = gradient(m, g, D);
  CHECK(grad0.col(1).isZero());
  m.W.col(1) = Eigen::Vector2d(-7, 11);
  CHECK(forward(m, g, 0) == g0);
  CHECK(gradient(m, g, D) == grad0);
}

TEST_CASE("homogeneity and sign invariance")
{
  const auto g = two_neighbor_graph();
  auto m = two_neuron_model();
  const double base = forward(m, g, 0);
  auto scaled = m;
  scaled.W.col(0) *= 3.0;
  // Neuron 0 contributes 2/2 = 1; scaling by 3 adds 2.
  CHECK(forward(scaled, g, 0) == doctest::Approx(base + 2.0));
  scaled = m;
  scaled.W *= 0.25;
  CHECK((forward(scaled, g, 0) > 0) == (base > 0));
}

TEST_CASE("zero noise orthogonal patterns: activation equals the argmax pattern's inner product")
{
  Rng rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = 4;
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(d, d);
  for (int mask = 1; mask < (1 << d); ++mask) {
    std::vector<int> present;
    for (int i = 0; i < d; ++i)
      if (mask & (1 << i)) present.push_back(i);
    Eigen::MatrixXd x(d, static_cast<Eigen::Index>(present.size()));
    for (std::size_t j = 0; j < present.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = P.col(present[j]);
    Eigen::VectorXd w(d);
    for (int i = 0; i < d; ++i) w[i] = normal(rng);
    double best = 0.0;
    for (int i : present) best = std::max(best, w.dot(P.col(i)));
    CHECK(aggregate(w, x).activation == doctest::Approx(best));
  }
}

TEST_CASE("checkpoint round trip")
{
  Eigen::MatrixXd W(3, 2);
  W << 0.1, -2.0 / 3.0, 1e-17, 5, 7, -0.3;
  Model m(W, Eigen::Vector2d(-1, 1), NormMode::OverK, 0.1);
  m.alive[0] = false;
  std::stringstream buf;
  save_checkpoint(m, buf);
  const auto back = load_checkpoint(buf);
  CHECK(back.W == m.W);
  CHECK(back.b == m.b);
  CHECK((back.alive == m.alive).all());
  CHECK(back.norm == NormMode::OverK);
}

TEST_CASE("invalid signs are rejected")
{
  CHECK_THROWS_AS(Model(Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Constant(1, 0.5)), Error);
}
