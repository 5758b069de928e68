#include "doctest.h"
#include "fixtures.hpp"
#include "sgnn/sampler.hpp"
#include "sgnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace sgnn;

namespace {

struct Regular
{
  GeneratedData data;
  std::vector<NodeId> irrelevant;
};

// Every irrelevant node has degree 30 with exactly one class-relevant neighbor.
const Regular& regular_graph()
{
  static const Regular fixture = [] {
    GenConfig cfg;
    cfg.n = 2000;
    cfg.d = 8;
    cfg.L = 8;
    cfg.degree = 30;
    cfg.train_size = 10;
    cfg.seed = 5;
    Regular r{generate_graph(generate_patterns(cfg), cfg), {}};
    for (NodeId v = 0; v < r.data.graph.node_count(); ++v)
      if (!is_class_relevant(r.data.graph.tag(v)) && r.irrelevant.size() < 1000) r.irrelevant.push_back(v);
    return r;
  }();
  return fixture;
}

SamplingStrategy uniform(int r)
{
  SamplingStrategy s;
  s.kind = SamplingKind::Uniform;
  s.fanout = r;
  return s;
}

SamplingStrategy two_tier(int r, double gamma)
{
  SamplingStrategy s = uniform(r);
  s.kind = SamplingKind::TwoTier;
  s.gamma = gamma;
  return s;
}

}  // namespace

TEST_CASE("small neighborhoods are kept whole")
{
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 4);
  const auto g = fixtures::untagged_graph(x, {{0, 1}, {0, 2}, {0, 3}});
  Rng rng(1);
  const auto s = sample_neighbors(uniform(20), g, 0, rng);
  CHECK(s.ids == g.neighborhood(0));
}

TEST_CASE("full sampling returns N(v) for every fan-out")
{
  const auto& g = regular_graph().data.graph;
  Rng rng(2);
  SamplingStrategy s = uniform(1);
  s.kind = SamplingKind::Full;
  for (NodeId v : {0, 7, 500}) CHECK(sample_neighbors(s, g, v, rng).ids == g.neighborhood(v));
}

TEST_CASE("uniform samples: self first, r distinct neighbors")
{
  const auto& g = regular_graph().data.graph;
  Rng rng(3);
  for (int r : {1, 5, 29}) {
    for (NodeId v : regular_graph().irrelevant) {
      const auto s = sample_neighbors(uniform(r), g, v, rng);
      REQUIRE(s.ids.size() == static_cast<std::size_t>(r) + 1);
      CHECK(s.ids.front() == v);
      CHECK(std::is_sorted(s.ids.begin() + 1, s.ids.end()));
      CHECK(std::adjacent_find(s.ids.begin() + 1, s.ids.end()) == s.ids.end());
      const auto adj = g.neighbors(v);
      for (auto it = s.ids.begin() + 1; it != s.ids.end(); ++it) CHECK(std::binary_search(adj.begin(), adj.end(), *it));
      if (v > 100) break;
    }
  }
}

TEST_CASE("strategy validation")
{
  SamplingStrategy s;
  s.fanout = 0;
  CHECK_THROWS_AS(s.check(), Error);
  s = two_tier(3, 0.5);
  CHECK_THROWS_AS(s.check(), Error);
  s = two_tier(3, 2.0);
  s.lambda = 1.5;
  CHECK_THROWS_AS(s.check(), Error);
}

TEST_CASE("full sampling on a valid graph has alpha one")
{
  const auto& r = regular_graph();
  Rng rng(4);
  SamplingStrategy s = uniform(1);
  s.kind = SamplingKind::Full;
  std::vector<NodeId> all(static_cast<std::size_t>(r.data.graph.node_count()));
  std::iota(all.begin(), all.end(), 0);
  CHECK(estimate_alpha(s, r.data.graph, all, 1, rng).mean == 1.0);
}

TEST_CASE("uniform alpha matches r/R")
{
  const auto& r = regular_graph();
  Rng rng(5);
  for (int fanout : {1, 5, 10}) {
    const auto est = estimate_alpha(uniform(fanout), r.data.graph, r.irrelevant, 100, rng);
    CHECK(est.samples == 100000);
    const double expected = fanout / 30.0;
    CHECK(std::abs(est.mean - expected) <= 3 * est.std_error);
    const auto bracket = alpha_bound_uniform(1, 30, fanout);
    CHECK(est.mean >= bracket.lower - 3 * est.std_error);
    CHECK(est.mean <= bracket.upper + 3 * est.std_error);
  }
}

TEST_CASE("two-tier alpha dominates uniform and follows its closed form")
{
  const auto& r = regular_graph();
  Rng rng(6);
  for (int fanout : {1, 5}) {
    const auto base = estimate_alpha(uniform(fanout), r.data.graph, r.irrelevant, 50, rng);
    for (double gamma : {1.0, 3.0}) {
      const auto est = estimate_alpha(two_tier(fanout, gamma), r.data.graph, r.irrelevant, 50, rng);
      CHECK(est.mean >= base.mean - 3 * std::hypot(est.std_error, base.std_error));
      CHECK(std::abs(est.mean - two_tier_single_alpha(gamma, 30, fanout)) <= 3 * est.std_error + 1e-12);
    }
  }
}

TEST_CASE("two-tier alpha tends to one as gamma grows")
{
  const auto& r = regular_graph();
  Rng rng(7);
  const auto est = estimate_alpha(two_tier(1, 1e6), r.data.graph, r.irrelevant, 20, rng);
  CHECK(est.mean >= 0.999);
}

TEST_CASE("two-tier ordinary neighbors are included gamma times less often")
{
  const auto& r = regular_graph();
  const auto& g = r.data.graph;
  Rng rng(8);
  const double gamma = 4.0;
  const int fanout = 6;
  double important = 0;
  double ordinary = 0;
  const int reps = 20000;
  const NodeId v = r.irrelevant.front();
  for (int t = 0; t < reps; ++t)
    for (NodeId u : sample_neighbors(two_tier(fanout, gamma), g, v, rng).ids)
      if (u != v) (is_class_relevant(g.tag(u)) ? important : ordinary) += 1;
  const double p_imp = important / reps;
  const double p_ord = ordinary / reps / 29.0;
  CHECK(p_imp / p_ord == doctest::Approx(gamma).epsilon(0.05));
}

TEST_CASE("lambda promotes irrelevant neighbors into the important tier")
{
  const auto& r = regular_graph();
  SamplingStrategy s = two_tier(5, 3.0);
  s.important = ImportantSet::RelevantPlusLambda;
  s.lambda = 0.0;
  std::size_t promoted = 0;
  for (NodeId v : r.irrelevant) promoted += s.is_important(r.data.graph, v);
  CHECK(promoted == 0);
  s.lambda = 0.3;
  for (NodeId v : r.irrelevant) promoted += s.is_important(r.data.graph, v);
  CHECK(promoted / 1000.0 == doctest::Approx(0.3).epsilon(0.2));
}

TEST_CASE("untagged graphs cannot estimate alpha")
{
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  const auto g = fixtures::untagged_graph(x, {{0, 1}});
  Rng rng(9);
  const std::vector<NodeId> nodes{0};
  CHECK_THROWS_AS(estimate_alpha(uniform(1), g, nodes, 1, rng), Error);
}

TEST_CASE("uniform alpha bracket")
{
  const auto b = alpha_bound_uniform(1, 30, 30);
  CHECK(b.lower == doctest::Approx(1.0 - std::pow(29.0 / 30.0, 30.0)));
  CHECK(b.lower == doctest::Approx(0.6383).epsilon(1e-3));
  CHECK(b.upper == doctest::Approx(1.0));
  const auto none = alpha_bound_uniform(1, 30, 0);
  CHECK(none.lower == 0.0);
  CHECK(none.upper == 0.0);
  const auto all = alpha_bound_uniform(12, 12, 3);
  CHECK(all.lower == 1.0);
  CHECK(all.upper == 1.0);
  CHECK_THROWS_AS(alpha_bound_uniform(31, 30, 2), Error);
}

TEST_CASE("importance bounds")
{
  const auto imp = alpha_bound_importance(3, 30, 2);
  CHECK(imp.exact == doctest::Approx(6.0 / 31.0));
  CHECK(imp.large_R == doctest::Approx(6.0 / 30.0));
  for (double lambda : {0.0, 0.4, 1.0})
    CHECK(alpha_bound_partial(1, lambda, 30, 4).exact == doctest::Approx(4.0 / 27.0));
  CHECK(alpha_bound_partial(3, 1, 30, 2).exact == doctest::Approx(6.0 / (90.0 - 2.0 + 3.0)));
  CHECK(alpha_bound_partial(3, 0, 30, 2).exact == doctest::Approx(imp.exact));
  CHECK_THROWS_AS(alpha_bound_importance(0.9, 30, 2), Error);
  CHECK_THROWS_AS(alpha_bound_partial(2, -0.1, 30, 2), Error);
}

TEST_CASE("gamma inversion")
{
  for (double alpha : {0.2, 0.5, 0.8}) {
    const double gamma = gamma_for_alpha(alpha, 30, 5);
    CHECK(two_tier_single_alpha(gamma, 30, 5) == doctest::Approx(alpha));
  }
  CHECK(gamma_for_alpha(0.1, 30, 5) == 1.0);
  CHECK(two_tier_single_alpha(gamma_for_alpha(1.0, 30, 5), 30, 5) == doctest::Approx(1.0));
}
