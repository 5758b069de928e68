#include "sgnn/analysis.hpp"
#include "sgnn/synth.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <sstream>

using namespace sgnn;

namespace {

PatternSet basis(int d, int L)
{
  PatternSet p;
  p.patterns = Eigen::MatrixXd::Identity(d, L);
  return p;
}

Model single(const Eigen::VectorXd& w, double sign)
{
  return Model(w, Eigen::VectorXd::Constant(1, sign));
}

}  // namespace

TEST_CASE("lucky test on hand-built neurons")
{
  const auto p = basis(5, 5);
  CHECK(is_lucky(p.positive(), 1, p, 0.0));
  CHECK(is_lucky(p.negative(), -1, p, 0.0));
  CHECK_FALSE(is_lucky(p.positive(), -1, p, 0.0));
  CHECK(is_lucky(p.positive(), 1, p, 0.3));
  // Margin 1 against slack 2 sigma |w| = 1.2.
  CHECK_FALSE(is_lucky(p.positive(), 1, p, 0.6));

  Eigen::VectorXd w = p.positive() + 0.5 * p.patterns.col(3);
  CHECK(is_lucky(w, 1, p, 0.0));
  // 1 - 2 * 0.5 * sqrt(1.25) < 0.5
  CHECK_FALSE(is_lucky(w, 1, p, 0.5));
  CHECK_FALSE(is_lucky(Eigen::VectorXd(-p.positive()), 1, p, 0.0));
}

TEST_CASE("noiseless lucky sets coincide with the pattern argmax")
{
  Rng rng(17);
  const auto p = generate_patterns(12, 8, PatternMode::Relaxed, rng);
  const auto m = [&] {
    Eigen::MatrixXd W(12, 400);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = n(rng);
    Eigen::VectorXd b(400);
    for (Eigen::Index k = 0; k < 400; ++k) b[k] = k % 2 ? -1.0 : 1.0;
    return Model(W, b);
  }();
  const auto report = detect_lucky(m, p, 0.0);
  std::vector<Eigen::Index> expected_pos;
  std::vector<Eigen::Index> expected_neg;
  for (Eigen::Index k = 0; k < 400; ++k) {
    const Eigen::VectorXd proj = p.patterns.transpose() * m.W.col(k);
    Eigen::Index arg = 0;
    proj.maxCoeff(&arg);
    if (m.b[k] > 0 && arg == 0 && proj[0] > 0) expected_pos.push_back(k);
    if (m.b[k] < 0 && arg == 1 && proj[1] > 0) expected_neg.push_back(k);
  }
  CHECK(report.positive == expected_pos);
  CHECK(report.negative == expected_neg);
  CHECK(report.width == 400);
  CHECK(report.fraction_positive == doctest::Approx(static_cast<double>(expected_pos.size()) / 400.0));
}

TEST_CASE("lucky bounds")
{
  CHECK(epsilon_K(10, 1e4, 10) == doctest::Approx(std::sqrt(100 * std::log(10.0) / 1e4)));
  CHECK(coarse_lucky_bound(10, 1e4, 0.02) == doctest::Approx((1 - 0.01 - 0.2) / 10));
  CHECK(lucky_fraction_bound(10, 0.1, 0.02) == doctest::Approx((1 - 0.1 - 0.2 / M_PI) / 10));
}

TEST_CASE("scatter rows")
{
  const auto p = basis(4, 4);
  Eigen::MatrixXd W(4, 3);
  W.col(0) = 2.0 * p.positive();
  W.col(1) = p.patterns.col(2);
  W.col(2) = p.positive() + p.negative();
  Eigen::VectorXd b(3);
  b << 1, -1, 1;
  Model m(W, b);
  m.alive[1] = false;
  auto rows = neuron_scatter(m, p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].neuron == 0);
  CHECK(rows[0].norm == doctest::Approx(2.0));
  CHECK(rows[0].angle_positive == doctest::Approx(0.0));
  CHECK(rows[0].angle_negative == doctest::Approx(90.0));
  CHECK(rows[1].neuron == 2);
  CHECK(rows[1].angle_positive == doctest::Approx(45.0));

  m.alive[1] = true;
  rows = neuron_scatter(m, p);
  CHECK(rows[1].angle_positive == doctest::Approx(90.0));
  CHECK(rows[1].sign == -1);
  std::ostringstream out;
  write_scatter_csv(rows, out);
  const auto text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("spearman against reference values")
{
  CHECK(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}) == doctest::Approx(0.8207826816681233));
  CHECK(spearman({0.3, 1.2, -0.5, 2.2, 0.9, 0.9}, {1, 3, 0, 2, 5, 4}) == doctest::Approx(0.4638168285219587));
  CHECK(spearman({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
}

TEST_CASE("a lucky neuron gains exactly c_eta per step on noiseless data")
{
  GenConfig g;
  g.n = 300;
  g.d = 8;
  g.L = 6;
  g.degree = 5;
  g.sigma = 0.0;
  g.noise = NoiseMode::None;
  g.pattern_mode = PatternMode::Orthogonal;
  g.train_size = 40;
  g.seed = 4;
  const auto patterns = generate_patterns(g);
  const auto data = generate_graph(patterns, g);
  TrainConfig cfg;
  cfg.sampling.kind = SamplingKind::Full;
  cfg.step_size = 0.05;
  cfg.init_scale = 0.1;
  cfg.width = 60;
  cfg.stop = StopRule::MaxIters;
  cfg.max_iters = 12;
  cfg.seed = 8;
  ProjectionTrace trace;
  const auto res = run_algorithm1(data.graph, data.train.ids, data.test.ids, cfg, &patterns,
                                  projection_hook(trace, patterns));
  REQUIRE(trace.size() == 13);
  CHECK(trace.phases.front() == TrainPhase::Retrain);
  const auto report = detect_lucky(res.model, patterns, 0.0);
  REQUIRE_FALSE(report.positive.empty());

  int checked = 0;
  for (auto k : report.positive) {
    if (!is_lucky(Eigen::VectorXd(res.model.initial_weights().col(k)), 1, patterns, 0.0)) continue;
    for (std::size_t t = 1; t < trace.size(); ++t)
      CHECK(trace.values[t](k, 0) - trace.values[t - 1](k, 0) == doctest::Approx(cfg.step_size));
    ++checked;
  }
  CHECK(checked > 0);
  const auto growth = check_lucky_growth(trace, report.positive, cfg.step_size, 1.0, 1, 0.5);
  CHECK(growth.ok);

  std::ostringstream csv;
  trace.write_csv(csv);
  CHECK(csv.str().rfind("phase,t,neuron,sign,pattern,value\n", 0) == 0);
}

TEST_CASE("shattering system matrix")
{
  Eigen::MatrixXd two(2, 2);
  two << 0, 1, 1, 0;
  CHECK(vc_system_matrix(2) == two);
  for (int m = 2; m <= 8; ++m) {
    const double det = vc_system_matrix(m).determinant();
    CHECK(det == doctest::Approx(std::pow(-1.0, m - 1) * (m - 1)));
  }
}

TEST_CASE("shattering construction")
{
  SUBCASE("L = 4")
  {
    const auto vc = vc_construct(4, {1, -1});
    CHECK(vc.points == 2);
    CHECK(vc.coefficients[0] == doctest::Approx(1.0));
    CHECK(vc.coefficients[1] == doctest::Approx(-1.0));
    CHECK(vc_realizes(vc, {1, -1}));
    CHECK_FALSE(vc_realizes(vc, {-1, 1}));
  }
  SUBCASE("L = 6, all positive")
  {
    const auto vc = vc_construct(6, {1, 1, 1, 1});
    REQUIRE(vc.coefficients.size() == 4);
    for (Eigen::Index j = 0; j < 4; ++j) CHECK(vc.coefficients[j] == doctest::Approx(1.0 / 3.0));
    CHECK(vc_realizes(vc, {1, 1, 1, 1}));
  }
  SUBCASE("tampered weights are rejected")
  {
    auto vc = vc_construct(4, {1, -1});
    // Negating alpha_0 swaps the roles of w_0 and u_0.
    vc.model.W.col(0).swap(vc.model.W.col(2));
    CHECK_FALSE(vc_realizes(vc, {1, -1}));
  }
  SUBCASE("invalid inputs")
  {
    CHECK_THROWS_AS(vc_construct(5, {1, 1}), Error);
    CHECK_THROWS_AS(vc_construct(4, {1, 1, 1}), Error);
    CHECK_THROWS_AS(vc_construct(10, std::vector<int>(16, 1)), Error);
  }
}

TEST_CASE("exhaustive shattering check")
{
  const auto four = vc_verify(4);
  CHECK(four.verified);
  CHECK(four.points == 2);
  CHECK(four.labelings == 4);
  CHECK(four.realized == 4);
  const auto six = vc_verify(6);
  CHECK(six.verified);
  CHECK(six.labelings == 16);
  const auto eight = vc_verify(8);
  CHECK(eight.verified);
  CHECK(eight.labelings == 256);
  // With the center's p+ in every weight the output is constant across points.
  CHECK_FALSE(vc_verify(6, true).verified);
}

namespace {

GenConfig desk_data(int labeled, std::uint64_t seed)
{
  GenConfig g;
  g.n = 2000;
  g.d = 30;
  g.L = 30;
  g.degree = 10;
  g.sigma = 0.1;
  g.train_size = labeled;
  g.seed = seed;
  return g;
}

}  // namespace

TEST_CASE("after training, small-norm neurons point away from the class patterns")
{
  double total = 0.0;
  for (std::uint64_t t = 0; t < 3; ++t) {
    const auto g = desk_data(100, 100 + t);
    const auto patterns = generate_patterns(g);
    const auto data = generate_graph(patterns, g);
    TrainConfig c;
    c.step_size = 0.1;
    c.init_scale = 0.01;
    c.sampling.fanout = 5;
    c.seed = 7 + t;
    const auto res = run_algorithm1(data.graph, data.train.ids, data.test.ids, c, &patterns);
    REQUIRE(res.outcome.success);
    std::vector<double> norm;
    std::vector<double> closeness;
    for (const auto& r : neuron_scatter(res.model, patterns)) {
      norm.push_back(r.norm);
      closeness.push_back(-(r.sign > 0 ? r.angle_positive : r.angle_negative));
    }
    const double rho = spearman(norm, closeness);
    CHECK(rho >= 0.5);
    total += rho;
  }
  CHECK(total / 3 >= 0.5);
}

TEST_CASE("irrelevant-pattern drift slows like 1/sqrt(|D|)")
{
  const int T = 20;
  auto slope = [&](int labeled) {
    double total = 0.0;
    for (std::uint64_t t = 0; t < 50; ++t) {
      const auto g = desk_data(labeled, 500 + t);
      const auto patterns = generate_patterns(g);
      const auto data = generate_graph(patterns, g);
      TrainConfig c;
      c.step_size = 0.1;
      c.init_scale = 0.01;
      c.sampling.kind = SamplingKind::Full;
      c.stop = StopRule::MaxIters;
      c.max_iters = T;
      c.seed = 900 + t;
      ProjectionTrace trace;
      run_algorithm1(data.graph, data.train.ids, data.test.ids, c, &patterns, projection_hook(trace, patterns));
      const Eigen::MatrixXd moved = (trace.values.back() - trace.values.front()).rightCols(patterns.count() - 2);
      total += moved.cwiseAbs().mean() / T;
    }
    return total / 50;
  };
  const double ratio = slope(200) / slope(50);
  CHECK(ratio >= 0.3);
  CHECK(ratio <= 0.7);
}
