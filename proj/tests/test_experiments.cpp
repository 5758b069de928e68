#include "sgnn/config.hpp"
#include "sgnn/experiments.hpp"

#include <doctest.h>

#include <sstream>

using namespace sgnn;

namespace {

SweepSpec tiny(ExperimentKind kind, SweepParam param, std::vector<double> grid)
{
  SweepSpec s;
  s.kind = kind;
  s.param = param;
  s.grid = std::move(grid);
  s.gen.n = 300;
  s.gen.d = 10;
  s.gen.L = 8;
  s.gen.degree = 8;
  s.gen.sigma = 0.1;
  s.gen.train_size = 20;
  s.train.width = 40;
  s.train.step_size = 0.1;
  s.train.init_scale = 0.01;
  s.train.sampling.fanout = 4;
  s.trials = 4;
  s.d_max = 64;
  s.alpha_reps = 2;
  s.seed = 99;
  return s;
}

std::string csv(const SweepResult& r)
{
  std::ostringstream out;
  write_sweep_csv(r, out);
  return out.str();
}

}  // namespace

TEST_CASE("least-squares line")
{
  const auto f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(f.valid);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  // numpy.polyfit([0, 1, 2, 3], [1, 3, 2, 5], 1) -> 1.1, 1.1; R^2 = 0.6914285714285713
  const auto g = fit_line({0, 1, 2, 3}, {1, 3, 2, 5});
  CHECK(g.slope == doctest::Approx(1.1));
  CHECK(g.intercept == doctest::Approx(1.1));
  CHECK(g.r2 == doctest::Approx(0.6914285714285713));
  CHECK_FALSE(fit_line({1}, {1}).valid);
  CHECK_FALSE(fit_line({2, 2}, {1, 3}).valid);
}

TEST_CASE("cells realize alpha through gamma")
{
  auto s = tiny(ExperimentKind::Convergence, SweepParam::Alpha, {0.6, 1.0});
  const auto cells = make_cells(s);
  REQUIRE(cells.size() == 2);
  for (const auto& c : cells) {
    CHECK(c.train.sampling.kind == SamplingKind::TwoTier);
    CHECK(two_tier_single_alpha(c.train.sampling.gamma, s.gen.degree, s.train.sampling.fanout) ==
          doctest::Approx(c.values[0].second));
  }
  CHECK(cells[0].alpha_hat < cells[1].alpha_hat);
  CHECK(cells[1].alpha_hat == doctest::Approx(1.0));
}

TEST_CASE("fan-out cells keep the target alpha")
{
  auto s = tiny(ExperimentKind::Convergence, SweepParam::R, {2, 3, 4, 7});
  s.alpha_target = 0.7;
  const auto cells = make_cells(s);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(two_tier_single_alpha(cells[i].train.sampling.gamma, s.gen.degree, cells[i].train.sampling.fanout) ==
          doctest::Approx(0.7));
  // Uniform sampling already exceeds the target at r = 7 of 8; gamma stays at 1.
  CHECK(cells[3].train.sampling.gamma == 1.0);
}

TEST_CASE("sweeps are reproducible and independent of the thread count")
{
  auto s = tiny(ExperimentKind::Convergence, SweepParam::Beta, {0.0, 0.4});
  s.jobs = 1;
  const auto a = run_sweep(s);
  s.jobs = 3;
  const auto b = run_sweep(s);
  CHECK(csv(a) == csv(b));
  CHECK(fit_json(a) == fit_json(b));
  CHECK(a.records.size() == 8);
  CHECK(a.cells[0].alpha_hat == a.cells[1].alpha_hat);

  // Every row carries the cell parameters.
  std::istringstream in(csv(a));
  std::string header;
  std::getline(in, header);
  const auto columns = std::count(header.begin(), header.end(), ',');
  std::string line;
  while (std::getline(in, line)) CHECK(std::count(line.begin(), line.end(), ',') == columns);
  CHECK(header.find("beta") != std::string::npos);
  CHECK(header.find("alpha_hat") != std::string::npos);
}

TEST_CASE("phase transition search")
{
  auto s = tiny(ExperimentKind::PhaseTransition, SweepParam::Alpha, {1.0});
  const auto r = run_sweep(s);
  REQUIRE(r.summaries.size() == 1);
  const auto& sum = r.summaries[0];
  REQUIRE(sum.threshold);
  CHECK(sum.rate_by_d.at(*sum.threshold) >= s.success_target);
  for (auto [d, rate] : sum.rate_by_d)
    if (d < *sum.threshold && sum.rate_by_d.count(d)) CHECK((rate < s.success_target || d < s.d_min));
  // Nested labeled sets keep the evaluated rates from collapsing as |D| grows.
  double best = 0.0;
  for (auto [d, rate] : sum.rate_by_d) {
    best = std::max(best, rate);
    CHECK(rate >= best - 0.5);
  }
  CHECK(r.fits.size() == 2);
}

TEST_CASE("pruning arms coincide when nothing is pruned")
{
  auto s = tiny(ExperimentKind::PruneCompare, SweepParam::D, {20});
  s.compare_beta = 0.0;
  const auto r = run_sweep(s);
  REQUIRE(r.cells.size() == 3);
  for (int t = 0; t < s.trials; ++t) {
    const auto& none = r.records[static_cast<std::size_t>(t)].outcome;
    for (int arm = 1; arm < 3; ++arm) {
      const auto& other = r.records[static_cast<std::size_t>(arm * s.trials + t)].outcome;
      CHECK(other.iterations == none.iterations);
      CHECK(other.test_error == none.test_error);
    }
  }
}

TEST_CASE("sweep validation")
{
  auto s = tiny(ExperimentKind::Convergence, SweepParam::Beta, {});
  CHECK_THROWS_AS(run_sweep(s), Error);
  s.grid = {0.2};
  s.kind = ExperimentKind::JointGrid;
  CHECK_THROWS_AS(run_sweep(s), Error);
  CHECK_THROWS_AS(parse_experiment("spiral"), Error);
  CHECK(parse_sweep_param("c_eta") == SweepParam::StepSize);
}

TEST_CASE("config files and overrides")
{
  std::istringstream in("# desk run\nseed = 7\ngen.sigma = 0.05  # quiet\n\ntrain.beta=0.3\nsweep.grid = 0.4, 0.7,1\n");
  const auto file = ConfigFile::parse(in);
  Settings s;
  s.apply(file);
  s.set("train.width", "64");
  s.finalize();
  CHECK(s.seed == 7);
  CHECK(s.gen.sigma == 0.05);
  CHECK(s.train.beta == 0.3);
  CHECK(s.train.width == 64);
  CHECK(s.sweep.grid == std::vector<double>{0.4, 0.7, 1.0});
  CHECK(s.sweep.train.width == 64);
  CHECK(s.gen.seed == 7);

  SUBCASE("unknown key names the key")
  {
    std::istringstream bad("foo = 1\n");
    Settings t;
    try {
      t.apply(ConfigFile::parse(bad));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("foo") != std::string::npos);
    }
  }
  SUBCASE("bad values and lines")
  {
    Settings t;
    CHECK_THROWS_AS(t.set("gen.n", "many"), Error);
    CHECK_THROWS_AS(t.set("train.stop", "later"), Error);
    std::istringstream noeq("just words\n");
    CHECK_THROWS_AS(ConfigFile::parse(noeq), Error);
  }
  SUBCASE("round trip through the resolved config")
  {
    Settings t;
    for (const auto& [k, v] : s.resolved()) t.set(k, v);
    t.finalize();
    CHECK(t.resolved() == s.resolved());
  }
}

TEST_CASE("manifest hash ignores key order and tracks values")
{
  Settings a;
  a.set("train.beta", "0.4");
  a.set("gen.n", "500");
  Settings b;
  b.set("gen.n", "500");
  b.set("train.beta", "0.4");
  RunManifest ma{"sweep", a.resolved(), 1, {}};
  RunManifest mb{"sweep", b.resolved(), 1, {}};
  CHECK(ma.config_hash() == mb.config_hash());
  b.set("gen.n", "501");
  RunManifest mc{"sweep", b.resolved(), 1, {}};
  CHECK(mc.config_hash() != ma.config_hash());
  CHECK(ma.to_json().find("config_hash") != std::string::npos);
  // Thread count does not enter the hash.
  a.set("sweep.jobs", "8");
  CHECK(RunManifest{"sweep", a.resolved(), 1, {}}.config_hash() == mb.config_hash());
}
