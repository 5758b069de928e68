#include "sgnn/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <ostream>
#include <tuple>

namespace sgnn {

std::string_view to_string(ExperimentKind v) noexcept
{
  switch (v) {
    case ExperimentKind::PhaseTransition: return "phase_transition";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::JointGrid: return "joint_grid";
    case ExperimentKind::PruneCompare: break;
  }
  return "prune_compare";
}

std::string_view to_string(SweepParam v) noexcept
{
  switch (v) {
    case SweepParam::Alpha: return "alpha";
    case SweepParam::Beta: return "beta";
    case SweepParam::R: return "r";
    case SweepParam::K: return "K";
    case SweepParam::Sigma: return "sigma";
    case SweepParam::D: return "D";
    case SweepParam::StepSize: break;
  }
  return "c_eta";
}

std::string_view to_string(PruneArm v) noexcept
{
  switch (v) {
    case PruneArm::None: return "none";
    case PruneArm::Magnitude: return "magnitude";
    case PruneArm::Random: break;
  }
  return "random";
}

ExperimentKind parse_experiment(std::string_view text)
{
  for (auto k : {ExperimentKind::PhaseTransition, ExperimentKind::Convergence, ExperimentKind::JointGrid,
                 ExperimentKind::PruneCompare})
    if (to_string(k) == text) return k;
  throw Error("unknown experiment '" + std::string(text) + "'");
}

SweepParam parse_sweep_param(std::string_view text)
{
  for (auto p : {SweepParam::Alpha, SweepParam::Beta, SweepParam::R, SweepParam::K, SweepParam::Sigma, SweepParam::D,
                 SweepParam::StepSize})
    if (to_string(p) == text) return p;
  throw Error("unknown sweep parameter '" + std::string(text) + "'");
}

void SweepSpec::check() const
{
  if (grid.empty()) throw Error("sweep grid is empty");
  if (kind == ExperimentKind::JointGrid && grid2.empty()) throw Error("joint grid needs a second nonempty grid");
  if (trials < 1) throw Error("trials must be >= 1");
  if (d_min < 1 || d_max < d_min) throw Error("invalid |D| search range");
  if (!(success_target > 0.0 && success_target <= 1.0)) throw Error("success target must lie in (0, 1]");
  if (alpha_target && !(*alpha_target > 0.0 && *alpha_target <= 1.0)) throw Error("alpha target must lie in (0, 1]");
  gen.check();
  train.check();
}

LinearFit fit_line(std::vector<double> x, std::vector<double> y, std::string predictor, std::string response)
{
  LinearFit f;
  f.predictor = std::move(predictor);
  f.response = std::move(response);
  f.x = std::move(x);
  f.y = std::move(y);
  const auto n = static_cast<Eigen::Index>(f.x.size());
  if (n < 2 || f.y.size() != f.x.size()) return f;
  const Eigen::Map<const Eigen::VectorXd> xs(f.x.data(), n);
  const Eigen::Map<const Eigen::VectorXd> ys(f.y.data(), n);
  const Eigen::VectorXd cx = xs.array() - xs.mean();
  const Eigen::VectorXd cy = ys.array() - ys.mean();
  const double sxx = cx.squaredNorm();
  if (sxx == 0.0) return f;
  f.slope = cx.dot(cy) / sxx;
  f.intercept = ys.mean() - f.slope * xs.mean();
  const double sst = cy.squaredNorm();
  const double sse = (ys.array() - (f.intercept + f.slope * xs.array())).matrix().squaredNorm();
  f.r2 = sst == 0.0 ? 1.0 : std::clamp(1.0 - sse / sst, 0.0, 1.0);
  f.valid = true;
  return f;
}

namespace {

constexpr std::uint64_t data_stream = 0xDA7A;

void apply(SweepParam p, double value, const SweepSpec& spec, Cell& cell)
{
  switch (p) {
    case SweepParam::Alpha: {
      const double gamma = gamma_for_alpha(value, cell.gen.degree, cell.train.sampling.fanout);
      cell.train.sampling.kind = SamplingKind::TwoTier;
      cell.train.sampling.gamma = gamma;
      break;
    }
    case SweepParam::Beta: cell.train.beta = value; break;
    case SweepParam::R: cell.train.sampling.fanout = static_cast<int>(std::lround(value)); break;
    case SweepParam::K: cell.train.width = static_cast<int>(std::lround(value)); break;
    case SweepParam::Sigma: cell.gen.sigma = value; break;
    case SweepParam::D: cell.gen.train_size = static_cast<int>(std::lround(value)); break;
    case SweepParam::StepSize: cell.train.step_size = value; break;
  }
  (void)spec;
}

Cell base_cell(const SweepSpec& spec, int index)
{
  Cell c;
  c.index = index;
  c.gen = spec.gen;
  c.train = spec.train;
  return c;
}

void finish_cell(const SweepSpec& spec, Cell& c)
{
  bool alpha_swept = false;
  for (auto& [p, v] : c.values) alpha_swept |= p == SweepParam::Alpha;
  if (spec.alpha_target && !alpha_swept) {
    c.train.sampling.kind = SamplingKind::TwoTier;
    c.train.sampling.gamma = gamma_for_alpha(*spec.alpha_target, c.gen.degree, c.train.sampling.fanout);
  }
  switch (c.arm) {
    case PruneArm::None: c.train.beta = 0.0; break;
    case PruneArm::Magnitude: c.train.prune_kind = PruneKind::Magnitude; break;
    case PruneArm::Random: c.train.prune_kind = PruneKind::Random; break;
  }
  // Re-apply alpha after a fan-out change so gamma matches the final r.
  for (auto& [p, v] : c.values)
    if (p == SweepParam::Alpha) apply(p, v, spec, c);
  c.gen.check();
  c.train.check();
}

void measure_alpha(const SweepSpec& spec, Cell& c)
{
  GenConfig g = c.gen;
  g.seed = derive_seed(spec.seed, {data_stream, 0});
  g.train_size = std::min(g.train_size, g.n);
  const auto data = generate_graph(generate_patterns(g), g);
  std::vector<NodeId> irrelevant;
  for (NodeId v = 0; v < data.graph.node_count(); ++v)
    if (!is_class_relevant(data.graph.tag(v))) irrelevant.push_back(v);
  Rng rng(derive_seed(spec.seed, {stream::alpha}));
  const auto est = estimate_alpha(c.train.sampling, data.graph, irrelevant, spec.alpha_reps, rng);
  c.alpha_hat = est.mean;
  c.alpha_se = est.std_error;
}

struct TrialData
{
  PatternSet patterns;
  GeneratedData data;
};

TrialData make_data(const SweepSpec& spec, const Cell& cell, int trial, int labeled)
{
  GenConfig g = cell.gen;
  g.seed = derive_seed(spec.seed, {data_stream, static_cast<std::uint64_t>(trial)});
  g.train_size = labeled;
  TrialData t;
  t.patterns = generate_patterns(g);
  t.data = generate_graph(t.patterns, g);
  return t;
}

TrialRecord run_on(const SweepSpec& spec, const Cell& cell, int trial, const TrialData& t,
                   std::span<const NodeId> train, std::span<const NodeId> test)
{
  TrainConfig cfg = cell.train;
  cfg.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(cell.index), static_cast<std::uint64_t>(trial)});
  // Paired arms of a pruning comparison share the trial seed.
  if (spec.kind == ExperimentKind::PruneCompare)
    cfg.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(cell.index / 3), static_cast<std::uint64_t>(trial)});
  TrialRecord rec;
  rec.cell = cell.index;
  rec.trial = trial;
  rec.labeled = static_cast<int>(train.size());
  rec.outcome = run_algorithm1(t.data.graph, train, test, cfg, &t.patterns).outcome;
  return rec;
}

CellSummary summarize(const Cell& cell, int labeled, const std::vector<TrialRecord>& recs)
{
  CellSummary s;
  s.cell = cell.index;
  s.labeled = labeled;
  s.trials = recs.size();
  std::vector<double> iters;
  for (const auto& r : recs) {
    s.success_rate += r.outcome.success;
    s.mean_test_error += r.outcome.test_error;
    if (r.outcome.converged) iters.push_back(r.outcome.iterations);
    else ++s.censored;
  }
  s.success_rate /= static_cast<double>(std::max<std::size_t>(recs.size(), 1));
  s.mean_test_error /= static_cast<double>(std::max<std::size_t>(recs.size(), 1));
  if (!iters.empty()) {
    s.mean_iterations = std::accumulate(iters.begin(), iters.end(), 0.0) / static_cast<double>(iters.size());
    double ss = 0.0;
    for (double v : iters) ss += (v - s.mean_iterations) * (v - s.mean_iterations);
    s.std_iterations = iters.size() > 1 ? std::sqrt(ss / static_cast<double>(iters.size() - 1)) : 0.0;
  }
  s.rate_by_d[labeled] = s.success_rate;
  return s;
}

double cell_value(const Cell& c, SweepParam p)
{
  for (auto& [q, v] : c.values)
    if (q == p) return v;
  return std::nan("");
}

std::string predictor_name(ExperimentKind kind, SweepParam p)
{
  if (kind == ExperimentKind::Convergence) {
    switch (p) {
      case SweepParam::Alpha: return "1/alpha_hat";
      case SweepParam::Beta: return "beta";
      case SweepParam::StepSize: return "1/c_eta";
      default: return std::string(to_string(p));
    }
  }
  switch (p) {
    case SweepParam::Alpha: return "alpha_hat^-2";
    case SweepParam::Beta: return "(1-beta)^2";
    case SweepParam::R: return "r^2";
    case SweepParam::K: return "1/K";
    case SweepParam::Sigma: return "sigma^2";
    default: return std::string(to_string(p));
  }
}

double predictor(ExperimentKind kind, SweepParam p, const Cell& c)
{
  const double v = cell_value(c, p);
  if (kind == ExperimentKind::Convergence) {
    switch (p) {
      case SweepParam::Alpha: return 1.0 / c.alpha_hat;
      case SweepParam::StepSize: return 1.0 / v;
      default: return v;
    }
  }
  switch (p) {
    case SweepParam::Alpha: return 1.0 / (c.alpha_hat * c.alpha_hat);
    case SweepParam::Beta: return (1.0 - v) * (1.0 - v);
    case SweepParam::R: return v * v;
    case SweepParam::K: return 1.0 / v;
    case SweepParam::Sigma: return v * v;
    default: return v;
  }
}

void sort_records(std::vector<TrialRecord>& recs)
{
  std::sort(recs.begin(), recs.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.cell, a.labeled, a.trial) < std::tie(b.cell, b.labeled, b.trial);
  });
}

void log_cell(const Cell& c, const CellSummary& s)
{
  std::cerr << "cell " << c.index;
  for (auto& [p, v] : c.values) std::cerr << ' ' << to_string(p) << '=' << v;
  if (c.values.empty() || c.arm != PruneArm::Magnitude) std::cerr << " arm=" << to_string(c.arm);
  std::cerr << " alpha_hat=" << c.alpha_hat << " D=" << s.labeled << " success=" << s.success_rate
            << " iters=" << s.mean_iterations;
  if (s.threshold) std::cerr << " threshold=" << *s.threshold;
  std::cerr << '\n';
}

}  // namespace

std::vector<Cell> make_cells(const SweepSpec& spec)
{
  std::vector<Cell> cells;
  auto push = [&](std::vector<std::pair<SweepParam, double>> values, PruneArm arm) {
    Cell c = base_cell(spec, static_cast<int>(cells.size()));
    c.values = std::move(values);
    c.arm = arm;
    for (auto& [p, v] : c.values)
      if (p != SweepParam::Alpha) apply(p, v, spec, c);
    finish_cell(spec, c);
    cells.push_back(std::move(c));
  };
  switch (spec.kind) {
    case ExperimentKind::PhaseTransition:
    case ExperimentKind::Convergence:
      for (double v : spec.grid) push({{spec.param, v}}, PruneArm::Magnitude);
      break;
    case ExperimentKind::JointGrid:
      for (double v : spec.grid)
        for (double w : spec.grid2) push({{spec.param, v}, {spec.param2, w}}, PruneArm::Magnitude);
      break;
    case ExperimentKind::PruneCompare:
      for (double v : spec.grid)
        for (auto arm : {PruneArm::None, PruneArm::Magnitude, PruneArm::Random}) {
          std::vector<std::pair<SweepParam, double>> values{{spec.param, v}};
          if (spec.param != SweepParam::Beta) values.emplace_back(SweepParam::Beta, spec.compare_beta);
          push(values, arm);
        }
      break;
  }
  for (auto& c : cells) measure_alpha(spec, c);
  return cells;
}

std::vector<TrialRecord> run_cell(const SweepSpec& spec, const Cell& cell, int labeled)
{
  return parallel_map<TrialRecord>(static_cast<std::size_t>(spec.trials), spec.jobs, [&](std::size_t i) {
    const int trial = static_cast<int>(i);
    const auto t = make_data(spec, cell, trial, labeled);
    return run_on(spec, cell, trial, t, t.data.train.ids, t.data.test.ids);
  });
}

SweepResult phase_transition(const SweepSpec& spec)
{
  spec.check();
  SweepResult res;
  res.spec = spec;
  res.cells = make_cells(spec);
  for (const auto& cell : res.cells) {
    // Graphs are generated once per trial; each |D| re-splits with the same
    // split stream, so labeled sets are nested as |D| grows.
    const auto data = parallel_map<TrialData>(static_cast<std::size_t>(spec.trials), spec.jobs, [&](std::size_t i) {
      return make_data(spec, cell, static_cast<int>(i), spec.d_min);
    });
    CellSummary summary;
    summary.cell = cell.index;
    std::map<int, double>& rates = summary.rate_by_d;
    auto rate = [&](int labeled) {
      if (auto it = rates.find(labeled); it != rates.end()) return it->second;
      auto recs = parallel_map<TrialRecord>(static_cast<std::size_t>(spec.trials), spec.jobs, [&](std::size_t i) {
        const auto& t = data[i];
        Rng split(derive_seed(derive_seed(spec.seed, {data_stream, i}), {stream::split}));
        const auto [train, test] = balanced_split(t.data.graph, labeled, split, t.data.outliers);
        return run_on(spec, cell, static_cast<int>(i), t, train.ids, test.ids);
      });
      double ok = 0;
      for (const auto& r : recs) ok += r.outcome.success;
      const double rt = ok / static_cast<double>(recs.size());
      rates[labeled] = rt;
      res.records.insert(res.records.end(), recs.begin(), recs.end());
      return rt;
    };
    auto search = [&](double target) -> std::optional<int> {
      // Gallop up from d_min, then bisect the last doubling interval.
      int lo = spec.d_min;
      if (rate(lo) >= target) return lo;
      int hi = lo;
      do {
        lo = hi;
        hi = std::min(2 * hi, spec.d_max);
        if (rate(hi) >= target) break;
        if (hi == spec.d_max) return std::nullopt;
      } while (true);
      while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        (rate(mid) >= target ? hi : lo) = mid;
      }
      return hi;
    };
    summary.threshold = search(spec.success_target);
    if (const auto half = search(0.5)) {
      // Interpolate between the last evaluated |D| below 0.5 and the first at or above it.
      auto above = rates.find(*half);
      if (above == rates.begin()) summary.crossing = *half;
      else {
        auto below = std::prev(above);
        const double span = above->second - below->second;
        summary.crossing = span > 0 ? below->first + (0.5 - below->second) / span * (above->first - below->first)
                                    : static_cast<double>(above->first);
      }
    }
    if (summary.threshold) {
      std::vector<TrialRecord> at;
      for (const auto& r : res.records)
        if (r.cell == cell.index && r.labeled == *summary.threshold) at.push_back(r);
      auto s = summarize(cell, *summary.threshold, at);
      summary.labeled = s.labeled;
      summary.trials = s.trials;
      summary.success_rate = s.success_rate;
      summary.mean_test_error = s.mean_test_error;
      summary.mean_iterations = s.mean_iterations;
      summary.std_iterations = s.std_iterations;
      summary.censored = s.censored;
    }
    log_cell(cell, summary);
    res.summaries.push_back(summary);
  }
  sort_records(res.records);

  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < res.cells.size(); ++i)
    if (res.summaries[i].threshold) {
      x.push_back(predictor(spec.kind, spec.param, res.cells[i]));
      y.push_back(*res.summaries[i].threshold);
    }
  res.fits.push_back(fit_line(x, y, predictor_name(spec.kind, spec.param), "threshold_D"));
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < res.cells.size(); ++i)
    if (res.summaries[i].crossing) {
      x.push_back(predictor(spec.kind, spec.param, res.cells[i]));
      y.push_back(*res.summaries[i].crossing);
    }
  res.fits.push_back(fit_line(x, y, predictor_name(spec.kind, spec.param), "crossing_D"));
  return res;
}

namespace {

SweepResult fixed_d_sweep(const SweepSpec& spec)
{
  spec.check();
  SweepResult res;
  res.spec = spec;
  res.cells = make_cells(spec);
  for (const auto& cell : res.cells) {
    auto recs = run_cell(spec, cell, cell.gen.train_size);
    auto s = summarize(cell, cell.gen.train_size, recs);
    log_cell(cell, s);
    res.summaries.push_back(s);
    res.records.insert(res.records.end(), recs.begin(), recs.end());
  }
  sort_records(res.records);
  return res;
}

}  // namespace

SweepResult convergence_sweep(const SweepSpec& spec)
{
  auto res = fixed_d_sweep(spec);
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < res.cells.size(); ++i)
    if (res.summaries[i].censored < res.summaries[i].trials) {
      x.push_back(predictor(spec.kind, spec.param, res.cells[i]));
      y.push_back(res.summaries[i].mean_iterations);
    }
  res.fits.push_back(fit_line(x, y, predictor_name(spec.kind, spec.param), "mean_iterations"));
  return res;
}

SweepResult joint_grid(const SweepSpec& spec) { return fixed_d_sweep(spec); }

SweepResult pruning_comparison(const SweepSpec& spec) { return fixed_d_sweep(spec); }

SweepResult run_sweep(const SweepSpec& spec)
{
  switch (spec.kind) {
    case ExperimentKind::PhaseTransition: return phase_transition(spec);
    case ExperimentKind::Convergence: return convergence_sweep(spec);
    case ExperimentKind::JointGrid: return joint_grid(spec);
    case ExperimentKind::PruneCompare: break;
  }
  return pruning_comparison(spec);
}

namespace {

void write_cell_columns(std::ostream& out, const SweepSpec& spec, const Cell& c)
{
  out << to_string(spec.kind) << ',' << c.index << ',' << to_string(c.arm) << ',' << format_exact(c.alpha_hat) << ','
      << format_exact(c.train.sampling.gamma) << ',' << c.train.sampling.fanout << ','
      << to_string(c.train.sampling.kind) << ',' << format_exact(c.train.beta) << ',' << c.train.width << ','
      << format_exact(c.gen.sigma) << ',' << format_exact(c.train.step_size) << ',' << c.gen.degree << ',' << c.gen.n
      << ',' << c.gen.d << ',' << c.gen.L;
}

constexpr const char* cell_header =
    "experiment,cell,arm,alpha_hat,gamma,r,sampling,beta,K,sigma,c_eta,degree,n,d,L";

}  // namespace

void write_sweep_csv(const SweepResult& result, std::ostream& out)
{
  out << cell_header
      << ",D,trial,seed,success,converged,iterations,test_error,test_hinge,train_hinge,train_error,lucky_init,"
         "lucky_kept,pruned\n";
  for (const auto& r : result.records) {
    write_cell_columns(out, result.spec, result.cells[static_cast<std::size_t>(r.cell)]);
    const auto& o = r.outcome;
    out << ',' << r.labeled << ',' << r.trial << ',' << o.seed << ',' << o.success << ',' << o.converged << ','
        << o.iterations << ',' << format_exact(o.test_error) << ',' << format_exact(o.test_hinge) << ','
        << format_exact(o.train_hinge) << ',' << format_exact(o.train_error) << ',' << o.lucky_init << ','
        << o.lucky_kept << ',' << o.pruned << '\n';
  }
}

void write_summary_csv(const SweepResult& result, std::ostream& out)
{
  out << cell_header
      << ",D,trials,success_rate,mean_test_error,mean_iterations,std_iterations,censored,threshold,crossing\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& s = result.summaries[i];
    write_cell_columns(out, result.spec, result.cells[i]);
    out << ',' << s.labeled << ',' << s.trials << ',' << format_exact(s.success_rate) << ','
        << format_exact(s.mean_test_error) << ',' << format_exact(s.mean_iterations) << ','
        << format_exact(s.std_iterations) << ',' << s.censored << ','
        << (s.threshold ? std::to_string(*s.threshold) : "") << ',' << (s.crossing ? format_exact(*s.crossing) : "")
        << '\n';
  }
}

std::string fit_json(const SweepResult& result)
{
  nlohmann::ordered_json j;
  j["experiment"] = to_string(result.spec.kind);
  j["param"] = to_string(result.spec.param);
  j["grid"] = result.spec.grid;
  if (result.spec.kind == ExperimentKind::JointGrid) {
    j["param2"] = to_string(result.spec.param2);
    j["grid2"] = result.spec.grid2;
  }
  j["trials"] = result.spec.trials;
  j["success_target"] = result.spec.success_target;
  auto cells = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& c = result.cells[i];
    const auto& s = result.summaries[i];
    nlohmann::ordered_json e;
    e["cell"] = c.index;
    for (auto& [p, v] : c.values) e[std::string(to_string(p))] = v;
    e["arm"] = to_string(c.arm);
    e["alpha_hat"] = c.alpha_hat;
    e["alpha_se"] = c.alpha_se;
    e["gamma"] = c.train.sampling.gamma;
    e["D"] = s.labeled;
    e["success_rate"] = s.success_rate;
    e["mean_test_error"] = s.mean_test_error;
    e["mean_iterations"] = s.mean_iterations;
    e["std_iterations"] = s.std_iterations;
    e["censored"] = s.censored;
    e["threshold"] = s.threshold ? nlohmann::ordered_json(*s.threshold) : nlohmann::ordered_json(nullptr);
    e["crossing"] = s.crossing ? nlohmann::ordered_json(*s.crossing) : nlohmann::ordered_json(nullptr);
    cells.push_back(e);
  }
  j["cells"] = cells;
  auto fits = nlohmann::ordered_json::array();
  for (const auto& f : result.fits) {
    nlohmann::ordered_json e;
    e["predictor"] = f.predictor;
    e["response"] = f.response;
    e["x"] = f.x;
    e["y"] = f.y;
    e["slope"] = f.slope;
    e["intercept"] = f.intercept;
    e["r2"] = f.r2;
    e["valid"] = f.valid;
    fits.push_back(e);
  }
  j["fits"] = fits;
  return j.dump(2);
}

}  // namespace sgnn
