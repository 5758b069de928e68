#pragma once

#include "sgnn/synth.hpp"
#include "sgnn/trainer.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sgnn {

enum class ExperimentKind : std::uint8_t { PhaseTransition, Convergence, JointGrid, PruneCompare };
/// Parameters a sweep can vary. Alpha is realized through the two-tier
/// sampler's gamma; StepSize scales c_eta and leaves delta alone.
enum class SweepParam : std::uint8_t { Alpha, Beta, R, K, Sigma, D, StepSize };
enum class PruneArm : std::uint8_t { None, Magnitude, Random };

std::string_view to_string(ExperimentKind v) noexcept;
std::string_view to_string(SweepParam v) noexcept;
std::string_view to_string(PruneArm v) noexcept;
ExperimentKind parse_experiment(std::string_view text);
SweepParam parse_sweep_param(std::string_view text);

struct SweepSpec
{
  ExperimentKind kind = ExperimentKind::PhaseTransition;
  GenConfig gen;
  TrainConfig train;
  SweepParam param = SweepParam::Alpha;
  std::vector<double> grid;
  /// Second axis of joint_grid (columns).
  SweepParam param2 = SweepParam::Beta;
  std::vector<double> grid2;
  /// prune_compare: pruning rate shared by the pruned arms.
  double compare_beta = 0.5;
  int trials = 100;
  /// Phase-transition search range for |D|.
  int d_min = 2;
  int d_max = 400;
  double success_target = 0.95;
  /// When set, the two-tier gamma of every cell is chosen to realize this alpha
  /// (used by fan-out sweeps at fixed alpha).
  std::optional<double> alpha_target;
  /// Sampling repetitions per irrelevant node when measuring alpha.
  int alpha_reps = 10;
  std::uint64_t seed = 1;
  int jobs = 1;

  void check() const;
};

/// One trial of one cell.
struct TrialRecord
{
  int cell = 0;
  int trial = 0;
  int labeled = 0;  // |D|
  TrialOutcome outcome;
};

struct Cell
{
  int index = 0;
  std::vector<std::pair<SweepParam, double>> values;
  PruneArm arm = PruneArm::Magnitude;
  GenConfig gen;
  TrainConfig train;
  double alpha_hat = 0.0;  // measured over irrelevant nodes
  double alpha_se = 0.0;
};

struct CellSummary
{
  int cell = 0;
  int labeled = 0;  // fixed |D| of the cell, or the 0.95 threshold
  std::size_t trials = 0;
  double success_rate = 0.0;
  double mean_test_error = 0.0;
  double mean_iterations = 0.0;  // over converged trials
  double std_iterations = 0.0;
  std::size_t censored = 0;       // trials that hit T_max
  std::optional<int> threshold;   // smallest |D| with success >= target
  std::optional<double> crossing;  // interpolated |D| where success crosses 0.5
  std::map<int, double> rate_by_d;  // evaluated |D| -> success rate
};

struct LinearFit
{
  std::string predictor;
  std::string response;
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool valid = false;
};

LinearFit fit_line(std::vector<double> x, std::vector<double> y, std::string predictor = "x",
                   std::string response = "y");

struct SweepResult
{
  SweepSpec spec;
  std::vector<Cell> cells;
  std::vector<CellSummary> summaries;
  std::vector<TrialRecord> records;  // sorted by (cell, |D|, trial)
  std::vector<LinearFit> fits;
};

/// Cell parameterization applied to copies of the base configs.
std::vector<Cell> make_cells(const SweepSpec& spec);

/// Runs `spec.trials` seeded trials of a cell at |D| = labeled. Trial seeds are
/// derive_seed(spec.seed, {cell, trial}); the data seed of a trial is shared by
/// every cell so cells compare on common graphs.
std::vector<TrialRecord> run_cell(const SweepSpec& spec, const Cell& cell, int labeled);

SweepResult phase_transition(const SweepSpec& spec);
SweepResult convergence_sweep(const SweepSpec& spec);
SweepResult joint_grid(const SweepSpec& spec);
SweepResult pruning_comparison(const SweepSpec& spec);
SweepResult run_sweep(const SweepSpec& spec);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
void write_summary_csv(const SweepResult& result, std::ostream& out);
std::string fit_json(const SweepResult& result);

/// Runs `count` jobs f(i) on up to `jobs` threads; results are stored by index.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t count, int jobs, F&& f);

}  // namespace sgnn

#include "sgnn/detail/parallel.hpp"
