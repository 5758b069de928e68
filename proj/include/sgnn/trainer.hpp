#pragma once

#include "sgnn/graph.hpp"
#include "sgnn/model.hpp"
#include "sgnn/rng.hpp"
#include "sgnn/sampler.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sgnn {

enum class BatchMode : std::uint8_t { Full, Disjoint };
enum class StopRule : std::uint8_t { ZeroTrainHinge, ZeroTrainError, MaxIters };
enum class PruneMode : std::uint8_t { PerClass, Global };
enum class PruneKind : std::uint8_t { Magnitude, Random };
/// PerNeuron: w_k += c * b_k * (mean_{D+} x_{n*(v,k)} - mean_{D-} x_{n*(v,k)}),
/// the gradient direction without the 1/Z output scale and with the two
/// classes weighted equally. Gradient: w -= c * grad.
enum class StepRule : std::uint8_t { PerNeuron, Gradient };

std::string_view to_string(BatchMode v) noexcept;
std::string_view to_string(StopRule v) noexcept;
std::string_view to_string(PruneMode v) noexcept;
std::string_view to_string(PruneKind v) noexcept;
std::string_view to_string(StepRule v) noexcept;
BatchMode parse_batch_mode(std::string_view text);
StopRule parse_stop_rule(std::string_view text);
PruneMode parse_prune_mode(std::string_view text);
PruneKind parse_prune_kind(std::string_view text);
StepRule parse_step_rule(std::string_view text);

struct TrainConfig
{
  double step_size = 1.0;   // c_eta
  double init_scale = 0.1;  // delta
  int width = 100;          // K
  SamplingStrategy sampling;
  double beta = 0.2;
  /// T'; when unset, ceil(max |x_ij| / c_eta).
  std::optional<int> pretrain_iters;
  int max_iters = 500;
  BatchMode batch = BatchMode::Full;
  /// Chunk size of the disjoint batch mode (0: |D| split into T' chunks).
  int batch_size = 0;
  StopRule stop = StopRule::ZeroTrainHinge;
  PruneMode prune_mode = PruneMode::PerClass;
  PruneKind prune_kind = PruneKind::Magnitude;
  StepRule step_rule = StepRule::PerNeuron;
  NormMode norm = NormMode::OverSurviving;
  std::uint64_t seed = 1;

  void check() const;
};

enum class TrainPhase : std::uint8_t { Init, Pretrain, Pruned, Retrain };

/// Observer called after initialization, after every pre-training step (t =
/// 1..T'), after pruning + rewinding (t = 0), and at every re-training
/// iteration t = 0..iterations (t = 0 is the rewound model).
using TrainHook = std::function<void(TrainPhase phase, int t, const Model& model)>;

struct TrialOutcome
{
  bool success = false;
  bool converged = false;
  int iterations = 0;
  int pretrain_iters = 0;
  double test_hinge = 0.0;
  double test_error = 0.0;
  double train_hinge = 0.0;
  double train_error = 0.0;
  int lucky_init = -1;       // lucky neurons at initialization (-1: no patterns)
  int lucky_pretrained = -1;  // lucky neurons after pre-training
  int lucky_kept = -1;       // init-lucky neurons surviving the pruning
  int pruned = 0;
  double seconds = 0.0;  // wall time, never serialized
  std::uint64_t seed = 0;
};

std::string to_json_line(const TrialOutcome& outcome);

/// W ~ N(0, delta^2), b uniform on {-1, +1}, nothing pruned.
Model initialize(int d, int K, double delta, Rng& rng, NormMode norm = NormMode::OverSurviving);

/// ceil(max |x_ij| / c_eta).
int default_pretrain_iters(const StructuredGraph& graph, double step_size);

/// One update on `nodes` with neighborhoods `batch`; pruned columns stay zero.
void sgd_step(Model& model, const StructuredGraph& graph, std::span<const NodeId> nodes,
              const NeighborhoodBatch& batch, const TrainConfig& config);

/// T' steps with freshly sampled neighborhoods (full D, or consecutive
/// disjoint chunks of a shuffled D). Returns the number of steps taken.
int pretrain(Model& model, const StructuredGraph& graph, std::span<const NodeId> labeled, const TrainConfig& config,
             Rng& sampling_rng, const TrainHook& hook = {});

/// Prunes floor(beta * |B_s|) smallest-norm neurons inside each sign class s
/// (PerClass) or floor(beta * K) overall (Global). Ties go to the lowest id.
/// Returns the newly pruned neuron ids in ascending order.
std::vector<Eigen::Index> magnitude_prune(Model& model, double beta, PruneMode mode = PruneMode::PerClass);
/// Same counts as magnitude_prune, neurons chosen uniformly at random.
std::vector<Eigen::Index> random_prune(Model& model, double beta, PruneMode mode, Rng& rng);

/// W <- mask (.) W0.
void rewind(Model& model);

struct RetrainResult
{
  int iterations = 0;
  bool converged = false;
};

/// Masked re-training until the stop rule holds (checked with full
/// neighborhoods over D) or max_iters steps were taken.
RetrainResult retrain(Model& model, const StructuredGraph& graph, std::span<const NodeId> labeled,
                      const TrainConfig& config, Rng& sampling_rng, const TrainHook& hook = {});

/// True when the stop rule is met on D.
bool stop_reached(const Model& model, const StructuredGraph& graph, std::span<const NodeId> labeled, StopRule rule);

struct TrialResult
{
  TrialOutcome outcome;
  Model model;
};

/// initialize -> pretrain -> prune -> rewind -> retrain, then evaluation on
/// `test` with full neighborhoods. `patterns` enables the lucky counts.
TrialResult run_algorithm1(const StructuredGraph& graph, std::span<const NodeId> labeled,
                           std::span<const NodeId> test, const TrainConfig& config,
                           const PatternSet* patterns = nullptr, const TrainHook& hook = {});

struct TheoremInputs
{
  double alpha = 1.0;
  double beta = 0.0;
  double r = 1.0;
  double sigma = 0.0;
  double L = 2.0;
  double K = 1.0;
  double step_size = 1.0;
  double labeled = 1.0;  // |D|, used by the iteration expression
  double q = 2.0;
};

struct TheoremBounds
{
  double samples = 0.0;     // labeled-node requirement, unit constant
  double iterations = 0.0;  // re-training iteration requirement, unit constant
};

/// (1 + L^2 s^2 + 1/K) a^-2 (1 + r^2) (1 - b)^2 L^2 log q and
/// c^-1 (1 + |D|^-1/2) (1 + L s + K^-1/2) (1 - b) a^-1 L.
TheoremBounds theorem_bounds(const TheoremInputs& in);

}  // namespace sgnn
