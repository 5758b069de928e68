#include "sgnn/trainer.hpp"

#include "sgnn/analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace sgnn {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const Enum (&values)[N], const char* what)
{
  for (auto v : values)
    if (to_string(v) == text) return v;
  throw Error(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

}  // namespace

std::string_view to_string(BatchMode v) noexcept { return v == BatchMode::Full ? "full" : "disjoint"; }
std::string_view to_string(StopRule v) noexcept
{
  switch (v) {
    case StopRule::ZeroTrainHinge: return "zero_train_hinge";
    case StopRule::ZeroTrainError: return "zero_train_error";
    case StopRule::MaxIters: break;
  }
  return "max_iters";
}
std::string_view to_string(PruneMode v) noexcept { return v == PruneMode::PerClass ? "per_class" : "global"; }
std::string_view to_string(PruneKind v) noexcept { return v == PruneKind::Magnitude ? "magnitude" : "random"; }
std::string_view to_string(StepRule v) noexcept { return v == StepRule::PerNeuron ? "per_neuron" : "gradient"; }

BatchMode parse_batch_mode(std::string_view text)
{
  static constexpr BatchMode all[] = {BatchMode::Full, BatchMode::Disjoint};
  return parse_enum(text, all, "batch mode");
}
StopRule parse_stop_rule(std::string_view text)
{
  static constexpr StopRule all[] = {StopRule::ZeroTrainHinge, StopRule::ZeroTrainError, StopRule::MaxIters};
  return parse_enum(text, all, "stop rule");
}
PruneMode parse_prune_mode(std::string_view text)
{
  static constexpr PruneMode all[] = {PruneMode::PerClass, PruneMode::Global};
  return parse_enum(text, all, "prune mode");
}
PruneKind parse_prune_kind(std::string_view text)
{
  static constexpr PruneKind all[] = {PruneKind::Magnitude, PruneKind::Random};
  return parse_enum(text, all, "prune kind");
}
StepRule parse_step_rule(std::string_view text)
{
  static constexpr StepRule all[] = {StepRule::PerNeuron, StepRule::Gradient};
  return parse_enum(text, all, "step rule");
}

void TrainConfig::check() const
{
  if (!(step_size > 0.0)) throw Error("step size c_eta must be positive");
  if (!(init_scale > 0.0)) throw Error("init scale delta must be positive");
  if (width < 1) throw Error("width K must be >= 1");
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("pruning rate beta must lie in [0, 1)");
  if (pretrain_iters && *pretrain_iters < 0) throw Error("pre-training iterations must be >= 0");
  if (max_iters < 1) throw Error("T_max must be >= 1");
  if (batch_size < 0) throw Error("batch size must be >= 0");
  sampling.check();
}

std::string to_json_line(const TrialOutcome& o)
{
  nlohmann::ordered_json j;
  j["seed"] = o.seed;
  j["success"] = o.success;
  j["converged"] = o.converged;
  j["iterations"] = o.iterations;
  j["pretrain_iters"] = o.pretrain_iters;
  j["test_hinge"] = o.test_hinge;
  j["test_error"] = o.test_error;
  j["train_hinge"] = o.train_hinge;
  j["train_error"] = o.train_error;
  j["lucky_init"] = o.lucky_init;
  j["lucky_pretrained"] = o.lucky_pretrained;
  j["lucky_kept"] = o.lucky_kept;
  j["pruned"] = o.pruned;
  return j.dump();
}

Model initialize(int d, int K, double delta, Rng& rng, NormMode norm)
{
  if (!(delta > 0.0)) throw Error("init scale delta must be positive");
  if (d < 1 || K < 1) throw Error("initialize needs d >= 1 and K >= 1");
  std::normal_distribution<double> normal(0.0, delta);
  Eigen::MatrixXd W(d, K);
  // Column by column so a neuron's weights do not depend on d of later ones.
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index i = 0; i < d; ++i) W(i, k) = normal(rng);
  Eigen::VectorXd b(K);
  std::bernoulli_distribution coin(0.5);
  for (Eigen::Index k = 0; k < K; ++k) b[k] = coin(rng) ? 1.0 : -1.0;
  return Model(std::move(W), std::move(b), norm, delta);
}

int default_pretrain_iters(const StructuredGraph& graph, double step_size)
{
  if (!(step_size > 0.0)) throw Error("step size c_eta must be positive");
  const double xinf = graph.features().size() ? graph.features().cwiseAbs().maxCoeff() : 0.0;
  return static_cast<int>(std::ceil(xinf / step_size));
}

void sgd_step(Model& model, const StructuredGraph& graph, std::span<const NodeId> nodes,
              const NeighborhoodBatch& batch, const TrainConfig& config)
{
  if (nodes.empty()) throw Error("training step over an empty labeled set");
  if (config.step_rule == StepRule::Gradient) {
    model.W -= config.step_size * gradient(model, graph, nodes, &batch);
  } else {
    const auto acts = evaluate_batch(model, graph, batch);
    const Eigen::MatrixXd avg = pooled_input_average(graph, nodes, batch, acts, true);
    for (Eigen::Index k = 0; k < model.width(); ++k)
      if (model.alive[k]) model.W.col(k) += config.step_size * model.b[k] * avg.col(k);
  }
  for (Eigen::Index k = 0; k < model.width(); ++k)
    if (!model.alive[k]) model.W.col(k).setZero();
}

int pretrain(Model& model, const StructuredGraph& graph, std::span<const NodeId> labeled, const TrainConfig& config,
             Rng& sampling_rng, const TrainHook& hook)
{
  if (labeled.empty()) throw Error("pre-training over an empty labeled set");
  const int steps = config.pretrain_iters ? *config.pretrain_iters : default_pretrain_iters(graph, config.step_size);
  std::vector<NodeId> order(labeled.begin(), labeled.end());
  std::size_t chunk = order.size();
  if (config.batch == BatchMode::Disjoint) {
    Rng split(derive_seed(config.seed, {stream::split}));
    std::shuffle(order.begin(), order.end(), split);
    chunk = config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size)
                                  : (order.size() + static_cast<std::size_t>(std::max(steps, 1)) - 1) /
                                        static_cast<std::size_t>(std::max(steps, 1));
    chunk = std::clamp<std::size_t>(chunk, 1, order.size());
  }
  std::size_t cursor = 0;
  for (int t = 0; t < steps; ++t) {
    std::span<const NodeId> nodes(order);
    if (config.batch == BatchMode::Disjoint) {
      if (cursor >= order.size()) cursor = 0;
      nodes = nodes.subspan(cursor, std::min(chunk, order.size() - cursor));
      cursor += chunk;
    }
    const auto batch = sample_batch(config.sampling, graph, nodes, sampling_rng);
    sgd_step(model, graph, nodes, batch, config);
    if (hook) hook(TrainPhase::Pretrain, t + 1, model);
  }
  return steps;
}

namespace {

std::vector<std::vector<Eigen::Index>> prune_groups(const Model& model, PruneMode mode)
{
  std::vector<std::vector<Eigen::Index>> groups(mode == PruneMode::PerClass ? 2 : 1);
  for (Eigen::Index k = 0; k < model.width(); ++k) {
    if (!model.alive[k]) continue;
    groups[mode == PruneMode::PerClass && model.b[k] < 0 ? 1 : 0].push_back(k);
  }
  return groups;
}

std::size_t prune_count(double beta, std::size_t size)
{
  if (!(beta >= 0.0 && beta < 1.0)) throw Error("pruning rate beta must lie in [0, 1)");
  return static_cast<std::size_t>(std::floor(beta * static_cast<double>(size) + 1e-12));
}

}  // namespace

std::vector<Eigen::Index> magnitude_prune(Model& model, double beta, PruneMode mode)
{
  std::vector<Eigen::Index> pruned;
  for (auto& group : prune_groups(model, mode)) {
    const std::size_t count = prune_count(beta, group.size());
    std::stable_sort(group.begin(), group.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return model.W.col(a).norm() < model.W.col(b).norm(); });
    pruned.insert(pruned.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(count));
  }
  for (auto k : pruned) model.alive[k] = false;
  std::sort(pruned.begin(), pruned.end());
  return pruned;
}

std::vector<Eigen::Index> random_prune(Model& model, double beta, PruneMode mode, Rng& rng)
{
  std::vector<Eigen::Index> pruned;
  for (auto& group : prune_groups(model, mode)) {
    const std::size_t count = prune_count(beta, group.size());
    std::shuffle(group.begin(), group.end(), rng);
    pruned.insert(pruned.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(count));
  }
  for (auto k : pruned) model.alive[k] = false;
  std::sort(pruned.begin(), pruned.end());
  return pruned;
}

void rewind(Model& model)
{
  model.W = model.initial_weights();
  for (Eigen::Index k = 0; k < model.width(); ++k)
    if (!model.alive[k]) model.W.col(k).setZero();
}

bool stop_reached(const Model& model, const StructuredGraph& graph, std::span<const NodeId> labeled, StopRule rule)
{
  if (rule == StopRule::MaxIters) return false;
  const auto err = generalization_error(model, graph, labeled);
  return rule == StopRule::ZeroTrainHinge ? err.hinge == 0.0 : err.errors == 0;
}

RetrainResult retrain(Model& model, const StructuredGraph& graph, std::span<const NodeId> labeled,
                      const TrainConfig& config, Rng& sampling_rng, const TrainHook& hook)
{
  if (labeled.empty()) throw Error("re-training over an empty labeled set");
  std::vector<NodeId> order(labeled.begin(), labeled.end());
  if (config.batch == BatchMode::Disjoint) {
    Rng split(derive_seed(config.seed, {stream::split, 1}));
    std::shuffle(order.begin(), order.end(), split);
  }
  const std::size_t chunk = config.batch == BatchMode::Disjoint && config.batch_size > 0
                                ? std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), order.size())
                                : order.size();
  std::size_t cursor = 0;

  RetrainResult out;
  if (hook) hook(TrainPhase::Retrain, 0, model);
  for (int t = 0; t < config.max_iters; ++t) {
    if (stop_reached(model, graph, labeled, config.stop)) {
      out.converged = true;
      out.iterations = t;
      return out;
    }
    std::span<const NodeId> nodes(order);
    if (chunk < order.size()) {
      if (cursor >= order.size()) cursor = 0;
      nodes = nodes.subspan(cursor, std::min(chunk, order.size() - cursor));
      cursor += chunk;
    }
    const auto batch = sample_batch(config.sampling, graph, nodes, sampling_rng);
    sgd_step(model, graph, nodes, batch, config);
    if (hook) hook(TrainPhase::Retrain, t + 1, model);
  }
  out.iterations = config.max_iters;
  out.converged = stop_reached(model, graph, labeled, config.stop);
  return out;
}

TrialResult run_algorithm1(const StructuredGraph& graph, std::span<const NodeId> labeled,
                           std::span<const NodeId> test, const TrainConfig& config, const PatternSet* patterns,
                           const TrainHook& hook)
{
  config.check();
  if (labeled.empty()) throw Error("Algorithm 1 needs a nonempty labeled set");
  const auto start = std::chrono::steady_clock::now();

  TrialResult res;
  TrialOutcome& o = res.outcome;
  o.seed = config.seed;
  Rng init_rng(derive_seed(config.seed, {stream::init}));
  Rng sampling_rng(derive_seed(config.seed, {stream::sampling}));
  Rng prune_rng(derive_seed(config.seed, {stream::prune}));

  Model model = initialize(static_cast<int>(graph.dimension()), config.width, config.init_scale, init_rng, config.norm);
  if (hook) hook(TrainPhase::Init, 0, model);
  std::vector<Eigen::Index> lucky0;
  if (patterns) {
    lucky0 = detect_lucky(model, *patterns, graph.sigma()).all();
    o.lucky_init = static_cast<int>(lucky0.size());
  }

  o.pretrain_iters = pretrain(model, graph, labeled, config, sampling_rng, hook);
  if (patterns) o.lucky_pretrained = static_cast<int>(detect_lucky(model, *patterns, graph.sigma()).all().size());

  const auto pruned = config.prune_kind == PruneKind::Magnitude
                          ? magnitude_prune(model, config.beta, config.prune_mode)
                          : random_prune(model, config.beta, config.prune_mode, prune_rng);
  o.pruned = static_cast<int>(pruned.size());
  if (patterns)
    o.lucky_kept = static_cast<int>(std::count_if(lucky0.begin(), lucky0.end(), [&](Eigen::Index k) { return model.alive[k]; }));
  rewind(model);
  if (hook) hook(TrainPhase::Pruned, 0, model);

  const auto rt = retrain(model, graph, labeled, config, sampling_rng, hook);
  o.iterations = rt.iterations;
  o.converged = rt.converged;

  const auto train = generalization_error(model, graph, labeled);
  o.train_hinge = train.hinge;
  o.train_error = train.zero_one;
  if (!test.empty()) {
    const auto err = generalization_error(model, graph, test);
    o.test_hinge = err.hinge;
    o.test_error = err.zero_one;
    o.success = err.errors == 0;
  }
  o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.model = std::move(model);
  return res;
}

TheoremBounds theorem_bounds(const TheoremInputs& in)
{
  if (!(in.alpha > 0.0 && in.alpha <= 1.0)) throw Error("alpha must lie in (0, 1]");
  if (!(in.L >= 1.0)) throw Error("L must be >= 1");
  if (!(in.beta >= 0.0 && in.beta < 1.0 - 1.0 / in.L)) throw Error("beta must lie in [0, 1 - 1/L)");
  if (!(in.sigma >= 0.0 && in.sigma < 1.0 / in.L)) throw Error("noise level must satisfy sigma < 1/L");
  if (!(in.q > 1.0)) throw Error("q must exceed 1");
  const double logq = std::log(in.q);
  if (!(in.K > in.L * in.L * logq)) throw Error("width must satisfy K > L^2 log q");
  if (!(in.step_size > 0.0) || !(in.labeled > 0.0)) throw Error("step size and |D| must be positive");

  TheoremBounds out;
  const double keep = 1.0 - in.beta;
  out.samples = (1.0 + in.L * in.L * in.sigma * in.sigma + 1.0 / in.K) / (in.alpha * in.alpha) * (1.0 + in.r * in.r) *
                keep * keep * in.L * in.L * logq;
  out.iterations = (1.0 + 1.0 / std::sqrt(in.labeled)) * (1.0 + in.L * in.sigma + 1.0 / std::sqrt(in.K)) * keep /
                   (in.step_size * in.alpha) * in.L;
  return out;
}

}  // namespace sgnn
