#include "sgnn/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace sgnn {

std::string_view to_string(SamplingKind kind) noexcept
{
  switch (kind) {
    case SamplingKind::Full: return "full";
    case SamplingKind::Uniform: return "uniform";
    case SamplingKind::TwoTier: break;
  }
  return "two_tier";
}

SamplingKind parse_sampling_kind(std::string_view text)
{
  for (auto k : {SamplingKind::Full, SamplingKind::Uniform, SamplingKind::TwoTier})
    if (to_string(k) == text) return k;
  throw Error("unknown sampling kind '" + std::string(text) + "'");
}

std::string_view to_string(ImportantSet set) noexcept
{
  return set == ImportantSet::RelevantOnly ? "relevant_only" : "relevant_plus_lambda";
}

ImportantSet parse_important_set(std::string_view text)
{
  if (text == "relevant_only") return ImportantSet::RelevantOnly;
  if (text == "relevant_plus_lambda") return ImportantSet::RelevantPlusLambda;
  throw Error("unknown important set '" + std::string(text) + "'");
}

void SamplingStrategy::check() const
{
  if (fanout < 1) throw Error("fan-out r must be >= 1");
  if (!(gamma >= 1.0)) throw Error("tier ratio gamma must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
}

bool SamplingStrategy::is_important(const StructuredGraph& graph, NodeId u) const
{
  const Tag t = graph.tag(u);
  if (is_class_relevant(t)) return true;
  if (important != ImportantSet::RelevantPlusLambda || t == Tag::Unknown) return false;
  const double h = static_cast<double>(mix64(lambda_seed ^ mix64(static_cast<std::uint64_t>(u))) >> 11) * 0x1.0p-53;
  return h < lambda;
}

namespace {

// Moves `count` uniformly chosen elements of pool to its front (partial Fisher-Yates).
void choose_front(std::vector<NodeId>& pool, std::size_t count, Rng& rng)
{
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

}  // namespace

SampledNeighborhood sample_neighbors(const SamplingStrategy& strategy, const StructuredGraph& graph, NodeId v,
                                     Rng& rng, int iteration)
{
  strategy.check();
  SampledNeighborhood out;
  out.node = v;
  out.iteration = iteration;
  const auto adj = graph.neighbors(v);
  const auto r = static_cast<std::size_t>(strategy.fanout);

  std::vector<NodeId> picked;
  if (strategy.kind == SamplingKind::Full || adj.size() <= r) {
    picked.assign(adj.begin(), adj.end());
  } else if (strategy.kind == SamplingKind::Uniform) {
    std::vector<NodeId> pool(adj.begin(), adj.end());
    choose_front(pool, r, rng);
    picked.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(r));
  } else {
    if (!graph.tagged()) throw Error("two-tier sampling requires a tagged graph");
    std::vector<NodeId> important;
    std::vector<NodeId> ordinary;
    for (NodeId u : adj) (strategy.is_important(graph, u) ? important : ordinary).push_back(u);
    const double p = std::min(1.0, strategy.gamma * static_cast<double>(r) /
                                       (strategy.gamma * static_cast<double>(important.size()) +
                                        static_cast<double>(ordinary.size())));
    std::vector<NodeId> kept;
    std::vector<NodeId> rejected;
    for (NodeId u : important) (uniform01(rng) < p ? kept : rejected).push_back(u);
    if (kept.size() > r) {
      choose_front(kept, r, rng);
      kept.resize(r);
    }
    picked = kept;
    std::size_t need = r - picked.size();
    choose_front(ordinary, need, rng);
    const std::size_t from_ordinary = std::min(need, ordinary.size());
    picked.insert(picked.end(), ordinary.begin(), ordinary.begin() + static_cast<std::ptrdiff_t>(from_ordinary));
    need -= from_ordinary;
    if (need > 0) {
      choose_front(rejected, need, rng);
      picked.insert(picked.end(), rejected.begin(), rejected.begin() + static_cast<std::ptrdiff_t>(need));
    }
  }
  std::sort(picked.begin(), picked.end());
  out.ids.reserve(picked.size() + 1);
  out.ids.push_back(v);
  out.ids.insert(out.ids.end(), picked.begin(), picked.end());
  return out;
}

NeighborhoodBatch sample_batch(const SamplingStrategy& strategy, const StructuredGraph& graph,
                               std::span<const NodeId> nodes, Rng& rng)
{
  if (strategy.kind == SamplingKind::Full) return full_neighborhoods(graph, nodes);
  NeighborhoodBatch batch;
  for (NodeId v : nodes) {
    const auto s = sample_neighbors(strategy, graph, v, rng);
    batch.push(v, s.ids);
  }
  return batch;
}

AlphaEstimate estimate_alpha(const SamplingStrategy& strategy, const StructuredGraph& graph,
                             std::span<const NodeId> nodes, int trials, Rng& rng)
{
  if (!graph.tagged()) throw Error("alpha estimation requires a tagged graph");
  if (nodes.empty() || trials < 1) throw Error("alpha estimation needs nodes and trials >= 1");
  std::vector<std::size_t> hits(nodes.size(), 0);
  for (int t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto s = sample_neighbors(strategy, graph, nodes[i], rng, t);
      if (std::any_of(s.ids.begin(), s.ids.end(), [&](NodeId u) { return is_class_relevant(graph.tag(u)); })) ++hits[i];
    }
  }
  AlphaEstimate out;
  out.samples = nodes.size() * static_cast<std::size_t>(trials);
  std::size_t total = 0;
  out.node_min = 1.0;
  for (auto h : hits) {
    total += h;
    out.node_min = std::min(out.node_min, static_cast<double>(h) / trials);
  }
  out.mean = static_cast<double>(total) / static_cast<double>(out.samples);
  out.std_error = std::sqrt(out.mean * (1.0 - out.mean) / static_cast<double>(out.samples));
  return out;
}

AlphaBracket alpha_bound_uniform(double cbar, double R, double r)
{
  if (R < 1.0 || cbar < 0.0 || r < 0.0) throw Error("alpha bound needs R >= 1, cbar >= 0 and r >= 0");
  if (cbar > R) throw Error("cbar exceeds the degree R");
  if (r == 0.0) return {0.0, 0.0};
  const double lower = 1.0 - std::pow(1.0 - cbar / R, r);
  const double slots = R - r + 1.0;
  const double q = slots <= 0.0 ? 1.0 : std::min(1.0, cbar / slots);
  const double upper = 1.0 - std::pow(1.0 - q, r);
  return {lower, upper};
}

AlphaLowerBound alpha_bound_importance(double gamma, double R, double r)
{
  if (!(gamma >= 1.0)) throw Error("tier ratio gamma must be >= 1");
  return {gamma * r / (R - r + gamma), gamma * r / R};
}

AlphaLowerBound alpha_bound_partial(double gamma, double lambda, double R, double r)
{
  if (!(gamma >= 1.0)) throw Error("tier ratio gamma must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must lie in [0, 1]");
  const double scale = 1.0 + (gamma - 1.0) * lambda;
  return {gamma * r / (scale * R - r + gamma), gamma * r / (scale * R)};
}

double two_tier_single_alpha(double gamma, int R, int r)
{
  if (r >= R) return 1.0;
  return std::min(1.0, gamma * r / (gamma + R - 1.0));
}

double gamma_for_alpha(double alpha, int R, int r)
{
  if (r >= R || alpha <= static_cast<double>(r) / R) return 1.0;
  if (alpha >= 1.0) {
    if (r <= 1) throw Error("alpha = 1 is unreachable with fan-out 1");
    return (R - 1.0) / (r - 1.0);
  }
  if (alpha >= r) throw Error("alpha unreachable");
  return alpha * (R - 1.0) / (r - alpha);
}

}  // namespace sgnn
