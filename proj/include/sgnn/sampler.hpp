#pragma once

#include "sgnn/graph.hpp"
#include "sgnn/model.hpp"
#include "sgnn/rng.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sgnn {

enum class SamplingKind : std::uint8_t { Full, Uniform, TwoTier };
/// Which neighbors form the high-probability tier of the two-tier sampler.
enum class ImportantSet : std::uint8_t { RelevantOnly, RelevantPlusLambda };

std::string_view to_string(SamplingKind kind) noexcept;
SamplingKind parse_sampling_kind(std::string_view text);
std::string_view to_string(ImportantSet set) noexcept;
ImportantSet parse_important_set(std::string_view text);

struct SamplingStrategy
{
  int fanout = 20;
  SamplingKind kind = SamplingKind::Uniform;
  ImportantSet important = ImportantSet::RelevantOnly;
  /// Ratio of inclusion probabilities between the important and ordinary tiers.
  double gamma = 1.0;
  /// Fraction of irrelevant nodes promoted into the important tier.
  double lambda = 0.0;
  /// Seed of the hash that decides which irrelevant nodes are promoted.
  std::uint64_t lambda_seed = 0x5eed;

  void check() const;
  /// True when neighbor u belongs to the important tier.
  bool is_important(const StructuredGraph& graph, NodeId u) const;
};

struct SampledNeighborhood
{
  NodeId node = -1;
  int iteration = 0;
  /// v first, then the sampled neighbors in ascending id order.
  std::vector<NodeId> ids;
};

/// Samples up to `fanout` distinct neighbors of v; v itself is always part of
/// the result on top of them. When deg(v) <= fanout the whole N(v) is returned.
///  - Uniform: fanout neighbors uniformly without replacement.
///  - TwoTier: every important neighbor is first kept independently with
///    probability min(1, gamma * r / (gamma * |I| + |U|)); remaining slots
///    are filled uniformly from the ordinary tier, then from the rejected
///    important neighbors if the ordinary tier runs out.
SampledNeighborhood sample_neighbors(const SamplingStrategy& strategy, const StructuredGraph& graph, NodeId v,
                                     Rng& rng, int iteration = 0);

/// Samples every node in `nodes` into a batch aligned with `nodes`.
NeighborhoodBatch sample_batch(const SamplingStrategy& strategy, const StructuredGraph& graph,
                               std::span<const NodeId> nodes, Rng& rng);

struct AlphaEstimate
{
  double mean = 0.0;
  double std_error = 0.0;
  /// Smallest per-node hit fraction over the subset.
  double node_min = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo probability that a sampled neighborhood holds a class-relevant
/// node, averaged over `nodes` and `trials` repetitions.
AlphaEstimate estimate_alpha(const SamplingStrategy& strategy, const StructuredGraph& graph,
                             std::span<const NodeId> nodes, int trials, Rng& rng);

struct AlphaBracket
{
  double lower = 0.0;
  double upper = 0.0;
};

/// Expected-alpha bracket for uniform sampling of r of R neighbors, cbar of
/// which are class-relevant: 1-(1-cbar/R)^r <= E alpha <= 1-(1-cbar/(R-r+1))^r.
AlphaBracket alpha_bound_uniform(double cbar, double R, double r);

struct AlphaLowerBound
{
  double exact = 0.0;    // finite-R expression (may exceed 1)
  double large_R = 0.0;  // R >> r approximation
};

/// gamma r / (R - r + gamma) and its large-R form gamma r / R.
AlphaLowerBound alpha_bound_importance(double gamma, double R, double r);
/// gamma r / ((1 + (gamma-1) lambda) R - r + gamma) and gamma r / ((1 + (gamma-1) lambda) R).
AlphaLowerBound alpha_bound_partial(double gamma, double lambda, double R, double r);

/// Probability that the two-tier sampler keeps a node's single relevant
/// neighbor among R neighbors with fan-out r < R.
double two_tier_single_alpha(double gamma, int R, int r);
/// Smallest gamma >= 1 whose two_tier_single_alpha reaches `alpha`.
double gamma_for_alpha(double alpha, int R, int r);

}  // namespace sgnn
