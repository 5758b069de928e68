#pragma once

#include "sgnn/graph.hpp"
#include "sgnn/rng.hpp"

#include <cstdint>
#include <string_view>

namespace sgnn {

enum class NoiseMode : std::uint8_t { GaussianClipped, UniformBall, None };

std::string_view to_string(NoiseMode mode) noexcept;
NoiseMode parse_noise_mode(std::string_view text);
std::string_view to_string(PatternMode mode) noexcept;
PatternMode parse_pattern_mode(std::string_view text);

struct GenConfig
{
  int d = 50;
  int L = 50;
  int n = 10000;
  /// Exact degree M of every class-irrelevant node (one relevant neighbor
  /// plus M - 1 irrelevant ones).
  int degree = 30;
  /// Fraction of n placed in V+ and, separately, in V-.
  double relevant_fraction = 0.1;
  /// Random intra-class edges per relevant node (within V+ and within V-).
  int relevant_degree = 2;
  double sigma = 0.2;
  NoiseMode noise = NoiseMode::GaussianClipped;
  PatternMode pattern_mode = PatternMode::Relaxed;
  int train_size = 100;
  /// Fraction of irrelevant nodes that receive an extra edge to the opposite
  /// relevant class. Those nodes are excluded from the test subset.
  double outlier_fraction = 0.0;
  std::uint64_t seed = 1;

  void check() const;
};

struct GeneratedData
{
  StructuredGraph graph;
  LabeledSubset train;
  LabeledSubset test;
  std::vector<NodeId> outliers;
  /// Index into the pattern set used for each node's clean feature.
  std::vector<int> pattern_of;
};

/// p+ = e1, p- = e2, irrelevant patterns drawn Gaussian, projected onto the
/// complement of span{e1, e2} and normalized (Gram-Schmidt across them in
/// orthogonal mode).
PatternSet generate_patterns(const GenConfig& config);
PatternSet generate_patterns(int d, int L, PatternMode mode, Rng& rng);

/// Builds V+, V-, V_N with the exact-degree attachment protocol and a
/// balanced, disjoint train/test split.
GeneratedData generate_graph(const PatternSet& patterns, const GenConfig& config);

/// Noise vector with norm <= sigma.
Eigen::VectorXd draw_noise(Eigen::Index d, double sigma, NoiseMode mode, Rng& rng);

/// Random simple graph on `nodes` where every node has `degree` incident
/// edges (one node gets degree - 1 when the stub count is odd).
std::vector<Edge> random_regular_edges(std::span<const NodeId> nodes, int degree, Rng& rng);

/// Balanced split: floor(|D|/2) positives and negatives plus one extra from a
/// random class when |D| is odd. Test receives the remaining eligible nodes.
std::pair<LabeledSubset, LabeledSubset> balanced_split(const StructuredGraph& graph, int train_size, Rng& rng,
                                                       std::span<const NodeId> excluded = {});

}  // namespace sgnn
