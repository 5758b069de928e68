#include "sgnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace sgnn {

std::string_view to_string(NoiseMode mode) noexcept
{
  switch (mode) {
    case NoiseMode::GaussianClipped: return "gaussian_clipped";
    case NoiseMode::UniformBall: return "uniform_ball";
    case NoiseMode::None: break;
  }
  return "none";
}

NoiseMode parse_noise_mode(std::string_view text)
{
  for (auto m : {NoiseMode::GaussianClipped, NoiseMode::UniformBall, NoiseMode::None})
    if (to_string(m) == text) return m;
  throw Error("unknown noise mode '" + std::string(text) + "'");
}

std::string_view to_string(PatternMode mode) noexcept
{
  return mode == PatternMode::Orthogonal ? "orthogonal" : "relaxed";
}

PatternMode parse_pattern_mode(std::string_view text)
{
  if (text == "orthogonal") return PatternMode::Orthogonal;
  if (text == "relaxed") return PatternMode::Relaxed;
  throw Error("unknown pattern mode '" + std::string(text) + "'");
}

void GenConfig::check() const
{
  if (d < 2) throw Error("d must be >= 2");
  if (L < 2) throw Error("L must be >= 2");
  if (pattern_mode == PatternMode::Orthogonal && L > d) throw Error("L > d is impossible for orthogonal patterns");
  if (L > 2 && d < 3) throw Error("class-irrelevant patterns need d >= 3");
  if (n < 3) throw Error("n must be >= 3");
  if (degree < 1) throw Error("degree must be >= 1");
  if (degree >= n) throw Error("impossible degree: M >= n");
  if (!(relevant_fraction > 0.0 && relevant_fraction < 0.5)) throw Error("relevant_fraction must lie in (0, 0.5)");
  if (relevant_degree < 0) throw Error("relevant_degree must be >= 0");
  if (sigma < 0.0) throw Error("sigma must be nonnegative");
  if (train_size < 0 || train_size > n) throw Error("|D| > n");
  if (outlier_fraction < 0.0 || outlier_fraction >= 1.0) throw Error("outlier_fraction must lie in [0, 1)");
}

PatternSet generate_patterns(const GenConfig& config)
{
  config.check();
  Rng rng(derive_seed(config.seed, {stream::patterns}));
  return generate_patterns(config.d, config.L, config.pattern_mode, rng);
}

PatternSet generate_patterns(int d, int L, PatternMode mode, Rng& rng)
{
  if (L < 2 || d < 2) throw Error("pattern set needs d >= 2 and L >= 2");
  if (mode == PatternMode::Orthogonal && L > d) throw Error("L > d is impossible for orthogonal patterns");
  if (L > 2 && d < 3) throw Error("class-irrelevant patterns need d >= 3");

  PatternSet out;
  out.mode = mode;
  out.patterns = Eigen::MatrixXd::Zero(d, L);
  out.patterns(0, 0) = 1.0;
  out.patterns(1, 1) = 1.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 2; i < L; ++i) {
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd g(d);
      for (int j = 0; j < d; ++j) g[j] = normal(rng);
      g.head<2>().setZero();
      if (mode == PatternMode::Orthogonal) {
        // Two passes of modified Gram-Schmidt keep the basis orthogonal to 1e-15.
        for (int pass = 0; pass < 2; ++pass)
          for (int j = 2; j < i; ++j) g -= out.patterns.col(j).dot(g) * out.patterns.col(j);
      }
      const double norm = g.norm();
      if (norm > 1e-8) {
        out.patterns.col(i) = g / norm;
        break;
      }
      if (attempt > 100) throw Error("failed to draw a nondegenerate pattern");
    }
  }
  return out;
}

Eigen::VectorXd draw_noise(Eigen::Index d, double sigma, NoiseMode mode, Rng& rng)
{
  if (sigma < 0.0) throw Error("noise bound sigma must be nonnegative");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  if (sigma == 0.0 || mode == NoiseMode::None) return z;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
  if (mode == NoiseMode::GaussianClipped) {
    z *= sigma / std::sqrt(static_cast<double>(d));
    const double norm = z.norm();
    if (norm > sigma) z *= sigma / norm;
  } else {
    const double norm = z.norm();
    if (norm == 0.0) return Eigen::VectorXd::Zero(d);
    const double radius = sigma * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
    z *= radius / norm;
  }
  return z;
}

namespace {

std::uint64_t edge_key(NodeId a, NodeId b)
{
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

std::vector<Edge> random_regular_edges(std::span<const NodeId> nodes, int degree, Rng& rng)
{
  if (degree <= 0 || nodes.empty()) return {};
  if (static_cast<std::size_t>(degree) >= nodes.size())
    throw Error("impossible degree: " + std::to_string(degree) + " with only " + std::to_string(nodes.size()) + " nodes");

  std::vector<NodeId> stubs;
  stubs.reserve(nodes.size() * static_cast<std::size_t>(degree));
  for (NodeId v : nodes)
    for (int k = 0; k < degree; ++k) stubs.push_back(v);
  std::shuffle(stubs.begin(), stubs.end(), rng);
  if (stubs.size() % 2 == 1) stubs.pop_back();

  std::vector<Edge> edges;
  edges.reserve(stubs.size() / 2);
  for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) edges.push_back({stubs[i], stubs[i + 1]});

  // Configuration-model pairing followed by double-edge swaps that remove
  // self loops and parallel edges while preserving every degree.
  std::unordered_multiset<std::uint64_t> present;
  present.reserve(edges.size() * 2);
  for (const auto& e : edges) present.insert(edge_key(e.u, e.v));
  auto bad = [&](const Edge& e) { return e.u == e.v || present.count(edge_key(e.u, e.v)) > 1; };

  const std::size_t max_swaps = 200 * edges.size() + 1000;
  std::size_t swaps = 0;
  for (bool dirty = true; dirty;) {
    dirty = false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      while (bad(edges[i])) {
        dirty = true;
        if (++swaps > max_swaps) throw Error("random regular graph repair did not converge");
        const std::size_t j = uniform_index(rng, edges.size());
        if (j == i) continue;
        Edge a = edges[i];
        Edge b = edges[j];
        if (uniform01(rng) < 0.5) std::swap(b.u, b.v);
        const Edge na{a.u, b.u};
        const Edge nb{a.v, b.v};
        if (na.u == na.v || nb.u == nb.v) continue;
        const auto ka = edge_key(na.u, na.v);
        const auto kb = edge_key(nb.u, nb.v);
        if (ka == kb || present.count(ka) || present.count(kb)) continue;
        present.erase(present.find(edge_key(a.u, a.v)));
        present.erase(present.find(edge_key(b.u, b.v)));
        present.insert(ka);
        present.insert(kb);
        edges[i] = na;
        edges[j] = nb;
      }
    }
  }
  return edges;
}

std::pair<LabeledSubset, LabeledSubset> balanced_split(const StructuredGraph& graph, int train_size, Rng& rng,
                                                       std::span<const NodeId> excluded)
{
  const NodeId n = graph.node_count();
  if (train_size < 0 || train_size > n) throw Error("|D| > n");
  std::vector<bool> skip(static_cast<std::size_t>(n), false);
  for (NodeId v : excluded) skip[static_cast<std::size_t>(v)] = true;

  std::vector<NodeId> pos;
  std::vector<NodeId> neg;
  for (NodeId v = 0; v < n; ++v) (graph.label(v) > 0 ? pos : neg).push_back(v);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::size_t want_pos = static_cast<std::size_t>(train_size) / 2;
  std::size_t want_neg = want_pos;
  if (train_size % 2 == 1) (uniform01(rng) < 0.5 ? want_pos : want_neg)++;
  if (want_pos > pos.size() || want_neg > neg.size()) throw Error("|D| exceeds the available nodes of one class");

  std::vector<NodeId> train(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(want_pos));
  train.insert(train.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(want_neg));
  std::sort(train.begin(), train.end());

  std::vector<bool> in_train(static_cast<std::size_t>(n), false);
  for (NodeId v : train) in_train[static_cast<std::size_t>(v)] = true;
  std::vector<NodeId> test;
  for (NodeId v = 0; v < n; ++v)
    if (!in_train[static_cast<std::size_t>(v)] && !skip[static_cast<std::size_t>(v)]) test.push_back(v);

  return {LabeledSubset::make(graph, std::move(train)), LabeledSubset::make(graph, std::move(test))};
}

GeneratedData generate_graph(const PatternSet& patterns, const GenConfig& config)
{
  config.check();
  if (patterns.dimension() != config.d || patterns.count() != config.L)
    throw Error("dimension mismatch between pattern set and generation config");
  Rng rng(derive_seed(config.seed, {stream::graph}));

  const int n = config.n;
  const int n_rel = std::max(1, static_cast<int>(std::lround(config.relevant_fraction * n)));
  const int n_irr = n - 2 * n_rel;
  if (n_irr < 0) throw Error("relevant fraction leaves no room for the other groups");
  if (n_irr > 0 && config.L < 3) throw Error("irrelevant nodes need at least one class-irrelevant pattern");
  if (n_irr > 0 && config.degree - 1 >= n_irr) throw Error("impossible degree: M - 1 >= |V_N|");

  // Random id assignment so groups are not contiguous.
  std::vector<NodeId> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::span<const NodeId> vplus(perm.data(), static_cast<std::size_t>(n_rel));
  std::span<const NodeId> vminus(perm.data() + n_rel, static_cast<std::size_t>(n_rel));
  std::span<const NodeId> virr(perm.data() + 2 * n_rel, static_cast<std::size_t>(n_irr));

  std::vector<Tag> tags(static_cast<std::size_t>(n), Tag::Unknown);
  std::vector<int> pattern_of(static_cast<std::size_t>(n), 0);
  std::vector<Edge> edges;
  for (NodeId v : vplus) tags[static_cast<std::size_t>(v)] = Tag::VPlus;
  for (NodeId v : vminus) {
    tags[static_cast<std::size_t>(v)] = Tag::VMinus;
    pattern_of[static_cast<std::size_t>(v)] = 1;
  }
  for (NodeId v : virr) {
    pattern_of[static_cast<std::size_t>(v)] = 2 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(config.L - 2)));
    const bool positive = uniform01(rng) < 0.5;
    tags[static_cast<std::size_t>(v)] = positive ? Tag::VNPlus : Tag::VNMinus;
    const auto& group = positive ? vplus : vminus;
    edges.push_back({v, group[uniform_index(rng, group.size())]});
  }

  for (const Edge& e : random_regular_edges(virr, config.degree - 1, rng)) edges.push_back(e);
  for (auto group : {vplus, vminus}) {
    const int k = std::min(config.relevant_degree, static_cast<int>(group.size()) - 1);
    for (const Edge& e : random_regular_edges(group, k, rng)) edges.push_back(e);
  }

  std::vector<NodeId> outliers;
  const auto n_out = static_cast<std::size_t>(std::floor(config.outlier_fraction * n_irr));
  if (n_out > 0) {
    std::vector<NodeId> pool(virr.begin(), virr.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(n_out);
    std::sort(pool.begin(), pool.end());
    for (NodeId v : pool) {
      const auto& other = tags[static_cast<std::size_t>(v)] == Tag::VNPlus ? vminus : vplus;
      edges.push_back({v, other[uniform_index(rng, other.size())]});
    }
    outliers = std::move(pool);
  }

  Eigen::MatrixXd features(config.d, n);
  for (NodeId v = 0; v < n; ++v)
    features.col(v) = patterns.patterns.col(pattern_of[static_cast<std::size_t>(v)]) +
                      draw_noise(config.d, config.sigma, config.noise, rng);

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (NodeId v = 0; v < n; ++v) labels[static_cast<std::size_t>(v)] = label_of(tags[static_cast<std::size_t>(v)]);

  StructuredGraph graph(std::move(features), std::move(labels), std::move(tags), std::move(edges), config.sigma);
  Rng split_rng(derive_seed(config.seed, {stream::split}));
  auto [train, test] = balanced_split(graph, config.train_size, split_rng, outliers);
  return {std::move(graph), std::move(train), std::move(test), std::move(outliers), std::move(pattern_of)};
}

}  // namespace sgnn
