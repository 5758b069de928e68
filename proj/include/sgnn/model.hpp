#pragma once

#include "sgnn/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sgnn {

/// How the output layer is normalized once neurons are pruned.
///  - OverK: divide every contribution by K.
///  - OverSurviving: divide by the number of surviving neurons sharing the
///    neuron's output sign.
enum class NormMode : std::uint8_t { OverK, OverSurviving };

std::string_view to_string(NormMode mode) noexcept;
NormMode parse_norm_mode(std::string_view text);

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One-hidden-layer max-pooling GNN. Hidden weights W are d x K (column k is
/// neuron k), output signs b are fixed, and `alive` is the neuron-wise mask.
template <typename Scalar>
class ModelState
{
public:
  ModelState() = default;

  ModelState(Matrix<Scalar> weights, Vector<Scalar> signs, NormMode norm = NormMode::OverSurviving,
             double init_scale = 0.0)
      : W(std::move(weights)), b(std::move(signs)), alive(Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(W.cols(), true)),
        norm(norm), init_scale(init_scale), initial_(W)
  {
    if (b.size() != W.cols()) throw Error("dimension mismatch: sign vector length != K");
    for (Eigen::Index k = 0; k < b.size(); ++k)
      if (b[k] != Scalar(1) && b[k] != Scalar(-1)) throw Error("output signs must be +1 or -1");
  }

  Eigen::Index dimension() const noexcept { return W.rows(); }
  Eigen::Index width() const noexcept { return W.cols(); }
  Eigen::Index surviving() const noexcept { return alive.count(); }

  /// Initialization snapshot used for rewinding; fixed at construction.
  const Matrix<Scalar>& initial_weights() const noexcept { return initial_; }

  /// Binary d x K mask with constant columns.
  Matrix<Scalar> mask_matrix() const
  {
    Matrix<Scalar> m(W.rows(), W.cols());
    for (Eigen::Index k = 0; k < W.cols(); ++k) m.col(k).setConstant(alive[k] ? Scalar(1) : Scalar(0));
    return m;
  }

  /// Per-neuron output coefficient b_k / Z_k (zero for pruned neurons).
  Vector<Scalar> output_coefficients() const
  {
    const Eigen::Index K = W.cols();
    Vector<Scalar> c = Vector<Scalar>::Zero(K);
    Eigen::Index pos = 0;
    Eigen::Index neg = 0;
    for (Eigen::Index k = 0; k < K; ++k)
      if (alive[k]) (b[k] > 0 ? pos : neg)++;
    for (Eigen::Index k = 0; k < K; ++k) {
      if (!alive[k]) continue;
      const Eigen::Index z = norm == NormMode::OverK ? K : (b[k] > 0 ? pos : neg);
      c[k] = b[k] / static_cast<Scalar>(z);
    }
    return c;
  }

  Matrix<Scalar> W;
  Vector<Scalar> b;
  Eigen::Array<bool, Eigen::Dynamic, 1> alive;
  NormMode norm = NormMode::OverSurviving;
  double init_scale = 0.0;

private:
  Matrix<Scalar> initial_;
};

using Model = ModelState<double>;

struct AggregateResult
{
  double activation = 0.0;
  /// Position of the winning column in the neighborhood, or -1 when the
  /// pooled activation is zero.
  Eigen::Index winner = -1;
};

/// Max-pooled ReLU activation of one neuron over a neighborhood (columns of
/// `features`). `ids` (optional, same length) breaks exact ties toward the
/// lowest node id; without ids the lowest column wins.
template <typename DerivedW, typename DerivedX>
AggregateResult aggregate(const Eigen::MatrixBase<DerivedW>& w, const Eigen::MatrixBase<DerivedX>& features,
                          std::span<const NodeId> ids = {})
{
  if (features.cols() == 0) throw Error("aggregate over an empty neighborhood");
  if (w.size() != features.rows()) throw Error("dimension mismatch between weight and features");
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != features.cols())
    throw Error("dimension mismatch between neighborhood ids and features");
  AggregateResult best;
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const double value = static_cast<double>(features.col(j).dot(w.template cast<typename DerivedX::Scalar>()));
    if (value <= 0.0) continue;
    const bool better = best.winner < 0 || value > best.activation ||
                        (value == best.activation && !ids.empty() &&
                         ids[static_cast<std::size_t>(j)] < ids[static_cast<std::size_t>(best.winner)]);
    if (better) {
      best.activation = value;
      best.winner = j;
    }
  }
  return best;
}

/// Argmax bookkeeping for (node, neuron): which neighbor wins max-pooling.
struct PatternHit
{
  NodeId node = -1;
  Eigen::Index neuron = -1;
  std::optional<NodeId> winner;
  Eigen::VectorXd feature;
  double activation = 0.0;
};

/// Neighborhood lists in CSR layout, one per center node.
struct NeighborhoodBatch
{
  std::vector<NodeId> centers;
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> members;

  std::size_t size() const noexcept { return centers.size(); }
  std::span<const NodeId> at(std::size_t i) const
  {
    return {members.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  void push(NodeId center, std::span<const NodeId> nodes)
  {
    centers.push_back(center);
    members.insert(members.end(), nodes.begin(), nodes.end());
    offsets.push_back(members.size());
  }
  void clear()
  {
    centers.clear();
    members.clear();
    offsets.assign(1, 0);
  }
};

/// Full neighborhoods N(v) for each node in `nodes`.
NeighborhoodBatch full_neighborhoods(const StructuredGraph& graph, std::span<const NodeId> nodes);

/// Pooled activations of every neuron at every center of a batch.
/// `winner(k, i)` is the node id winning for neuron k at center i (-1 if the
/// activation is zero); `activation(k, i)` the pooled value.
struct BatchActivations
{
  Eigen::MatrixXd activation;                                   // K x B
  Eigen::Matrix<NodeId, Eigen::Dynamic, Eigen::Dynamic> winner;  // K x B
  std::vector<NodeId> unique_nodes;                              // columns of `projected`
  Eigen::MatrixXd gathered;                                      // d x U features of unique_nodes
};

template <typename Scalar>
BatchActivations evaluate_batch(const ModelState<Scalar>& model, const StructuredGraph& graph,
                                const NeighborhoodBatch& batch)
{
  if (model.dimension() != graph.dimension()) throw Error("dimension mismatch between model and graph");
  const Eigen::Index K = model.width();
  const auto B = static_cast<Eigen::Index>(batch.size());

  BatchActivations out;
  out.unique_nodes = batch.members;
  std::sort(out.unique_nodes.begin(), out.unique_nodes.end());
  out.unique_nodes.erase(std::unique(out.unique_nodes.begin(), out.unique_nodes.end()), out.unique_nodes.end());
  const auto U = static_cast<Eigen::Index>(out.unique_nodes.size());
  out.gathered.resize(graph.dimension(), U);
  for (Eigen::Index j = 0; j < U; ++j) out.gathered.col(j) = graph.feature(out.unique_nodes[static_cast<std::size_t>(j)]);

  const Eigen::MatrixXd projected = model.W.template cast<double>().transpose() * out.gathered;  // K x U
  out.activation = Eigen::MatrixXd::Zero(K, B);
  out.winner = Eigen::Matrix<NodeId, Eigen::Dynamic, Eigen::Dynamic>::Constant(K, B, -1);

  for (Eigen::Index i = 0; i < B; ++i) {
    auto members = batch.at(static_cast<std::size_t>(i));
    if (members.empty()) throw Error("aggregate over an empty neighborhood");
    auto act = out.activation.col(i);
    auto win = out.winner.col(i);
    for (NodeId m : members) {
      const auto j = std::lower_bound(out.unique_nodes.begin(), out.unique_nodes.end(), m) - out.unique_nodes.begin();
      auto col = projected.col(j);
      for (Eigen::Index k = 0; k < K; ++k) {
        const double value = col[k];
        if (value <= 0.0) continue;
        if (value > act[k] || (value == act[k] && (win[k] < 0 || m < win[k]))) {
          act[k] = value;
          win[k] = m;
        }
      }
    }
  }
  return out;
}

/// Network outputs g(v) for every center of the batch.
template <typename Scalar>
Eigen::VectorXd forward_batch(const ModelState<Scalar>& model, const StructuredGraph& graph,
                              const NeighborhoodBatch& batch)
{
  const auto acts = evaluate_batch(model, graph, batch);
  const Eigen::VectorXd coeff = model.output_coefficients().template cast<double>();
  return acts.activation.transpose() * coeff;
}

/// g(v) using N(v), or `neighborhood` when given (e.g. a sampled subset).
template <typename Scalar>
double forward(const ModelState<Scalar>& model, const StructuredGraph& graph, NodeId v,
               std::optional<std::span<const NodeId>> neighborhood = std::nullopt)
{
  NeighborhoodBatch batch;
  if (neighborhood) batch.push(v, *neighborhood);
  else batch.push(v, graph.neighborhood(v));
  return forward_batch(model, graph, batch)[0];
}

/// PatternHit for neuron k at node v.
template <typename Scalar>
PatternHit pattern_hit(const ModelState<Scalar>& model, const StructuredGraph& graph, NodeId v, Eigen::Index k,
                       std::optional<std::span<const NodeId>> neighborhood = std::nullopt)
{
  const std::vector<NodeId> nodes = neighborhood ? std::vector<NodeId>(neighborhood->begin(), neighborhood->end())
                                                 : graph.neighborhood(v);
  Eigen::MatrixXd features(graph.dimension(), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t j = 0; j < nodes.size(); ++j) features.col(static_cast<Eigen::Index>(j)) = graph.feature(nodes[j]);
  const auto res = aggregate(model.W.col(k), features, nodes);
  PatternHit hit;
  hit.node = v;
  hit.neuron = k;
  hit.activation = res.activation;
  hit.feature = Eigen::VectorXd::Zero(graph.dimension());
  if (res.winner >= 0) {
    hit.winner = nodes[static_cast<std::size_t>(res.winner)];
    hit.feature = graph.feature(*hit.winner);
  }
  return hit;
}

/// -(1/|D|) sum_v y_v g(v); `sampled` aligns with `nodes` when given.
template <typename Scalar>
double empirical_risk(const ModelState<Scalar>& model, const StructuredGraph& graph, std::span<const NodeId> nodes,
                      const NeighborhoodBatch* sampled = nullptr)
{
  if (nodes.empty()) throw Error("empirical risk over an empty labeled set");
  const NeighborhoodBatch full = sampled ? NeighborhoodBatch{} : full_neighborhoods(graph, nodes);
  const NeighborhoodBatch& batch = sampled ? *sampled : full;
  if (batch.size() != nodes.size()) throw Error("dimension mismatch between nodes and sampled neighborhoods");
  const Eigen::VectorXd g = forward_batch(model, graph, batch);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += graph.label(nodes[i]) * g[static_cast<Eigen::Index>(i)];
  return -sum / static_cast<double>(nodes.size());
}

struct GeneralizationResult
{
  double hinge = 0.0;       // mean max(1 - y g, 0)
  double zero_one = 0.0;    // fraction with sign(g) != y
  std::size_t errors = 0;
};

/// Evaluated with full neighborhoods.
template <typename Scalar>
GeneralizationResult generalization_error(const ModelState<Scalar>& model, const StructuredGraph& graph,
                                          std::span<const NodeId> nodes)
{
  if (nodes.empty()) throw Error("generalization error over an empty node set");
  const Eigen::VectorXd g = forward_batch(model, graph, full_neighborhoods(graph, nodes));
  GeneralizationResult out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double margin = graph.label(nodes[i]) * g[static_cast<Eigen::Index>(i)];
    out.hinge += std::max(1.0 - margin, 0.0);
    if (!(margin > 0.0)) ++out.errors;
  }
  out.hinge /= static_cast<double>(nodes.size());
  out.zero_one = static_cast<double>(out.errors) / static_cast<double>(nodes.size());
  return out;
}

/// Per-neuron label-weighted pooled input, (1/|D|) sum_v y_v x_{n*(v,k)},
/// zero where neuron k is silent at v. Column k is d-dimensional.
/// class_balanced: mean over D+ minus mean over D- instead.
Eigen::MatrixXd pooled_input_average(const StructuredGraph& graph, std::span<const NodeId> nodes,
                                     const NeighborhoodBatch& batch, const BatchActivations& acts,
                                     bool class_balanced = false);

/// Exact gradient of the empirical risk with respect to W (d x K) under the
/// given (sampled) neighborhoods. Pruned columns are zero.
template <typename Scalar>
Matrix<Scalar> gradient(const ModelState<Scalar>& model, const StructuredGraph& graph, std::span<const NodeId> nodes,
                        const NeighborhoodBatch* sampled = nullptr)
{
  if (nodes.empty()) throw Error("gradient over an empty labeled set");
  const NeighborhoodBatch full = sampled ? NeighborhoodBatch{} : full_neighborhoods(graph, nodes);
  const NeighborhoodBatch& batch = sampled ? *sampled : full;
  if (batch.size() != nodes.size()) throw Error("dimension mismatch between nodes and sampled neighborhoods");
  const auto acts = evaluate_batch(model, graph, batch);
  const Eigen::MatrixXd avg = pooled_input_average(graph, nodes, batch, acts);
  const Eigen::VectorXd coeff = model.output_coefficients().template cast<double>();
  return (-(avg * coeff.asDiagonal())).template cast<Scalar>();
}

/// Text checkpoint: header `K d normmode`, the sign line, the mask line, then
/// K weight rows with 17 significant digits.
void save_checkpoint(const Model& model, std::ostream& out);
Model load_checkpoint(std::istream& in);

}  // namespace sgnn
