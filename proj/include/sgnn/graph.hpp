#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sgnn {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

using NodeId = std::int32_t;

/// Partition of a node by feature relevance and label.
enum class Tag : std::uint8_t { VPlus, VMinus, VNPlus, VNMinus, Unknown };

std::string_view to_string(Tag tag) noexcept;
Tag parse_tag(std::string_view text);

inline bool is_class_relevant(Tag tag) noexcept { return tag == Tag::VPlus || tag == Tag::VMinus; }
inline int label_of(Tag tag) noexcept { return (tag == Tag::VPlus || tag == Tag::VNPlus) ? 1 : -1; }

enum class PatternMode : std::uint8_t { Orthogonal, Relaxed };

/// L unit-norm patterns in R^d stored column-wise. Column 0 is the positive
/// class pattern, column 1 the negative one, the rest are class-irrelevant.
struct PatternSet
{
  PatternMode mode = PatternMode::Orthogonal;
  Eigen::MatrixXd patterns;  // d x L

  Eigen::Index dimension() const noexcept { return patterns.rows(); }
  Eigen::Index count() const noexcept { return patterns.cols(); }
  auto positive() const { return patterns.col(0); }
  auto negative() const { return patterns.col(1); }

  /// Throws Error if a norm, orthogonality or L <= d invariant fails.
  void check(double tol = 1e-9) const;
};

struct Edge
{
  NodeId u;
  NodeId v;
};

/// Undirected graph with node features, labels and partition tags.
/// Immutable after construction; the self loop is implicit.
class StructuredGraph
{
public:
  StructuredGraph() = default;

  /// features: d x n. Edges are normalized (u < v) and sorted; self loops,
  /// duplicates and out-of-range endpoints are rejected.
  StructuredGraph(Eigen::MatrixXd features, std::vector<int> labels, std::vector<Tag> tags,
                  std::vector<Edge> edges, double sigma);

  NodeId node_count() const noexcept { return static_cast<NodeId>(labels_.size()); }
  Eigen::Index dimension() const noexcept { return features_.rows(); }
  double sigma() const noexcept { return sigma_; }
  int max_degree() const noexcept { return max_degree_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  const Eigen::MatrixXd& features() const noexcept { return features_; }
  auto feature(NodeId v) const { return features_.col(v); }
  int label(NodeId v) const { return labels_[static_cast<std::size_t>(v)]; }
  Tag tag(NodeId v) const { return tags_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<Tag>& tags() const noexcept { return tags_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  bool tagged() const noexcept;

  /// Adjacent nodes in ascending id order, excluding v itself.
  std::span<const NodeId> neighbors(NodeId v) const;
  int degree(NodeId v) const;

  /// N(v): v first, then ascending neighbor ids.
  std::vector<NodeId> neighborhood(NodeId v) const;

  bool operator==(const StructuredGraph& other) const;

private:
  void check_node(NodeId v) const;

  Eigen::MatrixXd features_;
  std::vector<int> labels_;
  std::vector<Tag> tags_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> adjacency_;
  double sigma_ = 0.0;
  int max_degree_ = 0;
};

/// Ordered set of labeled node ids with class counts.
struct LabeledSubset
{
  std::vector<NodeId> ids;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  /// Throws Error on duplicates or invalid ids.
  static LabeledSubset make(const StructuredGraph& graph, std::vector<NodeId> ids);

  std::size_t size() const noexcept { return ids.size(); }
  bool empty() const noexcept { return ids.empty(); }
  std::size_t imbalance() const noexcept { return positives > negatives ? positives - negatives : negatives - positives; }
};

struct Violation
{
  enum class Kind : std::uint8_t {
    MissingRelevantNeighbor,
    CrossClassEdge,
    LabelTagMismatch,
    NoiseBound,
    LabelImbalance,
  };
  Kind kind;
  NodeId u = -1;
  NodeId v = -1;
  std::string message;
};

struct ValidationReport
{
  std::vector<Violation> violations;
  /// VPlus-VMinus edges; reported but not counted as violations.
  std::vector<Edge> warnings;
  std::optional<std::size_t> imbalance;
  bool skipped_untagged = false;

  bool clean() const noexcept { return violations.empty(); }
};

/// Checks the structural data assumptions: every irrelevant node touches a
/// relevant node of its class, no cross-class relevant/irrelevant edges,
/// label/tag consistency, and (when given) the noise bound and label balance.
ValidationReport validate_assumptions(const StructuredGraph& graph,
                                      const LabeledSubset* labeled = nullptr,
                                      const PatternSet* patterns = nullptr);

void save_graph(const StructuredGraph& graph, std::ostream& out);
StructuredGraph load_graph(std::istream& in);

void save_patterns(const PatternSet& patterns, std::ostream& out);
PatternSet load_patterns(std::istream& in);

/// Shortest decimal form that parses back to the exact double.
std::string format_exact(double value);
double parse_double(std::string_view text);

}  // namespace sgnn
