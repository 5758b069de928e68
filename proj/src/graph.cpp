#include "sgnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace sgnn {

std::string_view to_string(Tag tag) noexcept
{
  switch (tag) {
    case Tag::VPlus: return "VPlus";
    case Tag::VMinus: return "VMinus";
    case Tag::VNPlus: return "VNPlus";
    case Tag::VNMinus: return "VNMinus";
    case Tag::Unknown: break;
  }
  return "Unknown";
}

Tag parse_tag(std::string_view text)
{
  for (Tag t : {Tag::VPlus, Tag::VMinus, Tag::VNPlus, Tag::VNMinus, Tag::Unknown})
    if (to_string(t) == text) return t;
  throw Error("unknown partition tag '" + std::string(text) + "'");
}

void PatternSet::check(double tol) const
{
  const auto L = count();
  if (L < 2) throw Error("pattern set needs at least the two class-relevant patterns");
  if (mode == PatternMode::Orthogonal && L > dimension())
    throw Error("orthogonal pattern set requires L <= d");
  for (Eigen::Index i = 0; i < L; ++i)
    if (std::abs(patterns.col(i).norm() - 1.0) > tol) throw Error("pattern " + std::to_string(i) + " is not unit norm");
  const Eigen::MatrixXd gram = patterns.transpose() * patterns;
  for (Eigen::Index i = 0; i < L; ++i) {
    for (Eigen::Index j = i + 1; j < L; ++j) {
      const bool required = mode == PatternMode::Orthogonal || i < 2;
      if (required && std::abs(gram(i, j)) > tol)
        throw Error("patterns " + std::to_string(i) + " and " + std::to_string(j) + " are not orthogonal");
    }
  }
}

StructuredGraph::StructuredGraph(Eigen::MatrixXd features, std::vector<int> labels, std::vector<Tag> tags,
                                 std::vector<Edge> edges, double sigma)
    : features_(std::move(features)), labels_(std::move(labels)), tags_(std::move(tags)), sigma_(sigma)
{
  const auto n = labels_.size();
  if (static_cast<std::size_t>(features_.cols()) != n) throw Error("dimension mismatch: feature count != node count");
  if (tags_.size() != n) throw Error("dimension mismatch: tag count != node count");
  if (sigma_ < 0.0) throw Error("noise bound sigma must be nonnegative");
  for (int y : labels_)
    if (y != 1 && y != -1) throw Error("labels must be +1 or -1");

  for (auto& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n || static_cast<std::size_t>(e.v) >= n)
      throw Error("dangling edge endpoint (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ")");
    if (e.u == e.v) throw Error("explicit self loop on node " + std::to_string(e.u));
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v)
      throw Error("duplicate edge (" + std::to_string(edges[i].u) + ", " + std::to_string(edges[i].v) + ")");
  edges_ = std::move(edges);

  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : edges_) {
    ++degree[static_cast<std::size_t>(e.u)];
    ++degree[static_cast<std::size_t>(e.v)];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[cursor[static_cast<std::size_t>(e.u)]++] = e.v;
    adjacency_[cursor[static_cast<std::size_t>(e.v)]++] = e.u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
    max_degree_ = std::max(max_degree_, static_cast<int>(degree[i]));
  }
}

bool StructuredGraph::tagged() const noexcept
{
  return std::none_of(tags_.begin(), tags_.end(), [](Tag t) { return t == Tag::Unknown; });
}

void StructuredGraph::check_node(NodeId v) const
{
  if (v < 0 || v >= node_count()) throw Error("unknown node id " + std::to_string(v));
}

std::span<const NodeId> StructuredGraph::neighbors(NodeId v) const
{
  check_node(v);
  const auto i = static_cast<std::size_t>(v);
  return {adjacency_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

int StructuredGraph::degree(NodeId v) const { return static_cast<int>(neighbors(v).size()); }

std::vector<NodeId> StructuredGraph::neighborhood(NodeId v) const
{
  auto adj = neighbors(v);
  std::vector<NodeId> out;
  out.reserve(adj.size() + 1);
  out.push_back(v);
  out.insert(out.end(), adj.begin(), adj.end());
  return out;
}

bool StructuredGraph::operator==(const StructuredGraph& other) const
{
  if (sigma_ != other.sigma_ || labels_ != other.labels_ || tags_ != other.tags_) return false;
  if (features_.rows() != other.features_.rows() || features_.cols() != other.features_.cols()) return false;
  if (features_ != other.features_) return false;
  return adjacency_ == other.adjacency_ && offsets_ == other.offsets_;
}

LabeledSubset LabeledSubset::make(const StructuredGraph& graph, std::vector<NodeId> ids)
{
  LabeledSubset out;
  std::vector<bool> seen(static_cast<std::size_t>(graph.node_count()), false);
  for (NodeId v : ids) {
    if (v < 0 || v >= graph.node_count()) throw Error("unknown node id " + std::to_string(v));
    if (seen[static_cast<std::size_t>(v)]) throw Error("duplicate node id " + std::to_string(v) + " in labeled subset");
    seen[static_cast<std::size_t>(v)] = true;
    (graph.label(v) > 0 ? out.positives : out.negatives)++;
  }
  out.ids = std::move(ids);
  return out;
}

ValidationReport validate_assumptions(const StructuredGraph& graph, const LabeledSubset* labeled,
                                      const PatternSet* patterns)
{
  ValidationReport report;
  const NodeId n = graph.node_count();

  if (labeled) {
    report.imbalance = labeled->imbalance();
    const auto allowed = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(labeled->size()))));
    if (*report.imbalance > allowed)
      report.violations.push_back({Violation::Kind::LabelImbalance, -1, -1,
                                   "label imbalance " + std::to_string(*report.imbalance) + " exceeds sqrt(|D|)"});
  }

  if (!graph.tagged()) {
    report.skipped_untagged = true;
    return report;
  }

  for (NodeId v = 0; v < n; ++v) {
    const Tag tv = graph.tag(v);
    if (graph.label(v) != label_of(tv))
      report.violations.push_back({Violation::Kind::LabelTagMismatch, v, -1, "label disagrees with partition tag"});
    if (tv == Tag::VNPlus || tv == Tag::VNMinus) {
      const Tag want = tv == Tag::VNPlus ? Tag::VPlus : Tag::VMinus;
      auto adj = graph.neighbors(v);
      if (std::none_of(adj.begin(), adj.end(), [&](NodeId u) { return graph.tag(u) == want; }))
        report.violations.push_back({Violation::Kind::MissingRelevantNeighbor, v, -1,
                                     std::string(to_string(tv)) + " node has no " + std::string(to_string(want)) + " neighbor"});
    }
  }

  for (const auto& e : graph.edges()) {
    const Tag a = graph.tag(e.u);
    const Tag b = graph.tag(e.v);
    auto is_pair = [&](Tag x, Tag y) { return (a == x && b == y) || (a == y && b == x); };
    if (is_pair(Tag::VPlus, Tag::VNMinus) || is_pair(Tag::VMinus, Tag::VNPlus))
      report.violations.push_back({Violation::Kind::CrossClassEdge, e.u, e.v,
                                   "edge joins " + std::string(to_string(a)) + " and " + std::string(to_string(b))});
    else if (is_pair(Tag::VPlus, Tag::VMinus))
      report.warnings.push_back(e);
  }

  if (patterns) {
    if (patterns->dimension() != graph.dimension()) throw Error("dimension mismatch between patterns and graph");
    const double tol = graph.sigma() * (1.0 + 1e-12) + 1e-12;
    for (NodeId v = 0; v < n; ++v) {
      const Tag tv = graph.tag(v);
      double dist = 0.0;
      if (tv == Tag::VPlus) {
        dist = (graph.feature(v) - patterns->positive()).norm();
      } else if (tv == Tag::VMinus) {
        dist = (graph.feature(v) - patterns->negative()).norm();
      } else {
        dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 2; i < patterns->count(); ++i)
          dist = std::min(dist, (graph.feature(v) - patterns->patterns.col(i)).norm());
      }
      if (dist > tol)
        report.violations.push_back({Violation::Kind::NoiseBound, v, -1, "feature lies outside the sigma-ball of its pattern"});
    }
  }
  return report;
}

std::string format_exact(double value)
{
  // Shortest representation that parses back to the same double.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw Error("malformed number '" + std::string(text) + "'");
  return value;
}

namespace {

std::string next_line(std::istream& in, const char* what)
{
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) return line;
  }
  throw Error(std::string("unexpected end of input while reading ") + what);
}

std::vector<std::string> split_ws(const std::string& line)
{
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

long parse_int(const std::string& text, const char* what)
{
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(std::string("malformed ") + what + " '" + text + "'");
  return value;
}

void write_vector_line(std::ostream& out, const Eigen::Ref<const Eigen::VectorXd>& x)
{
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) out << ' ';
    out << format_exact(x[i]);
  }
  out << '\n';
}

Eigen::VectorXd read_vector_line(std::istream& in, Eigen::Index d, const char* what)
{
  const auto toks = split_ws(next_line(in, what));
  if (static_cast<Eigen::Index>(toks.size()) != d)
    throw Error(std::string("dimension mismatch in ") + what + ": expected " + std::to_string(d) + " values, got " +
                std::to_string(toks.size()));
  Eigen::VectorXd x(d);
  for (Eigen::Index i = 0; i < d; ++i) x[i] = parse_double(toks[static_cast<std::size_t>(i)]);
  return x;
}

}  // namespace

void save_graph(const StructuredGraph& graph, std::ostream& out)
{
  const NodeId n = graph.node_count();
  out << n << ' ' << graph.dimension() << ' ' << format_exact(graph.sigma()) << '\n';
  for (NodeId v = 0; v < n; ++v) write_vector_line(out, graph.feature(v));
  for (NodeId v = 0; v < n; ++v) out << graph.label(v) << ' ' << to_string(graph.tag(v)) << '\n';
  out << "edges " << graph.edge_count() << '\n';
  for (const auto& e : graph.edges()) out << e.u << ' ' << e.v << '\n';
}

StructuredGraph load_graph(std::istream& in)
{
  const auto header = split_ws(next_line(in, "header"));
  if (header.size() != 3) throw Error("malformed header: expected 'n d sigma'");
  const long n = parse_int(header[0], "header node count");
  const long d = parse_int(header[1], "header dimension");
  if (n < 0 || d < 1) throw Error("malformed header: n must be >= 0 and d >= 1");
  const double sigma = parse_double(header[2]);

  Eigen::MatrixXd features(d, n);
  for (long v = 0; v < n; ++v) features.col(v) = read_vector_line(in, d, "feature line");

  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<Tag> tags(static_cast<std::size_t>(n));
  for (long v = 0; v < n; ++v) {
    const auto toks = split_ws(next_line(in, "label line"));
    if (toks.size() != 2) throw Error("malformed label line: expected 'y tag'");
    labels[static_cast<std::size_t>(v)] = static_cast<int>(parse_int(toks[0], "label"));
    tags[static_cast<std::size_t>(v)] = parse_tag(toks[1]);
  }

  const auto edge_header = split_ws(next_line(in, "edge header"));
  if (edge_header.size() != 2 || edge_header[0] != "edges") throw Error("malformed edge header: expected 'edges m'");
  const long m = parse_int(edge_header[1], "edge count");
  if (m < 0) throw Error("malformed edge header: negative edge count");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    const auto toks = split_ws(next_line(in, "edge line"));
    if (toks.size() != 2) throw Error("malformed edge line: expected 'u v'");
    const long u = parse_int(toks[0], "edge endpoint");
    const long v = parse_int(toks[1], "edge endpoint");
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw Error("dangling edge endpoint (" + toks[0] + ", " + toks[1] + ")");
    edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  return StructuredGraph(std::move(features), std::move(labels), std::move(tags), std::move(edges), sigma);
}

void save_patterns(const PatternSet& patterns, std::ostream& out)
{
  out << patterns.count() << ' ' << patterns.dimension() << ' '
      << (patterns.mode == PatternMode::Orthogonal ? "orthogonal" : "relaxed") << '\n';
  for (Eigen::Index i = 0; i < patterns.count(); ++i) write_vector_line(out, patterns.patterns.col(i));
}

PatternSet load_patterns(std::istream& in)
{
  const auto header = split_ws(next_line(in, "pattern header"));
  if (header.size() != 3) throw Error("malformed pattern header: expected 'L d mode'");
  const long L = parse_int(header[0], "pattern count");
  const long d = parse_int(header[1], "pattern dimension");
  if (L < 2 || d < 1) throw Error("malformed pattern header");
  PatternSet out;
  if (header[2] == "orthogonal") out.mode = PatternMode::Orthogonal;
  else if (header[2] == "relaxed") out.mode = PatternMode::Relaxed;
  else throw Error("unknown pattern mode '" + header[2] + "'");
  out.patterns.resize(d, L);
  for (long i = 0; i < L; ++i) out.patterns.col(i) = read_vector_line(in, d, "pattern line");
  return out;
}

}  // namespace sgnn
