#include "sgnn/model.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace sgnn {

std::string_view to_string(NormMode mode) noexcept
{
  return mode == NormMode::OverK ? "over_K" : "over_surviving";
}

NormMode parse_norm_mode(std::string_view text)
{
  if (text == "over_K" || text == "over_k") return NormMode::OverK;
  if (text == "over_surviving") return NormMode::OverSurviving;
  throw Error("unknown normalization mode '" + std::string(text) + "'");
}

NeighborhoodBatch full_neighborhoods(const StructuredGraph& graph, std::span<const NodeId> nodes)
{
  NeighborhoodBatch batch;
  batch.centers.reserve(nodes.size());
  for (NodeId v : nodes) {
    auto adj = graph.neighbors(v);
    batch.centers.push_back(v);
    batch.members.push_back(v);
    batch.members.insert(batch.members.end(), adj.begin(), adj.end());
    batch.offsets.push_back(batch.members.size());
  }
  return batch;
}

Eigen::MatrixXd pooled_input_average(const StructuredGraph& graph, std::span<const NodeId> nodes,
                                     const NeighborhoodBatch& batch, const BatchActivations& acts, bool class_balanced)
{
  const Eigen::Index K = acts.activation.rows();
  std::size_t pos = 0;
  for (NodeId v : nodes) pos += graph.label(v) > 0;
  const std::size_t neg = nodes.size() - pos;
  const double w_pos = class_balanced ? (pos ? 1.0 / static_cast<double>(pos) : 0.0) : 1.0 / static_cast<double>(nodes.size());
  const double w_neg = class_balanced ? (neg ? 1.0 / static_cast<double>(neg) : 0.0) : 1.0 / static_cast<double>(nodes.size());
  const auto U = static_cast<Eigen::Index>(acts.unique_nodes.size());
  // Label-weighted winner counts, U x K, accumulated in batch order.
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(U, K);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double y = graph.label(nodes[i]) > 0 ? w_pos : -w_neg;
    for (Eigen::Index k = 0; k < K; ++k) {
      const NodeId w = acts.winner(k, static_cast<Eigen::Index>(i));
      if (w < 0) continue;
      const auto j = std::lower_bound(acts.unique_nodes.begin(), acts.unique_nodes.end(), w) - acts.unique_nodes.begin();
      counts(j, k) += y;
    }
  }
  return acts.gathered * counts;
}

void save_checkpoint(const Model& model, std::ostream& out)
{
  out << model.width() << ' ' << model.dimension() << ' ' << to_string(model.norm) << '\n';
  for (Eigen::Index k = 0; k < model.width(); ++k) out << (k ? " " : "") << (model.b[k] > 0 ? "1" : "-1");
  out << '\n';
  for (Eigen::Index k = 0; k < model.width(); ++k) out << (k ? " " : "") << (model.alive[k] ? '1' : '0');
  out << '\n';
  for (Eigen::Index k = 0; k < model.width(); ++k) {
    for (Eigen::Index i = 0; i < model.dimension(); ++i) out << (i ? " " : "") << format_exact(model.W(i, k));
    out << '\n';
  }
}

namespace {

std::vector<std::string> tokens_of(std::istream& in, const char* what)
{
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
  }
  throw Error(std::string("unexpected end of checkpoint while reading ") + what);
}

}  // namespace

Model load_checkpoint(std::istream& in)
{
  const auto header = tokens_of(in, "header");
  if (header.size() != 3) throw Error("malformed checkpoint header: expected 'K d normmode'");
  const auto K = static_cast<Eigen::Index>(std::stol(header[0]));
  const auto d = static_cast<Eigen::Index>(std::stol(header[1]));
  if (K < 1 || d < 1) throw Error("malformed checkpoint header");
  const NormMode norm = parse_norm_mode(header[2]);

  const auto signs = tokens_of(in, "sign line");
  const auto mask = tokens_of(in, "mask line");
  if (static_cast<Eigen::Index>(signs.size()) != K || static_cast<Eigen::Index>(mask.size()) != K)
    throw Error("dimension mismatch in checkpoint sign/mask lines");
  Eigen::VectorXd b(K);
  for (Eigen::Index k = 0; k < K; ++k) b[k] = parse_double(signs[static_cast<std::size_t>(k)]);

  Eigen::MatrixXd W(d, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto row = tokens_of(in, "weight row");
    if (static_cast<Eigen::Index>(row.size()) != d) throw Error("dimension mismatch in checkpoint weight row");
    for (Eigen::Index i = 0; i < d; ++i) W(i, k) = parse_double(row[static_cast<std::size_t>(i)]);
  }
  Model model(std::move(W), std::move(b), norm);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& m = mask[static_cast<std::size_t>(k)];
    if (m != "0" && m != "1") throw Error("mask entries must be 0 or 1");
    model.alive[k] = m == "1";
  }
  return model;
}

}  // namespace sgnn
