#pragma once

#include "sgnn/graph.hpp"

#include <Eigen/Core>

namespace fixtures {

// The 4-node toy graph: 0 in V+, 1 in V_N+, 2 in V_N-, 3 in V-; edges 0-1, 2-3.
inline sgnn::StructuredGraph toy_graph(bool cross_edge = false)
{
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 4);
  x(0, 0) = 1.0;
  x(2, 1) = 1.0;
  x(2, 2) = 1.0;
  x(1, 3) = 1.0;
  std::vector<sgnn::Edge> edges{{0, 1}, {2, 3}};
  if (cross_edge) edges.push_back({0, 2});
  return sgnn::StructuredGraph(x, {1, 1, -1, -1},
                               {sgnn::Tag::VPlus, sgnn::Tag::VNPlus, sgnn::Tag::VNMinus, sgnn::Tag::VMinus}, edges, 0.0);
}

// Star graph: node 0 has `leaves` neighbors; used by aggregate/forward oracles.
inline sgnn::StructuredGraph untagged_graph(const Eigen::MatrixXd& features, std::vector<sgnn::Edge> edges)
{
  const auto n = static_cast<std::size_t>(features.cols());
  return sgnn::StructuredGraph(features, std::vector<int>(n, 1), std::vector<sgnn::Tag>(n, sgnn::Tag::Unknown),
                               std::move(edges), 0.0);
}

}  // namespace fixtures
