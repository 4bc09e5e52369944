#include "mglgcp/fd_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "mglgcp/errors.hpp"

namespace mglgcp {

FdOracle fd_covariance_oracle(const MetricGraph& graph, double kappa, double tau, double cells_per_unit,
                              const std::vector<PointOnGraph>& probes) {
  if (!(kappa > 0.0) || !(tau > 0.0) || !(cells_per_unit > 0.0))
    throw NonpositiveParameter("kappa, tau and cells_per_unit must be positive");

  FdOracle out;
  const auto nv = static_cast<int>(graph.num_vertices());
  for (int v = 0; v < nv; ++v) {
    const EdgeEnd& end = graph.incidences(v).front();
    out.grid.push_back({end.edge, end.at_start ? 0.0 : graph.edge(end.edge).length});
  }

  // node_of[e][k] = grid index of position k * h_e on edge e.
  std::vector<std::vector<int>> node_of(graph.num_edges());
  std::vector<Eigen::Triplet<double>> stiffness;
  std::vector<double> mass(static_cast<std::size_t>(nv), 0.0);
  for (std::size_t ei = 0; ei < graph.num_edges(); ++ei) {
    const Edge& e = graph.edge(static_cast<EdgeIndex>(ei));
    const int n = std::max(8, static_cast<int>(std::ceil(e.length * cells_per_unit - 1e-9)));
    out.cells.push_back(n);
    const double h = e.length / n;
    auto& nodes = node_of[ei];
    nodes.push_back(e.from);
    for (int k = 1; k < n; ++k) {
      nodes.push_back(static_cast<int>(out.grid.size()));
      out.grid.push_back({static_cast<EdgeIndex>(ei), e.length * k / n});
      mass.push_back(0.0);
    }
    nodes.push_back(e.to);
    for (int k = 0; k < n; ++k) {
      const int a = nodes[static_cast<std::size_t>(k)];
      const int b = nodes[static_cast<std::size_t>(k) + 1];
      // Flux (u_a - u_b)/h through each cell face; the control volume of a
      // node is half of each adjacent cell, which at a vertex sums over all
      // incident edges and enforces the Kirchhoff condition.
      stiffness.emplace_back(a, a, 1.0 / h);
      stiffness.emplace_back(b, b, 1.0 / h);
      stiffness.emplace_back(a, b, -1.0 / h);
      stiffness.emplace_back(b, a, -1.0 / h);
      mass[static_cast<std::size_t>(a)] += 0.5 * h;
      mass[static_cast<std::size_t>(b)] += 0.5 * h;
    }
  }
  const auto size = static_cast<Eigen::Index>(out.grid.size());
  for (Eigen::Index i = 0; i < size; ++i) stiffness.emplace_back(i, i, kappa * kappa * mass[static_cast<std::size_t>(i)]);
  SparseMatrix Q(size, size);
  Q.setFromTriplets(stiffness.begin(), stiffness.end());
  Q *= tau * tau;

  std::vector<int> probe_nodes;
  for (const PointOnGraph& p : probes) {
    graph.check_point(p);
    const Edge& e = graph.edge(p.edge);
    const int n = out.cells[static_cast<std::size_t>(p.edge)];
    const auto k = static_cast<std::size_t>(std::lround(p.t / e.length * n));
    const int node = node_of[static_cast<std::size_t>(p.edge)][k];
    probe_nodes.push_back(node);
    out.probes.push_back({p.edge, e.length * static_cast<double>(k) / n});
  }

  const CholeskyFactor factor(Q);
  Matrix rhs = Matrix::Zero(size, static_cast<Eigen::Index>(probe_nodes.size()));
  for (std::size_t j = 0; j < probe_nodes.size(); ++j) rhs(probe_nodes[j], static_cast<Eigen::Index>(j)) = 1.0;
  const Matrix x = factor.solve(rhs);
  out.covariance.resize(rhs.cols(), rhs.cols());
  for (Eigen::Index i = 0; i < rhs.cols(); ++i)
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) out.covariance(i, j) = x(probe_nodes[static_cast<std::size_t>(i)], j);
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

}  // namespace mglgcp
