#pragma once

#include <vector>

#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"

namespace mglgcp {

// Finite-volume discretization of tau^2 (kappa^2 - Δ_Γ) with Kirchhoff
// flux balance at the vertices: a grid with at least 8 cells per edge, each
// vertex one shared grid node. The covariance of the discrete field approximates
// the alpha = 1 Whittle-Matérn covariance to second order in the spacing.
struct FdOracle {
  std::vector<PointOnGraph> grid;  // vertices first (as (edge, 0 or length)), then interior nodes
  std::vector<int> cells;          // per edge
  // Covariance at the probes, each snapped to its nearest grid node.
  std::vector<PointOnGraph> probes;
  Matrix covariance;
};

FdOracle fd_covariance_oracle(const MetricGraph& graph, double kappa, double tau, double cells_per_unit,
                              const std::vector<PointOnGraph>& probes);

}  // namespace mglgcp
