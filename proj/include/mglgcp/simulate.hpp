#pragma once

#include <cstdint>
#include <functional>

#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"
#include "mglgcp/likelihood.hpp"
#include "mglgcp/mesh.hpp"

namespace mglgcp {

using MeanFunction = std::function<double(const PointOnGraph&)>;

// Everything drawn by one simulation.
struct LgcpSimulation {
  Mesh mesh;                 // simulation mesh
  Vector field;              // u at the mesh nodes
  Vector log_intensity;      // m + u at the mesh nodes
  PointPattern pattern;
};

// Piecewise-constant intensity exp(m + u) on a mesh of spacing h_sim, with u
// drawn exactly at the cell midpoints. Streams: ("field", 0) and ("events", 0).
LgcpSimulation simulate_lgcp_detailed(const MetricGraph& graph, const HyperParams& hp, const MeanFunction& mean,
                                      double h_sim, std::uint64_t seed);

PointPattern simulate_lgcp(const MetricGraph& graph, const HyperParams& hp, const MeanFunction& mean, double h_sim,
                           std::uint64_t seed);

// Poisson count per cell with mean weight * exp(log_intensity), events uniform
// within the cell, listed cell by cell in increasing t.
PointPattern place_events(const Mesh& mesh, const Vector& log_intensity, std::uint64_t seed,
                          std::uint64_t stream = 0);

inline MeanFunction constant_mean(double m) {
  return [m](const PointOnGraph&) { return m; };
}

}  // namespace mglgcp
