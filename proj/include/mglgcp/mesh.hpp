#pragma once

#include <vector>

#include "mglgcp/graph.hpp"

namespace mglgcp {

// Midpoint integration mesh. Cell i on edge e spans [boundaries[e][k], boundaries[e][k+1]]
// and is represented by one node inside it with weight equal to its width.
struct Mesh {
  std::vector<PointOnGraph> nodes;
  std::vector<double> weights;
  std::vector<std::vector<double>> boundaries;  // per edge, p_e + 1 partition points
  std::vector<int> cells_per_edge;              // p_e

  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
  // ||p|| = min_e p_e
  int min_cells() const;
  // Index of the first node on edge e.
  std::size_t first_node(EdgeIndex e) const;
  // Cell containing p; a point on a shared boundary belongs to the cell on its right.
  std::size_t cell_of(const PointOnGraph& p) const;
};

// p_e = ceil(length_e / h) equal cells per edge, nodes at the cell midpoints.
Mesh build_mesh(const MetricGraph& graph, double h);

// Equal cells with an explicit count per edge.
Mesh build_mesh_with_counts(const MetricGraph& graph, const std::vector<int>& counts);

// Splits `total_cells` over edges in proportion to length (at least one cell each).
Mesh build_mesh_total(const MetricGraph& graph, int total_cells);

// Arbitrary partition per edge; nodes at the midpoint of each cell.
// Partition points must start at 0, end at the edge length and increase strictly.
Mesh mesh_from_partition(const MetricGraph& graph, const std::vector<std::vector<double>>& partitions);

}  // namespace mglgcp
