#include "mglgcp/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "mglgcp/errors.hpp"

namespace mglgcp {

double Mesh::total_weight() const {
  // Kahan summation; telescoping cell widths should reproduce |Γ| to rounding.
  double sum = 0.0;
  double comp = 0.0;
  for (double w : weights) {
    const double y = w - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

int Mesh::min_cells() const {
  return cells_per_edge.empty() ? 0 : *std::min_element(cells_per_edge.begin(), cells_per_edge.end());
}

std::size_t Mesh::first_node(EdgeIndex e) const {
  std::size_t offset = 0;
  for (EdgeIndex k = 0; k < e; ++k) offset += static_cast<std::size_t>(cells_per_edge.at(static_cast<std::size_t>(k)));
  return offset;
}

std::size_t Mesh::cell_of(const PointOnGraph& p) const {
  const auto& q = boundaries.at(static_cast<std::size_t>(p.edge));
  auto it = std::upper_bound(q.begin() + 1, q.end() - 1, p.t);
  return first_node(p.edge) + static_cast<std::size_t>(it - (q.begin() + 1));
}

Mesh mesh_from_partition(const MetricGraph& graph, const std::vector<std::vector<double>>& partitions) {
  if (partitions.size() != graph.num_edges()) throw InputError("one partition per edge is required");
  Mesh mesh;
  mesh.boundaries = partitions;
  for (std::size_t e = 0; e < partitions.size(); ++e) {
    const auto& q = partitions[e];
    const double len = graph.edge(static_cast<EdgeIndex>(e)).length;
    if (q.size() < 2 || q.front() != 0.0 || q.back() != len)
      throw InputError("partition of edge '" + graph.edge(static_cast<EdgeIndex>(e)).id + "' must span [0, length]");
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
      if (!(q[i + 1] > q[i])) throw InputError("partition points must increase strictly");
      mesh.nodes.push_back({static_cast<EdgeIndex>(e), 0.5 * (q[i] + q[i + 1])});
      mesh.weights.push_back(q[i + 1] - q[i]);
    }
    mesh.cells_per_edge.push_back(static_cast<int>(q.size() - 1));
  }
  return mesh;
}

Mesh build_mesh_with_counts(const MetricGraph& graph, const std::vector<int>& counts) {
  if (counts.size() != graph.num_edges()) throw InputError("one cell count per edge is required");
  std::vector<std::vector<double>> partitions(graph.num_edges());
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const int p = counts[e];
    if (p < 1) throw InputError("cell count must be at least 1");
    const double len = graph.edge(static_cast<EdgeIndex>(e)).length;
    auto& q = partitions[e];
    q.resize(static_cast<std::size_t>(p) + 1);
    for (int i = 0; i <= p; ++i) q[static_cast<std::size_t>(i)] = len * i / p;
    q.back() = len;
  }
  return mesh_from_partition(graph, partitions);
}

Mesh build_mesh(const MetricGraph& graph, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw NonpositiveParameter("mesh spacing h must be positive");
  std::vector<int> counts;
  counts.reserve(graph.num_edges());
  for (const Edge& e : graph.edges()) {
    const double ratio = e.length / h;
    // Absorb rounding in ratios such as 1.0/0.5 so exact multiples are not bumped up.
    double p = std::ceil(ratio * (1.0 - 1e-12));
    counts.push_back(std::max(1, static_cast<int>(p)));
  }
  return build_mesh_with_counts(graph, counts);
}

Mesh build_mesh_total(const MetricGraph& graph, int total_cells) {
  if (total_cells < 1) throw InputError("total cell count must be positive");
  std::vector<int> counts;
  for (const Edge& e : graph.edges())
    counts.push_back(std::max(1, static_cast<int>(std::lround(total_cells * e.length / graph.total_length()))));
  return build_mesh_with_counts(graph, counts);
}

}  // namespace mglgcp
