// graph.hpp - compact metric graphs: edges are intervals [0, length] glued at vertices.
//
// Vertices and edges carry opaque string ids (as read from files) and dense
// integer indices used everywhere internally. A MetricGraph is immutable once
// built; all editing operations return a new graph.

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mglgcp {

using VertexIndex = int;
using EdgeIndex = int;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

using Polyline = std::vector<Point2>;

double polyline_length(const Polyline& line);

struct Edge {
  std::string id;
  VertexIndex from = -1;  // position t = 0
  VertexIndex to = -1;    // position t = length
  double length = 0.0;
  std::optional<Polyline> geometry;  // plotting only; never used for computation

  bool is_loop() const { return from == to; }
};

// A location s = (e, t) with 0 <= t <= length(e).
struct PointOnGraph {
  EdgeIndex edge = -1;
  double t = 0.0;

  friend bool operator==(const PointOnGraph&, const PointOnGraph&) = default;
};

// One incidence of an edge at a vertex. A loop edge appears twice at its vertex.
struct EdgeEnd {
  EdgeIndex edge;
  bool at_start;  // true: t = 0 end, false: t = length end
};

struct EdgeRecord {
  std::string id;
  std::string from;
  std::string to;
  std::optional<double> length;
  std::optional<Polyline> geometry;
};

class MetricGraph {
 public:
  MetricGraph() = default;

  std::size_t num_vertices() const { return vertex_ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const Edge& edge(EdgeIndex e) const { return edges_.at(static_cast<std::size_t>(e)); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& vertex_id(VertexIndex v) const { return vertex_ids_.at(static_cast<std::size_t>(v)); }
  const std::vector<std::string>& vertex_ids() const { return vertex_ids_; }

  std::optional<VertexIndex> find_vertex(std::string_view id) const;
  std::optional<EdgeIndex> find_edge(std::string_view id) const;

  const std::vector<EdgeEnd>& incidences(VertexIndex v) const { return incidence_.at(static_cast<std::size_t>(v)); }
  // deg(v) = |E_v| with loops counted twice.
  int degree(VertexIndex v) const { return static_cast<int>(incidences(v).size()); }

  // |Γ| = sum of edge lengths.
  double total_length() const { return total_length_; }
  bool has_loops() const;
  bool all_edges_have_geometry() const;

  // Throws PointOffEdge when p is not on an existing edge.
  void check_point(const PointOnGraph& p) const;

  // Vertex located at (e, t) if t is 0 or length, otherwise nullopt.
  std::optional<VertexIndex> vertex_at(const PointOnGraph& p) const;

  // Assembles a graph from already-indexed parts. Validates lengths, duplicate
  // edge ids and connectivity.
  static MetricGraph assemble(std::vector<std::string> vertex_ids, std::vector<Edge> edges);

 private:
  std::vector<std::string> vertex_ids_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeEnd>> incidence_;
  std::unordered_map<std::string, VertexIndex> vertex_lookup_;
  std::unordered_map<std::string, EdgeIndex> edge_lookup_;
  double total_length_ = 0.0;
};

// Builds a connected metric graph. Vertices are indexed in order of first
// appearance. When only a polyline is given the length is its arc length.
// Throws NonpositiveLength, DuplicateEdgeId, DisconnectedGraph.
MetricGraph build_graph(const std::vector<EdgeRecord>& records);

// Result of splitting edges at interior points.
struct Subdivision {
  MetricGraph graph;
  // Vertex of `graph` for each requested point (in request order).
  std::vector<VertexIndex> point_vertex;

  // For every original edge: sorted interior cut positions and the new edges
  // covering [cut_{k-1}, cut_k].
  struct Split {
    std::vector<double> cuts;
    std::vector<EdgeIndex> pieces;
  };
  std::vector<Split> splits;

  // Maps a location on the original graph to the same location on `graph`.
  PointOnGraph map_point(const PointOnGraph& p) const;
};

// Relative tolerance under which a cut snaps to an existing vertex or cut.
inline constexpr double kSnapTolerance = 1e-9;

// Adds degree-2 vertices at the requested points. Endpoints map to the
// existing vertex; points within kSnapTolerance * length of a vertex or of
// another cut on the same edge are merged. Throws PointOffEdge.
Subdivision subdivide_at(const MetricGraph& graph, const std::vector<PointOnGraph>& points);

struct PruneResult {
  MetricGraph graph;
  // Unprotected degree-2 vertices kept because removing them would leave a
  // cycle without any vertex.
  std::vector<std::string> skipped;
  std::size_t removed = 0;
};

// Merges the two edges at every unprotected degree-2 vertex. Merged lengths
// are sums of parts; a chain of pieces named `<id>:0 .. <id>:k` (as produced
// by subdivide_at) recovers the id `<id>` and its original orientation.
PruneResult prune_degree2(const MetricGraph& graph, const std::set<std::string>& protected_vertices = {});

// Shortest-path distance between two points on the graph.
double geodesic_distance(const MetricGraph& graph, const PointOnGraph& a, const PointOnGraph& b);

// Dijkstra from a set of weighted sources over the vertex set.
std::vector<double> vertex_distances(const MetricGraph& graph,
                                     const std::vector<std::pair<VertexIndex, double>>& sources);

// Diagonal of the bounding box of the edge geometries, or the largest
// vertex-to-vertex geodesic distance when geometry is missing.
double graph_extent(const MetricGraph& graph);

}  // namespace mglgcp
