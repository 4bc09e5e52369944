#include "mglgcp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include "mglgcp/errors.hpp"

namespace mglgcp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string unique_label(std::string base, const std::function<bool(const std::string&)>& taken) {
  if (!taken(base)) return base;
  for (int k = 1;; ++k) {
    std::string candidate = base + "'" + std::to_string(k);
    if (!taken(candidate)) return candidate;
  }
}

Polyline reversed(Polyline line) {
  std::reverse(line.begin(), line.end());
  return line;
}

// Point at arc-length position t along a polyline.
Point2 point_along(const Polyline& line, double t) {
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
    if (walked + seg >= t || i + 1 == line.size()) {
      const double f = seg > 0.0 ? std::clamp((t - walked) / seg, 0.0, 1.0) : 0.0;
      return {line[i - 1].x + f * (line[i].x - line[i - 1].x), line[i - 1].y + f * (line[i].y - line[i - 1].y)};
    }
    walked += seg;
  }
  return line.front();
}

// Sub-polyline between arc-length positions a < b, rescaled from the edge
// length to the polyline's own length.
Polyline cut_polyline(const Polyline& line, double edge_length, double a, double b) {
  const double scale = polyline_length(line) / edge_length;
  a *= scale;
  b *= scale;
  Polyline out{point_along(line, a)};
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    walked += std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
    if (walked > a && walked < b) out.push_back(line[i]);
  }
  out.push_back(point_along(line, b));
  return out;
}

}  // namespace

double polyline_length(const Polyline& line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += std::hypot(line[i].x - line[i - 1].x, line[i].y - line[i - 1].y);
  return total;
}

std::optional<VertexIndex> MetricGraph::find_vertex(std::string_view id) const {
  auto it = vertex_lookup_.find(std::string(id));
  if (it == vertex_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeIndex> MetricGraph::find_edge(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

bool MetricGraph::has_loops() const {
  return std::any_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.is_loop(); });
}

bool MetricGraph::all_edges_have_geometry() const {
  return !edges_.empty() && std::all_of(edges_.begin(), edges_.end(), [](const Edge& e) { return e.geometry.has_value(); });
}

void MetricGraph::check_point(const PointOnGraph& p) const {
  if (p.edge < 0 || static_cast<std::size_t>(p.edge) >= edges_.size())
    throw PointOffEdge("point refers to unknown edge index " + std::to_string(p.edge));
  const double len = edges_[static_cast<std::size_t>(p.edge)].length;
  if (!(p.t >= 0.0 && p.t <= len))
    throw PointOffEdge("t = " + std::to_string(p.t) + " outside [0, " + std::to_string(len) + "] on edge '" +
                       edges_[static_cast<std::size_t>(p.edge)].id + "'");
}

std::optional<VertexIndex> MetricGraph::vertex_at(const PointOnGraph& p) const {
  const Edge& e = edge(p.edge);
  if (p.t == 0.0) return e.from;
  if (p.t == e.length) return e.to;
  return std::nullopt;
}

MetricGraph MetricGraph::assemble(std::vector<std::string> vertex_ids, std::vector<Edge> edges) {
  MetricGraph g;
  g.vertex_ids_ = std::move(vertex_ids);
  g.edges_ = std::move(edges);
  g.incidence_.assign(g.vertex_ids_.size(), {});

  for (std::size_t v = 0; v < g.vertex_ids_.size(); ++v) {
    if (!g.vertex_lookup_.emplace(g.vertex_ids_[v], static_cast<VertexIndex>(v)).second)
      throw InputError("duplicate vertex id '" + g.vertex_ids_[v] + "'");
  }
  if (g.edges_.empty()) throw InputError("graph has no edges");

  for (std::size_t i = 0; i < g.edges_.size(); ++i) {
    Edge& e = g.edges_[i];
    if (!(e.length > 0.0) || !std::isfinite(e.length))
      throw NonpositiveLength("edge '" + e.id + "' has nonpositive or non-finite length");
    if (e.from < 0 || e.to < 0 || static_cast<std::size_t>(e.from) >= g.vertex_ids_.size() ||
        static_cast<std::size_t>(e.to) >= g.vertex_ids_.size())
      throw InputError("edge '" + e.id + "' refers to an unknown vertex");
    if (e.geometry) {
      const double arc = polyline_length(*e.geometry);
      if (e.geometry->size() < 2 || std::abs(arc - e.length) > 1e-9 * e.length)
        throw InputError("edge '" + e.id + "' geometry length does not match its length");
    }
    if (!g.edge_lookup_.emplace(e.id, static_cast<EdgeIndex>(i)).second)
      throw DuplicateEdgeId("duplicate edge id '" + e.id + "'");
    g.incidence_[static_cast<std::size_t>(e.from)].push_back({static_cast<EdgeIndex>(i), true});
    g.incidence_[static_cast<std::size_t>(e.to)].push_back({static_cast<EdgeIndex>(i), false});
    g.total_length_ += e.length;
  }

  // Connectivity by BFS over vertices.
  std::vector<char> seen(g.vertex_ids_.size(), 0);
  std::vector<VertexIndex> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const VertexIndex v = stack.back();
    stack.pop_back();
    for (const EdgeEnd& end : g.incidence_[static_cast<std::size_t>(v)]) {
      const Edge& e = g.edges_[static_cast<std::size_t>(end.edge)];
      const VertexIndex w = end.at_start ? e.to : e.from;
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != g.vertex_ids_.size())
    throw DisconnectedGraph("graph is disconnected: " + std::to_string(reached) + " of " +
                            std::to_string(g.vertex_ids_.size()) + " vertices reachable");
  return g;
}

MetricGraph build_graph(const std::vector<EdgeRecord>& records) {
  std::vector<std::string> vertex_ids;
  std::unordered_map<std::string, VertexIndex> index;
  auto vertex = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, static_cast<VertexIndex>(vertex_ids.size()));
    if (inserted) vertex_ids.push_back(id);
    return it->second;
  };

  std::vector<Edge> edges;
  edges.reserve(records.size());
  for (const EdgeRecord& r : records) {
    Edge e;
    e.id = r.id;
    e.from = vertex(r.from);
    e.to = vertex(r.to);
    e.geometry = r.geometry;
    if (r.length) {
      e.length = *r.length;
    } else if (r.geometry) {
      e.length = polyline_length(*r.geometry);
    } else {
      throw InputError("edge '" + r.id + "' has neither length nor geometry");
    }
    if (!(e.length > 0.0) || !std::isfinite(e.length))
      throw NonpositiveLength("edge '" + r.id + "' has nonpositive or non-finite length");
    edges.push_back(std::move(e));
  }
  return MetricGraph::assemble(std::move(vertex_ids), std::move(edges));
}

PointOnGraph Subdivision::map_point(const PointOnGraph& p) const {
  const Split& s = splits.at(static_cast<std::size_t>(p.edge));
  if (s.cuts.empty()) return {s.pieces.front(), p.t};
  auto it = std::upper_bound(s.cuts.begin(), s.cuts.end(), p.t);
  const std::size_t k = static_cast<std::size_t>(it - s.cuts.begin());
  const double start = k == 0 ? 0.0 : s.cuts[k - 1];
  const Edge& piece = graph.edge(s.pieces[k]);
  return {s.pieces[k], std::clamp(p.t - start, 0.0, piece.length)};
}

Subdivision subdivide_at(const MetricGraph& graph, const std::vector<PointOnGraph>& points) {
  for (const PointOnGraph& p : points) graph.check_point(p);

  // Collect and merge cut positions per edge.
  std::vector<std::vector<double>> cuts(graph.num_edges());
  for (const PointOnGraph& p : points) {
    const double len = graph.edge(p.edge).length;
    const double tol = kSnapTolerance * len;
    if (p.t <= tol || p.t >= len - tol) continue;
    cuts[static_cast<std::size_t>(p.edge)].push_back(p.t);
  }
  for (std::size_t e = 0; e < cuts.size(); ++e) {
    auto& c = cuts[e];
    std::sort(c.begin(), c.end());
    const double tol = kSnapTolerance * graph.edge(static_cast<EdgeIndex>(e)).length;
    std::vector<double> merged;
    for (double t : c)
      if (merged.empty() || t - merged.back() > tol) merged.push_back(t);
    c = std::move(merged);
  }

  std::vector<std::string> vertex_ids = graph.vertex_ids();
  std::unordered_map<std::string, int> vertex_taken;
  for (const auto& id : vertex_ids) vertex_taken.emplace(id, 0);
  std::unordered_map<std::string, int> edge_taken;
  for (const Edge& e : graph.edges()) edge_taken.emplace(e.id, 0);

  Subdivision out;
  out.splits.resize(graph.num_edges());
  std::vector<std::vector<VertexIndex>> cut_vertex(graph.num_edges());
  std::vector<Edge> edges;

  for (std::size_t ei = 0; ei < graph.num_edges(); ++ei) {
    const Edge& e = graph.edge(static_cast<EdgeIndex>(ei));
    const auto& c = cuts[ei];
    auto& split = out.splits[ei];
    split.cuts = c;
    if (c.empty()) {
      split.pieces.push_back(static_cast<EdgeIndex>(edges.size()));
      edges.push_back(e);
      continue;
    }
    std::vector<VertexIndex> chain{e.from};
    for (std::size_t k = 0; k < c.size(); ++k) {
      std::string label = unique_label(e.id + "#" + std::to_string(k),
                                       [&](const std::string& s) { return vertex_taken.count(s) > 0; });
      vertex_taken.emplace(label, 0);
      chain.push_back(static_cast<VertexIndex>(vertex_ids.size()));
      cut_vertex[ei].push_back(chain.back());
      vertex_ids.push_back(std::move(label));
    }
    chain.push_back(e.to);
    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
      const double a = k == 0 ? 0.0 : c[k - 1];
      const double b = k == c.size() ? e.length : c[k];
      Edge piece;
      piece.id = unique_label(e.id + ":" + std::to_string(k),
                              [&](const std::string& s) { return edge_taken.count(s) > 0; });
      edge_taken.emplace(piece.id, 0);
      piece.from = chain[k];
      piece.to = chain[k + 1];
      piece.length = b - a;
      if (e.geometry) piece.geometry = cut_polyline(*e.geometry, e.length, a, b);
      if (piece.geometry) {
        // Keep the geometry consistent with the numerical piece length.
        const double arc = polyline_length(*piece.geometry);
        if (std::abs(arc - piece.length) > 1e-9 * piece.length) piece.geometry.reset();
      }
      split.pieces.push_back(static_cast<EdgeIndex>(edges.size()));
      edges.push_back(std::move(piece));
    }
  }

  out.graph = MetricGraph::assemble(std::move(vertex_ids), std::move(edges));
  out.point_vertex.reserve(points.size());
  for (const PointOnGraph& p : points) {
    const Edge& e = graph.edge(p.edge);
    const double tol = kSnapTolerance * e.length;
    if (p.t <= tol) {
      out.point_vertex.push_back(e.from);
    } else if (p.t >= e.length - tol) {
      out.point_vertex.push_back(e.to);
    } else {
      const auto& c = cuts[static_cast<std::size_t>(p.edge)];
      // Nearest merged cut.
      auto it = std::lower_bound(c.begin(), c.end(), p.t - tol);
      std::size_t k = static_cast<std::size_t>(it - c.begin());
      if (k > 0 && (k == c.size() || std::abs(c[k - 1] - p.t) < std::abs(c[k] - p.t))) --k;
      out.point_vertex.push_back(cut_vertex[static_cast<std::size_t>(p.edge)][k]);
    }
  }
  return out;
}

namespace {

// Working edge for pruning: endpoints, length and the ordered list of parts.
struct ChainEdge {
  VertexIndex from;
  VertexIndex to;
  double length;
  std::vector<std::pair<std::string, bool>> parts;  // (original id, traversed forward)
  std::optional<Polyline> geometry;
  bool alive = true;
};

// "<stem>:<k>" -> (stem, k)
std::optional<std::pair<std::string, long>> split_piece_id(const std::string& id) {
  const auto pos = id.rfind(':');
  if (pos == std::string::npos || pos + 1 == id.size()) return std::nullopt;
  long k = 0;
  for (std::size_t i = pos + 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return std::nullopt;
    k = k * 10 + (id[i] - '0');
  }
  return std::make_pair(id.substr(0, pos), k);
}

// Recover "<stem>" when parts are exactly stem:0..stem:m; returns the id and
// whether the chain must be reversed to restore the original orientation.
std::pair<std::string, bool> merged_name(const ChainEdge& c) {
  std::vector<std::pair<std::string, long>> pieces;
  bool consistent = true;
  for (const auto& [id, fwd] : c.parts) {
    auto p = split_piece_id(id);
    if (!p) {
      consistent = false;
      break;
    }
    pieces.push_back(*p);
  }
  const std::size_t m = c.parts.size();
  if (consistent && m > 1) {
    const bool same_stem = std::all_of(pieces.begin(), pieces.end(), [&](const auto& p) { return p.first == pieces[0].first; });
    bool ascending = true;
    bool descending = true;
    for (std::size_t i = 0; i < m; ++i) {
      ascending = ascending && pieces[i].second == static_cast<long>(i) && c.parts[i].second;
      descending = descending && pieces[i].second == static_cast<long>(m - 1 - i) && !c.parts[i].second;
    }
    if (same_stem && (ascending || descending)) return {pieces[0].first, descending};
  }
  std::string joined;
  for (const auto& [id, fwd] : c.parts) {
    if (!joined.empty()) joined += "+";
    joined += id;
  }
  return {joined, false};
}

}  // namespace

PruneResult prune_degree2(const MetricGraph& graph, const std::set<std::string>& protected_vertices) {
  std::vector<ChainEdge> chains;
  chains.reserve(graph.num_edges());
  for (const Edge& e : graph.edges()) chains.push_back({e.from, e.to, e.length, {{e.id, true}}, e.geometry, true});

  // Incidence as chain indices; loops listed twice.
  std::vector<std::vector<int>> inc(graph.num_vertices());
  for (std::size_t i = 0; i < chains.size(); ++i) {
    inc[static_cast<std::size_t>(chains[i].from)].push_back(static_cast<int>(i));
    inc[static_cast<std::size_t>(chains[i].to)].push_back(static_cast<int>(i));
  }
  auto detach = [&](VertexIndex v, int c) {
    auto& list = inc[static_cast<std::size_t>(v)];
    list.erase(std::find(list.begin(), list.end(), c));
  };

  PruneResult result;
  std::vector<char> removed(graph.num_vertices(), 0);
  for (std::size_t vi = 0; vi < graph.num_vertices(); ++vi) {
    const VertexIndex v = static_cast<VertexIndex>(vi);
    if (inc[vi].size() != 2 || protected_vertices.count(graph.vertex_id(v))) continue;
    const int c1 = inc[vi][0];
    const int c2 = inc[vi][1];
    if (c1 == c2) {
      // A single loop: removing v would leave a cycle with no vertex.
      result.skipped.push_back(graph.vertex_id(v));
      continue;
    }
    // Orient c1 to end at v and c2 to start at v.
    ChainEdge a = chains[static_cast<std::size_t>(c1)];
    ChainEdge b = chains[static_cast<std::size_t>(c2)];
    auto flip = [](ChainEdge& c) {
      std::swap(c.from, c.to);
      std::reverse(c.parts.begin(), c.parts.end());
      for (auto& part : c.parts) part.second = !part.second;
      if (c.geometry) c.geometry = reversed(*c.geometry);
    };
    if (a.to != v) flip(a);
    if (b.from != v) flip(b);

    ChainEdge merged{a.from, b.to, a.length + b.length, a.parts, std::nullopt, true};
    merged.parts.insert(merged.parts.end(), b.parts.begin(), b.parts.end());
    if (a.geometry && b.geometry) {
      Polyline line = *a.geometry;
      line.insert(line.end(), b.geometry->begin() + 1, b.geometry->end());
      merged.geometry = std::move(line);
    }

    detach(a.from, c1);
    detach(v, c1);
    detach(v, c2);
    detach(b.to, c2);
    chains[static_cast<std::size_t>(c1)].alive = false;
    chains[static_cast<std::size_t>(c2)].alive = false;
    const int id = static_cast<int>(chains.size());
    chains.push_back(std::move(merged));
    inc[static_cast<std::size_t>(chains.back().from)].push_back(id);
    inc[static_cast<std::size_t>(chains.back().to)].push_back(id);
    removed[vi] = 1;
    ++result.removed;
  }

  std::vector<VertexIndex> remap(graph.num_vertices(), -1);
  std::vector<std::string> vertex_ids;
  for (std::size_t v = 0; v < graph.num_vertices(); ++v) {
    if (removed[v]) continue;
    remap[v] = static_cast<VertexIndex>(vertex_ids.size());
    vertex_ids.push_back(graph.vertex_id(static_cast<VertexIndex>(v)));
  }
  std::vector<Edge> edges;
  for (ChainEdge& c : chains) {
    if (!c.alive) continue;
    auto [name, reverse] = merged_name(c);
    Edge e;
    e.id = std::move(name);
    e.from = remap[static_cast<std::size_t>(reverse ? c.to : c.from)];
    e.to = remap[static_cast<std::size_t>(reverse ? c.from : c.to)];
    e.length = c.length;
    if (c.geometry) {
      e.geometry = reverse ? reversed(*c.geometry) : *c.geometry;
      if (std::abs(polyline_length(*e.geometry) - e.length) > 1e-9 * e.length) e.geometry.reset();
    }
    edges.push_back(std::move(e));
  }
  result.graph = MetricGraph::assemble(std::move(vertex_ids), std::move(edges));
  return result;
}

std::vector<double> vertex_distances(const MetricGraph& graph,
                                     const std::vector<std::pair<VertexIndex, double>>& sources) {
  std::vector<double> dist(graph.num_vertices(), kInf);
  using Item = std::pair<double, VertexIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (const auto& [v, d] : sources) {
    if (d < dist[static_cast<std::size_t>(v)]) {
      dist[static_cast<std::size_t>(v)] = d;
      queue.emplace(d, v);
    }
  }
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    for (const EdgeEnd& end : graph.incidences(v)) {
      const Edge& e = graph.edge(end.edge);
      const VertexIndex w = end.at_start ? e.to : e.from;
      const double nd = d + e.length;
      if (nd < dist[static_cast<std::size_t>(w)]) {
        dist[static_cast<std::size_t>(w)] = nd;
        queue.emplace(nd, w);
      }
    }
  }
  return dist;
}

double geodesic_distance(const MetricGraph& graph, const PointOnGraph& a, const PointOnGraph& b) {
  graph.check_point(a);
  graph.check_point(b);
  const Edge& ea = graph.edge(a.edge);
  const Edge& eb = graph.edge(b.edge);

  // Leave a's edge through either end, then enter b's edge through either end.
  const auto from_a = vertex_distances(graph, {{ea.from, a.t}, {ea.to, ea.length - a.t}});
  double best = std::min(from_a[static_cast<std::size_t>(eb.from)] + b.t,
                         from_a[static_cast<std::size_t>(eb.to)] + (eb.length - b.t));
  if (a.edge == b.edge) best = std::min(best, std::abs(a.t - b.t));
  return best;
}

double graph_extent(const MetricGraph& graph) {
  if (graph.all_edges_have_geometry()) {
    double xmin = kInf, ymin = kInf, xmax = -kInf, ymax = -kInf;
    for (const Edge& e : graph.edges()) {
      for (const Point2& p : *e.geometry) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
      }
    }
    const double diag = std::hypot(xmax - xmin, ymax - ymin);
    if (diag > 0.0) return diag;
  }
  // Double sweep gives the exact diameter on trees and a close lower bound otherwise;
  // graphs up to a few thousand vertices use all sources.
  double diameter = 0.0;
  const std::size_t n = graph.num_vertices();
  if (n <= 2000) {
    for (std::size_t v = 0; v < n; ++v) {
      const auto d = vertex_distances(graph, {{static_cast<VertexIndex>(v), 0.0}});
      diameter = std::max(diameter, *std::max_element(d.begin(), d.end()));
    }
  } else {
    auto d = vertex_distances(graph, {{0, 0.0}});
    const auto far = static_cast<VertexIndex>(std::max_element(d.begin(), d.end()) - d.begin());
    d = vertex_distances(graph, {{far, 0.0}});
    diameter = *std::max_element(d.begin(), d.end());
  }
  // A single-vertex graph (loops only) has no vertex-to-vertex spread.
  if (diameter <= 0.0) {
    for (const Edge& e : graph.edges()) diameter = std::max(diameter, e.is_loop() ? e.length / 2.0 : e.length);
  }
  return diameter;
}

}  // namespace mglgcp
