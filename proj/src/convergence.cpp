#include "mglgcp/convergence.hpp"

#include <algorithm>
#include <cmath>

#include "mglgcp/errors.hpp"
#include "mglgcp/inference.hpp"
#include "mglgcp/simulate.hpp"

namespace mglgcp {

std::string to_string(Functional f) {
  return f == Functional::posterior_mean_sup ? "posterior-mean-sup" : "posterior-mean-L2";
}

Functional parse_functional(const std::string& s) {
  if (s == "posterior-mean-sup" || s == "sup") return Functional::posterior_mean_sup;
  if (s == "posterior-mean-L2" || s == "posterior-mean-l2" || s == "L2" || s == "l2")
    return Functional::posterior_mean_l2;
  throw InputError("unknown functional '" + s + "' (expected posterior-mean-sup or posterior-mean-L2)");
}

std::vector<int> cells_for_level(const MetricGraph& graph, int p) {
  if (p < 1) throw NonpositiveParameter("mesh level p must be positive");
  double shortest = graph.edge(0).length;
  for (const Edge& e : graph.edges()) shortest = std::min(shortest, e.length);
  std::vector<int> counts;
  for (const Edge& e : graph.edges())
    counts.push_back(static_cast<int>(std::ceil(p * (e.length / shortest) * (1.0 - 1e-12))));
  return counts;
}

Mesh level_mesh(const MetricGraph& graph, int p, PartitionKind kind) {
  const std::vector<int> counts = cells_for_level(graph, p);
  if (kind == PartitionKind::equal) return build_mesh_with_counts(graph, counts);
  std::vector<std::vector<double>> partitions;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    const double len = graph.edge(static_cast<EdgeIndex>(e)).length;
    const int pe = counts[e];
    std::vector<double> q{0.0};
    if (pe >= 2) {
      const double wide = len / std::sqrt(static_cast<double>(pe));
      for (int k = 0; k < pe - 1; ++k) q.push_back(wide + (len - wide) * k / (pe - 1));
    }
    q.push_back(len);
    partitions.push_back(std::move(q));
  }
  return mesh_from_partition(graph, partitions);
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("slope needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ConvergenceStudy rate_study(const MetricGraph& graph, const RateStudyConfig& config, std::string graph_id) {
  const auto& ps = config.p_list;
  if (ps.size() < 4) throw InputError("rate study needs at least 4 mesh levels");
  for (std::size_t i = 1; i < ps.size(); ++i)
    if (ps[i] <= ps[i - 1]) throw InputError("mesh levels must increase strictly");
  if (ps.front() < 1) throw NonpositiveParameter("mesh levels must be positive");
  if (ps.back() < 8 * ps.front()) throw InputError("finest level must be at least 8 times the coarsest");

  double shortest = graph.edge(0).length;
  for (const Edge& e : graph.edges()) shortest = std::min(shortest, e.length);
  const double h_sim = config.h_sim > 0.0 ? config.h_sim : shortest / (4.0 * ps.back());
  const PointPattern pattern =
      simulate_lgcp(graph, config.truth, constant_mean(config.mean), h_sim, config.seed);

  std::vector<PointOnGraph> sites;
  std::vector<double> site_weight;
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const double len = graph.edge(static_cast<EdgeIndex>(e)).length;
    const int n = std::max(4, static_cast<int>(std::ceil(len * config.eval_per_unit)));
    for (int k = 0; k < n; ++k) {
      sites.push_back({static_cast<EdgeIndex>(e), len * (k + 0.5) / n});
      site_weight.push_back(len / n);
    }
  }

  ConvergenceStudy study;
  study.graph_id = std::move(graph_id);
  study.seed = config.seed;
  study.functional = config.functional;
  study.partition = config.partition;
  study.n_events = pattern.size();

  std::vector<Vector> means;
  for (int p : ps) {
    const Mesh mesh = level_mesh(graph, p, config.partition);
    const auto rows = static_cast<Eigen::Index>(mesh.size() + pattern.size());
    const LgcpProblem problem = LgcpProblem::assemble(graph, mesh, pattern, DesignMatrix::empty(rows),
                                                      Vector::Constant(rows, config.mean), std::nullopt, sites);
    const GaussianPosterior post = posterior_at(problem, config.truth);
    Vector m(static_cast<Eigen::Index>(sites.size()));
    for (std::size_t i = 0; i < sites.size(); ++i) m[static_cast<Eigen::Index>(i)] = post.mode[problem.site_node[i]];
    means.push_back(std::move(m));
    ConvergenceLevel level;
    level.p = mesh.min_cells();
    level.cells = mesh.size();
    level.latent_nodes = problem.sub.graph.num_vertices();
    level.newton_iterations = post.iterations;
    study.levels.push_back(level);
  }

  const Vector& finest = means.back();
  std::vector<double> x, y;
  for (std::size_t l = 0; l < means.size(); ++l) {
    const Vector diff = means[l] - finest;
    double l2 = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) l2 += site_weight[static_cast<std::size_t>(i)] * diff[i] * diff[i];
    auto& level = study.levels[l];
    level.sup_distance = diff.lpNorm<Eigen::Infinity>();
    level.l2_distance = std::sqrt(l2);
    level.distance = config.functional == Functional::posterior_mean_sup ? level.sup_distance : level.l2_distance;
    if (l + 1 < means.size()) {
      if (!(level.distance > 0.0) || !std::isfinite(level.distance))
        throw NumericalError("distance to the finest level is not positive at p = " + std::to_string(level.p));
      x.push_back(level.p);
      y.push_back(level.distance);
    }
  }
  study.slope = -log_log_slope(x, y);
  return study;
}

LemmaCheck quadrature_lemma_check(const std::function<double(double)>& f, double length,
                                  const std::vector<double>& partition, QuadratureLemma lemma, double gamma,
                                  const std::vector<double>& stars, int grid_cells) {
  if (!(length > 0.0)) throw NonpositiveLength("edge length must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw NonpositiveParameter("gamma must lie in (0, 1]");
  if (partition.size() < 2) throw InputError("partition needs at least one cell");
  if (!stars.empty() && stars.size() + 1 != partition.size()) throw MisalignedVector("one anchor per cell");
  if (grid_cells < 2) throw InputError("grid needs at least two cells");

  LemmaCheck out;
  out.grid_spacing = length / grid_cells;
  std::vector<double> grid(static_cast<std::size_t>(grid_cells) + 1);
  for (int k = 0; k <= grid_cells; ++k) grid[static_cast<std::size_t>(k)] = f(length * k / grid_cells);

  double sup = 0.0;
  for (double v : grid) sup = std::max(sup, std::abs(v));
  double semi = 0.0;
  if (lemma == QuadratureLemma::holder) {
    std::vector<double> inv_lag(grid.size());
    for (std::size_t d = 1; d < grid.size(); ++d)
      inv_lag[d] = 1.0 / std::pow(out.grid_spacing * static_cast<double>(d), gamma);
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t j = i + 1; j < grid.size(); ++j)
        semi = std::max(semi, std::abs(grid[j] - grid[i]) * inv_lag[j - i]);
  } else {
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      semi = std::max(semi, std::abs(grid[i + 1] - grid[i]) / out.grid_spacing);
  }
  out.norm = sup + semi;

  constexpr int kSub = 4000;
  for (std::size_t c = 0; c + 1 < partition.size(); ++c) {
    const double a = partition[c], b = partition[c + 1];
    if (!(b > a) || a < 0.0 || b > length) throw InputError("partition must increase strictly within [0, length]");
    const double star = stars.empty() ? 0.5 * (a + b) : stars[c];
    if (star < a || star > b) throw InputError("anchor must lie inside its cell");
    const double fs = f(star);
    const double w = (b - a) / kSub;
    double lhs = 0.0;
    for (int k = 0; k < kSub; ++k) lhs += std::abs(f(a + (k + 0.5) * w) - fs);
    lhs *= w;
    const double rhs = lemma == QuadratureLemma::holder
                           ? 2.0 / (1.0 + gamma) * out.norm * std::pow(b - a, 1.0 + gamma)
                           : out.norm * (b - a) * (b - a);
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
    if (ratio > out.worst_ratio || c == 0) {
      out.worst_ratio = ratio;
      out.worst_cell = c;
    }
  }
  return out;
}

double max_adjacent_quotient(const std::vector<double>& values, double spacing, double gamma) {
  double q = 0.0;
  const double denom = std::pow(spacing, gamma);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) q = std::max(q, std::abs(values[i + 1] - values[i]) / denom);
  return q;
}

RegularityStats regularity_from_values(const std::vector<std::vector<std::vector<double>>>& values,
                                       const std::vector<double>& edge_lengths, int levels, double gamma) {
  if (levels < 2) throw InputError("at least two refinement levels are needed");
  RegularityStats stats;
  stats.gamma = gamma;
  const std::size_t fine_factor = std::size_t{1} << (levels - 1);
  std::vector<double> growth;
  for (std::size_t s = 0; s < values.size(); ++s) {
    if (values[s].size() != edge_lengths.size()) throw MisalignedVector("one value grid per edge is required");
    std::vector<double> q(static_cast<std::size_t>(levels), 0.0);
    std::vector<double> spacing(static_cast<std::size_t>(levels), 0.0);
    for (std::size_t e = 0; e < edge_lengths.size(); ++e) {
      const auto& v = values[s][e];
      if (v.size() < 2 || (v.size() - 1) % fine_factor != 0)
        throw MisalignedVector("grid size does not allow the requested refinement levels");
      const std::size_t fine_cells = v.size() - 1;
      for (int l = 0; l < levels; ++l) {
        const std::size_t stride = fine_factor >> l;
        std::vector<double> sub;
        for (std::size_t i = 0; i < v.size(); i += stride) sub.push_back(v[i]);
        const double h = edge_lengths[e] * static_cast<double>(stride) / static_cast<double>(fine_cells);
        auto li = static_cast<std::size_t>(l);
        q[li] = std::max(q[li], max_adjacent_quotient(sub, h, gamma));
        spacing[li] = std::max(spacing[li], h);
      }
    }
    if (s == 0) stats.spacing = spacing;
    stats.max_quotient.push_back(q);
    const double ratio = q[q.size() - 1] / q[q.size() - 2];
    stats.refinement_ratio.push_back(ratio);
    if (ratio < 2.0) ++stats.bounded;
    else stats.heavy_tail = true;
    growth.push_back(-log_log_slope(spacing, q));
  }
  if (!growth.empty()) {
    std::sort(growth.begin(), growth.end());
    const std::size_t n = growth.size();
    stats.growth_exponent = n % 2 ? growth[n / 2] : 0.5 * (growth[n / 2 - 1] + growth[n / 2]);
  }
  return stats;
}

RegularityStats field_sample_regularity(const MetricGraph& graph, double kappa, Variant variant, std::size_t n_samples,
                                        std::uint64_t seed, double h, int levels, double gamma) {
  if (!(h > 0.0)) throw NonpositiveParameter("grid spacing must be positive");
  if (levels < 2) throw InputError("at least two refinement levels are needed");
  const int factor = 1 << (levels - 1);
  std::vector<PointOnGraph> points;
  std::vector<std::size_t> first_point;
  std::vector<int> fine_cells;
  std::vector<double> lengths;
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const double len = graph.edge(static_cast<EdgeIndex>(e)).length;
    const int n = std::max(1, static_cast<int>(std::ceil(len / h * (1.0 - 1e-12)))) * factor;
    first_point.push_back(points.size());
    fine_cells.push_back(n);
    lengths.push_back(len);
    for (int k = 1; k < n; ++k) points.push_back({static_cast<EdgeIndex>(e), len * k / n});
  }
  const Subdivision sub = subdivide_at(graph, points);
  const HyperParams hp = variant == Variant::standard ? HyperParams::standard(kappa, 1.0)
                                                      : HyperParams::stationary(kappa, 1.0);
  const auto samples = sample_field(field_precision(sub.graph, hp), n_samples, seed);

  std::vector<std::vector<std::vector<double>>> values;
  for (const FieldSample& s : samples) {
    std::vector<std::vector<double>> per_edge;
    for (std::size_t e = 0; e < graph.num_edges(); ++e) {
      const Edge& edge = graph.edge(static_cast<EdgeIndex>(e));
      std::vector<double> v{s.values[edge.from]};
      for (int k = 1; k < fine_cells[e]; ++k)
        v.push_back(s.values[sub.point_vertex[first_point[e] + static_cast<std::size_t>(k - 1)]]);
      v.push_back(s.values[edge.to]);
      per_edge.push_back(std::move(v));
    }
    values.push_back(std::move(per_edge));
  }
  return regularity_from_values(values, lengths, levels, gamma);
}

}  // namespace mglgcp
