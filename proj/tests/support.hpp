// Shared fixtures and independent oracles for the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mglgcp/graph.hpp"
#include "mglgcp/mesh.hpp"

namespace fixtures {

using mglgcp::EdgeRecord;
using mglgcp::MetricGraph;
using mglgcp::Polyline;

inline MetricGraph interval(double length = 1.0) { return mglgcp::build_graph({{"e", "A", "B", length, {}}}); }

inline MetricGraph circle(double length = 2.0) { return mglgcp::build_graph({{"loop", "A", "A", length, {}}}); }

inline MetricGraph star3() {
  return mglgcp::build_graph({{"e1", "C", "L1", 1.0, {}}, {"e2", "C", "L2", 1.0, {}}, {"e3", "C", "L3", 1.0, {}}});
}

// Loop of length 2 at A plus a pendant edge A-B of length 1.
inline MetricGraph tadpole() { return mglgcp::build_graph({{"loop", "A", "A", 2.0, {}}, {"tail", "A", "B", 1.0, {}}}); }

inline MetricGraph path3() {
  return mglgcp::build_graph({{"e1", "a", "b", 1.0, {}}, {"e2", "b", "c", 1.0, {}}, {"e3", "c", "d", 1.0, {}}});
}

// rows x cols vertices with edge length a and straight-line geometry.
inline MetricGraph grid(int rows, int cols, double a) {
  std::vector<EdgeRecord> recs;
  auto id = [](int r, int c) { return "v" + std::to_string(r) + "_" + std::to_string(c); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols)
        recs.push_back({"h" + std::to_string(r) + "_" + std::to_string(c), id(r, c), id(r, c + 1), a,
                        Polyline{{c * a, r * a}, {(c + 1) * a, r * a}}});
      if (r + 1 < rows)
        recs.push_back({"v" + std::to_string(r) + "_" + std::to_string(c), id(r, c), id(r + 1, c), a,
                        Polyline{{c * a, r * a}, {c * a, (r + 1) * a}}});
    }
  return mglgcp::build_graph(recs);
}

// Random connected graph: a random spanning tree plus extra edges, which may
// be parallel edges or loops.
inline MetricGraph random_graph(std::mt19937_64& rng, int vertices, int extra_edges, bool loops = true,
                                double min_len = 0.2, double max_len = 2.0) {
  std::uniform_real_distribution<double> len(min_len, max_len);
  std::vector<EdgeRecord> recs;
  auto vid = [](int v) { return "n" + std::to_string(v); };
  for (int v = 1; v < vertices; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    recs.push_back({"t" + std::to_string(v), vid(parent(rng)), vid(v), len(rng), {}});
  }
  std::uniform_int_distribution<int> any(0, vertices - 1);
  for (int k = 0; k < extra_edges; ++k) {
    int a = any(rng), b = any(rng);
    if (a == b && !loops) b = (a + 1) % vertices;
    if (a == b && vertices == 1 && !loops) continue;
    recs.push_back({"x" + std::to_string(k), vid(a), vid(b), len(rng), {}});
  }
  if (recs.empty()) recs.push_back({"x0", vid(0), vid(0), len(rng), {}});
  return mglgcp::build_graph(recs);
}

inline std::vector<mglgcp::PointOnGraph> random_points(std::mt19937_64& rng, const MetricGraph& g, int n) {
  std::uniform_int_distribution<int> edge(0, static_cast<int>(g.num_edges()) - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<mglgcp::PointOnGraph> pts;
  for (int i = 0; i < n; ++i) {
    const int e = edge(rng);
    pts.push_back({e, u(rng) * g.edge(e).length});
  }
  return pts;
}

// Dense precision straight from the displayed formula, written with plain
// exponentials (no expm1/sinh rewriting).
inline Eigen::MatrixXd dense_precision_formula(const MetricGraph& g, double kappa, double tau) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  const double c = 2.0 * kappa * tau * tau;
  for (const auto& e : g.edges()) {
    const double l = e.length;
    if (e.from == e.to) {
      Q(e.from, e.from) += c * std::tanh(kappa * l / 2.0);
      continue;
    }
    const double q = std::exp(-2.0 * kappa * l);
    const double diag = 0.5 + q / (1.0 - q);
    const double off = std::exp(-kappa * l) / (1.0 - q);
    Q(e.from, e.from) += c * diag;
    Q(e.to, e.to) += c * diag;
    Q(e.from, e.to) -= c * off;
    Q(e.to, e.from) -= c * off;
  }
  return Q;
}

// Floyd-Warshall over a subdivided graph: all-pairs vertex distances.
inline Eigen::MatrixXd all_pairs_distances(const MetricGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n, n, inf);
  for (Eigen::Index i = 0; i < n; ++i) D(i, i) = 0.0;
  for (const auto& e : g.edges()) {
    D(e.from, e.to) = std::min(D(e.from, e.to), e.length);
    D(e.to, e.from) = std::min(D(e.to, e.from), e.length);
  }
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) D(i, j) = std::min(D(i, j), D(i, k) + D(k, j));
  return D;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Asymptotic Kolmogorov distribution: P(sqrt(n) D > x).
inline double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double x = (sn + 0.12 + 0.11 / sn) * d;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) sum += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
  return std::clamp(sum, 0.0, 1.0);
}

// One-sample KS statistic against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace fixtures
