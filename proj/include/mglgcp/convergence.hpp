// convergence.hpp - empirical checks of the midpoint-quadrature posterior
// approximation: rate of the posterior mean as the mesh refines, the
// per-cell quadrature error bounds, and sample-path Hölder quotients.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"
#include "mglgcp/mesh.hpp"

namespace mglgcp {

enum class Functional { posterior_mean_sup, posterior_mean_l2 };
std::string to_string(Functional f);
Functional parse_functional(const std::string& s);

enum class PartitionKind {
  equal,      // p_e equal cells
  wide_cell,  // one cell of width length * p_e^{-1/2}, the rest equal (violates quasi-uniformity)
};

struct RateStudyConfig {
  HyperParams truth = HyperParams::stationary(2.0, 1.0);
  double mean = 1.6094379124341003;  // known log-intensity offset m (log 5)
  std::uint64_t seed = 20240501;
  std::vector<int> p_list{8, 16, 32, 64, 128, 512};
  Functional functional = Functional::posterior_mean_sup;
  PartitionKind partition = PartitionKind::equal;
  double h_sim = 0.0;            // 0: shortest edge / (4 * finest p)
  double eval_per_unit = 10.0;   // evaluation sites per unit length (at least 4 per edge)
};

struct ConvergenceLevel {
  int p = 0;          // ||p|| = min_e p_e
  std::size_t cells = 0;
  std::size_t latent_nodes = 0;
  double distance = 0.0;  // to the finest level, chosen functional
  double sup_distance = 0.0;
  double l2_distance = 0.0;
  int newton_iterations = 0;
};

struct ConvergenceStudy {
  std::string graph_id;
  std::uint64_t seed = 0;
  Functional functional = Functional::posterior_mean_sup;
  PartitionKind partition = PartitionKind::equal;
  std::size_t n_events = 0;
  std::vector<ConvergenceLevel> levels;
  double slope = 0.0;  // -d log distance / d log p over all but the finest level
};

// Cells per edge for level p: ceil(p * length_e / shortest length), so ||p|| = p.
std::vector<int> cells_for_level(const MetricGraph& graph, int p);
Mesh level_mesh(const MetricGraph& graph, int p, PartitionKind kind);

// Simulates one pattern from the truth, then fits the latent posterior at the
// true hyperparameters for every level of p_list and compares posterior means
// at fixed evaluation sites with the finest level.
ConvergenceStudy rate_study(const MetricGraph& graph, const RateStudyConfig& config, std::string graph_id = "graph");

// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

enum class QuadratureLemma { holder, c1 };

struct LemmaCheck {
  double worst_ratio = 0.0;
  std::size_t worst_cell = 0;
  double norm = 0.0;          // grid estimate of ||f||_{C^{0,gamma}} or ||f||_{C^1}
  double grid_spacing = 0.0;
};

// For every cell [a, b] of `partition` with anchor t* (midpoints when `stars`
// is empty) compares the integral of |f(t) - f(t*)| (fine midpoint sum) with
// 2/(1+gamma) ||f|| (b-a)^{1+gamma} (Hölder) or ||f||_{C^1} (b-a)^2 (C^1).
// Norms are estimated on a uniform grid of `grid_cells` cells over [0, length].
LemmaCheck quadrature_lemma_check(const std::function<double(double)>& f, double length,
                                  const std::vector<double>& partition, QuadratureLemma lemma, double gamma,
                                  const std::vector<double>& stars = {}, int grid_cells = 2048);

// Max over neighbouring grid points of |v_{i+1} - v_i| / spacing^gamma.
double max_adjacent_quotient(const std::vector<double>& values, double spacing, double gamma);

struct RegularityStats {
  double gamma = 0.45;
  std::vector<double> spacing;                     // coarsest to finest (per unit length)
  std::vector<std::vector<double>> max_quotient;   // [sample][level]
  std::vector<double> refinement_ratio;            // finest / second finest, per sample
  std::size_t bounded = 0;                         // samples with refinement_ratio < 2
  double growth_exponent = 0.0;                    // median slope of log quotient vs -log spacing
  bool heavy_tail = false;                         // some sample has ratio >= 2
};

// Summarizes Hölder quotients of grid values across nested refinement levels.
// values[sample][edge] holds the finest grid (levels of halving) of each edge.
RegularityStats regularity_from_values(const std::vector<std::vector<std::vector<double>>>& values,
                                       const std::vector<double>& edge_lengths, int levels, double gamma);

// Field samples on nested grids of spacing h, h/2, ..., h/2^{levels-1}.
RegularityStats field_sample_regularity(const MetricGraph& graph, double kappa, Variant variant, std::size_t n_samples,
                                        std::uint64_t seed, double h = 0.02, int levels = 2, double gamma = 0.45);

}  // namespace mglgcp
