// inference.hpp - LGCP posterior on a graph: the latent field lives at the
// vertices of the graph subdivided at all mesh nodes and events, so the prior
// precision is exact at every likelihood site.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"
#include "mglgcp/laplace.hpp"
#include "mglgcp/likelihood.hpp"
#include "mglgcp/mesh.hpp"

namespace mglgcp {

struct LgcpProblem {
  MetricGraph graph;  // as given
  Mesh mesh;
  PointPattern pattern;
  DesignMatrix design;  // p + N rows
  Vector offset;        // known part of the mean, p + N rows
  PriorSpec prior;

  Subdivision sub;  // graph with mesh nodes, events and extra sites as vertices
  SurrogateData data;
  // Location on `graph` of every latent node (vertex of sub.graph).
  std::vector<PointOnGraph> node_location;
  // Latent node of each extra site.
  std::vector<VertexIndex> site_node;

  // No design means intercept only; `offset` empty means zero.
  // `extra_sites` become latent nodes too (prediction or evaluation points).
  static LgcpProblem assemble(const MetricGraph& graph, const Mesh& mesh, const PointPattern& pattern,
                              std::optional<DesignMatrix> design = std::nullopt, Vector offset = {},
                              std::optional<PriorSpec> prior = std::nullopt,
                              const std::vector<PointOnGraph>& extra_sites = {});
};

// Laplace posterior of (u, beta) at fixed hyperparameters.
GaussianPosterior posterior_at(const LgcpProblem& problem, const HyperParams& hp, const LaplaceOptions& options = {});

// Laplace approximation of log p(y | theta). Adds the hyperprior log density
// when `with_hyperprior` is set.
double marginal_loglik(const LgcpProblem& problem, const HyperParams& hp, bool with_hyperprior = false,
                       const LaplaceOptions& options = {});

double marginal_loglik(const HyperParams& hp, const MetricGraph& graph, const Mesh& mesh, const PointPattern& pattern,
                       const DesignMatrix& design, const PriorSpec& prior);

// Marginal standard deviation of the log-intensity from the overdispersion of
// per-edge counts, clamped to [0.1, 10]. Starting value for the field scale.
double moment_sigma(const LgcpProblem& problem);

struct FitOptions {
  Variant variant = Variant::variance_stationary;
  std::optional<HyperParams> init;  // default: kappa0 and the moment estimate of the scale
  int max_iterations = 100;
  double gradient_tolerance = 1e-4;  // on the log-scale parameters
  double fd_step = 1e-4;
  // Box on log kappa and log tau|sigma, relative to the prior centers.
  double max_log_offset = 8.0;
  // Bound on the variance of u(s) - u(midpoint) across the widest cell,
  // kappa sigma^2 h (= h / (2 tau^2) for the standard variant). Past it the
  // midpoint rule no longer sees the field between nodes and the evidence
  // grows without bound in the field variance.
  double max_cell_variance = 0.25;
  // Grid points of a log-kappa scan used to seed a second BFGS run; the
  // better optimum wins. 0 or 1 disables the scan.
  int scan_points = 12;
};

struct TraceEntry {
  int iteration;
  double log_kappa;
  double log_scale;
  double objective;
  double gradient_norm;
};

// Estimate with a 95% interval from a normal approximation on the log scale.
struct ParameterSummary {
  std::string name;
  double estimate = 0.0;
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double sd = 0.0;
};

struct FitResult {
  HyperParams hyper;
  HyperParams init;
  GaussianPosterior posterior;
  ParameterSummary kappa;
  ParameterSummary scale;  // tau or sigma
  std::vector<ParameterSummary> beta;
  double objective = 0.0;  // log evidence + log hyperprior at the optimum
  bool converged = false;
  std::string status;
  std::vector<TraceEntry> trace;
};

// Maximizes marginal_loglik + log hyperprior over (log kappa, log tau|sigma)
// by BFGS with central-difference gradients. Throws OptimizerFailure.
FitResult fit_hyperparameters(const LgcpProblem& problem, const FitOptions& options = {});

}  // namespace mglgcp
