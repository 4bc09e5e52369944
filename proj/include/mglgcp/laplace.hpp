// laplace.hpp - Gaussian approximation of the latent posterior at its mode.
//
// Latent vector x = (u at the prior's nodes, beta). Row r of the Poisson
// surrogate has log eta_r = u[node_r] + X_r beta + offset_r.

#pragma once

#include <string>
#include <vector>

#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"
#include "mglgcp/likelihood.hpp"

namespace mglgcp {

// Intercept plus covariates, one row per surrogate row.
struct DesignMatrix {
  Matrix X;
  std::vector<std::string> names;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }

  static DesignMatrix intercept_only(Eigen::Index rows);
  static DesignMatrix empty(Eigen::Index rows);
};

// Hyperparameter and coefficient priors.
//   log kappa      ~ N(log kappa0, 1 / log_kappa_precision)
//   log(1/tau)     ~ N(log 2 - log kappa0, 1 / log_scale_precision)       (standard)
//   log sigma      ~ N(log_sigma_center, 1 / log_sigma_precision)         (variance-stationary)
//   beta_j         ~ N(0, beta_variance)
struct PriorSpec {
  double kappa0 = 1.0;
  double log_kappa_precision = 10.0;
  double log_scale_precision = 10.0;  // log(1/tau)
  double log_sigma_center = 0.0;
  double log_sigma_precision = 1.0;
  double beta_variance = 1e3;

  // kappa0 = 2 / D_Γ with D_Γ the bounding-box diagonal (see graph_extent).
  static PriorSpec from_graph(const MetricGraph& graph);

  double log_kappa_center() const;
  // Center of log tau (standard) or log sigma (variance-stationary).
  double log_scale_center(Variant variant) const;
  // Log density of (log kappa, log tau|log sigma).
  double log_density(const HyperParams& hp) const;
};

struct GaussianPosterior {
  Vector mode;
  SparseMatrix precision;
  Vector marginal_variances;
  std::vector<std::string> labels;  // field nodes, then coefficient names
  Eigen::Index n_field = 0;
  HyperParams hyper;

  // Diagnostics of the mode search.
  int iterations = 0;
  double gradient_norm = 0.0;
  double log_evidence = 0.0;

  Vector field_mean() const { return mode.head(n_field); }
  Vector field_sd() const { return marginal_variances.head(n_field).cwiseSqrt(); }
  Vector beta_mean() const { return mode.tail(mode.size() - n_field); }
  Vector beta_sd() const { return marginal_variances.tail(mode.size() - n_field).cwiseSqrt(); }
};

// Posterior assembled from a mode and precision (marginal variances are computed).
GaussianPosterior make_gaussian_posterior(Vector mode, SparseMatrix precision, Eigen::Index n_field,
                                          std::vector<std::string> labels = {});

struct LaplaceOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // sup-norm of the gradient
  int max_halvings = 30;
  Vector init;              // empty: zero field, intercept at log(N / |Γ|)
};

// Log posterior (up to a constant), gradient and negative Hessian of the latent model.
class LatentModel {
 public:
  LatentModel(const SparsePrecision& prior, const SurrogateData& data, const DesignMatrix& design,
              const PriorSpec& prior_spec, Vector offset = {});

  Eigen::Index dimension() const { return joint_prior_.rows(); }
  Eigen::Index n_field() const { return n_field_; }

  Vector linear_predictor(const Vector& x) const;
  // Surrogate log-likelihood plus |Γ|, i.e. the quadrature log-likelihood.
  double log_likelihood(const Vector& x) const;
  double objective(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  SparseMatrix negative_hessian(const Vector& x) const;
  const SparseMatrix& joint_prior() const { return joint_prior_; }
  Vector default_init() const;

 private:
  SurrogateData data_;
  SparseMatrix joint_prior_;
  SparseMatrix A_;  // rows x latent
  Vector offset_;
  Eigen::Index n_field_;
  Eigen::Index intercept_col_ = -1;
};

// Newton iterations with backtracking (factor 0.5). Throws NewtonDivergence.
GaussianPosterior laplace_fit(const SparsePrecision& prior, const SurrogateData& data, const DesignMatrix& design,
                              const PriorSpec& prior_spec, const LaplaceOptions& options = {}, Vector offset = {});

}  // namespace mglgcp
