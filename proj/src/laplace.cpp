#include "mglgcp/laplace.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "mglgcp/errors.hpp"

namespace mglgcp {

DesignMatrix DesignMatrix::intercept_only(Eigen::Index rows) {
  return {Matrix::Ones(rows, 1), {"intercept"}};
}

DesignMatrix DesignMatrix::empty(Eigen::Index rows) {
  return {Matrix(rows, 0), {}};
}

PriorSpec PriorSpec::from_graph(const MetricGraph& graph) {
  PriorSpec spec;
  spec.kappa0 = 2.0 / graph_extent(graph);
  return spec;
}

double PriorSpec::log_kappa_center() const { return std::log(kappa0); }

double PriorSpec::log_scale_center(Variant variant) const {
  if (variant == Variant::variance_stationary) return log_sigma_center;
  return std::log(kappa0) - std::numbers::ln2;  // log tau = -(log 2 - log kappa0)
}

double PriorSpec::log_density(const HyperParams& hp) const {
  auto normal = [](double x, double mean, double precision) {
    const double d = x - mean;
    return 0.5 * std::log(precision / (2.0 * std::numbers::pi)) - 0.5 * precision * d * d;
  };
  const double scale_precision = hp.variant == Variant::standard ? log_scale_precision : log_sigma_precision;
  return normal(std::log(hp.kappa), log_kappa_center(), log_kappa_precision) +
         normal(std::log(hp.scale()), log_scale_center(hp.variant), scale_precision);
}

GaussianPosterior make_gaussian_posterior(Vector mode, SparseMatrix precision, Eigen::Index n_field,
                                          std::vector<std::string> labels) {
  if (precision.rows() != mode.size() || precision.cols() != mode.size())
    throw MisalignedVector("posterior precision does not match the mode");
  GaussianPosterior post;
  try {
    post.marginal_variances = marginal_variances(precision);
  } catch (const SingularMatrix& e) {
    throw DegeneratePosterior(std::string("posterior precision is not positive definite: ") + e.what());
  }
  post.mode = std::move(mode);
  post.precision = std::move(precision);
  post.n_field = n_field;
  if (labels.empty())
    for (Eigen::Index i = 0; i < post.mode.size(); ++i) labels.push_back(std::to_string(i));
  post.labels = std::move(labels);
  return post;
}

LatentModel::LatentModel(const SparsePrecision& prior, const SurrogateData& data, const DesignMatrix& design,
                         const PriorSpec& prior_spec, Vector offset)
    : data_(data), n_field_(prior.size()) {
  const Eigen::Index rows = data.rows();
  if (design.rows() != rows) throw MisalignedVector("design matrix rows must match surrogate rows");
  if (offset.size() == 0) offset = Vector::Zero(rows);
  if (offset.size() != rows) throw MisalignedVector("offset must have one entry per surrogate row");
  if (!design.X.allFinite()) throw InputError("design matrix has non-finite entries");
  offset_ = std::move(offset);

  const Eigen::Index k = design.cols();
  const Eigen::Index dim = n_field_ + k;
  std::vector<Eigen::Triplet<double>> prior_entries;
  prior_entries.reserve(static_cast<std::size_t>(prior.Q.nonZeros() + k));
  for (Eigen::Index col = 0; col < prior.Q.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(prior.Q, col); it; ++it) prior_entries.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index j = 0; j < k; ++j) prior_entries.emplace_back(n_field_ + j, n_field_ + j, 1.0 / prior_spec.beta_variance);
  joint_prior_.resize(dim, dim);
  joint_prior_.setFromTriplets(prior_entries.begin(), prior_entries.end());

  std::vector<Eigen::Triplet<double>> a_entries;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int node = data.node[static_cast<std::size_t>(r)];
    if (node < 0 || node >= n_field_) throw MisalignedVector("surrogate row refers to a node outside the prior");
    a_entries.emplace_back(r, node, 1.0);
    for (Eigen::Index j = 0; j < k; ++j)
      if (design.X(r, j) != 0.0) a_entries.emplace_back(r, n_field_ + j, design.X(r, j));
  }
  A_.resize(rows, dim);
  A_.setFromTriplets(a_entries.begin(), a_entries.end());

  for (std::size_t j = 0; j < design.names.size(); ++j)
    if (design.names[j] == "intercept") intercept_col_ = n_field_ + static_cast<Eigen::Index>(j);
}

Vector LatentModel::linear_predictor(const Vector& x) const { return A_ * x + offset_; }

double LatentModel::log_likelihood(const Vector& x) const {
  return data_.total_length + surrogate_log_likelihood(data_, linear_predictor(x));
}

double LatentModel::objective(const Vector& x) const {
  return log_likelihood(x) - 0.5 * x.dot(joint_prior_ * x);
}

Vector LatentModel::gradient(const Vector& x) const {
  const Vector eta = linear_predictor(x);
  const Vector resid = data_.y.array() - data_.exposure.array() * eta.array().exp();
  return A_.transpose() * resid - joint_prior_ * x;
}

SparseMatrix LatentModel::negative_hessian(const Vector& x) const {
  const Vector eta = linear_predictor(x);
  const Vector w = data_.exposure.array() * eta.array().exp();
  const SparseMatrix weighted = w.asDiagonal() * A_;
  return SparseMatrix(joint_prior_ + SparseMatrix(A_.transpose() * weighted));
}

Vector LatentModel::default_init() const {
  Vector x = Vector::Zero(dimension());
  if (intercept_col_ >= 0) {
    const double exposure = data_.exposure.sum();
    const double events = std::max(1.0, data_.y.sum());
    if (exposure > 0.0) x[intercept_col_] = std::log(events / exposure);
  }
  return x;
}

GaussianPosterior laplace_fit(const SparsePrecision& prior, const SurrogateData& data, const DesignMatrix& design,
                              const PriorSpec& prior_spec, const LaplaceOptions& options, Vector offset) {
  const LatentModel model(prior, data, design, prior_spec, std::move(offset));
  Vector x = options.init.size() == model.dimension() ? options.init : model.default_init();

  int iter = 0;
  double grad_norm = 0.0;
  bool converged = false;
  for (; iter <= options.max_iterations; ++iter) {
    const Vector g = model.gradient(x);
    grad_norm = g.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(grad_norm)) throw NewtonDivergence("non-finite gradient in Newton iteration");
    if (grad_norm < options.tolerance) {
      converged = true;
      break;
    }
    if (iter == options.max_iterations) break;
    const CholeskyFactor factor(model.negative_hessian(x));
    const Vector step = factor.solve(g);
    const double f0 = model.objective(x);
    // Predicted gain below the rounding of the objective: very short edges give
    // precision entries near 1e9 and a gradient floor well above 1e-8.
    // The objective cannot judge such a step, so take it undamped and stop.
    const double decrement = g.dot(step);
    if (decrement < 1e-14 * (1.0 + std::abs(f0))) {
      x += step;
      grad_norm = model.gradient(x).lpNorm<Eigen::Infinity>();
      converged = true;
      break;
    }
    const double slack = 1e-13 * (1.0 + std::abs(f0));
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      const Vector candidate = x + scale * step;
      const double f1 = model.objective(candidate);
      if (std::isfinite(f1) && f1 >= f0 - slack) {
        x = candidate;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NewtonDivergence("line search failed after " + std::to_string(options.max_halvings) + " halvings");
  }
  if (!converged) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "Newton iterations did not converge (gradient sup-norm %.3e after %d iterations)",
                  grad_norm, iter);
    throw NewtonDivergence(buf);
  }

  std::vector<std::string> labels = prior.labels;
  if (labels.empty())
    for (Eigen::Index i = 0; i < prior.size(); ++i) labels.push_back(std::to_string(i));
  labels.insert(labels.end(), design.names.begin(), design.names.end());

  SparseMatrix H = model.negative_hessian(x);
  const CholeskyFactor post_factor(H);
  const CholeskyFactor prior_factor(model.joint_prior());
  GaussianPosterior post;
  post.mode = x;
  post.marginal_variances = post_factor.inverse_diagonal();
  post.precision = std::move(H);
  post.labels = std::move(labels);
  post.n_field = prior.size();
  post.iterations = iter;
  post.gradient_norm = grad_norm;
  post.log_evidence = model.objective(x) + 0.5 * prior_factor.log_determinant() - 0.5 * post_factor.log_determinant();
  return post;
}

}  // namespace mglgcp
