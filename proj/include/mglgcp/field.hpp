// field.hpp - Whittle-Matérn fields with alpha = 1 on metric graphs.
//
// For integer smoothness the field is Markov with respect to the graph, so its
// precision at the vertex set is exact and sparse. Evaluating the field at
// arbitrary locations amounts to subdividing the graph there first.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mglgcp/graph.hpp"

namespace mglgcp {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Variant { standard, variance_stationary };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

// (kappa, tau) for the standard field, (kappa, sigma) for the
// variance-stationary one. Only alpha = 1 is supported.
struct HyperParams {
  double kappa = 1.0;
  std::optional<double> tau;
  std::optional<double> sigma;
  Variant variant = Variant::standard;
  int alpha = 1;

  static HyperParams standard(double kappa, double tau) { return {kappa, tau, std::nullopt, Variant::standard, 1}; }
  static HyperParams stationary(double kappa, double sigma) {
    return {kappa, std::nullopt, sigma, Variant::variance_stationary, 1};
  }

  // tau or sigma, whichever the variant uses.
  double scale() const;
  // Throws NonpositiveParameter / InputError on invalid combinations.
  void validate() const;
};

// Symmetric positive definite precision; row i belongs to labels[i].
struct SparsePrecision {
  SparseMatrix Q;
  std::vector<std::string> labels;

  Eigen::Index size() const { return Q.rows(); }
};

// Exact alpha = 1 precision at the vertices of `graph`.
SparsePrecision precision_alpha1(const MetricGraph& graph, double kappa, double tau);

// Schur complement Q_kk - Q_kr Q_rr^{-1} Q_rk, the precision of the marginal at `keep`.
// Throws SingularBlock when Q_rr cannot be factorized.
SparsePrecision conditional_precision(const SparsePrecision& prec, const std::vector<int>& keep);

// Sparse Cholesky with the pieces needed downstream: log-determinant,
// solves, and selected inversion.
class CholeskyFactor {
 public:
  explicit CholeskyFactor(const SparseMatrix& Q);

  double log_determinant() const { return log_det_; }
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  // x with x ~ N(0, Q^{-1}) given z ~ N(0, I): x = P^T L^{-T} z.
  Vector sample_from_standard(const Vector& z) const;
  // diag(Q^{-1}) by Takahashi recursions on the factor pattern.
  Vector inverse_diagonal() const;

 private:
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  double log_det_ = 0.0;
};

// (Q^{-1})_ii for every i. Throws SingularMatrix.
Vector marginal_variances(const SparseMatrix& Q);

// diag(Q^{-1}) by blocked column solves; slower reference path.
Vector marginal_variances_by_solves(const SparseMatrix& Q);

// (1/sigma^2) D Q1 D with Q1 = precision_alpha1(graph, kappa, 1) and
// D = diag(marginal standard deviations of Q1); marginal variance sigma^2 at every vertex.
SparsePrecision variance_stationary_precision(const MetricGraph& graph, double kappa, double sigma);

// Dispatch on the variant.
SparsePrecision field_precision(const MetricGraph& graph, const HyperParams& hp);

struct FieldSample {
  Vector values;
  std::uint64_t seed = 0;
  std::size_t index = 0;
};

// Independent draws from N(0, Q^{-1}); sample k uses its own stream derived from (seed, k).
std::vector<FieldSample> sample_field(const SparsePrecision& prec, std::size_t n_samples, std::uint64_t seed);

// Intensity rho_i = exp(m_i + c_ii / 2) and pair correlation g_ij = exp(c_ij), c = Q^{-1}.
struct IntensityPcf {
  Vector rho;
  Matrix g;
};
IntensityPcf intensity_and_pcf(const SparsePrecision& prec, const Vector& mean);

}  // namespace mglgcp
