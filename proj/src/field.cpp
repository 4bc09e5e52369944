#include "mglgcp/field.hpp"

#include <algorithm>
#include <cmath>

#include "mglgcp/errors.hpp"
#include "mglgcp/rng.hpp"

namespace mglgcp {

std::string to_string(Variant v) {
  return v == Variant::standard ? "standard" : "variance-stationary";
}

Variant parse_variant(const std::string& s) {
  if (s == "standard") return Variant::standard;
  if (s == "variance-stationary" || s == "variance_stationary") return Variant::variance_stationary;
  throw InputError("unknown variant '" + s + "' (expected standard or variance-stationary)");
}

double HyperParams::scale() const {
  return variant == Variant::standard ? tau.value_or(0.0) : sigma.value_or(0.0);
}

void HyperParams::validate() const {
  if (alpha != 1) throw InputError("only alpha = 1 is supported");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw NonpositiveParameter("kappa must be positive");
  if (variant == Variant::standard) {
    if (!tau || sigma) throw InputError("standard variant takes tau and no sigma");
    if (!(*tau > 0.0) || !std::isfinite(*tau)) throw NonpositiveParameter("tau must be positive");
  } else {
    if (!sigma || tau) throw InputError("variance-stationary variant takes sigma and no tau");
    if (!(*sigma > 0.0) || !std::isfinite(*sigma)) throw NonpositiveParameter("sigma must be positive");
  }
}

SparsePrecision precision_alpha1(const MetricGraph& graph, double kappa, double tau) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw NonpositiveParameter("kappa must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw NonpositiveParameter("tau must be positive");

  const double c = 2.0 * kappa * tau * tau;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * graph.num_edges());
  for (const Edge& e : graph.edges()) {
    const double x = kappa * e.length;
    if (e.is_loop()) {
      triplets.emplace_back(e.from, e.from, c * std::tanh(0.5 * x));
      continue;
    }
    // 1/2 + e^{-2x}/(1 - e^{-2x}) and e^{-x}/(1 - e^{-2x}) in cancellation-free form.
    const double diag = c * (0.5 + 1.0 / std::expm1(2.0 * x));
    const double off = -c / (2.0 * std::sinh(x));
    triplets.emplace_back(e.from, e.from, diag);
    triplets.emplace_back(e.to, e.to, diag);
    if (off != 0.0) {
      triplets.emplace_back(e.from, e.to, off);
      triplets.emplace_back(e.to, e.from, off);
    }
  }
  const auto n = static_cast<Eigen::Index>(graph.num_vertices());
  SparsePrecision out;
  out.Q.resize(n, n);
  out.Q.setFromTriplets(triplets.begin(), triplets.end());
  out.labels = graph.vertex_ids();
  return out;
}

CholeskyFactor::CholeskyFactor(const SparseMatrix& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw SingularMatrix("precision must be square and nonempty");
  llt_.compute(Q);
  if (llt_.info() != Eigen::Success) throw SingularMatrix("Cholesky factorization failed: matrix is not positive definite");
  // matrixL() diagonal entries
  const SparseMatrix& L = llt_.matrixL().nestedExpression();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < L.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(L, j); it; ++it) {
      if (it.row() == j) {
        if (!(it.value() > 0.0)) throw SingularMatrix("nonpositive pivot in Cholesky factor");
        sum += std::log(it.value());
      }
    }
  }
  log_det_ = 2.0 * sum;
}

Vector CholeskyFactor::solve(const Vector& b) const { return llt_.solve(b); }

Matrix CholeskyFactor::solve(const Matrix& b) const { return llt_.solve(b); }

Vector CholeskyFactor::sample_from_standard(const Vector& z) const {
  const Vector y = llt_.matrixU().solve(z);
  return llt_.permutationPinv() * y;
}

Vector CholeskyFactor::inverse_diagonal() const {
  // Double transpose sorts row indices within each column.
  const SparseMatrix Lraw = llt_.matrixL();
  const SparseMatrix Lt = Lraw.transpose();
  const SparseMatrix L = Lt.transpose();
  const Eigen::Index n = L.cols();
  const int* outer = L.outerIndexPtr();
  const int* inner = L.innerIndexPtr();
  const double* val = L.valuePtr();
  std::vector<double> sigma(static_cast<std::size_t>(L.nonZeros()), 0.0);

  // Position of (row, col) with row >= col in the factor pattern, or -1.
  auto locate = [&](int row, int col) -> long {
    const int* begin = inner + outer[col];
    const int* end = inner + outer[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    if (it == end || *it != row) return -1;
    return static_cast<long>(it - inner);
  };

  for (Eigen::Index jj = n - 1; jj >= 0; --jj) {
    const int j = static_cast<int>(jj);
    const int start = outer[j];
    const int stop = outer[j + 1];
    if (inner[start] != j) throw SingularMatrix("factor column lacks its diagonal");
    const double ljj = val[start];
    for (int a = start + 1; a < stop; ++a) {
      const int i = inner[a];
      double acc = 0.0;
      for (int b = start + 1; b < stop; ++b) {
        const int k = inner[b];
        const long pos = i >= k ? locate(i, k) : locate(k, i);
        if (pos < 0) throw SingularMatrix("factor pattern not closed for selected inversion");
        acc += val[b] * sigma[static_cast<std::size_t>(pos)];
      }
      sigma[static_cast<std::size_t>(a)] = -acc / ljj;
    }
    double acc = 0.0;
    for (int b = start + 1; b < stop; ++b) acc += val[b] * sigma[static_cast<std::size_t>(b)];
    sigma[static_cast<std::size_t>(start)] = 1.0 / (ljj * ljj) - acc / ljj;
  }

  Vector permuted(n);
  for (Eigen::Index j = 0; j < n; ++j) permuted[j] = sigma[static_cast<std::size_t>(outer[j])];
  // Row i of Q sits at row P(i) of the factorized matrix.
  const auto& perm = llt_.permutationP().indices();
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = permuted[perm[i]];
  return out;
}

Vector marginal_variances(const SparseMatrix& Q) {
  return CholeskyFactor(Q).inverse_diagonal();
}

Vector marginal_variances_by_solves(const SparseMatrix& Q) {
  const CholeskyFactor factor(Q);
  const Eigen::Index n = Q.rows();
  Vector out(n);
  constexpr Eigen::Index kBlock = 128;
  for (Eigen::Index start = 0; start < n; start += kBlock) {
    const Eigen::Index width = std::min(kBlock, n - start);
    Matrix rhs = Matrix::Zero(n, width);
    for (Eigen::Index k = 0; k < width; ++k) rhs(start + k, k) = 1.0;
    const Matrix x = factor.solve(rhs);
    for (Eigen::Index k = 0; k < width; ++k) out[start + k] = x(start + k, k);
  }
  return out;
}

SparsePrecision conditional_precision(const SparsePrecision& prec, const std::vector<int>& keep) {
  const Eigen::Index n = prec.size();
  if (keep.empty()) throw InputError("conditional_precision needs a nonempty keep set");
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] < 0 || keep[k] >= n) throw InputError("keep index out of range");
    if (slot[static_cast<std::size_t>(keep[k])] >= 0) throw InputError("duplicate keep index");
    slot[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
  }
  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (slot[static_cast<std::size_t>(i)] < 0) rest.push_back(i);

  const auto nk = static_cast<Eigen::Index>(keep.size());
  const auto nr = static_cast<Eigen::Index>(rest.size());
  std::vector<int> rest_slot(static_cast<std::size_t>(n), -1);
  for (std::size_t r = 0; r < rest.size(); ++r) rest_slot[static_cast<std::size_t>(rest[r])] = static_cast<int>(r);

  std::vector<Eigen::Triplet<double>> kk, rr;
  Matrix kr = Matrix::Zero(nk, nr);
  for (Eigen::Index col = 0; col < prec.Q.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(prec.Q, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      const int si = slot[static_cast<std::size_t>(i)];
      const int sj = slot[static_cast<std::size_t>(j)];
      if (si >= 0 && sj >= 0) {
        kk.emplace_back(si, sj, it.value());
      } else if (si < 0 && sj < 0) {
        rr.emplace_back(rest_slot[static_cast<std::size_t>(i)], rest_slot[static_cast<std::size_t>(j)], it.value());
      } else if (si >= 0) {
        kr(si, rest_slot[static_cast<std::size_t>(j)]) = it.value();
      }
    }
  }

  SparsePrecision out;
  for (int k : keep) out.labels.push_back(prec.labels.empty() ? std::to_string(k) : prec.labels[static_cast<std::size_t>(k)]);
  SparseMatrix Qkk(nk, nk);
  Qkk.setFromTriplets(kk.begin(), kk.end());
  if (nr == 0) {
    out.Q = Qkk;
    return out;
  }
  SparseMatrix Qrr(nr, nr);
  Qrr.setFromTriplets(rr.begin(), rr.end());
  std::optional<CholeskyFactor> factor;
  try {
    factor.emplace(Qrr);
  } catch (const SingularMatrix& e) {
    throw SingularBlock(std::string("eliminated block is singular: ") + e.what());
  }
  const Matrix x = factor->solve(Matrix(kr.transpose()));
  Matrix schur = Matrix(Qkk) - kr * x;
  schur = 0.5 * (schur + schur.transpose()).eval();
  out.Q = schur.sparseView(0.0, 0.0);
  return out;
}

SparsePrecision variance_stationary_precision(const MetricGraph& graph, double kappa, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw NonpositiveParameter("sigma must be positive");
  SparsePrecision base = precision_alpha1(graph, kappa, 1.0);
  const Vector sd = marginal_variances(base.Q).cwiseSqrt();
  const double inv_s2 = 1.0 / (sigma * sigma);
  for (Eigen::Index col = 0; col < base.Q.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(base.Q, col); it; ++it) {
      it.valueRef() = it.value() * (sd[it.row()] * sd[it.col()]) * inv_s2;
    }
  }
  return base;
}

SparsePrecision field_precision(const MetricGraph& graph, const HyperParams& hp) {
  hp.validate();
  if (hp.variant == Variant::standard) return precision_alpha1(graph, hp.kappa, *hp.tau);
  return variance_stationary_precision(graph, hp.kappa, *hp.sigma);
}

std::vector<FieldSample> sample_field(const SparsePrecision& prec, std::size_t n_samples, std::uint64_t seed) {
  const CholeskyFactor factor(prec.Q);
  std::vector<FieldSample> out;
  out.reserve(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    Rng rng = make_rng(seed, "field", k);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(prec.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    out.push_back({factor.sample_from_standard(z), seed, k});
  }
  return out;
}

IntensityPcf intensity_and_pcf(const SparsePrecision& prec, const Vector& mean) {
  if (mean.size() != prec.size()) throw MisalignedVector("mean vector does not match the precision dimension");
  if (!mean.allFinite()) throw InputError("mean vector must be finite");
  const CholeskyFactor factor(prec.Q);
  const Matrix cov = factor.solve(Matrix(Matrix::Identity(prec.size(), prec.size())));
  IntensityPcf out;
  out.rho = (mean.array() + 0.5 * cov.diagonal().array()).exp();
  out.g = cov.array().exp();
  return out;
}

}  // namespace mglgcp
