#include <doctest.h>

#include <random>

#include "mglgcp/errors.hpp"
#include "mglgcp/fd_oracle.hpp"
#include "mglgcp/field.hpp"
#include "support.hpp"

using namespace mglgcp;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& Q) { return Eigen::MatrixXd(Q); }

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

// A probe at every vertex of g.
std::vector<PointOnGraph> vertex_probes(const MetricGraph& g) {
  std::vector<PointOnGraph> probes(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const EdgeEnd end = g.incidences(static_cast<VertexIndex>(v)).front();
    probes[v] = {end.edge, end.at_start ? 0.0 : g.edge(end.edge).length};
  }
  return probes;
}

double fd_discrepancy(const MetricGraph& g, double kappa, double cells) {
  const auto probes = vertex_probes(g);
  const FdOracle oracle = fd_covariance_oracle(g, kappa, 1.0, cells, probes);
  const Eigen::MatrixXd exact = dense(precision_alpha1(g, kappa, 1.0).Q).inverse();
  return (oracle.covariance - exact).norm() / exact.norm();
}

}  // namespace

TEST_CASE("precision_alpha1: single edge and single loop") {
  const auto Q = dense(precision_alpha1(fixtures::interval(1.0), 1.0, 1.0).Q);
  CHECK(Q(0, 0) == doctest::Approx(1.3130353).epsilon(1e-7));
  CHECK(Q(1, 1) == doctest::Approx(1.3130353).epsilon(1e-7));
  CHECK(Q(0, 1) == doctest::Approx(-0.8509181).epsilon(1e-7));
  CHECK(Q(1, 0) == Q(0, 1));
  const auto L = dense(precision_alpha1(fixtures::circle(2.0), 1.0, 1.0).Q);
  CHECK(L(0, 0) == doctest::Approx(2.0 * std::tanh(1.0)).epsilon(1e-12));
  CHECK(L(0, 0) == doctest::Approx(1.5231884).epsilon(1e-7));
}

TEST_CASE("precision_alpha1: distant vertices decouple") {
  double previous = 1.0;
  for (double l : {1.0, 5.0, 20.0, 200.0}) {
    const auto Q = dense(precision_alpha1(fixtures::interval(l), 1.0, 1.0).Q);
    CHECK(std::abs(Q(0, 1)) < previous);
    previous = std::abs(Q(0, 1));
  }
  CHECK(previous < 1e-80);
}

TEST_CASE("precision_alpha1: parameter checks") {
  CHECK_THROWS_AS(precision_alpha1(fixtures::interval(), 0.0, 1.0), NonpositiveParameter);
  CHECK_THROWS_AS(precision_alpha1(fixtures::interval(), 1.0, -1.0), NonpositiveParameter);
  CHECK_THROWS_AS(HyperParams::stationary(1.0, 0.0).validate(), NonpositiveParameter);
  HyperParams bad = HyperParams::standard(1.0, 1.0);
  bad.alpha = 2;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("precision_alpha1: symmetric, positive definite, matches the formula on random draws") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logu(std::log(0.1), std::log(10.0));
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = fixtures::random_graph(rng, 1 + trial % 9, trial % 5);
    const double kappa = std::exp(logu(rng));
    const double tau = std::exp(logu(rng));
    const SparsePrecision P = precision_alpha1(g, kappa, tau);
    const Eigen::MatrixXd Q = dense(P.Q);
    CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_NOTHROW(CholeskyFactor{P.Q});
    CHECK(max_rel(Q, fixtures::dense_precision_formula(g, kappa, tau)) < 1e-10);
    // sparsity follows adjacency
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
      for (Eigen::Index j = 0; j < Q.cols(); ++j)
        if (i != j && Q(i, j) != 0.0) {
          bool adjacent = false;
          for (const auto& end : g.incidences(static_cast<VertexIndex>(i))) {
            const Edge& e = g.edge(end.edge);
            adjacent = adjacent || e.from == j || e.to == j;
          }
          CHECK(adjacent);
        }
  }
}

TEST_CASE("precision_alpha1: tiny kappa * length keeps full accuracy") {
  const double kappa = 1e-9;
  const auto Q = dense(precision_alpha1(fixtures::interval(1.0), kappa, 1.0).Q);
  // 2k(1/2 + 1/expm1(2k)) = 1 + k^2/3 + ..., 2k/(2 sinh k) = 1 - k^2/6 + ...
  CHECK(Q(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(Q(0, 0) - 1.0 >= 0.0);
  CHECK(-Q(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("conditional_precision: keep all is the identity map") {
  const auto P = precision_alpha1(fixtures::tadpole(), 1.3, 0.7);
  const auto C = conditional_precision(P, {0, 1});
  CHECK(max_rel(dense(C.Q), dense(P.Q)) == 0.0);
}

TEST_CASE("conditional_precision: path A-P-B equals the pruned single edge") {
  const auto sub = build_graph({{"AP", "A", "P", 0.3, {}}, {"PB", "P", "B", 0.7, {}}});
  const auto P = precision_alpha1(sub, 1.7, 1.2);
  const int a = *sub.find_vertex("A"), b = *sub.find_vertex("B");
  const auto C = conditional_precision(P, {a, b});
  const auto R = dense(precision_alpha1(fixtures::interval(1.0), 1.7, 1.2).Q);
  CHECK((dense(C.Q) - R).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("conditional_precision: 1x1 keep is the inverse marginal variance") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = fixtures::random_graph(rng, 3 + trial % 5, 2);
    const auto P = precision_alpha1(g, 0.8, 1.0);
    const Eigen::MatrixXd cov = dense(P.Q).inverse();
    const int k = trial % static_cast<int>(g.num_vertices());
    const auto C = conditional_precision(P, {k});
    CHECK(dense(C.Q)(0, 0) == doctest::Approx(1.0 / cov(k, k)).epsilon(1e-10));
  }
}

TEST_CASE("conditional_precision: errors") {
  const auto P = precision_alpha1(fixtures::star3(), 1.0, 1.0);
  CHECK_THROWS_AS(conditional_precision(P, {}), InputError);
  CHECK_THROWS_AS(conditional_precision(P, {7}), InputError);
  SparsePrecision bad;
  bad.Q = SparseMatrix(2, 2);
  bad.Q.insert(0, 0) = 1.0;  // Q_rr = 0
  CHECK_THROWS_AS(conditional_precision(bad, {0}), SingularBlock);
}

TEST_CASE("Markov consistency on random graphs with random subdivisions") {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = fixtures::random_graph(rng, 2 + trial % 6, trial % 4);
    const Subdivision s = subdivide_at(g, fixtures::random_points(rng, g, 1 + trial % 10));
    const double kappa = 0.3 + 0.1 * trial;
    std::vector<int> keep(g.num_vertices());
    for (std::size_t v = 0; v < g.num_vertices(); ++v) keep[v] = *s.graph.find_vertex(g.vertex_id(static_cast<VertexIndex>(v)));
    const auto C = dense(conditional_precision(precision_alpha1(s.graph, kappa, 1.0), keep).Q);
    const auto R = dense(precision_alpha1(g, kappa, 1.0).Q);
    CHECK((C - R).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("marginal_variances: examples and dense-inverse oracle") {
  SparseMatrix D(3, 3);
  for (int i = 0; i < 3; ++i) D.insert(i, i) = 4.0;
  const Vector v = marginal_variances(D);
  for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(0.25));

  const Vector iv = marginal_variances(precision_alpha1(fixtures::interval(1.0), 1.0, 1.0).Q);
  CHECK(iv[0] == doctest::Approx(iv[1]).epsilon(1e-14));

  const auto star = fixtures::star3();
  const Vector sv = marginal_variances(precision_alpha1(star, 1.0, 1.0).Q);
  const int c = *star.find_vertex("C");
  for (int leaf = 0; leaf < 4; ++leaf)
    if (leaf != c) CHECK(sv[c] < sv[leaf]);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = fixtures::random_graph(rng, 2 + trial, trial % 7);
    const Subdivision s = subdivide_at(g, fixtures::random_points(rng, g, 20));
    const SparseMatrix Q = precision_alpha1(s.graph, 1.5, 0.5).Q;
    const Vector exact = dense(Q).inverse().diagonal();
    CHECK((marginal_variances(Q) - exact).cwiseAbs().maxCoeff() < 1e-10 * exact.cwiseAbs().maxCoeff());
    CHECK((marginal_variances_by_solves(Q) - exact).cwiseAbs().maxCoeff() < 1e-10 * exact.cwiseAbs().maxCoeff());
  }
  SparseMatrix singular(2, 2);
  singular.insert(0, 0) = 1.0;
  singular.insert(1, 1) = -1.0;
  CHECK_THROWS_AS(marginal_variances(singular), SingularMatrix);
}

TEST_CASE("variance_stationary_precision: constant marginal variance") {
  std::mt19937_64 rng(12);
  std::vector<MetricGraph> graphs{fixtures::interval(1.0), fixtures::circle(2.0), fixtures::star3(), fixtures::tadpole()};
  for (int k = 0; k < 10; ++k) graphs.push_back(fixtures::random_graph(rng, 3 + k, k % 4));
  for (const auto& g : graphs)
    for (double sigma : {0.5, 1.0, 2.0}) {
      const Eigen::MatrixXd cov = dense(variance_stationary_precision(g, 1.3, sigma).Q).inverse();
      for (Eigen::Index i = 0; i < cov.rows(); ++i) CHECK(std::abs(cov(i, i) / (sigma * sigma) - 1.0) < 1e-8);
    }
  const Eigen::MatrixXd star = dense(variance_stationary_precision(fixtures::star3(), 1.0, 2.0).Q).inverse();
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(star(i, i) == doctest::Approx(4.0).epsilon(1e-8));
}

TEST_CASE("variance_stationary_precision: correlations of the unit interval are unchanged") {
  const auto g = fixtures::interval(1.0);
  const Eigen::MatrixXd a = dense(precision_alpha1(g, 1.0, 1.0).Q).inverse();
  const Eigen::MatrixXd b = dense(variance_stationary_precision(g, 1.0, 1.0).Q).inverse();
  CHECK(a(0, 1) / std::sqrt(a(0, 0) * a(1, 1)) == doctest::Approx(b(0, 1) / std::sqrt(b(0, 0) * b(1, 1))).epsilon(1e-12));
}

TEST_CASE("sample_field: determinism and covariance") {
  const auto P = precision_alpha1(fixtures::interval(1.0), 1.0, 1.0);
  const auto a = sample_field(P, 3, 42);
  const auto b = sample_field(P, 3, 42);
  for (int k = 0; k < 3; ++k) CHECK(a[k].values == b[k].values);
  CHECK(a[0].values != a[1].values);

  const std::size_t n = 100000;
  const auto draws = sample_field(P, n, 2024);
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  for (const auto& d : draws) S += d.values * d.values.transpose();
  S /= static_cast<double>(n);
  const Eigen::Matrix2d C = dense(P.Q).inverse();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      // Var of x_i x_j for a Gaussian pair: C_ii C_jj + C_ij^2
      const double se = std::sqrt((C(i, i) * C(j, j) + C(i, j) * C(i, j)) / static_cast<double>(n));
      CHECK(std::abs(S(i, j) - C(i, j)) < 3.0 * se);
    }
}

TEST_CASE("sample_field: identity precision gives standard normals") {
  SparsePrecision I;
  I.Q = SparseMatrix(1, 1);
  I.Q.insert(0, 0) = 1.0;
  const auto draws = sample_field(I, 10000, 99);
  std::vector<double> xs;
  for (const auto& d : draws) xs.push_back(d.values[0]);
  const double D = fixtures::ks_statistic(xs, fixtures::normal_cdf);
  CHECK(fixtures::kolmogorov_pvalue(D, xs.size()) > 0.01);
}

TEST_CASE("fd_covariance_oracle: unit interval endpoints at 4000 cells") {
  const auto g = fixtures::interval(1.0);
  const FdOracle o = fd_covariance_oracle(g, 1.0, 1.0, 4000, vertex_probes(g));
  const Eigen::MatrixXd exact = dense(precision_alpha1(g, 1.0, 1.0).Q).inverse();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(o.covariance(i, j) / exact(i, j) - 1.0) < 1e-2);
}

TEST_CASE("fd_covariance_oracle: discrepancy shrinks with refinement") {
  for (const auto& g : {fixtures::interval(1.0), fixtures::tadpole(), fixtures::star3()}) {
    double previous = 1.0;
    for (double cells : {500.0, 1000.0, 2000.0, 4000.0}) {
      const double d = fd_discrepancy(g, 1.0, cells);
      CHECK(d < previous);
      previous = d;
    }
    CHECK(previous < 1e-2);
  }
}

TEST_CASE("fd_covariance_oracle: tadpole agreement at interior points") {
  const auto g = fixtures::tadpole();
  const std::vector<PointOnGraph> probes{{0, 0.5}, {0, 1.0}, {1, 0.25}, {1, 1.0}};
  const Subdivision s = subdivide_at(g, probes);
  const Eigen::MatrixXd full = dense(precision_alpha1(s.graph, 2.0, 1.0).Q).inverse();
  Eigen::MatrixXd exact(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) exact(i, j) = full(s.point_vertex[i], s.point_vertex[j]);
  const FdOracle o = fd_covariance_oracle(g, 2.0, 1.0, 4000, probes);
  CHECK((o.covariance - exact).norm() / exact.norm() < 1e-2);
}

TEST_CASE("intensity_and_pcf") {
  const auto g = fixtures::star3();
  const auto vs = variance_stationary_precision(g, 1.0, 1.5);
  const IntensityPcf a = intensity_and_pcf(vs, Vector::Zero(4));
  for (int i = 0; i < 4; ++i) CHECK(a.rho[i] == doctest::Approx(std::exp(1.5 * 1.5 / 2.0)).epsilon(1e-8));

  SparsePrecision diag;
  diag.Q = SparseMatrix(2, 2);
  diag.Q.insert(0, 0) = 2.0;
  diag.Q.insert(1, 1) = 3.0;
  const IntensityPcf b = intensity_and_pcf(diag, Vector::Zero(2));
  CHECK(b.g(0, 1) == 1.0);
  CHECK(b.g(0, 0) == doctest::Approx(std::exp(0.5)));

  const IntensityPcf c = intensity_and_pcf(precision_alpha1(g, 1.0, 1.0), Vector::Zero(4));
  const int center = *g.find_vertex("C");
  for (int i = 0; i < 4; ++i)
    if (i != center) CHECK(c.rho[center] < c.rho[i]);
  CHECK_THROWS_AS(intensity_and_pcf(diag, Vector::Zero(3)), MisalignedVector);
}
