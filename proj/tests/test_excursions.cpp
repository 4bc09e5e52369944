#include <doctest.h>

#include <random>

#include "mglgcp/errors.hpp"
#include "mglgcp/excursions.hpp"
#include "support.hpp"

using namespace mglgcp;

namespace {

GaussianPosterior from_covariance(const Vector& mean, const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd Q = cov.inverse();
  return make_gaussian_posterior(mean, Eigen::MatrixXd(Q).sparseView(), mean.size());
}

GaussianPosterior diagonal(const Vector& mean, const Vector& sd) {
  return from_covariance(mean, sd.array().square().matrix().asDiagonal());
}

// mean giving P(N(mean, 1) > 0) = p
double mean_for(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (fixtures::normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double mc_tol(double f, std::size_t n) { return 3.0 * std::sqrt(f * (1.0 - f) / static_cast<double>(n)) + 1e-12; }

}  // namespace

TEST_CASE("marginal_exceedance: examples") {
  Vector m(3);
  m << 0.0, 1.6449, -2.0;
  const auto post = diagonal(m, Vector::Ones(3));
  const Vector p = marginal_exceedance(post, 0.0);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.95).epsilon(1e-4));
  CHECK(p[2] == doctest::Approx(1.0 - fixtures::normal_cdf(2.0)).epsilon(1e-10));
  CHECK(marginal_exceedance(post, 1e6).maxCoeff() == 0.0);
}

TEST_CASE("marginal_exceedance ignores coefficient entries") {
  Vector mode(3);
  mode << 0.0, 0.0, 5.0;
  const auto post = make_gaussian_posterior(mode, Eigen::MatrixXd(Eigen::MatrixXd::Identity(3, 3)).sparseView(), 2);
  CHECK(marginal_exceedance(post, 0.0).size() == 2);
}

TEST_CASE("excursion_function: single node") {
  const auto r = excursion_function(diagonal(Vector::Zero(1), Vector::Ones(1)), 0.0, 7);
  CHECK(std::abs(r.F[0] - 0.5) < mc_tol(0.5, r.mc_samples));
  CHECK(r.mc_samples == 100000);
  CHECK(r.seed == 7);
  CHECK(r.F[0] <= r.marginal_probs[0]);
}

TEST_CASE("excursion_function: independent and comonotone pairs") {
  const double mu = mean_for(0.9);
  const auto ind = excursion_function(diagonal(Vector::Constant(2, mu), Vector::Ones(2)), 0.0, 11);
  CHECK(ind.ordering == std::vector<int>{0, 1});
  CHECK(std::abs(ind.F[0] - 0.9) < mc_tol(0.9, ind.mc_samples));
  CHECK(std::abs(ind.F[1] - 0.81) < mc_tol(0.81, ind.mc_samples));
  CHECK(extract_set(ind, 0.05).empty());

  Eigen::MatrixXd cov(2, 2);
  const double rho = 1.0 - 1e-10;
  cov << 1.0, rho, rho, 1.0;
  const auto co = excursion_function(from_covariance(Vector::Constant(2, mu), cov), 0.0, 12);
  CHECK(std::abs(co.F[0] - 0.9) < mc_tol(0.9, co.mc_samples));
  CHECK(std::abs(co.F[1] - 0.9) < mc_tol(0.9, co.mc_samples));
}

TEST_CASE("excursion_function: diagonal five-node case matches prefix products") {
  Vector m(5), sd(5);
  m << 1.5, -0.2, 0.8, 2.5, 0.1;
  sd << 1.0, 0.5, 2.0, 1.2, 0.7;
  const auto post = diagonal(m, sd);
  const auto r = excursion_function(post, 0.3, 2024);
  std::vector<double> marg(5);
  for (int i = 0; i < 5; ++i) marg[i] = 1.0 - fixtures::normal_cdf((0.3 - m[i]) / sd[i]);
  std::vector<int> order{0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return marg[a] > marg[b]; });
  CHECK(r.ordering == order);
  double prefix = 1.0;
  for (int k : order) {
    prefix *= marg[k];
    CHECK(std::abs(r.F[k] - prefix) < mc_tol(prefix, r.mc_samples));
  }
}

TEST_CASE("excursion_function: invariants on random correlated posteriors") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = fixtures::random_graph(rng, 5 + trial, 3);
    const SparsePrecision P = precision_alpha1(g, 1.0, 1.0);
    std::normal_distribution<double> z;
    Vector mean(P.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean[i] = z(rng);
    const auto post = make_gaussian_posterior(mean, P.Q, mean.size());
    ExcursionOptions opt;
    opt.n_mc = 5000;
    const auto r = excursion_function(post, 0.0, 100 + trial, opt);
    for (Eigen::Index i = 0; i < r.F.size(); ++i) CHECK(r.F[i] <= r.marginal_probs[i]);
    for (std::size_t k = 1; k < r.ordering.size(); ++k) CHECK(r.F[r.ordering[k]] <= r.F[r.ordering[k - 1]]);
    const auto s01 = extract_set(r, 0.01), s05 = extract_set(r, 0.05), s20 = extract_set(r, 0.2);
    CHECK(std::includes(s05.begin(), s05.end(), s01.begin(), s01.end()));
    CHECK(std::includes(s20.begin(), s20.end(), s05.begin(), s05.end()));
    CHECK(std::is_sorted(s20.begin(), s20.end()));

    const auto again = excursion_function(post, 0.0, 100 + trial, opt);
    CHECK(again.F == r.F);
  }
}

TEST_CASE("extract_set: boundary inclusion") {
  ExcursionResult r;
  r.F = Vector::Constant(1, 0.5);
  r.marginal_probs = r.F;
  r.ordering = {0};
  CHECK(extract_set(r, 0.5) == std::vector<int>{0});
  CHECK(extract_set(r, 0.49).empty());
}

TEST_CASE("excursion_function: errors") {
  const auto post = diagonal(Vector::Zero(2), Vector::Ones(2));
  ExcursionOptions few;
  few.n_mc = 999;
  CHECK_THROWS_AS(excursion_function(post, 0.0, 1, few), InputError);

  GaussianPosterior bad = post;
  bad.precision.coeffRef(1, 1) = -1.0;
  CHECK_THROWS_AS(excursion_function(bad, 0.0, 1), DegeneratePosterior);
}
