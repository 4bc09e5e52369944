#include "mglgcp/excursions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <memory>
#include <random>

#include "mglgcp/errors.hpp"
#include "mglgcp/rng.hpp"

namespace mglgcp {

namespace {

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

Vector marginal_exceedance(const GaussianPosterior& posterior, double t) {
  const Vector mu = posterior.field_mean();
  const Vector sd = posterior.field_sd();
  Vector out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (sd[i] > 0.0) out[i] = upper_tail((t - mu[i]) / sd[i]);
    else out[i] = mu[i] > t ? 1.0 : 0.0;
  }
  return out;
}

ExcursionResult excursion_function(const GaussianPosterior& posterior, double t, std::uint64_t seed,
                                   const ExcursionOptions& options) {
  if (options.n_mc < 1000) throw InputError("at least 1000 Monte Carlo samples are required");
  if (options.block_size == 0) throw InputError("block size must be positive");
  const Eigen::Index n = posterior.n_field;
  const Eigen::Index dim = posterior.mode.size();

  ExcursionResult res;
  res.threshold = t;
  res.mc_samples = options.n_mc;
  res.seed = seed;
  res.marginal_probs = marginal_exceedance(posterior, t);
  res.ordering.resize(static_cast<std::size_t>(n));
  std::iota(res.ordering.begin(), res.ordering.end(), 0);
  std::stable_sort(res.ordering.begin(), res.ordering.end(),
                   [&](int a, int b) { return res.marginal_probs[a] > res.marginal_probs[b]; });

  std::unique_ptr<CholeskyFactor> factor;
  try {
    factor = std::make_unique<CholeskyFactor>(posterior.precision);
  } catch (const SingularMatrix& e) {
    throw DegeneratePosterior(std::string("posterior precision is not positive definite: ") + e.what());
  }

  // first_failure_count[k]: samples whose first ordered node at or below t is k.
  std::vector<std::size_t> first_failure_count(static_cast<std::size_t>(n) + 1, 0);
  const std::size_t blocks = (options.n_mc + options.block_size - 1) / options.block_size;
  Vector z(dim);
  for (std::size_t b = 0; b < blocks; ++b) {
    Rng rng = make_rng(seed, "excursions", b);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t count = std::min(options.block_size, options.n_mc - b * options.block_size);
    for (std::size_t s = 0; s < count; ++s) {
      for (Eigen::Index i = 0; i < dim; ++i) z[i] = normal(rng);
      const Vector x = posterior.mode + factor->sample_from_standard(z);
      std::size_t k = 0;
      while (k < res.ordering.size() && x[res.ordering[k]] > t) ++k;
      ++first_failure_count[k];
    }
  }

  // Samples whose first failure is after position k exceed t on the whole prefix.
  res.F = Vector::Zero(n);
  std::size_t beyond = options.n_mc;
  double previous = 1.0;
  for (std::size_t k = 0; k < res.ordering.size(); ++k) {
    beyond -= first_failure_count[k];
    const int node = res.ordering[k];
    const double marginal = res.marginal_probs[node];
    // The first node needs no joint computation; later ones are capped so the
    // Monte Carlo estimate never exceeds its own analytic marginal.
    double value = k == 0 ? marginal : static_cast<double>(beyond) / static_cast<double>(options.n_mc);
    value = std::min({value, marginal, previous});
    res.F[node] = value;
    previous = value;
  }
  return res;
}

std::vector<int> extract_set(const ExcursionResult& result, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  std::vector<int> out;
  for (Eigen::Index i = 0; i < result.F.size(); ++i)
    if (result.F[i] >= 1.0 - alpha) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace mglgcp
