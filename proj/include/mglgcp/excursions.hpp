#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mglgcp/field.hpp"
#include "mglgcp/laplace.hpp"

namespace mglgcp {

// P(u_i > t) = 1 - Phi((t - mu_i) / sd_i) for the field part of the posterior.
Vector marginal_exceedance(const GaussianPosterior& posterior, double t);

struct ExcursionResult {
  double threshold = 0.0;
  Vector marginal_probs;
  Vector F;
  std::vector<int> ordering;  // nodes by decreasing marginal probability, ties by index
  std::size_t mc_samples = 0;
  std::uint64_t seed = 0;
};

struct ExcursionOptions {
  std::size_t n_mc = 100000;
  std::size_t block_size = 4096;  // samples per RNG stream ("excursions", block)
};

// Joint samples of the field from N(mode, precision^{-1}); F at the k-th
// ordered node is the fraction of samples whose first failure along the
// ordering comes after position k. Throws DegeneratePosterior, InputError.
ExcursionResult excursion_function(const GaussianPosterior& posterior, double t, std::uint64_t seed,
                                   const ExcursionOptions& options = {});

// Nodes with F >= 1 - alpha, ascending.
std::vector<int> extract_set(const ExcursionResult& result, double alpha);

}  // namespace mglgcp
