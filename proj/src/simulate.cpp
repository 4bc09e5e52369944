#include "mglgcp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mglgcp/errors.hpp"
#include "mglgcp/rng.hpp"

namespace mglgcp {

PointPattern place_events(const Mesh& mesh, const Vector& log_intensity, std::uint64_t seed, std::uint64_t stream) {
  if (log_intensity.size() != static_cast<Eigen::Index>(mesh.size()))
    throw MisalignedVector("log-intensity must have one entry per mesh node");
  Rng rng = make_rng(seed, "events", stream);
  PointPattern out;
  std::size_t node = 0;
  for (std::size_t e = 0; e < mesh.boundaries.size(); ++e) {
    const auto& q = mesh.boundaries[e];
    for (std::size_t k = 0; k + 1 < q.size(); ++k, ++node) {
      const double mean = mesh.weights[node] * std::exp(log_intensity[static_cast<Eigen::Index>(node)]);
      if (!std::isfinite(mean)) throw NumericalError("cell intensity overflow in simulation");
      std::poisson_distribution<long> count(mean);
      const long n = mean > 0.0 ? count(rng) : 0;
      std::uniform_real_distribution<double> where(q[k], q[k + 1]);
      std::vector<double> ts(static_cast<std::size_t>(n));
      for (double& t : ts) t = where(rng);
      std::sort(ts.begin(), ts.end());
      for (double t : ts) out.events.push_back({static_cast<EdgeIndex>(e), t});
    }
  }
  return out;
}

LgcpSimulation simulate_lgcp_detailed(const MetricGraph& graph, const HyperParams& hp, const MeanFunction& mean,
                                      double h_sim, std::uint64_t seed) {
  hp.validate();
  LgcpSimulation sim;
  sim.mesh = build_mesh(graph, h_sim);
  const Subdivision sub = subdivide_at(graph, sim.mesh.nodes);
  const SparsePrecision prec = field_precision(sub.graph, hp);
  const Vector u = sample_field(prec, 1, seed).front().values;

  const auto p = static_cast<Eigen::Index>(sim.mesh.size());
  sim.field.resize(p);
  sim.log_intensity.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& node = sim.mesh.nodes[static_cast<std::size_t>(i)];
    sim.field[i] = u[sub.point_vertex[static_cast<std::size_t>(i)]];
    sim.log_intensity[i] = mean(node) + sim.field[i];
  }
  sim.pattern = place_events(sim.mesh, sim.log_intensity, seed);
  return sim;
}

PointPattern simulate_lgcp(const MetricGraph& graph, const HyperParams& hp, const MeanFunction& mean, double h_sim,
                           std::uint64_t seed) {
  return simulate_lgcp_detailed(graph, hp, mean, h_sim, seed).pattern;
}

}  // namespace mglgcp
