#pragma once

#include <vector>

#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"
#include "mglgcp/mesh.hpp"

namespace mglgcp {

struct PointPattern {
  std::vector<PointOnGraph> events;

  std::size_t size() const { return events.size(); }
  // n_e for every edge of `graph`.
  std::vector<int> counts_per_edge(const MetricGraph& graph) const;
  // Throws PointOffEdge.
  void validate(const MetricGraph& graph) const;
};

// |Γ| - sum_i a_i exp(v_i) + sum_j v_{p+j}, where v holds the log-intensity at
// the p mesh nodes followed by the N events, and |Γ| is the total mesh weight.
// Throws MisalignedVector.
double quad_log_likelihood(const Vector& log_intensity, const Mesh& mesh, const PointPattern& pattern);

// Rows are the p mesh nodes followed by the N events: y = (0_p, 1_N),
// exposure = (a, 0_N). Each row points at a latent node.
struct SurrogateData {
  Vector y;
  Vector exposure;
  std::vector<int> node;
  double total_length = 0.0;  // |Γ|, the additive constant of the quadrature likelihood

  Eigen::Index rows() const { return y.size(); }
  std::size_t num_events() const;
};

// `row_node` maps each row to a latent node; empty means row r -> node r.
SurrogateData build_surrogate(const Mesh& mesh, const PointPattern& pattern, std::vector<int> row_node = {});

// sum over rows with exposure > 0 of [y log(a eta) - a eta] plus sum over event
// rows (exposure 0) of log eta, with log eta given per row.
double surrogate_log_likelihood(const SurrogateData& data, const Vector& log_eta);

}  // namespace mglgcp
