#include "mglgcp/likelihood.hpp"

#include <cmath>
#include <numeric>

#include "mglgcp/errors.hpp"

namespace mglgcp {

std::vector<int> PointPattern::counts_per_edge(const MetricGraph& graph) const {
  std::vector<int> counts(graph.num_edges(), 0);
  for (const PointOnGraph& p : events) ++counts.at(static_cast<std::size_t>(p.edge));
  return counts;
}

void PointPattern::validate(const MetricGraph& graph) const {
  for (const PointOnGraph& p : events) graph.check_point(p);
}

double quad_log_likelihood(const Vector& log_intensity, const Mesh& mesh, const PointPattern& pattern) {
  const auto p = static_cast<Eigen::Index>(mesh.size());
  const auto n = static_cast<Eigen::Index>(pattern.size());
  if (log_intensity.size() != p + n)
    throw MisalignedVector("expected " + std::to_string(p + n) + " values (mesh nodes then events), got " +
                           std::to_string(log_intensity.size()));
  double integral = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) integral += mesh.weights[static_cast<std::size_t>(i)] * std::exp(log_intensity[i]);
  return mesh.total_weight() - integral + log_intensity.tail(n).sum();
}

std::size_t SurrogateData::num_events() const {
  return static_cast<std::size_t>((y.array() > 0.0).count());
}

SurrogateData build_surrogate(const Mesh& mesh, const PointPattern& pattern, std::vector<int> row_node) {
  const auto p = static_cast<Eigen::Index>(mesh.size());
  const auto n = static_cast<Eigen::Index>(pattern.size());
  SurrogateData out;
  out.y = Vector::Zero(p + n);
  out.y.tail(n).setOnes();
  out.exposure = Vector::Zero(p + n);
  for (Eigen::Index i = 0; i < p; ++i) out.exposure[i] = mesh.weights[static_cast<std::size_t>(i)];
  if (row_node.empty()) {
    row_node.resize(static_cast<std::size_t>(p + n));
    std::iota(row_node.begin(), row_node.end(), 0);
  }
  if (static_cast<Eigen::Index>(row_node.size()) != p + n)
    throw MisalignedVector("row_node must have one entry per mesh node and event");
  out.node = std::move(row_node);
  out.total_length = mesh.total_weight();
  return out;
}

double surrogate_log_likelihood(const SurrogateData& data, const Vector& log_eta) {
  if (log_eta.size() != data.rows()) throw MisalignedVector("log_eta must have one entry per surrogate row");
  double total = 0.0;
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const double a = data.exposure[r];
    if (a > 0.0) {
      const double mean = a * std::exp(log_eta[r]);
      if (data.y[r] > 0.0) total += data.y[r] * (std::log(a) + log_eta[r]);
      total -= mean;
    } else {
      total += data.y[r] * log_eta[r];
    }
  }
  return total;
}

}  // namespace mglgcp
