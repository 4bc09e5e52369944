// io.hpp - file formats: CSV tables, WKT linestrings, graph/points/mesh CSVs,
// precision triplets and JSON reports.

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mglgcp/convergence.hpp"
#include "mglgcp/excursions.hpp"
#include "mglgcp/field.hpp"
#include "mglgcp/graph.hpp"
#include "mglgcp/inference.hpp"
#include "mglgcp/mesh.hpp"

namespace mglgcp {

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  // 1-based source line of each row

  // Column index; throws ParseError when missing.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

// RFC 4180 style: comma separated, double quotes, "" escapes. Blank lines are
// skipped. Every row must have as many fields as the header.
CsvTable read_csv(std::istream& in, const std::string& source = "<input>");
CsvTable read_csv_file(const std::string& path);
std::string csv_field(const std::string& s);

// Shortest round-trip representation of a double.
std::string format_double(double x);

Polyline parse_wkt_linestring(const std::string& wkt);
std::string format_wkt(const Polyline& line);

// edge_id,v_from,v_to,length[,wkt]
std::vector<EdgeRecord> read_edges_csv(std::istream& in, const std::string& source = "<edges>");
MetricGraph read_graph_file(const std::string& path);
// Canonical form: rows sorted by edge id, lengths in shortest round-trip form,
// wkt column only when some edge has geometry.
void write_edges_csv(std::ostream& out, const MetricGraph& graph);

// edge_id,t
std::vector<PointOnGraph> read_points_csv(std::istream& in, const MetricGraph& graph, const std::string& source = "<points>");
std::vector<PointOnGraph> read_points_file(const std::string& path, const MetricGraph& graph);
void write_points_csv(std::ostream& out, const MetricGraph& graph, const std::vector<PointOnGraph>& points);

// node_id,edge_id,t,weight
void write_mesh_csv(std::ostream& out, const MetricGraph& graph, const Mesh& mesh);
// Cells are rebuilt from consecutive weights on each edge.
Mesh read_mesh_csv(std::istream& in, const MetricGraph& graph, const std::string& source = "<mesh>");

// "i j value" per line, lower triangle, 0-based.
void write_precision_coo(std::ostream& out, const SparseMatrix& Q);
SparseMatrix read_precision_coo(std::istream& in, Eigen::Index n, const std::string& source = "<precision>");

// node_id,value
void write_node_values_csv(std::ostream& out, const std::vector<std::string>& ids, const Vector& values);

nlohmann::json graph_stats_json(const MetricGraph& graph);

// Fit report: parameter tables, convergence trace and the Gaussian posterior
// (mode, precision triplets, node locations) needed by the excursion step.
struct FitReport {
  Variant variant = Variant::variance_stationary;
  HyperParams hyper;
  ParameterSummary kappa;
  ParameterSummary scale;
  std::vector<ParameterSummary> beta;
  bool converged = false;
  std::string status;
  std::vector<TraceEntry> trace;
  double objective = 0.0;
  double log_evidence = 0.0;
  GaussianPosterior posterior;
  std::vector<std::string> node_ids;
  std::vector<std::string> node_edge;  // edge id on the input graph
  std::vector<double> node_t;
  nlohmann::json extra;  // run settings, copied through
};

FitReport make_fit_report(const LgcpProblem& problem, const FitResult& fit);
nlohmann::json fit_report_json(const FitReport& report);
FitReport fit_report_from_json(const nlohmann::json& j);

// node_id,edge_id,t,marginal_prob,F
struct ExcursionRow {
  std::string node_id;
  std::string edge_id;
  double t = 0.0;
  double marginal_prob = 0.0;
  double F = 0.0;
};
void write_excursions_csv(std::ostream& out, const std::vector<ExcursionRow>& rows);
std::vector<ExcursionRow> read_excursions_csv(std::istream& in, const std::string& source = "<excursions>");

nlohmann::json convergence_json(const ConvergenceStudy& study);
ConvergenceStudy convergence_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);

}  // namespace mglgcp
