#include "mglgcp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mglgcp/errors.hpp"

namespace mglgcp {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

// Splits one logical record, which may span physical lines inside quotes.
bool next_record(std::istream& in, std::vector<std::string>& fields, int& line, int& start_line,
                 const std::string& source) {
  fields.clear();
  std::string raw;
  if (!std::getline(in, raw)) return false;
  ++line;
  start_line = line;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i >= raw.size()) {
      if (quoted) {
        std::string more;
        if (!std::getline(in, more)) throw ParseError(source, start_line, "unterminated quoted field");
        ++line;
        field += '\n';
        raw = std::move(more);
        i = 0;
        continue;
      }
      break;
    }
    const char c = raw[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < raw.size() && raw[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!trim(field).empty()) throw ParseError(source, line, "quote inside unquoted field");
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else if (c == '\r' && i + 1 == raw.size()) {
      // CRLF
    } else {
      if (was_quoted && c != ' ' && c != '\t') throw ParseError(source, line, "text after closing quote");
      if (!was_quoted) field += c;
    }
    ++i;
  }
  fields.push_back(was_quoted ? field : trim(field));
  return true;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

}  // namespace

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto c = find_column(name);
  if (!c) throw ParseError(source, 1, "missing column '" + name + "'");
  return *c;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  double v = 0.0;
  if (!parse_number(rows.at(row).at(col), v))
    throw ParseError(source, static_cast<int>(line.at(row)),
                     "column '" + header.at(col) + "': not a number: '" + rows[row][col] + "'");
  return v;
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::vector<std::string> fields;
  int line = 0;
  int start = 0;
  while (next_record(in, fields, line, start, source)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (table.header.empty()) {
      table.header = fields;
      if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) table.header[0].erase(0, 3);
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError(source, start,
                       "expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    table.rows.push_back(fields);
    table.line.push_back(static_cast<std::size_t>(start));
  }
  if (table.header.empty()) throw ParseError(source, 0, "empty file");
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  auto in = open_input(path);
  return read_csv(in, path);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos && trim(s) == s) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Polyline parse_wkt_linestring(const std::string& wkt) {
  const std::string s = trim(wkt);
  std::string upper;
  for (char c : s) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  const std::string tag = "LINESTRING";
  if (upper.rfind(tag, 0) != 0) throw InputError("WKT: expected LINESTRING, got '" + s + "'");
  const auto open = s.find('(');
  const auto close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw InputError("WKT: missing parentheses in '" + s + "'");
  Polyline line;
  std::stringstream body(s.substr(open + 1, close - open - 1));
  std::string pair;
  while (std::getline(body, pair, ',')) {
    std::istringstream coords(pair);
    std::string xs, ys, rest;
    coords >> xs >> ys;
    coords >> rest;  // a Z coordinate is ignored
    Point2 p;
    if (!parse_number(xs, p.x) || !parse_number(ys, p.y)) throw InputError("WKT: bad coordinate pair '" + trim(pair) + "'");
    line.push_back(p);
  }
  if (line.size() < 2) throw InputError("WKT: a LINESTRING needs at least two points");
  return line;
}

std::string format_wkt(const Polyline& line) {
  std::string out = "LINESTRING (";
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (i) out += ", ";
    out += format_double(line[i].x) + " " + format_double(line[i].y);
  }
  return out + ")";
}

std::vector<EdgeRecord> read_edges_csv(std::istream& in, const std::string& source) {
  const CsvTable t = read_csv(in, source);
  const auto id = t.column("edge_id");
  const auto from = t.column("v_from");
  const auto to = t.column("v_to");
  const auto len = t.find_column("length");
  const auto wkt = t.find_column("wkt");
  if (!len && !wkt) throw ParseError(source, 1, "need a 'length' or 'wkt' column");
  std::vector<EdgeRecord> records;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = static_cast<int>(t.line[r]);
    EdgeRecord rec;
    rec.id = t.rows[r][id];
    rec.from = t.rows[r][from];
    rec.to = t.rows[r][to];
    if (rec.id.empty() || rec.from.empty() || rec.to.empty()) throw ParseError(source, line, "empty identifier");
    if (len && !t.rows[r][*len].empty()) rec.length = t.number(r, *len);
    if (wkt && !t.rows[r][*wkt].empty()) {
      try {
        rec.geometry = parse_wkt_linestring(t.rows[r][*wkt]);
      } catch (const ParseError&) {
        throw;
      } catch (const InputError& e) {
        throw ParseError(source, line, e.what());
      }
    }
    if (!rec.length && !rec.geometry) throw ParseError(source, line, "edge '" + rec.id + "' has neither length nor wkt");
    records.push_back(std::move(rec));
  }
  return records;
}

MetricGraph read_graph_file(const std::string& path) {
  auto in = open_input(path);
  return build_graph(read_edges_csv(in, path));
}

void write_edges_csv(std::ostream& out, const MetricGraph& graph) {
  std::vector<EdgeIndex> order(graph.num_edges());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](EdgeIndex a, EdgeIndex b) { return graph.edge(a).id < graph.edge(b).id; });
  bool any_geometry = false;
  for (const Edge& e : graph.edges()) any_geometry = any_geometry || e.geometry.has_value();
  out << "edge_id,v_from,v_to,length" << (any_geometry ? ",wkt" : "") << '\n';
  for (EdgeIndex e : order) {
    const Edge& edge = graph.edge(e);
    out << csv_field(edge.id) << ',' << csv_field(graph.vertex_id(edge.from)) << ','
        << csv_field(graph.vertex_id(edge.to)) << ',' << format_double(edge.length);
    if (any_geometry) out << ',' << (edge.geometry ? csv_field(format_wkt(*edge.geometry)) : std::string());
    out << '\n';
  }
}

std::vector<PointOnGraph> read_points_csv(std::istream& in, const MetricGraph& graph, const std::string& source) {
  const CsvTable t = read_csv(in, source);
  const auto id = t.column("edge_id");
  const auto tc = t.column("t");
  std::vector<PointOnGraph> points;
  points.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = static_cast<int>(t.line[r]);
    const auto e = graph.find_edge(t.rows[r][id]);
    if (!e) throw ParseError(source, line, "unknown edge '" + t.rows[r][id] + "'");
    const PointOnGraph p{*e, t.number(r, tc)};
    try {
      graph.check_point(p);
    } catch (const InputError& err) {
      throw ParseError(source, line, err.what());
    }
    points.push_back(p);
  }
  return points;
}

std::vector<PointOnGraph> read_points_file(const std::string& path, const MetricGraph& graph) {
  auto in = open_input(path);
  return read_points_csv(in, graph, path);
}

void write_points_csv(std::ostream& out, const MetricGraph& graph, const std::vector<PointOnGraph>& points) {
  out << "edge_id,t\n";
  for (const auto& p : points) out << csv_field(graph.edge(p.edge).id) << ',' << format_double(p.t) << '\n';
}

void write_mesh_csv(std::ostream& out, const MetricGraph& graph, const Mesh& mesh) {
  out << "node_id,edge_id,t,weight\n";
  for (std::size_t i = 0; i < mesh.size(); ++i)
    out << i << ',' << csv_field(graph.edge(mesh.nodes[i].edge).id) << ',' << format_double(mesh.nodes[i].t) << ','
        << format_double(mesh.weights[i]) << '\n';
}

Mesh read_mesh_csv(std::istream& in, const MetricGraph& graph, const std::string& source) {
  const CsvTable t = read_csv(in, source);
  const auto id = t.column("edge_id");
  const auto tc = t.column("t");
  const auto wc = t.column("weight");
  std::vector<std::vector<double>> partitions(graph.num_edges());
  std::vector<std::vector<std::pair<double, double>>> cells(graph.num_edges());
  std::vector<std::vector<std::size_t>> row_of(graph.num_edges());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto e = graph.find_edge(t.rows[r][id]);
    if (!e) throw ParseError(source, static_cast<int>(t.line[r]), "unknown edge '" + t.rows[r][id] + "'");
    cells[static_cast<std::size_t>(*e)].emplace_back(t.number(r, tc), t.number(r, wc));
    row_of[static_cast<std::size_t>(*e)].push_back(r);
  }
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const double length = graph.edges()[e].length;
    if (cells[e].empty()) throw ParseError(source, 0, "edge '" + graph.edges()[e].id + "' has no mesh nodes");
    std::vector<double> b{0.0};
    for (std::size_t k = 0; k < cells[e].size(); ++k) {
      const auto [tk, wk] = cells[e][k];
      const double lo = b.back();
      const int line = static_cast<int>(t.line[row_of[e][k]]);
      if (!(wk > 0.0)) throw ParseError(source, line, "weight must be positive");
      if (tk < lo - 1e-9 * length || tk > lo + wk + 1e-9 * length)
        throw ParseError(source, line, "node lies outside its cell (rows must be ordered by t within an edge)");
      b.push_back(k + 1 == cells[e].size() ? length : lo + wk);
    }
    if (std::abs(b[b.size() - 2] + cells[e].back().second - length) > 1e-9 * std::max(1.0, length))
      throw ParseError(source, 0, "weights on edge '" + graph.edges()[e].id + "' do not sum to its length");
    partitions[e] = std::move(b);
  }
  Mesh mesh = mesh_from_partition(graph, partitions);
  // Keep the stored node positions and weights exactly.
  std::size_t i = 0;
  for (std::size_t e = 0; e < graph.num_edges(); ++e)
    for (const auto& [tk, wk] : cells[e]) {
      mesh.nodes[i].t = tk;
      mesh.weights[i] = wk;
      ++i;
    }
  return mesh;
}

void write_precision_coo(std::ostream& out, const SparseMatrix& Q) {
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  for (Eigen::Index c = 0; c < Q.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(Q, c); it; ++it)
      if (it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end());
  for (const auto& [i, j, v] : entries) out << i << ' ' << j << ' ' << format_double(v) << '\n';
}

SparseMatrix read_precision_coo(std::istream& in, Eigen::Index n, const std::string& source) {
  std::vector<Eigen::Triplet<double>> entries;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty() || trim(raw)[0] == '#') continue;
    std::istringstream ss(raw);
    long long i = -1, j = -1;
    std::string vs;
    double v = 0.0;
    if (!(ss >> i >> j >> vs) || !parse_number(vs, v)) throw ParseError(source, line, "expected 'i j value'");
    if (i < 0 || j < 0 || i >= n || j >= n) throw ParseError(source, line, "index out of range");
    entries.emplace_back(i, j, v);
    if (i != j) entries.emplace_back(j, i, v);
  }
  SparseMatrix Q(n, n);
  Q.setFromTriplets(entries.begin(), entries.end());
  return Q;
}

void write_node_values_csv(std::ostream& out, const std::vector<std::string>& ids, const Vector& values) {
  if (static_cast<Eigen::Index>(ids.size()) != values.size()) throw MisalignedVector("one id per value required");
  out << "node_id,value\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out << csv_field(ids[i]) << ',' << format_double(values[static_cast<Eigen::Index>(i)]) << '\n';
}

json graph_stats_json(const MetricGraph& graph) {
  std::map<int, int> hist;
  for (std::size_t v = 0; v < graph.num_vertices(); ++v) ++hist[graph.degree(static_cast<VertexIndex>(v))];
  json degrees = json::object();
  for (const auto& [d, c] : hist) degrees[std::to_string(d)] = c;
  std::size_t loops = 0;
  for (const Edge& e : graph.edges()) loops += e.is_loop();
  return json{{"vertices", graph.num_vertices()},
              {"edges", graph.num_edges()},
              {"total_length", graph.total_length()},
              {"degree_histogram", degrees},
              {"loops", loops},
              {"has_geometry", graph.all_edges_have_geometry()}};
}

namespace {

json summary_json(const ParameterSummary& s) {
  return json{{"name", s.name}, {"estimate", s.estimate}, {"mean", s.mean},
              {"lower", s.lower}, {"upper", s.upper},     {"sd", s.sd}};
}

// NaN is written as null.
double number_or_nan(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

ParameterSummary summary_from(const json& j) {
  ParameterSummary s;
  s.name = j.at("name").get<std::string>();
  s.estimate = number_or_nan(j.at("estimate"));
  s.mean = number_or_nan(j.at("mean"));
  s.lower = number_or_nan(j.at("lower"));
  s.upper = number_or_nan(j.at("upper"));
  s.sd = number_or_nan(j.at("sd"));
  return s;
}

json hyper_json(const HyperParams& hp) {
  json j{{"variant", to_string(hp.variant)}, {"kappa", hp.kappa}};
  if (hp.tau) j["tau"] = *hp.tau;
  if (hp.sigma) j["sigma"] = *hp.sigma;
  return j;
}

HyperParams hyper_from(const json& j) {
  HyperParams hp;
  hp.variant = parse_variant(j.at("variant").get<std::string>());
  hp.kappa = j.at("kappa").get<double>();
  if (j.contains("tau")) hp.tau = j.at("tau").get<double>();
  if (j.contains("sigma")) hp.sigma = j.at("sigma").get<double>();
  return hp;
}

}  // namespace

FitReport make_fit_report(const LgcpProblem& problem, const FitResult& fit) {
  FitReport r;
  r.variant = fit.hyper.variant;
  r.hyper = fit.hyper;
  r.kappa = fit.kappa;
  r.scale = fit.scale;
  r.beta = fit.beta;
  r.converged = fit.converged;
  r.status = fit.status;
  r.trace = fit.trace;
  r.objective = fit.objective;
  r.log_evidence = fit.posterior.log_evidence;
  r.posterior = fit.posterior;
  for (std::size_t v = 0; v < problem.node_location.size(); ++v) {
    r.node_ids.push_back(problem.sub.graph.vertex_id(static_cast<VertexIndex>(v)));
    r.node_edge.push_back(problem.graph.edge(problem.node_location[v].edge).id);
    r.node_t.push_back(problem.node_location[v].t);
  }
  r.extra = json{{"init", hyper_json(fit.init)},
                 {"mesh_nodes", problem.mesh.size()},
                 {"events", problem.pattern.size()},
                 {"prior",
                  {{"kappa0", problem.prior.kappa0},
                   {"log_kappa_precision", problem.prior.log_kappa_precision},
                   {"log_scale_precision", problem.prior.log_scale_precision},
                   {"log_sigma_center", problem.prior.log_sigma_center},
                   {"log_sigma_precision", problem.prior.log_sigma_precision},
                   {"beta_variance", problem.prior.beta_variance}}}};
  return r;
}

json fit_report_json(const FitReport& r) {
  json beta = json::array();
  for (const auto& b : r.beta) beta.push_back(summary_json(b));
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iteration", t.iteration}, {"log_kappa", t.log_kappa}, {"log_scale", t.log_scale},
                     {"objective", t.objective}, {"gradient_norm", t.gradient_norm}});

  const GaussianPosterior& post = r.posterior;
  json triplets = json::array();
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  for (Eigen::Index c = 0; c < post.precision.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(post.precision, c); it; ++it)
      if (it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
  std::sort(entries.begin(), entries.end());
  for (const auto& [i, j, v] : entries) triplets.push_back(json::array({i, j, v}));
  json nodes = json::array();
  for (std::size_t i = 0; i < r.node_ids.size(); ++i)
    nodes.push_back({{"id", r.node_ids[i]}, {"edge_id", r.node_edge[i]}, {"t", r.node_t[i]}});

  json j;
  j["variant"] = to_string(r.variant);
  j["hyper"] = hyper_json(r.hyper);
  j["kappa"] = summary_json(r.kappa);
  j["tau_or_sigma"] = summary_json(r.scale);
  j["beta"] = beta;
  j["convergence"] = {{"converged", r.converged}, {"status", r.status}, {"iterations", r.trace.size()},
                      {"objective", r.objective}, {"log_evidence", r.log_evidence}, {"trace", trace},
                      {"newton_iterations", post.iterations}, {"newton_gradient_norm", post.gradient_norm}};
  j["posterior"] = {{"n_field", post.n_field},
                    {"labels", post.labels},
                    {"nodes", nodes},
                    {"mode", std::vector<double>(post.mode.data(), post.mode.data() + post.mode.size())},
                    {"precision", {{"n", post.mode.size()}, {"lower_triplets", triplets}}}};
  j["settings"] = r.extra;
  return j;
}

FitReport fit_report_from_json(const json& j) {
  try {
    FitReport r;
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.hyper = hyper_from(j.at("hyper"));
    r.kappa = summary_from(j.at("kappa"));
    r.scale = summary_from(j.at("tau_or_sigma"));
    for (const auto& b : j.at("beta")) r.beta.push_back(summary_from(b));
    const json& conv = j.at("convergence");
    r.converged = conv.at("converged").get<bool>();
    r.status = conv.at("status").get<std::string>();
    r.objective = conv.at("objective").get<double>();
    r.log_evidence = conv.at("log_evidence").get<double>();
    for (const auto& t : conv.at("trace"))
      r.trace.push_back({t.at("iteration").get<int>(), t.at("log_kappa").get<double>(), t.at("log_scale").get<double>(),
                         t.at("objective").get<double>(), t.at("gradient_norm").get<double>()});

    const json& p = j.at("posterior");
    const auto mode_values = p.at("mode").get<std::vector<double>>();
    const Eigen::Index n = p.at("precision").at("n").get<Eigen::Index>();
    if (n != static_cast<Eigen::Index>(mode_values.size())) throw InputError("posterior mode and precision sizes differ");
    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& t : p.at("precision").at("lower_triplets")) {
      const auto i = t.at(0).get<Eigen::Index>();
      const auto k = t.at(1).get<Eigen::Index>();
      const double v = t.at(2).get<double>();
      if (i < 0 || k < 0 || i >= n || k >= n) throw InputError("precision index out of range");
      entries.emplace_back(i, k, v);
      if (i != k) entries.emplace_back(k, i, v);
    }
    SparseMatrix Q(n, n);
    Q.setFromTriplets(entries.begin(), entries.end());
    const Vector mode = Eigen::Map<const Vector>(mode_values.data(), n);
    r.posterior = make_gaussian_posterior(mode, std::move(Q), p.at("n_field").get<Eigen::Index>(),
                                          p.at("labels").get<std::vector<std::string>>());
    r.posterior.hyper = r.hyper;
    r.posterior.log_evidence = r.log_evidence;
    r.posterior.iterations = conv.value("newton_iterations", 0);
    r.posterior.gradient_norm = conv.value("newton_gradient_norm", 0.0);
    for (const auto& node : p.at("nodes")) {
      r.node_ids.push_back(node.at("id").get<std::string>());
      r.node_edge.push_back(node.at("edge_id").get<std::string>());
      r.node_t.push_back(node.at("t").get<double>());
    }
    if (static_cast<Eigen::Index>(r.node_ids.size()) != r.posterior.n_field)
      throw InputError("posterior node list does not match n_field");
    r.extra = j.value("settings", json::object());
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("fit report: ") + e.what());
  }
}

void write_excursions_csv(std::ostream& out, const std::vector<ExcursionRow>& rows) {
  out << "node_id,edge_id,t,marginal_prob,F\n";
  for (const auto& r : rows)
    out << csv_field(r.node_id) << ',' << csv_field(r.edge_id) << ',' << format_double(r.t) << ','
        << format_double(r.marginal_prob) << ',' << format_double(r.F) << '\n';
}

std::vector<ExcursionRow> read_excursions_csv(std::istream& in, const std::string& source) {
  const CsvTable t = read_csv(in, source);
  const auto id = t.column("node_id");
  const auto e = t.column("edge_id");
  const auto tc = t.column("t");
  const auto mp = t.column("marginal_prob");
  const auto fc = t.column("F");
  std::vector<ExcursionRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    rows.push_back({t.rows[r][id], t.rows[r][e], t.number(r, tc), t.number(r, mp), t.number(r, fc)});
  return rows;
}

json convergence_json(const ConvergenceStudy& s) {
  json levels = json::array();
  for (const auto& l : s.levels)
    levels.push_back({{"p", l.p}, {"cells", l.cells}, {"latent_nodes", l.latent_nodes}, {"distance", l.distance},
                      {"sup_distance", l.sup_distance}, {"l2_distance", l.l2_distance},
                      {"newton_iterations", l.newton_iterations}});
  return json{{"graph_id", s.graph_id},
              {"seed", s.seed},
              {"functional", to_string(s.functional)},
              {"partition", s.partition == PartitionKind::equal ? "equal" : "wide-cell"},
              {"n_events", s.n_events},
              {"levels", levels},
              {"slope", s.slope}};
}

ConvergenceStudy convergence_from_json(const json& j) {
  try {
    ConvergenceStudy s;
    s.graph_id = j.at("graph_id").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.functional = parse_functional(j.at("functional").get<std::string>());
    s.partition = j.at("partition").get<std::string>() == "equal" ? PartitionKind::equal : PartitionKind::wide_cell;
    s.n_events = j.at("n_events").get<std::size_t>();
    for (const auto& l : j.at("levels"))
      s.levels.push_back({l.at("p").get<int>(), l.at("cells").get<std::size_t>(), l.at("latent_nodes").get<std::size_t>(),
                          l.at("distance").get<double>(), l.at("sup_distance").get<double>(),
                          l.at("l2_distance").get<double>(), l.at("newton_iterations").get<int>()});
    s.slope = j.at("slope").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("convergence report: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
}

}  // namespace mglgcp
