#include "mglgcp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mglgcp/convergence.hpp"
#include "mglgcp/covariates.hpp"
#include "mglgcp/errors.hpp"
#include "mglgcp/excursions.hpp"
#include "mglgcp/inference.hpp"
#include "mglgcp/io.hpp"
#include "mglgcp/simulate.hpp"

namespace mglgcp {

using nlohmann::json;

namespace {

// Writes to `path`, or to the given stream for "-" / empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  write(f);
  if (!f) throw InputError("write failed for '" + path + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> number_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(what + ": not a number: '" + item + "'");
    }
  }
  return out;
}

HyperParams hyper_from_flags(const std::string& variant_name, double kappa, std::optional<double> tau,
                             std::optional<double> sigma) {
  const Variant v = parse_variant(variant_name);
  HyperParams hp;
  if (v == Variant::standard) {
    if (sigma) throw InputError("--sigma belongs to the variance-stationary variant; use --tau");
    hp = HyperParams::standard(kappa, tau.value_or(1.0));
  } else {
    if (tau) throw InputError("--tau belongs to the standard variant; use --sigma");
    hp = HyperParams::stationary(kappa, sigma.value_or(1.0));
  }
  hp.validate();
  return hp;
}

// Position of p in the plane, along the edge polyline by arc-length fraction.
std::optional<Point2> locate(const MetricGraph& graph, const PointOnGraph& p) {
  const Edge& e = graph.edge(p.edge);
  if (!e.geometry || e.geometry->size() < 2) return std::nullopt;
  const Polyline& line = *e.geometry;
  const double total = polyline_length(line);
  double target = total * std::clamp(p.t / e.length, 0.0, 1.0);
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double dx = line[i + 1].x - line[i].x;
    const double dy = line[i + 1].y - line[i].y;
    const double seg = std::hypot(dx, dy);
    if (target <= seg || i + 2 == line.size()) {
      const double f = seg > 0.0 ? std::min(1.0, target / seg) : 0.0;
      return Point2{line[i].x + f * dx, line[i].y + f * dy};
    }
    target -= seg;
  }
  return line.back();
}

std::string point_wkt(const Point2& p) { return "POINT (" + format_double(p.x) + " " + format_double(p.y) + ")"; }

// Covariate table with one row per mesh node (node_id) or per edge (edge_id).
// Events take the row of their cell.
DesignMatrix covariate_design(const std::string& path, const MetricGraph& graph, const Mesh& mesh,
                              const PointPattern& pattern, const std::vector<std::string>& categorical,
                              const std::vector<std::string>& distance, const std::vector<std::string>& traffic) {
  const CsvTable t = read_csv_file(path);
  // Keyed by mesh node id (as written by `mesh`) or, failing that, by edge id.
  const auto node_col = t.find_column("node_id");
  const bool by_node = node_col.has_value();
  const std::size_t id_col = by_node ? *node_col : t.column("edge_id");
  const std::size_t keys = by_node ? mesh.size() : graph.num_edges();
  std::vector<long> row_of(keys, -1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string& key = t.rows[r][id_col];
    std::size_t k = 0;
    if (by_node) {
      const double v = t.number(r, id_col);
      if (v < 0 || v != std::floor(v) || v >= static_cast<double>(keys))
        throw ParseError(path, static_cast<int>(t.line[r]), "node_id '" + key + "' is not a mesh node");
      k = static_cast<std::size_t>(v);
    } else {
      const auto e = graph.find_edge(key);
      if (!e) throw ParseError(path, static_cast<int>(t.line[r]), "unknown edge '" + key + "'");
      k = static_cast<std::size_t>(*e);
    }
    if (row_of[k] >= 0) throw ParseError(path, static_cast<int>(t.line[r]), "duplicate row for '" + key + "'");
    row_of[k] = static_cast<long>(r);
  }
  for (std::size_t k = 0; k < keys; ++k)
    if (row_of[k] < 0)
      throw ParseError(path, 0, by_node ? "no covariate row for mesh node " + std::to_string(k)
                                        : "no covariate row for edge '" + graph.edges()[k].id + "'");

  auto column_values = [&](std::size_t c) {
    std::vector<std::optional<double>> values;
    values.reserve(mesh.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const auto r = static_cast<std::size_t>(row_of[by_node ? i : static_cast<std::size_t>(mesh.nodes[i].edge)]);
      if (t.rows[r][c].empty())
        values.emplace_back(std::nullopt);
      else
        values.emplace_back(t.number(r, c));
    }
    return values;
  };
  auto is_in = [](const std::vector<std::string>& list, const std::string& name) {
    return std::find(list.begin(), list.end(), name) != list.end();
  };
  for (const auto& name : categorical) t.column(name);
  for (const auto& name : distance) t.column(name);

  RawTable raw;
  std::vector<std::string> traffic_parts;
  if (!traffic.empty()) {
    if (traffic.size() != 3) throw InputError("--traffic needs three columns: speed,class,length");
    traffic_parts = traffic;
  }
  std::map<std::string, RawColumn> parts;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == id_col) continue;
    RawColumn col;
    col.name = t.header[c];
    col.kind = is_in(categorical, col.name) ? ColumnKind::categorical
               : is_in(distance, col.name)  ? ColumnKind::distance
                                            : ColumnKind::numeric;
    col.values = column_values(c);
    if (is_in(traffic_parts, col.name)) {
      parts[col.name] = col;
      if (col.kind != ColumnKind::categorical) continue;
    }
    raw.columns.push_back(std::move(col));
  }
  if (!traffic_parts.empty()) {
    for (const auto& name : traffic_parts)
      if (!parts.count(name)) throw InputError("--traffic column '" + name + "' not in the covariate file");
    raw.columns.push_back(traffic_intensity_column(parts[traffic_parts[0]], parts[traffic_parts[1]], parts[traffic_parts[2]]));
  }
  const DesignMatrix mesh_design = preprocess_covariates(raw);
  return extend_to_events(mesh_design, mesh, pattern);
}

struct Config {
  json values = json::object();
  std::string path;
};

// Turns config entries into flags for the chosen subcommand. They go before
// the user's own flags, and every option keeps its last value.
std::vector<std::string> config_flags(const Config& config, const CLI::App& app, std::ostream& err) {
  std::vector<std::string> flags;
  for (const auto& [key, value] : config.values.items()) {
    if (key == "config") continue;
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    const CLI::Option* opt = app.get_option_no_throw("--" + name);
    if (!opt) {
      err << "note: config key '" << key << "' does not apply to this command\n";
      continue;
    }
    if (value.is_boolean()) {
      if (opt->get_expected_max() == 0) {
        if (value.get<bool>()) flags.push_back("--" + name);
        continue;
      }
      flags.push_back("--" + name);
      flags.push_back(value.get<bool>() ? "true" : "false");
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!joined.empty()) joined += ',';
        joined += item.is_string() ? item.get<std::string>() : item.dump();
      }
      flags.push_back("--" + name);
      flags.push_back(joined);
    } else if (value.is_string()) {
      flags.push_back("--" + name);
      flags.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      flags.push_back("--" + name);
      flags.push_back(value.dump());
    } else {
      throw InputError("config key '" + key + "': unsupported value");
    }
  }
  return flags;
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) { build(); }

  int run(const std::vector<std::string>& args);

 private:
  void build();
  void add_graph_commands();
  void add_mesh_command();
  void add_simulate_command();
  void add_fit_command();
  void add_excursions_command();
  void add_convergence_command();

  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"Log-Gaussian Cox processes on metric graphs", "mglgcp"};
  std::function<void()> action_;

  // Shared option storage; each subcommand only reads its own.
  std::string edges_, points_, out_path_, protect_;
  double h_ = 0.0;
  std::string graph_path_, events_path_, variant_ = "variance-stationary";
  double kappa_ = 2.0, mean_ = 0.0, h_sim_ = 0.01;
  std::optional<double> tau_, sigma_;
  std::optional<std::uint64_t> seed_;
  std::string field_out_, intensity_out_;
  std::string covariates_, categorical_, distance_, traffic_;
  std::optional<double> init_kappa_, init_scale_, kappa0_, log_kappa_precision_, log_sigma_precision_;
  double max_log_offset_ = 8.0;
  double max_cell_variance_ = 0.25;
  int max_iterations_ = 100;
  std::string fit_path_, set_out_, alpha_ = "0.05";
  double threshold_ = 0.0;
  std::size_t n_mc_ = 100000;
  std::string p_list_ = "8,16,32,64,128,512", functional_ = "posterior-mean-sup", partition_ = "equal";
  double length_ = 10.0;
  std::string config_path_;
};

void Cli::build() {
  app_.require_subcommand(1);
  app_.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app_.set_version_flag("--version", std::string("mglgcp 1.0"));
  app_.add_option("--config", config_path_, "JSON file whose keys mirror the flags; flags win");
  add_graph_commands();
  add_mesh_command();
  add_simulate_command();
  add_fit_command();
  add_excursions_command();
  add_convergence_command();
}

void Cli::add_graph_commands() {
  auto* graph = app_.add_subcommand("graph", "Graph utilities");
  graph->require_subcommand(1);
  graph->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto common = [this](CLI::App* cmd) {
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--edges", edges_, "edge CSV: edge_id,v_from,v_to,length[,wkt]")->required();
    cmd->add_option("--out", out_path_, "output file (default stdout)");
    cmd->add_option("--config", config_path_, "JSON config");
  };

  auto* build = graph->add_subcommand("build", "Validate an edge CSV and write it in canonical order");
  common(build);
  build->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(edges_);
      emit(out_path_, out_, [&](std::ostream& o) { write_edges_csv(o, g); });
    };
  });

  auto* prune = graph->add_subcommand("prune", "Merge edges at degree-2 vertices");
  common(prune);
  prune->add_option("--protect", protect_, "comma-separated vertex ids to keep");
  prune->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(edges_);
      const auto list = split_list(protect_);
      const PruneResult r = prune_degree2(g, std::set<std::string>(list.begin(), list.end()));
      for (const auto& v : r.skipped) err_ << "note: kept degree-2 vertex '" << v << "' on a cycle\n";
      emit(out_path_, out_, [&](std::ostream& o) { write_edges_csv(o, r.graph); });
    };
  });

  auto* subdivide = graph->add_subcommand("subdivide", "Insert degree-2 vertices at points");
  common(subdivide);
  subdivide->add_option("--points", points_, "points CSV: edge_id,t")->required();
  subdivide->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(edges_);
      const Subdivision s = subdivide_at(g, read_points_file(points_, g));
      emit(out_path_, out_, [&](std::ostream& o) { write_edges_csv(o, s.graph); });
    };
  });

  auto* mesh = graph->add_subcommand("mesh", "Midpoint mesh with spacing h");
  common(mesh);
  mesh->add_option("--mesh-h", h_, "cell width bound")->required();
  mesh->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(edges_);
      const Mesh m = build_mesh(g, h_);
      emit(out_path_, out_, [&](std::ostream& o) { write_mesh_csv(o, g, m); });
    };
  });

  auto* stats = graph->add_subcommand("stats", "Vertex/edge counts, total length, degree histogram");
  common(stats);
  stats->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(edges_);
      emit(out_path_, out_, [&](std::ostream& o) { o << graph_stats_json(g).dump(2) << '\n'; });
    };
  });
}

void Cli::add_mesh_command() {
  auto* mesh = app_.add_subcommand("mesh", "Midpoint mesh with spacing h");
  mesh->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  mesh->add_option("--graph,--edges", graph_path_, "edge CSV")->required();
  mesh->add_option("--mesh-h", h_, "cell width bound")->required();
  mesh->add_option("--out", out_path_, "mesh CSV (default stdout)");
  mesh->add_option("--config", config_path_, "JSON config");
  mesh->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(graph_path_);
      const Mesh m = build_mesh(g, h_);
      emit(out_path_, out_, [&](std::ostream& o) { write_mesh_csv(o, g, m); });
    };
  });
}

void Cli::add_simulate_command() {
  auto* sim = app_.add_subcommand("simulate", "Simulate an LGCP with constant mean");
  sim->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sim->add_option("--graph,--edges", graph_path_, "edge CSV")->required();
  sim->add_option("--variant", variant_, "standard | variance-stationary");
  sim->add_option("--kappa", kappa_, "range parameter");
  sim->add_option("--tau", tau_, "precision scale (standard)");
  sim->add_option("--sigma", sigma_, "marginal sd (variance-stationary)");
  sim->add_option("--mean", mean_, "constant log-intensity mean m");
  sim->add_option("--h-sim", h_sim_, "simulation cell width");
  sim->add_option("--seed", seed_, "64-bit seed")->required();
  sim->add_option("--out", out_path_, "events CSV (default stdout)");
  sim->add_option("--field-out", field_out_, "field values at the simulation mesh: node_id,value");
  sim->add_option("--config", config_path_, "JSON config");
  sim->callback([this] {
    action_ = [this] {
      const MetricGraph g = read_graph_file(graph_path_);
      const HyperParams hp = hyper_from_flags(variant_, kappa_, tau_, sigma_);
      if (!(h_sim_ > 0.0)) throw NonpositiveParameter("--h-sim must be positive");
      const LgcpSimulation s = simulate_lgcp_detailed(g, hp, constant_mean(mean_), h_sim_, *seed_);
      emit(out_path_, out_, [&](std::ostream& o) { write_points_csv(o, g, s.pattern.events); });
      if (!field_out_.empty())
        emit(field_out_, out_, [&](std::ostream& o) {
          o << "node_id,edge_id,t,value\n";
          for (std::size_t i = 0; i < s.mesh.size(); ++i)
            o << i << ',' << csv_field(g.edge(s.mesh.nodes[i].edge).id) << ',' << format_double(s.mesh.nodes[i].t)
              << ',' << format_double(s.field[static_cast<Eigen::Index>(i)]) << '\n';
        });
    };
  });
}

void Cli::add_fit_command() {
  auto* fit = app_.add_subcommand("fit", "Fit hyperparameters and the latent posterior");
  fit->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  fit->add_option("--graph,--edges", graph_path_, "edge CSV")->required();
  fit->add_option("--events", events_path_, "events CSV: edge_id,t")->required();
  fit->add_option("--mesh-h", h_, "mesh cell width bound")->required();
  fit->add_option("--variant", variant_, "standard | variance-stationary");
  fit->add_option("--covariates", covariates_, "covariate CSV keyed by node_id (mesh node) or edge_id");
  fit->add_option("--categorical", categorical_, "comma-separated categorical covariate columns");
  fit->add_option("--distance", distance_, "comma-separated distance columns (exp(-d/phi) transform)");
  fit->add_option("--traffic", traffic_, "speed,class,length columns combined into traffic intensity");
  fit->add_option("--init-kappa", init_kappa_, "starting kappa");
  fit->add_option("--init-scale", init_scale_, "starting tau or sigma");
  fit->add_option("--kappa0", kappa0_, "prior center of kappa (default 2 / graph extent)");
  fit->add_option("--log-kappa-precision", log_kappa_precision_, "prior precision of log kappa");
  fit->add_option("--log-sigma-precision", log_sigma_precision_, "prior precision of log sigma");
  fit->add_option("--max-log-offset", max_log_offset_, "bound on |log kappa|, |log scale| around the prior centers");
  fit->add_option("--max-cell-variance", max_cell_variance_,
                  "bound on kappa sigma^2 h, the field variance across the widest cell");
  fit->add_option("--max-iterations", max_iterations_, "BFGS iteration limit");
  fit->add_option("--seed", seed_, "recorded in the report; the fit itself draws no random numbers");
  fit->add_option("--out", out_path_, "fit report JSON (default stdout)");
  fit->add_option("--intensity-out", intensity_out_, "per mesh node posterior of the log-intensity");
  fit->add_option("--config", config_path_, "JSON config");
  fit->callback([this] {
    action_ = [this] {
      if (!(h_ > 0.0)) throw NonpositiveParameter("--mesh-h must be positive");
      const MetricGraph g = read_graph_file(graph_path_);
      PointPattern pattern{read_points_file(events_path_, g)};
      const Mesh mesh = build_mesh(g, h_);
      std::optional<DesignMatrix> design;
      if (!covariates_.empty())
        design = covariate_design(covariates_, g, mesh, pattern, split_list(categorical_), split_list(distance_),
                                  split_list(traffic_));
      PriorSpec prior = PriorSpec::from_graph(g);
      if (kappa0_) {
        if (!(*kappa0_ > 0.0)) throw NonpositiveParameter("--kappa0 must be positive");
        prior.kappa0 = *kappa0_;
      }
      if (log_kappa_precision_) prior.log_kappa_precision = *log_kappa_precision_;
      if (log_sigma_precision_) prior.log_sigma_precision = *log_sigma_precision_;
      if (!(prior.log_kappa_precision > 0.0) || !(prior.log_sigma_precision > 0.0))
        throw NonpositiveParameter("prior precisions must be positive");
      const LgcpProblem problem = LgcpProblem::assemble(g, mesh, pattern, design, {}, prior);

      FitOptions options;
      options.variant = parse_variant(variant_);
      options.max_log_offset = max_log_offset_;
      options.max_cell_variance = max_cell_variance_;
      options.max_iterations = max_iterations_;
      if (init_kappa_ || init_scale_) {
        const double k = init_kappa_.value_or(prior.kappa0);
        const double s = init_scale_.value_or(options.variant == Variant::standard
                                                  ? std::exp(prior.log_scale_center(Variant::standard))
                                                  : moment_sigma(problem));
        options.init = options.variant == Variant::standard ? HyperParams::standard(k, s) : HyperParams::stationary(k, s);
        options.init->validate();
      }
      const FitResult result = fit_hyperparameters(problem, options);
      FitReport report = make_fit_report(problem, result);
      report.extra["mesh_h"] = h_;
      report.extra["max_cell_variance"] = max_cell_variance_;
      if (seed_) report.extra["seed"] = *seed_;
      emit(out_path_, out_, [&](std::ostream& o) { o << fit_report_json(report).dump(2) << '\n'; });

      if (!intensity_out_.empty()) {
        const GaussianPosterior& post = result.posterior;
        const bool geometry = g.all_edges_have_geometry();
        emit(intensity_out_, out_, [&](std::ostream& o) {
          o << "node_id,edge_id,t,field_mean,field_sd,log_intensity,intensity" << (geometry ? ",wkt" : "") << '\n';
          const Vector beta = post.beta_mean();
          for (std::size_t i = 0; i < mesh.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            const int node = problem.data.node[i];
            const double u = post.mode[node];
            const double sd = std::sqrt(post.marginal_variances[node]);
            double eta = u + problem.offset[row];
            for (Eigen::Index j = 0; j < beta.size(); ++j) eta += problem.design.X(row, j) * beta[j];
            o << i << ',' << csv_field(g.edge(mesh.nodes[i].edge).id) << ',' << format_double(mesh.nodes[i].t) << ','
              << format_double(u) << ',' << format_double(sd) << ',' << format_double(eta) << ','
              << format_double(std::exp(eta));
            if (geometry) o << ',' << csv_field(point_wkt(*locate(g, mesh.nodes[i])));
            o << '\n';
          }
        });
      }
      if (!result.converged || result.status.find("bound") != std::string::npos)
        err_ << "warning: " << result.status << '\n';
    };
  });
}

void Cli::add_excursions_command() {
  auto* exc = app_.add_subcommand("excursions", "Positive excursion function of the latent field");
  exc->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  exc->add_option("--fit", fit_path_, "fit report JSON")->required();
  exc->add_option("--t,--threshold", threshold_, "level t of the excursion u > t");
  exc->add_option("--alpha", alpha_, "comma-separated alpha levels for --set-out");
  exc->add_option("--mc,--n-mc", n_mc_, "Monte Carlo samples");
  exc->add_option("--seed", seed_, "64-bit seed")->required();
  exc->add_option("--out", out_path_, "CSV node_id,edge_id,t,marginal_prob,F (default stdout)");
  exc->add_option("--set-out", set_out_, "CSV of excursion set membership per alpha");
  exc->add_option("--config", config_path_, "JSON config");
  exc->callback([this] {
    action_ = [this] {
      const FitReport report = fit_report_from_json(read_json_file(fit_path_));
      ExcursionOptions options;
      options.n_mc = n_mc_;
      const ExcursionResult r = excursion_function(report.posterior, threshold_, *seed_, options);
      std::vector<ExcursionRow> rows;
      for (std::size_t i = 0; i < report.node_ids.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        rows.push_back({report.node_ids[i], report.node_edge[i], report.node_t[i], r.marginal_probs[k], r.F[k]});
      }
      emit(out_path_, out_, [&](std::ostream& o) { write_excursions_csv(o, rows); });
      if (!set_out_.empty()) {
        const auto alphas = number_list(alpha_, "--alpha");
        emit(set_out_, out_, [&](std::ostream& o) {
          o << "alpha,node_id,edge_id,t\n";
          for (double a : alphas) {
            if (!(a > 0.0 && a < 1.0)) throw InputError("--alpha values must lie in (0, 1)");
            for (int i : extract_set(r, a))
              o << format_double(a) << ',' << csv_field(rows[static_cast<std::size_t>(i)].node_id) << ','
                << csv_field(rows[static_cast<std::size_t>(i)].edge_id) << ','
                << format_double(rows[static_cast<std::size_t>(i)].t) << '\n';
          }
        });
      }
    };
  });
}

void Cli::add_convergence_command() {
  auto* conv = app_.add_subcommand("convergence-study", "Posterior-mean distances across mesh refinements");
  conv->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  conv->add_option("--graph,--edges", graph_path_, "edge CSV (default: one interval of --length)");
  conv->add_option("--length", length_, "interval length when no graph is given");
  conv->add_option("--variant", variant_, "standard | variance-stationary");
  conv->add_option("--kappa", kappa_, "true kappa");
  conv->add_option("--tau", tau_, "true tau (standard)");
  conv->add_option("--sigma", sigma_, "true sigma (variance-stationary)");
  conv->add_option("--mean", mean_, "known log-intensity mean (default log 5)");
  conv->add_option("--p-list", p_list_, "comma-separated mesh levels");
  conv->add_option("--functional", functional_, "posterior-mean-sup | posterior-mean-L2");
  conv->add_option("--partition", partition_, "equal | wide-cell");
  conv->add_option("--h-sim", h_sim_, "simulation cell width (0: automatic)");
  conv->add_option("--seed", seed_, "64-bit seed")->required();
  conv->add_option("--out", out_path_, "study JSON (default stdout)");
  conv->add_option("--config", config_path_, "JSON config");
  conv->callback([this, conv] {
    const bool mean_given = conv->count("--mean") > 0;
    const bool h_given = conv->count("--h-sim") > 0;
    action_ = [this, mean_given, h_given] {
      MetricGraph g;
      std::string id = "interval";
      if (!graph_path_.empty()) {
        g = read_graph_file(graph_path_);
        id = graph_path_;
      } else {
        if (!(length_ > 0.0)) throw NonpositiveParameter("--length must be positive");
        g = build_graph({EdgeRecord{"e0", "v0", "v1", length_, std::nullopt}});
      }
      RateStudyConfig config;
      config.truth = hyper_from_flags(variant_, kappa_, tau_, sigma_);
      if (mean_given) config.mean = mean_;
      config.seed = *seed_;
      config.p_list.clear();
      for (double p : number_list(p_list_, "--p-list")) {
        if (p != std::floor(p) || p < 1) throw InputError("--p-list entries must be positive integers");
        config.p_list.push_back(static_cast<int>(p));
      }
      config.functional = parse_functional(functional_);
      if (partition_ == "equal")
        config.partition = PartitionKind::equal;
      else if (partition_ == "wide-cell" || partition_ == "wide_cell")
        config.partition = PartitionKind::wide_cell;
      else
        throw InputError("unknown partition '" + partition_ + "' (expected equal or wide-cell)");
      config.h_sim = h_given ? h_sim_ : 0.0;
      const ConvergenceStudy study = rate_study(g, config, id);
      emit(out_path_, out_, [&](std::ostream& o) { o << convergence_json(study).dump(2) << '\n'; });
    };
  });
}

int Cli::run(const std::vector<std::string>& args) {
  // Locate the subcommand chain and any --config before the real parse.
  std::vector<std::string> chain;
  const CLI::App* cursor = &app_;
  std::size_t pos = 0;
  for (; pos < args.size(); ++pos) {
    if (args[pos] == "--config" && pos + 1 < args.size()) {
      ++pos;
      continue;
    }
    if (args[pos].empty() || args[pos][0] == '-') break;
    const CLI::App* sub = nullptr;
    try {
      sub = const_cast<CLI::App*>(cursor)->get_subcommand(args[pos]);
    } catch (const CLI::OptionNotFound&) {
      break;
    }
    chain.push_back(args[pos]);
    cursor = sub;
  }
  Config config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config.path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config.path = args[i].substr(9);
  }
  std::vector<std::string> full(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(pos));
  if (!config.path.empty()) {
    config.values = read_json_file(config.path);
    if (!config.values.is_object()) throw InputError(config.path + ": config must be a JSON object");
    const auto extra = config_flags(config, *cursor, err_);
    full.insert(full.end(), extra.begin(), extra.end());
  }
  full.insert(full.end(), args.begin() + static_cast<std::ptrdiff_t>(pos), args.end());

  std::vector<std::string> reversed(full.rbegin(), full.rend());
  try {
    app_.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out_ << app_.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out_ << app_.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out_ << "mglgcp 1.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err_ << "error: " << e.what() << '\n';
    const CLI::App* help_for = cursor ? cursor : &app_;
    err_ << "run with --help for usage (" << help_for->get_name() << ")\n";
    return 2;
  }
  if (!action_) {
    err_ << "error: no command given\n";
    return 2;
  }
  action_();
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    Cli cli(out, err);
    return cli.run(args);
  } catch (const OptimizerFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    if (!e.trace().empty()) err << e.trace() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace mglgcp
