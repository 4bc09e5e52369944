#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mglgcp/cli.hpp"
#include "mglgcp/errors.hpp"
#include "mglgcp/io.hpp"
#include "mglgcp/simulate.hpp"
#include "support.hpp"

using namespace mglgcp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("mglgcp_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator()(const std::string& file) const { return (dir / file).string(); }
};

std::string edges_text(const MetricGraph& g) {
  std::ostringstream s;
  write_edges_csv(s, g);
  return s.str();
}

const char* kPath = "edge_id,v_from,v_to,length\ne1,a,b,1\ne2,b,c,1\ne3,c,d,1\n";

}  // namespace

TEST_CASE("csv reader: quoting, blank lines and errors") {
  std::istringstream in("\xEF\xBB\xBF" "a,b\n\"x,1\",\"say \"\"hi\"\"\"\n\n\"multi\nline\",2\n");
  const CsvTable t = read_csv(in, "t.csv");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.header[0] == "a");
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[1][0] == "multi\nline");
  CHECK(t.number(1, 1) == 2.0);
  CHECK(csv_field("p,q") == "\"p,q\"");
  CHECK(csv_field("plain") == "plain");

  std::istringstream bad("a,b\n1,2\n3\n");
  try {
    read_csv(bad, "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("wkt round trip") {
  const Polyline line{{0.0, 0.0}, {1.5, -2.0}, {3.0, 4.25}};
  CHECK(parse_wkt_linestring(format_wkt(line)) == line);
  CHECK(parse_wkt_linestring("LINESTRING (0 0, 3 4)") == Polyline{{0, 0}, {3, 4}});
  CHECK_THROWS_AS(parse_wkt_linestring("POINT (1 2)"), InputError);
}

TEST_CASE("edge, point, mesh, precision and excursion files round trip") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 10; ++k) {
    const auto g = fixtures::random_graph(rng, 3 + k, 2);
    const std::string text = edges_text(g);
    std::istringstream in(text);
    const auto g2 = build_graph(read_edges_csv(in));
    CHECK(edges_text(g2) == text);

    const auto pts = fixtures::random_points(rng, g, 10);
    std::ostringstream ps;
    write_points_csv(ps, g, pts);
    std::istringstream pin(ps.str());
    const auto back = read_points_csv(pin, g);
    REQUIRE(back.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(back[i].edge == pts[i].edge);
      CHECK(back[i].t == pts[i].t);
    }

    const Mesh mesh = build_mesh(g, 0.07 * (k + 1));
    std::ostringstream ms;
    write_mesh_csv(ms, g, mesh);
    std::istringstream min(ms.str());
    const Mesh m2 = read_mesh_csv(min, g);
    CHECK(m2.weights == mesh.weights);
    CHECK(m2.cells_per_edge == mesh.cells_per_edge);
    for (std::size_t i = 0; i < mesh.size(); ++i) CHECK(m2.nodes[i].t == mesh.nodes[i].t);

    const SparseMatrix Q = precision_alpha1(g, 0.5 + k, 1.0).Q;
    std::ostringstream qs;
    write_precision_coo(qs, Q);
    std::istringstream qin(qs.str());
    const SparseMatrix Q2 = read_precision_coo(qin, Q.rows());
    CHECK(Eigen::MatrixXd(Q2) == Eigen::MatrixXd(Q));
  }

  const std::vector<ExcursionRow> rows{{"a", "e1", 0.0, 0.7, 0.5}, {"x,y", "e2", 0.125, 1.0 / 3.0, 0.25}};
  std::ostringstream es;
  write_excursions_csv(es, rows);
  std::istringstream ein(es.str());
  const auto rows2 = read_excursions_csv(ein);
  REQUIRE(rows2.size() == 2);
  CHECK(rows2[1].node_id == "x,y");
  CHECK(rows2[1].marginal_prob == 1.0 / 3.0);
  CHECK(rows2[0].F == 0.5);
}

TEST_CASE("fit report and convergence study JSON round trip") {
  const auto g = fixtures::star3();
  const PointPattern p = simulate_lgcp(g, HyperParams::stationary(1.0, 1.0), constant_mean(2.0), 0.01, 5);
  const LgcpProblem pr = LgcpProblem::assemble(g, build_mesh(g, 0.1), p);
  FitOptions opt;
  opt.scan_points = 0;
  const FitReport report = make_fit_report(pr, fit_hyperparameters(pr, opt));
  const nlohmann::json j = fit_report_json(report);
  for (const char* key : {"kappa", "tau_or_sigma", "beta", "convergence"}) CHECK(j.contains(key));
  const FitReport back = fit_report_from_json(nlohmann::json::parse(j.dump()));
  // NaN intervals travel as null, so compare the serialized forms
  const bool same = fit_report_json(back).dump() == j.dump();
  CHECK(same);
  CHECK(back.posterior.mode == report.posterior.mode);
  CHECK(back.posterior.marginal_variances.isApprox(report.posterior.marginal_variances, 1e-12));

  RateStudyConfig cfg;
  cfg.p_list = {8, 16, 32, 64};
  const ConvergenceStudy s = rate_study(fixtures::interval(10.0), cfg, "iv");
  const nlohmann::json cj = convergence_json(s);
  const bool same_study = convergence_json(convergence_from_json(nlohmann::json::parse(cj.dump()))).dump() == cj.dump();
  CHECK(same_study);
}

TEST_CASE("graph subcommands") {
  Scratch s("graph");
  spit(s("path.csv"), kPath);

  const Run stats = cli({"graph", "stats", "--edges", s("path.csv")});
  REQUIRE(stats.code == 0);
  const auto j = nlohmann::json::parse(stats.out);
  CHECK(j["total_length"] == 3.0);
  CHECK(j["vertices"] == 4);
  CHECK(j["edges"] == 3);
  CHECK(j["degree_histogram"] == nlohmann::json{{"1", 2}, {"2", 2}});

  spit(s("unit.csv"), "edge_id,v_from,v_to,length\ne,A,B,1\n");
  const Run mesh = cli({"graph", "mesh", "--edges", s("unit.csv"), "--mesh-h", "0.5"});
  REQUIRE(mesh.code == 0);
  CHECK(mesh.out == "node_id,edge_id,t,weight\n0,e,0.25,0.5\n1,e,0.75,0.5\n");
  CHECK(cli({"mesh", "--graph", s("unit.csv"), "--mesh-h", "0.5"}).out == mesh.out);

  // subdivide then prune restores the canonical file
  const std::string star = edges_text(fixtures::star3());
  spit(s("star.csv"), star);
  spit(s("pts.csv"), "edge_id,t\ne1,0.25\ne2,0.5\ne2,0.75\ne3,0.1\n");
  REQUIRE(cli({"graph", "subdivide", "--edges", s("star.csv"), "--points", s("pts.csv"), "--out", s("sub.csv")}).code == 0);
  CHECK(slurp(s("sub.csv")) != star);
  REQUIRE(cli({"graph", "prune", "--edges", s("sub.csv"), "--out", s("back.csv")}).code == 0);
  CHECK(slurp(s("back.csv")) == star);

  const Run built = cli({"graph", "build", "--edges", s("path.csv")});
  CHECK(built.out == edges_text(fixtures::path3()));
}

TEST_CASE("exit codes and messages") {
  Scratch s("errors");
  spit(s("bad.csv"), "edge_id,v_from,v_to,length\ne1,a,b,1\ne2,b,c\n");
  const Run bad = cli({"graph", "stats", "--edges", s("bad.csv")});
  CHECK(bad.code == 2);
  CHECK(bad.err.find(":3") != std::string::npos);

  spit(s("neg.csv"), "edge_id,v_from,v_to,length\ne1,a,b,-1\n");
  CHECK(cli({"graph", "stats", "--edges", s("neg.csv")}).code == 2);
  CHECK(cli({"graph", "stats", "--edges", s("missing.csv")}).code == 2);

  spit(s("path.csv"), kPath);
  CHECK(cli({"simulate", "--graph", s("path.csv")}).code == 2);  // no seed
  CHECK(cli({"simulate", "--graph", s("path.csv"), "--seed", "1", "--kappa", "-1"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"--help"}).code == 0);

  // a fit report whose posterior precision is not positive definite
  spit(s("events.csv"), "edge_id,t\ne1,0.5\ne2,0.25\ne2,0.9\ne3,0.3\n");
  REQUIRE(cli({"fit", "--graph", s("path.csv"), "--events", s("events.csv"), "--mesh-h", "0.25", "--out", s("fit.json")}).code == 0);
  auto j = read_json_file(s("fit.json"));
  for (auto& t : j["posterior"]["precision"]["lower_triplets"])
    if (t[0] == t[1]) t[2] = -1.0;
  spit(s("broken.json"), j.dump());
  CHECK(cli({"excursions", "--fit", s("broken.json"), "--seed", "1", "--mc", "1000"}).code == 3);
}

TEST_CASE("config file supplies flags and command-line flags win") {
  Scratch s("config");
  spit(s("path.csv"), kPath);
  spit(s("cfg.json"), R"({"kappa": 3.0, "sigma": 0.5, "mean": 1.0, "seed": 9})");
  const Run a = cli({"simulate", "--graph", s("path.csv"), "--config", s("cfg.json")});
  const Run b = cli({"simulate", "--graph", s("path.csv"), "--kappa", "3", "--sigma", "0.5", "--mean", "1", "--seed", "9"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const Run c = cli({"simulate", "--graph", s("path.csv"), "--config", s("cfg.json"), "--seed", "10"});
  const Run d = cli({"simulate", "--graph", s("path.csv"), "--kappa", "3", "--sigma", "0.5", "--mean", "1", "--seed", "10"});
  CHECK(c.out == d.out);
  CHECK(c.out != a.out);
}

TEST_CASE("seeded subcommands are byte-reproducible") {
  Scratch s("determinism");
  spit(s("path.csv"), kPath);
  auto twice = [&](std::vector<std::string> args, const std::vector<std::string>& files) {
    std::vector<std::string> first;
    REQUIRE(cli(args).code == 0);
    for (const auto& f : files) first.push_back(slurp(s(f)));
    REQUIRE(cli(args).code == 0);
    for (std::size_t i = 0; i < files.size(); ++i) CHECK(slurp(s(files[i])) == first[i]);
  };
  twice({"simulate", "--graph", s("path.csv"), "--mean", "2", "--seed", "1", "--out", s("ev.csv"), "--field-out", s("field.csv")},
        {"ev.csv", "field.csv"});
  twice({"fit", "--graph", s("path.csv"), "--events", s("ev.csv"), "--mesh-h", "0.1", "--seed", "17", "--out", s("fit.json"),
         "--intensity-out", s("int.csv")},
        {"fit.json", "int.csv"});
  twice({"excursions", "--fit", s("fit.json"), "--mc", "5000", "--alpha", "0.01,0.05,0.2", "--seed", "7", "--out", s("exc.csv"),
         "--set-out", s("set.csv")},
        {"exc.csv", "set.csv"});
  twice({"convergence-study", "--p-list", "8,16,32,64", "--seed", "20240501", "--out", s("conv.json")}, {"conv.json"});

  // a different seed changes stochastic output
  REQUIRE(cli({"simulate", "--graph", s("path.csv"), "--mean", "2", "--seed", "2", "--out", s("ev2.csv")}).code == 0);
  CHECK(slurp(s("ev2.csv")) != slurp(s("ev.csv")));
}

TEST_CASE("end to end on the 199-edge grid") {
  Scratch s("e2e");
  const auto g = fixtures::grid(10, 11, 2.0);
  REQUIRE(g.num_edges() == 199);
  spit(s("grid.csv"), edges_text(g));
  const auto start = std::chrono::steady_clock::now();
  REQUIRE(cli({"simulate", "--graph", s("grid.csv"), "--kappa", "2", "--sigma", "1", "--mean", std::to_string(std::log(5.0)),
               "--h-sim", "0.002", "--seed", "1000", "--out", s("ev.csv")})
              .code == 0);
  const Run fit = cli({"fit", "--graph", s("grid.csv"), "--events", s("ev.csv"), "--mesh-h", "0.02", "--seed", "1",
                       "--out", s("fit.json"), "--intensity-out", s("int.csv")});
  REQUIRE(fit.code == 0);
  REQUIRE(cli({"excursions", "--fit", s("fit.json"), "--seed", "7", "--out", s("exc.csv")}).code == 0);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("simulate, fit and excursions took " << seconds << " s");
  CHECK(seconds < 300.0);

  const auto j = read_json_file(s("fit.json"));
  CHECK(j["convergence"]["converged"] == true);
  const CsvTable intensity = read_csv_file(s("int.csv"));
  CHECK(intensity.find_column("wkt").has_value());
  std::ifstream exc(s("exc.csv"));
  const auto rows = read_excursions_csv(exc);
  CHECK(rows.size() == j["posterior"]["n_field"].get<std::size_t>());
  for (const auto& r : rows) CHECK(r.F <= r.marginal_prob);
}
