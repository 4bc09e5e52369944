#include "mglgcp/inference.hpp"

#include <cmath>
#include <limits>

#include "mglgcp/errors.hpp"

namespace mglgcp {

LgcpProblem LgcpProblem::assemble(const MetricGraph& graph, const Mesh& mesh, const PointPattern& pattern,
                                  std::optional<DesignMatrix> design, Vector offset, std::optional<PriorSpec> prior,
                                  const std::vector<PointOnGraph>& extra_sites) {
  if (mesh.cells_per_edge.size() != graph.num_edges()) throw MisalignedVector("mesh does not belong to this graph");
  pattern.validate(graph);
  const auto rows = static_cast<Eigen::Index>(mesh.size() + pattern.size());

  LgcpProblem out;
  out.graph = graph;
  out.mesh = mesh;
  out.pattern = pattern;
  out.design = design ? std::move(*design) : DesignMatrix::intercept_only(rows);
  if (out.design.rows() != rows)
    throw MisalignedVector("design matrix needs " + std::to_string(rows) + " rows (mesh nodes then events)");
  out.offset = offset.size() == 0 ? Vector::Zero(rows) : std::move(offset);
  if (out.offset.size() != rows) throw MisalignedVector("offset needs one entry per mesh node and event");
  out.prior = prior ? *prior : PriorSpec::from_graph(graph);

  std::vector<PointOnGraph> points = mesh.nodes;
  points.insert(points.end(), pattern.events.begin(), pattern.events.end());
  points.insert(points.end(), extra_sites.begin(), extra_sites.end());
  out.sub = subdivide_at(graph, points);

  std::vector<int> row_node(out.sub.point_vertex.begin(), out.sub.point_vertex.begin() + rows);
  out.data = build_surrogate(mesh, pattern, std::move(row_node));
  out.site_node.assign(out.sub.point_vertex.begin() + rows, out.sub.point_vertex.end());

  // piece -> (original edge, offset of its start)
  std::vector<std::pair<EdgeIndex, double>> origin(out.sub.graph.num_edges());
  for (std::size_t e = 0; e < out.sub.splits.size(); ++e) {
    const auto& split = out.sub.splits[e];
    for (std::size_t k = 0; k < split.pieces.size(); ++k)
      origin[static_cast<std::size_t>(split.pieces[k])] = {static_cast<EdgeIndex>(e), k == 0 ? 0.0 : split.cuts[k - 1]};
  }
  const MetricGraph& fine = out.sub.graph;
  out.node_location.resize(fine.num_vertices());
  for (std::size_t v = 0; v < fine.num_vertices(); ++v) {
    const EdgeEnd& end = fine.incidences(static_cast<VertexIndex>(v)).front();
    const auto [edge, start] = origin[static_cast<std::size_t>(end.edge)];
    const double t = end.at_start ? start : start + fine.edge(end.edge).length;
    out.node_location[v] = {edge, std::min(t, graph.edge(edge).length)};
  }
  // Original vertices sit exactly at an edge end.
  for (std::size_t v = 0; v < graph.num_vertices(); ++v) {
    const EdgeEnd& end = graph.incidences(static_cast<VertexIndex>(v)).front();
    out.node_location[v] = {end.edge, end.at_start ? 0.0 : graph.edge(end.edge).length};
  }
  return out;
}

GaussianPosterior posterior_at(const LgcpProblem& problem, const HyperParams& hp, const LaplaceOptions& options) {
  hp.validate();
  const SparsePrecision prec = field_precision(problem.sub.graph, hp);
  GaussianPosterior post = laplace_fit(prec, problem.data, problem.design, problem.prior, options, problem.offset);
  post.hyper = hp;
  return post;
}

double marginal_loglik(const LgcpProblem& problem, const HyperParams& hp, bool with_hyperprior,
                       const LaplaceOptions& options) {
  const GaussianPosterior post = posterior_at(problem, hp, options);
  return post.log_evidence + (with_hyperprior ? problem.prior.log_density(hp) : 0.0);
}

double marginal_loglik(const HyperParams& hp, const MetricGraph& graph, const Mesh& mesh, const PointPattern& pattern,
                       const DesignMatrix& design, const PriorSpec& prior) {
  const LgcpProblem problem = LgcpProblem::assemble(graph, mesh, pattern, design, {}, prior);
  return marginal_loglik(problem, hp);
}

namespace {

HyperParams make_hyper(Variant variant, const Eigen::Vector2d& theta) {
  const double kappa = std::exp(theta[0]);
  const double scale = std::exp(theta[1]);
  return variant == Variant::standard ? HyperParams::standard(kappa, scale) : HyperParams::stationary(kappa, scale);
}

// Negative log evidence plus hyperprior, with the last mode reused as the
// Newton starting point.
class Objective {
 public:
  Objective(const LgcpProblem& problem, Variant variant) : problem_(problem), variant_(variant) {}

  double operator()(const Eigen::Vector2d& theta) {
    ++evaluations;
    const HyperParams hp = make_hyper(variant_, theta);
    // A warm start far from the new mode can fail where the default start does not.
    for (int attempt = 0; attempt < (warm_.size() > 0 ? 2 : 1); ++attempt) {
      LaplaceOptions options;
      if (attempt == 0) options.init = warm_;
      try {
        const GaussianPosterior post = posterior_at(problem_, hp, options);
        const double value = -(post.log_evidence + problem_.prior.log_density(hp));
        if (!std::isfinite(value)) continue;
        warm_ = post.mode;
        return value;
      } catch (const NumericalError&) {
      }
    }
    return std::numeric_limits<double>::infinity();
  }

  Eigen::Vector2d gradient(const Eigen::Vector2d& theta, double h) {
    Eigen::Vector2d g;
    for (int i = 0; i < 2; ++i) {
      Eigen::Vector2d a = theta, b = theta;
      a[i] += h;
      b[i] -= h;
      g[i] = ((*this)(a) - (*this)(b)) / (2.0 * h);
    }
    return g;
  }

  Eigen::Matrix2d hessian(const Eigen::Vector2d& theta, double h) {
    Eigen::Matrix2d H;
    const double f0 = (*this)(theta);
    for (int i = 0; i < 2; ++i) {
      Eigen::Vector2d a = theta, b = theta;
      a[i] += h;
      b[i] -= h;
      H(i, i) = ((*this)(a) - 2.0 * f0 + (*this)(b)) / (h * h);
    }
    Eigen::Vector2d pp = theta, pm = theta, mp = theta, mm = theta;
    pp += Eigen::Vector2d(h, h);
    pm += Eigen::Vector2d(h, -h);
    mp += Eigen::Vector2d(-h, h);
    mm += Eigen::Vector2d(-h, -h);
    H(0, 1) = H(1, 0) = ((*this)(pp) - (*this)(pm) - (*this)(mp) + (*this)(mm)) / (4.0 * h * h);
    return H;
  }

  int evaluations = 0;

 private:
  const LgcpProblem& problem_;
  Variant variant_;
  Vector warm_;
};

ParameterSummary log_normal_summary(std::string name, double mu, double sd) {
  ParameterSummary s;
  s.name = std::move(name);
  s.estimate = std::exp(mu);
  if (std::isfinite(sd)) {
    s.mean = std::exp(mu + 0.5 * sd * sd);
    s.sd = std::sqrt(std::expm1(sd * sd)) * s.mean;
    s.lower = std::exp(mu - 1.959963984540054 * sd);
    s.upper = std::exp(mu + 1.959963984540054 * sd);
  } else {
    s.mean = s.sd = s.lower = s.upper = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
  std::string out;
  for (const TraceEntry& t : trace)
    out += "iter " + std::to_string(t.iteration) + ": log kappa " + std::to_string(t.log_kappa) + ", log scale " +
           std::to_string(t.log_scale) + ", objective " + std::to_string(t.objective) + ", |grad| " +
           std::to_string(t.gradient_norm) + "\n";
  return out;
}

// Box around the prior centers plus the half-plane a . theta <= b of the
// within-cell variance bound.
struct Feasible {
  Eigen::Vector2d center;
  double offset = 8.0;
  Eigen::Vector2d a;
  double b = 0.0;

  bool active(const Eigen::Vector2d& theta) const { return a.dot(theta) >= b - 1e-9; }
  Eigen::Vector2d tangent(const Eigen::Vector2d& v) const { return v - v.dot(a) / a.squaredNorm() * a; }
  Eigen::Vector2d operator()(Eigen::Vector2d theta) const {
    for (int i = 0; i < 2; ++i) theta[i] = std::clamp(theta[i], center[i] - offset, center[i] + offset);
    const double excess = a.dot(theta) - b;
    if (excess > 0.0) theta -= excess / a.squaredNorm() * a;
    return theta;
  }
};

struct BfgsRun {
  Eigen::Vector2d theta;
  double f = 0.0;  // minimized: minus the objective
  bool converged = false;
  std::string status;
};

// BFGS on (log kappa, log scale) minimizing phi, with central-difference
// gradients. Appends to `trace`; throws OptimizerFailure.
template <class Phi>
BfgsRun bfgs(Phi& phi, Eigen::Vector2d theta, const FitOptions& options, const Feasible& project,
             std::vector<TraceEntry>& trace) {
  BfgsRun run;
  double f = phi(theta);
  if (!std::isfinite(f)) throw OptimizerFailure("objective is not finite at the starting point", format_trace(trace));
  Eigen::Vector2d g = phi.gradient(theta, options.fd_step);
  Eigen::Matrix2d Hinv = Eigen::Matrix2d::Identity();
  run.status = "maximum iterations reached";

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // On the variance bound with descent pointing out of it, only the
    // component along the bound counts.
    const bool on_bound = project.active(theta) && g.dot(project.a) < 0.0;
    const Eigen::Vector2d g_free = on_bound ? project.tangent(g) : g;
    const double gnorm = g_free.lpNorm<Eigen::Infinity>();
    trace.push_back({iter, theta[0], theta[1], -f, gnorm});
    if (!g.allFinite()) throw OptimizerFailure("non-finite gradient", format_trace(trace));
    if (gnorm < options.gradient_tolerance) {
      run.converged = true;
      run.status = on_bound ? "gradient along the cell-variance bound below tolerance" : "gradient below tolerance";
      break;
    }
    Eigen::Vector2d d = -Hinv * g;
    if (on_bound && d.dot(project.a) > 0.0) d = project.tangent(d);
    if (g_free.dot(d) >= 0.0) {
      Hinv.setIdentity();
      d = -g_free;
    }
    const double longest = d.lpNorm<Eigen::Infinity>();
    if (longest > 1.0) d /= longest;

    double step = 1.0;
    bool accepted = false;
    Eigen::Vector2d theta_new, g_new;
    double f_new = f;
    for (int h = 0; h < 30; ++h, step *= 0.5) {
      theta_new = project(theta + step * d);
      f_new = phi(theta_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * g.dot(theta_new - theta)) {
        g_new = phi.gradient(theta_new, options.fd_step);
        if (g_new.allFinite()) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // Central differences carry noise of order fd_step^2; a stalled search
      // with a small gradient is a converged search.
      if (gnorm < 100.0 * options.gradient_tolerance) {
        run.converged = true;
        run.status = "line search stalled at a small gradient";
        break;
      }
      throw OptimizerFailure("line search failed", format_trace(trace));
    }
    const Eigen::Vector2d s = theta_new - theta;
    const Eigen::Vector2d y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const bool stalled = s.lpNorm<Eigen::Infinity>() < 1e-10;
    theta = theta_new;
    f = f_new;
    g = g_new;
    if (stalled) {
      trace.push_back({iter + 1, theta[0], theta[1], -f, g.lpNorm<Eigen::Infinity>()});
      run.converged = g.lpNorm<Eigen::Infinity>() < 100.0 * options.gradient_tolerance;
      run.status = "step below 1e-10";
      break;
    }
  }
  run.theta = theta;
  run.f = f;
  return run;
}

}  // namespace

double moment_sigma(const LgcpProblem& problem) {
  const MetricGraph& g = problem.graph;
  const std::vector<int> counts = problem.pattern.counts_per_edge(g);
  const double rate = static_cast<double>(problem.pattern.size()) / g.total_length();
  double excess = 0.0, scale = 0.0;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    const double expected = rate * g.edge(static_cast<EdgeIndex>(e)).length;
    excess += (counts[e] - expected) * (counts[e] - expected) - counts[e];
    scale += expected * expected;
  }
  // Var(n_e) = mu_e + mu_e^2 (exp(s^2) - 1) for a log-Gaussian edge rate.
  const double ratio = scale > 0.0 ? excess / scale : 0.0;
  const double sigma = std::sqrt(std::log1p(std::max(ratio, 0.01)));
  return std::clamp(sigma, 0.1, 10.0);
}

FitResult fit_hyperparameters(const LgcpProblem& problem, const FitOptions& options) {
  const PriorSpec& prior = problem.prior;
  FitResult result;
  if (options.init) {
    result.init = *options.init;
    result.init.variant = options.variant;
    if (options.variant == Variant::standard && !result.init.tau)
      result.init.tau = std::exp(prior.log_scale_center(Variant::standard));
    if (options.variant == Variant::variance_stationary && !result.init.sigma)
      result.init.sigma = std::exp(prior.log_scale_center(Variant::variance_stationary));
    if (options.variant == Variant::standard) result.init.sigma.reset();
    else result.init.tau.reset();
  } else {
    const double sigma = moment_sigma(problem);
    result.init = options.variant == Variant::standard
                      ? HyperParams::standard(prior.kappa0, 1.0 / (sigma * std::sqrt(2.0 * prior.kappa0)))
                      : HyperParams::stationary(prior.kappa0, sigma);
  }
  result.init.validate();

  const Eigen::Vector2d center(prior.log_kappa_center(), prior.log_scale_center(options.variant));
  double widest = 0.0;
  for (double w : problem.mesh.weights) widest = std::max(widest, w);
  if (!(options.max_cell_variance > 0.0)) throw NonpositiveParameter("max_cell_variance must be positive");
  Feasible project;
  project.center = center;
  project.offset = options.max_log_offset;
  if (options.variant == Variant::standard) {
    // h / (2 tau^2) <= v
    project.a = Eigen::Vector2d(0.0, -2.0);
    project.b = std::log(2.0 * options.max_cell_variance / widest);
  } else {
    // kappa sigma^2 h <= v
    project.a = Eigen::Vector2d(1.0, 2.0);
    project.b = std::log(options.max_cell_variance / widest);
  }

  Objective phi(problem, options.variant);
  Eigen::Vector2d theta = project({std::log(result.init.kappa), std::log(result.init.scale())});
  BfgsRun run = bfgs(phi, theta, options, project, result.trace);

  if (options.scan_points > 1) {
    // The evidence can have a second mode away from the start. Scan a grid of
    // log kappa times a few field variances, and restart from the best grid
    // point that is not already next to the first optimum.
    const double log_sigma0 = options.variant == Variant::standard
                                  ? -std::log(result.init.scale() * std::sqrt(2.0 * result.init.kappa))
                                  : std::log(result.init.scale());
    const double lo = center[0] - 2.0;
    // Above kappa * cell width ~ 1/2 the midpoint evidence grows without bound
    // in sigma^2 kappa, so the scan stays below it.
    const double hi = std::max(lo + 1.0, std::log(0.5 / widest));
    Eigen::Vector2d best;
    double best_f = std::numeric_limits<double>::infinity();
    for (int k = 0; k < options.scan_points; ++k) {
      const double lk = lo + (hi - lo) * k / (options.scan_points - 1);
      if (std::abs(lk - run.theta[0]) < 0.5) continue;
      for (double ds : {-0.7, 0.0, 0.7}) {
        const double lsig = log_sigma0 + ds;
        const double ls = options.variant == Variant::standard ? -lsig - 0.5 * std::log(2.0 * std::exp(lk)) : lsig;
        const Eigen::Vector2d cand = project({lk, ls});
        const double fc = phi(cand);
        if (fc < best_f) {
          best_f = fc;
          best = cand;
        }
      }
    }
    if (std::isfinite(best_f)) {
      std::vector<TraceEntry> second_trace;
      try {
        BfgsRun second = bfgs(phi, best, options, project, second_trace);
        const int offset = result.trace.empty() ? 0 : result.trace.back().iteration + 1;
        for (TraceEntry t : second_trace) {
          t.iteration += offset;
          result.trace.push_back(t);
        }
        if (second.f < run.f) {
          run = second;
          run.status += " (restart from the log-kappa scan)";
        }
      } catch (const OptimizerFailure&) {
        // keep the first run
      }
    }
  }
  if (!run.converged && run.status == "maximum iterations reached")
    throw OptimizerFailure("no convergence after " + std::to_string(options.max_iterations) + " iterations",
                           format_trace(result.trace));
  theta = run.theta;
  const double f = run.f;
  result.converged = run.converged;
  result.status = run.status;
  if (project.active(theta)) result.status += "; stopped at the cell-variance bound, refine the mesh";

  result.hyper = make_hyper(options.variant, theta);
  result.objective = -f;

  Eigen::Vector2d sd = Eigen::Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
  const Eigen::Matrix2d H = phi.hessian(theta, 1e-3);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(H);
  if (H.allFinite() && eig.eigenvalues().minCoeff() > 0.0) {
    sd = H.inverse().diagonal().cwiseSqrt();
  } else {
    result.status += "; curvature not positive definite, no interval";
  }
  result.kappa = log_normal_summary("kappa", theta[0], sd[0]);
  result.scale = log_normal_summary(options.variant == Variant::standard ? "tau" : "sigma", theta[1], sd[1]);

  result.posterior = posterior_at(problem, result.hyper);
  const Vector bm = result.posterior.beta_mean();
  const Vector bs = result.posterior.beta_sd();
  for (Eigen::Index j = 0; j < bm.size(); ++j) {
    ParameterSummary b;
    b.name = problem.design.names[static_cast<std::size_t>(j)];
    b.estimate = b.mean = bm[j];
    b.sd = bs[j];
    b.lower = bm[j] - 1.959963984540054 * bs[j];
    b.upper = bm[j] + 1.959963984540054 * bs[j];
    result.beta.push_back(b);
  }
  return result;
}

}  // namespace mglgcp
