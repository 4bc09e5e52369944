#include "mglgcp/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mglgcp/errors.hpp"

namespace mglgcp {

namespace {

double require(const std::optional<double>& v, const std::string& name, std::size_t row) {
  if (!v || !std::isfinite(*v))
    throw MissingValue("column '" + name + "' has a missing value in row " + std::to_string(row));
  return *v;
}

}  // namespace

double traffic_intensity(double speed, double road_class, double length) {
  if (!(road_class != 0.0)) throw InputError("road class must be nonzero");
  if (!(length > 0.0)) throw NonpositiveLength("road length must be positive");
  return speed / road_class * std::log(length);
}

RawColumn traffic_intensity_column(const RawColumn& speed, const RawColumn& road_class, const RawColumn& length,
                                   std::string name) {
  if (speed.values.size() != road_class.values.size() || speed.values.size() != length.values.size())
    throw MisalignedVector("traffic intensity inputs differ in length");
  RawColumn out;
  out.name = std::move(name);
  for (std::size_t i = 0; i < speed.values.size(); ++i)
    out.values.push_back(traffic_intensity(require(speed.values[i], speed.name, i),
                                           require(road_class.values[i], road_class.name, i),
                                           require(length.values[i], length.name, i)));
  return out;
}

Vector min_max_scale(const std::vector<std::optional<double>>& values, const std::string& name) {
  Vector x(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) x[static_cast<Eigen::Index>(i)] = require(values[i], name, i);
  if (x.size() == 0) return x;
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (!(hi > lo)) throw ConstantColumn("column '" + name + "' is constant");
  return (x.array() - lo) / (hi - lo);
}

Matrix one_hot(const std::vector<std::optional<double>>& values, const std::vector<int>& classes,
               const std::string& name) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(classes.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = require(values[i], name, i);
    const auto it = std::find(classes.begin(), classes.end(), static_cast<int>(std::lround(v)));
    if (it == classes.end() || std::abs(v - std::round(v)) > 0.0)
      throw InputError("column '" + name + "' row " + std::to_string(i) + ": value is not one of the classes");
    out(static_cast<Eigen::Index>(i), it - classes.begin()) = 1.0;
  }
  return out;
}

DesignMatrix preprocess_covariates(const RawTable& table, const CovariateOptions& options) {
  const auto rows = static_cast<Eigen::Index>(table.rows());
  std::vector<Vector> cols;
  std::vector<std::string> names;
  if (options.intercept) {
    cols.push_back(Vector::Ones(rows));
    names.push_back("intercept");
  }
  for (const RawColumn& c : table.columns) {
    if (static_cast<Eigen::Index>(c.values.size()) != rows)
      throw MisalignedVector("column '" + c.name + "' has a different number of rows");
    switch (c.kind) {
      case ColumnKind::numeric:
        cols.push_back(min_max_scale(c.values, c.name));
        names.push_back(c.name);
        break;
      case ColumnKind::distance: {
        std::vector<std::optional<double>> transformed(c.values.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < c.values.size(); ++i) {
          const double d = require(c.values[i], c.name, i);
          if (d < 0.0) throw InputError("column '" + c.name + "' has a negative distance");
          mean += d;
        }
        mean /= std::max<double>(1.0, static_cast<double>(c.values.size()));
        const double phi = c.phi.value_or(mean);
        if (!(phi > 0.0)) throw NonpositiveParameter("distance scale for '" + c.name + "' must be positive");
        for (std::size_t i = 0; i < c.values.size(); ++i) transformed[i] = std::exp(-*c.values[i] / phi);
        cols.push_back(min_max_scale(transformed, c.name));
        names.push_back(c.name);
        break;
      }
      case ColumnKind::categorical: {
        std::vector<int> classes = c.classes;
        if (classes.empty()) {
          std::set<int> seen;
          for (std::size_t i = 0; i < c.values.size(); ++i)
            seen.insert(static_cast<int>(std::lround(require(c.values[i], c.name, i))));
          classes.assign(seen.begin(), seen.end());
        }
        const Matrix hot = one_hot(c.values, classes, c.name);
        const Eigen::Index first = options.intercept && options.drop_reference ? 1 : 0;
        for (Eigen::Index j = first; j < hot.cols(); ++j) {
          cols.push_back(hot.col(j));
          names.push_back(c.name + "=" + std::to_string(classes[static_cast<std::size_t>(j)]));
        }
        break;
      }
    }
  }
  DesignMatrix out;
  out.X.resize(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.X.col(static_cast<Eigen::Index>(j)) = cols[j];
  out.names = std::move(names);
  return out;
}

DesignMatrix extend_to_events(const DesignMatrix& mesh_design, const Mesh& mesh, const PointPattern& pattern) {
  const auto p = static_cast<Eigen::Index>(mesh.size());
  if (mesh_design.rows() != p) throw MisalignedVector("mesh design needs one row per mesh node");
  DesignMatrix out;
  out.names = mesh_design.names;
  out.X.resize(p + static_cast<Eigen::Index>(pattern.size()), mesh_design.cols());
  out.X.topRows(p) = mesh_design.X;
  for (std::size_t j = 0; j < pattern.size(); ++j)
    out.X.row(p + static_cast<Eigen::Index>(j)) = mesh_design.X.row(static_cast<Eigen::Index>(mesh.cell_of(pattern.events[j])));
  return out;
}

}  // namespace mglgcp
