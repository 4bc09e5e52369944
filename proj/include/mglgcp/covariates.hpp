#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mglgcp/laplace.hpp"
#include "mglgcp/likelihood.hpp"
#include "mglgcp/mesh.hpp"

namespace mglgcp {

enum class ColumnKind { numeric, categorical, distance };

struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::optional<double>> values;
  std::vector<int> classes;    // categorical: level set, empty = observed levels
  std::optional<double> phi;   // distance: scale of exp(-d / phi), default mean distance
};

struct RawTable {
  std::vector<RawColumn> columns;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }
};

// (speed / road_class) * log(length)
double traffic_intensity(double speed, double road_class, double length);
RawColumn traffic_intensity_column(const RawColumn& speed, const RawColumn& road_class, const RawColumn& length,
                                   std::string name = "traffic_intensity");

// (x - min) / (max - min). Throws ConstantColumn, MissingValue.
Vector min_max_scale(const std::vector<std::optional<double>>& values, const std::string& name);

// One column per class, a single 1 per row. Throws MissingValue, InputError
// for a value outside the class set.
Matrix one_hot(const std::vector<std::optional<double>>& values, const std::vector<int>& classes,
               const std::string& name);

struct CovariateOptions {
  bool intercept = true;
  // With an intercept the first class of each categorical column is the
  // reference level and gets no column.
  bool drop_reference = true;
};

DesignMatrix preprocess_covariates(const RawTable& table, const CovariateOptions& options = {});

// Mesh-node design (p rows) extended with one row per event, copied from the
// cell containing the event.
DesignMatrix extend_to_events(const DesignMatrix& mesh_design, const Mesh& mesh, const PointPattern& pattern);

}  // namespace mglgcp
