#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "mscap/envelope.hpp"

namespace mscap {

/// Round-trip decimal text of a double.
std::string format_double(double v);

/// One row per node: coordinates, class label, value. The first line is a
/// '#' header with n, h and the bounding box.
void write_field_csv(const std::string& path, const ScalarField& f, const std::string& column = "value");

/// Field dump plus an obstacle_active column.
void write_envelope_csv(const std::string& path, const EnvelopeSolution& sol);

/// Density dump; the header also records the order p.
void write_measure_csv(const std::string& path, const MeasureField& mu);

/// Iterations, residuals and the condenser of a solve.
nlohmann::json envelope_summary(const EnvelopeSolution& sol);

void write_json(const std::string& path, const nlohmann::json& j);

/// Creates the directory (and parents) when missing.
void ensure_directory(const std::string& dir);

}  // namespace mscap
