#pragma once

#include <filesystem>
#include <string>

#include "nonlocal_flow/integrator.hpp"

namespace nonlocal_flow {

/// Decimal with 17 significant digits; parses back to the same double.
std::string format_double(double x);

/// Writes `t,lambda,mass,E_<name>...` with one row per recorded time, and the
/// final snapshot to `<path>.final.csv` as `atom_index,value,weight`.
/// LF line endings. Throws IoError.
void emit_csv(const TrajectoryRecord& record, const std::filesystem::path& path);

}  // namespace nonlocal_flow
