#pragma once

// Text helpers shared by the CSV and JSON readers/writers.

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sgrc/hiergrid.hpp"

namespace sgrc {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a full field; throws FormatError on trailing garbage.
double parse_double(std::string_view field);
long long parse_integer(std::string_view field);

/// Splits one CSV line on commas (no quoting; numeric files only). Strips a
/// trailing carriage return.
std::vector<std::string_view> split_csv(std::string_view line);

json grid_to_json(const SparseGrid& grid);
/// Inverse of grid_to_json; the result is validated like any other grid.
SparseGrid grid_from_json(const json& j);

json points_to_json(const std::vector<GridPoint>& points);
std::vector<GridPoint> points_from_json(const json& j);

}  // namespace sgrc
