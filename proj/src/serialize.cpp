#include "sgrc/serialize.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "sgrc/error.hpp"

namespace sgrc {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view field) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw FormatError("not a number: '" + std::string(field) + "'");
  }
  return v;
}

long long parse_integer(std::string_view field) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  long long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw FormatError("not an integer: '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

json points_to_json(const std::vector<GridPoint>& points) {
  json arr = json::array();
  for (const auto& p : points) arr.push_back({{"levels", p.levels}, {"indices", p.indices}});
  return arr;
}

std::vector<GridPoint> points_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("grid points must be a JSON array");
  std::vector<GridPoint> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("levels") || !item.contains("indices")) {
      throw FormatError("grid point entries need 'levels' and 'indices'");
    }
    out.emplace_back(item.at("levels").get<std::vector<int>>(),
                     item.at("indices").get<std::vector<int>>());
  }
  return out;
}

json grid_to_json(const SparseGrid& grid) {
  return {{"dim", grid.dim()},
          {"base_level", grid.base_level()},
          {"max_level", grid.max_level()},
          {"points", points_to_json(grid.points())}};
}

SparseGrid grid_from_json(const json& j) {
  try {
    return SparseGrid(j.at("dim").get<std::size_t>(), points_from_json(j.at("points")),
                      j.at("base_level").get<int>(), j.at("max_level").get<int>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed grid JSON: ") + e.what());
  }
}

}  // namespace sgrc
