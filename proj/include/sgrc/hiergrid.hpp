#pragma once

// Hierarchical level/index bookkeeping for piecewise-linear sparse grids on
// the open unit cube. Grid identity is always the integer (levels, indices)
// pair; coordinates are derived on demand.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sgrc {

inline constexpr int kDefaultMaxLevel = 5;

/// One-dimensional hierarchical node: level l >= 1, odd index 1 <= i <= 2^l - 1.
struct LevelIndex1D {
  int level = 1;
  int index = 1;

  /// Throws InvalidArgument unless (level, index) is a member of I_level.
  LevelIndex1D(int l, int i);

  double coordinate() const;  ///< i * 2^-l, strictly inside (0, 1)
  double spacing() const;     ///< h_l = 2^-l

  friend bool operator==(const LevelIndex1D&, const LevelIndex1D&) = default;
};

/// D-dimensional grid point, i.e. the multi-index pair (levels, indices).
struct GridPoint {
  std::vector<int> levels;
  std::vector<int> indices;

  GridPoint() = default;
  GridPoint(std::vector<int> l, std::vector<int> i);

  std::size_t dim() const { return levels.size(); }
  int level_sum() const;
  double coordinate(std::size_t d) const;
  std::vector<double> coordinates() const;
  bool valid() const;

  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Canonical order: (|l|_1, levels, indices) lexicographically.
bool canonical_less(const GridPoint& a, const GridPoint& b);

struct GridPointHash {
  std::size_t operator()(const GridPoint& p) const noexcept;
};

/// Ordered odd indices {1, 3, ..., 2^l - 1}.
std::vector<int> index_set(int level);

/// Immutable ordered point set. Positions are stable and double as design
/// matrix column indices.
class SparseGrid {
 public:
  /// Validates dimension, per-point membership, uniqueness, level cap and
  /// hierarchical closure. Throws InvalidArgument on violation.
  SparseGrid(std::size_t dim, std::vector<GridPoint> points, int base_level,
             int max_level = kDefaultMaxLevel);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<GridPoint>& points() const { return points_; }
  const GridPoint& operator[](std::size_t k) const { return points_[k]; }
  int base_level() const { return base_level_; }
  int max_level() const { return max_level_; }

  bool contains(const GridPoint& p) const;
  std::optional<std::size_t> position(const GridPoint& p) const;

  /// True when every parent of every point is present.
  bool hierarchically_closed() const;

 private:
  std::size_t dim_;
  std::vector<GridPoint> points_;
  int base_level_;
  int max_level_;
  std::unordered_map<GridPoint, std::size_t, GridPointHash> lookup_;
};

/// Number of points of the classical sparse grid, closed form
/// sum_{i=0}^{level-1} 2^i * C(dim-1+i, dim-1).
std::uint64_t classical_sparse_grid_size(int dim, int level);

/// All points with |l|_1 <= level + dim - 1, canonical order. When max_level
/// is not given it defaults to max(kDefaultMaxLevel, level).
SparseGrid build_classical_sparse_grid(int dim, int level,
                                       std::optional<int> max_level = {});

/// Full tensor grid of level `level` in each dimension; (2^level - 1)^dim
/// points. Throws CapacityError above `size_cap`.
SparseGrid build_full_grid(int dim, int level, std::uint64_t size_cap = 1'000'000,
                           std::optional<int> max_level = {});

/// Children of p in dimension d, or nothing when level + 1 exceeds max_level.
std::vector<GridPoint> hierarchical_children(const GridPoint& p, std::size_t d,
                                             int max_level);

/// Parent of p in dimension d, nothing for level 1.
std::optional<GridPoint> hierarchical_parent(const GridPoint& p, std::size_t d);

/// Points with at least one child (any dimension) missing within max_level.
std::vector<GridPoint> refinable_points(const SparseGrid& grid);

struct RefineReport {
  std::vector<GridPoint> children;   ///< appended first, in target/dimension order
  std::vector<GridPoint> ancestors;  ///< closure points, appended after children
  std::vector<std::string> warnings;

  std::size_t added() const { return children.size() + ancestors.size(); }
};

struct RefineResult {
  SparseGrid grid;
  RefineReport report;
};

/// Adds every missing child of each target in every dimension, then closes the
/// grid under hierarchical parents. The input order is a prefix of the output.
/// Targets without missing children are skipped with a warning; targets not in
/// the grid raise InvalidArgument.
RefineResult refine(const SparseGrid& grid, const std::vector<GridPoint>& targets);

}  // namespace sgrc
