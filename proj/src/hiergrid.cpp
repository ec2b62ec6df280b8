#include "sgrc/hiergrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "sgrc/error.hpp"

namespace sgrc {

namespace {

bool valid_pair(int l, int i) {
  if (l < 1 || l > 30) return false;
  return i >= 1 && i <= (1 << l) - 1 && (i % 2) == 1;
}

// Enumerate level multi-indices l >= 1 with |l|_1 <= budget (and l_d <= cap).
void enumerate_levels(std::size_t dim, int budget, int cap, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
  if (cur.size() == dim) {
    out.push_back(cur);
    return;
  }
  const int used = std::accumulate(cur.begin(), cur.end(), 0);
  const int remaining_dims = static_cast<int>(dim - cur.size()) - 1;
  for (int l = 1; l <= cap && used + l + remaining_dims <= budget; ++l) {
    cur.push_back(l);
    enumerate_levels(dim, budget, cap, cur, out);
    cur.pop_back();
  }
}

// Append points in the tensor product of index sets for one level multi-index.
void append_subspace(const std::vector<int>& levels, std::vector<GridPoint>& out) {
  const std::size_t dim = levels.size();
  std::vector<int> idx(dim, 1);
  while (true) {
    out.emplace_back(levels, idx);
    std::size_t d = dim;
    while (d > 0) {
      --d;
      idx[d] += 2;
      if (idx[d] <= (1 << levels[d]) - 1) break;
      idx[d] = 1;
      if (d == 0) return;
    }
    if (dim == 0) return;
  }
}

std::vector<GridPoint> grid_from_levels(std::size_t dim,
                                        const std::vector<std::vector<int>>& level_sets) {
  std::vector<GridPoint> pts;
  for (const auto& l : level_sets) append_subspace(l, pts);
  std::sort(pts.begin(), pts.end(), canonical_less);
  (void)dim;
  return pts;
}

}  // namespace

LevelIndex1D::LevelIndex1D(int l, int i) : level(l), index(i) {
  if (!valid_pair(l, i)) {
    throw InvalidArgument("invalid hierarchical pair (l=" + std::to_string(l) +
                          ", i=" + std::to_string(i) + ")");
  }
}

double LevelIndex1D::coordinate() const { return std::ldexp(static_cast<double>(index), -level); }
double LevelIndex1D::spacing() const { return std::ldexp(1.0, -level); }

GridPoint::GridPoint(std::vector<int> l, std::vector<int> i)
    : levels(std::move(l)), indices(std::move(i)) {
  if (levels.size() != indices.size()) {
    throw InvalidArgument("grid point levels/indices size mismatch");
  }
}

int GridPoint::level_sum() const { return std::accumulate(levels.begin(), levels.end(), 0); }

double GridPoint::coordinate(std::size_t d) const {
  return std::ldexp(static_cast<double>(indices[d]), -levels[d]);
}

std::vector<double> GridPoint::coordinates() const {
  std::vector<double> c(dim());
  for (std::size_t d = 0; d < dim(); ++d) c[d] = coordinate(d);
  return c;
}

bool GridPoint::valid() const {
  if (levels.empty() || levels.size() != indices.size()) return false;
  for (std::size_t d = 0; d < levels.size(); ++d) {
    if (!valid_pair(levels[d], indices[d])) return false;
  }
  return true;
}

bool canonical_less(const GridPoint& a, const GridPoint& b) {
  const int sa = a.level_sum();
  const int sb = b.level_sum();
  if (sa != sb) return sa < sb;
  if (a.levels != b.levels) return a.levels < b.levels;
  return a.indices < b.indices;
}

std::size_t GridPointHash::operator()(const GridPoint& p) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  };
  for (std::size_t d = 0; d < p.levels.size(); ++d) {
    mix(static_cast<std::uint64_t>(p.levels[d]));
    mix(static_cast<std::uint64_t>(p.indices[d]));
  }
  return static_cast<std::size_t>(h);
}

std::vector<int> index_set(int level) {
  if (level < 1 || level > 30) {
    throw InvalidArgument("invalid level " + std::to_string(level));
  }
  std::vector<int> out;
  out.reserve(std::size_t{1} << (level - 1));
  for (int i = 1; i <= (1 << level) - 1; i += 2) out.push_back(i);
  return out;
}

SparseGrid::SparseGrid(std::size_t dim, std::vector<GridPoint> points, int base_level,
                       int max_level)
    : dim_(dim), points_(std::move(points)), base_level_(base_level), max_level_(max_level) {
  if (dim_ == 0) throw InvalidArgument("grid dimension must be positive");
  if (max_level_ < 1) throw InvalidArgument("max_level must be positive");
  lookup_.reserve(points_.size() * 2);
  for (std::size_t k = 0; k < points_.size(); ++k) {
    const GridPoint& p = points_[k];
    if (p.dim() != dim_ || !p.valid()) {
      throw InvalidArgument("grid point " + std::to_string(k) + " is not a valid " +
                            std::to_string(dim_) + "-dimensional point");
    }
    for (int l : p.levels) {
      if (l > max_level_) {
        throw InvalidArgument("grid point " + std::to_string(k) + " exceeds max_level");
      }
    }
    if (!lookup_.emplace(p, k).second) {
      throw InvalidArgument("duplicate grid point at position " + std::to_string(k));
    }
  }
  if (!hierarchically_closed()) {
    throw InvalidArgument("grid is not closed under hierarchical parents");
  }
}

bool SparseGrid::contains(const GridPoint& p) const { return lookup_.count(p) != 0; }

std::optional<std::size_t> SparseGrid::position(const GridPoint& p) const {
  auto it = lookup_.find(p);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

bool SparseGrid::hierarchically_closed() const {
  for (const auto& p : points_) {
    for (std::size_t d = 0; d < dim_; ++d) {
      auto parent = hierarchical_parent(p, d);
      if (parent && !contains(*parent)) return false;
    }
  }
  return true;
}

std::uint64_t classical_sparse_grid_size(int dim, int level) {
  if (dim < 1 || level < 1) throw InvalidArgument("dim and level must be positive");
  std::uint64_t total = 0;
  for (int i = 0; i < level; ++i) {
    // C(dim-1+i, dim-1) computed incrementally; exact for the ranges used here.
    std::uint64_t binom = 1;
    for (int k = 1; k <= i; ++k) binom = binom * static_cast<std::uint64_t>(dim - 1 + k) / k;
    total += (std::uint64_t{1} << i) * binom;
  }
  return total;
}

SparseGrid build_classical_sparse_grid(int dim, int level, std::optional<int> max_level) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  if (level < 1) throw InvalidArgument("invalid level " + std::to_string(level));
  const int cap = max_level.value_or(std::max(kDefaultMaxLevel, level));
  if (cap < level) throw InvalidArgument("max_level below sparse grid level");
  std::vector<std::vector<int>> level_sets;
  std::vector<int> cur;
  enumerate_levels(static_cast<std::size_t>(dim), level + dim - 1, level, cur, level_sets);
  return SparseGrid(static_cast<std::size_t>(dim),
                    grid_from_levels(static_cast<std::size_t>(dim), level_sets), level, cap);
}

SparseGrid build_full_grid(int dim, int level, std::uint64_t size_cap,
                           std::optional<int> max_level) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  if (level < 1) throw InvalidArgument("invalid level " + std::to_string(level));
  const double count = std::pow(std::ldexp(1.0, level) - 1.0, dim);
  if (count > static_cast<double>(size_cap)) {
    throw CapacityError("full grid with " + std::to_string(count) +
                        " points exceeds the size cap of " + std::to_string(size_cap));
  }
  const int cap = max_level.value_or(std::max(kDefaultMaxLevel, level));
  if (cap < level) throw InvalidArgument("max_level below full grid level");
  std::vector<std::vector<int>> level_sets;
  std::vector<int> cur;
  enumerate_levels(static_cast<std::size_t>(dim), level * dim, level, cur, level_sets);
  return SparseGrid(static_cast<std::size_t>(dim),
                    grid_from_levels(static_cast<std::size_t>(dim), level_sets), 0, cap);
}

std::vector<GridPoint> hierarchical_children(const GridPoint& p, std::size_t d,
                                             int max_level) {
  if (d >= p.dim()) throw InvalidArgument("dimension out of range");
  if (p.levels[d] + 1 > max_level) return {};
  std::vector<GridPoint> out(2, p);
  out[0].levels[d] += 1;
  out[0].indices[d] = 2 * p.indices[d] - 1;
  out[1].levels[d] += 1;
  out[1].indices[d] = 2 * p.indices[d] + 1;
  return out;
}

std::optional<GridPoint> hierarchical_parent(const GridPoint& p, std::size_t d) {
  if (d >= p.dim()) throw InvalidArgument("dimension out of range");
  if (p.levels[d] <= 1) return std::nullopt;
  GridPoint parent = p;
  parent.levels[d] -= 1;
  const int up = (p.indices[d] + 1) / 2;
  parent.indices[d] = (up % 2 == 1) ? up : (p.indices[d] - 1) / 2;
  return parent;
}

namespace {

bool has_missing_child(const SparseGrid& grid, const GridPoint& p) {
  for (std::size_t d = 0; d < grid.dim(); ++d) {
    for (const auto& c : hierarchical_children(p, d, grid.max_level())) {
      if (!grid.contains(c)) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<GridPoint> refinable_points(const SparseGrid& grid) {
  std::vector<GridPoint> out;
  for (const auto& p : grid.points()) {
    if (has_missing_child(grid, p)) out.push_back(p);
  }
  return out;
}

RefineResult refine(const SparseGrid& grid, const std::vector<GridPoint>& targets) {
  RefineReport report;
  std::vector<GridPoint> points = grid.points();
  std::unordered_set<GridPoint, GridPointHash> present(points.begin(), points.end());

  for (const auto& t : targets) {
    if (!grid.contains(t)) throw InvalidArgument("refinement target is not in the grid");
  }

  for (const auto& t : targets) {
    bool any = false;
    for (std::size_t d = 0; d < grid.dim(); ++d) {
      for (auto& c : hierarchical_children(t, d, grid.max_level())) {
        if (present.insert(c).second) {
          report.children.push_back(c);
          any = true;
        }
      }
    }
    if (!any) {
      std::string where;
      for (double c : t.coordinates()) where += (where.empty() ? "" : ", ") + std::to_string(c);
      report.warnings.push_back("target (" + where + ") has no missing children; skipped");
    }
  }

  // Ancestor closure: walk parents of every new point until the set is closed.
  std::vector<GridPoint> frontier = report.children;
  std::vector<GridPoint> missing;
  while (!frontier.empty()) {
    std::vector<GridPoint> next;
    for (const auto& q : frontier) {
      for (std::size_t d = 0; d < grid.dim(); ++d) {
        auto parent = hierarchical_parent(q, d);
        if (parent && present.insert(*parent).second) {
          missing.push_back(*parent);
          next.push_back(*parent);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(missing.begin(), missing.end(), canonical_less);
  report.ancestors = std::move(missing);

  points.insert(points.end(), report.children.begin(), report.children.end());
  points.insert(points.end(), report.ancestors.begin(), report.ancestors.end());
  return RefineResult{SparseGrid(grid.dim(), std::move(points), 0, grid.max_level()),
                      std::move(report)};
}

}  // namespace sgrc
