#pragma once

// Spatial discretization: target-area delimitation around living clusters,
// the square zone grid, and cluster population mapping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/box.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include "umem/behavior.hpp"
#include "umem/error.hpp"
#include "umem/geo.hpp"

namespace umem {

namespace bg = boost::geometry;

using PlanarPoint = bg::model::d2::point_xy<double>;
using Polygon = bg::model::polygon<PlanarPoint, /*ClockWise=*/false, /*Closed=*/true>;
using MultiPolygon = bg::model::multi_polygon<Polygon>;
using Box = bg::model::box<PlanarPoint>;

/// Builds a polygon from an outer ring (orientation and closure fixed up).
inline Polygon make_polygon(std::span<const GeoPoint> outer) {
  Polygon poly;
  for (const auto& p : outer) bg::append(poly.outer(), PlanarPoint(p.x, p.y));
  bg::correct(poly);
  return poly;
}

inline Polygon make_rectangle(double x0, double y0, double x1, double y1) {
  const GeoPoint ring[] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  return make_polygon(ring);
}

struct LivingCluster {
  Polygon boundary;
  double population = 0.0;

  void validate() const {
    // A closed ring repeats its first vertex.
    if (boundary.outer().size() < 4) throw InputError("living cluster needs at least 3 vertices");
    std::string reason;
    if (!bg::is_valid(boundary, reason)) throw InputError("living cluster polygon is invalid: " + reason);
    if (!(bg::area(boundary) > 0.0)) throw InputError("living cluster polygon has zero area");
    if (!std::isfinite(population) || population < 0.0)
      throw InputError("living cluster population must be finite and >= 0");
  }
};

struct TargetArea {
  MultiPolygon boundary;
  double margin_m = 0.0;
};

/// Travel margin around the living clusters in meters: the one-way distance
/// at which the doubled (round-trip) energy reaches the 95th percentile of
/// the daily energy budget.
inline double pte_margin(const PteDistribution& pte, const ModalityProfile& modality) {
  const double rate = modality.energy_rate_kj_per_km;
  if (!(rate > 0.0)) throw ParameterError("pte_margin: energy rate must be > 0");
  const double q95 = pte.quantile(0.95);
  return q95 / (2.0 * rate) * 1000.0;
}

/// Union of the clusters, offset outward by `margin_m` with round joins.
inline TargetArea build_target_area(std::span<const LivingCluster> clusters, double margin_m,
                                    int points_per_circle = 360) {
  if (clusters.empty()) throw InputError("build_target_area: no living clusters");
  detail::require(std::isfinite(margin_m) && margin_m >= 0.0, "build_target_area: margin must be >= 0");

  MultiPolygon merged;
  for (const auto& c : clusters) {
    c.validate();
    MultiPolygon next;
    bg::union_(merged, c.boundary, next);
    merged = std::move(next);
  }

  TargetArea area;
  area.margin_m = margin_m;
  if (margin_m == 0.0) {
    area.boundary = std::move(merged);
    return area;
  }
  namespace bs = bg::strategy::buffer;
  bg::buffer(merged, area.boundary, bs::distance_symmetric<double>(margin_m), bs::side_straight(),
             bs::join_round(points_per_circle), bs::end_round(points_per_circle),
             bs::point_circle(points_per_circle));
  return area;
}

struct Zone {
  std::size_t index = 0;
  std::size_t col = 0;
  std::size_t row = 0;
  GeoPoint centroid;
  double population = 0.0;
  double wpo = 0.0;  // weighted POI opportunities
  bool active = false;
};

/// Row-major grid of square cells (index = row * n_cols + col; row 0 is
/// the southern edge).
struct ZoneGrid {
  GeoPoint origin;  // southwest corner
  double side_length_km = 1.0;
  std::size_t n_cols = 0;
  std::size_t n_rows = 0;
  std::vector<Zone> zones;

  std::size_t size() const { return zones.size(); }
  double side_m() const { return side_length_km * 1000.0; }
  std::size_t index_of(std::size_t col, std::size_t row) const { return row * n_cols + col; }

  Box cell_box(std::size_t index) const {
    const auto& z = zones.at(index);
    const double s = side_m();
    const double x0 = origin.x + static_cast<double>(z.col) * s;
    const double y0 = origin.y + static_cast<double>(z.row) * s;
    return Box(PlanarPoint(x0, y0), PlanarPoint(x0 + s, y0 + s));
  }

  /// Zone containing `p`; cells are half-open [x0, x0 + l).
  std::optional<std::size_t> locate(const GeoPoint& p) const {
    const double s = side_m();
    const double fx = std::floor((p.x - origin.x) / s);
    const double fy = std::floor((p.y - origin.y) / s);
    if (!(fx >= 0.0 && fy >= 0.0)) return std::nullopt;
    if (fx >= static_cast<double>(n_cols) || fy >= static_cast<double>(n_rows)) return std::nullopt;
    return index_of(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy));
  }

  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count_if(zones.begin(), zones.end(), [](const Zone& z) { return z.active; }));
  }

  /// Squared centroid distance in cell units; exact for any grid size.
  long long cell_distance2(std::size_t a, std::size_t b) const {
    const long long dc = static_cast<long long>(zones[a].col) - static_cast<long long>(zones[b].col);
    const long long dr = static_cast<long long>(zones[a].row) - static_cast<long long>(zones[b].row);
    return dc * dc + dr * dr;
  }

  double centroid_distance_km(std::size_t a, std::size_t b) const {
    return std::sqrt(static_cast<double>(cell_distance2(a, b))) * side_length_km;
  }
};

/// Cell count along an extent. A relative slack absorbs rounding in
/// buffered coordinates so that e.g. 10 km / 1 km stays 10 cells.
inline std::size_t cells_along(double extent_m, double side_m) {
  const double ratio = extent_m / side_m;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio))));
}

/// Axis-aligned grid of l-km cells covering the area's bounding box,
/// centered on it. Cells whose centroid lies outside the area are kept but
/// inactive.
inline ZoneGrid make_grid(const TargetArea& area, double side_length_km) {
  detail::require(std::isfinite(side_length_km) && side_length_km > 0.0, "make_grid: side length must be > 0");
  if (area.boundary.empty()) throw InputError("make_grid: empty target area");
  Box env;
  bg::envelope(area.boundary, env);
  const double width = env.max_corner().x() - env.min_corner().x();
  const double height = env.max_corner().y() - env.min_corner().y();
  if (!(width > 0.0 && height > 0.0)) throw InputError("make_grid: target area has zero extent");

  ZoneGrid grid;
  grid.side_length_km = side_length_km;
  const double s = grid.side_m();
  grid.n_cols = cells_along(width, s);
  grid.n_rows = cells_along(height, s);
  const double cx = 0.5 * (env.min_corner().x() + env.max_corner().x());
  const double cy = 0.5 * (env.min_corner().y() + env.max_corner().y());
  grid.origin = {cx - 0.5 * s * static_cast<double>(grid.n_cols), cy - 0.5 * s * static_cast<double>(grid.n_rows)};

  grid.zones.resize(grid.n_cols * grid.n_rows);
  for (std::size_t row = 0; row < grid.n_rows; ++row) {
    for (std::size_t col = 0; col < grid.n_cols; ++col) {
      Zone& z = grid.zones[grid.index_of(col, row)];
      z.index = grid.index_of(col, row);
      z.col = col;
      z.row = row;
      z.centroid = {grid.origin.x + (static_cast<double>(col) + 0.5) * s,
                    grid.origin.y + (static_cast<double>(row) + 0.5) * s};
      z.active = bg::covered_by(PlanarPoint(z.centroid.x, z.centroid.y), area.boundary);
    }
  }
  return grid;
}

/// Splits each cluster's population over the cells it overlaps, in
/// proportion to overlap area. Any cell receiving population becomes
/// active. Returns the updated grid; totals are conserved.
inline ZoneGrid assign_population(ZoneGrid grid, std::span<const LivingCluster> clusters) {
  const double s = grid.side_m();
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& cluster = clusters[ci];
    Box env;
    bg::envelope(cluster.boundary, env);
    const auto to_cell = [&](double v, double o, std::size_t n) {
      const double f = std::floor((v - o) / s);
      return static_cast<long long>(std::clamp(f, -1.0, static_cast<double>(n)));
    };
    const long long c0 = std::max(0LL, to_cell(env.min_corner().x(), grid.origin.x, grid.n_cols));
    const long long c1 = std::min<long long>(grid.n_cols - 1, to_cell(env.max_corner().x(), grid.origin.x, grid.n_cols));
    const long long r0 = std::max(0LL, to_cell(env.min_corner().y(), grid.origin.y, grid.n_rows));
    const long long r1 = std::min<long long>(grid.n_rows - 1, to_cell(env.max_corner().y(), grid.origin.y, grid.n_rows));

    std::vector<std::pair<std::size_t, double>> overlaps;
    double total = 0.0;
    for (long long r = r0; r <= r1; ++r) {
      for (long long c = c0; c <= c1; ++c) {
        const std::size_t idx = grid.index_of(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
        const Box box = grid.cell_box(idx);
        Polygon cell;
        bg::convert(box, cell);
        MultiPolygon piece;
        bg::intersection(cluster.boundary, cell, piece);
        const double a = bg::area(piece);
        if (a > 0.0) {
          overlaps.emplace_back(idx, a);
          total += a;
        }
      }
    }
    if (overlaps.empty() || !(total > 0.0))
      throw InputError("assign_population: cluster " + std::to_string(ci) + " lies outside the grid");

    // The last piece takes the remainder so the cluster total is exact.
    double assigned = 0.0;
    for (std::size_t k = 0; k < overlaps.size(); ++k) {
      const auto [idx, a] = overlaps[k];
      const double share = k + 1 == overlaps.size() ? cluster.population - assigned : cluster.population * (a / total);
      assigned += share;
      grid.zones[idx].population += share;
      if (share > 0.0) grid.zones[idx].active = true;
    }
  }
  return grid;
}

}  // namespace umem
