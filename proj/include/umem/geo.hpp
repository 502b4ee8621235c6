#pragma once

#include <cmath>

namespace umem {

// Planar projected coordinate in meters (x east, y north of a local
// origin). No geodesic math is done anywhere; project inputs first.
struct GeoPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline double distance(const GeoPoint& a, const GeoPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double distance_km(const GeoPoint& a, const GeoPoint& b) {
  return distance(a, b) / 1000.0;
}

}  // namespace umem
