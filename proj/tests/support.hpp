#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "umem/spatial.hpp"

namespace umem::test {

// Fully active n_cols x n_rows grid with the given per-zone masses.
inline ZoneGrid make_test_grid(std::size_t n_cols, std::size_t n_rows, double side_km,
                               const std::vector<double>& wpo, const std::vector<double>& population = {}) {
  ZoneGrid g;
  g.side_length_km = side_km;
  g.n_cols = n_cols;
  g.n_rows = n_rows;
  g.zones.resize(n_cols * n_rows);
  const double s = side_km * 1000.0;
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) {
      auto& z = g.zones[g.index_of(c, r)];
      z.index = g.index_of(c, r);
      z.col = c;
      z.row = r;
      z.centroid = {(static_cast<double>(c) + 0.5) * s, (static_cast<double>(r) + 0.5) * s};
      z.active = true;
      z.wpo = wpo.at(z.index);
      z.population = population.empty() ? 100.0 : population.at(z.index);
    }
  return g;
}

inline ZoneGrid random_grid(std::mt19937_64& rng, std::size_t n_cols, std::size_t n_rows, double side_km = 1.0) {
  std::uniform_real_distribution<double> mass(0.0, 5.0), pop(10.0, 1000.0);
  std::vector<double> wpo(n_cols * n_rows), people(n_cols * n_rows);
  for (auto& w : wpo) w = mass(rng);
  for (auto& p : people) p = pop(rng);
  return make_test_grid(n_cols, n_rows, side_km, wpo, people);
}

}  // namespace umem::test
