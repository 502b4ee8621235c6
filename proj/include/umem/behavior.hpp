#pragma once

// Per-trip behavioral factors: Lévy step-length density, the physical
// travel energy (PTE) distribution, radius of gyration / exploration ratio,
// and the returner/explorer motif weight.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "umem/error.hpp"
#include "umem/geo.hpp"
#include "umem/numeric.hpp"

namespace umem {

// ---------------------------------------------------------------------------
// Lévy flight
// ---------------------------------------------------------------------------

struct LevyParams {
  double mu = 0.0;  // km, location
  double c = 1.0;   // km, scale

  void validate() const {
    detail::require(std::isfinite(mu) && mu >= 0.0, "levy.mu must be finite and >= 0");
    detail::require(std::isfinite(c) && c > 0.0, "levy.c must be > 0");
  }
};

/// Lévy step-length density in 1/km, defined for r > mu.
inline double levy_pdf(double r_km, const LevyParams& p) {
  const double shifted = r_km - p.mu;
  if (!(shifted > 0.0)) throw DomainError("levy_pdf: r must exceed mu");
  return std::sqrt(p.c / (2.0 * std::numbers::pi)) * std::exp(-p.c / (2.0 * shifted)) /
         std::pow(shifted, 1.5);
}

/// P(step <= r). Zero at and below mu.
inline double levy_cdf(double r_km, const LevyParams& p) {
  const double shifted = r_km - p.mu;
  if (!(shifted > 0.0)) return 0.0;
  return std::erfc(std::sqrt(p.c / (2.0 * shifted)));
}

// ---------------------------------------------------------------------------
// Physical travel energy
// ---------------------------------------------------------------------------

enum class PteFamily { Exponential, LogNormal };

/// Daily travel-energy distribution with a precomputed CDF grid for
/// quantile lookup. Immutable after construction.
class PteDistribution {
 public:
  static constexpr double kAnchorMedianKj = 615.0;

  /// Exponential family whose median sits at `median_kj`.
  static PteDistribution exponential(double median_kj = kAnchorMedianKj) {
    detail::require(std::isfinite(median_kj) && median_kj > 0.0, "pte.median_kj must be > 0");
    return PteDistribution(PteFamily::Exponential, median_kj / std::numbers::ln2, 0.0);
  }

  /// Log-normal family with median `median_kj` and log-scale `sigma`.
  static PteDistribution lognormal(double median_kj, double sigma) {
    detail::require(std::isfinite(median_kj) && median_kj > 0.0, "pte.median_kj must be > 0");
    detail::require(std::isfinite(sigma) && sigma > 0.0, "pte.sigma must be > 0");
    return PteDistribution(PteFamily::LogNormal, std::log(median_kj), sigma);
  }

  PteFamily family() const { return family_; }

  /// Mean daily energy in kJ.
  double mean_energy_kj() const {
    if (family_ == PteFamily::Exponential) return scale_;
    return std::exp(scale_ + 0.5 * sigma_ * sigma_);
  }

  double median_kj() const {
    if (family_ == PteFamily::Exponential) return scale_ * std::numbers::ln2;
    return std::exp(scale_);
  }

  double sigma() const { return sigma_; }

  double density(double energy_kj) const {
    if (energy_kj < 0.0) throw ParameterError("pte_density: energy must be >= 0");
    if (family_ == PteFamily::Exponential) return std::exp(-energy_kj / scale_) / scale_;
    if (energy_kj == 0.0) return 0.0;
    const double z = (std::log(energy_kj) - scale_) / sigma_;
    return std::exp(-0.5 * z * z) / (energy_kj * sigma_ * std::sqrt(2.0 * std::numbers::pi));
  }

  double cdf(double energy_kj) const {
    if (energy_kj <= 0.0) return 0.0;
    if (family_ == PteFamily::Exponential) return -std::expm1(-energy_kj / scale_);
    return 0.5 * std::erfc(-(std::log(energy_kj) - scale_) / (sigma_ * std::numbers::sqrt2));
  }

  double survival(double energy_kj) const {
    if (energy_kj <= 0.0) return 1.0;
    if (family_ == PteFamily::Exponential) return std::exp(-energy_kj / scale_);
    return 0.5 * std::erfc((std::log(energy_kj) - scale_) / (sigma_ * std::numbers::sqrt2));
  }

  /// Energy below which a fraction `p` of travelers stays. Brackets on the
  /// CDF grid, then bisects the analytic CDF.
  double quantile(double p) const {
    detail::require(p >= 0.0 && p < 1.0, "pte quantile: p must be in [0, 1)");
    if (p == 0.0) return 0.0;
    if (p > cdf_grid_.back())
      throw UnboundedMarginError("pte quantile: CDF does not reach requested level on its support");
    const auto it = std::lower_bound(cdf_grid_.begin(), cdf_grid_.end(), p);
    const std::size_t hi_i = static_cast<std::size_t>(it - cdf_grid_.begin());
    double lo = hi_i == 0 ? 0.0 : energy_grid_[hi_i - 1];
    double hi = energy_grid_[hi_i];
    for (int iter = 0; iter < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::span<const double> energy_grid() const { return energy_grid_; }
  std::span<const double> cdf_grid() const { return cdf_grid_; }
  double support_max_kj() const { return energy_grid_.back(); }

 private:
  PteDistribution(PteFamily family, double scale, double sigma)
      : family_(family), scale_(scale), sigma_(sigma) {
    // Support extends until the tail mass drops below 1e-12.
    double upper = median_kj();
    while (survival(upper) > 1e-12 && upper < 1e12) upper *= 2.0;
    constexpr std::size_t kPoints = 4096;
    energy_grid_.resize(kPoints);
    cdf_grid_.resize(kPoints);
    for (std::size_t i = 0; i < kPoints; ++i) {
      energy_grid_[i] = upper * static_cast<double>(i) / static_cast<double>(kPoints - 1);
      cdf_grid_[i] = cdf(energy_grid_[i]);
    }
  }

  PteFamily family_;
  double scale_;  // exponential: mean; log-normal: log-median
  double sigma_;
  std::vector<double> energy_grid_;
  std::vector<double> cdf_grid_;
};

inline double pte_density(double energy_kj, const PteDistribution& dist) {
  return dist.density(energy_kj);
}

// ---------------------------------------------------------------------------
// Modalities
// ---------------------------------------------------------------------------

struct ModalityProfile {
  std::string name;
  double energy_rate_kj_per_km = 0.0;
  double share = 0.0;  // population share using this mode
  double speed_km_h = 0.0;

  void validate() const {
    detail::require(!name.empty(), "modality name must be non-empty");
    detail::require(std::isfinite(energy_rate_kj_per_km) && energy_rate_kj_per_km > 0.0,
                    "modality '" + name + "': energy_rate must be > 0");
    detail::require(share >= 0.0 && share <= 1.0, "modality '" + name + "': share must be in [0, 1]");
    detail::require(std::isfinite(speed_km_h) && speed_km_h > 0.0,
                    "modality '" + name + "': speed must be > 0");
  }
};

/// Placeholder profiles (walk 200, bicycle 65, car 6 kJ/km). These are not
/// calibrated values.
inline std::vector<ModalityProfile> default_modalities() {
  return {{"walk", 200.0, 0.2, 5.0}, {"bicycle", 65.0, 0.2, 15.0}, {"car", 6.0, 0.6, 40.0}};
}

inline void validate_modalities(std::span<const ModalityProfile> mods) {
  if (mods.empty()) throw ParameterError("at least one modality is required");
  KahanSum total;
  for (const auto& m : mods) {
    m.validate();
    total += m.share;
  }
  if (std::fabs(total.value() - 1.0) > 1e-9)
    throw ParameterError("modality shares must sum to 1 (got " + std::to_string(total.value()) + ")");
}

/// Daily travel-time budget in hours implied by the median energy budget:
/// time is inversely proportional to the rate of energy expended.
inline double travel_time_budget_h(const ModalityProfile& m, const PteDistribution& pte) {
  return pte.median_kj() / (m.energy_rate_kj_per_km * m.speed_km_h);
}

// ---------------------------------------------------------------------------
// Radius of gyration and exploration ratio
// ---------------------------------------------------------------------------

struct VisitedLocation {
  double x = 0.0;
  double y = 0.0;
  double visits = 1.0;
};

namespace detail {

// Indices of the k most-visited locations; ties keep input order.
inline std::vector<std::size_t> top_k_locations(std::span<const VisitedLocation> locs, std::size_t k) {
  std::vector<std::size_t> idx(locs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return locs[a].visits > locs[b].visits; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

}  // namespace detail

/// Visit-weighted radius of gyration over the k most-visited locations
/// (all when k is empty), normalized by the number of locations considered.
/// Result is in the coordinate unit of the input.
inline double radius_of_gyration(std::span<const VisitedLocation> locs,
                                 std::optional<std::size_t> k = std::nullopt) {
  if (locs.empty()) throw InputError("radius_of_gyration: no locations");
  if (k && *k == 0) throw ParameterError("radius_of_gyration: k must be >= 1");
  const auto idx = detail::top_k_locations(locs, k.value_or(locs.size()));

  double wsum = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i : idx) {
    if (!(locs[i].visits >= 1.0)) throw InputError("radius_of_gyration: visit counts must be >= 1");
    wsum += locs[i].visits;
    cx += locs[i].visits * locs[i].x;
    cy += locs[i].visits * locs[i].y;
  }
  cx /= wsum;
  cy /= wsum;
  double acc = 0.0;
  for (std::size_t i : idx) {
    const double dx = locs[i].x - cx, dy = locs[i].y - cy;
    acc += locs[i].visits * (dx * dx + dy * dy);
  }
  return std::sqrt(acc / static_cast<double>(idx.size()));
}

/// s_k = r_g(top k) / r_g(all); co-located sets count as pure returners.
inline double exploration_ratio(std::span<const VisitedLocation> locs, std::size_t k) {
  if (k == 0) throw ParameterError("exploration_ratio: k must be >= 1");
  const double total = radius_of_gyration(locs);
  if (k >= locs.size()) return 1.0;
  const double partial = radius_of_gyration(locs, k);
  if (total == 0.0) return 1.0;
  return partial / total;
}

// ---------------------------------------------------------------------------
// Motif weight
// ---------------------------------------------------------------------------

struct MotifParams {
  double p_e = 0.2;      // explorer share of the mixture
  double gamma_r = 2.0;  // returner branch exponent
  double gamma_e = 2.0;  // explorer branch exponent

  void validate() const {
    detail::require(p_e > 0.0 && p_e < 1.0, "motif.p_e must be in (0, 1)");
    detail::require(std::isfinite(gamma_r) && gamma_r > 0.0, "motif.gamma_r must be > 0");
    detail::require(std::isfinite(gamma_e) && gamma_e > 0.0, "motif.gamma_e must be > 0");
  }
};

using MotifWeight = std::function<double(double)>;

/// Returner-dominant mixture (1 - p_e) s^gamma_r + p_e (1 - s)^gamma_e,
/// with s clamped to [0, 1].
inline double motif_weight(double s_k, const MotifParams& p) {
  const double s = std::clamp(s_k, 0.0, 1.0);
  return (1.0 - p.p_e) * std::pow(s, p.gamma_r) + p.p_e * std::pow(1.0 - s, p.gamma_e);
}

inline MotifWeight make_motif_weight(const MotifParams& p) {
  p.validate();
  return [p](double s) { return motif_weight(s, p); };
}

// ---------------------------------------------------------------------------
// Bundled factor model used by trip scoring
// ---------------------------------------------------------------------------

// How the continuous densities become dimensionless factors in [0, 1].
enum class PteFactorMode { Survival, DensityTimesBin };
enum class LevyFactorMode { DensityTimesBin, Survival };

struct BehaviorModel {
  LevyParams levy;
  PteDistribution pte = PteDistribution::exponential();
  MotifWeight motif = make_motif_weight(MotifParams{});
  PteFactorMode pte_mode = PteFactorMode::Survival;
  LevyFactorMode levy_mode = LevyFactorMode::DensityTimesBin;
  double bin_width_km = 1.0;  // zone side length

  /// Factor of one leg of length d.
  double leg_factor(double d_km) const {
    if (levy_mode == LevyFactorMode::Survival) return 1.0 - levy_cdf(d_km, levy);
    if (!(d_km > levy.mu)) return 0.0;
    return std::min(1.0, levy_pdf(d_km, levy) * bin_width_km);
  }

  /// Factor of the total energy spent on the trip so far.
  double energy_factor(double distance_km, const ModalityProfile& mode) const {
    const double energy = mode.energy_rate_kj_per_km * distance_km;
    if (pte_mode == PteFactorMode::Survival) return pte.survival(energy);
    return std::min(1.0, pte.density(energy) * mode.energy_rate_kj_per_km * bin_width_km);
  }
};

}  // namespace umem
