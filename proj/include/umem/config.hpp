#pragma once

// Scenario configuration: a single JSON document, validated in full so
// that every problem is reported at once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "umem/behavior.hpp"
#include "umem/error.hpp"
#include "umem/tripgen.hpp"

namespace umem::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Collected validation failures of a scenario file.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems)
      : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& ps) {
    std::string s = "invalid scenario:";
    for (const auto& p : ps) s += "\n  - " + p;
    return s;
  }
  std::vector<std::string> problems_;
};

struct ScenarioConfig {
  fs::path clusters_path, pois_path, nodes_path, segments_path;
  double side_length_km = 1.0;
  std::optional<double> margin_m;  // explicit margin; otherwise derived from travel energy
  std::string margin_modality;     // modality used for the derived margin (default: first)
  double alpha_poi = 1.0;
  std::size_t top_k = 10;
  std::vector<std::string> category_ranks;
  LevyParams levy;
  std::string pte_family = "exponential";
  double pte_median_kj = PteDistribution::kAnchorMedianKj;
  double pte_sigma = 1.0;
  MotifParams motif;
  PteFactorMode pte_mode = PteFactorMode::Survival;
  LevyFactorMode levy_mode = LevyFactorMode::DensityTimesBin;
  std::vector<ModalityProfile> modalities = default_modalities();
  EvolutionConfig evolution;
  fs::path output_dir = "out";
  unsigned threads = 0;  // 0: UMEM_THREADS or hardware concurrency

  PteDistribution pte() const {
    return pte_family == "lognormal" ? PteDistribution::lognormal(pte_median_kj, pte_sigma)
                                     : PteDistribution::exponential(pte_median_kj);
  }

  BehaviorModel behavior_model() const {
    BehaviorModel b;
    b.levy = levy;
    b.pte = pte();
    b.motif = make_motif_weight(motif);
    b.pte_mode = pte_mode;
    b.levy_mode = levy_mode;
    b.bin_width_km = side_length_km;
    return b;
  }

  const ModalityProfile& margin_profile() const {
    if (margin_modality.empty()) return modalities.front();
    for (const auto& m : modalities)
      if (m.name == margin_modality) return m;
    throw ParameterError("unknown margin modality '" + margin_modality + "'");
  }

  unsigned worker_threads() const { return threads ? threads : default_thread_count(); }
};

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace detail {

// Key schema per object path; "modalities[]" entries share one schema.
inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"inputs", "grid", "area", "demand", "behavior", "evolution", "rng_seed", "output_dir", "threads"}},
      {"inputs", {"clusters", "pois", "nodes", "segments"}},
      {"grid", {"side_length_km"}},
      {"area", {"margin_m", "margin_modality"}},
      {"demand", {"alpha_poi", "top_k", "category_ranks"}},
      {"behavior", {"levy", "pte", "motif", "factors", "modalities"}},
      {"behavior.levy", {"mu", "c"}},
      {"behavior.pte", {"family", "median_kj", "sigma"}},
      {"behavior.motif", {"p_e", "gamma_r", "gamma_e"}},
      {"behavior.factors", {"pte", "levy"}},
      {"behavior.modalities[]", {"name", "energy_rate", "share", "speed"}},
      {"evolution", {"p_trip_min", "max_intermediate_zones", "candidates_per_origin", "k_for_sk", "return_leg"}},
  };
  return s;
}

class Validator {
 public:
  std::vector<std::string> problems;

  void check_keys(const json& obj, const std::string& path) {
    const std::string where = path.empty() ? "top level" : "'" + path + "'";
    if (!obj.is_object()) {
      problems.push_back(where + " must be an object");
      return;
    }
    const auto& allowed = schema().at(path);
    for (const auto& [key, value] : obj.items()) {
      if (allowed.contains(key)) continue;
      std::string msg = "unknown key '" + (path.empty() ? key : path + "." + key) + "'";
      std::string best;
      std::size_t best_d = 3;
      for (const auto& cand : allowed) {
        const auto d = edit_distance(key, cand);
        if (d < best_d) {
          best_d = d;
          best = cand;
        }
      }
      if (!best.empty()) msg += " (did you mean '" + best + "'?)";
      problems.push_back(msg);
    }
  }

  template <class Pred>
  double number(const json& obj, const std::string& path, const std::string& key, double fallback, Pred ok,
                const std::string& rule) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj[key];
    const std::string full = path.empty() ? key : path + "." + key;
    if (!v.is_number()) {
      problems.push_back("'" + full + "' must be a number");
      return fallback;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || !ok(x)) {
      problems.push_back("'" + full + "' " + rule + " (got " + v.dump() + ")");
      return fallback;
    }
    return x;
  }

  std::optional<long long> integer(const json& obj, const std::string& path, const std::string& key,
                                   long long min_value) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj[key];
    const std::string full = path.empty() ? key : path + "." + key;
    if (!v.is_number_integer()) {
      problems.push_back("'" + full + "' must be an integer");
      return std::nullopt;
    }
    const auto x = v.get<long long>();
    if (x < min_value) {
      problems.push_back("'" + full + "' must be >= " + std::to_string(min_value) + " (got " + v.dump() + ")");
      return std::nullopt;
    }
    return x;
  }

  std::optional<std::string> string(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) return std::nullopt;
    const auto& v = obj[key];
    if (!v.is_string()) {
      problems.push_back("'" + (path.empty() ? key : path + "." + key) + "' must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  const json& object(const json& parent, const std::string& key, const std::string& path) {
    static const json empty = json::object();
    if (!parent.is_object() || !parent.contains(key)) return empty;
    check_keys(parent[key], path);
    return parent[key].is_object() ? parent[key] : empty;
  }
};

inline json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return json(text);  // bare strings need no quoting on the command line
  }
}

}  // namespace detail

/// Applies "dotted.key=value" overrides (command-line flags take
/// precedence over the file, which takes precedence over defaults).
inline void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError({"override '" + ov + "' is not key=value"});
    json* node = &doc;
    std::string key = ov.substr(0, eq);
    std::size_t start = 0;
    for (;;) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (dot == std::string::npos) {
        (*node)[part] = detail::parse_override_value(ov.substr(eq + 1));
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

/// Validates a parsed scenario document. Relative input paths resolve
/// against `base_dir`.
inline ScenarioConfig parse_scenario(const json& doc, const fs::path& base_dir, bool require_files = true) {
  detail::Validator v;
  ScenarioConfig cfg;
  v.check_keys(doc, "");
  if (!doc.is_object()) throw ValidationError(v.problems);

  const auto positive = [](double x) { return x > 0.0; };
  const auto non_negative = [](double x) { return x >= 0.0; };

  // inputs
  if (!doc.contains("inputs")) v.problems.push_back("missing required key 'inputs'");
  const auto& inputs = v.object(doc, "inputs", "inputs");
  const auto input_path = [&](const std::string& key, fs::path& out) {
    const auto s = v.string(inputs, "inputs", key);
    if (!s) {
      if (doc.contains("inputs")) v.problems.push_back("missing required key 'inputs." + key + "'");
      return;
    }
    out = fs::path(*s).is_absolute() ? fs::path(*s) : base_dir / *s;
    if (require_files && !fs::exists(out))
      v.problems.push_back("'inputs." + key + "' refers to a missing file: " + out.string());
  };
  input_path("clusters", cfg.clusters_path);
  input_path("pois", cfg.pois_path);
  input_path("nodes", cfg.nodes_path);
  input_path("segments", cfg.segments_path);

  const auto& grid = v.object(doc, "grid", "grid");
  cfg.side_length_km = v.number(grid, "grid", "side_length_km", cfg.side_length_km, positive, "must be > 0");

  const auto& area = v.object(doc, "area", "area");
  if (area.contains("margin_m")) cfg.margin_m = v.number(area, "area", "margin_m", 0.0, non_negative, "must be >= 0");
  if (auto s = v.string(area, "area", "margin_modality")) cfg.margin_modality = *s;

  const auto& demand = v.object(doc, "demand", "demand");
  cfg.alpha_poi = v.number(demand, "demand", "alpha_poi", cfg.alpha_poi, positive, "must be > 0");
  if (auto k = v.integer(demand, "demand", "top_k", 1)) cfg.top_k = static_cast<std::size_t>(*k);
  if (!demand.contains("category_ranks")) {
    v.problems.push_back("missing required key 'demand.category_ranks'");
  } else if (!demand["category_ranks"].is_array()) {
    v.problems.push_back("'demand.category_ranks' must be an array of category names");
  } else {
    std::set<std::string> seen;
    for (const auto& c : demand["category_ranks"]) {
      if (!c.is_string()) {
        v.problems.push_back("'demand.category_ranks' entries must be strings");
        continue;
      }
      if (!seen.insert(c.get<std::string>()).second)
        v.problems.push_back("'demand.category_ranks' repeats '" + c.get<std::string>() + "'");
      cfg.category_ranks.push_back(c.get<std::string>());
    }
    if (cfg.category_ranks.empty()) v.problems.push_back("'demand.category_ranks' must not be empty");
  }

  const auto& behavior = v.object(doc, "behavior", "behavior");
  const auto& levy = v.object(behavior, "levy", "behavior.levy");
  cfg.levy.mu = v.number(levy, "behavior.levy", "mu", cfg.levy.mu, non_negative, "must be >= 0");
  cfg.levy.c = v.number(levy, "behavior.levy", "c", cfg.levy.c, positive, "must be > 0");
  const auto& pte = v.object(behavior, "pte", "behavior.pte");
  if (auto fam = v.string(pte, "behavior.pte", "family")) {
    if (*fam != "exponential" && *fam != "lognormal")
      v.problems.push_back("'behavior.pte.family' must be 'exponential' or 'lognormal'");
    else
      cfg.pte_family = *fam;
  }
  cfg.pte_median_kj = v.number(pte, "behavior.pte", "median_kj", cfg.pte_median_kj, positive, "must be > 0");
  cfg.pte_sigma = v.number(pte, "behavior.pte", "sigma", cfg.pte_sigma, positive, "must be > 0");
  const auto& motif = v.object(behavior, "motif", "behavior.motif");
  cfg.motif.p_e = v.number(motif, "behavior.motif", "p_e", cfg.motif.p_e, [](double x) { return x > 0.0 && x < 1.0; },
                           "must be in (0, 1)");
  cfg.motif.gamma_r = v.number(motif, "behavior.motif", "gamma_r", cfg.motif.gamma_r, positive, "must be > 0");
  cfg.motif.gamma_e = v.number(motif, "behavior.motif", "gamma_e", cfg.motif.gamma_e, positive, "must be > 0");
  const auto& factors = v.object(behavior, "factors", "behavior.factors");
  if (auto s = v.string(factors, "behavior.factors", "pte")) {
    if (*s == "survival")
      cfg.pte_mode = PteFactorMode::Survival;
    else if (*s == "density_bin")
      cfg.pte_mode = PteFactorMode::DensityTimesBin;
    else
      v.problems.push_back("'behavior.factors.pte' must be 'survival' or 'density_bin'");
  }
  if (auto s = v.string(factors, "behavior.factors", "levy")) {
    if (*s == "density_bin")
      cfg.levy_mode = LevyFactorMode::DensityTimesBin;
    else if (*s == "survival")
      cfg.levy_mode = LevyFactorMode::Survival;
    else
      v.problems.push_back("'behavior.factors.levy' must be 'density_bin' or 'survival'");
  }
  if (behavior.contains("modalities")) {
    const auto& mods = behavior["modalities"];
    if (!mods.is_array() || mods.empty()) {
      v.problems.push_back("'behavior.modalities' must be a non-empty array");
    } else {
      cfg.modalities.clear();
      double share_total = 0.0;
      std::set<std::string> names;
      for (std::size_t i = 0; i < mods.size(); ++i) {
        const std::string path = "behavior.modalities[" + std::to_string(i) + "]";
        const auto before = v.problems.size();
        v.check_keys(mods[i], "behavior.modalities[]");
        // check_keys reports with the schema path; make it point at the entry.
        for (auto k = before; k < v.problems.size(); ++k) {
          auto& p = v.problems[k];
          if (const auto pos = p.find("behavior.modalities[]"); pos != std::string::npos) p.replace(pos, 21, path);
        }
        if (!mods[i].is_object()) continue;
        ModalityProfile m;
        if (auto s = v.string(mods[i], path, "name")) m.name = *s;
        if (m.name.empty()) v.problems.push_back("'" + path + ".name' is required");
        if (!names.insert(m.name).second) v.problems.push_back("duplicate modality name '" + m.name + "'");
        for (const char* req : {"energy_rate", "share", "speed"})
          if (!mods[i].contains(req)) v.problems.push_back("'" + path + "." + req + "' is required");
        m.energy_rate_kj_per_km = v.number(mods[i], path, "energy_rate", 1.0, positive, "must be > 0");
        m.share = v.number(mods[i], path, "share", 0.0, [](double x) { return x >= 0.0 && x <= 1.0; },
                           "must be in [0, 1]");
        m.speed_km_h = v.number(mods[i], path, "speed", 1.0, positive, "must be > 0");
        share_total += m.share;
        cfg.modalities.push_back(m);
      }
      if (std::fabs(share_total - 1.0) > 1e-9)
        v.problems.push_back("'behavior.modalities' shares must sum to 1 (got " + std::to_string(share_total) + ")");
    }
  }
  if (!cfg.margin_modality.empty() &&
      std::none_of(cfg.modalities.begin(), cfg.modalities.end(),
                   [&](const ModalityProfile& m) { return m.name == cfg.margin_modality; }))
    v.problems.push_back("'area.margin_modality' names unknown modality '" + cfg.margin_modality + "'");

  const auto& evo = v.object(doc, "evolution", "evolution");
  cfg.evolution.p_trip_min = v.number(evo, "evolution", "p_trip_min", cfg.evolution.p_trip_min,
                                      [](double x) { return x > 0.0 && x <= 1.0; }, "must be in (0, 1]");
  if (auto k = v.integer(evo, "evolution", "max_intermediate_zones", 1))
    cfg.evolution.max_intermediate_zones = static_cast<std::size_t>(*k);
  if (auto k = v.integer(evo, "evolution", "candidates_per_origin", 1))
    cfg.evolution.candidates_per_origin = static_cast<std::size_t>(*k);
  if (auto k = v.integer(evo, "evolution", "k_for_sk", 1)) cfg.evolution.k_for_sk = static_cast<std::size_t>(*k);
  if (auto s = v.string(evo, "evolution", "return_leg")) {
    if (*s == "forced")
      cfg.evolution.return_leg = ReturnLegMode::Forced;
    else if (*s == "gwpc")
      cfg.evolution.return_leg = ReturnLegMode::Gwpc;
    else
      v.problems.push_back("'evolution.return_leg' must be 'forced' or 'gwpc'");
  }
  if (auto seed = v.integer(doc, "", "rng_seed", 0)) cfg.evolution.rng_seed = static_cast<std::uint64_t>(*seed);
  if (auto t = v.integer(doc, "", "threads", 0)) cfg.threads = static_cast<unsigned>(*t);
  if (auto out = v.string(doc, "", "output_dir"))
    cfg.output_dir = fs::path(*out).is_absolute() ? fs::path(*out) : base_dir / *out;
  else
    cfg.output_dir = base_dir / "out";

  if (!v.problems.empty()) throw ValidationError(v.problems);
  return cfg;
}

/// Reads, overrides, and validates a scenario file.
inline ScenarioConfig load_scenario(const fs::path& path, const std::vector<std::string>& overrides = {},
                                    bool require_files = true) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open scenario file " + path.string()});
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError({"scenario file is not valid JSON: " + std::string(e.what())});
  }
  apply_overrides(doc, overrides);
  return parse_scenario(doc, path.parent_path(), require_files);
}

}  // namespace umem::io
