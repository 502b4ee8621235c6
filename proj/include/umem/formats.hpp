#pragma once

// File formats: cluster GeoJSON, POI / road network / grid / trip / load
// CSVs, load GeoJSON and the GWPC cache.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "umem/assign.hpp"
#include "umem/demand.hpp"
#include "umem/error.hpp"
#include "umem/potential.hpp"
#include "umem/spatial.hpp"
#include "umem/tripgen.hpp"

namespace umem::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Shortest representation that round-trips exactly.
inline std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError(where + ": not a number: '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InputError(where + ": not an integer: '" + s + "'");
  return v;
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

/// Reads a CSV with a required header; returns rows with columns ordered
/// as in `columns`. Extra columns are ignored.
inline std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& columns) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const auto header = split(line);
  std::vector<std::size_t> pos;
  for (const auto& c : columns) {
    const auto it = std::find(header.begin(), header.end(), c);
    if (it == header.end()) throw InputError(path.string() + ": missing column '" + c + "'");
    pos.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line);
    if (fields.size() < header.size())
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " fields");
    std::vector<std::string> row;
    row.reserve(pos.size());
    for (std::size_t p : pos) row.push_back(fields[p]);
    rows.push_back(std::move(row));
  }
  return rows;
}

// --- living clusters ------------------------------------------------------

inline std::vector<LivingCluster> read_clusters_geojson(const fs::path& path) {
  auto in = open_in(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection")
    throw InputError(path.string() + ": expected a GeoJSON FeatureCollection");
  std::vector<LivingCluster> clusters;
  for (const auto& f : doc.at("features")) {
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Polygon") throw InputError(path.string() + ": cluster features must be Polygons");
    const auto& props = f.at("properties");
    if (!props.contains("population") || !props["population"].is_number())
      throw InputError(path.string() + ": feature lacks numeric 'population'");
    LivingCluster c;
    c.population = props["population"].get<double>();
    const auto& rings = geom.at("coordinates");
    if (rings.empty()) throw InputError(path.string() + ": polygon without rings");
    for (std::size_t r = 0; r < rings.size(); ++r) {
      auto& ring = r == 0 ? c.boundary.outer() : c.boundary.inners().emplace_back();
      for (const auto& pt : rings[r]) bg::append(ring, PlanarPoint(pt.at(0).get<double>(), pt.at(1).get<double>()));
    }
    bg::correct(c.boundary);
    c.validate();
    clusters.push_back(std::move(c));
  }
  return clusters;
}

inline json ring_to_json(const auto& ring) {
  json out = json::array();
  for (const auto& p : ring) out.push_back({p.x(), p.y()});
  return out;
}

inline void write_clusters_geojson(const fs::path& path, std::span<const LivingCluster> clusters) {
  json doc = {{"type", "FeatureCollection"}, {"features", json::array()}};
  for (const auto& c : clusters) {
    json rings = json::array();
    rings.push_back(ring_to_json(c.boundary.outer()));
    for (const auto& inner : c.boundary.inners()) rings.push_back(ring_to_json(inner));
    doc["features"].push_back({{"type", "Feature"},
                               {"properties", {{"population", c.population}}},
                               {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
  }
  open_out(path) << doc.dump(1) << '\n';
}

// --- POIs -----------------------------------------------------------------

inline std::vector<Poi> read_pois_csv(const fs::path& path) {
  std::vector<Poi> pois;
  for (const auto& row : read_csv(path, {"x", "y", "category"}))
    pois.push_back({{parse_double(row[0], path.string()), parse_double(row[1], path.string())}, row[2]});
  return pois;
}

inline void write_pois_csv(const fs::path& path, std::span<const Poi> pois) {
  auto out = open_out(path);
  out << "x,y,category\n";
  for (const auto& p : pois) out << fmt(p.location.x) << ',' << fmt(p.location.y) << ',' << p.category << '\n';
}

// --- road network ---------------------------------------------------------

inline RoadNetwork read_network_csv(const fs::path& nodes_path, const fs::path& segments_path) {
  std::vector<RoadNode> nodes;
  for (const auto& row : read_csv(nodes_path, {"node_id", "x", "y"}))
    nodes.push_back({parse_int(row[0], nodes_path.string()),
                     {parse_double(row[1], nodes_path.string()), parse_double(row[2], nodes_path.string())}});
  std::vector<RoadSegment> segs;
  const auto where = segments_path.string();
  for (const auto& row : read_csv(segments_path, {"segment_id", "from", "to", "length_m", "oneway"})) {
    const long long oneway = parse_int(row[4], where);
    if (oneway != 0 && oneway != 1) throw InputError(where + ": oneway must be 0 or 1");
    segs.push_back({parse_int(row[0], where), parse_int(row[1], where), parse_int(row[2], where),
                    parse_double(row[3], where), oneway == 0});
  }
  return RoadNetwork(std::move(nodes), std::move(segs));
}

inline void write_network_csv(const fs::path& nodes_path, const fs::path& segments_path, const RoadNetwork& net) {
  auto n = open_out(nodes_path);
  n << "node_id,x,y\n";
  for (const auto& node : net.nodes()) n << node.id << ',' << fmt(node.location.x) << ',' << fmt(node.location.y) << '\n';
  auto s = open_out(segments_path);
  s << "segment_id,from,to,length_m,oneway\n";
  for (const auto& seg : net.segments())
    s << seg.id << ',' << seg.from << ',' << seg.to << ',' << fmt(seg.length_m) << ',' << (seg.bidirectional ? 0 : 1)
      << '\n';
}

// --- zone grid ------------------------------------------------------------

inline void write_grid_csv(const fs::path& path, const ZoneGrid& grid) {
  auto out = open_out(path);
  out << "zone_index,col,row,centroid_x,centroid_y,population,wpo\n";
  for (const auto& z : grid.zones)
    out << z.index << ',' << z.col << ',' << z.row << ',' << fmt(z.centroid.x) << ',' << fmt(z.centroid.y) << ','
        << fmt(z.population) << ',' << fmt(z.wpo) << '\n';
}

/// Rebuilds a grid from its CSV export. The export carries no activity
/// flag, so zones with population or WPO are marked active.
inline ZoneGrid read_grid_csv(const fs::path& path) {
  const auto where = path.string();
  const auto rows = read_csv(path, {"zone_index", "col", "row", "centroid_x", "centroid_y", "population", "wpo"});
  if (rows.empty()) throw InputError(where + ": no zones");
  ZoneGrid g;
  std::size_t max_col = 0, max_row = 0;
  for (const auto& r : rows) {
    Zone z;
    z.index = static_cast<std::size_t>(parse_int(r[0], where));
    z.col = static_cast<std::size_t>(parse_int(r[1], where));
    z.row = static_cast<std::size_t>(parse_int(r[2], where));
    z.centroid = {parse_double(r[3], where), parse_double(r[4], where)};
    z.population = parse_double(r[5], where);
    z.wpo = parse_double(r[6], where);
    z.active = z.population > 0.0 || z.wpo > 0.0;
    max_col = std::max(max_col, z.col);
    max_row = std::max(max_row, z.row);
    g.zones.push_back(z);
  }
  g.n_cols = max_col + 1;
  g.n_rows = max_row + 1;
  if (g.zones.size() != g.n_cols * g.n_rows) throw InputError(where + ": grid is not rectangular");
  for (std::size_t i = 0; i < g.zones.size(); ++i)
    if (g.zones[i].index != i || g.index_of(g.zones[i].col, g.zones[i].row) != i)
      throw InputError(where + ": zones are not in row-major order");
  if (g.n_cols > 1)
    g.side_length_km = (g.zones[1].centroid.x - g.zones[0].centroid.x) / 1000.0;
  else if (g.n_rows > 1)
    g.side_length_km = (g.zones[g.n_cols].centroid.y - g.zones[0].centroid.y) / 1000.0;
  const double half = g.side_m() * 0.5;
  g.origin = {g.zones[0].centroid.x - half, g.zones[0].centroid.y - half};
  return g;
}

// --- GWPC -----------------------------------------------------------------

inline constexpr std::array<char, 8> kGwpcMagic = {'U', 'M', 'E', 'M', 'G', 'W', 'P', '1'};

/// Binary dump: magic, cache key, n, l, alpha, then n*n doubles row-major
/// (host byte order).
inline void write_gwpc_binary(const fs::path& path, const PotentialGraph& g, std::uint64_t key) {
  auto out = open_out(path);
  const std::uint64_t n = g.n_zones();
  const double l = g.side_length_km(), alpha = g.alpha();
  out.write(kGwpcMagic.data(), kGwpcMagic.size());
  out.write(reinterpret_cast<const char*>(&key), sizeof key);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&l), sizeof l);
  out.write(reinterpret_cast<const char*>(&alpha), sizeof alpha);
  out.write(reinterpret_cast<const char*>(g.data().data()), static_cast<std::streamsize>(g.data().size_bytes()));
}

/// Returns std::nullopt when the file is missing, truncated, or carries a
/// different key.
inline std::optional<PotentialGraph> read_gwpc_binary(const fs::path& path, std::uint64_t expected_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  std::uint64_t key = 0, n = 0;
  double l = 0.0, alpha = 0.0;
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(&key), sizeof key);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&l), sizeof l);
  in.read(reinterpret_cast<char*>(&alpha), sizeof alpha);
  if (!in || magic != kGwpcMagic || key != expected_key || n > (1ULL << 20)) return std::nullopt;
  PotentialGraph g(static_cast<std::size_t>(n), l, alpha);
  in.read(reinterpret_cast<char*>(g.data().data()), static_cast<std::streamsize>(g.data().size_bytes()));
  if (!in) return std::nullopt;
  return g;
}

inline void write_gwpc_csv(const fs::path& path, const PotentialGraph& g) {
  auto out = open_out(path);
  out << "# n_zones=" << g.n_zones() << ",l=" << fmt(g.side_length_km()) << ",alpha=" << fmt(g.alpha()) << '\n';
  for (std::size_t i = 0; i < g.n_zones(); ++i) {
    const auto row = g.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << fmt(row[j]);
    out << '\n';
  }
}

inline PotentialGraph read_gwpc_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# n_zones=", 0) != 0) throw InputError(path.string() + ": bad header");
  std::size_t n = 0;
  double l = 0.0, alpha = 0.0;
  for (const auto& kv : split(line.substr(2))) {
    const auto eq = kv.find('=');
    const auto k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "n_zones") n = static_cast<std::size_t>(parse_int(v, path.string()));
    if (k == "l") l = parse_double(v, path.string());
    if (k == "alpha") alpha = parse_double(v, path.string());
  }
  PotentialGraph g(n, l, alpha);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw InputError(path.string() + ": truncated matrix");
    const auto cells = split(line);
    if (cells.size() != n) throw InputError(path.string() + ": row width mismatch");
    for (std::size_t j = 0; j < n; ++j) g.at(i, j) = parse_double(cells[j], path.string());
  }
  return g;
}

// --- trips ----------------------------------------------------------------

inline void write_trips_csv(const fs::path& path, const TripSet& trips, std::span<const ModalityProfile> modalities) {
  auto out = open_out(path);
  out << "origin,modality,zone_sequence,distance_km,p_pte,p_motif,p_er,p_lf,p_trip\n";
  for (const auto& [origin, list] : trips) {
    for (const auto& t : list) {
      out << origin << ',' << modalities[t.modality].name << ',';
      for (std::size_t i = 0; i < t.zone_sequence.size(); ++i) out << (i ? ";" : "") << t.zone_sequence[i];
      out << ',' << fmt(t.total_distance_km) << ',' << fmt(t.factors.p_pte) << ',' << fmt(t.factors.p_motif) << ','
          << fmt(t.factors.p_er) << ',' << fmt(t.factors.p_lf) << ',' << fmt(t.p_trip) << '\n';
    }
  }
}

inline TripSet read_trips_csv(const fs::path& path, std::span<const ModalityProfile> modalities) {
  const auto where = path.string();
  TripSet trips;
  for (const auto& r :
       read_csv(path, {"origin", "modality", "zone_sequence", "distance_km", "p_pte", "p_motif", "p_er", "p_lf", "p_trip"})) {
    Trip t;
    t.origin_zone = static_cast<std::size_t>(parse_int(r[0], where));
    const auto m = std::find_if(modalities.begin(), modalities.end(), [&](const auto& p) { return p.name == r[1]; });
    if (m == modalities.end()) throw InputError(where + ": unknown modality '" + r[1] + "'");
    t.modality = static_cast<std::size_t>(m - modalities.begin());
    for (const auto& z : split(r[2], ';')) t.zone_sequence.push_back(static_cast<std::size_t>(parse_int(z, where)));
    if (t.zone_sequence.empty() || t.zone_sequence.front() != t.origin_zone)
      throw InputError(where + ": zone sequence must start at the origin");
    t.closed = t.zone_sequence.size() >= 3 && t.zone_sequence.back() == t.origin_zone;
    t.total_distance_km = parse_double(r[3], where);
    t.factors = {parse_double(r[4], where), parse_double(r[5], where), parse_double(r[6], where),
                 parse_double(r[7], where)};
    t.p_trip = parse_double(r[8], where);
    trips[t.origin_zone].push_back(std::move(t));
  }
  return trips;
}

// --- loads ----------------------------------------------------------------

inline void write_loads_csv(const fs::path& path, const LoadMap& loads) {
  auto out = open_out(path);
  out << "segment_id,flow_per_day\n";
  const auto segs = loads.network().segments();
  for (std::size_t i = 0; i < segs.size(); ++i) out << segs[i].id << ',' << fmt(loads.flow_at(i)) << '\n';
}

inline std::vector<std::pair<SegmentId, double>> read_loads_csv(const fs::path& path) {
  std::vector<std::pair<SegmentId, double>> out;
  for (const auto& r : read_csv(path, {"segment_id", "flow_per_day"}))
    out.emplace_back(parse_int(r[0], path.string()), parse_double(r[1], path.string()));
  return out;
}

inline void write_loads_geojson(const fs::path& path, const LoadMap& loads) {
  const auto& net = loads.network();
  json doc = {{"type", "FeatureCollection"}, {"features", json::array()}};
  const auto segs = net.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& a = net.nodes()[net.index_of(segs[i].from)].location;
    const auto& b = net.nodes()[net.index_of(segs[i].to)].location;
    doc["features"].push_back(
        {{"type", "Feature"},
         {"properties", {{"segment_id", segs[i].id}, {"flow", loads.flow_at(i)}, {"oneway", !segs[i].bidirectional}}},
         {"geometry", {{"type", "LineString"}, {"coordinates", {{a.x, a.y}, {b.x, b.y}}}}}});
  }
  open_out(path) << doc.dump() << '\n';
}

}  // namespace umem::io
