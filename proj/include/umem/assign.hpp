#pragma once

// Stage 4: realisticity-normalized path flows, risk-neutral user-equilibrium
// routing (free-flow shortest paths) and road segment loads.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "umem/behavior.hpp"
#include "umem/error.hpp"
#include "umem/geo.hpp"
#include "umem/numeric.hpp"
#include "umem/parallel.hpp"
#include "umem/spatial.hpp"
#include "umem/tripgen.hpp"

namespace umem {

using NodeId = long long;
using SegmentId = long long;

struct RoadNode {
  NodeId id = 0;
  GeoPoint location;
};

struct RoadSegment {
  SegmentId id = 0;
  NodeId from = 0;
  NodeId to = 0;
  double length_m = 0.0;
  bool bidirectional = true;
};

/// Directed road graph. Bidirectional segments yield one arc per
/// direction; both arcs carry the same segment id.
class RoadNetwork {
 public:
  struct Arc {
    std::size_t head = 0;  // node index at the far end
    std::size_t segment = 0;
    double length_m = 0.0;
  };

  RoadNetwork() = default;
  RoadNetwork(std::vector<RoadNode> nodes, std::vector<RoadSegment> segments)
      : nodes_(std::move(nodes)), segments_(std::move(segments)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!std::isfinite(nodes_[i].location.x) || !std::isfinite(nodes_[i].location.y))
        throw InputError("road node " + std::to_string(nodes_[i].id) + " has non-finite coordinates");
      if (!node_index_.emplace(nodes_[i].id, i).second)
        throw InputError("duplicate road node id " + std::to_string(nodes_[i].id));
    }
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    std::unordered_map<SegmentId, std::size_t> seen;
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      const auto& seg = segments_[s];
      if (!seen.emplace(seg.id, s).second) throw InputError("duplicate segment id " + std::to_string(seg.id));
      if (!(seg.length_m > 0.0) || !std::isfinite(seg.length_m))
        throw InputError("segment " + std::to_string(seg.id) + " must have positive length");
      const auto a = find(seg.from), b = find(seg.to);
      if (!a || !b) throw InputError("segment " + std::to_string(seg.id) + " references an unknown node");
      out_[*a].push_back({*b, s, seg.length_m});
      in_[*b].push_back({*a, s, seg.length_m});
      if (seg.bidirectional) {
        out_[*b].push_back({*a, s, seg.length_m});
        in_[*a].push_back({*b, s, seg.length_m});
      }
    }
    segment_index_ = std::move(seen);
    // Arc order (far node id, segment id) drives deterministic tie-breaking.
    const auto by_id = [&](const Arc& x, const Arc& y) {
      if (nodes_[x.head].id != nodes_[y.head].id) return nodes_[x.head].id < nodes_[y.head].id;
      return segments_[x.segment].id < segments_[y.segment].id;
    };
    for (auto& arcs : out_) std::sort(arcs.begin(), arcs.end(), by_id);
    for (auto& arcs : in_) std::sort(arcs.begin(), arcs.end(), by_id);
  }

  std::span<const RoadNode> nodes() const { return nodes_; }
  std::span<const RoadSegment> segments() const { return segments_; }
  std::span<const Arc> out_arcs(std::size_t node) const { return out_[node]; }
  std::span<const Arc> in_arcs(std::size_t node) const { return in_[node]; }
  bool empty() const { return nodes_.empty(); }

  std::optional<std::size_t> find(NodeId id) const {
    const auto it = node_index_.find(id);
    if (it == node_index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index_of(NodeId id) const {
    const auto i = find(id);
    if (!i) throw InputError("unknown road node " + std::to_string(id));
    return *i;
  }
  std::optional<std::size_t> segment_index(SegmentId id) const {
    const auto it = segment_index_.find(id);
    if (it == segment_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Number of weakly connected components (reported, not enforced).
  std::size_t component_count() const {
    std::vector<std::size_t> parent(nodes_.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    const auto root = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t comps = nodes_.size();
    for (const auto& seg : segments_) {
      const auto a = root(index_of(seg.from)), b = root(index_of(seg.to));
      if (a != b) {
        parent[a] = b;
        --comps;
      }
    }
    return comps;
  }

 private:
  std::vector<RoadNode> nodes_;
  std::vector<RoadSegment> segments_;
  std::unordered_map<NodeId, std::size_t> node_index_;
  std::unordered_map<SegmentId, std::size_t> segment_index_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> in_;
};

/// Nearest node to the zone centroid; ties go to the smallest node id.
inline NodeId snap_zone_to_node(const Zone& zone, const RoadNetwork& net) {
  if (net.empty()) throw InputError("snap_zone_to_node: road network is empty");
  const auto nodes = net.nodes();
  NodeId best = nodes[0].id;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& n : nodes) {
    const double dx = n.location.x - zone.centroid.x, dy = n.location.y - zone.centroid.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2 || (d2 == best_d2 && n.id < best)) {
      best = n.id;
      best_d2 = d2;
    }
  }
  return best;
}

struct Route {
  std::vector<SegmentId> segments;
  std::vector<NodeId> nodes;  // includes both endpoints
  double length_m = 0.0;
};

/// Shortest-path engine. Distances to each target come from a reverse
/// Dijkstra and are cached per target; the route is then read forward,
/// always taking the smallest-id neighbor that stays on a shortest path,
/// which yields the lexicographically smallest node sequence among ties.
class Router {
 public:
  explicit Router(const RoadNetwork& net) : net_(net) {}

  /// Precomputes distance trees so route() is read-only afterwards and
  /// safe to call concurrently for these targets.
  void prepare(std::span<const NodeId> targets, unsigned threads = 1) {
    std::vector<std::size_t> todo;
    for (NodeId t : targets) {
      const std::size_t ti = net_.index_of(t);
      if (!trees_.contains(ti) && std::find(todo.begin(), todo.end(), ti) == todo.end()) todo.push_back(ti);
    }
    std::vector<std::vector<double>> out(todo.size());
    parallel_for(todo.size(), threads, [&](std::size_t i) { out[i] = distances_to(todo[i]); });
    for (std::size_t i = 0; i < todo.size(); ++i) trees_.emplace(todo[i], std::move(out[i]));
  }

  std::optional<Route> route(NodeId from, NodeId to) {
    const std::size_t fi = net_.index_of(from), ti = net_.index_of(to);
    auto it = trees_.find(ti);
    if (it == trees_.end()) it = trees_.emplace(ti, distances_to(ti)).first;
    return walk(fi, ti, it->second);
  }

  std::optional<Route> route(NodeId from, NodeId to) const {
    const std::size_t fi = net_.index_of(from), ti = net_.index_of(to);
    const auto it = trees_.find(ti);
    if (it != trees_.end()) return walk(fi, ti, it->second);
    return walk(fi, ti, distances_to(ti));
  }

 private:
  std::vector<double> distances_to(std::size_t target) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(net_.nodes().size(), inf);
    std::vector<char> done(dist.size(), 0);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[target] = 0.0;
    heap.emplace(0.0, target);
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (done[v]) continue;
      done[v] = 1;
      for (const auto& arc : net_.in_arcs(v)) {
        const double cand = arc.length_m + d;
        if (cand < dist[arc.head]) {
          dist[arc.head] = cand;
          heap.emplace(cand, arc.head);
        }
      }
    }
    return dist;
  }

  std::optional<Route> walk(std::size_t from, std::size_t to, const std::vector<double>& dist) const {
    if (!std::isfinite(dist[from])) return std::nullopt;
    Route r;
    r.nodes.push_back(net_.nodes()[from].id);
    std::size_t cur = from;
    while (cur != to) {
      const RoadNetwork::Arc* chosen = nullptr;
      for (const auto& arc : net_.out_arcs(cur)) {
        if (arc.length_m + dist[arc.head] == dist[cur]) {
          chosen = &arc;
          break;
        }
      }
      if (!chosen) throw Error("Router: inconsistent distance tree");
      r.segments.push_back(net_.segments()[chosen->segment].id);
      r.nodes.push_back(net_.nodes()[chosen->head].id);
      r.length_m += chosen->length_m;
      cur = chosen->head;
    }
    return r;
  }

  const RoadNetwork& net_;
  std::map<std::size_t, std::vector<double>> trees_;
};

/// Minimal-length route; std::nullopt when `to` is unreachable.
inline std::optional<Route> shortest_path(const RoadNetwork& net, NodeId from, NodeId to) {
  const Router router(net);
  return router.route(from, to);
}

struct PathFlow {
  std::size_t origin_zone = 0;
  std::size_t modality = 0;
  std::size_t trip_index = 0;  // position in the origin's trip list
  double flow = 0.0;           // persons per day
  bool routed = false;
  std::vector<std::vector<SegmentId>> legs;
  double route_length_m = 0.0;
};

struct FlowDiagnostics {
  std::size_t zero_realisticity_groups = 0;
};

/// Splits alpha_mod * population of each (origin, modality) over that
/// group's trips in proportion to realisticity.
inline std::vector<PathFlow> path_flows(const TripSet& trips, const ZoneGrid& grid,
                                        std::span<const ModalityProfile> modalities,
                                        FlowDiagnostics* diag = nullptr) {
  std::vector<PathFlow> out;
  FlowDiagnostics local;
  for (const auto& [origin, list] : trips) {
    if (origin >= grid.size()) throw InputError("path_flows: origin zone out of range");
    std::map<std::size_t, KahanSum> p_origin;
    for (const auto& t : list) {
      if (t.modality >= modalities.size()) throw InputError("path_flows: trip modality out of range");
      p_origin[t.modality] += t.p_trip;
    }
    for (const auto& [m, sum] : p_origin)
      if (!(sum.value() > 0.0)) ++local.zero_realisticity_groups;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& t = list[i];
      const double total = p_origin[t.modality].value();
      PathFlow f;
      f.origin_zone = origin;
      f.modality = t.modality;
      f.trip_index = i;
      f.flow = total > 0.0 ? t.p_trip / total * modalities[t.modality].share * grid.zones[origin].population : 0.0;
      out.push_back(std::move(f));
    }
  }
  if (diag) *diag = local;
  return out;
}

struct RoutingStats {
  std::size_t routed = 0;
  std::size_t dropped = 0;
  double dropped_flow = 0.0;
};

/// Routes every leg of every trip between the zones' snapped nodes. A trip
/// with any unroutable leg is dropped as a whole.
inline RoutingStats route_flows(std::vector<PathFlow>& flows, const TripSet& trips, const ZoneGrid& grid,
                                const RoadNetwork& net, unsigned threads = 1) {
  std::vector<NodeId> snap(grid.size());
  std::vector<char> needed(grid.size(), 0);
  for (const auto& [origin, list] : trips)
    for (const auto& t : list)
      for (std::size_t z : t.zone_sequence) needed.at(z) = 1;
  std::vector<NodeId> targets;
  for (std::size_t z = 0; z < grid.size(); ++z) {
    if (!needed[z]) continue;
    snap[z] = snap_zone_to_node(grid.zones[z], net);
    targets.push_back(snap[z]);
  }
  Router router(net);
  router.prepare(targets, threads);
  const Router& shared = router;

  parallel_for(flows.size(), threads, [&](std::size_t i) {
    auto& f = flows[i];
    const auto& seq = trips.at(f.origin_zone).at(f.trip_index).zone_sequence;
    f.legs.clear();
    f.route_length_m = 0.0;
    f.routed = true;
    for (std::size_t k = 1; k < seq.size(); ++k) {
      const auto r = shared.route(snap[seq[k - 1]], snap[seq[k]]);
      if (!r) {
        f.routed = false;
        f.legs.clear();
        f.route_length_m = 0.0;
        return;
      }
      f.legs.push_back(r->segments);
      f.route_length_m += r->length_m;
    }
  });

  RoutingStats stats;
  KahanSum dropped;
  for (const auto& f : flows) {
    if (f.routed) {
      ++stats.routed;
    } else {
      ++stats.dropped;
      dropped += f.flow;
    }
  }
  stats.dropped_flow = dropped.value();
  return stats;
}

/// Per-segment flow, aligned with RoadNetwork::segments().
class LoadMap {
 public:
  explicit LoadMap(const RoadNetwork& net) : net_(&net), sums_(net.segments().size()) {}

  void add(SegmentId id, double flow) {
    const auto s = net_->segment_index(id);
    if (!s) throw InputError("LoadMap: unknown segment " + std::to_string(id));
    sums_[*s] += flow;
  }
  double flow(SegmentId id) const {
    const auto s = net_->segment_index(id);
    if (!s) throw InputError("LoadMap: unknown segment " + std::to_string(id));
    return sums_[*s].value();
  }
  double flow_at(std::size_t segment_index) const { return sums_[segment_index].value(); }
  std::size_t size() const { return sums_.size(); }
  const RoadNetwork& network() const { return *net_; }

 private:
  const RoadNetwork* net_;
  std::vector<KahanSum> sums_;
};

/// load(segment) = sum of the flows of routed paths traversing it, once per
/// traversal.
inline LoadMap accumulate_loads(std::span<const PathFlow> flows, const RoadNetwork& net) {
  LoadMap loads(net);
  for (const auto& f : flows) {
    if (!f.routed) continue;
    for (const auto& leg : f.legs)
      for (SegmentId s : leg) loads.add(s, f.flow);
  }
  return loads;
}

/// Extension point for capacity-aware equilibria: given current loads,
/// return updated per-segment costs (aligned with segments()). The engine
/// ships only the free-flow, risk-neutral assignment and no implementation
/// of this interface.
class SegmentCostUpdater {
 public:
  virtual ~SegmentCostUpdater() = default;
  virtual std::vector<double> update_costs(const LoadMap& loads, const RoadNetwork& net) = 0;
};

}  // namespace umem
