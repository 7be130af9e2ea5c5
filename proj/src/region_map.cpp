#include "smartregion/region_map.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace smartregion {

namespace {

constexpr std::size_t kPathEnumBudget = 200'000;
constexpr std::size_t kMaxInstances = 64;

double ppm_to_prob(std::uint32_t ppm) { return static_cast<double>(ppm) / 1e6; }

double compose_loss(double a, double b) { return 1.0 - (1.0 - a) * (1.0 - b); }

}  // namespace

std::vector<RegionId> RegionPath::rids() const {
    std::vector<RegionId> out;
    out.reserve(steps.size());
    for (const PathStep& s : steps) out.push_back(s.rid);
    return out;
}

bool RegionGraph::has_region(RegionId rid) const { return regions_.count(rid) != 0; }

const Region& RegionGraph::region(RegionId rid) const {
    auto it = regions_.find(rid);
    if (it == regions_.end()) throw Error(Errc::unknown_region, std::to_string(rid));
    return it->second;
}

std::vector<RegionId> RegionGraph::neighbors(RegionId rid) const {
    std::vector<RegionId> out;
    for (const auto& [key, wits] : adj_) {
        if (key.first == rid && !wits.empty()) out.push_back(key.second);
    }
    return out;
}

std::vector<BorderWitness> RegionGraph::witnesses(RegionId from, RegionId to) const {
    auto it = adj_.find({from, to});
    if (it == adj_.end()) return {};
    return it->second;
}

bool RegionGraph::adjacent(RegionId a, RegionId b) const { return adj_.count({a, b}) != 0; }

std::vector<RegionId> RegionGraph::resolve_to_leaves(RegionId rid) const {
    auto mult = rid_multiplicity_.find(rid);
    if (mult == rid_multiplicity_.end())
        throw Error(Errc::unknown_rid, std::to_string(rid));
    if (mult->second > 1)
        throw Error(Errc::ambiguous_rid, std::to_string(rid));
    if (regions_.count(rid)) return {rid};
    return hcr_leaves_.at(rid);
}

bool RegionGraph::covers(RegionId waypoint_rid, RegionId leaf) const {
    auto leaves = resolve_to_leaves(waypoint_rid);
    return std::binary_search(leaves.begin(), leaves.end(), leaf);
}

RegionGraph::Transit RegionGraph::intra_transit(RegionId rid, VertexId from_sw,
                                                VertexId to_sw) const {
    auto rit = transit_.find(rid);
    if (rit == transit_.end()) throw Error(Errc::unknown_region, std::to_string(rid));
    auto it = rit->second.find({from_sw, to_sw});
    if (it == rit->second.end()) return Transit{};
    return it->second;
}

std::map<RegionId, std::uint32_t> RegionGraph::hop_distances(RegionId from) const {
    std::map<RegionId, std::uint32_t> dist{{from, 0}};
    std::vector<RegionId> frontier{from};
    std::uint32_t d = 0;
    while (!frontier.empty()) {
        ++d;
        std::vector<RegionId> next;
        for (RegionId r : frontier) {
            for (RegionId n : neighbors(r)) {
                if (!dist.count(n)) {
                    dist[n] = d;
                    next.push_back(n);
                }
            }
        }
        frontier = std::move(next);
    }
    return dist;
}

std::vector<RegionInstance> RegionGraph::instances_between(RegionId origin, RegionId immediate,
                                                           RegionId next) const {
    std::set<VertexId> entries, exits;
    for (const BorderWitness& w : witnesses(origin, immediate)) entries.insert(w.to_sw);
    for (const BorderWitness& w : witnesses(immediate, next)) exits.insert(w.from_sw);

    const auto& adj = intra_adj_.at(immediate);
    std::vector<std::vector<VertexId>> paths;
    for (VertexId entry : entries) {
        for (VertexId exit : exits) {
            // DFS over simple switch paths.
            std::vector<VertexId> cur{entry};
            std::set<VertexId> on_path{entry};
            auto dfs = [&](auto&& self, VertexId at) -> void {
                if (paths.size() >= kMaxInstances) return;
                if (at == exit) {
                    paths.push_back(cur);
                    return;
                }
                auto ait = adj.find(at);
                if (ait == adj.end()) return;
                for (const auto& [n, lat, loss] : ait->second) {
                    (void)lat;
                    (void)loss;
                    if (on_path.count(n)) continue;
                    on_path.insert(n);
                    cur.push_back(n);
                    self(self, n);
                    cur.pop_back();
                    on_path.erase(n);
                }
            };
            dfs(dfs, entry);
        }
    }
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());

    std::vector<RegionInstance> out;
    for (const auto& p : paths) {
        RegionInstance inst;
        inst.region = immediate;
        inst.switch_path = p;
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            for (const auto& [n, lat, loss] : intra_adj_.at(immediate).at(p[i])) {
                if (n == p[i + 1]) {
                    inst.latency_us += lat;
                    inst.loss = compose_loss(inst.loss, ppm_to_prob(loss));
                    break;
                }
            }
        }
        out.push_back(std::move(inst));
    }
    std::sort(out.begin(), out.end(), [](const RegionInstance& a, const RegionInstance& b) {
        if (a.latency_us != b.latency_us) return a.latency_us < b.latency_us;
        return a.switch_path < b.switch_path;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].path_label = "P" + std::to_string(i + 1);
    return out;
}

RegionGraph build_region_graph(const NetworkGraph& graph, const RegionDecomposition& decomp) {
    RegionGraph rg;
    for (const Region& r : decomp.regions) {
        if (rg.regions_.count(r.rid))
            throw Error(Errc::ambiguous_rid, "duplicate leaf rid " + std::to_string(r.rid));
        rg.regions_[r.rid] = r;
        rg.ids_.push_back(r.rid);
        ++rg.rid_multiplicity_[r.rid];
    }
    std::sort(rg.ids_.begin(), rg.ids_.end());
    for (const HighLevelRegion& h : decomp.hcrs) {
        rg.hcr_leaves_[h.rid] = decomp.leaf_set(h.rid);
        ++rg.rid_multiplicity_[h.rid];
    }

    // Intra-region switch adjacency.
    for (const auto& [rid, r] : rg.regions_) {
        RegionGraph::IntraAdjacency adj;
        for (VertexId s : r.switches) adj[s];
        for (const Link& l : graph.links()) {
            if (r.has_switch(l.a) && r.has_switch(l.b)) {
                adj[l.a].emplace_back(l.b, l.latency_us, l.loss_ppm);
                adj[l.b].emplace_back(l.a, l.latency_us, l.loss_ppm);
            }
        }
        for (auto& [s, v] : adj) std::sort(v.begin(), v.end());
        rg.intra_adj_[rid] = std::move(adj);
    }

    // Border witnesses: shared switches and switch-switch crossing links.
    for (const auto& [ra, a] : rg.regions_) {
        for (const auto& [rb, b] : rg.regions_) {
            if (ra == rb) continue;
            std::vector<BorderWitness> wits;
            for (VertexId s : a.switches)
                if (b.has_switch(s)) wits.push_back({s, s, 0, 0});
            for (const Link& l : graph.links()) {
                if (!graph.is_switch(l.a) || !graph.is_switch(l.b)) continue;
                if (a.has_switch(l.a) && b.has_switch(l.b) && l.a != l.b)
                    wits.push_back({l.a, l.b, l.latency_us, l.loss_ppm});
                if (a.has_switch(l.b) && b.has_switch(l.a))
                    wits.push_back({l.b, l.a, l.latency_us, l.loss_ppm});
            }
            std::sort(wits.begin(), wits.end(), [](const BorderWitness& x, const BorderWitness& y) {
                return std::pair(x.from_sw, x.to_sw) < std::pair(y.from_sw, y.to_sw);
            });
            wits.erase(std::unique(wits.begin(), wits.end(),
                                   [](const BorderWitness& x, const BorderWitness& y) {
                                       return x.from_sw == y.from_sw && x.to_sw == y.to_sw;
                                   }),
                       wits.end());
            if (!wits.empty()) rg.adj_[{ra, rb}] = std::move(wits);
        }
    }

    // All-pairs intra-region transit, deterministic Dijkstra.
    for (const auto& [rid, r] : rg.regions_) {
        auto& table = rg.transit_[rid];
        const auto& adj = rg.intra_adj_.at(rid);
        for (VertexId src : r.switches) {
            std::map<VertexId, RegionGraph::Transit> best;
            best[src] = {true, 0, 0.0, {src}};
            std::set<VertexId> settled;
            while (true) {
                VertexId cur = 0;
                std::uint64_t cur_lat = UINT64_MAX;
                for (const auto& [v, t] : best) {
                    if (settled.count(v)) continue;
                    if (t.latency_us < cur_lat) {
                        cur_lat = t.latency_us;
                        cur = v;
                    }
                }
                if (cur_lat == UINT64_MAX) break;
                settled.insert(cur);
                auto ait = adj.find(cur);
                if (ait == adj.end()) continue;
                for (const auto& [n, lat, loss] : ait->second) {
                    std::uint64_t cand = best[cur].latency_us + lat;
                    auto bit = best.find(n);
                    if (bit == best.end() || cand < bit->second.latency_us) {
                        RegionGraph::Transit t = best[cur];
                        t.latency_us = cand;
                        t.loss = compose_loss(t.loss, ppm_to_prob(loss));
                        t.path.push_back(n);
                        best[n] = std::move(t);
                    }
                }
            }
            for (auto& [dst, t] : best) table[{src, dst}] = std::move(t);
        }
    }
    return rg;
}

std::optional<QosMeasures> region_path_qos(const RegionGraph& rgraph, RegionId origin,
                                           std::span<const RegionId> path,
                                           const RegionInstance* first_instance) {
    if (path.empty()) return QosMeasures{0, 0.0, 0};
    struct State {
        std::uint64_t lat;
        double loss;
    };
    auto better = [](const State& a, const State& b) {
        return a.lat < b.lat || (a.lat == b.lat && a.loss < b.loss);
    };
    std::map<VertexId, State> states;
    for (const BorderWitness& w : rgraph.witnesses(origin, path[0])) {
        if (first_instance && path.size() >= 2 &&
            w.to_sw != first_instance->switch_path.front())
            continue;
        State s{w.latency_us, ppm_to_prob(w.loss_ppm)};
        auto it = states.find(w.to_sw);
        if (it == states.end() || better(s, it->second)) states[w.to_sw] = s;
    }
    for (std::size_t i = 0; i + 1 < path.size() && !states.empty(); ++i) {
        std::map<VertexId, State> next;
        for (const auto& [entry, st] : states) {
            for (const BorderWitness& w : rgraph.witnesses(path[i], path[i + 1])) {
                std::uint64_t lat;
                double loss;
                if (i == 0 && first_instance) {
                    if (w.from_sw != first_instance->switch_path.back()) continue;
                    lat = st.lat + first_instance->latency_us + w.latency_us;
                    loss = compose_loss(compose_loss(st.loss, first_instance->loss),
                                        ppm_to_prob(w.loss_ppm));
                } else {
                    auto t = rgraph.intra_transit(path[i], entry, w.from_sw);
                    if (!t.reachable) continue;
                    lat = st.lat + t.latency_us + w.latency_us;
                    loss = compose_loss(compose_loss(st.loss, t.loss), ppm_to_prob(w.loss_ppm));
                }
                State s{lat, loss};
                auto it = next.find(w.to_sw);
                if (it == next.end() || better(s, it->second)) next[w.to_sw] = s;
            }
        }
        states = std::move(next);
    }
    if (states.empty()) return std::nullopt;
    State best{UINT64_MAX, 1.0};
    for (const auto& [entry, st] : states)
        if (better(st, best)) best = st;
    return QosMeasures{best.lat, best.loss, static_cast<std::uint32_t>(path.size())};
}

namespace {

// Enumerates simple region paths out of `origin`, invoking fn on every
// prefix. fn returns false to stop exploring past the current path.
template <typename Fn>
void for_each_simple_path(const RegionGraph& rg, RegionId origin, Fn&& fn) {
    std::vector<RegionId> path;
    std::set<RegionId> on_path{origin};
    std::size_t budget = kPathEnumBudget;
    auto dfs = [&](auto&& self, RegionId at) -> void {
        for (RegionId n : rg.neighbors(at)) {
            if (budget == 0) return;
            if (on_path.count(n)) continue;
            --budget;
            path.push_back(n);
            on_path.insert(n);
            if (fn(const_cast<const std::vector<RegionId>&>(path))) self(self, n);
            on_path.erase(n);
            path.pop_back();
        }
    };
    dfs(dfs, origin);
}

struct ExpandedPath {
    RegionPath path;
    std::uint32_t instance_index{0};  // 0 = none
};

// Expands the first step of a raw region path into instances when the
// immediate region offers several internal switch paths.
std::vector<RegionPath> expand_first_step(const RegionGraph& rg, RegionId origin,
                                          const std::vector<RegionId>& raw, bool expand) {
    std::vector<RegionPath> out;
    auto make = [&](std::optional<std::uint32_t> inst_index, const RegionInstance* inst) {
        auto qos = region_path_qos(rg, origin, raw, inst);
        if (!qos) return;
        RegionPath p;
        p.qos = *qos;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            PathStep s{raw[i], std::nullopt};
            if (i == 0) s.instance = inst_index;
            p.steps.push_back(s);
        }
        out.push_back(std::move(p));
    };
    if (expand && raw.size() >= 2) {
        auto insts = rg.instances_between(origin, raw[0], raw[1]);
        if (insts.size() >= 2) {
            for (std::size_t i = 0; i < insts.size(); ++i)
                make(static_cast<std::uint32_t>(i + 1), &insts[i]);
            return out;
        }
    }
    make(std::nullopt, nullptr);
    return out;
}

}  // namespace

RegionMap generate_region_map(const RegionGraph& rgraph, RegionId origin,
                              bool instance_expansion,
                              std::optional<std::uint32_t> visibility_depth) {
    if (!rgraph.has_region(origin)) throw Error(Errc::unknown_region, std::to_string(origin));
    RegionMap map;
    map.origin = origin;

    // (dest, immediate rid, instance) -> best qos
    std::map<std::tuple<RegionId, RegionId, std::uint32_t>, QosMeasures> best;
    for_each_simple_path(rgraph, origin, [&](const std::vector<RegionId>& raw) {
        for (const RegionPath& p : expand_first_step(rgraph, origin, raw, instance_expansion)) {
            auto key = std::make_tuple(raw.back(), p.steps.front().rid,
                                       p.steps.front().instance.value_or(0));
            auto it = best.find(key);
            if (it == best.end() ||
                std::pair(p.qos.path_latency_us, p.qos.path_loss) <
                    std::pair(it->second.path_latency_us, it->second.path_loss))
                best[key] = p.qos;
        }
        return true;
    });

    for (const auto& [key, qos] : best) {
        auto [dest, immediate, inst] = key;
        PathStep step{immediate, inst == 0 ? std::nullopt : std::optional<std::uint32_t>(inst)};
        map.entries[dest].push_back(RegionMapEntry{step, qos});
    }

    if (visibility_depth) {
        auto dist = rgraph.hop_distances(origin);
        RegionMap filtered;
        filtered.origin = origin;
        for (auto& [dest, entries] : map.entries) {
            RegionId key = dest;
            if (dist.count(dest) && dist.at(dest) > *visibility_depth) {
                // Summarize by the most specific covering HCR, if any.
                RegionId cover = kUnsetRegion;
                std::size_t cover_size = SIZE_MAX;
                for (const auto& [hcr_rid, leaves] : rgraph.hcr_leaves()) {
                    if (std::binary_search(leaves.begin(), leaves.end(), dest) &&
                        (leaves.size() < cover_size ||
                         (leaves.size() == cover_size && hcr_rid < cover))) {
                        cover = hcr_rid;
                        cover_size = leaves.size();
                    }
                }
                if (cover != kUnsetRegion) key = cover;
            }
            auto& out = filtered.entries[key];
            out.insert(out.end(), entries.begin(), entries.end());
        }
        // Re-deduplicate per merged destination.
        for (auto& [dest, entries] : filtered.entries) {
            std::map<std::pair<RegionId, std::uint32_t>, QosMeasures> dedup;
            for (const RegionMapEntry& e : entries) {
                auto key = std::pair(e.immediate.rid, e.immediate.instance.value_or(0));
                auto it = dedup.find(key);
                if (it == dedup.end() ||
                    std::pair(e.qos.path_latency_us, e.qos.path_loss) <
                        std::pair(it->second.path_latency_us, it->second.path_loss))
                    dedup[key] = e.qos;
            }
            entries.clear();
            for (const auto& [key, qos] : dedup)
                entries.push_back(RegionMapEntry{
                    PathStep{key.first,
                             key.second == 0 ? std::nullopt : std::optional<std::uint32_t>(key.second)},
                    qos});
        }
        map = std::move(filtered);
    }

    for (auto& [dest, entries] : map.entries) {
        std::sort(entries.begin(), entries.end(), [](const RegionMapEntry& a, const RegionMapEntry& b) {
            auto ka = std::tuple(a.qos.path_latency_us, a.qos.path_loss, a.immediate.rid,
                                 a.immediate.instance.value_or(0));
            auto kb = std::tuple(b.qos.path_latency_us, b.qos.path_loss, b.immediate.rid,
                                 b.immediate.instance.value_or(0));
            return ka < kb;
        });
    }
    map.entries.erase(origin);
    return map;
}

std::vector<RegionPath> k_region_paths(const RegionGraph& rgraph, RegionId src, RegionId dst,
                                       std::size_t k, bool instance_expansion) {
    if (k == 0) throw Error(Errc::config_error, "k must be positive");
    if (!rgraph.has_region(src)) throw Error(Errc::unknown_region, std::to_string(src));
    if (!rgraph.has_region(dst)) throw Error(Errc::unknown_region, std::to_string(dst));
    if (src == dst) throw Error(Errc::config_error, "src and dst must differ");

    std::vector<RegionPath> all;
    for_each_simple_path(rgraph, src, [&](const std::vector<RegionId>& raw) {
        if (raw.back() == dst) {
            auto expanded = expand_first_step(rgraph, src, raw, instance_expansion);
            all.insert(all.end(), expanded.begin(), expanded.end());
            return false;  // extending past dst would loop through it
        }
        return true;
    });
    if (all.empty()) throw Error(Errc::no_path, std::to_string(src) + " -> " + std::to_string(dst));

    std::sort(all.begin(), all.end(), [](const RegionPath& a, const RegionPath& b) {
        if (a.steps.size() != b.steps.size()) return a.steps.size() < b.steps.size();
        if (a.qos.path_latency_us != b.qos.path_latency_us)
            return a.qos.path_latency_us < b.qos.path_latency_us;
        auto ra = a.rids(), rb = b.rids();
        if (ra != rb) return ra < rb;
        return a.steps.front().instance.value_or(0) < b.steps.front().instance.value_or(0);
    });
    if (all.size() > k) all.resize(k);
    return all;
}

std::vector<RegionInstance> expand_region_instances(const Region& region,
                                                    const NetworkGraph& graph,
                                                    VertexId ingress, VertexId egress) {
    if (!region.has_switch(ingress))
        throw Error(Errc::not_in_region, "ingress " + std::to_string(ingress));
    if (!region.has_switch(egress))
        throw Error(Errc::not_in_region, "egress " + std::to_string(egress));

    std::vector<std::vector<VertexId>> paths;
    std::vector<VertexId> cur{ingress};
    std::set<VertexId> on_path{ingress};
    auto dfs = [&](auto&& self, VertexId at) -> void {
        if (paths.size() >= kMaxInstances) return;
        if (at == egress) {
            paths.push_back(cur);
            return;
        }
        for (VertexId n : graph.neighbors(at)) {
            if (!region.has_switch(n) || on_path.count(n)) continue;
            on_path.insert(n);
            cur.push_back(n);
            self(self, n);
            cur.pop_back();
            on_path.erase(n);
        }
    };
    dfs(dfs, ingress);

    std::vector<RegionInstance> out;
    for (const auto& p : paths) {
        RegionInstance inst;
        inst.region = region.rid;
        inst.switch_path = p;
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
            const Link* l = graph.find_link(p[i], p[i + 1]);
            inst.latency_us += l->latency_us;
            inst.loss = compose_loss(inst.loss, ppm_to_prob(l->loss_ppm));
        }
        out.push_back(std::move(inst));
    }
    std::sort(out.begin(), out.end(), [](const RegionInstance& a, const RegionInstance& b) {
        if (a.latency_us != b.latency_us) return a.latency_us < b.latency_us;
        return a.switch_path < b.switch_path;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].path_label = "P" + std::to_string(i + 1);
    return out;
}

std::string dump_region_map(const RegionMap& map) {
    std::ostringstream os;
    for (const auto& [dest, entries] : map.entries) {
        for (const RegionMapEntry& e : entries) {
            os << "map " << map.origin << ": " << dest << " -> " << e.immediate.rid;
            if (e.immediate.instance) os << "@P" << *e.immediate.instance;
            os << " lat=" << e.qos.path_latency_us;
            os << " loss=" << static_cast<long long>(std::llround(e.qos.path_loss * 1e6));
            os << " hops=" << e.qos.hop_count << "\n";
        }
    }
    return os.str();
}

}  // namespace smartregion
