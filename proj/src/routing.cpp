#include "smartregion/routing.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace smartregion {

const char* drop_reason_name(DropReason r) {
    switch (r) {
        case DropReason::none: return "None";
        case DropReason::empty_stack: return "EmptyStack";
        case DropReason::unknown_rid: return "UnknownRid";
        case DropReason::no_path: return "NoPath";
        case DropReason::receiver_not_in_region: return "ReceiverNotInRegion";
        case DropReason::brs_loop: return "BrsLoop";
        case DropReason::link_loss: return "LinkLoss";
        case DropReason::stale_destination: return "StaleDestination";
    }
    return "Unknown";
}

std::vector<RegionPath> RoutingDecision::chosen_paths() const {
    std::vector<RegionPath> out;
    for (const ForwardPlan& p : forwards) out.push_back(p.path);
    return out;
}

void RegionRoutingTable::add_permanent(RegionId dest, RouteEntry entry) {
    auto& v = permanent_[dest];
    if (std::find(v.begin(), v.end(), entry) == v.end()) v.push_back(entry);
}

void RegionRoutingTable::add_dynamic(RegionId dest, RouteEntry entry, std::uint64_t now_us) {
    negative_.erase(dest);
    auto& v = dynamic_[dest];
    for (DynamicEntry& e : v) {
        if (e.entry == entry) {
            e.refreshed_at_us = now_us;
            return;
        }
    }
    v.push_back(DynamicEntry{entry, now_us});
}

void RegionRoutingTable::add_negative(RegionId dest, std::uint64_t now_us) {
    negative_[dest] = NegativeEntry{now_us};
}

bool RegionRoutingTable::has_fresh_negative(RegionId dest, std::uint64_t now_us) const {
    auto it = negative_.find(dest);
    if (it == negative_.end()) return false;
    return now_us - it->second.cached_at_us <= refresh_interval_us_ / 10;
}

bool RegionRoutingTable::has_permanent(RegionId dest) const { return permanent_.count(dest) != 0; }

std::vector<RouteEntry> RegionRoutingTable::lookup_next_regions(RegionId dest,
                                                                std::uint64_t now_us) const {
    std::vector<RouteEntry> out;
    if (auto it = permanent_.find(dest); it != permanent_.end())
        out.insert(out.end(), it->second.begin(), it->second.end());
    if (auto it = dynamic_.find(dest); it != dynamic_.end()) {
        for (const DynamicEntry& e : it->second) {
            if (now_us - e.refreshed_at_us > refresh_interval_us_) continue;
            if (std::find(out.begin(), out.end(), e.entry) == out.end()) out.push_back(e.entry);
        }
    }
    return out;
}

void RegionRoutingTable::tick(std::uint64_t now_us) {
    bool changed = false;
    for (auto it = dynamic_.begin(); it != dynamic_.end();) {
        auto& v = it->second;
        auto before = v.size();
        v.erase(std::remove_if(v.begin(), v.end(),
                               [&](const DynamicEntry& e) {
                                   return now_us - e.refreshed_at_us > refresh_interval_us_;
                               }),
                v.end());
        changed = changed || v.size() != before;
        if (v.empty()) it = dynamic_.erase(it);
        else ++it;
    }
    for (auto it = negative_.begin(); it != negative_.end();) {
        if (now_us - it->second.cached_at_us > refresh_interval_us_ / 10)
            it = negative_.erase(it);
        else ++it;
    }
    if (changed) ++version_;
}

void RegionRoutingTable::apply_change(const ChangeNotice& notice) {
    bool changed = false;
    if (dynamic_.erase(notice.region)) changed = true;
    for (auto it = dynamic_.begin(); it != dynamic_.end();) {
        auto& v = it->second;
        auto before = v.size();
        v.erase(std::remove_if(v.begin(), v.end(),
                               [&](const DynamicEntry& e) { return e.entry.next == notice.region; }),
                v.end());
        changed = changed || v.size() != before;
        if (v.empty()) it = dynamic_.erase(it);
        else ++it;
    }
    negative_.clear();
    ++version_;
    (void)changed;
}

std::string dump_permanent(const RegionRoutingTable& table) {
    std::ostringstream os;
    for (const auto& [dest, entries] : table.permanent())
        for (const RouteEntry& e : entries)
            os << "route " << dest << " via " << e.next << " border " << e.border << "\n";
    return os.str();
}

void load_permanent(RegionRoutingTable& table, std::string_view text) {
    std::istringstream is{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kw, via, border;
        unsigned long dest = 0, next = 0, sw = 0;
        if (!(ls >> kw)) continue;
        if (kw != "route" || !(ls >> dest >> via >> next >> border >> sw) || via != "via" ||
            border != "border" || dest > 65535 || next > 65535 || sw > 65535)
            throw Error(Errc::malformed_line, "line " + std::to_string(line_no));
        table.add_permanent(static_cast<RegionId>(dest),
                            RouteEntry{static_cast<RegionId>(next), static_cast<VertexId>(sw)});
    }
}

PolicyConfig parse_policy(std::string_view text) {
    PolicyConfig cfg;
    std::istringstream is{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string trimmed;
        for (char c : line)
            if (!isspace(static_cast<unsigned char>(c))) trimmed += c;
        if (trimmed.empty()) continue;
        auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::malformed_line, "line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trimmed.substr(0, eq), value = trimmed.substr(eq + 1);
        if (key == "refresh_interval_ms") cfg.refresh_interval_us = std::stoull(value) * 1000;
        else if (key == "pull_ttl") cfg.pull_ttl = std::stoi(value);
        else if (key == "effort_mode") {
            if (value == "minimal") cfg.effort = EffortMode::minimal;
            else if (value == "maximal") cfg.effort = EffortMode::maximal;
            else throw Error(Errc::config_error, "unknown effort_mode '" + value + "'");
        } else {
            throw Error(Errc::config_error, "unknown policy key '" + key + "'");
        }
    }
    return cfg;
}

std::vector<RouteEntry> pull_missing_entry(TableWorld& world, RegionId self_region,
                                           RegionId dest, int ttl, std::uint64_t now_us) {
    if (ttl <= 0) throw Error(Errc::pull_ttl_exceeded, "non-positive pull TTL");
    if (world.pull_counter) ++*world.pull_counter;
    const RegionGraph& rg = *world.rgraph;
    std::vector<RegionId> dest_leaves;
    try {
        dest_leaves = rg.resolve_to_leaves(dest);
    } catch (const Error&) {
        dest_leaves.clear();  // unknown rid: unreachable, cache negative below
    }

    auto switches_of = [&](RegionId rid) { return rg.region(rid).switches; };

    std::vector<RouteEntry> found;
    // Same-region peers first.
    for (VertexId sw : switches_of(self_region)) {
        auto it = world.tables->find(sw);
        if (it == world.tables->end()) continue;
        for (const RouteEntry& e : it->second.lookup_next_regions(dest, now_us))
            if (std::find(found.begin(), found.end(), e) == found.end()) found.push_back(e);
    }

    if (found.empty() && !dest_leaves.empty()) {
        // Boundary recursion, modeled as waves over the region graph: a
        // region answers if it hosts the destination or lists it, or can
        // reach such a region within the remaining TTL.
        auto direct = [&](RegionId region) {
            if (std::binary_search(dest_leaves.begin(), dest_leaves.end(), region)) return true;
            for (VertexId sw : switches_of(region)) {
                auto t = world.tables->find(sw);
                if (t != world.tables->end() &&
                    !t->second.lookup_next_regions(dest, now_us).empty())
                    return true;
            }
            return false;
        };
        std::map<RegionId, int> dist_to_direct;
        std::vector<RegionId> frontier;
        for (RegionId r : rg.region_ids()) {
            if (direct(r)) {
                dist_to_direct[r] = 0;
                frontier.push_back(r);
            }
        }
        int wave = 0;
        while (!frontier.empty()) {
            ++wave;
            std::vector<RegionId> next;
            for (RegionId r : frontier) {
                for (RegionId n : rg.neighbors(r)) {
                    if (!dist_to_direct.count(n)) {
                        dist_to_direct[n] = wave;
                        next.push_back(n);
                    }
                }
            }
            frontier = std::move(next);
        }
        for (RegionId n : rg.neighbors(self_region)) {
            auto it = dist_to_direct.find(n);
            if (it == dist_to_direct.end() || it->second > ttl - 1) continue;
            for (const BorderWitness& w : rg.witnesses(self_region, n))
                found.push_back(RouteEntry{n, w.from_sw});
        }
        std::sort(found.begin(), found.end());
        found.erase(std::unique(found.begin(), found.end()), found.end());
    }

    for (VertexId sw : switches_of(self_region)) {
        auto it = world.tables->find(sw);
        if (it == world.tables->end()) continue;
        if (found.empty()) it->second.add_negative(dest, now_us);
        else
            for (const RouteEntry& e : found) it->second.add_dynamic(dest, e, now_us);
    }
    return found;
}

namespace {

constexpr std::size_t kResolveBudget = 1'000'000;

// Greedy subsequence match of waypoint leaf-sets against a region path.
bool honors_waypoints(const std::vector<RegionId>& path,
                      const std::vector<std::vector<RegionId>>& waypoints) {
    std::size_t wp = 0;
    for (RegionId r : path) {
        while (wp < waypoints.size() &&
               std::binary_search(waypoints[wp].begin(), waypoints[wp].end(), r))
            ++wp;
    }
    return wp == waypoints.size();
}

}  // namespace

std::vector<RegionPath> resolve_stack(const RegionGraph& rgraph, RegionId self_region,
                                      const wire::SmartRegionHeader& header, EffortMode mode,
                                      bool instance_expansion) {
    if (!header.region_stack || header.region_stack->stack.empty())
        throw Error(Errc::empty_stack, "no region stack to resolve");
    if (!rgraph.has_region(self_region))
        throw Error(Errc::unknown_region, std::to_string(self_region));

    // Resolve stack rids to waypoint leaf-sets, skipping entries already
    // satisfied by the local region.
    std::vector<std::vector<RegionId>> waypoints;
    for (RegionId rid : header.region_stack->stack) {
        auto leaves = rgraph.resolve_to_leaves(rid);  // throws UnknownRid/AmbiguousRid
        if (waypoints.empty() && std::binary_search(leaves.begin(), leaves.end(), self_region))
            continue;
        waypoints.push_back(std::move(leaves));
    }
    if (waypoints.empty()) return {};

    if (mode == EffortMode::minimal) {
        // First regions of minimum-hop paths toward the first waypoint only.
        const auto& target = waypoints.front();
        std::size_t best_len = SIZE_MAX;
        std::map<RegionId, RegionPath> immediates;  // first region -> best candidate
        std::size_t budget = kResolveBudget;
        std::vector<RegionId> path;
        std::set<RegionId> on_path{self_region};
        auto dfs = [&](auto&& self, RegionId at) -> void {
            if (budget == 0 || path.size() >= best_len) return;
            for (RegionId n : rgraph.neighbors(at)) {
                if (budget == 0) return;
                --budget;
                if (on_path.count(n)) continue;
                path.push_back(n);
                on_path.insert(n);
                if (std::binary_search(target.begin(), target.end(), n)) {
                    if (path.size() < best_len) {
                        best_len = path.size();
                        immediates.clear();
                    }
                    if (path.size() == best_len) {
                        auto qos = region_path_qos(rgraph, self_region, path);
                        if (qos) {
                            RegionPath cand;
                            cand.steps.push_back(PathStep{path.front(), std::nullopt});
                            cand.qos = *qos;
                            auto it = immediates.find(path.front());
                            if (it == immediates.end() ||
                                std::pair(qos->path_latency_us, qos->path_loss) <
                                    std::pair(it->second.qos.path_latency_us, it->second.qos.path_loss))
                                immediates[path.front()] = std::move(cand);
                        }
                    }
                } else {
                    self(self, n);
                }
                on_path.erase(n);
                path.pop_back();
            }
        };
        dfs(dfs, self_region);
        if (immediates.empty())
            throw Error(Errc::no_path, "no route toward top-of-stack waypoint");
        std::vector<RegionPath> out;
        for (auto& [rid, p] : immediates) out.push_back(std::move(p));
        std::sort(out.begin(), out.end(), [](const RegionPath& a, const RegionPath& b) {
            auto ka = std::tuple(a.qos.path_latency_us, a.qos.path_loss, a.steps.front().rid);
            auto kb = std::tuple(b.qos.path_latency_us, b.qos.path_loss, b.steps.front().rid);
            return ka < kb;
        });
        return out;
    }

    // Maximal effort: all minimum-total-hop simple paths honoring every
    // waypoint in order.
    std::size_t best_len = SIZE_MAX;
    std::vector<std::vector<RegionId>> best_raw;
    std::size_t budget = kResolveBudget;
    std::vector<RegionId> path;
    std::set<RegionId> on_path{self_region};
    auto dfs = [&](auto&& self, RegionId at) -> void {
        if (budget == 0 || path.size() >= best_len) return;
        for (RegionId n : rgraph.neighbors(at)) {
            if (budget == 0) return;
            --budget;
            if (on_path.count(n)) continue;
            path.push_back(n);
            on_path.insert(n);
            if (honors_waypoints(path, waypoints)) {
                if (path.size() < best_len) {
                    best_len = path.size();
                    best_raw.clear();
                }
                if (path.size() == best_len) best_raw.push_back(path);
            } else {
                self(self, n);
            }
            on_path.erase(n);
            path.pop_back();
        }
    };
    dfs(dfs, self_region);
    if (best_raw.empty()) throw Error(Errc::no_path, "stack waypoints unreachable");

    std::vector<RegionPath> out;
    for (const auto& raw : best_raw) {
        std::vector<RegionPath> expanded;
        if (instance_expansion && raw.size() >= 2) {
            auto insts = rgraph.instances_between(self_region, raw[0], raw[1]);
            if (insts.size() >= 2) {
                for (std::size_t i = 0; i < insts.size(); ++i) {
                    auto qos = region_path_qos(rgraph, self_region, raw, &insts[i]);
                    if (!qos) continue;
                    RegionPath p;
                    p.qos = *qos;
                    for (std::size_t j = 0; j < raw.size(); ++j)
                        p.steps.push_back(PathStep{
                            raw[j], j == 0 ? std::optional<std::uint32_t>(static_cast<std::uint32_t>(i + 1))
                                           : std::nullopt});
                    expanded.push_back(std::move(p));
                }
            }
        }
        if (expanded.empty()) {
            auto qos = region_path_qos(rgraph, self_region, raw);
            if (!qos) continue;
            RegionPath p;
            p.qos = *qos;
            for (RegionId r : raw) p.steps.push_back(PathStep{r, std::nullopt});
            expanded.push_back(std::move(p));
        }
        out.insert(out.end(), expanded.begin(), expanded.end());
    }
    if (out.empty()) throw Error(Errc::no_path, "stack waypoints unreachable");
    std::sort(out.begin(), out.end(), [](const RegionPath& a, const RegionPath& b) {
        auto ra = a.rids(), rb = b.rids();
        auto ka = std::tuple(a.qos.path_latency_us, a.qos.path_loss, ra,
                             a.steps.front().instance.value_or(0));
        auto kb = std::tuple(b.qos.path_latency_us, b.qos.path_loss, rb,
                             b.steps.front().instance.value_or(0));
        return ka < kb;
    });
    return out;
}

Selection select_next_region(std::span<const RegionPath> candidates,
                             const std::optional<wire::QosSf>& qos, unsigned fission_rate) {
    if (candidates.empty())
        throw Error(Errc::no_feasible_candidate, "no candidates to select from");
    if (fission_rate == 0) fission_rate = 1;

    std::vector<RegionPath> ordered(candidates.begin(), candidates.end());
    std::sort(ordered.begin(), ordered.end(), [](const RegionPath& a, const RegionPath& b) {
        auto ra = a.rids(), rb = b.rids();
        auto ka = std::tuple(a.qos.path_latency_us, a.qos.path_loss, ra,
                             a.steps.front().instance.value_or(0));
        auto kb = std::tuple(b.qos.path_latency_us, b.qos.path_loss, rb,
                             b.steps.front().instance.value_or(0));
        return ka < kb;
    });

    std::vector<RegionPath> feasible;
    if (qos) {
        std::uint64_t max_lat = qos->path_latency
                                    ? wire::dequantize_latency_us(*qos->path_latency)
                                    : UINT64_MAX;
        double max_loss = qos->path_loss ? wire::dequantize_loss(*qos->path_loss) : 1.0;
        for (const RegionPath& p : ordered)
            if (p.qos.path_latency_us <= max_lat && p.qos.path_loss <= max_loss)
                feasible.push_back(p);
    } else {
        feasible = ordered;
    }

    Selection sel;
    if (feasible.empty()) {
        sel.best_effort_fallback = true;
        sel.chosen.push_back(ordered.front());
        return sel;
    }

    // Greedy pick maximizing region-disjointness against the chosen set.
    std::vector<bool> used(feasible.size(), false);
    std::set<RegionId> covered;
    for (unsigned round = 0; round < fission_rate && sel.chosen.size() < feasible.size(); ++round) {
        std::size_t best_idx = SIZE_MAX;
        std::size_t best_overlap = SIZE_MAX;
        for (std::size_t i = 0; i < feasible.size(); ++i) {
            if (used[i]) continue;
            std::size_t overlap = 0;
            for (const PathStep& s : feasible[i].steps)
                if (covered.count(s.rid)) ++overlap;
            if (overlap < best_overlap) {
                best_overlap = overlap;
                best_idx = i;
            }
        }
        if (best_idx == SIZE_MAX) break;
        used[best_idx] = true;
        for (const PathStep& s : feasible[best_idx].steps) covered.insert(s.rid);
        sel.chosen.push_back(feasible[best_idx]);
    }
    return sel;
}

const Selection* FlowCache::find(const Key& key, std::uint64_t table_version) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || it->second.table_version != table_version) return nullptr;
    return &it->second.selection;
}

void FlowCache::store(Key key, Selection selection, std::uint64_t table_version) {
    entries_[std::move(key)] = Entry{std::move(selection), table_version};
}

namespace {

RoutingDecision drop(DropReason reason, const wire::SmartRegionHeader& header) {
    RoutingDecision d;
    d.action = RouteAction::drop;
    d.drop_reason = reason;
    d.updated_header = header;
    return d;
}

}  // namespace

RoutingDecision route_packet(SwitchContext& ctx, const wire::SmartRegionHeader& header,
                             EffortMode mode) {
    if (!header.region_stack || header.region_stack->stack.empty())
        return drop(DropReason::empty_stack, header);

    const RegionGraph& rg = *ctx.rgraph;
    wire::SmartRegionHeader working = header;

    // Pop stack entries covering the local region.
    while (!working.region_stack->stack.empty()) {
        RegionId top = working.region_stack->stack.front();
        bool covers_self;
        try {
            covers_self = rg.covers(top, ctx.self_region);
        } catch (const Error&) {
            return drop(DropReason::unknown_rid, working);
        }
        if (!covers_self) break;
        if (working.region_stack->stack.size() == 1) {
            // Destination region: resolve the node side. QoS SF is ignored.
            // Node membership comes from the live decomposition; the region
            // graph's copies do not see migrations.
            RoutingDecision d;
            d.updated_header = working;
            const Region* live = ctx.decomp ? ctx.decomp->find_region(ctx.self_region) : nullptr;
            const Region& self = live ? *live : rg.region(ctx.self_region);
            VertexId receiver = working.ids ? working.ids->receiver_nid : kUnsetVertex;
            if (receiver == kUnsetVertex) {
                d.action = RouteAction::multicast_local;
                d.multicast_nodes = self.nodes;
            } else if (self.has_node(receiver)) {
                d.action = RouteAction::deliver_local;
                d.receiver = receiver;
            } else {
                return drop(DropReason::receiver_not_in_region, working);
            }
            return d;
        }
        wire::pop_region(working);
    }

    // Inter-region forwarding.
    unsigned fission = working.qos ? working.qos->fission_rate : 1;
    FlowCache::Key key;
    bool use_cache = ctx.cache && working.ids && working.ids->flow_fid;
    std::uint64_t table_version = ctx.table ? ctx.table->version() : 0;
    if (use_cache) {
        key.fid = *working.ids->flow_fid;
        key.stack = working.region_stack->stack;
        key.mode = mode;
        if (working.brs) key.trail = working.brs->trail;
    }

    Selection selection;
    const Selection* cached = use_cache ? ctx.cache->find(key, table_version) : nullptr;
    if (cached) {
        selection = *cached;
    } else {
        std::vector<RegionPath> candidates;
        try {
            candidates = resolve_stack(rg, ctx.self_region, working, mode, ctx.instance_expansion);
        } catch (const Error& e) {
            if (e.code() == Errc::no_path) return drop(DropReason::no_path, working);
            return drop(DropReason::unknown_rid, working);
        }
        if (candidates.empty()) return drop(DropReason::no_path, working);

        // Decentralized table check for the top-of-stack region: candidates
        // must agree with a listed (possibly pulled) next region. Maximal
        // effort means the switch hosts a region map, which stands in for
        // the table answer.
        if (ctx.table && mode == EffortMode::minimal) {
            RegionId top = working.region_stack->stack.front();
            auto entries = ctx.table->lookup_next_regions(top, ctx.now_us);
            if (entries.empty() && ctx.world && !ctx.table->has_fresh_negative(top, ctx.now_us))
                entries = pull_missing_entry(*ctx.world, ctx.self_region, top, ctx.policy.pull_ttl,
                                             ctx.now_us);
            if (entries.empty()) return drop(DropReason::no_path, working);
            std::set<RegionId> listed;
            for (const RouteEntry& e : entries) listed.insert(e.next);
            std::erase_if(candidates,
                          [&](const RegionPath& p) { return !listed.count(p.steps.front().rid); });
            if (candidates.empty()) return drop(DropReason::no_path, working);
            table_version = ctx.table->version();
        }

        // Loop avoidance: never head back into a region recorded in the BRS.
        if (working.brs) {
            const auto& trail = working.brs->trail;
            std::erase_if(candidates, [&](const RegionPath& p) {
                return std::find(trail.begin(), trail.end(), p.steps.front().rid) != trail.end();
            });
            if (candidates.empty()) return drop(DropReason::brs_loop, working);
        }

        selection = select_next_region(candidates, working.qos, fission);
        if (use_cache) ctx.cache->store(key, selection, table_version);
    }

    // Stamp the traversal before emitting plans.
    if (working.brs && (working.brs->trail.empty() || working.brs->trail.back() != ctx.self_region))
        working.brs->trail.push_back(ctx.self_region);

    RoutingDecision d;
    d.action = RouteAction::forward_inter_region;
    d.best_effort_fallback = selection.best_effort_fallback;
    for (const RegionPath& path : selection.chosen) {
        ForwardPlan plan;
        plan.path = path;
        plan.next_region = path.steps.front().rid;

        // Pin the border crossing: cheapest (local transit + crossing).
        const RegionInstance* inst = nullptr;
        std::vector<RegionInstance> insts;
        if (path.steps.front().instance && path.steps.size() >= 2) {
            insts = rg.instances_between(ctx.self_region, path.steps[0].rid, path.steps[1].rid);
            std::uint32_t idx = *path.steps.front().instance;
            if (idx >= 1 && idx <= insts.size()) inst = &insts[idx - 1];
        }
        std::uint64_t best_cost = UINT64_MAX;
        for (const BorderWitness& w : rg.witnesses(ctx.self_region, plan.next_region)) {
            if (inst && w.to_sw != inst->switch_path.front()) continue;
            auto t = rg.intra_transit(ctx.self_region, ctx.switch_id, w.from_sw);
            if (!t.reachable) continue;
            std::uint64_t cost = t.latency_us + w.latency_us;
            if (cost < best_cost) {
                best_cost = cost;
                plan.egress_switch = w.from_sw;
                plan.remote_entry_switch = w.to_sw;
            }
        }
        if (best_cost == UINT64_MAX) continue;

        plan.header = working;
        if (mode == EffortMode::maximal) {
            plan.header.region_stack->stack = path.rids();
        }
        d.forwards.push_back(std::move(plan));

        // Gradual population of the dynamic section from routed traffic.
        if (ctx.table) {
            RegionId top = working.region_stack->stack.front();
            if (!ctx.table->has_permanent(top))
                ctx.table->add_dynamic(top,
                                       RouteEntry{d.forwards.back().next_region,
                                                  d.forwards.back().egress_switch},
                                       ctx.now_us);
        }
    }
    if (d.forwards.empty()) return drop(DropReason::no_path, working);
    d.updated_header = d.forwards.front().header;
    return d;
}

std::vector<std::vector<VertexId>> intra_region_paths(const Region& region,
                                                      const NetworkGraph& graph,
                                                      VertexId ingress, VertexId target,
                                                      std::size_t k) {
    if (k == 0) throw Error(Errc::config_error, "k must be positive");
    if (!region.has_switch(ingress))
        throw Error(Errc::not_in_region, "ingress " + std::to_string(ingress));
    if (!region.contains(target))
        throw Error(Errc::not_in_region, "target " + std::to_string(target));

    std::vector<std::vector<VertexId>> paths;
    std::vector<VertexId> cur{ingress};
    std::set<VertexId> on_path{ingress};
    auto dfs = [&](auto&& self, VertexId at) -> void {
        if (at == target) {
            paths.push_back(cur);
            return;
        }
        for (VertexId n : graph.neighbors(at)) {
            if (on_path.count(n)) continue;
            if (n == target && region.contains(n)) {
                cur.push_back(n);
                paths.push_back(cur);
                cur.pop_back();
                continue;
            }
            if (!region.has_switch(n)) continue;  // interior vertices are switches
            on_path.insert(n);
            cur.push_back(n);
            self(self, n);
            cur.pop_back();
            on_path.erase(n);
        }
    };
    dfs(dfs, ingress);

    if (paths.empty()) throw Error(Errc::no_path, "no intra-region path");
    auto latency_of = [&](const std::vector<VertexId>& p) {
        std::uint64_t lat = 0;
        for (std::size_t i = 0; i + 1 < p.size(); ++i) lat += graph.find_link(p[i], p[i + 1])->latency_us;
        return lat;
    };
    std::sort(paths.begin(), paths.end(), [&](const auto& a, const auto& b) {
        auto la = latency_of(a), lb = latency_of(b);
        if (la != lb) return la < lb;
        return a < b;
    });
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    if (paths.size() > k) paths.resize(k);
    return paths;
}

}  // namespace smartregion
