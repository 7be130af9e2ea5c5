#include "smartregion/sim.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <variant>

namespace smartregion::sim {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, VertexId a, VertexId b) {
    std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(a) << 16 | b));
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

}  // namespace

std::uint64_t Metrics::dropped_total() const {
    std::uint64_t total = 0;
    for (const auto& [k, v] : dropped) total += v;
    return total;
}

std::string Metrics::to_csv() const {
    std::ostringstream os;
    os << "metric,value\n";
    os << "injected," << injected << "\n";
    os << "copies_spawned," << copies_spawned << "\n";
    os << "delivered," << delivered << "\n";
    os << "redundant," << redundant << "\n";
    os << "dropped_total," << dropped_total() << "\n";
    for (const auto& [reason, count] : dropped) os << "dropped_" << reason << "," << count << "\n";
    os << "in_flight_end," << in_flight_end << "\n";
    os << "mean_latency_us," << mean_latency_us << "\n";
    os << "p50_latency_us," << p50_latency_us << "\n";
    os << "p95_latency_us," << p95_latency_us << "\n";
    os << "p99_latency_us," << p99_latency_us << "\n";
    os << "max_interregion_hops," << max_interregion_hops << "\n";
    for (const auto& [hops, count] : hop_histogram) os << "hop_hist_" << hops << "," << count << "\n";
    os << "brs_loop_violations," << brs_loop_violations << "\n";
    os << "redirected_in_transition," << redirected_in_transition << "\n";
    os << "forwarded_by_old_region," << forwarded_by_old_region << "\n";
    os << "notify_messages," << notify_messages << "\n";
    os << "table_convergence_us," << table_convergence_us << "\n";
    os << "explorer_returns," << explorer_returns << "\n";
    os << "explorer_absorbed," << explorer_absorbed << "\n";
    os << "explorer_suppressed," << explorer_suppressed << "\n";
    os << "pulls," << pulls << "\n";
    return os.str();
}

std::vector<Packet> apply_fission(const RoutingDecision& decision, const Packet& base) {
    std::vector<Packet> out;
    for (const ForwardPlan& plan : decision.forwards) {
        Packet copy = base;
        copy.header = plan.header;
        out.push_back(std::move(copy));
    }
    return out;
}

namespace {

struct SimPacket {
    Packet pkt;
    VertexId at{};                 // vertex just reached
    RegionId cur_region{};
    RegionId pending_region{};     // becomes cur_region when the plan drains
    std::vector<VertexId> plan;    // vertices still to visit
    std::size_t plan_pos{0};
    std::uint32_t crossings{0};
    std::uint32_t inline_transitions{0};

    bool plan_active() const { return plan_pos < plan.size(); }
};

struct InjectPayload {
    std::size_t flow_idx{};
    std::uint16_t pid{};
};
struct ArrivalPayload {
    SimPacket pkt;
};
struct TickPayload {};
struct ExplorerPayload {
    std::uint32_t id{};
    RegionId origin{};
    RegionId at{};
    std::vector<RegionId> trail;
    int ttl{};
    bool launch{false};
    bool is_return{false};
};
struct EventPktPayload {
    RegionId at{};
    EventPacket pkt;
};
struct MigrationPayload {
    MigrationSpec spec;
};
struct WindowPayload {
    VertexId node{};
    bool forward_window{};
};
struct RedirectPayload {
    VertexId node{};
    RegionId to{};
    std::uint64_t seq{};
    RegionId at{};
};
struct NotifyPayload {
    VertexId sender{};
    VertexId node{};
    RegionId to{};
};

using Payload = std::variant<InjectPayload, ArrivalPayload, TickPayload, ExplorerPayload,
                             EventPktPayload, MigrationPayload, WindowPayload, RedirectPayload,
                             NotifyPayload>;

struct QueuedEvent {
    std::uint64_t time{};
    std::uint64_t seq{};
    Payload payload;
};

struct EventOrder {
    bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

struct FlowState {
    FlowSpec spec;
    std::uint16_t fid{};
    std::vector<RegionId> current_stack;
};

struct MigrationState {
    MigrationSpec spec;
    std::uint64_t fwd_until{};
    std::uint64_t notify_until{};
    bool executed{false};
    std::set<VertexId> notified_senders;
};

struct RegionKnowledge {
    std::set<RegionId> learned_regions;
    std::set<std::pair<RegionId, RegionId>> learned_adjacency;
    std::map<VertexId, RegionId> redirects;
};

}  // namespace

struct Simulation::Impl {
    NetworkGraph graph;
    RegionDecomposition decomp;
    SimKnobs knobs;
    std::uint64_t seed;

    RegionGraph rgraph;
    std::map<VertexId, RegionRoutingTable> tables;
    std::map<VertexId, FlowCache> caches;
    TableWorld world;

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, EventOrder> queue;
    std::uint64_t next_seq{0};
    std::uint64_t now{0};
    bool ran{false};

    std::vector<FlowState> flows;
    std::map<VertexId, MigrationState> migrations;
    std::map<RegionId, RegionKnowledge> knowledge;
    std::map<VertexId, std::set<std::pair<std::uint16_t, std::uint16_t>>> node_seen;
    std::set<std::pair<std::uint32_t, RegionId>> explorer_seen;
    std::set<std::tuple<RegionId, std::uint64_t, RegionId>> event_seen;
    std::set<std::tuple<VertexId, std::uint64_t, RegionId>> redirect_seen;
    std::map<std::pair<RegionId, std::uint64_t>, std::uint64_t> event_emit_time;
    std::uint32_t next_explorer_id{1};
    std::uint64_t next_event_seq{1};
    std::uint64_t next_redirect_seq{1};

    std::map<std::pair<VertexId, VertexId>, std::mt19937_64> link_rng;

    Metrics m;
    std::vector<std::uint64_t> latencies;

    Impl(NetworkGraph g, RegionDecomposition d, SimKnobs k, std::uint64_t s)
        : graph(std::move(g)), decomp(std::move(d)), knobs(k), seed(s) {
        if (knobs.t_notify_us <= knobs.t_fwd_us)
            throw Error(Errc::config_error, "t_notify must exceed t_fwd");
        for (const LossOverride& o : knobs.loss_overrides) graph.set_link_loss(o.a, o.b, o.loss_ppm);
        auto report = validate_decomposition(graph, decomp);
        if (!report.valid())
            throw Error(Errc::config_error, "invalid decomposition: " + report.problems.front());
        rgraph = build_region_graph(graph, decomp);
        for (const Region& r : decomp.regions)
            for (VertexId sw : r.switches)
                tables.emplace(sw, RegionRoutingTable(sw, r.rid, knobs.refresh_interval_us));
        if (knobs.consistent_tables) build_consistent_tables();
        world.rgraph = &rgraph;
        world.tables = &tables;
        world.pull_counter = &m.pulls;
        if (knobs.refresh_interval_us > 0) schedule(knobs.refresh_interval_us, TickPayload{});
    }

    void build_consistent_tables() {
        for (const Region& r : decomp.regions) {
            for (RegionId dest : rgraph.region_ids()) {
                if (dest == r.rid) continue;
                wire::SmartRegionHeader probe;
                probe.region_stack = wire::RegionStackSf{{}, {}, {dest}};
                std::vector<RegionPath> cands;
                try {
                    cands = resolve_stack(rgraph, r.rid, probe, EffortMode::minimal);
                } catch (const Error&) {
                    continue;  // unreachable destination
                }
                for (const RegionPath& c : cands) {
                    RegionId next = c.steps.front().rid;
                    for (const BorderWitness& w : rgraph.witnesses(r.rid, next))
                        for (VertexId sw : r.switches)
                            tables.at(sw).add_permanent(dest, RouteEntry{next, w.from_sw});
                }
            }
        }
    }

    void schedule(std::uint64_t at, Payload payload) {
        queue.push(QueuedEvent{at, next_seq++, std::move(payload)});
    }

    // --- region-level helpers -------------------------------------------

    std::uint64_t crossing_latency(RegionId a, RegionId b) const {
        std::uint64_t best = UINT64_MAX;
        for (const BorderWitness& w : rgraph.witnesses(a, b))
            best = std::min<std::uint64_t>(best, w.latency_us);
        return best;
    }

    std::uint64_t region_distance_us(RegionId from, RegionId to) const {
        std::map<RegionId, std::uint64_t> dist{{from, 0}};
        std::set<RegionId> settled;
        for (;;) {
            RegionId cur = kUnsetRegion;
            std::uint64_t cur_d = UINT64_MAX;
            for (const auto& [r, d] : dist)
                if (!settled.count(r) && d < cur_d) {
                    cur = r;
                    cur_d = d;
                }
            if (cur_d == UINT64_MAX) break;
            if (cur == to) return cur_d;
            settled.insert(cur);
            for (RegionId n : rgraph.neighbors(cur)) {
                std::uint64_t w = crossing_latency(cur, n);
                if (w == UINT64_MAX) continue;
                auto it = dist.find(n);
                if (it == dist.end() || cur_d + w < it->second) dist[n] = cur_d + w;
            }
        }
        return UINT64_MAX;
    }

    RegionId home_region(VertexId v) const {
        auto rids = decomp.regions_of(v);
        return rids.empty() ? kUnsetRegion : rids.front();
    }

    // --- packet transport ------------------------------------------------

    bool draw_loss(VertexId a, VertexId b, std::uint32_t loss_ppm) {
        if (loss_ppm == 0) return false;
        VertexId lo = std::min(a, b), hi = std::max(a, b);
        auto [it, inserted] = link_rng.try_emplace({lo, hi});
        if (inserted) it->second.seed(mix_seed(seed, lo, hi));
        return it->second() % 1'000'000 < loss_ppm;
    }

    void drop_packet(DropReason reason) { ++m.dropped[drop_reason_name(reason)]; }

    void hop(SimPacket pkt, VertexId to) {
        const Link* link = graph.find_link(pkt.at, to);
        if (!link) {
            // Link rewired mid-flight (migration); the destination is gone.
            drop_packet(graph.has_vertex(to) && graph.kind(to) == VertexKind::node
                            ? DropReason::stale_destination
                            : DropReason::no_path);
            return;
        }
        if (draw_loss(pkt.at, to, link->loss_ppm)) {
            drop_packet(DropReason::link_loss);
            return;
        }
        pkt.at = to;
        schedule(now + link->latency_us, ArrivalPayload{std::move(pkt)});
    }

    void take_next_hop(SimPacket pkt) {
        VertexId to = pkt.plan[pkt.plan_pos++];
        hop(std::move(pkt), to);
    }

    void deliver(SimPacket& pkt) {
        VertexId v = pkt.at;
        const auto& ids = pkt.pkt.header.ids;
        bool unique = true;
        if (ids && ids->flow_fid && ids->packet_pid)
            unique = node_seen[v].insert({*ids->flow_fid, *ids->packet_pid}).second;
        if (!unique) {
            ++m.redundant;
            return;
        }
        ++m.delivered;
        latencies.push_back(now - pkt.pkt.birth_time_us);
        ++m.hop_histogram[pkt.crossings];
        m.max_interregion_hops = std::max(m.max_interregion_hops, pkt.crossings);
        if (pkt.pkt.header.brs) {
            const auto& trail = pkt.pkt.header.brs->trail;
            std::set<RegionId> uniq(trail.begin(), trail.end());
            if (uniq.size() != trail.size()) ++m.brs_loop_violations;
        }
    }

    // Returns true when the stack was rewritten toward a migrated node.
    bool apply_redirect(SimPacket& pkt) {
        if (!pkt.pkt.header.ids || pkt.pkt.header.ids->receiver_nid == kUnsetVertex) return false;
        auto kit = knowledge.find(pkt.cur_region);
        if (kit == knowledge.end()) return false;
        auto rit = kit->second.redirects.find(pkt.pkt.header.ids->receiver_nid);
        if (rit == kit->second.redirects.end()) return false;
        auto& stack = pkt.pkt.header.region_stack;
        if (!stack || stack->stack.empty() || stack->stack.back() == rit->second) return false;
        stack->stack = {rit->second};
        pkt.plan.clear();
        pkt.plan_pos = 0;
        pkt.pending_region = pkt.cur_region;
        ++m.redirected_in_transition;
        return true;
    }

    // Old-region window handling for packets addressed to a migrated node.
    // Returns false when the packet was dropped.
    bool apply_transition_windows(SimPacket& pkt) {
        const auto& header = pkt.pkt.header;
        if (!header.ids || header.ids->receiver_nid == kUnsetVertex) return true;
        if (!header.region_stack || header.region_stack->stack.size() != 1) return true;
        RegionId top = header.region_stack->stack.front();
        bool covers;
        try {
            covers = rgraph.covers(top, pkt.cur_region);
        } catch (const Error&) {
            return true;
        }
        if (!covers) return true;
        VertexId receiver = header.ids->receiver_nid;
        const Region* live = decomp.find_region(pkt.cur_region);
        if (!live || live->has_node(receiver)) return true;
        auto mit = migrations.find(receiver);
        if (mit == migrations.end() || !mit->second.executed ||
            mit->second.spec.from != pkt.cur_region)
            return true;  // no record; normal routing will drop it
        MigrationState& rec = mit->second;
        VertexId sender = header.ids->sender_nid;
        if (now <= rec.notify_until && sender != kUnsetVertex &&
            !rec.notified_senders.count(sender)) {
            rec.notified_senders.insert(sender);
            RegionId sender_region = home_region(sender);
            if (sender_region != kUnsetRegion) {
                std::uint64_t d = region_distance_us(pkt.cur_region, sender_region);
                if (d != UINT64_MAX)
                    schedule(now + d, NotifyPayload{sender, receiver, rec.spec.to});
            }
        }
        if (now <= rec.fwd_until) {
            pkt.pkt.header.region_stack->stack = {rec.spec.to};
            ++m.forwarded_by_old_region;
            return true;
        }
        drop_packet(DropReason::stale_destination);
        return false;
    }

    void process_at_switch(SimPacket pkt) {
        for (;;) {
            if (pkt.inline_transitions > 64) {
                drop_packet(DropReason::no_path);
                return;
            }
            if (knobs.redirects) apply_redirect(pkt);
            if (pkt.plan_active()) {
                take_next_hop(std::move(pkt));
                return;
            }
            if (pkt.pending_region != kUnsetRegion && pkt.pending_region != pkt.cur_region) {
                pkt.cur_region = pkt.pending_region;
                ++pkt.crossings;
            }
            pkt.pending_region = kUnsetRegion;
            if (!apply_transition_windows(pkt)) return;

            SwitchContext ctx;
            ctx.switch_id = pkt.at;
            ctx.self_region = pkt.cur_region;
            ctx.graph = &graph;
            ctx.decomp = &decomp;
            ctx.rgraph = &rgraph;
            auto tit = tables.find(pkt.at);
            ctx.table = tit == tables.end() ? nullptr : &tit->second;
            ctx.world = &world;
            ctx.cache = knobs.flow_cache ? &caches[pkt.at] : nullptr;
            ctx.policy.refresh_interval_us = knobs.refresh_interval_us;
            ctx.policy.pull_ttl = knobs.pull_ttl;
            ctx.policy.effort = knobs.effort;
            ctx.instance_expansion = knobs.expand_instances;
            ctx.now_us = now;

            RoutingDecision d = route_packet(ctx, pkt.pkt.header, knobs.effort);
            switch (d.action) {
                case RouteAction::drop:
                    drop_packet(d.drop_reason);
                    return;
                case RouteAction::deliver_local:
                case RouteAction::forward_intra_region: {
                    pkt.pkt.header = d.updated_header;
                    VertexId target = d.receiver;
                    if (graph.find_link(pkt.at, target)) {
                        pkt.plan = {target};
                        pkt.plan_pos = 0;
                    } else {
                        const Region* live = decomp.find_region(pkt.cur_region);
                        if (!live) {
                            drop_packet(DropReason::no_path);
                            return;
                        }
                        try {
                            auto paths = intra_region_paths(*live, graph, pkt.at, target, 1);
                            pkt.plan.assign(paths.front().begin() + 1, paths.front().end());
                            pkt.plan_pos = 0;
                        } catch (const Error&) {
                            drop_packet(DropReason::no_path);
                            return;
                        }
                    }
                    pkt.pending_region = pkt.cur_region;
                    take_next_hop(std::move(pkt));
                    return;
                }
                case RouteAction::multicast_local: {
                    if (d.multicast_nodes.empty()) {
                        drop_packet(DropReason::receiver_not_in_region);
                        return;
                    }
                    m.copies_spawned += d.multicast_nodes.size() - 1;
                    for (VertexId n : d.multicast_nodes) {
                        SimPacket copy = pkt;
                        copy.pkt.header = d.updated_header;
                        copy.plan = {n};
                        copy.plan_pos = 0;
                        copy.pending_region = copy.cur_region;
                        take_next_hop(std::move(copy));
                    }
                    return;
                }
                case RouteAction::forward_inter_region: {
                    if (d.forwards.size() > 1) m.copies_spawned += d.forwards.size() - 1;
                    bool continue_inline = false;
                    SimPacket inline_pkt;
                    for (std::size_t i = 0; i < d.forwards.size(); ++i) {
                        const ForwardPlan& plan = d.forwards[i];
                        SimPacket copy = pkt;
                        copy.pkt.header = plan.header;
                        auto transit =
                            rgraph.intra_transit(pkt.cur_region, pkt.at, plan.egress_switch);
                        if (!transit.reachable) {
                            drop_packet(DropReason::no_path);
                            continue;
                        }
                        copy.plan.assign(transit.path.begin() + 1, transit.path.end());
                        if (plan.remote_entry_switch != plan.egress_switch)
                            copy.plan.push_back(plan.remote_entry_switch);
                        copy.plan_pos = 0;
                        copy.pending_region = plan.next_region;
                        if (copy.plan.empty()) {
                            // Shared-switch crossing: re-decide here in the
                            // next region without a link hop.
                            copy.inline_transitions = pkt.inline_transitions + 1;
                            continue_inline = true;
                            inline_pkt = std::move(copy);
                        } else {
                            take_next_hop(std::move(copy));
                        }
                    }
                    if (continue_inline) {
                        pkt = std::move(inline_pkt);
                        break;  // loop again in the new region
                    }
                    return;
                }
            }
        }
    }

    void process_arrival(SimPacket pkt) {
        pkt.pkt.hop_trace.push_back(pkt.at);
        if (graph.kind(pkt.at) == VertexKind::node) {
            deliver(pkt);
            return;
        }
        process_at_switch(std::move(pkt));
    }

    void process_injection(const InjectPayload& in) {
        FlowState& flow = flows[in.flow_idx];
        ++m.injected;

        Packet p;
        p.payload_size = flow.spec.size_bytes;
        p.birth_time_us = now;
        wire::SmartRegionHeader h;
        h.region_stack = wire::RegionStackSf{{}, {}, flow.current_stack};
        h.ids = wire::IdsSf{in.pid, flow.fid, flow.spec.src, flow.spec.dst};
        if (flow.spec.fission > 1)
            h.qos = wire::QosSf{{}, {}, {}, {},
                                static_cast<std::uint8_t>(std::min<unsigned>(flow.spec.fission, 15))};
        h.brs = wire::BrsSf{};
        p.header = std::move(h);

        SimPacket pkt;
        pkt.pkt = std::move(p);
        pkt.pkt.hop_trace.push_back(flow.spec.src);
        pkt.at = flow.spec.src;
        pkt.cur_region = home_region(flow.spec.src);
        if (pkt.cur_region == kUnsetRegion) {
            drop_packet(DropReason::no_path);
            return;
        }
        const Region& r = *decomp.find_region(pkt.cur_region);
        VertexId first_sw = kUnsetVertex;
        for (VertexId n : graph.neighbors(flow.spec.src)) {
            if (r.has_switch(n)) {
                first_sw = n;
                break;
            }
        }
        if (first_sw == kUnsetVertex) {
            drop_packet(DropReason::no_path);
            return;
        }
        pkt.plan = {first_sw};
        pkt.plan_pos = 0;
        pkt.pending_region = pkt.cur_region;
        take_next_hop(std::move(pkt));
    }

    // --- explorers and events ---------------------------------------------

    void process_explorer(const ExplorerPayload& e) {
        if (e.is_return) {
            RegionKnowledge& k = knowledge[e.origin];
            for (RegionId r : e.trail) k.learned_regions.insert(r);
            for (std::size_t i = 0; i + 1 < e.trail.size(); ++i)
                k.learned_adjacency.insert(
                    {std::min(e.trail[i], e.trail[i + 1]), std::max(e.trail[i], e.trail[i + 1])});
            ++m.explorer_returns;
            return;
        }
        if (e.launch) {
            std::uint32_t id = next_explorer_id++;
            knowledge[e.origin].learned_regions.insert(e.origin);
            for (RegionId n : rgraph.neighbors(e.origin)) {
                std::uint64_t w = crossing_latency(e.origin, n);
                if (w == UINT64_MAX) continue;
                schedule(now + w, ExplorerPayload{id, e.origin, n, {e.origin}, e.ttl, false, false});
            }
            return;
        }
        // Receipt at region e.at: stamp the trail, always return a copy,
        // replicate only on first sight so the flood stays bounded.
        std::vector<RegionId> trail = e.trail;
        trail.push_back(e.at);
        std::uint64_t back_latency = 0;
        for (std::size_t i = 0; i + 1 < trail.size(); ++i) {
            std::uint64_t w = crossing_latency(trail[i], trail[i + 1]);
            if (w != UINT64_MAX) back_latency += w;
        }
        schedule(now + back_latency,
                 ExplorerPayload{e.id, e.origin, e.origin, trail, e.ttl, false, true});

        if (!explorer_seen.insert({e.id, e.at}).second) {
            ++m.explorer_suppressed;
            return;
        }
        if (e.ttl - 1 <= 0) {
            ++m.explorer_absorbed;
            return;
        }
        for (RegionId n : rgraph.neighbors(e.at)) {
            if (std::find(trail.begin(), trail.end(), n) != trail.end()) continue;
            std::uint64_t w = crossing_latency(e.at, n);
            if (w == UINT64_MAX) continue;
            schedule(now + w, ExplorerPayload{e.id, e.origin, n, trail, e.ttl - 1, false, false});
        }
    }

    void process_event_packet(const EventPktPayload& ev) {
        auto key = std::make_tuple(ev.pkt.origin_region, ev.pkt.change.seq, ev.at);
        if (!event_seen.insert(key).second) return;
        for (VertexId sw : rgraph.region(ev.at).switches) {
            auto it = tables.find(sw);
            if (it != tables.end()) it->second.apply_change(ev.pkt.change);
        }
        auto emit_it = event_emit_time.find({ev.pkt.origin_region, ev.pkt.change.seq});
        if (emit_it != event_emit_time.end())
            m.table_convergence_us = std::max(m.table_convergence_us, now - emit_it->second);
        for (RegionId n : rgraph.neighbors(ev.at)) {
            std::uint64_t w = crossing_latency(ev.at, n);
            if (w == UINT64_MAX) continue;
            schedule(now + w, EventPktPayload{n, ev.pkt});
        }
    }

    void process_redirect(const RedirectPayload& rp) {
        if (!redirect_seen.insert({rp.node, rp.seq, rp.at}).second) return;
        knowledge[rp.at].redirects[rp.node] = rp.to;
        for (RegionId n : rgraph.neighbors(rp.at)) {
            std::uint64_t w = crossing_latency(rp.at, n);
            if (w == UINT64_MAX) continue;
            schedule(now + w, RedirectPayload{rp.node, rp.to, rp.seq, n});
        }
    }

    void process_migration(const MigrationSpec& spec) {
        const Region* from = decomp.find_region(spec.from);
        const Region* to = decomp.find_region(spec.to);
        if (!from || !to) throw Error(Errc::unknown_region, "migration region");
        if (!from->has_node(spec.node))
            throw Error(Errc::node_not_in_region, std::to_string(spec.node));

        for (VertexId sw : from->switches) graph.remove_link(spec.node, sw);
        for (VertexId sw : to->switches)
            if (!graph.find_link(spec.node, sw)) graph.add_link(Link{spec.node, sw});

        for (Region& r : decomp.regions) {
            if (r.rid == spec.from)
                r.nodes.erase(std::remove(r.nodes.begin(), r.nodes.end(), spec.node), r.nodes.end());
            if (r.rid == spec.to) {
                r.nodes.insert(std::lower_bound(r.nodes.begin(), r.nodes.end(), spec.node),
                               spec.node);
            }
        }

        MigrationState& rec = migrations[spec.node];
        rec.spec = spec;
        rec.executed = true;
        rec.fwd_until = now + knobs.t_fwd_us;
        rec.notify_until = now + knobs.t_notify_us;
        schedule(rec.fwd_until, WindowPayload{spec.node, true});
        schedule(rec.notify_until, WindowPayload{spec.node, false});

        if (knobs.redirects) {
            std::uint64_t rseq = next_redirect_seq++;
            schedule(now, RedirectPayload{spec.node, spec.to, rseq, spec.to});
        }
    }

    void process_notify(const NotifyPayload& np) {
        ++m.notify_messages;
        for (FlowState& f : flows)
            if (f.spec.src == np.sender && f.spec.dst == np.node) f.current_stack = {np.to};
    }

    void process_tick() {
        for (auto& [sw, table] : tables) table.tick(now);
        if (!queue.empty()) schedule(now + knobs.refresh_interval_us, TickPayload{});
    }

    void run() {
        while (!queue.empty()) {
            QueuedEvent ev = queue.top();
            queue.pop();
            now = ev.time;
            std::visit(
                [&](auto&& payload) {
                    using T = std::decay_t<decltype(payload)>;
                    if constexpr (std::is_same_v<T, InjectPayload>) process_injection(payload);
                    else if constexpr (std::is_same_v<T, ArrivalPayload>)
                        process_arrival(std::move(payload.pkt));
                    else if constexpr (std::is_same_v<T, TickPayload>) process_tick();
                    else if constexpr (std::is_same_v<T, ExplorerPayload>) process_explorer(payload);
                    else if constexpr (std::is_same_v<T, EventPktPayload>)
                        process_event_packet(payload);
                    else if constexpr (std::is_same_v<T, MigrationPayload>)
                        process_migration(payload.spec);
                    else if constexpr (std::is_same_v<T, WindowPayload>) (void)payload;
                    else if constexpr (std::is_same_v<T, RedirectPayload>) process_redirect(payload);
                    else if constexpr (std::is_same_v<T, NotifyPayload>) process_notify(payload);
                },
                ev.payload);
        }
        finalize();
    }

    void finalize() {
        std::uint64_t created = m.injected + m.copies_spawned;
        std::uint64_t terminated = m.delivered + m.redundant + m.dropped_total();
        m.in_flight_end = created >= terminated ? created - terminated : 0;
        if (!latencies.empty()) {
            std::sort(latencies.begin(), latencies.end());
            std::uint64_t sum = 0;
            for (std::uint64_t l : latencies) sum += l;
            m.mean_latency_us = sum / latencies.size();
            auto pct = [&](double q) {
                std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(latencies.size() - 1));
                return latencies[idx];
            };
            m.p50_latency_us = pct(0.50);
            m.p95_latency_us = pct(0.95);
            m.p99_latency_us = pct(0.99);
        }
    }
};

Simulation::Simulation(NetworkGraph graph, RegionDecomposition decomp, SimKnobs knobs,
                       std::uint64_t seed)
    : impl_(std::make_unique<Impl>(std::move(graph), std::move(decomp), knobs, seed)) {}

Simulation::~Simulation() = default;

void Simulation::add_flow(const FlowSpec& flow) {
    FlowState state;
    state.spec = flow;
    state.fid = static_cast<std::uint16_t>((impl_->flows.size() + 1) & 0xFFF);
    if (!flow.stack.empty()) {
        state.current_stack = flow.stack;
    } else {
        if (flow.dst == kUnsetVertex)
            throw Error(Errc::config_error, "multicast flow needs an explicit stack");
        auto rids = impl_->decomp.regions_of(flow.dst);
        if (rids.empty())
            throw Error(Errc::config_error, "flow destination has no hosting region");
        state.current_stack = {rids.front()};
    }
    if (flow.rate_pps == 0 || flow.rate_pps > 1'000'000)
        throw Error(Errc::config_error, "rate_pps must be 1..1000000");
    std::size_t idx = impl_->flows.size();
    impl_->flows.push_back(std::move(state));
    std::uint64_t step = 1'000'000 / flow.rate_pps;
    std::uint16_t pid = 0;
    for (std::uint64_t t = 0; t < impl_->knobs.duration_us; t += step) {
        impl_->schedule(t, InjectPayload{idx, static_cast<std::uint16_t>(pid & 0xFFF)});
        ++pid;
    }
}

void Simulation::schedule_migration(const MigrationSpec& mspec) {
    if (!impl_->decomp.find_region(mspec.from) || !impl_->decomp.find_region(mspec.to))
        throw Error(Errc::unknown_region, "migration endpoints");
    impl_->schedule(mspec.at_us, MigrationPayload{mspec});
}

void Simulation::schedule_explorer(const ExplorerSpec& espec) {
    int ttl = espec.ttl > 0 ? espec.ttl : impl_->knobs.explorer_ttl;
    if (espec.all_regions) {
        for (RegionId rid : impl_->rgraph.region_ids())
            impl_->schedule(espec.at_us, ExplorerPayload{0, rid, rid, {}, ttl, true, false});
        return;
    }
    if (!impl_->rgraph.has_region(espec.origin))
        throw Error(Errc::unknown_region, std::to_string(espec.origin));
    impl_->schedule(espec.at_us, ExplorerPayload{0, espec.origin, espec.origin, {}, ttl, true, false});
}

void Simulation::schedule_event(const EventSpec& espec) {
    if (!impl_->rgraph.has_region(espec.origin))
        throw Error(Errc::unknown_region, std::to_string(espec.origin));
    std::uint64_t seq = impl_->next_event_seq++;
    impl_->event_emit_time[{espec.origin, seq}] = espec.at_us;
    EventPacket pkt;
    pkt.origin_region = espec.origin;
    pkt.change = ChangeNotice{espec.kind, espec.subject, espec.origin, seq};
    impl_->schedule(espec.at_us, EventPktPayload{espec.origin, pkt});
}

void Simulation::run() {
    if (impl_->ran) throw Error(Errc::config_error, "simulation already ran");
    impl_->ran = true;
    impl_->run();
}

const Metrics& Simulation::metrics() const { return impl_->m; }
const RegionGraph& Simulation::region_graph() const { return impl_->rgraph; }
const NetworkGraph& Simulation::graph() const { return impl_->graph; }
const RegionDecomposition& Simulation::decomposition() const { return impl_->decomp; }

std::vector<RegionId> Simulation::learned_regions(RegionId rid) const {
    auto it = impl_->knowledge.find(rid);
    if (it == impl_->knowledge.end()) return {};
    return {it->second.learned_regions.begin(), it->second.learned_regions.end()};
}

std::vector<std::pair<RegionId, RegionId>> Simulation::learned_adjacency(RegionId rid) const {
    auto it = impl_->knowledge.find(rid);
    if (it == impl_->knowledge.end()) return {};
    return {it->second.learned_adjacency.begin(), it->second.learned_adjacency.end()};
}

const RegionRoutingTable* Simulation::table(VertexId sw) const {
    auto it = impl_->tables.find(sw);
    return it == impl_->tables.end() ? nullptr : &it->second;
}

Metrics run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
    Simulation sim(config.graph, config.decomp, config.knobs, seed);
    for (const FlowSpec& f : config.flows) sim.add_flow(f);
    for (const MigrationSpec& mi : config.migrations) sim.schedule_migration(mi);
    for (const ExplorerSpec& e : config.explorers) sim.schedule_explorer(e);
    for (const EventSpec& e : config.events) sim.schedule_event(e);
    sim.run();
    return sim.metrics();
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::config_error, "cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::vector<RegionId> parse_rid_list(const std::string& tok) {
    std::vector<RegionId> out;
    std::istringstream ts(tok);
    std::string cur;
    while (std::getline(ts, cur, ','))
        out.push_back(static_cast<RegionId>(std::stoul(cur)));
    return out;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir) {
    ScenarioConfig cfg;
    bool have_topology = false, have_regions = false;
    std::istringstream is{std::string(text)};
    std::string line;
    int line_no = 0;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        if (fp.is_absolute()) return fp.string();
        return (std::filesystem::path(base_dir) / fp).lexically_normal().string();
    };
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string tok;
        while (ls >> tok) toks.push_back(tok);
        if (toks.empty()) continue;
        auto bad = [&](const std::string& why) {
            return Error(Errc::malformed_line, "line " + std::to_string(line_no) + ": " + why);
        };
        if (toks[0] == "topology" && toks.size() == 2) {
            cfg.graph = parse_topology(read_file(resolve(toks[1])));
            have_topology = true;
        } else if (toks[0] == "regions" && toks.size() == 2) {
            cfg.decomp = parse_decomposition(read_file(resolve(toks[1])));
            have_regions = true;
        } else if (toks[0] == "flow") {
            // flow <src> <dst|0> rate_pps <n> size <bytes> fission <k> [stack <rid,...>]
            if (toks.size() < 8) throw bad("flow needs src dst rate_pps n size b fission k");
            FlowSpec f;
            f.src = static_cast<VertexId>(std::stoul(toks[1]));
            f.dst = static_cast<VertexId>(std::stoul(toks[2]));
            for (std::size_t i = 3; i + 1 < toks.size(); i += 2) {
                if (toks[i] == "rate_pps") f.rate_pps = static_cast<std::uint32_t>(std::stoul(toks[i + 1]));
                else if (toks[i] == "size") f.size_bytes = static_cast<std::uint32_t>(std::stoul(toks[i + 1]));
                else if (toks[i] == "fission") f.fission = static_cast<unsigned>(std::stoul(toks[i + 1]));
                else if (toks[i] == "stack") f.stack = parse_rid_list(toks[i + 1]);
                else throw bad("unknown flow attribute '" + toks[i] + "'");
            }
            cfg.flows.push_back(std::move(f));
        } else if (toks[0] == "migrate") {
            // migrate <nid> <from-rid> <to-rid> at_ms <t>
            if (toks.size() != 6 || toks[4] != "at_ms") throw bad("migrate <nid> <from> <to> at_ms <t>");
            MigrationSpec mi;
            mi.node = static_cast<VertexId>(std::stoul(toks[1]));
            mi.from = static_cast<RegionId>(std::stoul(toks[2]));
            mi.to = static_cast<RegionId>(std::stoul(toks[3]));
            mi.at_us = std::stoull(toks[5]) * 1000;
            cfg.migrations.push_back(mi);
        } else if (toks[0] == "explorer") {
            // explorer <origin|all> at_ms <t> [ttl <n>]
            if (toks.size() < 4 || toks[2] != "at_ms") throw bad("explorer <origin|all> at_ms <t> [ttl n]");
            ExplorerSpec e;
            if (toks[1] == "all") e.all_regions = true;
            else e.origin = static_cast<RegionId>(std::stoul(toks[1]));
            e.at_us = std::stoull(toks[3]) * 1000;
            e.ttl = 0;
            if (toks.size() == 6 && toks[4] == "ttl") e.ttl = std::stoi(toks[5]);
            else if (toks.size() != 4) throw bad("explorer trailing tokens");
            cfg.explorers.push_back(e);
        } else if (toks[0] == "event") {
            // event <origin> <added|removed|changed> <subject> at_ms <t>
            if (toks.size() != 6 || toks[4] != "at_ms")
                throw bad("event <origin> <kind> <subject> at_ms <t>");
            EventSpec e;
            e.origin = static_cast<RegionId>(std::stoul(toks[1]));
            if (toks[2] == "added") e.kind = ChangeNotice::Kind::region_added;
            else if (toks[2] == "removed") e.kind = ChangeNotice::Kind::region_removed;
            else if (toks[2] == "changed") e.kind = ChangeNotice::Kind::membership_changed;
            else throw bad("unknown event kind '" + toks[2] + "'");
            e.subject = static_cast<RegionId>(std::stoul(toks[3]));
            e.at_us = std::stoull(toks[5]) * 1000;
            cfg.events.push_back(e);
        } else if (toks[0] == "set") {
            if (toks.size() < 3) throw bad("set <knob> <value>");
            const std::string& knob = toks[1];
            auto on_off = [&](const std::string& v) {
                if (v == "on") return true;
                if (v == "off") return false;
                throw bad("expected on|off");
            };
            if (knob == "duration_ms") cfg.knobs.duration_us = std::stoull(toks[2]) * 1000;
            else if (knob == "effort")
                cfg.knobs.effort = toks[2] == "maximal" ? EffortMode::maximal : EffortMode::minimal;
            else if (knob == "tables") cfg.knobs.consistent_tables = toks[2] == "consistent";
            else if (knob == "t_fwd_ms") cfg.knobs.t_fwd_us = std::stoull(toks[2]) * 1000;
            else if (knob == "t_notify_ms") cfg.knobs.t_notify_us = std::stoull(toks[2]) * 1000;
            else if (knob == "redirects") cfg.knobs.redirects = on_off(toks[2]);
            else if (knob == "pull_ttl") cfg.knobs.pull_ttl = std::stoi(toks[2]);
            else if (knob == "refresh_interval_ms")
                cfg.knobs.refresh_interval_us = std::stoull(toks[2]) * 1000;
            else if (knob == "expand_instances") cfg.knobs.expand_instances = on_off(toks[2]);
            else if (knob == "explorer_ttl") cfg.knobs.explorer_ttl = std::stoi(toks[2]);
            else if (knob == "flow_cache") cfg.knobs.flow_cache = on_off(toks[2]);
            else if (knob == "link_loss") {
                if (toks.size() != 5) throw bad("set link_loss <a> <b> <ppm>");
                cfg.knobs.loss_overrides.push_back(
                    LossOverride{static_cast<VertexId>(std::stoul(toks[2])),
                                 static_cast<VertexId>(std::stoul(toks[3])),
                                 static_cast<std::uint32_t>(std::stoul(toks[4]))});
            } else {
                throw bad("unknown knob '" + knob + "'");
            }
        } else {
            throw bad("unknown statement '" + toks[0] + "'");
        }
    }
    if (!have_topology || !have_regions)
        throw Error(Errc::config_error, "scenario needs topology and regions lines");
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::filesystem::path p(path);
    return parse_scenario(read_file(path), p.parent_path().string());
}

}  // namespace smartregion::sim
