#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "smartregion/routing.hpp"

namespace smartregion::sim {

struct Packet {
    wire::SmartRegionHeader header;
    std::uint32_t payload_size{0};
    std::uint64_t birth_time_us{0};
    std::vector<VertexId> hop_trace;
};

struct ExplorerPacket {
    std::uint32_t explorer_id{};
    RegionId origin_region{};
    std::vector<RegionId> trail;  // regions traversed, origin first
    int ttl{};
};

struct EventPacket {
    RegionId origin_region{};
    ChangeNotice change;
};

struct FlowSpec {
    VertexId src{};
    VertexId dst{};  // 0 = unset receiver (multicast); requires explicit stack
    std::uint32_t rate_pps{1};
    std::uint32_t size_bytes{0};
    unsigned fission{1};
    std::vector<RegionId> stack;  // empty = resolve dst's hosting region
};

struct MigrationSpec {
    VertexId node{};
    RegionId from{};
    RegionId to{};
    std::uint64_t at_us{};
};

struct ExplorerSpec {
    RegionId origin{};  // ignored when all_regions
    std::uint64_t at_us{};
    int ttl{16};
    bool all_regions{false};
};

struct EventSpec {
    RegionId origin{};
    ChangeNotice::Kind kind{ChangeNotice::Kind::membership_changed};
    RegionId subject{};
    std::uint64_t at_us{};
};

struct LossOverride {
    VertexId a{};
    VertexId b{};
    std::uint32_t loss_ppm{};
};

struct SimKnobs {
    std::uint64_t duration_us{1'000'000};
    EffortMode effort{EffortMode::minimal};
    bool consistent_tables{true};
    std::uint64_t t_fwd_us{50'000};
    std::uint64_t t_notify_us{200'000};  // must stay > t_fwd_us
    bool redirects{true};
    int pull_ttl{8};
    std::uint64_t refresh_interval_us{100'000};
    bool expand_instances{false};
    int explorer_ttl{16};
    bool flow_cache{true};
    std::vector<LossOverride> loss_overrides;
};

struct ScenarioConfig {
    NetworkGraph graph;
    RegionDecomposition decomp;
    std::vector<FlowSpec> flows;
    std::vector<MigrationSpec> migrations;
    std::vector<ExplorerSpec> explorers;
    std::vector<EventSpec> events;
    SimKnobs knobs;
};

// Scenario text: topology/regions file references, then flow/migrate/
// explorer/event statements and `set <knob> ...` lines.
ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir);
ScenarioConfig load_scenario(const std::string& path);

struct Metrics {
    std::uint64_t injected{};
    std::uint64_t copies_spawned{};  // fission copies + multicast fan-out
    std::uint64_t delivered{};
    std::uint64_t redundant{};       // deduplicated RedunCast copies
    std::map<std::string, std::uint64_t> dropped;
    std::uint64_t in_flight_end{};
    std::uint64_t mean_latency_us{};
    std::uint64_t p50_latency_us{};
    std::uint64_t p95_latency_us{};
    std::uint64_t p99_latency_us{};
    std::uint32_t max_interregion_hops{};
    std::map<std::uint32_t, std::uint64_t> hop_histogram;
    std::uint64_t brs_loop_violations{};
    std::uint64_t redirected_in_transition{};
    std::uint64_t forwarded_by_old_region{};
    std::uint64_t notify_messages{};
    std::uint64_t table_convergence_us{};
    std::uint64_t explorer_returns{};
    std::uint64_t explorer_absorbed{};
    std::uint64_t explorer_suppressed{};
    std::uint64_t pulls{};

    std::uint64_t dropped_total() const;
    std::string to_csv() const;
};

// Deterministic discrete-event simulation. Events are processed in
// (time, sequence) order; link loss draws come from per-link generators
// seeded from (seed, link), so identical (scenario, seed) runs produce
// identical traces. Owns working copies of the graph and decomposition;
// node migration rewires them in place.
class Simulation {
public:
    Simulation(NetworkGraph graph, RegionDecomposition decomp, SimKnobs knobs,
               std::uint64_t seed);
    ~Simulation();

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    void add_flow(const FlowSpec& flow);
    void schedule_migration(const MigrationSpec& m);
    void schedule_explorer(const ExplorerSpec& e);
    void schedule_event(const EventSpec& e);

    void run();

    const Metrics& metrics() const;
    const RegionGraph& region_graph() const;
    const NetworkGraph& graph() const;
    const RegionDecomposition& decomposition() const;

    // Explorer-learned knowledge of a region.
    std::vector<RegionId> learned_regions(RegionId rid) const;
    std::vector<std::pair<RegionId, RegionId>> learned_adjacency(RegionId rid) const;
    const RegionRoutingTable* table(VertexId sw) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Metrics run_scenario(const ScenarioConfig& config, std::uint64_t seed);

// One packet copy per chosen forward plan, headers already rewritten.
std::vector<Packet> apply_fission(const RoutingDecision& decision, const Packet& base);

}  // namespace smartregion::sim
