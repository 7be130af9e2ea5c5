#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smartregion/region_map.hpp"
#include "smartregion/wire.hpp"

namespace smartregion {

enum class EffortMode { minimal, maximal };

struct PolicyConfig {
    std::uint64_t refresh_interval_us{100'000};
    int pull_ttl{8};
    EffortMode effort{EffortMode::minimal};
};

struct RouteEntry {
    RegionId next{};
    VertexId border{};

    bool operator==(const RouteEntry&) const = default;
    auto operator<=>(const RouteEntry&) const = default;
};

struct ChangeNotice {
    enum class Kind { region_added, region_removed, membership_changed };
    Kind kind{Kind::membership_changed};
    RegionId region{};
    RegionId origin{};
    std::uint64_t seq{};
};

// Per-switch table: destination rid -> (next region, border switch)
// candidates. The permanent section is preset and never evicted; the
// dynamic section ages out and reacts to change notices.
class RegionRoutingTable {
public:
    RegionRoutingTable() = default;
    RegionRoutingTable(VertexId owner, RegionId self_region,
                       std::uint64_t refresh_interval_us = 100'000)
        : owner_(owner), self_region_(self_region), refresh_interval_us_(refresh_interval_us) {}

    VertexId owner_switch() const { return owner_; }
    RegionId self_region() const { return self_region_; }

    void add_permanent(RegionId dest, RouteEntry entry);
    void add_dynamic(RegionId dest, RouteEntry entry, std::uint64_t now_us);
    // Remembers an unreachable destination for a tenth of the refresh interval.
    void add_negative(RegionId dest, std::uint64_t now_us);
    bool has_fresh_negative(RegionId dest, std::uint64_t now_us) const;
    bool has_permanent(RegionId dest) const;

    // Permanent entries first, then unexpired dynamic ones.
    std::vector<RouteEntry> lookup_next_regions(RegionId dest, std::uint64_t now_us) const;

    // Periodic tick: expire dynamic entries older than the refresh interval.
    void tick(std::uint64_t now_us);
    // Drop dynamic entries routed via or destined to the changed region.
    void apply_change(const ChangeNotice& notice);

    std::uint64_t version() const { return version_; }
    std::uint64_t refresh_interval_us() const { return refresh_interval_us_; }
    const std::map<RegionId, std::vector<RouteEntry>>& permanent() const { return permanent_; }

private:
    struct DynamicEntry {
        RouteEntry entry;
        std::uint64_t refreshed_at_us{0};
    };
    struct NegativeEntry {
        std::uint64_t cached_at_us{0};
    };

    VertexId owner_{};
    RegionId self_region_{};
    std::uint64_t refresh_interval_us_{100'000};
    std::map<RegionId, std::vector<RouteEntry>> permanent_;
    std::map<RegionId, std::vector<DynamicEntry>> dynamic_;
    std::map<RegionId, NegativeEntry> negative_;
    std::uint64_t version_{0};
};

// `route <dest-rid> via <next-rid> border <switch-id>` lines.
std::string dump_permanent(const RegionRoutingTable& table);
void load_permanent(RegionRoutingTable& table, std::string_view text);

// `key=value` lines: refresh_interval_ms, pull_ttl, effort_mode.
PolicyConfig parse_policy(std::string_view text);

// Shared view over every switch table, for the recursive pull protocol.
struct TableWorld {
    const RegionGraph* rgraph{};
    std::map<VertexId, RegionRoutingTable>* tables{};
    std::uint64_t* pull_counter{};
};

// Recursive breadth-first pull of a missing destination, bounded by a TTL
// in regions. Found entries are merged into the dynamic section of every
// switch table of self_region; an empty result is cached as negative.
std::vector<RouteEntry> pull_missing_entry(TableWorld& world, RegionId self_region,
                                           RegionId dest, int ttl, std::uint64_t now_us);

// Resolves a region stack at a switch of self_region into candidate paths.
//   minimal: first regions of min-hop paths toward the top-of-stack
//            waypoint, as one-step paths;
//   maximal: every minimum-hop simple path honoring all stack rids as
//            ordered waypoints (an HCR rid is satisfied by any member leaf).
// Leading stack entries already covering self_region are skipped.
std::vector<RegionPath> resolve_stack(const RegionGraph& rgraph, RegionId self_region,
                                      const wire::SmartRegionHeader& header, EffortMode mode,
                                      bool instance_expansion = false);

struct Selection {
    std::vector<RegionPath> chosen;  // best first
    bool best_effort_fallback{false};
};

// Orders candidates by (latency, loss, rids), drops those violating the
// header's QoS buckets, then picks up to fission_rate paths preferring
// region-disjoint sets. When the QoS filter eliminates everything the best
// unfiltered candidate is returned with the fallback flag set.
Selection select_next_region(std::span<const RegionPath> candidates,
                             const std::optional<wire::QosSf>& qos, unsigned fission_rate);

enum class RouteAction {
    forward_inter_region,
    forward_intra_region,
    deliver_local,
    multicast_local,
    drop,
};

enum class DropReason {
    none,
    empty_stack,
    unknown_rid,
    no_path,
    receiver_not_in_region,
    brs_loop,
    link_loss,
    stale_destination,
};

const char* drop_reason_name(DropReason r);

struct ForwardPlan {
    RegionPath path;
    wire::SmartRegionHeader header;
    RegionId next_region{};
    VertexId egress_switch{};
    VertexId remote_entry_switch{};
};

struct RoutingDecision {
    RouteAction action{RouteAction::drop};
    DropReason drop_reason{DropReason::none};
    std::vector<ForwardPlan> forwards;           // fission > 1 => several
    VertexId receiver{};                         // deliver_local
    std::vector<VertexId> multicast_nodes;       // multicast_local
    wire::SmartRegionHeader updated_header;
    bool best_effort_fallback{false};

    RegionId next_region() const { return forwards.empty() ? kUnsetRegion : forwards.front().next_region; }
    VertexId egress_switch() const { return forwards.empty() ? kUnsetVertex : forwards.front().egress_switch; }
    std::vector<RegionPath> chosen_paths() const;
};

// Cached per-flow routing results, invalidated by table version changes.
class FlowCache {
public:
    struct Key {
        std::uint16_t fid{};
        std::vector<RegionId> stack;
        std::vector<RegionId> trail;  // BRS state feeds the loop filter
        EffortMode mode{};
        auto operator<=>(const Key&) const = default;
    };
    const Selection* find(const Key& key, std::uint64_t table_version) const;
    void store(Key key, Selection selection, std::uint64_t table_version);

private:
    struct Entry {
        Selection selection;
        std::uint64_t table_version{};
    };
    std::map<Key, Entry> entries_;
};

struct SwitchContext {
    VertexId switch_id{};
    RegionId self_region{};
    const NetworkGraph* graph{};
    const RegionDecomposition* decomp{};
    const RegionGraph* rgraph{};
    RegionRoutingTable* table{};   // optional
    TableWorld* world{};           // optional, enables pulls
    FlowCache* cache{};            // optional
    PolicyConfig policy{};
    bool instance_expansion{false};
    std::uint64_t now_us{0};
};

// The stationary routing procedure at one switch. Pops stack entries
// covering the local region, delivers or multicasts in the destination
// region (QoS SF ignored there), otherwise resolves candidates, applies
// QoS selection and fission, stamps BRS, and emits forward plans.
RoutingDecision route_packet(SwitchContext& ctx, const wire::SmartRegionHeader& header,
                             EffortMode mode);

// Up to k loop-free intra-region paths from a switch to a switch or node
// of the same region, (latency, lexicographic) order. Interior vertices
// are always switches.
std::vector<std::vector<VertexId>> intra_region_paths(const Region& region,
                                                      const NetworkGraph& graph,
                                                      VertexId ingress, VertexId target,
                                                      std::size_t k);

}  // namespace smartregion
