#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smartregion/regions.hpp"

namespace smartregion {

struct QosMeasures {
    std::uint64_t path_latency_us{0};
    double path_loss{0.0};          // composed probability, 0..1
    std::uint32_t hop_count{0};     // regions on the path past the origin

    bool operator==(const QosMeasures&) const = default;
};

// One crossing between adjacent regions. from_sw == to_sw for a shared
// switch (zero-cost crossing).
struct BorderWitness {
    VertexId from_sw{};
    VertexId to_sw{};
    std::uint32_t latency_us{0};
    std::uint32_t loss_ppm{0};
};

// A concrete intra-region switch path, labelled P1, P2, ... in
// (latency, lexicographic) order.
struct RegionInstance {
    RegionId region{};
    std::string path_label;
    std::vector<VertexId> switch_path;
    std::uint64_t latency_us{0};
    double loss{0.0};
};

struct PathStep {
    RegionId rid{};
    std::optional<std::uint32_t> instance;  // 1-based label index, "P<k>"

    bool operator==(const PathStep&) const = default;
};

// Region sequence from just past the source region up to and including the
// destination region; matches the region-stack contents a packet carries.
struct RegionPath {
    std::vector<PathStep> steps;
    QosMeasures qos;

    std::vector<RegionId> rids() const;
    bool operator==(const RegionPath& o) const { return steps == o.steps; }
};

// Region-level view of a decomposition: leaf regions as vertices, switch
// crossings as edges. Adjacency via shared nodes only (no switch-level
// crossing) is not representable as a border witness and is not recorded;
// routing is restricted to switches.
class RegionGraph {
public:
    RegionGraph() = default;

    const std::vector<RegionId>& region_ids() const { return ids_; }
    bool has_region(RegionId rid) const;
    const Region& region(RegionId rid) const;
    std::vector<RegionId> neighbors(RegionId rid) const;
    std::vector<BorderWitness> witnesses(RegionId from, RegionId to) const;
    bool adjacent(RegionId a, RegionId b) const;

    // Resolves a stack/waypoint rid to leaf regions: the rid itself for a
    // leaf, the flattened leaf set for an HCR. Throws UnknownRid/AmbiguousRid.
    std::vector<RegionId> resolve_to_leaves(RegionId rid) const;
    bool covers(RegionId waypoint_rid, RegionId leaf) const;

    struct Transit {
        bool reachable{false};
        std::uint64_t latency_us{0};
        double loss{0.0};
        std::vector<VertexId> path;  // switch sequence, from..to inclusive
    };
    // Shortest intra-region transit between two switches of a region.
    Transit intra_transit(RegionId rid, VertexId from_sw, VertexId to_sw) const;

    // All distinct intra-region switch paths of `immediate` usable between
    // `origin` and `next`, in (latency, lexicographic) order.
    std::vector<RegionInstance> instances_between(RegionId origin, RegionId immediate,
                                                  RegionId next) const;

    const std::map<RegionId, std::vector<RegionId>>& hcr_leaves() const { return hcr_leaves_; }

    std::map<RegionId, std::uint32_t> hop_distances(RegionId from) const;

    friend RegionGraph build_region_graph(const NetworkGraph&, const RegionDecomposition&);

private:
    using IntraAdjacency =
        std::map<VertexId, std::vector<std::tuple<VertexId, std::uint32_t, std::uint32_t>>>;

    std::vector<RegionId> ids_;
    std::map<RegionId, Region> regions_;
    std::map<std::pair<RegionId, RegionId>, std::vector<BorderWitness>> adj_;  // both orientations
    std::map<RegionId, IntraAdjacency> intra_adj_;
    std::map<RegionId, std::map<std::pair<VertexId, VertexId>, Transit>> transit_;
    std::map<RegionId, std::vector<RegionId>> hcr_leaves_;
    std::map<RegionId, int> rid_multiplicity_;
};

RegionGraph build_region_graph(const NetworkGraph& graph, const RegionDecomposition& decomp);

struct RegionMapEntry {
    PathStep immediate;
    QosMeasures qos;
};

struct RegionMap {
    RegionId origin{};
    // destination rid (leaf, or covering HCR when depth-filtered) -> entries,
    // best QoS first.
    std::map<RegionId, std::vector<RegionMapEntry>> entries;
};

RegionMap generate_region_map(const RegionGraph& rgraph, RegionId origin,
                              bool instance_expansion,
                              std::optional<std::uint32_t> visibility_depth = {});

// Up to k loop-free region paths ordered by (hop count, latency, rids).
std::vector<RegionPath> k_region_paths(const RegionGraph& rgraph, RegionId src, RegionId dst,
                                       std::size_t k, bool instance_expansion = false);

// Distinct switch-simple paths ingress->egress inside the region.
std::vector<RegionInstance> expand_region_instances(const Region& region,
                                                    const NetworkGraph& graph,
                                                    VertexId ingress, VertexId egress);

// QoS of a concrete region path leaving `origin`; first_instance pins the
// intra-region path used inside the first step. Returns nullopt when the
// border structure cannot realize the path.
std::optional<QosMeasures> region_path_qos(const RegionGraph& rgraph, RegionId origin,
                                           std::span<const RegionId> path,
                                           const RegionInstance* first_instance = nullptr);

// `map <origin>: <dst> -> <immediate>[@<instance>] lat=<us> loss=<ppm> hops=<n>`
std::string dump_region_map(const RegionMap& map);

}  // namespace smartregion
