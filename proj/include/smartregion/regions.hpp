#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smartregion/topology.hpp"

namespace smartregion {

// 16-bit region id. 0 reserved as unset. Not required to be globally
// unique, only unambiguous along a root->leaf path.
using RegionId = std::uint16_t;

inline constexpr RegionId kUnsetRegion = 0;

enum class Variant { disagg, reach };

struct Region {
    RegionId rid{};
    std::vector<VertexId> switches;  // sorted, nonempty
    std::vector<VertexId> nodes;     // sorted

    bool contains(VertexId v) const;
    bool has_switch(VertexId v) const;
    bool has_node(VertexId v) const;
    std::vector<VertexId> members() const;  // sorted union
};

struct HighLevelRegion {
    RegionId rid{};
    std::vector<RegionId> children;  // rids of leaf regions or other HCRs, sorted
};

using RegionRef = std::variant<const Region*, const HighLevelRegion*>;

struct RegionDecomposition {
    Variant variant{Variant::disagg};
    std::vector<Region> regions;         // leaf CFRs, sorted by rid
    std::vector<HighLevelRegion> hcrs;   // sorted by rid

    const Region* find_region(RegionId rid) const;
    const HighLevelRegion* find_hcr(RegionId rid) const;
    // Leaf rids covered by `rid` (itself when it names a leaf).
    std::vector<RegionId> leaf_set(RegionId rid) const;
    // Sorted vertex union of everything under `rid`.
    std::vector<VertexId> flatten(RegionId rid) const;
    // Entries not claimed as a child by any HCR.
    std::vector<RegionId> top_level() const;
    // Leaf regions containing vertex v, sorted by rid.
    std::vector<RegionId> regions_of(VertexId v) const;
};

bool is_basic_region(const NetworkGraph& graph, std::span<const VertexId> vs);
bool is_pfr(const NetworkGraph& graph, std::span<const VertexId> vs, Variant variant);
bool is_cfr(const NetworkGraph& graph, std::span<const VertexId> vs, Variant variant);

struct CfrEnumeration {
    std::vector<Region> regions;
    bool truncated{false};
};

// All CFRs of the graph under the variant, deduplicated by vertex set,
// ordered by (smallest member id, size, members) with fresh rids 1..n.
// Output beyond max_regions is cut and flagged.
CfrEnumeration enumerate_cfrs(const NetworkGraph& graph, Variant variant,
                              std::size_t max_regions);

HighLevelRegion build_hcr(const RegionDecomposition& decomp, RegionId rid,
                          std::span<const RegionId> children);

// Walks root-first; throws UnknownRid/AmbiguousRid naming the path position.
RegionRef resolve_rid(const RegionDecomposition& decomp, std::span<const RegionId> rid_path);

struct DecompositionReport {
    std::vector<std::string> problems;
    bool valid() const { return problems.empty(); }
};

DecompositionReport validate_decomposition(const NetworkGraph& graph,
                                           const RegionDecomposition& decomp);

// Line format:
//   variant <disagg|reach>
//   region <rid> switches <id,...> [nodes <id,...>]
//   hcr <rid> children <rid,...>
RegionDecomposition parse_decomposition(std::string_view text);
std::string serialize_decomposition(const RegionDecomposition& decomp);

}  // namespace smartregion
