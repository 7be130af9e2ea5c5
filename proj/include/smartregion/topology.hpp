#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smartregion/error.hpp"

namespace smartregion {

// 16-bit vertex id doubling as the NID on the wire. 0 is the "unset"
// sentinel and is never assigned to a real vertex.
using VertexId = std::uint16_t;

inline constexpr VertexId kUnsetVertex = 0;

enum class VertexKind { node, sw };

struct Vertex {
    VertexId id{};
    VertexKind kind{VertexKind::node};
};

inline constexpr std::uint32_t kDefaultLatencyUs = 100;
inline constexpr std::uint32_t kDefaultLossPpm = 0;
inline constexpr std::uint32_t kDefaultBandwidthKbps = 1'000'000;

// Undirected; stored normalized with a < b. At most one link per pair.
struct Link {
    VertexId a{};
    VertexId b{};
    std::uint32_t latency_us{kDefaultLatencyUs};
    std::uint32_t loss_ppm{kDefaultLossPpm};
    std::uint32_t bandwidth_kbps{kDefaultBandwidthKbps};
};

struct ValidationReport {
    std::size_t component_count{0};
    std::size_t node_count{0};
    std::size_t switch_count{0};
    // Nodes with zero switch neighbors; unreachable for routing purposes.
    std::vector<VertexId> unreachable_nodes;

    bool has_warnings() const { return !unreachable_nodes.empty(); }
};

class NetworkGraph {
public:
    void add_vertex(VertexId id, VertexKind kind);
    void add_link(Link link);
    void remove_link(VertexId a, VertexId b);
    void set_link_loss(VertexId a, VertexId b, std::uint32_t loss_ppm);

    bool has_vertex(VertexId id) const;
    VertexKind kind(VertexId id) const;
    bool is_switch(VertexId id) const { return kind(id) == VertexKind::sw; }

    // Sorted by id.
    const std::vector<Vertex>& vertices() const { return vertices_; }
    // Sorted by (a, b).
    const std::vector<Link>& links() const { return links_; }

    std::vector<VertexId> neighbors(VertexId id) const;
    const Link* find_link(VertexId a, VertexId b) const;

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t link_count() const { return links_.size(); }

private:
    std::size_t index_of(VertexId id) const;

    std::vector<Vertex> vertices_;  // sorted by id
    std::vector<Link> links_;       // normalized, sorted
};

// Line-oriented topology text:
//   node <id> | switch <id> | link <a> <b> [latency_us] [loss_ppm] [bw_kbps] | # comment
NetworkGraph parse_topology(std::string_view text);

// Canonical form: vertices in id order, links in (a,b) order, default link
// attributes omitted. parse_topology(serialize_topology(g)) == g.
std::string serialize_topology(const NetworkGraph& graph);

ValidationReport validate_graph(const NetworkGraph& graph);

}  // namespace smartregion
