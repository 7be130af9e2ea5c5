#include "smartregion/topology.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace smartregion {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::malformed_line: return "MalformedLine";
        case Errc::duplicate_vertex: return "DuplicateVertex";
        case Errc::unknown_vertex: return "UnknownVertex";
        case Errc::duplicate_link: return "DuplicateLink";
        case Errc::not_a_basic_region: return "NotABasicRegion";
        case Errc::not_a_pfr: return "NotAPFR";
        case Errc::region_budget_exceeded: return "RegionBudgetExceeded";
        case Errc::empty_children: return "EmptyChildren";
        case Errc::cycle_detected: return "CycleDetected";
        case Errc::unknown_rid: return "UnknownRid";
        case Errc::ambiguous_rid: return "AmbiguousRid";
        case Errc::invariant_violation: return "InvariantViolation";
        case Errc::truncated: return "Truncated";
        case Errc::reserved_bits_nonzero: return "ReservedBitsNonzero";
        case Errc::zero_rid: return "ZeroRid";
        case Errc::empty_stack: return "EmptyStack";
        case Errc::no_active_superfields: return "NoActiveSuperFields";
        case Errc::zero_sender_nid: return "ZeroSenderNid";
        case Errc::zero_fission_rate: return "ZeroFissionRate";
        case Errc::invalid_character: return "InvalidCharacter";
        case Errc::bad_group_length: return "BadGroupLength";
        case Errc::unknown_region: return "UnknownRegion";
        case Errc::no_path: return "NoPath";
        case Errc::not_in_region: return "NotInRegion";
        case Errc::no_feasible_candidate: return "NoFeasibleCandidate";
        case Errc::pull_ttl_exceeded: return "PullTtlExceeded";
        case Errc::node_not_in_region: return "NodeNotInRegion";
        case Errc::config_error: return "ConfigError";
    }
    return "Error";
}

void NetworkGraph::add_vertex(VertexId id, VertexKind kind) {
    if (id == kUnsetVertex)
        throw Error(Errc::malformed_line, "vertex id 0 is reserved");
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), id,
                               [](const Vertex& v, VertexId x) { return v.id < x; });
    if (it != vertices_.end() && it->id == id)
        throw Error(Errc::duplicate_vertex, "vertex id " + std::to_string(id));
    vertices_.insert(it, Vertex{id, kind});
}

void NetworkGraph::add_link(Link link) {
    if (link.a == link.b)
        throw Error(Errc::malformed_line, "self-link on vertex " + std::to_string(link.a));
    if (!has_vertex(link.a))
        throw Error(Errc::unknown_vertex, "link endpoint " + std::to_string(link.a));
    if (!has_vertex(link.b))
        throw Error(Errc::unknown_vertex, "link endpoint " + std::to_string(link.b));
    if (link.a > link.b) std::swap(link.a, link.b);
    auto it = std::lower_bound(links_.begin(), links_.end(), link, [](const Link& l, const Link& r) {
        return std::pair(l.a, l.b) < std::pair(r.a, r.b);
    });
    if (it != links_.end() && it->a == link.a && it->b == link.b)
        throw Error(Errc::duplicate_link,
                    std::to_string(link.a) + "-" + std::to_string(link.b));
    links_.insert(it, link);
}

void NetworkGraph::remove_link(VertexId a, VertexId b) {
    if (a > b) std::swap(a, b);
    auto it = std::find_if(links_.begin(), links_.end(),
                           [&](const Link& l) { return l.a == a && l.b == b; });
    if (it != links_.end()) links_.erase(it);
}

void NetworkGraph::set_link_loss(VertexId a, VertexId b, std::uint32_t loss_ppm) {
    if (a > b) std::swap(a, b);
    for (auto& l : links_) {
        if (l.a == a && l.b == b) {
            l.loss_ppm = loss_ppm;
            return;
        }
    }
    throw Error(Errc::unknown_vertex,
                "no link " + std::to_string(a) + "-" + std::to_string(b));
}

bool NetworkGraph::has_vertex(VertexId id) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), id,
                               [](const Vertex& v, VertexId x) { return v.id < x; });
    return it != vertices_.end() && it->id == id;
}

std::size_t NetworkGraph::index_of(VertexId id) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), id,
                               [](const Vertex& v, VertexId x) { return v.id < x; });
    if (it == vertices_.end() || it->id != id)
        throw Error(Errc::unknown_vertex, std::to_string(id));
    return static_cast<std::size_t>(it - vertices_.begin());
}

VertexKind NetworkGraph::kind(VertexId id) const { return vertices_[index_of(id)].kind; }

std::vector<VertexId> NetworkGraph::neighbors(VertexId id) const {
    (void)index_of(id);  // unknown vertex check
    std::vector<VertexId> out;
    for (const Link& l : links_) {
        if (l.a == id) out.push_back(l.b);
        else if (l.b == id) out.push_back(l.a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

const Link* NetworkGraph::find_link(VertexId a, VertexId b) const {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(links_.begin(), links_.end(), std::pair(a, b),
                               [](const Link& l, const std::pair<VertexId, VertexId>& p) {
                                   return std::pair(l.a, l.b) < p;
                               });
    if (it != links_.end() && it->a == a && it->b == b) return &*it;
    return nullptr;
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::uint64_t parse_uint(const std::string& tok, int line_no, std::uint64_t max) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || v > max)
        throw Error(Errc::malformed_line,
                    "line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    return v;
}

}  // namespace

NetworkGraph parse_topology(std::string_view text) {
    NetworkGraph g;
    std::istringstream is{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        try {
            if (toks[0] == "node" || toks[0] == "switch") {
                if (toks.size() != 2)
                    throw Error(Errc::malformed_line, "expected '<kind> <id>'");
                auto id = static_cast<VertexId>(parse_uint(toks[1], line_no, 65535));
                g.add_vertex(id, toks[0] == "node" ? VertexKind::node : VertexKind::sw);
            } else if (toks[0] == "link") {
                if (toks.size() < 3 || toks.size() > 6)
                    throw Error(Errc::malformed_line, "expected 'link <a> <b> [lat] [loss] [bw]'");
                Link l;
                l.a = static_cast<VertexId>(parse_uint(toks[1], line_no, 65535));
                l.b = static_cast<VertexId>(parse_uint(toks[2], line_no, 65535));
                if (toks.size() > 3) l.latency_us = static_cast<std::uint32_t>(parse_uint(toks[3], line_no, UINT32_MAX));
                if (toks.size() > 4) l.loss_ppm = static_cast<std::uint32_t>(parse_uint(toks[4], line_no, 1'000'000));
                if (toks.size() > 5) {
                    l.bandwidth_kbps = static_cast<std::uint32_t>(parse_uint(toks[5], line_no, UINT32_MAX));
                    if (l.bandwidth_kbps == 0)
                        throw Error(Errc::malformed_line, "bandwidth must be positive");
                }
                g.add_link(l);
            } else {
                throw Error(Errc::malformed_line, "unknown statement '" + toks[0] + "'");
            }
        } catch (const Error& e) {
            if (std::string(e.what()).find("line ") != std::string::npos) throw;
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return g;
}

std::string serialize_topology(const NetworkGraph& graph) {
    std::ostringstream os;
    for (const Vertex& v : graph.vertices())
        if (v.kind == VertexKind::node) os << "node " << v.id << "\n";
    for (const Vertex& v : graph.vertices())
        if (v.kind == VertexKind::sw) os << "switch " << v.id << "\n";
    for (const Link& l : graph.links()) {
        os << "link " << l.a << " " << l.b;
        if (l.latency_us != kDefaultLatencyUs || l.loss_ppm != kDefaultLossPpm ||
            l.bandwidth_kbps != kDefaultBandwidthKbps)
            os << " " << l.latency_us << " " << l.loss_ppm << " " << l.bandwidth_kbps;
        os << "\n";
    }
    return os.str();
}

ValidationReport validate_graph(const NetworkGraph& graph) {
    ValidationReport report;
    std::map<VertexId, int> component;
    int next_component = 0;
    for (const Vertex& v : graph.vertices()) {
        if (v.kind == VertexKind::node) ++report.node_count;
        else ++report.switch_count;
        if (component.count(v.id)) continue;
        // BFS one component
        ++next_component;
        std::vector<VertexId> frontier{v.id};
        component[v.id] = next_component;
        while (!frontier.empty()) {
            VertexId cur = frontier.back();
            frontier.pop_back();
            for (VertexId n : graph.neighbors(cur)) {
                if (!component.count(n)) {
                    component[n] = next_component;
                    frontier.push_back(n);
                }
            }
        }
    }
    report.component_count = static_cast<std::size_t>(next_component);
    for (const Vertex& v : graph.vertices()) {
        if (v.kind != VertexKind::node) continue;
        bool has_switch = false;
        for (VertexId n : graph.neighbors(v.id))
            if (graph.is_switch(n)) { has_switch = true; break; }
        if (!has_switch) report.unreachable_nodes.push_back(v.id);
    }
    return report;
}

}  // namespace smartregion
