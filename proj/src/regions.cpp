#include "smartregion/regions.hpp"

#include <algorithm>
#include <bitset>
#include <map>
#include <set>
#include <sstream>

namespace smartregion {

namespace {

bool sorted_contains(const std::vector<VertexId>& v, VertexId x) {
    return std::binary_search(v.begin(), v.end(), x);
}

std::vector<VertexId> sorted_set(std::span<const VertexId> vs) {
    std::vector<VertexId> out(vs.begin(), vs.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Induced-subgraph connectivity over an explicit member set.
bool connected_set(const NetworkGraph& graph, const std::vector<VertexId>& members) {
    if (members.empty()) return false;
    std::set<VertexId> seen{members.front()};
    std::vector<VertexId> frontier{members.front()};
    while (!frontier.empty()) {
        VertexId cur = frontier.back();
        frontier.pop_back();
        for (VertexId n : graph.neighbors(cur)) {
            if (sorted_contains(members, n) && !seen.count(n)) {
                seen.insert(n);
                frontier.push_back(n);
            }
        }
    }
    return seen.size() == members.size();
}

// PFR test assuming vs is already known to be a basic region.
bool pfr_unchecked(const NetworkGraph& graph, const std::vector<VertexId>& members,
                   Variant variant) {
    std::vector<VertexId> switches, nodes;
    for (VertexId v : members)
        (graph.is_switch(v) ? switches : nodes).push_back(v);
    if (variant == Variant::disagg) {
        for (VertexId s : switches)
            for (VertexId n : nodes)
                if (!graph.find_link(s, n)) return false;
        return true;
    }
    // REACH: membership closure over nodes adjacent to every switch of vs.
    // A switch-less set imposes no closure.
    if (switches.empty()) return true;
    for (const Vertex& v : graph.vertices()) {
        if (v.kind != VertexKind::node || sorted_contains(members, v.id)) continue;
        bool universal = true;
        for (VertexId s : switches)
            if (!graph.find_link(s, v.id)) { universal = false; break; }
        if (universal) return false;
    }
    return true;
}

bool basic_unchecked(const NetworkGraph& graph, const std::vector<VertexId>& members) {
    for (VertexId v : members)
        if (!graph.has_vertex(v)) throw Error(Errc::unknown_vertex, std::to_string(v));
    return connected_set(graph, members);
}

}  // namespace

bool Region::contains(VertexId v) const { return has_switch(v) || has_node(v); }
bool Region::has_switch(VertexId v) const { return sorted_contains(switches, v); }
bool Region::has_node(VertexId v) const { return sorted_contains(nodes, v); }

std::vector<VertexId> Region::members() const {
    std::vector<VertexId> out = switches;
    out.insert(out.end(), nodes.begin(), nodes.end());
    std::sort(out.begin(), out.end());
    return out;
}

bool is_basic_region(const NetworkGraph& graph, std::span<const VertexId> vs) {
    auto members = sorted_set(vs);
    return basic_unchecked(graph, members);
}

bool is_pfr(const NetworkGraph& graph, std::span<const VertexId> vs, Variant variant) {
    auto members = sorted_set(vs);
    if (!basic_unchecked(graph, members))
        throw Error(Errc::not_a_basic_region, "input set is not a basic region");
    return pfr_unchecked(graph, members, variant);
}

bool is_cfr(const NetworkGraph& graph, std::span<const VertexId> vs, Variant variant) {
    auto members = sorted_set(vs);
    if (!basic_unchecked(graph, members) || !pfr_unchecked(graph, members, variant))
        throw Error(Errc::not_a_pfr, "input set is not a PFR");
    // A strictly bigger PFR with the same switch set exists iff some single
    // outside node can be added: node additions cannot break the condition
    // for other added nodes under either variant.
    for (const Vertex& v : graph.vertices()) {
        if (v.kind != VertexKind::node || sorted_contains(members, v.id)) continue;
        std::vector<VertexId> grown = members;
        grown.insert(std::lower_bound(grown.begin(), grown.end(), v.id), v.id);
        if (connected_set(graph, grown) && pfr_unchecked(graph, grown, variant))
            return false;
    }
    return true;
}

namespace {

constexpr std::size_t kMaxEnumVertices = 256;
constexpr std::size_t kMaxEnumSwitches = 24;

using Mask = std::bitset<kMaxEnumVertices>;

struct IndexedGraph {
    std::vector<VertexId> ids;       // index -> id, sorted
    std::vector<Mask> adj;           // full adjacency
    Mask node_mask;                  // indices that are nodes
    std::vector<std::size_t> switch_indices;
};

IndexedGraph index_graph(const NetworkGraph& graph) {
    IndexedGraph ig;
    for (const Vertex& v : graph.vertices()) ig.ids.push_back(v.id);
    ig.adj.assign(ig.ids.size(), Mask{});
    auto index_of = [&](VertexId id) {
        return static_cast<std::size_t>(
            std::lower_bound(ig.ids.begin(), ig.ids.end(), id) - ig.ids.begin());
    };
    for (const Link& l : graph.links()) {
        auto ia = index_of(l.a), ib = index_of(l.b);
        ig.adj[ia].set(ib);
        ig.adj[ib].set(ia);
    }
    for (std::size_t i = 0; i < ig.ids.size(); ++i) {
        if (graph.kind(ig.ids[i]) == VertexKind::node) ig.node_mask.set(i);
        else ig.switch_indices.push_back(i);
    }
    return ig;
}

Mask neighborhood(const IndexedGraph& ig, const Mask& set) {
    Mask out;
    for (std::size_t i = 0; i < ig.ids.size(); ++i)
        if (set.test(i)) out |= ig.adj[i];
    return out;
}

bool mask_connected(const IndexedGraph& ig, const Mask& set) {
    if (set.none()) return false;
    std::size_t start = 0;
    while (!set.test(start)) ++start;
    Mask comp;
    comp.set(start);
    for (;;) {
        Mask grown = (comp | (neighborhood(ig, comp) & set));
        if (grown == comp) break;
        comp = grown;
    }
    return comp == set;
}

}  // namespace

CfrEnumeration enumerate_cfrs(const NetworkGraph& graph, Variant variant,
                              std::size_t max_regions) {
    if (max_regions == 0)
        throw Error(Errc::config_error, "max_regions must be positive");
    if (graph.vertex_count() > kMaxEnumVertices)
        throw Error(Errc::region_budget_exceeded,
                    "enumeration supports up to 256 vertices");
    IndexedGraph ig = index_graph(graph);
    const auto& sw = ig.switch_indices;
    if (sw.size() > kMaxEnumSwitches)
        throw Error(Errc::region_budget_exceeded,
                    "enumeration supports up to 24 switches");

    std::vector<std::vector<VertexId>> found;
    const std::uint64_t total = std::uint64_t{1} << sw.size();
    for (std::uint64_t subset = 1; subset < total; ++subset) {
        Mask smask;
        for (std::size_t i = 0; i < sw.size(); ++i)
            if (subset & (std::uint64_t{1} << i)) smask.set(sw[i]);

        Mask nmask;
        if (variant == Variant::disagg) {
            // Common node-neighborhood of the switch set.
            nmask = ig.node_mask;
            for (std::size_t i = 0; i < sw.size(); ++i)
                if (subset & (std::uint64_t{1} << i)) nmask &= ig.adj[sw[i]];
        } else {
            // REACH: absorb every node adjacent to the growing set.
            Mask vs = smask;
            for (;;) {
                Mask add = neighborhood(ig, vs) & ig.node_mask & ~vs;
                if (add.none()) break;
                vs |= add;
            }
            nmask = vs & ig.node_mask;
        }

        Mask vs = smask | nmask;
        if (!mask_connected(ig, vs)) continue;
        std::vector<VertexId> members;
        for (std::size_t i = 0; i < ig.ids.size(); ++i)
            if (vs.test(i)) members.push_back(ig.ids[i]);
        found.push_back(std::move(members));
    }

    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        if (a.front() != b.front()) return a.front() < b.front();
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });

    CfrEnumeration out;
    if (found.size() > max_regions) {
        out.truncated = true;
        found.resize(max_regions);
    }
    RegionId next_rid = 1;
    for (auto& members : found) {
        Region r;
        r.rid = next_rid++;
        for (VertexId v : members)
            (graph.is_switch(v) ? r.switches : r.nodes).push_back(v);
        out.regions.push_back(std::move(r));
    }
    return out;
}

const Region* RegionDecomposition::find_region(RegionId rid) const {
    for (const Region& r : regions)
        if (r.rid == rid) return &r;
    return nullptr;
}

const HighLevelRegion* RegionDecomposition::find_hcr(RegionId rid) const {
    for (const HighLevelRegion& h : hcrs)
        if (h.rid == rid) return &h;
    return nullptr;
}

namespace {

void collect_leaves(const RegionDecomposition& d, RegionId rid,
                    std::vector<RegionId>& out, std::vector<RegionId>& trail) {
    if (std::find(trail.begin(), trail.end(), rid) != trail.end())
        throw Error(Errc::cycle_detected, "HCR cycle through rid " + std::to_string(rid));
    if (d.find_region(rid)) {
        out.push_back(rid);
        return;
    }
    const HighLevelRegion* h = d.find_hcr(rid);
    if (!h) throw Error(Errc::unknown_rid, std::to_string(rid));
    trail.push_back(rid);
    for (RegionId c : h->children) collect_leaves(d, c, out, trail);
    trail.pop_back();
}

}  // namespace

std::vector<RegionId> RegionDecomposition::leaf_set(RegionId rid) const {
    std::vector<RegionId> out, trail;
    collect_leaves(*this, rid, out, trail);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<VertexId> RegionDecomposition::flatten(RegionId rid) const {
    std::vector<VertexId> out;
    for (RegionId leaf : leaf_set(rid)) {
        auto m = find_region(leaf)->members();
        out.insert(out.end(), m.begin(), m.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<RegionId> RegionDecomposition::top_level() const {
    std::set<RegionId> claimed;
    for (const HighLevelRegion& h : hcrs)
        for (RegionId c : h.children) claimed.insert(c);
    std::vector<RegionId> out;
    for (const Region& r : regions)
        if (!claimed.count(r.rid)) out.push_back(r.rid);
    for (const HighLevelRegion& h : hcrs)
        if (!claimed.count(h.rid)) out.push_back(h.rid);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<RegionId> RegionDecomposition::regions_of(VertexId v) const {
    std::vector<RegionId> out;
    for (const Region& r : regions)
        if (r.contains(v)) out.push_back(r.rid);
    return out;
}

HighLevelRegion build_hcr(const RegionDecomposition& decomp, RegionId rid,
                          std::span<const RegionId> children) {
    if (children.empty()) throw Error(Errc::empty_children, "HCR needs children");
    if (rid == kUnsetRegion) throw Error(Errc::unknown_rid, "rid 0 is reserved");
    // Reject references that would close a cycle through the new rid.
    std::vector<RegionId> pending(children.begin(), children.end());
    std::set<RegionId> visited;
    while (!pending.empty()) {
        RegionId cur = pending.back();
        pending.pop_back();
        if (cur == rid)
            throw Error(Errc::cycle_detected, "HCR " + std::to_string(rid) + " reaches itself");
        if (!visited.insert(cur).second) continue;
        if (decomp.find_region(cur)) continue;
        const HighLevelRegion* h = decomp.find_hcr(cur);
        if (!h) throw Error(Errc::unknown_rid, std::to_string(cur));
        pending.insert(pending.end(), h->children.begin(), h->children.end());
    }
    HighLevelRegion out;
    out.rid = rid;
    out.children.assign(children.begin(), children.end());
    std::sort(out.children.begin(), out.children.end());
    out.children.erase(std::unique(out.children.begin(), out.children.end()),
                       out.children.end());
    return out;
}

RegionRef resolve_rid(const RegionDecomposition& decomp, std::span<const RegionId> rid_path) {
    if (rid_path.empty()) throw Error(Errc::unknown_rid, "empty rid path");

    auto matches_in = [&](const std::vector<RegionId>& scope, RegionId rid) {
        std::vector<RegionRef> out;
        for (RegionId candidate : scope) {
            if (candidate != rid) continue;
            if (const Region* r = decomp.find_region(candidate)) out.emplace_back(r);
            else if (const HighLevelRegion* h = decomp.find_hcr(candidate)) out.emplace_back(h);
        }
        return out;
    };

    std::vector<RegionId> scope = decomp.top_level();
    RegionRef current{static_cast<const Region*>(nullptr)};
    for (std::size_t i = 0; i < rid_path.size(); ++i) {
        auto found = matches_in(scope, rid_path[i]);
        if (found.empty())
            throw Error(Errc::unknown_rid,
                        "rid " + std::to_string(rid_path[i]) + " at position " + std::to_string(i));
        if (found.size() > 1)
            throw Error(Errc::ambiguous_rid,
                        "rid " + std::to_string(rid_path[i]) + " at position " + std::to_string(i));
        current = found.front();
        if (i + 1 < rid_path.size()) {
            const auto* h = std::get_if<const HighLevelRegion*>(&current);
            if (!h)
                throw Error(Errc::unknown_rid,
                            "leaf region reached before end of path at position " + std::to_string(i));
            scope = (*h)->children;
        }
    }
    return current;
}

DecompositionReport validate_decomposition(const NetworkGraph& graph,
                                           const RegionDecomposition& decomp) {
    DecompositionReport report;
    auto note = [&](std::string s) { report.problems.push_back(std::move(s)); };

    std::set<VertexId> covered;
    for (const Region& r : decomp.regions) {
        std::string tag = "region " + std::to_string(r.rid);
        if (r.rid == kUnsetRegion) note(tag + ": rid 0 is reserved");
        if (r.switches.empty()) {
            note(tag + ": no switches");
            continue;
        }
        auto members = r.members();
        for (VertexId v : members) {
            if (!graph.has_vertex(v)) {
                note(tag + ": unknown vertex " + std::to_string(v));
                continue;
            }
            covered.insert(v);
        }
        try {
            if (!is_cfr(graph, members, decomp.variant))
                note(tag + ": not a CFR under the declared variant");
        } catch (const Error& e) {
            note(tag + ": " + e.what());
        }
    }
    for (const Vertex& v : graph.vertices())
        if (!covered.count(v.id))
            note("vertex " + std::to_string(v.id) + " not covered by any region");

    // Sibling rid uniqueness at the root and under each HCR.
    auto check_siblings = [&](const std::vector<RegionId>& scope, const std::string& where) {
        std::map<RegionId, int> count;
        for (RegionId rid : scope) ++count[rid];
        for (auto& [rid, n] : count)
            if (n > 1)
                note("rid " + std::to_string(rid) + " ambiguous among siblings " + where);
    };
    check_siblings(decomp.top_level(), "at top level");
    for (const HighLevelRegion& h : decomp.hcrs) {
        if (h.children.empty()) note("hcr " + std::to_string(h.rid) + ": no children");
        check_siblings(h.children, "under hcr " + std::to_string(h.rid));
        for (RegionId c : h.children)
            if (!decomp.find_region(c) && !decomp.find_hcr(c))
                note("hcr " + std::to_string(h.rid) + ": unknown child " + std::to_string(c));
        try {
            decomp.leaf_set(h.rid);
        } catch (const Error& e) {
            note(std::string("hcr ") + std::to_string(h.rid) + ": " + e.what());
        }
    }
    return report;
}

RegionDecomposition parse_decomposition(std::string_view text) {
    RegionDecomposition d;
    std::istringstream is{std::string(text)};
    std::string line;
    int line_no = 0;

    auto parse_id_list = [](const std::string& tok, int ln) {
        std::vector<std::uint16_t> out;
        std::string cur;
        std::istringstream ts(tok);
        while (std::getline(ts, cur, ',')) {
            if (cur.empty())
                throw Error(Errc::malformed_line, "line " + std::to_string(ln) + ": empty id");
            std::size_t pos = 0;
            unsigned long v = std::stoul(cur, &pos);
            if (pos != cur.size() || v > 65535)
                throw Error(Errc::malformed_line,
                            "line " + std::to_string(ln) + ": bad id '" + cur + "'");
            out.push_back(static_cast<std::uint16_t>(v));
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
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
        if (toks[0] == "variant" && toks.size() == 2) {
            if (toks[1] == "disagg") d.variant = Variant::disagg;
            else if (toks[1] == "reach") d.variant = Variant::reach;
            else throw Error(Errc::malformed_line,
                             "line " + std::to_string(line_no) + ": unknown variant");
        } else if (toks[0] == "region") {
            if (toks.size() != 4 && toks.size() != 6)
                throw Error(Errc::malformed_line,
                            "line " + std::to_string(line_no) +
                                ": expected 'region <rid> switches <ids> [nodes <ids>]'");
            Region r;
            r.rid = static_cast<RegionId>(std::stoul(toks[1]));
            if (toks[2] != "switches")
                throw Error(Errc::malformed_line, "line " + std::to_string(line_no) + ": expected 'switches'");
            r.switches = parse_id_list(toks[3], line_no);
            if (toks.size() == 6) {
                if (toks[4] != "nodes")
                    throw Error(Errc::malformed_line, "line " + std::to_string(line_no) + ": expected 'nodes'");
                r.nodes = parse_id_list(toks[5], line_no);
            }
            d.regions.push_back(std::move(r));
        } else if (toks[0] == "hcr") {
            if (toks.size() != 4 || toks[2] != "children")
                throw Error(Errc::malformed_line,
                            "line " + std::to_string(line_no) + ": expected 'hcr <rid> children <rids>'");
            HighLevelRegion h;
            h.rid = static_cast<RegionId>(std::stoul(toks[1]));
            h.children = parse_id_list(toks[3], line_no);
            if (h.children.empty())
                throw Error(Errc::empty_children, "line " + std::to_string(line_no));
            d.hcrs.push_back(std::move(h));
        } else {
            throw Error(Errc::malformed_line,
                        "line " + std::to_string(line_no) + ": unknown statement '" + toks[0] + "'");
        }
    }
    std::stable_sort(d.regions.begin(), d.regions.end(),
                     [](const Region& a, const Region& b) { return a.rid < b.rid; });
    std::stable_sort(d.hcrs.begin(), d.hcrs.end(),
                     [](const HighLevelRegion& a, const HighLevelRegion& b) { return a.rid < b.rid; });
    return d;
}

std::string serialize_decomposition(const RegionDecomposition& decomp) {
    std::ostringstream os;
    os << "variant " << (decomp.variant == Variant::disagg ? "disagg" : "reach") << "\n";
    auto join = [](const auto& ids) {
        std::string s;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(ids[i]);
        }
        return s;
    };
    for (const Region& r : decomp.regions) {
        os << "region " << r.rid << " switches " << join(r.switches);
        if (!r.nodes.empty()) os << " nodes " << join(r.nodes);
        os << "\n";
    }
    for (const HighLevelRegion& h : decomp.hcrs)
        os << "hcr " << h.rid << " children " << join(h.children) << "\n";
    return os.str();
}

}  // namespace smartregion
