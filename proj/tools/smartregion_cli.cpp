// Command-line front end: decompose, map, route, simulate, header codec,
// Matin naming, and the NR2 calculator, all on plain text files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "smartregion/matin.hpp"
#include "smartregion/nr2.hpp"
#include "smartregion/region_map.hpp"
#include "smartregion/routing.hpp"
#include "smartregion/sim.hpp"
#include "smartregion/wire.hpp"

namespace {

using namespace smartregion;

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(Errc::config_error, "cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(out_path);
    if (!os) throw Error(Errc::config_error, "cannot write " + out_path);
    os << text;
}

std::vector<RegionId> parse_rids(const std::string& csv) {
    std::vector<RegionId> out;
    std::istringstream is(csv);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(static_cast<RegionId>(std::stoul(tok)));
    return out;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string s;
    for (std::uint8_t b : bytes) {
        s += digits[b >> 4];
        s += digits[b & 0xF];
    }
    return s;
}

std::vector<std::uint8_t> from_hex(const std::string& text) {
    std::vector<std::uint8_t> out;
    int hi = -1;
    for (char c : text) {
        if (isspace(static_cast<unsigned char>(c))) continue;
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw Error(Errc::malformed_line, std::string("bad hex character '") + c + "'");
        if (hi < 0) hi = v;
        else {
            out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
            hi = -1;
        }
    }
    if (hi >= 0) throw Error(Errc::malformed_line, "odd hex digit count");
    return out;
}

// Canonical key=value header description, whitespace separated.
std::string describe_header(const wire::SmartRegionHeader& h) {
    std::ostringstream os;
    auto join = [](const std::vector<RegionId>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(v[i]);
        }
        return s;
    };
    bool first = true;
    auto emit = [&](const std::string& kv) {
        if (!first) os << ' ';
        os << kv;
        first = false;
    };
    if (h.region_stack) {
        emit("rs.stack=" + join(h.region_stack->stack));
        if (h.region_stack->ephemeral_single_hop_fid)
            emit("rs.ephemeral_fid=" + std::to_string(*h.region_stack->ephemeral_single_hop_fid));
        if (h.region_stack->intra_region_fid)
            emit("rs.intra_fid=" + std::to_string(*h.region_stack->intra_region_fid));
    }
    if (h.ids) {
        if (h.ids->packet_pid) emit("ids.pid=" + std::to_string(*h.ids->packet_pid));
        if (h.ids->flow_fid) emit("ids.fid=" + std::to_string(*h.ids->flow_fid));
        emit("ids.sender=" + std::to_string(h.ids->sender_nid));
        emit("ids.receiver=" + std::to_string(h.ids->receiver_nid));
    }
    if (h.qos) {
        if (h.qos->single_hop_latency) emit("qos.shlat=" + std::to_string(*h.qos->single_hop_latency));
        if (h.qos->path_latency) emit("qos.plat=" + std::to_string(*h.qos->path_latency));
        if (h.qos->single_hop_loss) emit("qos.shloss=" + std::to_string(*h.qos->single_hop_loss));
        if (h.qos->path_loss) emit("qos.ploss=" + std::to_string(*h.qos->path_loss));
        emit("qos.fission=" + std::to_string(h.qos->fission_rate));
    }
    if (h.brs) emit("brs.trail=" + join(h.brs->trail));
    return os.str();
}

wire::SmartRegionHeader parse_header_desc(const std::string& text) {
    wire::SmartRegionHeader h;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::malformed_line, "expected key=value, got '" + tok + "'");
        std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        auto num = [&]() { return static_cast<std::uint16_t>(std::stoul(value)); };
        auto rs = [&]() -> wire::RegionStackSf& {
            if (!h.region_stack) h.region_stack = wire::RegionStackSf{};
            return *h.region_stack;
        };
        auto ids = [&]() -> wire::IdsSf& {
            if (!h.ids) h.ids = wire::IdsSf{};
            return *h.ids;
        };
        auto qos = [&]() -> wire::QosSf& {
            if (!h.qos) h.qos = wire::QosSf{};
            return *h.qos;
        };
        if (key == "rs.stack") rs().stack = parse_rids(value);
        else if (key == "rs.ephemeral_fid") rs().ephemeral_single_hop_fid = static_cast<std::uint8_t>(num());
        else if (key == "rs.intra_fid") rs().intra_region_fid = static_cast<std::uint8_t>(num());
        else if (key == "ids.pid") ids().packet_pid = num();
        else if (key == "ids.fid") ids().flow_fid = num();
        else if (key == "ids.sender") ids().sender_nid = num();
        else if (key == "ids.receiver") ids().receiver_nid = num();
        else if (key == "qos.shlat") qos().single_hop_latency = static_cast<std::uint8_t>(num());
        else if (key == "qos.plat") qos().path_latency = static_cast<std::uint8_t>(num());
        else if (key == "qos.shloss") qos().single_hop_loss = static_cast<std::uint8_t>(num());
        else if (key == "qos.ploss") qos().path_loss = static_cast<std::uint8_t>(num());
        else if (key == "qos.fission") qos().fission_rate = static_cast<std::uint8_t>(num());
        else if (key == "brs.trail") {
            h.brs = wire::BrsSf{};
            if (!value.empty()) h.brs->trail = parse_rids(value);
        } else {
            throw Error(Errc::malformed_line, "unknown header field '" + key + "'");
        }
    }
    return h;
}

std::string format_path(const RegionPath& p) {
    std::ostringstream os;
    for (std::size_t i = 0; i < p.steps.size(); ++i) {
        if (i) os << ',';
        os << p.steps[i].rid;
        if (p.steps[i].instance) os << "@P" << *p.steps[i].instance;
    }
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SmartRegion region-based routing toolkit"};
    app.require_subcommand(1);

    std::string topology_path, regions_path, out_path, scenario_path;
    std::string variant_str = "disagg", mode_str = "min", stack_csv, desc_text, hex_text, name_text;
    std::vector<std::string> bit_units;
    unsigned origin = 0, at_region = 0;
    std::size_t max_regions = 4096, k_paths = 4;
    bool expand = false;
    std::uint64_t seed = 0;
    if (const char* env = std::getenv("SMARTREGION_SEED")) seed = std::strtoull(env, nullptr, 10);
    int depth = -1;

    auto* decompose = app.add_subcommand("decompose", "Enumerate CFRs of a topology");
    decompose->add_option("--topology", topology_path)->required();
    decompose->add_option("--variant", variant_str)->check(CLI::IsMember({"disagg", "reach"}));
    decompose->add_option("--max-regions", max_regions);
    decompose->add_option("--out", out_path);

    auto* map_cmd = app.add_subcommand("map", "Region map for an origin region");
    map_cmd->add_option("--topology", topology_path)->required();
    map_cmd->add_option("--regions", regions_path)->required();
    map_cmd->add_option("--origin", origin)->required();
    map_cmd->add_flag("--expand", expand);
    map_cmd->add_option("--depth", depth);
    map_cmd->add_option("--out", out_path);

    auto* route = app.add_subcommand("route", "Resolve a region stack at a region");
    route->add_option("--topology", topology_path)->required();
    route->add_option("--regions", regions_path)->required();
    route->add_option("--at", at_region)->required();
    route->add_option("--stack", stack_csv)->required();
    route->add_option("--mode", mode_str)->check(CLI::IsMember({"min", "max"}));
    route->add_flag("--expand", expand);

    auto* paths_cmd = app.add_subcommand("paths", "k loop-free region paths");
    paths_cmd->add_option("--topology", topology_path)->required();
    paths_cmd->add_option("--regions", regions_path)->required();
    paths_cmd->add_option("--from", origin)->required();
    paths_cmd->add_option("--to", at_region)->required();
    paths_cmd->add_option("--k", k_paths);
    paths_cmd->add_flag("--expand", expand);

    auto* simulate = app.add_subcommand("simulate", "Run a scenario deterministically");
    simulate->add_option("--scenario", scenario_path)->required();
    simulate->add_option("--seed", seed);
    simulate->add_option("--out", out_path);

    auto* enc = app.add_subcommand("encode-header", "Header description to hex");
    enc->add_option("--desc", desc_text)->required();

    auto* dec = app.add_subcommand("decode-header", "Hex to header description");
    dec->add_option("--hex", hex_text)->required();

    auto* name_cmd = app.add_subcommand("name", "Matin address/name codec");
    name_cmd->add_option("--bits", bit_units, "16-bit binary units, low unit first");
    name_cmd->add_option("--text", name_text, "Matin name to decode");

    double speed_kmh = 300.0, stream_mbps = 2.6, segment_mb = 10.0, access_mbps = 50.0;
    double alt_access_mbps = 18.4, alt_window_s = 8.2;
    auto* nr2_cmd = app.add_subcommand("nr2", "Next-Region Reservation feasibility");
    nr2_cmd->add_option("--speed-kmh", speed_kmh);
    nr2_cmd->add_option("--stream-mbps", stream_mbps);
    nr2_cmd->add_option("--segment-mb", segment_mb);
    nr2_cmd->add_option("--access-mbps", access_mbps);
    nr2_cmd->add_option("--alt-access-mbps", alt_access_mbps);
    nr2_cmd->add_option("--alt-window-s", alt_window_s,
                        "Published window for the alternative access grade");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (decompose->parsed()) {
            auto graph = parse_topology(read_file(topology_path));
            Variant variant = variant_str == "reach" ? Variant::reach : Variant::disagg;
            auto result = enumerate_cfrs(graph, variant, max_regions);
            RegionDecomposition d;
            d.variant = variant;
            d.regions = result.regions;
            std::string text = serialize_decomposition(d);
            if (result.truncated) text += "# truncated at " + std::to_string(max_regions) + " regions\n";
            write_output(out_path, text);
        } else if (map_cmd->parsed()) {
            auto graph = parse_topology(read_file(topology_path));
            auto decomp = parse_decomposition(read_file(regions_path));
            auto rgraph = build_region_graph(graph, decomp);
            std::optional<std::uint32_t> vis;
            if (depth >= 0) vis = static_cast<std::uint32_t>(depth);
            auto map = generate_region_map(rgraph, static_cast<RegionId>(origin), expand, vis);
            write_output(out_path, dump_region_map(map));
        } else if (route->parsed()) {
            auto graph = parse_topology(read_file(topology_path));
            auto decomp = parse_decomposition(read_file(regions_path));
            auto rgraph = build_region_graph(graph, decomp);
            wire::SmartRegionHeader h;
            h.region_stack = wire::RegionStackSf{{}, {}, parse_rids(stack_csv)};
            auto paths = resolve_stack(rgraph, static_cast<RegionId>(at_region), h,
                                       mode_str == "max" ? EffortMode::maximal : EffortMode::minimal,
                                       expand);
            std::ostringstream os;
            for (const RegionPath& p : paths)
                os << "path " << format_path(p) << " lat=" << p.qos.path_latency_us
                   << " hops=" << p.qos.hop_count << "\n";
            write_output("", os.str());
        } else if (paths_cmd->parsed()) {
            auto graph = parse_topology(read_file(topology_path));
            auto decomp = parse_decomposition(read_file(regions_path));
            auto rgraph = build_region_graph(graph, decomp);
            auto paths = k_region_paths(rgraph, static_cast<RegionId>(origin),
                                        static_cast<RegionId>(at_region), k_paths, expand);
            std::ostringstream os;
            for (const RegionPath& p : paths)
                os << "path " << format_path(p) << " lat=" << p.qos.path_latency_us
                   << " hops=" << p.qos.hop_count << "\n";
            write_output("", os.str());
        } else if (simulate->parsed()) {
            auto cfg = sim::load_scenario(scenario_path);
            auto metrics = sim::run_scenario(cfg, seed);
            write_output(out_path, metrics.to_csv());
        } else if (enc->parsed()) {
            auto h = parse_header_desc(desc_text);
            std::cout << to_hex(wire::encode_header(h)) << "\n";
        } else if (dec->parsed()) {
            auto result = wire::decode_header(from_hex(hex_text));
            std::cout << describe_header(result.header);
            if (!result.payload.empty()) std::cout << " payload=" << to_hex(result.payload);
            std::cout << "\n";
        } else if (name_cmd->parsed()) {
            if (!bit_units.empty()) {
                std::vector<std::uint16_t> units;
                for (const std::string& u : bit_units) {
                    if (u.size() != 16)
                        throw Error(Errc::bad_group_length, "unit must be 16 binary digits");
                    std::uint16_t v = 0;
                    for (char c : u) {
                        if (c != '0' && c != '1')
                            throw Error(Errc::malformed_line, "unit must be binary");
                        v = static_cast<std::uint16_t>(v << 1 | (c == '1'));
                    }
                    units.push_back(v);
                }
                std::cout << matin::address_to_name(units) << "\n";
            } else if (!name_text.empty()) {
                auto units = matin::name_to_address(name_text);
                for (std::size_t i = 0; i < units.size(); ++i) {
                    if (i) std::cout << ' ';
                    for (int b = 15; b >= 0; --b) std::cout << ((units[i] >> b) & 1);
                }
                std::cout << "\n";
            } else {
                throw Error(Errc::config_error, "name needs --bits or --text");
            }
        } else if (nr2_cmd->parsed()) {
            nr2::Scenario s{speed_kmh / 3.6, stream_mbps * 1e6, segment_mb * 1e6, access_mbps * 1e6};
            nr2::Report main_report = nr2::evaluate(s);
            nr2::Scenario alt = s;
            alt.access_rate_bps = alt_access_mbps * 1e6;
            nr2::Report alt_report = nr2::evaluate_with_window(alt, alt_window_s);
            nr2::Comparison cmp = nr2::compare_scenarios(main_report, alt_report);
            std::ostringstream os;
            os.setf(std::ios::fixed);
            os.precision(2);
            os << "scenario: speed_kmh=" << speed_kmh << " stream_mbps=" << stream_mbps
               << " segment_mb=" << segment_mb << "\n";
            os << "access_mbps=" << access_mbps << "\n" << nr2::format_report(main_report);
            os << "alt_access_mbps=" << alt_access_mbps << " (window forced to " << alt_window_s
               << " s)\n"
               << nr2::format_report(alt_report);
            os.precision(4);
            os << "comparison: window_ratio=" << cmp.window_ratio
               << " diameter_ratio=" << cmp.diameter_ratio
               << " fraction_ratio=" << cmp.fraction_ratio
               << " power_saving=" << cmp.power_saving << "\n";
            std::cout << os.str();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
