#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smartregion/regions.hpp"

namespace smartregion::wire {

// Region Stack SF. Stack is top-of-stack first: the current target region
// first, the final destination region last. All rids nonzero, depth 1..255.
struct RegionStackSf {
    std::optional<std::uint8_t> ephemeral_single_hop_fid;  // 4-bit
    std::optional<std::uint8_t> intra_region_fid;          // 8-bit
    std::vector<RegionId> stack;

    bool operator==(const RegionStackSf&) const = default;
};

// IDs SF. receiver_nid == 0 means unset: the packet multicasts to every
// node of the destination region.
struct IdsSf {
    std::optional<std::uint16_t> packet_pid;  // 12-bit
    std::optional<std::uint16_t> flow_fid;    // 12-bit
    VertexId sender_nid{};                    // nonzero
    VertexId receiver_nid{};

    bool operator==(const IdsSf&) const = default;
};

// QoS Smart SF. Metric fields are 4-bit buckets; fission_rate is always
// carried and >= 1 (>1 turns on RedunCast replication).
struct QosSf {
    std::optional<std::uint8_t> single_hop_latency;
    std::optional<std::uint8_t> path_latency;
    std::optional<std::uint8_t> single_hop_loss;
    std::optional<std::uint8_t> path_loss;
    std::uint8_t fission_rate{1};

    bool operator==(const QosSf&) const = default;
};

// Backward Region Stack SF: traversed regions, source-side first. Any
// switch may truncate it, so nothing is validated beyond the length bound.
struct BrsSf {
    std::vector<RegionId> trail;  // 0..255 entries

    bool operator==(const BrsSf&) const = default;
};

struct SmartRegionHeader {
    std::optional<RegionStackSf> region_stack;
    std::optional<IdsSf> ids;
    std::optional<QosSf> qos;
    std::optional<BrsSf> brs;

    bool operator==(const SmartRegionHeader&) const = default;
};

// Wire layout (big-endian bit order, multi-byte integers MSB first):
//   byte 0: [active SFs: RS|IDs|QoS|BRS][RS flags: eph FID|intra FID|0|0]
//   RS block:  (eph FID nibble + 0 filler)? (intra FID byte)? depth, rids
//   IDs block: [PID|FID|0|0][0 filler], packed 12-bit PID/FID, sender, receiver
//   QoS block: [metric flags][fission nibble], present metrics two per byte
//   BRS block: zero byte, depth, rids
std::vector<std::uint8_t> encode_header(const SmartRegionHeader& h);

struct DecodeResult {
    SmartRegionHeader header;
    std::vector<std::uint8_t> payload;  // bytes past the header
};

DecodeResult decode_header(std::span<const std::uint8_t> bytes);

void push_region(SmartRegionHeader& h, RegionId rid);
RegionId pop_region(SmartRegionHeader& h);  // throws EmptyStack

enum class QosKind { latency, loss };

// Latency bucket k covers (10*2^(k-1), 10*2^k] us with bucket 0 for <= 10 us;
// loss bucket k covers (2^-(k+1), 2^-k] with bucket 15 absorbing <= 2^-16.
// Dequantize returns the bucket's upper bound.
std::uint8_t quantize_latency_us(std::uint64_t value_us);
std::uint64_t dequantize_latency_us(std::uint8_t bucket);
std::uint8_t quantize_loss(double probability);
double dequantize_loss(std::uint8_t bucket);

std::uint8_t quantize_qos(double value, QosKind kind);
double dequantize_qos(std::uint8_t bucket, QosKind kind);

}  // namespace smartregion::wire
