#include "smartregion/wire.hpp"

#include <cmath>

namespace smartregion::wire {

namespace {

void require(bool ok, const char* field) {
    if (!ok) throw Error(Errc::invariant_violation, field);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() {
        if (pos_ >= bytes_.size()) throw DecodeError(Errc::truncated, pos_, "unexpected end");
        return bytes_[pos_++];
    }
    std::uint16_t u16() {
        std::uint16_t hi = u8();
        return static_cast<std::uint16_t>(hi << 8 | u8());
    }
    std::size_t pos() const { return pos_; }
    std::vector<std::uint8_t> rest() const {
        return {bytes_.begin() + static_cast<std::ptrdiff_t>(pos_), bytes_.end()};
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_header(const SmartRegionHeader& h) {
    require(h.region_stack || h.ids || h.qos || h.brs, "at least one SuperField required");
    std::vector<std::uint8_t> out;

    std::uint8_t active = 0;
    if (h.region_stack) active |= 0x8;
    if (h.ids) active |= 0x4;
    if (h.qos) active |= 0x2;
    if (h.brs) active |= 0x1;

    std::uint8_t rs_flags = 0;
    if (h.region_stack) {
        if (h.region_stack->ephemeral_single_hop_fid) rs_flags |= 0x8;
        if (h.region_stack->intra_region_fid) rs_flags |= 0x4;
    }
    out.push_back(static_cast<std::uint8_t>(active << 4 | rs_flags));

    if (h.region_stack) {
        const RegionStackSf& rs = *h.region_stack;
        if (rs.ephemeral_single_hop_fid) {
            require(*rs.ephemeral_single_hop_fid <= 0xF, "ephemeral FID exceeds 4 bits");
            out.push_back(static_cast<std::uint8_t>(*rs.ephemeral_single_hop_fid << 4));
        }
        if (rs.intra_region_fid) out.push_back(*rs.intra_region_fid);
        require(!rs.stack.empty() && rs.stack.size() <= 255, "stack depth must be 1..255");
        out.push_back(static_cast<std::uint8_t>(rs.stack.size()));
        for (RegionId rid : rs.stack) {
            require(rid != kUnsetRegion, "stack rid must be nonzero");
            put_u16(out, rid);
        }
    }

    if (h.ids) {
        const IdsSf& ids = *h.ids;
        std::uint8_t flags = 0;
        if (ids.packet_pid) flags |= 0x8;
        if (ids.flow_fid) flags |= 0x4;
        out.push_back(static_cast<std::uint8_t>(flags << 4));
        if (ids.packet_pid) require(*ids.packet_pid <= 0xFFF, "PID exceeds 12 bits");
        if (ids.flow_fid) require(*ids.flow_fid <= 0xFFF, "FID exceeds 12 bits");
        if (ids.packet_pid && ids.flow_fid) {
            out.push_back(static_cast<std::uint8_t>(*ids.packet_pid >> 4));
            out.push_back(static_cast<std::uint8_t>((*ids.packet_pid & 0xF) << 4 | *ids.flow_fid >> 8));
            out.push_back(static_cast<std::uint8_t>(*ids.flow_fid & 0xFF));
        } else if (ids.packet_pid || ids.flow_fid) {
            std::uint16_t v = ids.packet_pid ? *ids.packet_pid : *ids.flow_fid;
            out.push_back(static_cast<std::uint8_t>(v >> 4));
            out.push_back(static_cast<std::uint8_t>((v & 0xF) << 4));
        }
        require(ids.sender_nid != kUnsetVertex, "sender NID must be nonzero");
        put_u16(out, ids.sender_nid);
        put_u16(out, ids.receiver_nid);
    }

    if (h.qos) {
        const QosSf& q = *h.qos;
        require(q.fission_rate >= 1 && q.fission_rate <= 0xF, "fission rate must be 1..15");
        std::uint8_t flags = 0;
        std::vector<std::uint8_t> metrics;
        auto add = [&](const std::optional<std::uint8_t>& m, std::uint8_t bit) {
            if (!m) return;
            require(*m <= 0xF, "QoS bucket exceeds 4 bits");
            flags |= bit;
            metrics.push_back(*m);
        };
        add(q.single_hop_latency, 0x8);
        add(q.path_latency, 0x4);
        add(q.single_hop_loss, 0x2);
        add(q.path_loss, 0x1);
        out.push_back(static_cast<std::uint8_t>(flags << 4 | q.fission_rate));
        for (std::size_t i = 0; i < metrics.size(); i += 2) {
            std::uint8_t lo = (i + 1 < metrics.size()) ? metrics[i + 1] : 0;
            out.push_back(static_cast<std::uint8_t>(metrics[i] << 4 | lo));
        }
    }

    if (h.brs) {
        const BrsSf& brs = *h.brs;
        require(brs.trail.size() <= 255, "BRS depth must be 0..255");
        out.push_back(0x00);
        out.push_back(static_cast<std::uint8_t>(brs.trail.size()));
        for (RegionId rid : brs.trail) put_u16(out, rid);
    }
    return out;
}

DecodeResult decode_header(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    SmartRegionHeader h;

    std::uint8_t byte0 = r.u8();
    std::uint8_t active = byte0 >> 4;
    std::uint8_t rs_flags = byte0 & 0xF;
    if (active == 0)
        throw DecodeError(Errc::no_active_superfields, 0, "no SuperFields active");
    bool has_rs = active & 0x8, has_ids = active & 0x4, has_qos = active & 0x2, has_brs = active & 0x1;
    if (!has_rs && rs_flags != 0)
        throw DecodeError(Errc::reserved_bits_nonzero, 0, "region-stack flags without region stack");
    if (rs_flags & 0x3)
        throw DecodeError(Errc::reserved_bits_nonzero, 0, "reserved region-stack flag bits");

    if (has_rs) {
        RegionStackSf rs;
        if (rs_flags & 0x8) {
            std::size_t at = r.pos();
            std::uint8_t b = r.u8();
            if (b & 0x0F) throw DecodeError(Errc::reserved_bits_nonzero, at, "ephemeral FID filler");
            rs.ephemeral_single_hop_fid = static_cast<std::uint8_t>(b >> 4);
        }
        if (rs_flags & 0x4) rs.intra_region_fid = r.u8();
        std::size_t depth_at = r.pos();
        std::uint8_t depth = r.u8();
        if (depth == 0) throw DecodeError(Errc::empty_stack, depth_at, "region stack depth 0");
        for (std::uint8_t i = 0; i < depth; ++i) {
            std::size_t at = r.pos();
            RegionId rid = r.u16();
            if (rid == kUnsetRegion) throw DecodeError(Errc::zero_rid, at, "zero rid in region stack");
            rs.stack.push_back(rid);
        }
        h.region_stack = std::move(rs);
    }

    if (has_ids) {
        IdsSf ids;
        std::size_t flags_at = r.pos();
        std::uint8_t b = r.u8();
        if (b & 0x3F) throw DecodeError(Errc::reserved_bits_nonzero, flags_at, "IDs flag filler");
        bool has_pid = b & 0x80, has_fid = b & 0x40;
        if (has_pid && has_fid) {
            std::uint8_t b0 = r.u8(), b1 = r.u8(), b2 = r.u8();
            ids.packet_pid = static_cast<std::uint16_t>(b0 << 4 | b1 >> 4);
            ids.flow_fid = static_cast<std::uint16_t>((b1 & 0xF) << 8 | b2);
        } else if (has_pid || has_fid) {
            std::uint8_t b0 = r.u8();
            std::size_t at = r.pos();
            std::uint8_t b1 = r.u8();
            if (b1 & 0x0F) throw DecodeError(Errc::reserved_bits_nonzero, at, "12-bit id filler");
            std::uint16_t v = static_cast<std::uint16_t>(b0 << 4 | b1 >> 4);
            if (has_pid) ids.packet_pid = v;
            else ids.flow_fid = v;
        }
        std::size_t sender_at = r.pos();
        ids.sender_nid = r.u16();
        if (ids.sender_nid == kUnsetVertex)
            throw DecodeError(Errc::zero_sender_nid, sender_at, "sender NID is zero");
        ids.receiver_nid = r.u16();
        h.ids = ids;
    }

    if (has_qos) {
        QosSf q;
        std::size_t at = r.pos();
        std::uint8_t b = r.u8();
        std::uint8_t flags = b >> 4;
        q.fission_rate = b & 0xF;
        if (q.fission_rate == 0)
            throw DecodeError(Errc::zero_fission_rate, at, "fission rate 0");
        int count = ((flags >> 3) & 1) + ((flags >> 2) & 1) + ((flags >> 1) & 1) + (flags & 1);
        std::vector<std::uint8_t> metrics;
        for (int i = 0; i < count; i += 2) {
            std::size_t mat = r.pos();
            std::uint8_t mb = r.u8();
            metrics.push_back(static_cast<std::uint8_t>(mb >> 4));
            if (i + 1 < count) metrics.push_back(static_cast<std::uint8_t>(mb & 0xF));
            else if (mb & 0x0F)
                throw DecodeError(Errc::reserved_bits_nonzero, mat, "QoS metric filler");
        }
        std::size_t idx = 0;
        if (flags & 0x8) q.single_hop_latency = metrics[idx++];
        if (flags & 0x4) q.path_latency = metrics[idx++];
        if (flags & 0x2) q.single_hop_loss = metrics[idx++];
        if (flags & 0x1) q.path_loss = metrics[idx++];
        h.qos = q;
    }

    if (has_brs) {
        std::size_t at = r.pos();
        std::uint8_t b = r.u8();
        if (b != 0) throw DecodeError(Errc::reserved_bits_nonzero, at, "BRS reserved byte");
        std::uint8_t depth = r.u8();
        BrsSf brs;
        for (std::uint8_t i = 0; i < depth; ++i) brs.trail.push_back(r.u16());
        h.brs = std::move(brs);
    }

    return DecodeResult{std::move(h), r.rest()};
}

void push_region(SmartRegionHeader& h, RegionId rid) {
    if (!h.region_stack) h.region_stack = RegionStackSf{};
    h.region_stack->stack.insert(h.region_stack->stack.begin(), rid);
}

RegionId pop_region(SmartRegionHeader& h) {
    if (!h.region_stack || h.region_stack->stack.empty())
        throw Error(Errc::empty_stack, "pop on empty region stack");
    RegionId rid = h.region_stack->stack.front();
    h.region_stack->stack.erase(h.region_stack->stack.begin());
    return rid;
}

std::uint8_t quantize_latency_us(std::uint64_t value_us) {
    std::uint8_t bucket = 0;
    std::uint64_t bound = 10;
    while (value_us > bound && bucket < 15) {
        bound *= 2;
        ++bucket;
    }
    return bucket;
}

std::uint64_t dequantize_latency_us(std::uint8_t bucket) {
    return std::uint64_t{10} << (bucket & 0xF);
}

std::uint8_t quantize_loss(double probability) {
    std::uint8_t bucket = 0;
    double bound = 0.5;
    while (probability <= bound && bucket < 15) {
        bound /= 2;
        ++bucket;
    }
    return bucket;
}

double dequantize_loss(std::uint8_t bucket) {
    return std::ldexp(1.0, -static_cast<int>(bucket & 0xF));
}

std::uint8_t quantize_qos(double value, QosKind kind) {
    if (value < 0) throw Error(Errc::invariant_violation, "QoS value must be non-negative");
    if (kind == QosKind::latency)
        return quantize_latency_us(static_cast<std::uint64_t>(value));
    return quantize_loss(value);
}

double dequantize_qos(std::uint8_t bucket, QosKind kind) {
    if (kind == QosKind::latency) return static_cast<double>(dequantize_latency_us(bucket));
    return dequantize_loss(bucket);
}

}  // namespace smartregion::wire
