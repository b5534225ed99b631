#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntg/errors.hpp"
#include "ntg/headers.hpp"
#include "ntg/pcap.hpp"

namespace ntg {

// Fixed-width per-bit header encoding. Every packet maps to the same 1136
// bit positions; a position is 0/1 when the field is present and -1 when the
// protocol is absent or the bytes fall beyond the captured data.
//
//   Ethernet 112 | IPv4 160 + options 320 | TCP 160 + options 320 | UDP 64

struct FieldSpec {
    std::string name;     // "proto.field"
    size_t bit_offset;    // global position of the field's first bit
    size_t bit_width;
};

struct FieldLayout {
    std::vector<FieldSpec> fields;
    size_t total_bits = 0;

    const FieldSpec& find(const std::string& name) const {
        for (const FieldSpec& f : fields)
            if (f.name == name) return f;
        throw Error("no such field: " + name);
    }
};

constexpr size_t fieldbits_eth_offset = 0;
constexpr size_t fieldbits_ipv4_offset = 112;
constexpr size_t fieldbits_ipv4_opts_offset = 112 + 160;
constexpr size_t fieldbits_tcp_offset = 112 + 480;
constexpr size_t fieldbits_tcp_opts_offset = 112 + 480 + 160;
constexpr size_t fieldbits_udp_offset = 112 + 480 + 480;
constexpr size_t fieldbits_total = 1136;

inline const FieldLayout& layout() {
    static const FieldLayout l = [] {
        FieldLayout fl;
        size_t off = 0;
        auto add = [&](const std::string& name, size_t width) {
            fl.fields.push_back({name, off, width});
            off += width;
        };
        add("eth.dst", 48);
        add("eth.src", 48);
        add("eth.type", 16);
        add("ipv4.version", 4);
        add("ipv4.ihl", 4);
        add("ipv4.tos", 8);
        add("ipv4.len", 16);
        add("ipv4.id", 16);
        add("ipv4.flags", 3);
        add("ipv4.frag", 13);
        add("ipv4.ttl", 8);
        add("ipv4.proto", 8);
        add("ipv4.chksum", 16);
        add("ipv4.src", 32);
        add("ipv4.dst", 32);
        add("ipv4.options", 320);
        add("tcp.sport", 16);
        add("tcp.dport", 16);
        add("tcp.seq", 32);
        add("tcp.ack", 32);
        add("tcp.dataofs", 4);
        add("tcp.reserved", 4);
        add("tcp.flags", 8);
        add("tcp.window", 16);
        add("tcp.chksum", 16);
        add("tcp.urgptr", 16);
        add("tcp.options", 320);
        add("udp.sport", 16);
        add("udp.dport", 16);
        add("udp.len", 16);
        add("udp.chksum", 16);
        fl.total_bits = off;
        return fl;
    }();
    return l;
}

using FieldBitVector = std::vector<int8_t>; // entries in {-1, 0, 1}

namespace detail {

// Copies `nbits` MSB-first from frame[byte_start..] into vec[bit_start..];
// bits whose source byte lies beyond the captured data become -1.
inline void copy_bits(FieldBitVector& vec, size_t bit_start,
                      std::span<const uint8_t> frame, size_t byte_start, size_t nbits) {
    for (size_t i = 0; i < nbits; ++i) {
        const size_t byte = byte_start + (i / 8);
        if (byte >= frame.size()) {
            vec[bit_start + i] = -1;
        } else {
            vec[bit_start + i] =
                static_cast<int8_t>((frame[byte] >> (7 - (i % 8))) & 1);
        }
    }
}

} // namespace detail

inline FieldBitVector encode_bits(const Packet& p) {
    std::span<const uint8_t> frame(p.data);
    if (frame.size() < eth_header_len) throw NotEthernet("frame shorter than 14 bytes");

    FieldBitVector vec(fieldbits_total, -1);
    detail::copy_bits(vec, fieldbits_eth_offset, frame, 0, 112);

    const uint16_t etype = load_u16be(frame.data() + 12);
    if (etype != ethertype_ipv4) return vec;

    const size_t ip_off = eth_header_len;
    // fixed IPv4 header bits straight from the frame
    detail::copy_bits(vec, fieldbits_ipv4_offset, frame, ip_off, 160);

    size_t ihl = 0;
    if (ip_off < frame.size()) ihl = frame[ip_off] & 0x0f;
    if (ihl < 5) return vec; // header length byte missing or nonsensical

    // options: present bits from the frame, zero-padded to the fixed width
    const size_t opt_bytes = (ihl - 5) * 4;
    detail::copy_bits(vec, fieldbits_ipv4_opts_offset, frame, ip_off + 20, opt_bytes * 8);
    for (size_t i = opt_bytes * 8; i < 320; ++i) vec[fieldbits_ipv4_opts_offset + i] = 0;

    const size_t ip_end = ip_off + ihl * 4;
    if (ip_off + 10 >= frame.size()) return vec; // protocol byte not captured
    const uint8_t proto = frame[ip_off + 9];

    if (proto == ip_proto_tcp) {
        detail::copy_bits(vec, fieldbits_tcp_offset, frame, ip_end, 160);
        size_t dataofs = 0;
        if (ip_end + 12 < frame.size()) dataofs = frame[ip_end + 12] >> 4;
        if (dataofs >= 5) {
            const size_t topt = (dataofs - 5) * 4;
            detail::copy_bits(vec, fieldbits_tcp_opts_offset, frame, ip_end + 20, topt * 8);
            for (size_t i = topt * 8; i < 320; ++i) vec[fieldbits_tcp_opts_offset + i] = 0;
        }
    } else if (proto == ip_proto_udp) {
        detail::copy_bits(vec, fieldbits_udp_offset, frame, ip_end, 64);
    }
    return vec;
}

// Numeric header-field values keyed by the evaluation field inventory
// (Ether_*, IP_*, TCP_*/UDP_* plus option/payload presence indicators).
// Absent fields are omitted.
inline std::map<std::string, uint64_t> extract_fields(const Packet& p) {
    std::span<const uint8_t> frame(p.data);
    auto eth = EthView::parse(frame);
    if (!eth) throw HeaderTruncated("frame shorter than Ethernet header");

    std::map<std::string, uint64_t> out;
    uint64_t dst = 0, src = 0;
    for (size_t i = 0; i < 6; ++i) {
        dst = dst << 8 | frame[i];
        src = src << 8 | frame[6 + i];
    }
    out["Ether_dst"] = dst;
    out["Ether_src"] = src;
    out["Ether_type"] = eth->ethertype();
    if (eth->ethertype() != ethertype_ipv4) return out;

    auto ip = Ipv4View::parse(eth->payload());
    if (!ip) throw HeaderTruncated("incomplete IPv4 header");
    out["IP_version"] = 4;
    out["IP_ihl"] = ip->ihl();
    out["IP_tos"] = ip->tos();
    out["IP_len"] = ip->total_len();
    out["IP_id"] = ip->id();
    out["IP_flags"] = ip->flags();
    out["IP_frag"] = ip->frag_offset();
    out["IP_ttl"] = ip->ttl();
    out["IP_proto"] = ip->protocol();
    out["IP_chksum"] = ip->checksum();
    out["IP_src"] = ip->src();
    out["IP_dst"] = ip->dst();
    out["IP_options"] = ip->ihl() > 5 ? 1 : 0;

    if (ip->protocol() == ip_proto_tcp) {
        auto tcp = TcpView::parse(ip->payload());
        if (!tcp) throw HeaderTruncated("incomplete TCP header");
        out["TCP_sport"] = tcp->sport();
        out["TCP_dport"] = tcp->dport();
        out["TCP_seq"] = tcp->seq();
        out["TCP_ack"] = tcp->ack();
        out["TCP_dataofs"] = tcp->data_offset();
        out["TCP_reserved"] = tcp->reserved();
        out["TCP_flags"] = tcp->flags();
        out["TCP_window"] = tcp->window();
        out["TCP_chksum"] = tcp->checksum();
        out["TCP_urgptr"] = tcp->urgptr();
        out["TCP_options"] = tcp->data_offset() > 5 ? 1 : 0;
        out["Raw_load"] = tcp->payload().empty() ? 0 : 1;
    } else if (ip->protocol() == ip_proto_udp) {
        auto udp = UdpView::parse(ip->payload());
        if (!udp) throw HeaderTruncated("incomplete UDP header");
        out["UDP_sport"] = udp->sport();
        out["UDP_dport"] = udp->dport();
        out["UDP_len"] = udp->length();
        out["UDP_chksum"] = udp->checksum();
        out["Raw_load"] = udp->payload().empty() ? 0 : 1;
    }
    return out;
}

// One row per packet; columns are "proto.field.bitN".
inline void write_fieldbits_csv(const std::string& path, const std::vector<Packet>& packets) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    const FieldLayout& fl = layout();
    bool first = true;
    for (const FieldSpec& f : fl.fields)
        for (size_t i = 0; i < f.bit_width; ++i) {
            if (!first) out << ",";
            out << f.name << ".bit" << i;
            first = false;
        }
    out << "\n";
    for (const Packet& p : packets) {
        const FieldBitVector vec = encode_bits(p);
        for (size_t i = 0; i < vec.size(); ++i) {
            if (i) out << ",";
            out << static_cast<int>(vec[i]);
        }
        out << "\n";
    }
}

} // namespace ntg
