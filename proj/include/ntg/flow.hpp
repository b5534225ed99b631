#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ntg/errors.hpp"
#include "ntg/headers.hpp"
#include "ntg/pcap.hpp"

namespace ntg {

// Flows are bidirectional: the two endpoints are stored in canonical
// (address, port) lexicographic order, so both directions of a connection
// map to one key.
struct FlowKey {
    uint32_t addr_a = 0;
    uint16_t port_a = 0;
    uint32_t addr_b = 0;
    uint16_t port_b = 0;
    uint8_t proto = 0;

    auto tied() const { return std::tie(addr_a, port_a, addr_b, port_b, proto); }
    bool operator==(const FlowKey& o) const { return tied() == o.tied(); }
    bool operator<(const FlowKey& o) const { return tied() < o.tied(); }

    std::string to_string() const;
};

struct FlowRecord {
    FlowKey key;
    std::vector<Packet> packets; // original capture order
    std::string label;
};

inline std::string ipv4_to_string(uint32_t addr) {
    return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xff) + "." +
           std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

inline std::string FlowKey::to_string() const {
    return ipv4_to_string(addr_a) + "_" + std::to_string(port_a) + "_" + ipv4_to_string(addr_b) +
           "_" + std::to_string(port_b) + "_" + std::to_string(proto);
}

inline FlowKey extract_key(const Packet& p) {
    auto eth = EthView::parse(p.data);
    if (!eth) throw NotIPv4("frame shorter than Ethernet header");
    if (eth->ethertype() != ethertype_ipv4) throw NotIPv4("EtherType is not IPv4");
    auto ip = Ipv4View::parse(eth->payload());
    if (!ip) throw HeaderTruncated("incomplete IPv4 header");

    uint16_t sport = 0, dport = 0;
    if (ip->protocol() == ip_proto_tcp || ip->protocol() == ip_proto_udp) {
        auto tp = ip->payload();
        if (tp.size() < 4) throw HeaderTruncated("transport ports truncated");
        sport = load_u16be(tp.data());
        dport = load_u16be(tp.data() + 2);
    }

    FlowKey k;
    k.proto = ip->protocol();
    if (std::make_pair(ip->src(), sport) <= std::make_pair(ip->dst(), dport)) {
        k.addr_a = ip->src();
        k.port_a = sport;
        k.addr_b = ip->dst();
        k.port_b = dport;
    } else {
        k.addr_a = ip->dst();
        k.port_a = dport;
        k.addr_b = ip->src();
        k.port_b = sport;
    }
    return k;
}

struct SplitResult {
    std::vector<FlowRecord> flows; // ordered by first-packet index
    size_t diverted = 0;           // packets that did not parse to a key
};

inline SplitResult split_flows(const CaptureFile& cap, const std::string& label) {
    SplitResult res;
    std::map<FlowKey, size_t> index;
    for (const Packet& p : cap.packets) {
        FlowKey key;
        try {
            key = extract_key(p);
        } catch (const Error&) {
            res.diverted++;
            continue;
        }
        auto [it, inserted] = index.try_emplace(key, res.flows.size());
        if (inserted) res.flows.push_back(FlowRecord{key, {}, label});
        res.flows[it->second].packets.push_back(p);
    }
    return res;
}

// --- DNS response scanning ---------------------------------------------

namespace detail {

// Decompresses a DNS name starting at `off` within `msg`. Returns the
// lower-cased dotted name and advances `off` past the in-place portion.
inline std::string dns_read_name(std::span<const uint8_t> msg, size_t& off) {
    std::string name;
    size_t pos = off;
    bool jumped = false;
    size_t jumps = 0;
    while (true) {
        if (pos >= msg.size()) throw Error("dns: name runs past message");
        const uint8_t len = msg[pos];
        if (len == 0) {
            if (!jumped) off = pos + 1;
            break;
        }
        if ((len & 0xc0) == 0xc0) {
            if (pos + 1 >= msg.size()) throw Error("dns: bad compression pointer");
            if (++jumps > 64) throw Error("dns: compression loop");
            const size_t target = static_cast<size_t>(len & 0x3f) << 8 | msg[pos + 1];
            if (!jumped) off = pos + 2;
            jumped = true;
            pos = target;
            continue;
        }
        if ((len & 0xc0) != 0) throw Error("dns: reserved label type");
        if (pos + 1 + len > msg.size()) throw Error("dns: label runs past message");
        if (!name.empty()) name += '.';
        for (size_t i = 0; i < len; ++i) {
            char c = static_cast<char>(msg[pos + 1 + i]);
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            name += c;
        }
        pos += 1 + static_cast<size_t>(len);
    }
    return name;
}

inline bool suffix_matches(const std::string& name, const std::string& pattern) {
    std::string pat;
    pat.reserve(pattern.size());
    for (char c : pattern) pat += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    if (name.size() < pat.size()) return false;
    if (name.compare(name.size() - pat.size(), pat.size(), pat) != 0) return false;
    // suffix must align on a label boundary ("ample.com" must not match)
    return name.size() == pat.size() || name[name.size() - pat.size() - 1] == '.';
}

// Extracts A-record addresses from one DNS response whose question name
// matches a suffix pattern.
inline void dns_collect(std::span<const uint8_t> msg, const std::vector<std::string>& patterns,
                        std::set<uint32_t>& out) {
    if (msg.size() < 12) throw Error("dns: header truncated");
    const uint16_t flags = load_u16be(msg.data() + 2);
    if ((flags & 0x8000) == 0) return; // query, not a response
    const uint16_t qdcount = load_u16be(msg.data() + 4);
    const uint16_t ancount = load_u16be(msg.data() + 6);

    size_t off = 12;
    bool query_matches = false;
    for (uint16_t q = 0; q < qdcount; ++q) {
        const std::string qname = dns_read_name(msg, off);
        if (off + 4 > msg.size()) throw Error("dns: question truncated");
        off += 4; // qtype + qclass
        for (const std::string& pat : patterns)
            if (suffix_matches(qname, pat)) query_matches = true;
    }
    if (!query_matches) return;

    for (uint16_t a = 0; a < ancount; ++a) {
        dns_read_name(msg, off);
        if (off + 10 > msg.size()) throw Error("dns: answer truncated");
        const uint16_t rtype = load_u16be(msg.data() + off);
        const uint16_t rclass = load_u16be(msg.data() + off + 2);
        const uint16_t rdlen = load_u16be(msg.data() + off + 8);
        off += 10;
        if (off + rdlen > msg.size()) throw Error("dns: rdata truncated");
        if (rtype == 1 && rclass == 1 && rdlen == 4) out.insert(load_u32be(msg.data() + off));
        off += rdlen;
    }
}

inline std::optional<UdpView> udp_of(const Packet& p) {
    auto eth = EthView::parse(p.data);
    if (!eth || eth->ethertype() != ethertype_ipv4) return std::nullopt;
    auto ip = Ipv4View::parse(eth->payload());
    if (!ip || ip->protocol() != ip_proto_udp) return std::nullopt;
    return UdpView::parse(ip->payload());
}

} // namespace detail

struct DnsFilterResult {
    CaptureFile capture;
    std::set<uint32_t> resolved; // addresses collected from matching A records
    size_t malformed_dns = 0;
};

// Scans UDP port-53 responses, resolves matching query names to addresses,
// and keeps packets touching those addresses plus all DNS traffic. An empty
// pattern list passes the capture through unchanged.
inline DnsFilterResult dns_filter(const CaptureFile& cap,
                                  const std::vector<std::string>& name_patterns) {
    DnsFilterResult res;
    res.capture.link_type = cap.link_type;
    res.capture.resolution = cap.resolution;
    if (name_patterns.empty()) {
        res.capture.packets = cap.packets;
        return res;
    }

    auto is_dns = [](const UdpView& udp) { return udp.sport() == 53 || udp.dport() == 53; };

    for (const Packet& p : cap.packets) {
        auto udp = detail::udp_of(p);
        if (!udp || !is_dns(*udp)) continue;
        try {
            detail::dns_collect(udp->payload(), name_patterns, res.resolved);
        } catch (const Error&) {
            res.malformed_dns++;
        }
    }

    for (const Packet& p : cap.packets) {
        auto udp = detail::udp_of(p);
        if (udp && is_dns(*udp)) {
            res.capture.packets.push_back(p);
            continue;
        }
        auto eth = EthView::parse(p.data);
        if (!eth || eth->ethertype() != ethertype_ipv4) continue;
        auto ip = Ipv4View::parse(eth->payload());
        if (!ip) continue;
        if (res.resolved.contains(ip->src()) || res.resolved.contains(ip->dst()))
            res.capture.packets.push_back(p);
    }
    return res;
}

} // namespace ntg
