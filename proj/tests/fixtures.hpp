#pragma once

// Hand-built packet and capture fixtures shared by the test suites.

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ntg/bytes.hpp"
#include "ntg/pcap.hpp"

namespace fixtures {

struct TcpFields {
    uint32_t seq = 0;
    uint32_t ack = 0;
    uint8_t flags = 0x18; // PSH|ACK
    uint16_t window = 65535;
    uint16_t checksum = 0x1234;
    uint16_t urgptr = 0;
};

inline std::vector<uint8_t> eth_header(uint16_t ethertype,
                                       const std::array<uint8_t, 6>& dst = {2, 0, 0, 0, 0, 1},
                                       const std::array<uint8_t, 6>& src = {2, 0, 0, 0, 0, 2}) {
    std::vector<uint8_t> f(dst.begin(), dst.end());
    f.insert(f.end(), src.begin(), src.end());
    ntg::push_u16be(f, ethertype);
    return f;
}

inline void append_ipv4(std::vector<uint8_t>& f, uint32_t src, uint32_t dst, uint8_t proto,
                        uint16_t payload_len, uint8_t ttl = 64, uint16_t id = 1) {
    f.push_back(0x45); // version 4, ihl 5
    f.push_back(0);    // tos
    ntg::push_u16be(f, static_cast<uint16_t>(20 + payload_len));
    ntg::push_u16be(f, id);
    ntg::push_u16be(f, 0x4000); // DF
    f.push_back(ttl);
    f.push_back(proto);
    ntg::push_u16be(f, 0xbeef); // checksum, not validated
    ntg::push_u32be(f, src);
    ntg::push_u32be(f, dst);
}

inline std::vector<uint8_t> tcp_frame(uint32_t sip, uint16_t sport, uint32_t dip,
                                      uint16_t dport, size_t payload_len = 6,
                                      TcpFields t = {}) {
    std::vector<uint8_t> f = eth_header(0x0800);
    append_ipv4(f, sip, dip, 6, static_cast<uint16_t>(20 + payload_len));
    ntg::push_u16be(f, sport);
    ntg::push_u16be(f, dport);
    ntg::push_u32be(f, t.seq);
    ntg::push_u32be(f, t.ack);
    f.push_back(0x50); // data offset 5, reserved 0
    f.push_back(t.flags);
    ntg::push_u16be(f, t.window);
    ntg::push_u16be(f, t.checksum);
    ntg::push_u16be(f, t.urgptr);
    for (size_t i = 0; i < payload_len; ++i) f.push_back(static_cast<uint8_t>(0x40 + i));
    return f;
}

inline std::vector<uint8_t> udp_frame(uint32_t sip, uint16_t sport, uint32_t dip,
                                      uint16_t dport, std::vector<uint8_t> payload = {1, 2, 3, 4,
                                                                                      5, 6}) {
    std::vector<uint8_t> f = eth_header(0x0800);
    append_ipv4(f, sip, dip, 17, static_cast<uint16_t>(8 + payload.size()));
    ntg::push_u16be(f, sport);
    ntg::push_u16be(f, dport);
    ntg::push_u16be(f, static_cast<uint16_t>(8 + payload.size()));
    ntg::push_u16be(f, 0xcafe);
    f.insert(f.end(), payload.begin(), payload.end());
    return f;
}

inline ntg::Packet packet(std::vector<uint8_t> data, uint32_t sec = 0, uint32_t frac = 0) {
    ntg::Packet p;
    p.orig_len = static_cast<uint32_t>(data.size());
    p.data = std::move(data);
    p.ts_sec = sec;
    p.ts_frac = frac;
    return p;
}

// DNS label encoding without compression.
inline void append_dns_name(std::vector<uint8_t>& f, const std::string& name) {
    size_t start = 0;
    while (start <= name.size()) {
        size_t dot = name.find('.', start);
        if (dot == std::string::npos) dot = name.size();
        f.push_back(static_cast<uint8_t>(dot - start));
        for (size_t i = start; i < dot; ++i) f.push_back(static_cast<uint8_t>(name[i]));
        start = dot + 1;
        if (dot == name.size()) break;
    }
    f.push_back(0);
}

// A UDP frame from server port 53 carrying one question and A answers.
inline std::vector<uint8_t> dns_a_response(const std::string& qname,
                                           const std::vector<uint32_t>& addrs,
                                           uint32_t server_ip = 0x08080808,
                                           uint32_t client_ip = 0x0a000002) {
    std::vector<uint8_t> msg;
    ntg::push_u16be(msg, 0x1234);                              // id
    ntg::push_u16be(msg, 0x8180);                              // response, RD|RA
    ntg::push_u16be(msg, 1);                                   // qdcount
    ntg::push_u16be(msg, static_cast<uint16_t>(addrs.size())); // ancount
    ntg::push_u16be(msg, 0);
    ntg::push_u16be(msg, 0);
    append_dns_name(msg, qname);
    ntg::push_u16be(msg, 1); // qtype A
    ntg::push_u16be(msg, 1); // qclass IN
    for (uint32_t a : addrs) {
        ntg::push_u16be(msg, 0xc00c); // pointer to the question name
        ntg::push_u16be(msg, 1);
        ntg::push_u16be(msg, 1);
        ntg::push_u32be(msg, 300); // ttl
        ntg::push_u16be(msg, 4);
        ntg::push_u32be(msg, a);
    }
    return udp_frame(server_ip, 53, client_ip, 51111, msg);
}

// An interleaved two-connection TCP capture.
inline ntg::CaptureFile two_flow_capture() {
    ntg::CaptureFile cap;
    const uint32_t a = 0x0a000001, b = 0x0a000002, c = 0x0a000003;
    cap.packets.push_back(packet(tcp_frame(b, 51000, a, 443, 6, {.seq = 100}), 1, 0));
    cap.packets.push_back(packet(tcp_frame(c, 52000, a, 443, 8, {.seq = 200}), 1, 100));
    cap.packets.push_back(packet(tcp_frame(a, 443, b, 51000, 10, {.seq = 300}), 1, 200));
    cap.packets.push_back(packet(tcp_frame(a, 443, c, 52000, 4, {.seq = 400}), 1, 300));
    cap.packets.push_back(packet(tcp_frame(b, 51000, a, 443, 2, {.seq = 500}), 1, 400));
    return cap;
}

// Deterministic multi-flow capture for training-scale tests. Each flow is a
// short TCP exchange with flow-specific ports and payload bytes.
inline ntg::CaptureFile synthetic_corpus_capture(size_t flows, size_t packets_per_flow = 4,
                                                 size_t payload = 8, uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    ntg::CaptureFile cap;
    for (size_t i = 0; i < flows; ++i) {
        const uint32_t client = 0x0a000100 + static_cast<uint32_t>(i);
        const uint32_t server = 0xc0a80001;
        const uint16_t sport = static_cast<uint16_t>(40000 + i);
        for (size_t k = 0; k < packets_per_flow; ++k) {
            const bool c2s = (k % 2 == 0);
            TcpFields t;
            t.seq = static_cast<uint32_t>(1000 * i + 100 * k);
            std::vector<uint8_t> frame =
                c2s ? tcp_frame(client, sport, server, 443, 0, t)
                    : tcp_frame(server, 443, client, sport, 0, t);
            for (size_t j = 0; j < payload; ++j)
                frame.push_back(static_cast<uint8_t>(byte(rng)));
            // keep the IP length field consistent with the padded payload
            const uint16_t iplen = static_cast<uint16_t>(frame.size() - 14);
            frame[16] = static_cast<uint8_t>(iplen >> 8);
            frame[17] = static_cast<uint8_t>(iplen & 0xff);
            cap.packets.push_back(
                packet(std::move(frame), static_cast<uint32_t>(i), static_cast<uint32_t>(k)));
        }
    }
    return cap;
}

} // namespace fixtures
