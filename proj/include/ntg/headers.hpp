#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ntg/bytes.hpp"

namespace ntg {

// Minimal header views over a raw Ethernet frame. Parsing is lenient: each
// view reports how far the frame actually reaches, so callers can decide
// between erroring and marking fields absent (snap-truncated captures keep
// their packets).

constexpr size_t eth_header_len = 14;
constexpr uint16_t ethertype_ipv4 = 0x0800;
constexpr uint8_t ip_proto_tcp = 6;
constexpr uint8_t ip_proto_udp = 17;

struct EthView {
    std::span<const uint8_t> frame;

    static std::optional<EthView> parse(std::span<const uint8_t> frame) {
        if (frame.size() < eth_header_len) return std::nullopt;
        return EthView{frame};
    }
    uint16_t ethertype() const { return load_u16be(frame.data() + 12); }
    std::span<const uint8_t> payload() const { return frame.subspan(eth_header_len); }
};

struct Ipv4View {
    std::span<const uint8_t> bytes; // starts at the IP version byte

    // Requires the full header (ihl * 4 bytes) to be present.
    static std::optional<Ipv4View> parse(std::span<const uint8_t> bytes) {
        if (bytes.empty()) return std::nullopt;
        const uint8_t version = bytes[0] >> 4;
        const size_t hlen = static_cast<size_t>(bytes[0] & 0x0f) * 4;
        if (version != 4 || hlen < 20 || bytes.size() < hlen) return std::nullopt;
        return Ipv4View{bytes};
    }
    size_t header_len() const { return static_cast<size_t>(bytes[0] & 0x0f) * 4; }
    uint8_t ihl() const { return bytes[0] & 0x0f; }
    uint8_t tos() const { return bytes[1]; }
    uint16_t total_len() const { return load_u16be(bytes.data() + 2); }
    uint16_t id() const { return load_u16be(bytes.data() + 4); }
    uint8_t flags() const { return bytes[6] >> 5; }
    uint16_t frag_offset() const { return load_u16be(bytes.data() + 6) & 0x1fff; }
    uint8_t ttl() const { return bytes[8]; }
    uint8_t protocol() const { return bytes[9]; }
    uint16_t checksum() const { return load_u16be(bytes.data() + 10); }
    uint32_t src() const { return load_u32be(bytes.data() + 12); }
    uint32_t dst() const { return load_u32be(bytes.data() + 16); }
    std::span<const uint8_t> payload() const { return bytes.subspan(header_len()); }
};

struct TcpView {
    std::span<const uint8_t> bytes;

    static std::optional<TcpView> parse(std::span<const uint8_t> bytes) {
        if (bytes.size() < 20) return std::nullopt;
        const size_t hlen = static_cast<size_t>(bytes[12] >> 4) * 4;
        if (hlen < 20 || bytes.size() < hlen) return std::nullopt;
        return TcpView{bytes};
    }
    uint16_t sport() const { return load_u16be(bytes.data()); }
    uint16_t dport() const { return load_u16be(bytes.data() + 2); }
    uint32_t seq() const { return load_u32be(bytes.data() + 4); }
    uint32_t ack() const { return load_u32be(bytes.data() + 8); }
    uint8_t data_offset() const { return bytes[12] >> 4; }
    uint8_t reserved() const { return bytes[12] & 0x0f; }
    uint8_t flags() const { return bytes[13]; }
    uint16_t window() const { return load_u16be(bytes.data() + 14); }
    uint16_t checksum() const { return load_u16be(bytes.data() + 16); }
    uint16_t urgptr() const { return load_u16be(bytes.data() + 18); }
    size_t header_len() const { return static_cast<size_t>(data_offset()) * 4; }
    std::span<const uint8_t> payload() const { return bytes.subspan(header_len()); }
};

struct UdpView {
    std::span<const uint8_t> bytes;

    static std::optional<UdpView> parse(std::span<const uint8_t> bytes) {
        if (bytes.size() < 8) return std::nullopt;
        return UdpView{bytes};
    }
    uint16_t sport() const { return load_u16be(bytes.data()); }
    uint16_t dport() const { return load_u16be(bytes.data() + 2); }
    uint16_t length() const { return load_u16be(bytes.data() + 4); }
    uint16_t checksum() const { return load_u16be(bytes.data() + 6); }
    std::span<const uint8_t> payload() const { return bytes.subspan(8); }
};

} // namespace ntg
