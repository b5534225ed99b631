#pragma once

#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ntg/bytes.hpp"
#include "ntg/errors.hpp"

namespace ntg {

// Classic PCAP only. Readers accept all four magics (both byte orders,
// micro and nano resolution); the writer always emits little-endian and
// keeps the capture's resolution so write-then-read is an identity.

enum class TsResolution : uint8_t { Micro, Nano };

struct Packet {
    std::vector<uint8_t> data; // link-layer frame, possibly snap-truncated
    uint32_t ts_sec = 0;
    uint32_t ts_frac = 0;      // micro- or nanoseconds per file resolution
    uint32_t orig_len = 0;

    bool operator==(const Packet&) const = default;
};

struct CaptureFile {
    uint32_t link_type = 1; // Ethernet
    TsResolution resolution = TsResolution::Micro;
    std::vector<Packet> packets;

    bool operator==(const CaptureFile&) const = default;
};

namespace pcap_magic {
constexpr uint32_t micro_native = 0xa1b2c3d4u;
constexpr uint32_t micro_swapped = 0xd4c3b2a1u;
constexpr uint32_t nano_native = 0xa1b23c4du;
constexpr uint32_t nano_swapped = 0x4d3cb2a1u;
} // namespace pcap_magic

constexpr size_t pcap_global_header_size = 24;
constexpr size_t pcap_record_header_size = 16;

inline CaptureFile parse_pcap(std::span<const uint8_t> bytes) {
    if (bytes.size() < pcap_global_header_size)
        throw BadMagic("pcap: input shorter than global header");

    const uint32_t raw_magic = load_u32le(bytes.data());
    bool swapped = false;
    TsResolution res = TsResolution::Micro;
    switch (raw_magic) {
    case pcap_magic::micro_native: break;
    case pcap_magic::micro_swapped: swapped = true; break;
    case pcap_magic::nano_native: res = TsResolution::Nano; break;
    case pcap_magic::nano_swapped: res = TsResolution::Nano; swapped = true; break;
    default: throw BadMagic("pcap: unrecognized magic");
    }
    auto rd32 = [&](size_t off) {
        return swapped ? load_u32be(bytes.data() + off) : load_u32le(bytes.data() + off);
    };

    CaptureFile cap;
    cap.resolution = res;
    cap.link_type = rd32(20);
    if (cap.link_type != 1)
        throw UnsupportedLinkType("pcap: link type " + std::to_string(cap.link_type) +
                                  " (only Ethernet = 1)");

    size_t off = pcap_global_header_size;
    while (off < bytes.size()) {
        if (bytes.size() - off < pcap_record_header_size)
            throw TruncatedRecord("pcap: record header exceeds input");
        Packet p;
        p.ts_sec = rd32(off);
        p.ts_frac = rd32(off + 4);
        const uint32_t incl_len = rd32(off + 8);
        p.orig_len = rd32(off + 12);
        off += pcap_record_header_size;
        if (incl_len == 0 || incl_len > bytes.size() - off)
            throw TruncatedRecord("pcap: record body exceeds input");
        p.data.assign(bytes.begin() + static_cast<ptrdiff_t>(off),
                      bytes.begin() + static_cast<ptrdiff_t>(off + incl_len));
        off += incl_len;
        cap.packets.push_back(std::move(p));
    }
    return cap;
}

inline std::vector<uint8_t> write_pcap(const CaptureFile& cap) {
    for (const Packet& p : cap.packets)
        if (p.data.size() > 65535)
            throw OversizedPacket("pcap: packet of " + std::to_string(p.data.size()) + " bytes");

    std::vector<uint8_t> out;
    out.reserve(pcap_global_header_size + cap.packets.size() * 80);
    push_u32le(out, cap.resolution == TsResolution::Nano ? pcap_magic::nano_native
                                                         : pcap_magic::micro_native);
    push_u16le(out, 2);     // version major
    push_u16le(out, 4);     // version minor
    push_u32le(out, 0);     // thiszone
    push_u32le(out, 0);     // sigfigs
    push_u32le(out, 65535); // snaplen
    push_u32le(out, cap.link_type);
    for (const Packet& p : cap.packets) {
        push_u32le(out, p.ts_sec);
        push_u32le(out, p.ts_frac);
        push_u32le(out, static_cast<uint32_t>(p.data.size()));
        push_u32le(out, p.orig_len);
        out.insert(out.end(), p.data.begin(), p.data.end());
    }
    return out;
}

inline CaptureFile read_pcap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return parse_pcap(bytes);
}

inline void write_pcap_file(const std::string& path, const CaptureFile& cap) {
    const std::vector<uint8_t> bytes = write_pcap(cap);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace ntg
