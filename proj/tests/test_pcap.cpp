#include "catch_amalgamated.hpp"

#include <random>

#include "fixtures.hpp"
#include "ntg/pcap.hpp"

using namespace ntg;

namespace {

std::vector<uint8_t> global_header(uint32_t magic) {
    std::vector<uint8_t> b;
    push_u32le(b, magic);
    push_u16le(b, 2);
    push_u16le(b, 4);
    push_u32le(b, 0);
    push_u32le(b, 0);
    push_u32le(b, 65535);
    push_u32le(b, 1);
    return b;
}

CaptureFile random_capture(std::mt19937_64& rng, size_t max_packets = 8) {
    std::uniform_int_distribution<size_t> np(0, max_packets);
    std::uniform_int_distribution<size_t> len(1, 200);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<uint32_t> word(0, 0xffffffffu);
    CaptureFile cap;
    cap.resolution = (word(rng) & 1) ? TsResolution::Nano : TsResolution::Micro;
    const size_t n = np(rng);
    for (size_t i = 0; i < n; ++i) {
        Packet p;
        p.data.resize(len(rng));
        for (auto& b : p.data) b = static_cast<uint8_t>(byte(rng));
        p.ts_sec = word(rng);
        p.ts_frac = word(rng) % 1000000;
        p.orig_len = static_cast<uint32_t>(p.data.size()) + (word(rng) % 3);
        cap.packets.push_back(std::move(p));
    }
    return cap;
}

} // namespace

TEST_CASE("header-only capture parses to zero packets") {
    auto bytes = global_header(pcap_magic::micro_native);
    CaptureFile cap = parse_pcap(bytes);
    CHECK(cap.packets.empty());
    CHECK(cap.link_type == 1);
    CHECK(cap.resolution == TsResolution::Micro);
}

TEST_CASE("single 60-byte record") {
    auto bytes = global_header(pcap_magic::micro_native);
    push_u32le(bytes, 17);
    push_u32le(bytes, 123456);
    push_u32le(bytes, 60);
    push_u32le(bytes, 60);
    for (int i = 0; i < 60; ++i) bytes.push_back(static_cast<uint8_t>(i));
    CaptureFile cap = parse_pcap(bytes);
    REQUIRE(cap.packets.size() == 1);
    CHECK(cap.packets[0].data.size() == 60);
    CHECK(cap.packets[0].ts_sec == 17);
    CHECK(cap.packets[0].ts_frac == 123456);
    CHECK(cap.packets[0].orig_len == 60);
    CHECK(cap.packets[0].data[59] == 59);
}

TEST_CASE("unknown magic is rejected") {
    auto bytes = global_header(0xdeadbeefu);
    CHECK_THROWS_AS(parse_pcap(bytes), BadMagic);
}

TEST_CASE("big-endian and nanosecond magics are accepted") {
    std::vector<uint8_t> bytes;
    push_u32be(bytes, pcap_magic::micro_native); // big-endian on disk
    push_u16be(bytes, 2);
    push_u16be(bytes, 4);
    push_u32be(bytes, 0);
    push_u32be(bytes, 0);
    push_u32be(bytes, 65535);
    push_u32be(bytes, 1);
    push_u32be(bytes, 5);
    push_u32be(bytes, 6);
    push_u32be(bytes, 3);
    push_u32be(bytes, 3);
    bytes.insert(bytes.end(), {9, 8, 7});
    CaptureFile cap = parse_pcap(bytes);
    REQUIRE(cap.packets.size() == 1);
    CHECK(cap.packets[0].ts_sec == 5);
    CHECK(cap.packets[0].data == std::vector<uint8_t>({9, 8, 7}));

    auto nano = global_header(pcap_magic::nano_native);
    CHECK(parse_pcap(nano).resolution == TsResolution::Nano);
}

TEST_CASE("non-Ethernet link type is rejected") {
    auto bytes = global_header(pcap_magic::micro_native);
    bytes[20] = 101; // raw IP
    CHECK_THROWS_AS(parse_pcap(bytes), UnsupportedLinkType);
}

TEST_CASE("record exceeding input is a TruncatedRecord") {
    auto bytes = global_header(pcap_magic::micro_native);
    push_u32le(bytes, 0);
    push_u32le(bytes, 0);
    push_u32le(bytes, 1000); // claims more than remains
    push_u32le(bytes, 1000);
    bytes.push_back(0xaa);
    CHECK_THROWS_AS(parse_pcap(bytes), TruncatedRecord);
}

TEST_CASE("empty capture writes exactly the 24-byte header") {
    CaptureFile cap;
    CHECK(write_pcap(cap).size() == 24);
}

TEST_CASE("file length arithmetic") {
    CaptureFile cap = fixtures::two_flow_capture();
    cap.packets.resize(2);
    size_t expect = 24;
    for (const Packet& p : cap.packets) expect += 16 + p.data.size();
    CHECK(write_pcap(cap).size() == expect);
}

TEST_CASE("oversized packet is rejected on write") {
    CaptureFile cap;
    Packet p;
    p.data.assign(70000, 0);
    p.orig_len = 70000;
    cap.packets.push_back(p);
    CHECK_THROWS_AS(write_pcap(cap), OversizedPacket);
}

TEST_CASE("round-trip identity on random captures") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 50; ++i) {
        CaptureFile cap = random_capture(rng);
        CHECK(parse_pcap(write_pcap(cap)) == cap);
    }
}

TEST_CASE("truncation fuzzing never crashes") {
    std::mt19937_64 rng(7);
    CaptureFile cap = random_capture(rng, 5);
    std::vector<uint8_t> bytes = write_pcap(cap);
    for (size_t cut = 0; cut < bytes.size(); ++cut) {
        std::vector<uint8_t> t(bytes.begin(), bytes.begin() + static_cast<ptrdiff_t>(cut));
        try {
            (void)parse_pcap(t);
        } catch (const Error&) {
            // any named error is acceptable; crashing is not
        }
    }
}
