#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ntg/bytes.hpp"
#include "ntg/errors.hpp"
#include "ntg/flow.hpp"

#include "json.hpp"

namespace ntg {

using TokenId = uint16_t;
using TokenStream = std::vector<TokenId>;

// Fixed byte-level vocabulary: ids 0..255 are the byte values, 256 is the
// packet delimiter, labels follow densely from 257.
class Vocabulary {
public:
    static constexpr TokenId pkt_token = 256;
    static constexpr TokenId first_label = 257;

    explicit Vocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.empty()) throw Error("vocabulary needs at least one label");
        for (size_t i = 0; i < labels_.size(); ++i)
            label_ids_.emplace(labels_[i], static_cast<TokenId>(first_label + i));
    }

    size_t size() const { return 257 + labels_.size(); }
    size_t label_count() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    TokenId label_id(const std::string& name) const {
        auto it = label_ids_.find(name);
        if (it == label_ids_.end()) throw UnknownLabel("unknown label: " + name);
        return it->second;
    }
    bool is_label(TokenId id) const { return id >= first_label && id < size(); }
    const std::string& label_name(TokenId id) const {
        if (!is_label(id)) throw UnknownLabel("token id is not a label");
        return labels_[id - first_label];
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open " + path);
        nlohmann::json j = nlohmann::json::parse(in);
        return Vocabulary(j.at("labels").get<std::vector<std::string>>());
    }
    void save(const std::string& path) const {
        nlohmann::json j;
        j["labels"] = labels_;
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw Error("cannot open " + path + " for writing");
        out << j.dump(2) << "\n";
    }

private:
    std::vector<std::string> labels_;
    std::map<std::string, TokenId> label_ids_;
};

// Sample layout: [label] b b b ... <pkt> b b ... <pkt>
inline TokenStream encode_flow(const FlowRecord& flow, const Vocabulary& vocab) {
    TokenStream ts;
    size_t n = 1;
    for (const Packet& p : flow.packets) n += p.data.size() + 1;
    ts.reserve(n);
    ts.push_back(vocab.label_id(flow.label));
    for (const Packet& p : flow.packets) {
        for (uint8_t b : p.data) ts.push_back(b);
        ts.push_back(Vocabulary::pkt_token);
    }
    return ts;
}

// Ethernet + minimal IPv4; shorter decoded segments are malformed.
constexpr size_t min_decoded_packet_len = 34;

struct DecodeResult {
    std::vector<std::vector<uint8_t>> packets;
    size_t malformed = 0;      // segments shorter than the minimum
    bool truncated_tail = false; // trailing bytes without a closing delimiter
};

// Total: any token stream decodes. A label token mid-stream ends decoding.
inline DecodeResult decode_tokens(const TokenStream& ts, const Vocabulary& vocab) {
    DecodeResult res;
    std::vector<uint8_t> cur;
    size_t i = 0;
    if (!ts.empty() && vocab.is_label(ts[0])) i = 1;
    for (; i < ts.size(); ++i) {
        const TokenId t = ts[i];
        if (vocab.is_label(t)) break;
        if (t == Vocabulary::pkt_token) {
            if (cur.size() < min_decoded_packet_len)
                res.malformed++;
            else
                res.packets.push_back(std::move(cur));
            cur.clear();
        } else if (t < 256) {
            cur.push_back(static_cast<uint8_t>(t));
        }
        // ids beyond vocab.size cannot occur in well-formed streams; the
        // decoder stays total by ignoring them
    }
    if (!cur.empty()) res.truncated_tail = true;
    return res;
}

// --- corpus file (NTGC) ------------------------------------------------
// magic "NTGC", u32 sample count, per sample u32 token count + u16 ids, LE.

inline void write_corpus(const std::string& path, const std::vector<TokenStream>& samples) {
    std::vector<uint8_t> out;
    out.insert(out.end(), {'N', 'T', 'G', 'C'});
    push_u32le(out, static_cast<uint32_t>(samples.size()));
    for (const TokenStream& s : samples) {
        push_u32le(out, static_cast<uint32_t>(s.size()));
        for (TokenId t : s) push_u16le(out, t);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

inline std::vector<TokenStream> read_corpus(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || bytes[0] != 'N' || bytes[1] != 'T' || bytes[2] != 'G' ||
        bytes[3] != 'C')
        throw BadFileFormat("not an NTGC corpus: " + path);
    const uint32_t count = load_u32le(bytes.data() + 4);
    std::vector<TokenStream> samples;
    samples.reserve(count);
    size_t off = 8;
    for (uint32_t i = 0; i < count; ++i) {
        if (off + 4 > bytes.size()) throw BadFileFormat("corpus truncated: " + path);
        const uint32_t n = load_u32le(bytes.data() + off);
        off += 4;
        if (off + 2ull * n > bytes.size()) throw BadFileFormat("corpus truncated: " + path);
        TokenStream s(n);
        for (uint32_t k = 0; k < n; ++k) s[k] = load_u16le(bytes.data() + off + 2ull * k);
        off += 2ull * n;
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace ntg
