#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ntg/errors.hpp"
#include "ntg/model.hpp"
#include "ntg/pcap.hpp"
#include "ntg/tokenizer.hpp"

namespace ntg {

struct Sampling {
    bool greedy = false;
    double temperature = 1.0;
    uint64_t rng_seed = 0;
};

struct GenerationRequest {
    TokenStream seed; // label token + first packet bytes + pkt token
    size_t length = 0; // total token budget including the seed
    Sampling sampling;
};

inline TokenStream make_seed(const FlowRecord& flow, const Vocabulary& vocab) {
    if (flow.packets.empty()) throw Error("make_seed: empty flow");
    TokenStream seed;
    seed.reserve(flow.packets[0].data.size() + 2);
    seed.push_back(vocab.label_id(flow.label));
    for (uint8_t b : flow.packets[0].data) seed.push_back(b);
    seed.push_back(Vocabulary::pkt_token);
    return seed;
}

// Token budget: the real tokenized trace plus a small overrun allowance.
inline size_t default_length(const FlowRecord& flow, const Vocabulary& vocab) {
    return encode_flow(flow, vocab).size() + 10;
}

namespace detail {

inline TokenId sample_token(const std::vector<double>& logits, const Vocabulary& vocab,
                            const Sampling& s, std::mt19937_64& rng) {
    // label tokens never appear past position 0
    const size_t n = logits.size();
    if (s.greedy) {
        size_t best = 0;
        double bv = -std::numeric_limits<double>::infinity();
        for (size_t v = 0; v < n; ++v) {
            if (vocab.is_label(static_cast<TokenId>(v))) continue;
            if (logits[v] > bv) {
                bv = logits[v];
                best = v;
            }
        }
        return static_cast<TokenId>(best);
    }
    std::vector<double> p(n, 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t v = 0; v < n; ++v)
        if (!vocab.is_label(static_cast<TokenId>(v))) mx = std::max(mx, logits[v]);
    double z = 0.0;
    for (size_t v = 0; v < n; ++v) {
        if (vocab.is_label(static_cast<TokenId>(v))) continue;
        p[v] = std::exp((logits[v] - mx) / s.temperature);
        z += p[v];
    }
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double r = dist(rng) * z;
    for (size_t v = 0; v < n; ++v) {
        r -= p[v];
        if (r <= 0.0 && p[v] > 0.0) return static_cast<TokenId>(v);
    }
    for (size_t v = n; v-- > 0;)
        if (p[v] > 0.0) return static_cast<TokenId>(v);
    return 0;
}

} // namespace detail

// Autoregressive continuation. The output begins with the seed verbatim and
// runs to the token budget; deterministic under greedy or a fixed rng seed.
inline TokenStream generate(const ModelParameters& params, const ModelConfig& cfg,
                            const Vocabulary& vocab, const GenerationRequest& req) {
    if (req.seed.empty() || req.seed.size() >= req.length)
        throw SeedTooLong("seed of " + std::to_string(req.seed.size()) +
                          " tokens does not fit budget " + std::to_string(req.length));

    std::mt19937_64 rng(req.sampling.rng_seed);
    TokenStream out = req.seed;
    out.reserve(req.length);

    SSMState state = start_state(cfg);
    std::vector<double> logits;
    for (TokenId t : req.seed) logits = step(state, t, params, cfg);
    while (out.size() < req.length) {
        const TokenId next = detail::sample_token(logits, vocab, req.sampling, rng);
        out.push_back(next);
        if (out.size() < req.length) logits = step(state, next, params, cfg);
    }
    return out;
}

struct RebuildResult {
    CaptureFile capture;
    size_t packet_count = 0;
    size_t malformed = 0;
    bool truncated_tail = false;
};

// Timestamps are synthetic (1 ms spacing); the model does not produce timing.
inline RebuildResult rebuild_pcap(const TokenStream& ts, const Vocabulary& vocab) {
    DecodeResult dec = decode_tokens(ts, vocab);
    RebuildResult res;
    res.malformed = dec.malformed;
    res.truncated_tail = dec.truncated_tail;
    uint64_t usec = 0;
    for (std::vector<uint8_t>& data : dec.packets) {
        Packet p;
        p.orig_len = static_cast<uint32_t>(data.size());
        p.data = std::move(data);
        p.ts_sec = static_cast<uint32_t>(usec / 1000000);
        p.ts_frac = static_cast<uint32_t>(usec % 1000000);
        usec += 1000;
        res.capture.packets.push_back(std::move(p));
    }
    res.packet_count = res.capture.packets.size();
    return res;
}

} // namespace ntg
