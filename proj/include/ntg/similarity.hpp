#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ntg/errors.hpp"
#include "ntg/fieldbits.hpp"
#include "ntg/flow.hpp"
#include "ntg/pcap.hpp"

#include "json.hpp"

namespace ntg {

// --- distribution distances (log base 2, all in [0, 1]) ----------------

inline double jsd(std::span<const double> p, std::span<const double> q) {
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0) acc += 0.5 * p[i] * std::log2(p[i] / m);
        if (q[i] > 0) acc += 0.5 * q[i] * std::log2(q[i] / m);
    }
    return std::clamp(acc, 0.0, 1.0);
}

inline double tvd(std::span<const double> p, std::span<const double> q) {
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

inline double hellinger(std::span<const double> p, std::span<const double> q) {
    double bc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
    return std::sqrt(std::clamp(1.0 - bc, 0.0, 1.0));
}

// --- per-bit distributions ---------------------------------------------

// Each bit position gets an empirical distribution over the three outcomes
// {-1, 0, 1}. Absence (-1) counts as an outcome of its own: a side that
// never produces a protocol must register as maximally distant on that
// protocol's bits, which matches the reported random-baseline magnitudes.
struct FieldDistributionTable {
    // counts[pos][0] = -1, [1] = 0, [2] = 1
    std::vector<std::array<uint64_t, 3>> counts;
    uint64_t packets = 0;

    FieldDistributionTable() : counts(fieldbits_total, {0, 0, 0}) {}

    void add(const FieldBitVector& vec) {
        packets++;
        for (size_t i = 0; i < vec.size(); ++i) counts[i][static_cast<size_t>(vec[i] + 1)]++;
    }

    // packets carrying a real 0/1 value at this position
    uint64_t support(size_t pos) const { return counts[pos][1] + counts[pos][2]; }

    std::array<double, 3> distribution(size_t pos) const {
        std::array<double, 3> d{0, 0, 0};
        if (packets == 0) return d;
        for (size_t k = 0; k < 3; ++k)
            d[k] = static_cast<double>(counts[pos][k]) / static_cast<double>(packets);
        return d;
    }
};

struct SimilarityReport {
    struct Metric {
        std::vector<double> per_bit; // indexed by scored-bit order
        double mean = 0.0;
    };
    Metric jsd, tvd, hd;
    std::vector<size_t> scored_bits;
    std::vector<size_t> skipped_bits; // no support on either side
    uint64_t real_packets = 0;
    uint64_t synth_packets = 0;
    size_t unparsed_real = 0;  // frames below the Ethernet minimum
    size_t unparsed_synth = 0;

    nlohmann::json to_json() const {
        return {{"jsd_mean", jsd.mean},
                {"tvd_mean", tvd.mean},
                {"hd_mean", hd.mean},
                {"scored_bits", scored_bits.size()},
                {"skipped_bits", skipped_bits},
                {"real_packets", real_packets},
                {"synth_packets", synth_packets},
                {"unparsed_real", unparsed_real},
                {"unparsed_synth", unparsed_synth}};
    }
};

namespace detail {

inline FieldDistributionTable build_table(const std::vector<CaptureFile>& caps,
                                          size_t& unparsed) {
    FieldDistributionTable t;
    for (const CaptureFile& c : caps)
        for (const Packet& p : c.packets) {
            try {
                t.add(encode_bits(p));
            } catch (const NotEthernet&) {
                unparsed++;
            }
        }
    return t;
}

} // namespace detail

inline SimilarityReport similarity(const std::vector<CaptureFile>& real,
                                   const std::vector<CaptureFile>& synth) {
    SimilarityReport rep;
    FieldDistributionTable tr = detail::build_table(real, rep.unparsed_real);
    FieldDistributionTable ts = detail::build_table(synth, rep.unparsed_synth);
    rep.real_packets = tr.packets;
    rep.synth_packets = ts.packets;
    if (tr.packets == 0 || ts.packets == 0)
        throw EmptyInput("similarity needs packets on both sides");

    double sj = 0, st = 0, sh = 0;
    for (size_t pos = 0; pos < fieldbits_total; ++pos) {
        // a bit nobody ever carries holds no information either way
        if (tr.support(pos) == 0 && ts.support(pos) == 0) {
            rep.skipped_bits.push_back(pos);
            continue;
        }
        const auto p = tr.distribution(pos);
        const auto q = ts.distribution(pos);
        const double j = jsd(p, q), t = tvd(p, q), h = hellinger(p, q);
        rep.jsd.per_bit.push_back(j);
        rep.tvd.per_bit.push_back(t);
        rep.hd.per_bit.push_back(h);
        rep.scored_bits.push_back(pos);
        sj += j;
        st += t;
        sh += h;
    }
    const double n = static_cast<double>(rep.scored_bits.size());
    if (n > 0) {
        rep.jsd.mean = sj / n;
        rep.tvd.mean = st / n;
        rep.hd.mean = sh / n;
    }
    return rep;
}

// Per real packet, a same-length packet of uniform random bytes.
inline std::vector<CaptureFile> random_baseline(const std::vector<CaptureFile>& templ,
                                                uint64_t rng_seed) {
    if (templ.empty()) throw EmptyInput("random_baseline needs a template");
    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<CaptureFile> out;
    out.reserve(templ.size());
    for (const CaptureFile& c : templ) {
        CaptureFile rc;
        rc.link_type = c.link_type;
        rc.resolution = c.resolution;
        for (const Packet& p : c.packets) {
            Packet rp;
            rp.ts_sec = p.ts_sec;
            rp.ts_frac = p.ts_frac;
            rp.orig_len = p.orig_len;
            rp.data.resize(p.data.size());
            for (uint8_t& b : rp.data) b = static_cast<uint8_t>(byte(rng));
            rc.packets.push_back(std::move(rp));
        }
        out.push_back(std::move(rc));
    }
    return out;
}

// --- learning vs memorization ------------------------------------------

struct MemorizationReport {
    struct Pair {
        size_t compared = 0;  // min(K, shorter side's packet count)
        size_t identical = 0;
        double differing_byte_pct = 0.0; // mean over non-identical packets
    };
    std::vector<Pair> pairs;
    double mean_differing_byte_pct = 0.0; // unweighted mean of per-pair means
    size_t total_identical = 0;
    // mean |real - synth| per field over aligned packets where both parse
    std::map<std::string, double> field_change;

    nlohmann::json to_json() const {
        nlohmann::json jp = nlohmann::json::array();
        for (const Pair& p : pairs)
            jp.push_back({{"compared", p.compared},
                          {"identical", p.identical},
                          {"differing_byte_pct", p.differing_byte_pct}});
        return {{"pairs", jp},
                {"mean_differing_byte_pct", mean_differing_byte_pct},
                {"total_identical", total_identical},
                {"field_change", field_change}};
    }
};

// Pairs are by seed provenance: real_flows[i] seeded synth_captures[i].
// The first K packets of each pair are compared bytewise and fieldwise.
inline MemorizationReport memorization(const std::vector<FlowRecord>& real_flows,
                                       const std::vector<CaptureFile>& synth_captures,
                                       size_t K = 100) {
    if (real_flows.size() != synth_captures.size())
        throw EmptyInput("memorization: pair count mismatch");
    if (K < 1) throw Error("memorization: K must be >= 1");

    MemorizationReport rep;
    std::map<std::string, std::pair<double, uint64_t>> change; // sum, count
    double pct_sum = 0.0;
    size_t pct_pairs = 0;

    for (size_t i = 0; i < real_flows.size(); ++i) {
        const auto& rp = real_flows[i].packets;
        const auto& sp = synth_captures[i].packets;
        MemorizationReport::Pair pair;
        pair.compared = std::min(K, std::min(rp.size(), sp.size()));
        double pair_pct_sum = 0.0;
        size_t pair_diff_packets = 0;
        for (size_t k = 0; k < pair.compared; ++k) {
            const auto& a = rp[k].data;
            const auto& b = sp[k].data;
            if (a == b) {
                pair.identical++;
            } else {
                const size_t longer = std::max(a.size(), b.size());
                const size_t shorter = std::min(a.size(), b.size());
                size_t diff = longer - shorter; // missing tail counts as differing
                for (size_t j = 0; j < shorter; ++j)
                    if (a[j] != b[j]) diff++;
                pair_pct_sum += 100.0 * static_cast<double>(diff) / static_cast<double>(longer);
                pair_diff_packets++;
            }
            try {
                const auto fa = extract_fields(rp[k]);
                const auto fb = extract_fields(sp[k]);
                for (const auto& [name, va] : fa) {
                    auto it = fb.find(name);
                    if (it == fb.end()) continue;
                    const double d = std::abs(static_cast<double>(va) -
                                              static_cast<double>(it->second));
                    auto& slot = change[name];
                    slot.first += d;
                    slot.second += 1;
                }
            } catch (const Error&) {
                // packets that do not parse far enough contribute no fields
            }
        }
        if (pair_diff_packets > 0) {
            pair.differing_byte_pct = pair_pct_sum / static_cast<double>(pair_diff_packets);
            pct_sum += pair.differing_byte_pct;
            pct_pairs++;
        }
        rep.total_identical += pair.identical;
        rep.pairs.push_back(pair);
    }
    if (pct_pairs > 0) rep.mean_differing_byte_pct = pct_sum / static_cast<double>(pct_pairs);
    for (const auto& [name, sc] : change)
        rep.field_change[name] = sc.second ? sc.first / static_cast<double>(sc.second) : 0.0;
    return rep;
}

// CSV mirroring the evaluation table layout: Field, Average Change,
// largest changes first.
inline void write_field_change_csv(const std::string& path, const MemorizationReport& rep) {
    std::vector<std::pair<std::string, double>> rows(rep.field_change.begin(),
                                                     rep.field_change.end());
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "Field,Average Change\n";
    out.setf(std::ios::fixed);
    out.precision(2);
    for (const auto& [name, v] : rows) out << name << "," << v << "\n";
}

} // namespace ntg
