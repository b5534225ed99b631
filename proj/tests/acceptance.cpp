// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Runs on synthetic fixtures only; everything is seeded.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "ntg/fieldbits.hpp"
#include "ntg/flow.hpp"
#include "ntg/generate.hpp"
#include "ntg/model.hpp"
#include "ntg/pcap.hpp"
#include "ntg/similarity.hpp"
#include "ntg/tokenizer.hpp"
#include "ntg/train.hpp"

using namespace ntg;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail = "") {
    std::printf("[%s] C%d %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass) failures++;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<std::string> kLabels = {"amazon", "discord", "hulu",   "netflix", "reddit",
                                          "spotify", "teams",  "twitch", "youtube", "zoom"};

// ---- C1: tokenizer round trip ----------------------------------------

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    Vocabulary vocab(kLabels);
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<size_t> plen(34, 1514);
    std::uniform_int_distribution<size_t> npk(1, 4);
    std::uniform_int_distribution<int> byte(0, 255);
    bool ok = true;
    for (int i = 0; i < 1000 && ok; ++i) {
        FlowRecord f;
        f.label = kLabels[static_cast<size_t>(i) % kLabels.size()];
        const size_t n = npk(rng);
        for (size_t k = 0; k < n; ++k) {
            std::vector<uint8_t> d(plen(rng));
            for (auto& b : d) b = static_cast<uint8_t>(byte(rng));
            f.packets.push_back(fixtures::packet(std::move(d)));
        }
        DecodeResult dec = decode_tokens(encode_flow(f, vocab), vocab);
        ok = ok && dec.packets.size() == f.packets.size() && dec.malformed == 0;
        for (size_t k = 0; ok && k < n; ++k) ok = dec.packets[k] == f.packets[k].data;
    }
    const double dt = seconds_since(t0);
    report(1, "tokenizer round trip on 1000 random flows", ok && dt < 10.0,
           "elapsed " + std::to_string(dt) + " s");
}

// ---- C2: pcap round trip + truncation fuzz ---------------------------

void criterion2() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<size_t> plen(1, 400);
    std::uniform_int_distribution<size_t> npk(0, 10);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<uint32_t> word(0, 0xffffffffu);

    bool identity_ok = true;
    std::vector<std::vector<uint8_t>> files;
    for (int i = 0; i < 20; ++i) {
        CaptureFile cap;
        cap.resolution = (i % 2) ? TsResolution::Nano : TsResolution::Micro;
        const size_t n = npk(rng);
        for (size_t k = 0; k < n; ++k) {
            Packet p;
            p.data.resize(plen(rng));
            for (auto& b : p.data) b = static_cast<uint8_t>(byte(rng));
            p.ts_sec = word(rng);
            p.ts_frac = word(rng) % 1000000;
            p.orig_len = static_cast<uint32_t>(p.data.size());
            cap.packets.push_back(std::move(p));
        }
        std::vector<uint8_t> bytes = write_pcap(cap);
        identity_ok = identity_ok && parse_pcap(bytes) == cap;
        files.push_back(std::move(bytes));
    }

    bool fuzz_ok = true;
    size_t trials = 0;
    for (size_t i = 0; i < 10000; ++i) {
        const std::vector<uint8_t>& base = files[i % files.size()];
        std::vector<uint8_t> mut(base.begin(),
                                 base.begin() + static_cast<ptrdiff_t>(word(rng) %
                                                                       (base.size() + 1)));
        if (!mut.empty() && (word(rng) & 1))
            mut[word(rng) % mut.size()] = static_cast<uint8_t>(byte(rng));
        try {
            (void)parse_pcap(mut);
        } catch (const Error&) {
            // expected for malformed input
        } catch (...) {
            fuzz_ok = false;
        }
        trials++;
    }
    report(2, "pcap round trip identity + 10000 truncation fuzz", identity_ok && fuzz_ok,
           std::to_string(trials) + " fuzz inputs");
}

// ---- C3: flow partition ----------------------------------------------

void criterion3() {
    CaptureFile cap = fixtures::two_flow_capture();
    SplitResult res = split_flows(cap, "x");
    bool ok = res.flows.size() == 2 && res.diverted == 0;
    size_t covered = 0;
    for (const FlowRecord& f : res.flows) {
        covered += f.packets.size();
        for (const Packet& p : f.packets) ok = ok && extract_key(p) == f.key;
    }
    ok = ok && covered == cap.packets.size();
    // within-flow order must follow capture order
    ok = ok && res.flows[0].packets[0] == cap.packets[0] &&
         res.flows[0].packets[1] == cap.packets[2] && res.flows[0].packets[2] == cap.packets[4];
    // direction-swapped packets land in one flow: flow 0 holds both directions
    bool has_fwd = false, has_rev = false;
    for (const Packet& p : res.flows[0].packets) {
        auto eth = EthView::parse(p.data);
        auto ip = Ipv4View::parse(eth->payload());
        if (ip->src() == 0x0a000002) has_fwd = true;
        if (ip->src() == 0x0a000001) has_rev = true;
    }
    report(3, "flow partition: disjoint, ordered, covering, bidirectional",
           ok && has_fwd && has_rev);
}

// ---- C4: dual-path equivalence + prefix-sum degeneracy ---------------

void criterion4() {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<size_t> dmod(4, 20), dlay(1, 3), dst(2, 8), dT(1, 32);
    bool dual_ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig cfg;
        cfg.d_model = dmod(rng);
        cfg.n_layers = dlay(rng);
        cfg.d_state = dst(rng);
        cfg.vocab_size = 24;
        cfg.max_seq_len = 64;
        cfg.rng_seed = rng();
        ModelParameters p = init_parameters(cfg);
        const size_t T = dT(rng);
        std::uniform_int_distribution<size_t> tok(0, cfg.vocab_size - 1);
        std::vector<TokenId> toks(T);
        for (auto& t : toks) t = static_cast<TokenId>(tok(rng));

        auto full = forward(toks, p, cfg);
        SSMState st = start_state(cfg);
        for (size_t t = 0; t < T; ++t) {
            auto logits = step(st, toks[t], p, cfg);
            for (size_t v = 0; v < cfg.vocab_size; ++v) {
                const double a = logits[v], b = full[t * cfg.vocab_size + v];
                const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
                worst = std::max(worst, rel);
            }
        }
        dual_ok = dual_ok && worst < 1e-5;
    }

    // A = 0 test mode degenerates the scan to a prefix sum
    const size_t T = 64, di = 6, ds = 3;
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<double> u(T * di);
    for (auto& x : u) x = unif(rng);
    std::vector<double> delta(T * di, 1.0), B(T * ds, 1.0 / 3.0), C(T * ds, 1.0),
        A(di * ds, 0.0), D(di, 0.0), y(T * di), h(di * ds, 0.0);
    selective_scan(u.data(), delta.data(), B.data(), C.data(), A.data(), D.data(), T, di, ds,
                   y.data(), h.data());
    bool prefix_ok = true;
    for (size_t c = 0; c < di; ++c) {
        double acc = 0.0;
        for (size_t t = 0; t < T; ++t) {
            acc += u[t * di + c]; // sum_k C*B = 3 * (1/3) = 1 per input unit
            prefix_ok = prefix_ok && std::abs(y[t * di + c] - acc) < 1e-12;
        }
    }
    report(4, "SSM dual-path equivalence (100 trials) + A=0 prefix-sum oracle",
           dual_ok && prefix_ok, "max rel err " + std::to_string(worst));
}

// ---- C5: finite-difference gradient check ----------------------------

void criterion5() {
    const auto t0 = std::chrono::steady_clock::now();
    ModelConfig cfg;
    cfg.d_model = 8;
    cfg.n_layers = 2;
    cfg.d_state = 4;
    cfg.vocab_size = 12;
    cfg.max_seq_len = 16;
    cfg.rng_seed = 505;
    ModelParameters p = init_parameters(cfg);

    std::mt19937_64 rng(505);
    const size_t T = 6;
    std::uniform_int_distribution<size_t> tok(0, cfg.vocab_size - 1);
    std::vector<TokenId> input(T), targets(T);
    for (size_t t = 0; t < T; ++t) {
        input[t] = static_cast<TokenId>(tok(rng));
        targets[t] = static_cast<TokenId>(tok(rng));
    }

    ForwardCache cache;
    auto logits = forward(input, p, cfg, &cache);
    std::vector<double> dlogits(logits.size());
    cross_entropy(logits, targets, cfg.vocab_size, dlogits.data());
    ModelParameters grads = zeros_like(cfg);
    backward(input, dlogits, cache, p, cfg, grads);

    auto prefs = tensor_list(p, cfg);
    auto grefs = tensor_list(grads, cfg);
    const double h = 1e-3;
    size_t checked = 0;
    double worst = 0.0;
    for (size_t ti = 0; ti < prefs.size(); ++ti) {
        std::vector<double>& theta = *prefs[ti].data;
        const std::vector<double>& g = *grefs[ti].data;
        std::uniform_int_distribution<size_t> pick(0, theta.size() - 1);
        for (size_t s = 0; s < std::min<size_t>(5, theta.size()); ++s) {
            const size_t k = pick(rng);
            const double saved = theta[k];
            theta[k] = saved + h;
            const double fp =
                cross_entropy(forward(input, p, cfg), targets, cfg.vocab_size);
            theta[k] = saved - h;
            const double fm =
                cross_entropy(forward(input, p, cfg), targets, cfg.vocab_size);
            theta[k] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel =
                std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), 1e-6});
            worst = std::max(worst, rel);
            checked++;
        }
    }
    const double dt = seconds_since(t0);
    report(5, "finite-difference gradient check", checked >= 100 && worst < 1e-4 && dt < 60.0,
           std::to_string(checked) + " coords, worst rel err " + std::to_string(worst) +
               ", elapsed " + std::to_string(dt) + " s");
}

// ---- shared training fixtures for C6 / C7 ----------------------------

struct TrainedFixture {
    Vocabulary vocab{kLabels};
    ModelConfig mcfg;
    std::vector<FlowRecord> flows;
    std::vector<TokenStream> corpus;
    TrainResult result;
    size_t epochs_budget = 0;
};

TrainedFixture train_overfit(size_t n_flows, size_t epochs, double stop_loss) {
    TrainedFixture fx;
    CaptureFile cap = fixtures::synthetic_corpus_capture(n_flows, 4, 50);
    SplitResult s = split_flows(cap, "twitch");
    fx.flows = s.flows;
    for (const FlowRecord& f : fx.flows) fx.corpus.push_back(encode_flow(f, fx.vocab));

    fx.mcfg = ModelConfig::desk_preset(fx.vocab.size());
    fx.mcfg.rng_seed = 606;
    TrainConfig tc;
    tc.epochs = epochs;
    tc.learning_rate = 1e-3;
    tc.max_seq_len = fx.mcfg.max_seq_len;
    tc.rng_seed = 606;
    tc.stop_loss = stop_loss;
    fx.epochs_budget = epochs;
    fx.result = train(fx.corpus, tc, fx.mcfg);
    return fx;
}

void criterion6(TrainedFixture& fx) {
    const auto t0 = std::chrono::steady_clock::now();
    bool size_ok = true;
    for (const TokenStream& s : fx.corpus) size_ok = size_ok && s.size() <= 512;
    const double final_loss = fx.result.loss_trace.back();
    const bool loss_ok = final_loss < 0.1 && fx.result.epochs_run <= 300;

    // greedy continuation must reproduce the training flow
    const FlowRecord& f = fx.flows[0];
    const TokenStream real = encode_flow(f, fx.vocab);
    GenerationRequest req;
    req.seed = make_seed(f, fx.vocab);
    req.length = std::min(real.size(), req.seed.size() + 50);
    req.sampling.greedy = true;
    TokenStream out = generate(fx.result.params, fx.mcfg, fx.vocab, req);
    bool regen_ok = true;
    for (size_t i = req.seed.size(); i < req.length; ++i)
        regen_ok = regen_ok && out[i] == real[i];

    report(6, "overfit oracle: loss < 0.1 nats and exact greedy continuation",
           size_ok && loss_ok && regen_ok,
           "loss " + std::to_string(final_loss) + " after " +
               std::to_string(fx.result.epochs_run) + " epochs, continuation " +
               (regen_ok ? "exact" : "diverged") + ", elapsed " +
               std::to_string(seconds_since(t0)) + " s (training timed separately)");
}

void criterion7() {
    TrainedFixture fx = train_overfit(20, 150, 0.05);

    std::vector<CaptureFile> real;
    std::vector<CaptureFile> synth;
    for (const FlowRecord& f : fx.flows) {
        CaptureFile rc;
        rc.packets = f.packets;
        real.push_back(rc);

        GenerationRequest req;
        req.seed = make_seed(f, fx.vocab);
        req.length = default_length(f, fx.vocab);
        req.sampling.greedy = true;
        TokenStream out = generate(fx.result.params, fx.mcfg, fx.vocab, req);
        synth.push_back(rebuild_pcap(out, fx.vocab).capture);
    }

    SimilarityReport model_rep = similarity(real, synth);
    SimilarityReport random_rep = similarity(real, random_baseline(real, 707));
    const bool ordering = model_rep.jsd.mean < random_rep.jsd.mean &&
                          model_rep.tvd.mean < random_rep.tvd.mean &&
                          model_rep.hd.mean < random_rep.hd.mean;
    const bool random_floor = random_rep.jsd.mean > 0.5;
    report(7, "similarity ordering: model < random baseline, random JSD > 0.5",
           ordering && random_floor,
           "model JSD " + std::to_string(model_rep.jsd.mean) + " vs random JSD " +
               std::to_string(random_rep.jsd.mean));
}

// ---- C8: metric unit values ------------------------------------------

void criterion8() {
    const std::vector<double> half{0.5, 0.5}, one0{1.0, 0.0}, zero1{0.0, 1.0};
    bool ok = jsd(half, half) == 0.0 && tvd(half, half) == 0.0 && hellinger(half, half) == 0.0;
    ok = ok && std::abs(jsd(one0, zero1) - 1.0) < 1e-12 &&
         std::abs(tvd(one0, zero1) - 1.0) < 1e-12 &&
         std::abs(hellinger(one0, zero1) - 1.0) < 1e-12;
    ok = ok && std::abs(jsd(half, one0) - 0.311278) < 1e-6;
    ok = ok && std::abs(tvd(half, one0) - 0.5) < 1e-6;
    ok = ok && std::abs(hellinger(half, one0) - 0.541196) < 1e-6;

    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 1000 && ok; ++i) {
        std::vector<double> p(4), q(4);
        double sp = 0, sq = 0;
        for (size_t k = 0; k < 4; ++k) {
            p[k] = unif(rng);
            q[k] = unif(rng);
            sp += p[k];
            sq += q[k];
        }
        for (size_t k = 0; k < 4; ++k) {
            p[k] /= sp;
            q[k] /= sq;
        }
        ok = ok && std::abs(jsd(p, q) - jsd(q, p)) < 1e-12;
        const double h2 = hellinger(p, q) * hellinger(p, q);
        ok = ok && h2 <= tvd(p, q) + 1e-12;
    }
    report(8, "metric identities, symmetry, derived values, hd^2 <= tvd", ok);
}

// ---- C9: memorization analysis ---------------------------------------

void criterion9() {
    CaptureFile cap = fixtures::synthetic_corpus_capture(3, 4, 20);
    SplitResult s = split_flows(cap, "x");

    std::vector<CaptureFile> identity;
    for (const FlowRecord& f : s.flows) {
        CaptureFile c;
        c.packets = f.packets;
        identity.push_back(c);
    }
    MemorizationReport id_rep = memorization(s.flows, identity, 100);
    bool ok = id_rep.mean_differing_byte_pct == 0.0;
    for (const auto& [name, change] : id_rep.field_change) ok = ok && change == 0.0;
    for (const auto& pr : id_rep.pairs) ok = ok && pr.identical == pr.compared;

    std::vector<CaptureFile> ttl = identity;
    for (CaptureFile& c : ttl)
        for (Packet& p : c.packets) p.data[14 + 8] = static_cast<uint8_t>(p.data[14 + 8] - 2);
    MemorizationReport ttl_rep = memorization(s.flows, ttl, 100);
    ok = ok && std::abs(ttl_rep.field_change.at("IP_ttl") - 2.0) < 1e-12;
    for (const auto& [name, change] : ttl_rep.field_change)
        if (name != "IP_ttl") ok = ok && change == 0.0;
    for (const auto& pr : ttl_rep.pairs) ok = ok && pr.compared <= 100 && pr.identical == 0;

    report(9, "memorization: identity zeros, TTL perturbation isolates IP_ttl", ok);
}

// ---- C10: generation contracts ---------------------------------------

void criterion10() {
    Vocabulary vocab(kLabels);
    ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.d_state = 4;
    cfg.vocab_size = vocab.size();
    cfg.max_seq_len = 4096;
    cfg.rng_seed = 1010;
    ModelParameters p = init_parameters(cfg);

    CaptureFile cap = fixtures::synthetic_corpus_capture(100, 2, 30);
    SplitResult s = split_flows(cap, "netflix");
    bool ok = s.flows.size() == 100;
    for (size_t i = 0; ok && i < s.flows.size(); ++i) {
        const FlowRecord& f = s.flows[i];
        GenerationRequest req;
        req.seed = make_seed(f, vocab);
        req.length = default_length(f, vocab);
        ok = ok && req.length == encode_flow(f, vocab).size() + 10;
        req.sampling.rng_seed = i;
        TokenStream out = generate(p, cfg, vocab, req);
        ok = ok && out.size() <= req.length;
        for (size_t k = 0; ok && k < req.seed.size(); ++k) ok = out[k] == req.seed[k];
        for (size_t k = 1; ok && k < out.size(); ++k) ok = !vocab.is_label(out[k]);
        const RebuildResult rb = rebuild_pcap(out, vocab);
        const std::vector<uint8_t> bytes = write_pcap(rb.capture);
        ok = ok && parse_pcap(bytes).packets.size() == rb.packet_count;
    }
    report(10, "generation contracts on 100 flows + rebuilt PCAP validity", ok);
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();

    const auto t0 = std::chrono::steady_clock::now();
    TrainedFixture overfit = train_overfit(2, 300, 0.03);
    const double train_s = seconds_since(t0);
    std::printf("       (overfit training: %.1f s, %zu epochs)\n", train_s,
                overfit.result.epochs_run);
    criterion6(overfit);
    criterion7();

    criterion8();
    criterion9();
    criterion10();

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
