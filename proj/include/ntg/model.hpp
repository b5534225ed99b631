#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ntg/bytes.hpp"
#include "ntg/errors.hpp"
#include "ntg/tokenizer.hpp"

#include "json.hpp"

namespace ntg {

// Selective (input-dependent) diagonal state-space model with gated
// convolutional blocks. Two execution forms share the same parameters:
// full-sequence forward for training, incremental step for generation.

struct ModelConfig {
    size_t d_model = 64;
    size_t n_layers = 2;
    size_t d_state = 16;
    size_t conv_width = 4;
    size_t vocab_size = 267;
    size_t max_seq_len = 4096;
    uint64_t rng_seed = 0;

    static constexpr size_t expand = 2;
    size_t d_inner() const { return expand * d_model; }
    // rank of the two-stage step-size projection
    size_t dt_rank() const { return (d_inner() + 15) / 16; }

    void validate() const {
        if (d_model == 0 || n_layers == 0 || d_state == 0 || conv_width == 0 ||
            vocab_size == 0)
            throw Error("model config: all dimensions must be positive");
        if (max_seq_len < 2) throw Error("model config: max_seq_len must be >= 2");
    }

    static ModelConfig desk_preset(size_t vocab) {
        ModelConfig c;
        c.vocab_size = vocab;
        return c;
    }
    static ModelConfig paper_preset(size_t vocab) {
        ModelConfig c;
        c.d_model = 768;
        c.n_layers = 24;
        c.d_state = 16;
        c.max_seq_len = 50000;
        c.vocab_size = vocab;
        return c;
    }

    nlohmann::json to_json() const {
        return {{"d_model", d_model},   {"n_layers", n_layers},
                {"d_state", d_state},   {"conv_width", conv_width},
                {"vocab_size", vocab_size}, {"max_seq_len", max_seq_len},
                {"rng_seed", rng_seed}};
    }
    static ModelConfig from_json(const nlohmann::json& j) {
        ModelConfig c;
        c.d_model = j.at("d_model");
        c.n_layers = j.at("n_layers");
        c.d_state = j.at("d_state");
        c.conv_width = j.at("conv_width");
        c.vocab_size = j.at("vocab_size");
        c.max_seq_len = j.at("max_seq_len");
        c.rng_seed = j.at("rng_seed");
        c.validate();
        return c;
    }
};

struct BlockParams {
    std::vector<double> norm_gain; // d_model
    std::vector<double> in_proj;   // (2*d_inner) x d_model
    std::vector<double> conv_w;    // d_inner x conv_width (depthwise)
    std::vector<double> conv_b;    // d_inner
    std::vector<double> dt_down;   // dt_rank x d_inner
    std::vector<double> dt_up;     // d_inner x dt_rank
    std::vector<double> dt_bias;   // d_inner
    std::vector<double> b_proj;    // d_state x d_inner
    std::vector<double> c_proj;    // d_state x d_inner
    std::vector<double> a_log;     // d_inner x d_state, A = -exp(a_log)
    std::vector<double> d_skip;    // d_inner
    std::vector<double> out_proj;  // d_model x d_inner
};

struct ModelParameters {
    std::vector<double> embedding; // vocab_size x d_model, also the tied head
    std::vector<BlockParams> blocks;
    std::vector<double> final_norm_gain; // d_model
};

struct TensorRef {
    std::string name;
    std::vector<size_t> shape;
    std::vector<double>* data;
};

template <class Params>
inline auto tensor_list(Params& p, const ModelConfig& cfg) {
    const size_t d = cfg.d_model, di = cfg.d_inner(), ds = cfg.d_state, k = cfg.conv_width,
                 r = cfg.dt_rank();
    std::vector<TensorRef> out;
    out.push_back({"embedding", {cfg.vocab_size, d}, &p.embedding});
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        auto& b = p.blocks[i];
        const std::string pre = "block" + std::to_string(i) + ".";
        out.push_back({pre + "norm_gain", {d}, &b.norm_gain});
        out.push_back({pre + "in_proj", {2 * di, d}, &b.in_proj});
        out.push_back({pre + "conv_w", {di, k}, &b.conv_w});
        out.push_back({pre + "conv_b", {di}, &b.conv_b});
        out.push_back({pre + "dt_down", {r, di}, &b.dt_down});
        out.push_back({pre + "dt_up", {di, r}, &b.dt_up});
        out.push_back({pre + "dt_bias", {di}, &b.dt_bias});
        out.push_back({pre + "b_proj", {ds, di}, &b.b_proj});
        out.push_back({pre + "c_proj", {ds, di}, &b.c_proj});
        out.push_back({pre + "a_log", {di, ds}, &b.a_log});
        out.push_back({pre + "d_skip", {di}, &b.d_skip});
        out.push_back({pre + "out_proj", {d, di}, &b.out_proj});
    }
    out.push_back({"final_norm_gain", {d}, &p.final_norm_gain});
    return out;
}

inline ModelParameters allocate_parameters(const ModelConfig& cfg) {
    cfg.validate();
    ModelParameters p;
    p.blocks.resize(cfg.n_layers);
    for (TensorRef& t : tensor_list(p, cfg)) {
        size_t n = 1;
        for (size_t s : t.shape) n *= s;
        t.data->assign(n, 0.0);
    }
    return p;
}

inline ModelParameters zeros_like(const ModelConfig& cfg) { return allocate_parameters(cfg); }

// --- elementwise math --------------------------------------------------

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double silu(double x) { return x * sigmoid(x); }
inline double silu_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}
inline double softplus(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }
inline double softplus_inverse(double y) { return std::log(std::expm1(y)); }

constexpr double rmsnorm_eps = 1e-5;

// --- initialization ----------------------------------------------------

inline ModelParameters init_parameters(const ModelConfig& cfg) {
    ModelParameters p = allocate_parameters(cfg);
    std::mt19937_64 rng(cfg.rng_seed);
    auto fill_uniform = [&](std::vector<double>& v, size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& x : v) x = dist(rng);
    };
    const size_t d = cfg.d_model, di = cfg.d_inner(), ds = cfg.d_state, r = cfg.dt_rank();

    fill_uniform(p.embedding, d);
    for (BlockParams& b : p.blocks) {
        b.norm_gain.assign(d, 1.0);
        fill_uniform(b.in_proj, d);
        fill_uniform(b.conv_w, cfg.conv_width);
        // conv bias stays zero
        fill_uniform(b.dt_down, di);
        fill_uniform(b.dt_up, r);
        {
            // softplus(dt_bias) log-uniform in [1e-3, 1e-1]
            std::uniform_real_distribution<double> dist(0.0, 1.0);
            const double lo = std::log(1e-3), hi = std::log(1e-1);
            for (double& x : b.dt_bias)
                x = softplus_inverse(std::exp(lo + (hi - lo) * dist(rng)));
        }
        fill_uniform(b.b_proj, di);
        fill_uniform(b.c_proj, di);
        for (size_t c = 0; c < di; ++c)
            for (size_t k = 0; k < ds; ++k)
                b.a_log[c * ds + k] = std::log(static_cast<double>(k + 1));
        b.d_skip.assign(di, 1.0);
        fill_uniform(b.out_proj, di);
    }
    p.final_norm_gain.assign(d, 1.0);
    return p;
}

// --- discretization and scan -------------------------------------------

// Zero-order hold on the diagonal state term, Euler on the input term.
inline std::pair<double, double> discretize(double delta, double a, double b) {
    return {std::exp(delta * a), delta * b};
}

// Exact sequential recurrence:
//   h_t = exp(delta_t A) . h_{t-1} + delta_t B_t u_t
//   y_t[c] = sum_k C_t[k] h_t[c,k] + D[c] u_t[c]
// u,delta: T x d_inner; B,C: T x d_state; A: d_inner x d_state; D: d_inner.
// h (d_inner x d_state) is carried in/out; hs_out, when given, receives the
// post-update state at every step (T x d_inner x d_state).
inline void selective_scan(const double* u, const double* delta, const double* B,
                           const double* C, const double* A, const double* D, size_t T,
                           size_t d_inner, size_t d_state, double* y, double* h,
                           double* hs_out = nullptr) {
    for (size_t t = 0; t < T; ++t) {
        const double* ut = u + t * d_inner;
        const double* dt = delta + t * d_inner;
        const double* bt = B + t * d_state;
        const double* ct = C + t * d_state;
        for (size_t c = 0; c < d_inner; ++c) {
            double* hc = h + c * d_state;
            const double* ac = A + c * d_state;
            const double dtc = dt[c];
            const double duc = dtc * ut[c];
            double acc = 0.0;
            for (size_t k = 0; k < d_state; ++k) {
                hc[k] = std::exp(dtc * ac[k]) * hc[k] + duc * bt[k];
                acc += ct[k] * hc[k];
            }
            y[t * d_inner + c] = acc + D[c] * ut[c];
        }
        if (hs_out)
            std::copy(h, h + d_inner * d_state, hs_out + t * d_inner * d_state);
    }
}

// --- full-sequence forward ---------------------------------------------

struct BlockCache {
    std::vector<double> x;      // T x d_model, block input
    std::vector<double> rms;    // T
    std::vector<double> xn;     // T x d_model
    std::vector<double> xp;     // T x d_inner
    std::vector<double> zp;     // T x d_inner
    std::vector<double> conv;   // T x d_inner, pre-activation
    std::vector<double> u;      // T x d_inner
    std::vector<double> dt_low; // T x dt_rank
    std::vector<double> dt_in;  // T x d_inner, pre-softplus
    std::vector<double> delta;  // T x d_inner
    std::vector<double> bmat;   // T x d_state
    std::vector<double> cmat;   // T x d_state
    std::vector<double> hs;     // T x d_inner x d_state
    std::vector<double> y;      // T x d_inner
    std::vector<double> g;      // T x d_inner
};

struct ForwardCache {
    std::vector<BlockCache> blocks;
    std::vector<double> final_in;  // T x d_model
    std::vector<double> final_rms; // T
    std::vector<double> fn;        // T x d_model
    size_t T = 0;
};

inline void rmsnorm_forward(const double* x, const double* gain, size_t T, size_t d,
                            double* xn, double* rms) {
    for (size_t t = 0; t < T; ++t) {
        double ss = 0.0;
        for (size_t j = 0; j < d; ++j) ss += x[t * d + j] * x[t * d + j];
        const double r = std::sqrt(ss / static_cast<double>(d) + rmsnorm_eps);
        rms[t] = r;
        for (size_t j = 0; j < d; ++j) xn[t * d + j] = gain[j] * x[t * d + j] / r;
    }
}

// Returns the block output (T x d_model); fills `cache` when non-null.
inline std::vector<double> block_forward(const std::vector<double>& x, const BlockParams& bp,
                                         const ModelConfig& cfg, size_t T,
                                         BlockCache* cache) {
    const size_t d = cfg.d_model, di = cfg.d_inner(), ds = cfg.d_state, K = cfg.conv_width,
                 rk = cfg.dt_rank();

    std::vector<double> xn(T * d), rms(T);
    rmsnorm_forward(x.data(), bp.norm_gain.data(), T, d, xn.data(), rms.data());

    std::vector<double> xp(T * di), zp(T * di);
    for (size_t t = 0; t < T; ++t) {
        const double* xt = xn.data() + t * d;
        for (size_t c = 0; c < di; ++c) {
            const double* w1 = bp.in_proj.data() + c * d;
            const double* w2 = bp.in_proj.data() + (di + c) * d;
            double a1 = 0.0, a2 = 0.0;
            for (size_t j = 0; j < d; ++j) {
                a1 += w1[j] * xt[j];
                a2 += w2[j] * xt[j];
            }
            xp[t * di + c] = a1;
            zp[t * di + c] = a2;
        }
    }

    // depthwise causal convolution, zero left padding
    std::vector<double> conv(T * di), u(T * di);
    for (size_t t = 0; t < T; ++t) {
        for (size_t c = 0; c < di; ++c) {
            double acc = bp.conv_b[c];
            for (size_t j = 0; j < K; ++j) {
                const ptrdiff_t s = static_cast<ptrdiff_t>(t) - static_cast<ptrdiff_t>(K) + 1 +
                                    static_cast<ptrdiff_t>(j);
                if (s >= 0) acc += bp.conv_w[c * K + j] * xp[static_cast<size_t>(s) * di + c];
            }
            conv[t * di + c] = acc;
            u[t * di + c] = silu(acc);
        }
    }

    std::vector<double> dt_low(T * rk), dt_in(T * di), delta(T * di);
    std::vector<double> bmat(T * ds), cmat(T * ds);
    for (size_t t = 0; t < T; ++t) {
        const double* ut = u.data() + t * di;
        for (size_t r = 0; r < rk; ++r) {
            double acc = 0.0;
            const double* w = bp.dt_down.data() + r * di;
            for (size_t c = 0; c < di; ++c) acc += w[c] * ut[c];
            dt_low[t * rk + r] = acc;
        }
        for (size_t c = 0; c < di; ++c) {
            double acc = bp.dt_bias[c];
            const double* w = bp.dt_up.data() + c * rk;
            for (size_t r = 0; r < rk; ++r) acc += w[r] * dt_low[t * rk + r];
            dt_in[t * di + c] = acc;
            delta[t * di + c] = softplus(acc);
        }
        for (size_t k = 0; k < ds; ++k) {
            double ab = 0.0, ac = 0.0;
            const double* wb = bp.b_proj.data() + k * di;
            const double* wc = bp.c_proj.data() + k * di;
            for (size_t c = 0; c < di; ++c) {
                ab += wb[c] * ut[c];
                ac += wc[c] * ut[c];
            }
            bmat[t * ds + k] = ab;
            cmat[t * ds + k] = ac;
        }
    }

    std::vector<double> A(di * ds);
    for (size_t i = 0; i < A.size(); ++i) A[i] = -std::exp(bp.a_log[i]);

    std::vector<double> y(T * di), h(di * ds, 0.0);
    std::vector<double> hs;
    if (cache) hs.resize(T * di * ds);
    selective_scan(u.data(), delta.data(), bmat.data(), cmat.data(), A.data(),
                   bp.d_skip.data(), T, di, ds, y.data(), h.data(),
                   cache ? hs.data() : nullptr);

    std::vector<double> g(T * di);
    for (size_t i = 0; i < T * di; ++i) g[i] = silu(zp[i]);

    std::vector<double> out(T * d);
    for (size_t t = 0; t < T; ++t) {
        for (size_t j = 0; j < d; ++j) {
            double acc = 0.0;
            const double* w = bp.out_proj.data() + j * di;
            const double* yt = y.data() + t * di;
            const double* gt = g.data() + t * di;
            for (size_t c = 0; c < di; ++c) acc += w[c] * yt[c] * gt[c];
            out[t * d + j] = x[t * d + j] + acc;
        }
    }

    if (cache) {
        cache->x = x;
        cache->rms = std::move(rms);
        cache->xn = std::move(xn);
        cache->xp = std::move(xp);
        cache->zp = std::move(zp);
        cache->conv = std::move(conv);
        cache->u = std::move(u);
        cache->dt_low = std::move(dt_low);
        cache->dt_in = std::move(dt_in);
        cache->delta = std::move(delta);
        cache->bmat = std::move(bmat);
        cache->cmat = std::move(cmat);
        cache->hs = std::move(hs);
        cache->y = std::move(y);
        cache->g = std::move(g);
    }
    return out;
}

// Full-sequence forward; logits are T x vocab_size, row-major in t.
inline std::vector<double> forward(std::span<const TokenId> tokens, const ModelParameters& p,
                                   const ModelConfig& cfg, ForwardCache* cache = nullptr) {
    const size_t T = tokens.size();
    if (T < 1) throw Error("forward: empty token sequence");
    if (T > cfg.max_seq_len)
        throw SequenceTooLong("sequence of " + std::to_string(T) + " tokens exceeds cap " +
                              std::to_string(cfg.max_seq_len));
    const size_t d = cfg.d_model, V = cfg.vocab_size;

    std::vector<double> x(T * d);
    for (size_t t = 0; t < T; ++t) {
        if (tokens[t] >= V) throw Error("forward: token id out of range");
        std::copy_n(p.embedding.data() + static_cast<size_t>(tokens[t]) * d, d,
                    x.data() + t * d);
    }

    if (cache) {
        cache->blocks.resize(cfg.n_layers);
        cache->T = T;
    }
    for (size_t l = 0; l < cfg.n_layers; ++l)
        x = block_forward(x, p.blocks[l], cfg, T, cache ? &cache->blocks[l] : nullptr);

    std::vector<double> fn(T * d), frms(T);
    rmsnorm_forward(x.data(), p.final_norm_gain.data(), T, d, fn.data(), frms.data());

    std::vector<double> logits(T * V);
    for (size_t t = 0; t < T; ++t) {
        const double* ft = fn.data() + t * d;
        for (size_t v = 0; v < V; ++v) {
            double acc = 0.0;
            const double* e = p.embedding.data() + v * d;
            for (size_t j = 0; j < d; ++j) acc += e[j] * ft[j];
            logits[t * V + v] = acc;
        }
    }

    if (cache) {
        cache->final_in = std::move(x);
        cache->final_rms = std::move(frms);
        cache->fn = std::move(fn);
    }
    return logits;
}

// --- incremental (recurrent) inference ---------------------------------

struct SSMState {
    struct Block {
        std::vector<double> conv_buf; // d_inner x (conv_width-1), oldest first
        std::vector<double> h;        // d_inner x d_state
    };
    std::vector<Block> blocks;
};

inline SSMState start_state(const ModelConfig& cfg) {
    SSMState st;
    st.blocks.resize(cfg.n_layers);
    for (auto& b : st.blocks) {
        b.conv_buf.assign(cfg.d_inner() * (cfg.conv_width - 1), 0.0);
        b.h.assign(cfg.d_inner() * cfg.d_state, 0.0);
    }
    return st;
}

// One token through one block in recurrent form; x is d_model, updated in place.
inline void block_step(std::vector<double>& x, const BlockParams& bp, const ModelConfig& cfg,
                       SSMState::Block& st) {
    const size_t d = cfg.d_model, di = cfg.d_inner(), ds = cfg.d_state, K = cfg.conv_width,
                 rk = cfg.dt_rank();

    std::vector<double> xn(d), rms(1);
    rmsnorm_forward(x.data(), bp.norm_gain.data(), 1, d, xn.data(), rms.data());

    std::vector<double> xp(di), zp(di);
    for (size_t c = 0; c < di; ++c) {
        const double* w1 = bp.in_proj.data() + c * d;
        const double* w2 = bp.in_proj.data() + (di + c) * d;
        double a1 = 0.0, a2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            a1 += w1[j] * xn[j];
            a2 += w2[j] * xn[j];
        }
        xp[c] = a1;
        zp[c] = a2;
    }

    std::vector<double> u(di);
    for (size_t c = 0; c < di; ++c) {
        double acc = bp.conv_b[c] + bp.conv_w[c * K + (K - 1)] * xp[c];
        for (size_t j = 0; j + 1 < K; ++j)
            acc += bp.conv_w[c * K + j] * st.conv_buf[c * (K - 1) + j];
        u[c] = silu(acc);
        // shift ring buffer: drop oldest, append current input
        for (size_t j = 0; j + 2 < K; ++j)
            st.conv_buf[c * (K - 1) + j] = st.conv_buf[c * (K - 1) + j + 1];
        if (K >= 2) st.conv_buf[c * (K - 1) + (K - 2)] = xp[c];
    }

    std::vector<double> dt_low(rk);
    for (size_t r = 0; r < rk; ++r) {
        double acc = 0.0;
        const double* w = bp.dt_down.data() + r * di;
        for (size_t c = 0; c < di; ++c) acc += w[c] * u[c];
        dt_low[r] = acc;
    }
    std::vector<double> delta(di);
    for (size_t c = 0; c < di; ++c) {
        double acc = bp.dt_bias[c];
        const double* w = bp.dt_up.data() + c * rk;
        for (size_t r = 0; r < rk; ++r) acc += w[r] * dt_low[r];
        delta[c] = softplus(acc);
    }
    std::vector<double> bvec(ds), cvec(ds);
    for (size_t k = 0; k < ds; ++k) {
        double ab = 0.0, ac = 0.0;
        const double* wb = bp.b_proj.data() + k * di;
        const double* wc = bp.c_proj.data() + k * di;
        for (size_t c = 0; c < di; ++c) {
            ab += wb[c] * u[c];
            ac += wc[c] * u[c];
        }
        bvec[k] = ab;
        cvec[k] = ac;
    }

    std::vector<double> o(di);
    for (size_t c = 0; c < di; ++c) {
        double* hc = st.h.data() + c * ds;
        const double* al = bp.a_log.data() + c * ds;
        const double duc = delta[c] * u[c];
        double acc = 0.0;
        for (size_t k = 0; k < ds; ++k) {
            const double a = -std::exp(al[k]);
            hc[k] = std::exp(delta[c] * a) * hc[k] + duc * bvec[k];
            acc += cvec[k] * hc[k];
        }
        o[c] = (acc + bp.d_skip[c] * u[c]) * silu(zp[c]);
    }

    for (size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        const double* w = bp.out_proj.data() + j * di;
        for (size_t c = 0; c < di; ++c) acc += w[c] * o[c];
        x[j] += acc;
    }
}

// One token; returns next-token logits (vocab_size) and advances the state.
inline std::vector<double> step(SSMState& state, TokenId token, const ModelParameters& p,
                                const ModelConfig& cfg) {
    const size_t d = cfg.d_model, V = cfg.vocab_size;
    if (token >= V) throw Error("step: token id out of range");

    std::vector<double> x(d);
    std::copy_n(p.embedding.data() + static_cast<size_t>(token) * d, d, x.data());
    for (size_t l = 0; l < cfg.n_layers; ++l) block_step(x, p.blocks[l], cfg, state.blocks[l]);

    std::vector<double> fn(d), rms(1);
    rmsnorm_forward(x.data(), p.final_norm_gain.data(), 1, d, fn.data(), rms.data());

    std::vector<double> logits(V);
    for (size_t v = 0; v < V; ++v) {
        double acc = 0.0;
        const double* e = p.embedding.data() + v * d;
        for (size_t j = 0; j < d; ++j) acc += e[j] * fn[j];
        logits[v] = acc;
    }
    return logits;
}

// --- model file (NTGM) -------------------------------------------------
// magic "NTGM", u32 JSON length, JSON {config, labels}, then tensors in
// tensor_list order as (u16 name length, name, u8 ndim, u32 dims, f32 data),
// all little-endian.

inline void save_model(const std::string& path, const ModelParameters& p,
                       const ModelConfig& cfg, const std::vector<std::string>& labels) {
    nlohmann::json meta;
    meta["config"] = cfg.to_json();
    meta["labels"] = labels;
    const std::string js = meta.dump();

    std::vector<uint8_t> out;
    out.insert(out.end(), {'N', 'T', 'G', 'M'});
    push_u32le(out, static_cast<uint32_t>(js.size()));
    out.insert(out.end(), js.begin(), js.end());

    auto& pm = const_cast<ModelParameters&>(p);
    for (const TensorRef& t : tensor_list(pm, cfg)) {
        push_u16le(out, static_cast<uint16_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        out.push_back(static_cast<uint8_t>(t.shape.size()));
        for (size_t s : t.shape) push_u32le(out, static_cast<uint32_t>(s));
        for (double v : *t.data) {
            const float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            push_u32le(out, bits);
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

struct LoadedModel {
    ModelConfig config;
    ModelParameters params;
    std::vector<std::string> labels;
};

inline LoadedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || bytes[0] != 'N' || bytes[1] != 'T' || bytes[2] != 'G' ||
        bytes[3] != 'M')
        throw BadFileFormat("not an NTGM model: " + path);
    const uint32_t jlen = load_u32le(bytes.data() + 4);
    if (8ull + jlen > bytes.size()) throw BadFileFormat("model metadata truncated");
    nlohmann::json meta = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + jlen);

    LoadedModel m;
    m.config = ModelConfig::from_json(meta.at("config"));
    m.labels = meta.at("labels").get<std::vector<std::string>>();
    m.params = allocate_parameters(m.config);

    size_t off = 8 + jlen;
    for (const TensorRef& t : tensor_list(m.params, m.config)) {
        if (off + 2 > bytes.size()) throw BadFileFormat("model tensor header truncated");
        const uint16_t nlen = load_u16le(bytes.data() + off);
        off += 2;
        if (off + nlen + 1 > bytes.size()) throw BadFileFormat("model tensor header truncated");
        const std::string name(bytes.begin() + static_cast<ptrdiff_t>(off),
                               bytes.begin() + static_cast<ptrdiff_t>(off + nlen));
        off += nlen;
        if (name != t.name) throw BadFileFormat("unexpected tensor " + name);
        const uint8_t ndim = bytes[off++];
        if (ndim != t.shape.size()) throw BadFileFormat("tensor rank mismatch: " + name);
        for (size_t i = 0; i < ndim; ++i) {
            if (off + 4 > bytes.size()) throw BadFileFormat("model tensor header truncated");
            if (load_u32le(bytes.data() + off) != t.shape[i])
                throw BadFileFormat("tensor shape mismatch: " + name);
            off += 4;
        }
        if (off + 4ull * t.data->size() > bytes.size())
            throw BadFileFormat("tensor data truncated: " + name);
        for (double& v : *t.data) {
            uint32_t bits = load_u32le(bytes.data() + off);
            float fv;
            std::memcpy(&fv, &bits, 4);
            v = fv;
            off += 4;
        }
    }
    return m;
}

} // namespace ntg
