#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ntg/errors.hpp"
#include "ntg/model.hpp"

namespace ntg {

enum class ClipMode : uint8_t { Value, Norm };

struct TrainConfig {
    double learning_rate = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
    double clip_value = 1.0;
    ClipMode clip_mode = ClipMode::Value;
    size_t batch_size = 1;
    size_t epochs = 50;
    size_t max_seq_len = 4096;
    uint64_t rng_seed = 0;
    double stop_loss = 0.0; // stop early once epoch-mean loss falls below (0 = never)

    void validate() const {
        if (learning_rate <= 0) throw Error("train config: learning_rate must be > 0");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw Error("train config: betas must be in [0, 1)");
        if (clip_value <= 0) throw Error("train config: clip_value must be > 0");
    }
};

// --- loss --------------------------------------------------------------

// Mean next-token cross-entropy in nats; logits are T x vocab.
// When dlogits is non-null it receives d(loss)/d(logits), same shape.
inline double cross_entropy(std::span<const double> logits, std::span<const TokenId> targets,
                            size_t vocab, double* dlogits = nullptr) {
    const size_t T = targets.size();
    if (T < 1) throw Error("cross_entropy: no targets");
    double loss = 0.0;
    for (size_t t = 0; t < T; ++t) {
        const double* lt = logits.data() + t * vocab;
        double mx = lt[0];
        for (size_t v = 1; v < vocab; ++v) mx = std::max(mx, lt[v]);
        double z = 0.0;
        for (size_t v = 0; v < vocab; ++v) z += std::exp(lt[v] - mx);
        const double logz = std::log(z) + mx;
        loss += logz - lt[targets[t]];
        if (dlogits) {
            double* dt = dlogits + t * vocab;
            for (size_t v = 0; v < vocab; ++v)
                dt[v] = std::exp(lt[v] - logz) / static_cast<double>(T);
            dt[targets[t]] -= 1.0 / static_cast<double>(T);
        }
    }
    return loss / static_cast<double>(T);
}

// --- reverse-mode gradients --------------------------------------------

namespace detail {

inline void rmsnorm_backward(const double* x, const double* gain, const double* rms,
                             const double* dxn, size_t T, size_t d, double* dx_accum,
                             double* dgain) {
    for (size_t t = 0; t < T; ++t) {
        const double r = rms[t];
        const double* xt = x + t * d;
        const double* dt = dxn + t * d;
        double s = 0.0;
        for (size_t j = 0; j < d; ++j) {
            s += dt[j] * gain[j] * xt[j];
            dgain[j] += dt[j] * xt[j] / r;
        }
        const double scale = s / (static_cast<double>(d) * r * r * r);
        for (size_t j = 0; j < d; ++j)
            dx_accum[t * d + j] += gain[j] * dt[j] / r - xt[j] * scale;
    }
}

// Backward through one block. d_out is d(loss)/d(block output), T x d_model;
// on return it holds d(loss)/d(block input). Parameter gradients accumulate
// into `gb`.
inline void block_backward(std::vector<double>& d_out, const BlockCache& cc,
                           const BlockParams& bp, BlockParams& gb, const ModelConfig& cfg,
                           size_t T) {
    const size_t d = cfg.d_model, di = cfg.d_inner(), ds = cfg.d_state, K = cfg.conv_width,
                 rk = cfg.dt_rank();

    // residual: d_out flows to both the input and the out-projection path
    std::vector<double> d_o(T * di, 0.0); // grad of gated product o = y * g
    for (size_t t = 0; t < T; ++t) {
        const double* dt = d_out.data() + t * d;
        const double* yt = cc.y.data() + t * di;
        const double* gt = cc.g.data() + t * di;
        for (size_t j = 0; j < d; ++j) {
            const double* w = bp.out_proj.data() + j * di;
            double* gw = gb.out_proj.data() + j * di;
            const double dj = dt[j];
            for (size_t c = 0; c < di; ++c) {
                d_o[t * di + c] += dj * w[c];
                gw[c] += dj * yt[c] * gt[c];
            }
        }
    }

    std::vector<double> d_y(T * di), d_zp(T * di);
    for (size_t t = 0; t < T; ++t)
        for (size_t c = 0; c < di; ++c) {
            const size_t i = t * di + c;
            d_y[i] = d_o[i] * cc.g[i];
            d_zp[i] = d_o[i] * cc.y[i] * silu_grad(cc.zp[i]);
        }

    // scan backward
    std::vector<double> A(di * ds);
    for (size_t i = 0; i < A.size(); ++i) A[i] = -std::exp(bp.a_log[i]);

    std::vector<double> d_u(T * di, 0.0), d_delta(T * di, 0.0);
    std::vector<double> d_b(T * ds, 0.0), d_c(T * ds, 0.0);
    std::vector<double> dh(di * ds, 0.0);
    for (size_t tt = T; tt-- > 0;) {
        const double* ut = cc.u.data() + tt * di;
        const double* dt = cc.delta.data() + tt * di;
        const double* bt = cc.bmat.data() + tt * ds;
        const double* ct = cc.cmat.data() + tt * ds;
        const double* ht = cc.hs.data() + tt * di * ds;
        const double* hprev = tt > 0 ? cc.hs.data() + (tt - 1) * di * ds : nullptr;
        const double* dyt = d_y.data() + tt * di;
        for (size_t c = 0; c < di; ++c) {
            double* dhc = dh.data() + c * ds;
            const double* ac = A.data() + c * ds;
            double* ga = gb.a_log.data() + c * ds;
            const double dtc = dt[c];
            const double uc = ut[c];
            const double dyc = dyt[c];

            // y_t[c] = sum_k C_t[k] h_t[c,k] + D[c] u_t[c]
            gb.d_skip[c] += dyc * uc;
            d_u[tt * di + c] += dyc * bp.d_skip[c];

            double ddelta_c = 0.0;
            for (size_t k = 0; k < ds; ++k) {
                const double hk = ht[c * ds + k];
                d_c[tt * ds + k] += dyc * hk;
                double dhk = dhc[k] + dyc * ct[k];

                const double abar = std::exp(dtc * ac[k]);
                const double hp = hprev ? hprev[c * ds + k] : 0.0;
                // h_t = abar * h_{t-1} + dtc * B_t[k] * u_t[c]
                ddelta_c += dhk * (ac[k] * abar * hp + bt[k] * uc);
                ga[k] += dhk * dtc * abar * hp * ac[k]; // dA * dA/da_log, dA/da_log = A
                d_b[tt * ds + k] += dhk * dtc * uc;
                d_u[tt * di + c] += dhk * dtc * bt[k];
                dhc[k] = dhk * abar; // becomes dh_{t-1}
            }
            d_delta[tt * di + c] = ddelta_c;
        }
    }

    // delta = softplus(dt_in)
    std::vector<double> d_dtin(T * di);
    for (size_t i = 0; i < T * di; ++i) d_dtin[i] = d_delta[i] * sigmoid(cc.dt_in[i]);

    // dt_in[c] = dt_up[c,:] . dt_low + bias[c]
    std::vector<double> d_dtlow(T * rk, 0.0);
    for (size_t t = 0; t < T; ++t)
        for (size_t c = 0; c < di; ++c) {
            const double g = d_dtin[t * di + c];
            gb.dt_bias[c] += g;
            const double* w = bp.dt_up.data() + c * rk;
            double* gw = gb.dt_up.data() + c * rk;
            for (size_t r = 0; r < rk; ++r) {
                d_dtlow[t * rk + r] += g * w[r];
                gw[r] += g * cc.dt_low[t * rk + r];
            }
        }
    // dt_low[r] = dt_down[r,:] . u
    for (size_t t = 0; t < T; ++t)
        for (size_t r = 0; r < rk; ++r) {
            const double g = d_dtlow[t * rk + r];
            const double* w = bp.dt_down.data() + r * di;
            double* gw = gb.dt_down.data() + r * di;
            const double* ut = cc.u.data() + t * di;
            for (size_t c = 0; c < di; ++c) {
                d_u[t * di + c] += g * w[c];
                gw[c] += g * ut[c];
            }
        }
    // B_t[k] = b_proj[k,:] . u ; C_t likewise
    for (size_t t = 0; t < T; ++t) {
        const double* ut = cc.u.data() + t * di;
        for (size_t k = 0; k < ds; ++k) {
            const double gbk = d_b[t * ds + k];
            const double gck = d_c[t * ds + k];
            const double* wb = bp.b_proj.data() + k * di;
            const double* wc = bp.c_proj.data() + k * di;
            double* gwb = gb.b_proj.data() + k * di;
            double* gwc = gb.c_proj.data() + k * di;
            for (size_t c = 0; c < di; ++c) {
                d_u[t * di + c] += gbk * wb[c] + gck * wc[c];
                gwb[c] += gbk * ut[c];
                gwc[c] += gck * ut[c];
            }
        }
    }

    // u = silu(conv)
    std::vector<double> d_conv(T * di);
    for (size_t i = 0; i < T * di; ++i) d_conv[i] = d_u[i] * silu_grad(cc.conv[i]);

    // depthwise causal conv
    std::vector<double> d_xp(T * di, 0.0);
    for (size_t t = 0; t < T; ++t)
        for (size_t c = 0; c < di; ++c) {
            const double g = d_conv[t * di + c];
            gb.conv_b[c] += g;
            for (size_t j = 0; j < K; ++j) {
                const ptrdiff_t s = static_cast<ptrdiff_t>(t) - static_cast<ptrdiff_t>(K) + 1 +
                                    static_cast<ptrdiff_t>(j);
                if (s < 0) continue;
                d_xp[static_cast<size_t>(s) * di + c] += g * bp.conv_w[c * K + j];
                gb.conv_w[c * K + j] += g * cc.xp[static_cast<size_t>(s) * di + c];
            }
        }

    // in_proj: xp = W[0:di] xn, zp = W[di:2di] xn
    std::vector<double> d_xn(T * d, 0.0);
    for (size_t t = 0; t < T; ++t) {
        const double* xnt = cc.xn.data() + t * d;
        for (size_t c = 0; c < di; ++c) {
            const double g1 = d_xp[t * di + c];
            const double g2 = d_zp[t * di + c];
            const double* w1 = bp.in_proj.data() + c * d;
            const double* w2 = bp.in_proj.data() + (di + c) * d;
            double* gw1 = gb.in_proj.data() + c * d;
            double* gw2 = gb.in_proj.data() + (di + c) * d;
            for (size_t j = 0; j < d; ++j) {
                d_xn[t * d + j] += g1 * w1[j] + g2 * w2[j];
                gw1[j] += g1 * xnt[j];
                gw2[j] += g2 * xnt[j];
            }
        }
    }

    // pre-norm; adds into the residual gradient already held in d_out
    rmsnorm_backward(cc.x.data(), bp.norm_gain.data(), cc.rms.data(), d_xn.data(), T, d,
                     d_out.data(), gb.norm_gain.data());
}

} // namespace detail

// Exact reverse-mode gradients of the recorded forward. `dlogits` is
// d(loss)/d(logits) (T x vocab); gradients accumulate into `grads`
// (allocated via zeros_like).
inline void backward(std::span<const TokenId> tokens, std::span<const double> dlogits,
                     const ForwardCache& cache, const ModelParameters& p,
                     const ModelConfig& cfg, ModelParameters& grads) {
    const size_t T = cache.T, d = cfg.d_model, V = cfg.vocab_size;

    // tied head: logits[t,v] = E[v,:] . fn[t,:]
    std::vector<double> d_fn(T * d, 0.0);
    for (size_t t = 0; t < T; ++t) {
        const double* dl = dlogits.data() + t * V;
        const double* ft = cache.fn.data() + t * d;
        for (size_t v = 0; v < V; ++v) {
            const double g = dl[v];
            if (g == 0.0) continue;
            const double* e = p.embedding.data() + v * d;
            double* ge = grads.embedding.data() + v * d;
            for (size_t j = 0; j < d; ++j) {
                d_fn[t * d + j] += g * e[j];
                ge[j] += g * ft[j];
            }
        }
    }

    std::vector<double> dx(T * d, 0.0);
    detail::rmsnorm_backward(cache.final_in.data(), p.final_norm_gain.data(),
                             cache.final_rms.data(), d_fn.data(), T, d, dx.data(),
                             grads.final_norm_gain.data());

    for (size_t l = cfg.n_layers; l-- > 0;)
        detail::block_backward(dx, cache.blocks[l], p.blocks[l], grads.blocks[l], cfg, T);

    // embedding lookup
    for (size_t t = 0; t < T; ++t) {
        double* ge = grads.embedding.data() + static_cast<size_t>(tokens[t]) * d;
        for (size_t j = 0; j < d; ++j) ge[j] += dx[t * d + j];
    }
}

// --- optimizer ---------------------------------------------------------

inline void clip_gradients(ModelParameters& grads, const ModelConfig& cfg, double clip_value,
                           ClipMode mode = ClipMode::Value) {
    auto refs = tensor_list(grads, cfg);
    if (mode == ClipMode::Value) {
        for (TensorRef& t : refs)
            for (double& g : *t.data) g = std::clamp(g, -clip_value, clip_value);
    } else {
        double ss = 0.0;
        for (TensorRef& t : refs)
            for (double g : *t.data) ss += g * g;
        const double norm = std::sqrt(ss);
        if (norm > clip_value) {
            const double scale = clip_value / norm;
            for (TensorRef& t : refs)
                for (double& g : *t.data) g *= scale;
        }
    }
}

struct OptimizerState {
    ModelParameters m; // first moments
    ModelParameters v; // second moments
    uint64_t step = 0;

    static OptimizerState init(const ModelConfig& cfg) {
        return {zeros_like(cfg), zeros_like(cfg), 0};
    }
};

// Decoupled weight decay (AdamW) with bias-corrected moments.
inline void adamw_step(ModelParameters& params, const ModelParameters& grads,
                       OptimizerState& st, const ModelConfig& mcfg, const TrainConfig& cfg) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));

    auto pr = tensor_list(params, mcfg);
    auto gr = tensor_list(const_cast<ModelParameters&>(grads), mcfg);
    auto mr = tensor_list(st.m, mcfg);
    auto vr = tensor_list(st.v, mcfg);
    for (size_t i = 0; i < pr.size(); ++i) {
        std::vector<double>& theta = *pr[i].data;
        const std::vector<double>& g = *gr[i].data;
        std::vector<double>& m = *mr[i].data;
        std::vector<double>& v = *vr[i].data;
        for (size_t k = 0; k < theta.size(); ++k) {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            theta[k] -= cfg.learning_rate *
                        (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * theta[k]);
        }
    }
}

// --- training loop -----------------------------------------------------

struct TrainResult {
    ModelParameters params;
    std::vector<double> loss_trace; // per-epoch mean, nats
    size_t epochs_run = 0;
};

using EpochCallback =
    std::function<void(size_t epoch, double mean_loss, const ModelParameters&)>;

inline TrainResult train(const std::vector<TokenStream>& corpus, const TrainConfig& cfg,
                         const ModelConfig& mcfg, EpochCallback on_epoch = {}) {
    cfg.validate();
    if (corpus.empty()) throw EmptyCorpus("training corpus is empty");
    for (const TokenStream& s : corpus)
        if (s.size() < 2) throw Error("corpus sample shorter than 2 tokens");

    TrainResult res;
    res.params = init_parameters(mcfg);
    OptimizerState opt = OptimizerState::init(mcfg);
    std::mt19937_64 rng(cfg.rng_seed);

    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (size_t idx : order) {
            const TokenStream& s = corpus[idx];
            const size_t n = std::min(s.size(), cfg.max_seq_len);
            std::span<const TokenId> input(s.data(), n - 1);
            std::span<const TokenId> targets(s.data() + 1, n - 1);

            ForwardCache cache;
            std::vector<double> logits = forward(input, res.params, mcfg, &cache);
            std::vector<double> dlogits(logits.size());
            loss_sum += cross_entropy(logits, targets, mcfg.vocab_size, dlogits.data());

            ModelParameters grads = zeros_like(mcfg);
            backward(input, dlogits, cache, res.params, mcfg, grads);
            clip_gradients(grads, mcfg, cfg.clip_value, cfg.clip_mode);
            adamw_step(res.params, grads, opt, mcfg, cfg);
        }
        const double mean_loss = loss_sum / static_cast<double>(corpus.size());
        res.loss_trace.push_back(mean_loss);
        res.epochs_run = epoch + 1;
        if (on_epoch) on_epoch(epoch, mean_loss, res.params);
        if (cfg.stop_loss > 0.0 && mean_loss < cfg.stop_loss) break;
    }
    return res;
}

inline void write_loss_csv(const std::string& path, const std::vector<double>& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "epoch,mean_loss_nats\n";
    for (size_t i = 0; i < trace.size(); ++i) out << i << "," << trace[i] << "\n";
}

} // namespace ntg
