#include "signtok/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "signtok/errors.hpp"

namespace signtok {

namespace {

constexpr double kLnEps = 1e-5;

double gelu(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  const double u = c * (x + 0.044715 * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
  constexpr double c = 0.7978845608028654;
  const double u = c * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  const double du = c * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

void layer_norm_forward(const LayerNormParams& ln, const double* x, double* y,
                        double& mean_out, double& rstd_out, std::size_t d) {
  double mean = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    mean += x[i];
  }
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double dx = x[i] - mean;
    var += dx * dx;
  }
  var /= static_cast<double>(d);
  const double rstd = 1.0 / std::sqrt(var + kLnEps);
  for (std::size_t i = 0; i < d; ++i) {
    y[i] = ln.gain[i] * (x[i] - mean) * rstd + ln.bias[i];
  }
  mean_out = mean;
  rstd_out = rstd;
}

// Accumulates dgain/dbias and adds the input gradient into dx.
void layer_norm_backward(const LayerNormParams& ln, const double* x, const double* dy,
                         double mean, double rstd, LayerNormParams& grads, double* dx,
                         std::size_t d) {
  double g_mean = 0.0;
  double gx_mean = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double xhat = (x[i] - mean) * rstd;
    const double g = dy[i] * ln.gain[i];
    grads.gain[i] += dy[i] * xhat;
    grads.bias[i] += dy[i];
    g_mean += g;
    gx_mean += g * xhat;
  }
  g_mean /= static_cast<double>(d);
  gx_mean /= static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double xhat = (x[i] - mean) * rstd;
    const double g = dy[i] * ln.gain[i];
    dx[i] += rstd * (g - g_mean - xhat * gx_mean);
  }
}

struct BlockCache {
  std::vector<double> x_in;                 // T*d
  std::vector<double> ln1_out;              // T*d
  std::vector<double> ln1_mean, ln1_rstd;   // T
  std::vector<double> q, k, v;              // T*d
  std::vector<double> aq, av;               // T*r
  std::vector<double> probs;                // heads*T*T
  std::vector<double> ctx;                  // T*d
  std::vector<double> x_mid;                // T*d
  std::vector<double> ln2_out;              // T*d
  std::vector<double> ln2_mean, ln2_rstd;   // T
  std::vector<double> mlp_pre, mlp_act;     // T*4d
  std::vector<double> drop_attn, drop_mlp;  // T*d keep-masks (scaled), optional
};

struct FwdCache {
  std::size_t T = 0;
  std::vector<int> ids;
  std::vector<double> x0;       // T*d
  std::vector<BlockCache> blocks;
  std::vector<double> x_final;  // T*d
  std::vector<double> lnf_out;  // T*d
  std::vector<double> lnf_mean, lnf_rstd;
};

// q/k/v projection with optional low-rank update on q and v.
void project_qkv(const ModelParams& p, const BlockParams& blk, const BlockAdapters* ad,
                 const double* h, double* q, double* k, double* v, double* aq,
                 double* av) {
  const std::size_t d = p.config.width;
  const std::size_t r = p.lora.rank;
  const double s = p.lora.scaling();
  linear_forward(blk.wq, blk.bq, h, q);
  linear_forward(blk.wk, blk.bk, h, k);
  linear_forward(blk.wv, blk.bv, h, v);
  if (r > 0 && ad != nullptr) {
    for (std::size_t j = 0; j < r; ++j) {
      aq[j] = kernels::dot(ad->q.a.row(j), h, d);
      av[j] = kernels::dot(ad->v.a.row(j), h, d);
    }
    for (std::size_t i = 0; i < d; ++i) {
      q[i] += s * kernels::dot(ad->q.b.row(i), aq, r);
      v[i] += s * kernels::dot(ad->v.b.row(i), av, r);
    }
  }
}

void forward_pass(const ModelParams& p, const std::vector<int>& ids, FwdCache& c,
                  Rng* drop_rng) {
  const std::size_t T = ids.size();
  const std::size_t d = p.config.width;
  const std::size_t heads = p.config.heads;
  const std::size_t hd = d / heads;
  const std::size_t r = p.lora.rank;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
  const double dropout = drop_rng != nullptr ? p.config.dropout : 0.0;

  if (T == 0) {
    throw ContractError("forward: empty token sequence");
  }
  if (T > p.config.context) {
    throw ContractError("forward: sequence exceeds context length");
  }

  c.T = T;
  c.ids = ids;
  c.x0.assign(T * d, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const int id = ids[t];
    if (id < 0 || id >= p.vocab.size()) {
      throw ContractError("forward: token id out of range");
    }
    const double* emb = p.tok_emb.row(static_cast<std::size_t>(id));
    const double* pos = p.pos_emb.row(t);
    double* x = c.x0.data() + t * d;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = emb[i] + pos[i];
    }
  }

  c.blocks.assign(p.config.layers, {});
  std::vector<double> x = c.x0;
  for (std::size_t layer = 0; layer < p.config.layers; ++layer) {
    const BlockParams& blk = p.blocks[layer];
    const BlockAdapters* ad = r > 0 ? &p.adapters[layer] : nullptr;
    BlockCache& bc = c.blocks[layer];
    bc.x_in = x;
    bc.ln1_out.assign(T * d, 0.0);
    bc.ln1_mean.assign(T, 0.0);
    bc.ln1_rstd.assign(T, 0.0);
    bc.q.assign(T * d, 0.0);
    bc.k.assign(T * d, 0.0);
    bc.v.assign(T * d, 0.0);
    bc.aq.assign(T * r, 0.0);
    bc.av.assign(T * r, 0.0);
    bc.probs.assign(heads * T * T, 0.0);
    bc.ctx.assign(T * d, 0.0);

    for (std::size_t t = 0; t < T; ++t) {
      layer_norm_forward(blk.ln1, bc.x_in.data() + t * d, bc.ln1_out.data() + t * d,
                         bc.ln1_mean[t], bc.ln1_rstd[t], d);
      project_qkv(p, blk, ad, bc.ln1_out.data() + t * d, bc.q.data() + t * d,
                  bc.k.data() + t * d, bc.v.data() + t * d, bc.aq.data() + t * r,
                  bc.av.data() + t * r);
    }

    // causal attention
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t o = h * hd;
      for (std::size_t t = 0; t < T; ++t) {
        double* prow = bc.probs.data() + (h * T + t) * T;
        double maxs = -std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u <= t; ++u) {
          const double score =
              kernels::dot(bc.q.data() + t * d + o, bc.k.data() + u * d + o, hd) *
              inv_sqrt_hd;
          prow[u] = score;
          maxs = std::max(maxs, score);
        }
        double sum = 0.0;
        for (std::size_t u = 0; u <= t; ++u) {
          prow[u] = std::exp(prow[u] - maxs);
          sum += prow[u];
        }
        double* ctx = bc.ctx.data() + t * d + o;
        for (std::size_t u = 0; u <= t; ++u) {
          prow[u] /= sum;
          kernels::axpy(prow[u], bc.v.data() + u * d + o, ctx, hd);
        }
      }
    }

    // attention output projection + residual (+ dropout on the contribution)
    bc.x_mid.assign(T * d, 0.0);
    if (dropout > 0.0) {
      bc.drop_attn.assign(T * d, 0.0);
    }
    std::vector<double> att_out(d);
    for (std::size_t t = 0; t < T; ++t) {
      linear_forward(blk.wo, blk.bo, bc.ctx.data() + t * d, att_out.data());
      double* xm = bc.x_mid.data() + t * d;
      const double* xi = bc.x_in.data() + t * d;
      for (std::size_t i = 0; i < d; ++i) {
        double keep = 1.0;
        if (dropout > 0.0) {
          keep = drop_rng->uniform() < dropout ? 0.0 : 1.0 / (1.0 - dropout);
          bc.drop_attn[t * d + i] = keep;
        }
        xm[i] = xi[i] + keep * att_out[i];
      }
    }

    // MLP
    const std::size_t dm = 4 * d;
    bc.ln2_out.assign(T * d, 0.0);
    bc.ln2_mean.assign(T, 0.0);
    bc.ln2_rstd.assign(T, 0.0);
    bc.mlp_pre.assign(T * dm, 0.0);
    bc.mlp_act.assign(T * dm, 0.0);
    if (dropout > 0.0) {
      bc.drop_mlp.assign(T * d, 0.0);
    }
    std::vector<double> mlp_out(d);
    x.assign(T * d, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      layer_norm_forward(blk.ln2, bc.x_mid.data() + t * d, bc.ln2_out.data() + t * d,
                         bc.ln2_mean[t], bc.ln2_rstd[t], d);
      double* pre = bc.mlp_pre.data() + t * dm;
      linear_forward(blk.w1, blk.b1, bc.ln2_out.data() + t * d, pre);
      double* act = bc.mlp_act.data() + t * dm;
      for (std::size_t i = 0; i < dm; ++i) {
        act[i] = gelu(pre[i]);
      }
      linear_forward(blk.w2, blk.b2, act, mlp_out.data());
      double* xo = x.data() + t * d;
      const double* xm = bc.x_mid.data() + t * d;
      for (std::size_t i = 0; i < d; ++i) {
        double keep = 1.0;
        if (dropout > 0.0) {
          keep = drop_rng->uniform() < dropout ? 0.0 : 1.0 / (1.0 - dropout);
          bc.drop_mlp[t * d + i] = keep;
        }
        xo[i] = xm[i] + keep * mlp_out[i];
      }
    }
  }

  c.x_final = x;
  c.lnf_out.assign(T * d, 0.0);
  c.lnf_mean.assign(T, 0.0);
  c.lnf_rstd.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    layer_norm_forward(p.ln_f, c.x_final.data() + t * d, c.lnf_out.data() + t * d,
                       c.lnf_mean[t], c.lnf_rstd[t], d);
  }
}

void logits_for_row(const ModelParams& p, const FwdCache& c, std::size_t t,
                    double* out) {
  const std::size_t d = p.config.width;
  for (int vtok = 0; vtok < p.vocab.size(); ++vtok) {
    out[vtok] = kernels::dot(p.head.row(static_cast<std::size_t>(vtok)),
                             c.lnf_out.data() + t * d, d);
  }
}

// Backward through the stack given per-position gradients w.r.t. lnf_out.
void backward_pass(const ModelParams& p, const FwdCache& c,
                   const std::vector<double>& dlnf_out, ModelParams& g) {
  const std::size_t T = c.T;
  const std::size_t d = p.config.width;
  const std::size_t heads = p.config.heads;
  const std::size_t hd = d / heads;
  const std::size_t r = p.lora.rank;
  const double s = p.lora.scaling();
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t dm = 4 * d;

  std::vector<double> dx(T * d, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    layer_norm_backward(p.ln_f, c.x_final.data() + t * d, dlnf_out.data() + t * d,
                        c.lnf_mean[t], c.lnf_rstd[t], g.ln_f, dx.data() + t * d, d);
  }

  std::vector<double> dmid(T * d);
  std::vector<double> dln2(T * d);
  std::vector<double> dctx(T * d);
  std::vector<double> dq(T * d), dk(T * d), dv(T * d);
  std::vector<double> dln1(T * d);
  std::vector<double> dpre(dm), dact(dm), dmlp_out(d), datt_out(d);

  for (std::size_t layer = p.config.layers; layer-- > 0;) {
    const BlockParams& blk = p.blocks[layer];
    const BlockCache& bc = c.blocks[layer];
    BlockParams& gb = g.blocks[layer];
    const bool dropped = !bc.drop_mlp.empty();

    // MLP backward; residual passthrough keeps dx for the x_mid path
    std::fill(dmid.begin(), dmid.end(), 0.0);
    std::fill(dln2.begin(), dln2.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double* dxo = dx.data() + t * d;
      for (std::size_t i = 0; i < d; ++i) {
        const double keep = dropped ? bc.drop_mlp[t * d + i] : 1.0;
        dmlp_out[i] = keep * dxo[i];
      }
      std::fill(dact.begin(), dact.end(), 0.0);
      linear_backward(blk.w2, bc.mlp_act.data() + t * dm, dmlp_out.data(), gb.w2, gb.b2,
                      dact.data());
      const double* pre = bc.mlp_pre.data() + t * dm;
      for (std::size_t i = 0; i < dm; ++i) {
        dpre[i] = dact[i] * gelu_grad(pre[i]);
      }
      linear_backward(blk.w1, bc.ln2_out.data() + t * d, dpre.data(), gb.w1, gb.b1,
                      dln2.data() + t * d);
      layer_norm_backward(blk.ln2, bc.x_mid.data() + t * d, dln2.data() + t * d,
                          bc.ln2_mean[t], bc.ln2_rstd[t], gb.ln2, dmid.data() + t * d,
                          d);
      // residual
      for (std::size_t i = 0; i < d; ++i) {
        dmid[t * d + i] += dxo[i];
      }
    }

    // attention output projection backward
    std::fill(dctx.begin(), dctx.end(), 0.0);
    const bool adropped = !bc.drop_attn.empty();
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        const double keep = adropped ? bc.drop_attn[t * d + i] : 1.0;
        datt_out[i] = keep * dmid[t * d + i];
      }
      linear_backward(blk.wo, bc.ctx.data() + t * d, datt_out.data(), gb.wo, gb.bo,
                      dctx.data() + t * d);
    }

    // attention core backward
    std::fill(dq.begin(), dq.end(), 0.0);
    std::fill(dk.begin(), dk.end(), 0.0);
    std::fill(dv.begin(), dv.end(), 0.0);
    std::vector<double> dprobs(T);
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t o = h * hd;
      for (std::size_t t = 0; t < T; ++t) {
        const double* prow = bc.probs.data() + (h * T + t) * T;
        const double* dctx_t = dctx.data() + t * d + o;
        double sum = 0.0;
        for (std::size_t u = 0; u <= t; ++u) {
          dprobs[u] = kernels::dot(dctx_t, bc.v.data() + u * d + o, hd);
          kernels::axpy(prow[u], dctx_t, dv.data() + u * d + o, hd);
          sum += prow[u] * dprobs[u];
        }
        for (std::size_t u = 0; u <= t; ++u) {
          const double dscore = prow[u] * (dprobs[u] - sum) * inv_sqrt_hd;
          if (dscore != 0.0) {
            kernels::axpy(dscore, bc.k.data() + u * d + o, dq.data() + t * d + o, hd);
            kernels::axpy(dscore, bc.q.data() + t * d + o, dk.data() + u * d + o, hd);
          }
        }
      }
    }

    // projection backward (wq/wk/wv plus adapters on q and v)
    std::fill(dln1.begin(), dln1.end(), 0.0);
    BlockAdapters* gad = r > 0 ? &g.adapters[layer] : nullptr;
    const BlockAdapters* ad = r > 0 ? &p.adapters[layer] : nullptr;
    std::vector<double> daq(r), dav(r);
    for (std::size_t t = 0; t < T; ++t) {
      const double* hrow = bc.ln1_out.data() + t * d;
      double* dh = dln1.data() + t * d;
      linear_backward(blk.wq, hrow, dq.data() + t * d, gb.wq, gb.bq, dh);
      linear_backward(blk.wk, hrow, dk.data() + t * d, gb.wk, gb.bk, dh);
      linear_backward(blk.wv, hrow, dv.data() + t * d, gb.wv, gb.bv, dh);
      if (r > 0) {
        // q-side adapter
        std::fill(daq.begin(), daq.end(), 0.0);
        std::fill(dav.begin(), dav.end(), 0.0);
        const double* aq = bc.aq.data() + t * r;
        const double* av = bc.av.data() + t * r;
        for (std::size_t i = 0; i < d; ++i) {
          const double gq = s * dq[t * d + i];
          const double gv = s * dv[t * d + i];
          if (gq != 0.0) {
            kernels::axpy(gq, aq, gad->q.b.row(i), r);
            kernels::axpy(gq, ad->q.b.row(i), daq.data(), r);
          }
          if (gv != 0.0) {
            kernels::axpy(gv, av, gad->v.b.row(i), r);
            kernels::axpy(gv, ad->v.b.row(i), dav.data(), r);
          }
        }
        for (std::size_t j = 0; j < r; ++j) {
          if (daq[j] != 0.0) {
            kernels::axpy(daq[j], hrow, gad->q.a.row(j), d);
            kernels::axpy(daq[j], ad->q.a.row(j), dh, d);
          }
          if (dav[j] != 0.0) {
            kernels::axpy(dav[j], hrow, gad->v.a.row(j), d);
            kernels::axpy(dav[j], ad->v.a.row(j), dh, d);
          }
        }
      }
    }

    // ln1 backward into the block input; then the attention residual
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      layer_norm_backward(blk.ln1, bc.x_in.data() + t * d, dln1.data() + t * d,
                          bc.ln1_mean[t], bc.ln1_rstd[t], gb.ln1, dx.data() + t * d, d);
      for (std::size_t i = 0; i < d; ++i) {
        dx[t * d + i] += dmid[t * d + i];
      }
    }
  }

  // embeddings
  for (std::size_t t = 0; t < T; ++t) {
    const double* dxt = dx.data() + t * d;
    kernels::axpy(1.0, dxt, g.tok_emb.row(static_cast<std::size_t>(c.ids[t])), d);
    kernels::axpy(1.0, dxt, g.pos_emb.row(t), d);
  }
}

}  // namespace

ModelParams init_model(const ModelConfig& config, const LoraConfig& lora,
                       const Vocabulary& vocab) {
  if (config.width % config.heads != 0) {
    throw ContractError("model: width must be divisible by heads");
  }
  ModelParams p;
  p.config = config;
  p.lora = lora;
  p.vocab = vocab;
  Rng rng(config.seed);
  const std::size_t d = config.width;
  const auto v = static_cast<std::size_t>(vocab.size());

  p.tok_emb = Mat(v, d);
  randomize(p.tok_emb, rng, 0.02);
  p.pos_emb = Mat(config.context, d);
  randomize(p.pos_emb, rng, 0.01);
  const double resid_scale = 1.0 / std::sqrt(2.0 * static_cast<double>(config.layers));
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    BlockParams blk;
    blk.ln1.gain.assign(d, 1.0);
    blk.ln1.bias.assign(d, 0.0);
    blk.ln2.gain.assign(d, 1.0);
    blk.ln2.bias.assign(d, 0.0);
    blk.wq = Mat(d, d);
    blk.wk = Mat(d, d);
    blk.wv = Mat(d, d);
    blk.wo = Mat(d, d);
    randomize(blk.wq, rng, 0.02);
    randomize(blk.wk, rng, 0.02);
    randomize(blk.wv, rng, 0.02);
    randomize(blk.wo, rng, 0.02 * resid_scale);
    blk.bq.assign(d, 0.0);
    blk.bk.assign(d, 0.0);
    blk.bv.assign(d, 0.0);
    blk.bo.assign(d, 0.0);
    blk.w1 = Mat(4 * d, d);
    blk.w2 = Mat(d, 4 * d);
    randomize(blk.w1, rng, 0.02);
    randomize(blk.w2, rng, 0.02 * resid_scale);
    blk.b1.assign(4 * d, 0.0);
    blk.b2.assign(d, 0.0);
    p.blocks.push_back(std::move(blk));
  }
  p.ln_f.gain.assign(d, 1.0);
  p.ln_f.bias.assign(d, 0.0);
  p.head = Mat(v, d);
  randomize(p.head, rng, 0.02);

  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    BlockAdapters ad;
    if (lora.rank > 0) {
      ad.q.a = Mat(lora.rank, d);
      ad.q.b = Mat(d, lora.rank);  // zero-init: adapters start as identity
      ad.v.a = Mat(lora.rank, d);
      ad.v.b = Mat(d, lora.rank);
      randomize(ad.q.a, rng, 0.02);
      randomize(ad.v.a, rng, 0.02);
    }
    p.adapters.push_back(std::move(ad));
  }
  return p;
}

void zero_tensors(ModelParams& params) {
  for (const ParamRef& ref : param_refs(params)) {
    std::fill(ref.data->begin(), ref.data->end(), 0.0);
  }
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams g = params;
  zero_tensors(g);
  return g;
}

std::vector<ParamRef> param_refs(ModelParams& p) {
  std::vector<ParamRef> refs;
  refs.push_back({"tok_emb", &p.tok_emb.v, false});
  refs.push_back({"pos_emb", &p.pos_emb.v, false});
  for (std::size_t l = 0; l < p.blocks.size(); ++l) {
    const std::string pre = "block" + std::to_string(l) + ".";
    BlockParams& blk = p.blocks[l];
    refs.push_back({pre + "ln1.gain", &blk.ln1.gain, false});
    refs.push_back({pre + "ln1.bias", &blk.ln1.bias, false});
    refs.push_back({pre + "wq", &blk.wq.v, false});
    refs.push_back({pre + "bq", &blk.bq, false});
    refs.push_back({pre + "wk", &blk.wk.v, false});
    refs.push_back({pre + "bk", &blk.bk, false});
    refs.push_back({pre + "wv", &blk.wv.v, false});
    refs.push_back({pre + "bv", &blk.bv, false});
    refs.push_back({pre + "wo", &blk.wo.v, false});
    refs.push_back({pre + "bo", &blk.bo, false});
    refs.push_back({pre + "ln2.gain", &blk.ln2.gain, false});
    refs.push_back({pre + "ln2.bias", &blk.ln2.bias, false});
    refs.push_back({pre + "w1", &blk.w1.v, false});
    refs.push_back({pre + "b1", &blk.b1, false});
    refs.push_back({pre + "w2", &blk.w2.v, false});
    refs.push_back({pre + "b2", &blk.b2, false});
  }
  refs.push_back({"ln_f.gain", &p.ln_f.gain, false});
  refs.push_back({"ln_f.bias", &p.ln_f.bias, false});
  refs.push_back({"head", &p.head.v, false});
  if (p.lora.rank > 0) {
    for (std::size_t l = 0; l < p.adapters.size(); ++l) {
      const std::string pre = "adapter" + std::to_string(l) + ".";
      BlockAdapters& ad = p.adapters[l];
      refs.push_back({pre + "q.a", &ad.q.a.v, true});
      refs.push_back({pre + "q.b", &ad.q.b.v, true});
      refs.push_back({pre + "v.a", &ad.v.a.v, true});
      refs.push_back({pre + "v.b", &ad.v.b.v, true});
    }
  }
  return refs;
}

std::uint64_t base_checksum(const ModelParams& params) {
  auto& mutable_params = const_cast<ModelParams&>(params);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const ParamRef& ref : param_refs(mutable_params)) {
    if (ref.adapter) {
      continue;
    }
    h = fnv1a64(ref.data->data(), ref.data->size() * sizeof(double), h);
  }
  return h;
}

ModelParams merge_lora(const ModelParams& params) {
  ModelParams merged = params;
  const std::size_t r = params.lora.rank;
  if (r == 0) {
    return merged;  // rank zero: merge is the identity
  }
  const double s = params.lora.scaling();
  const std::size_t d = params.config.width;
  for (std::size_t l = 0; l < merged.blocks.size(); ++l) {
    const BlockAdapters& ad = params.adapters[l];
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double dq = 0.0, dv = 0.0;
        for (std::size_t k = 0; k < r; ++k) {
          dq += ad.q.b.at(i, k) * ad.q.a.at(k, j);
          dv += ad.v.b.at(i, k) * ad.v.a.at(k, j);
        }
        merged.blocks[l].wq.at(i, j) += s * dq;
        merged.blocks[l].wv.at(i, j) += s * dv;
      }
    }
    merged.adapters[l].q.b.zero();
    merged.adapters[l].v.b.zero();
  }
  return merged;
}

std::vector<double> forward_logits(const ModelParams& params,
                                   const std::vector<int>& ids) {
  FwdCache cache;
  forward_pass(params, ids, cache, nullptr);
  const auto v = static_cast<std::size_t>(params.vocab.size());
  std::vector<double> logits(cache.T * v);
  for (std::size_t t = 0; t < cache.T; ++t) {
    logits_for_row(params, cache, t, logits.data() + t * v);
  }
  return logits;
}

double ce_loss(const std::vector<std::vector<double>>& logits,
               const std::vector<int>& targets) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw ContractError("ce_loss: logits/targets length mismatch or empty");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    const std::vector<double>& row = logits[t];
    const int target = targets[t];
    if (target < 0 || static_cast<std::size_t>(target) >= row.size()) {
      throw ContractError("ce_loss: target id out of range");
    }
    const double maxv = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double x : row) {
      sum += std::exp(x - maxv);
    }
    total += std::log(sum) - (row[static_cast<std::size_t>(target)] - maxv);
  }
  return total / static_cast<double>(logits.size());
}

double sample_ce(const ModelParams& params, const TrainingSample& sample) {
  const std::vector<int> ids = sample.full_ids();
  const auto v = static_cast<std::size_t>(params.vocab.size());
  const std::vector<double> logits = forward_logits(params, ids);
  std::vector<std::vector<double>> rows;
  std::vector<int> targets;
  const std::size_t prompt_len = sample.prompt_ids.size();
  for (std::size_t t = prompt_len - 1; t + 1 < ids.size(); ++t) {
    rows.emplace_back(logits.begin() + static_cast<std::ptrdiff_t>(t * v),
                      logits.begin() + static_cast<std::ptrdiff_t>((t + 1) * v));
    targets.push_back(ids[t + 1]);
  }
  return ce_loss(rows, targets);
}

double sample_ce_gradients(const ModelParams& params, const TrainingSample& sample,
                           double scale, ModelParams& grads, Rng* dropout_rng) {
  if (sample.target_ids.empty()) {
    throw ContractError("sample_ce_gradients: empty target span");
  }
  const std::vector<int> ids = sample.full_ids();
  FwdCache cache;
  forward_pass(params, ids, cache, dropout_rng);

  const std::size_t d = params.config.width;
  const auto v = static_cast<std::size_t>(params.vocab.size());
  const std::size_t prompt_len = sample.prompt_ids.size();
  const auto t_count = static_cast<double>(sample.target_ids.size());
  const double pos_scale = scale / t_count;

  std::vector<double> dlnf(cache.T * d, 0.0);
  std::vector<double> logit_row(v);
  std::vector<double> dlogit_row(v);
  double loss = 0.0;
  for (std::size_t t = prompt_len - 1; t + 1 < ids.size(); ++t) {
    logits_for_row(params, cache, t, logit_row.data());
    const int target = ids[t + 1];
    const double maxv = *std::max_element(logit_row.begin(), logit_row.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      dlogit_row[i] = std::exp(logit_row[i] - maxv);
      sum += dlogit_row[i];
    }
    loss += std::log(sum) - (logit_row[static_cast<std::size_t>(target)] - maxv);
    // dlogits = softmax - onehot
    for (std::size_t i = 0; i < v; ++i) {
      dlogit_row[i] = dlogit_row[i] / sum * pos_scale;
    }
    dlogit_row[static_cast<std::size_t>(target)] -= pos_scale;
    // head backward
    double* dlnf_t = dlnf.data() + t * d;
    for (std::size_t i = 0; i < v; ++i) {
      if (dlogit_row[i] != 0.0) {
        kernels::axpy(dlogit_row[i], cache.lnf_out.data() + t * d, grads.head.row(i), d);
        kernels::axpy(dlogit_row[i], params.head.row(i), dlnf_t, d);
      }
    }
  }

  backward_pass(params, cache, dlnf, grads);
  return loss / t_count;
}

ModelTrainResult train_model(const std::vector<TrainingSample>& samples,
                             const ModelConfig& config, const LoraConfig& lora,
                             const Vocabulary& vocab) {
  if (samples.empty()) {
    throw ContractError("train_model: no samples");
  }
  for (const TrainingSample& s : samples) {
    if (s.prompt_ids.size() + s.target_ids.size() > config.context) {
      throw ContractError("train_model: sample exceeds context: " + s.id);
    }
  }

  ModelTrainResult result;
  result.params = init_model(config, lora, vocab);
  ModelParams& params = result.params;
  ModelParams grads = zeros_like(params);

  std::vector<ParamRef> prefs = param_refs(params);
  std::vector<ParamRef> grefs = param_refs(grads);
  std::vector<AdamState> states(prefs.size());
  const AdamConfig adam{config.learning_rate, 0.9, 0.999, 1e-8};

  Rng batch_rng(config.seed ^ 0xa5a5a5a5deadbeefull);
  Rng dropout_rng(config.seed ^ 0x0f0f0f0f12345678ull);
  const std::size_t batch = std::max<std::size_t>(1, config.batch);

  for (std::size_t step = 0; step < config.steps; ++step) {
    zero_tensors(grads);
    double step_loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t idx = static_cast<std::size_t>(batch_rng.below(samples.size()));
      step_loss += sample_ce_gradients(
          params, samples[idx], 1.0 / static_cast<double>(batch), grads,
          config.dropout > 0.0 ? &dropout_rng : nullptr);
    }
    step_loss /= static_cast<double>(batch);
    if (!std::isfinite(step_loss)) {
      throw TrainError("train_model: loss diverged at step " + std::to_string(step));
    }
    const long t = static_cast<long>(step) + 1;
    for (std::size_t i = 0; i < prefs.size(); ++i) {
      if (lora.base_frozen && !prefs[i].adapter) {
        continue;
      }
      adam_step(prefs[i].data->data(), grefs[i].data->data(), prefs[i].data->size(),
                states[i], adam, t);
    }
    if (config.log_interval != 0 &&
        (step % config.log_interval == 0 || step + 1 == config.steps)) {
      result.log.push_back({step, step_loss});
    }
  }
  return result;
}

// --- incremental decoding ------------------------------------------------------

std::vector<double> incremental_logits(const ModelParams& p, KvCache& cache,
                                       int token_id) {
  const std::size_t d = p.config.width;
  const std::size_t heads = p.config.heads;
  const std::size_t hd = d / heads;
  const std::size_t r = p.lora.rank;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
  const std::size_t t = cache.len;

  if (t >= p.config.context) {
    throw ContractError("incremental_logits: context exhausted");
  }
  if (token_id < 0 || token_id >= p.vocab.size()) {
    throw ContractError("incremental_logits: token id out of range");
  }
  if (cache.k.empty()) {
    cache.k.assign(p.config.layers, {});
    cache.v.assign(p.config.layers, {});
  }

  std::vector<double> x(d);
  {
    const double* emb = p.tok_emb.row(static_cast<std::size_t>(token_id));
    const double* pos = p.pos_emb.row(t);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = emb[i] + pos[i];
    }
  }

  std::vector<double> h(d), q(d), k(d), v(d), ctx(d), att_out(d);
  std::vector<double> aq(std::max<std::size_t>(r, 1)), av(std::max<std::size_t>(r, 1));
  std::vector<double> pre(4 * d), act(4 * d), mlp_out(d), ln2(d);
  for (std::size_t layer = 0; layer < p.config.layers; ++layer) {
    const BlockParams& blk = p.blocks[layer];
    const BlockAdapters* ad = r > 0 ? &p.adapters[layer] : nullptr;
    double mean, rstd;
    layer_norm_forward(blk.ln1, x.data(), h.data(), mean, rstd, d);
    project_qkv(p, blk, ad, h.data(), q.data(), k.data(), v.data(), aq.data(),
                av.data());
    cache.k[layer].insert(cache.k[layer].end(), k.begin(), k.end());
    cache.v[layer].insert(cache.v[layer].end(), v.begin(), v.end());

    std::fill(ctx.begin(), ctx.end(), 0.0);
    std::vector<double> scores(t + 1);
    for (std::size_t head = 0; head < heads; ++head) {
      const std::size_t o = head * hd;
      double maxs = -std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u <= t; ++u) {
        scores[u] = kernels::dot(q.data() + o, cache.k[layer].data() + u * d + o, hd) *
                    inv_sqrt_hd;
        maxs = std::max(maxs, scores[u]);
      }
      double sum = 0.0;
      for (std::size_t u = 0; u <= t; ++u) {
        scores[u] = std::exp(scores[u] - maxs);
        sum += scores[u];
      }
      for (std::size_t u = 0; u <= t; ++u) {
        kernels::axpy(scores[u] / sum, cache.v[layer].data() + u * d + o,
                      ctx.data() + o, hd);
      }
    }
    linear_forward(blk.wo, blk.bo, ctx.data(), att_out.data());
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += att_out[i];
    }
    layer_norm_forward(blk.ln2, x.data(), ln2.data(), mean, rstd, d);
    linear_forward(blk.w1, blk.b1, ln2.data(), pre.data());
    for (std::size_t i = 0; i < 4 * d; ++i) {
      act[i] = gelu(pre[i]);
    }
    linear_forward(blk.w2, blk.b2, act.data(), mlp_out.data());
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += mlp_out[i];
    }
  }

  double mean, rstd;
  layer_norm_forward(p.ln_f, x.data(), h.data(), mean, rstd, d);
  std::vector<double> logits(static_cast<std::size_t>(p.vocab.size()));
  for (int vtok = 0; vtok < p.vocab.size(); ++vtok) {
    logits[static_cast<std::size_t>(vtok)] =
        kernels::dot(p.head.row(static_cast<std::size_t>(vtok)), h.data(), d);
  }
  ++cache.len;
  return logits;
}

GenerationResult generate_tokens(const ModelParams& params,
                                 const std::vector<int>& prompt_ids,
                                 const SamplingConfig& sampling) {
  if (prompt_ids.empty()) {
    throw ContractError("generate_tokens: empty prompt");
  }
  if (prompt_ids.size() >= params.config.context) {
    throw ContractError("generate_tokens: prompt does not fit the context");
  }
  const Vocabulary& vocab = params.vocab;
  const std::size_t limit =
      sampling.max_new == 0
          ? params.config.context - prompt_ids.size()
          : std::min(sampling.max_new, params.config.context - prompt_ids.size());

  KvCache cache;
  std::vector<double> logits;
  for (int id : prompt_ids) {
    logits = incremental_logits(params, cache, id);
  }

  Rng rng(sampling.seed);
  GenerationResult result;
  for (std::size_t n = 0; n < limit; ++n) {
    // admissibility: only pose tokens and EOS after the separator
    std::vector<std::pair<double, int>> admissible;
    admissible.reserve(static_cast<std::size_t>(vocab.pose_count) + 1);
    for (int k = 0; k < vocab.pose_count; ++k) {
      const int id = vocab.pose_token_id(k);
      admissible.emplace_back(logits[static_cast<std::size_t>(id)], id);
    }
    admissible.emplace_back(logits[static_cast<std::size_t>(vocab.eos)], vocab.eos);

    int next;
    if (sampling.mode == "top_k" && sampling.top_k > 0) {
      std::partial_sort(admissible.begin(),
                        admissible.begin() +
                            static_cast<std::ptrdiff_t>(std::min(
                                sampling.top_k, admissible.size())),
                        admissible.end(),
                        [](const auto& a, const auto& b) { return a.first > b.first; });
      const std::size_t kk = std::min(sampling.top_k, admissible.size());
      double maxv = admissible[0].first;
      double sum = 0.0;
      std::vector<double> probs(kk);
      for (std::size_t i = 0; i < kk; ++i) {
        probs[i] = std::exp(admissible[i].first - maxv);
        sum += probs[i];
      }
      double pick = rng.uniform() * sum;
      std::size_t chosen = kk - 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < kk; ++i) {
        acc += probs[i];
        if (pick < acc) {
          chosen = i;
          break;
        }
      }
      next = admissible[chosen].second;
    } else {
      // greedy; ties resolve to the lowest id (pose block order, then EOS)
      next = admissible[0].second;
      double best = admissible[0].first;
      for (const auto& [score, id] : admissible) {
        if (score > best) {
          best = score;
          next = id;
        }
      }
    }

    if (next == vocab.eos) {
      return result;
    }
    result.tokens.indices.push_back(vocab.pose_index(next));
    if (result.tokens.indices.size() == limit ||
        cache.len >= params.config.context) {
      break;
    }
    logits = incremental_logits(params, cache, next);
  }
  result.truncated = true;
  return result;
}

// --- persistence ----------------------------------------------------------------

namespace {

using nlohmann::json;

json model_config_to_json(const ModelConfig& c) {
  json j;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["width"] = c.width;
  j["context"] = c.context;
  j["dropout"] = c.dropout;
  j["learning_rate"] = c.learning_rate;
  j["steps"] = c.steps;
  j["batch"] = c.batch;
  j["seed"] = c.seed;
  j["sampling"] = c.sampling;
  j["top_k"] = c.top_k;
  j["log_interval"] = c.log_interval;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.width = j.at("width").get<std::size_t>();
  c.context = j.at("context").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.steps = j.at("steps").get<std::size_t>();
  c.batch = j.at("batch").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sampling = j.at("sampling").get<std::string>();
  c.top_k = j.at("top_k").get<std::size_t>();
  c.log_interval = j.at("log_interval").get<std::size_t>();
  return c;
}

}  // namespace

void save_model(const std::string& path, const ModelParams& params) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "seq_model";
  j["config"] = model_config_to_json(params.config);
  j["lora"] = {{"rank", params.lora.rank},
               {"alpha", params.lora.alpha},
               {"base_frozen", params.lora.base_frozen}};
  j["vocab"] = {{"id_to_token", params.vocab.id_to_token},
                {"pose_base", params.vocab.pose_base},
                {"pose_count", params.vocab.pose_count}};
  json tensors;
  auto& mutable_params = const_cast<ModelParams&>(params);
  for (const ParamRef& ref : param_refs(mutable_params)) {
    tensors[ref.name] = *ref.data;
  }
  j["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write model checkpoint: " + path);
  }
  out << j.dump() << '\n';
  if (!out) {
    throw IoError("model checkpoint write failed: " + path);
  }
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open model checkpoint: " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model checkpoint: ") + e.what());
  }
  if (j.value("format_version", 0) != 1 || j.value("kind", "") != "seq_model") {
    throw FormatError("model checkpoint: unsupported format");
  }
  const ModelConfig config = model_config_from_json(j.at("config"));
  LoraConfig lora;
  lora.rank = j.at("lora").at("rank").get<std::size_t>();
  lora.alpha = j.at("lora").at("alpha").get<double>();
  lora.base_frozen = j.at("lora").at("base_frozen").get<bool>();

  Vocabulary vocab;
  vocab.id_to_token = j.at("vocab").at("id_to_token").get<std::vector<std::string>>();
  vocab.pose_base = j.at("vocab").at("pose_base").get<int>();
  vocab.pose_count = j.at("vocab").at("pose_count").get<int>();
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
    vocab.token_to_id[vocab.id_to_token[i]] = static_cast<int>(i);
  }

  ModelParams params = init_model(config, lora, vocab);
  const json& tensors = j.at("tensors");
  for (const ParamRef& ref : param_refs(params)) {
    const auto values = tensors.at(ref.name).get<std::vector<double>>();
    if (values.size() != ref.data->size()) {
      throw FormatError("model checkpoint: tensor size mismatch for " + ref.name);
    }
    *ref.data = values;
  }
  return params;
}

}  // namespace signtok
