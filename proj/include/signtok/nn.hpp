#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "signtok/kernels.hpp"
#include "signtok/rng.hpp"

// Dense layers, tanh/GELU nonlinearities and Adam. Shared by the pose codec
// and the sequence model; all inner products run through the dispatched
// kernels.
namespace signtok {

struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

inline void randomize(Mat& m, Rng& rng, double stddev) {
  for (double& x : m.v) {
    x = rng.normal(0.0, stddev);
  }
}

// y = W x + b
inline void linear_forward(const Mat& w, const std::vector<double>& b, const double* x,
                           double* y) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    y[r] = kernels::dot(w.row(r), x, w.cols) + b[r];
  }
}

// Given upstream dy: dW += dy x^T, db += dy, dx += W^T dy (dx may be null).
inline void linear_backward(const Mat& w, const double* x, const double* dy, Mat& dw,
                            std::vector<double>& db, double* dx) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double g = dy[r];
    if (g != 0.0) {
      kernels::axpy(g, x, dw.row(r), w.cols);
      if (dx != nullptr) {
        kernels::axpy(g, w.row(r), dx, w.cols);
      }
    }
    db[r] += g;
  }
}

// ---------------------------------------------------------------------------
// Small fully connected net: tanh hidden layers, linear output.

struct Mlp {
  std::vector<std::size_t> dims;  // dims[0] = input, dims.back() = output
  std::vector<Mat> weights;       // weights[l]: dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;

  static Mlp create(const std::vector<std::size_t>& dims, Rng& rng) {
    Mlp net;
    net.dims = dims;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      Mat w(dims[l + 1], dims[l]);
      // scaled for tanh units
      randomize(w, rng, std::sqrt(1.0 / static_cast<double>(dims[l])));
      net.weights.push_back(std::move(w));
      net.biases.emplace_back(dims[l + 1], 0.0);
    }
    return net;
  }

  // Same shapes, all zeros; used as a gradient container.
  Mlp zeros_like() const {
    Mlp g;
    g.dims = dims;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      g.weights.emplace_back(weights[l].rows, weights[l].cols);
      g.biases.emplace_back(biases[l].size(), 0.0);
    }
    return g;
  }

  std::size_t layer_count() const { return weights.size(); }
};

struct MlpCache {
  // acts[0] = input, acts[l] = activation after layer l (post-tanh for hidden
  // layers, raw affine output for the final layer)
  std::vector<std::vector<double>> acts;
};

inline void mlp_forward(const Mlp& net, const double* x, MlpCache& cache) {
  cache.acts.assign(net.dims.size(), {});
  cache.acts[0].assign(x, x + net.dims[0]);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    cache.acts[l + 1].assign(net.dims[l + 1], 0.0);
    linear_forward(net.weights[l], net.biases[l], cache.acts[l].data(),
                   cache.acts[l + 1].data());
    if (l + 1 < net.layer_count()) {
      for (double& a : cache.acts[l + 1]) {
        a = std::tanh(a);
      }
    }
  }
}

inline std::vector<double> mlp_apply(const Mlp& net, const double* x) {
  MlpCache cache;
  mlp_forward(net, x, cache);
  return cache.acts.back();
}

// Accumulates parameter gradients into `grads`; writes d(loss)/d(input) into
// dx when non-null.
inline void mlp_backward(const Mlp& net, const MlpCache& cache, const double* dout,
                         Mlp& grads, double* dx) {
  std::vector<double> dcur(dout, dout + net.dims.back());
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    std::vector<double> dprev(net.dims[l], 0.0);
    linear_backward(net.weights[l], cache.acts[l].data(), dcur.data(), grads.weights[l],
                    grads.biases[l], l == 0 ? (dx != nullptr ? dx : nullptr) : dprev.data());
    if (l == 0) {
      break;
    }
    // undo tanh of the layer below: dprev *= (1 - a^2)
    const std::vector<double>& a = cache.acts[l];
    for (std::size_t i = 0; i < dprev.size(); ++i) {
      dprev[i] *= 1.0 - a[i] * a[i];
    }
    dcur = std::move(dprev);
  }
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<double> m, v;
  void ensure(std::size_t n) {
    if (m.size() != n) {
      m.assign(n, 0.0);
      v.assign(n, 0.0);
    }
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// t is 1-based.
inline void adam_step(double* p, const double* g, std::size_t n, AdamState& st,
                      const AdamConfig& cfg, long t) {
  st.ensure(n);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < n; ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace signtok
