// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#include "awplab/tape.hpp"

#include <algorithm>
#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
namespace {
// Tape buffers are ~1 MB and allocated/freed every pass; keep them on the
// heap instead of letting glibc round-trip each one through mmap/munmap.
const bool malloc_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 64 << 20);
  return true;
}();
}  // namespace
#endif

namespace awplab {

std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Tape::NodeId Tape::push(Tensor value, bool requires_grad,
                        std::function<void(Tape&)> back) {
  Node n;
  n.grad = Tensor::zeros(value.shape);
  n.value = std::move(value);
  n.back = std::move(back);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
  value.check_finite("leaf");
  return push(std::move(value), requires_grad, {});
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0]) {
    throw Error("matmul: incompatible shapes " + shape_str(A.shape) + " x " +
                shape_str(B.shape));
  }
  const int m = A.shape[0], k = A.shape[1], n = B.shape[1];
  Tensor C = Tensor::zeros({m, n});
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = A.data[static_cast<size_t>(i) * k + p];
      for (int j = 0; j < n; ++j)
        C.data[static_cast<size_t>(i) * n + j] += av * B.data[static_cast<size_t>(p) * n + j];
    }
  C.check_finite("matmul");
  bool rg = needs_grad(a) || needs_grad(b);
  NodeId out = push(std::move(C), rg, {});
  nodes_.back().back = [a, b, out, m, k, n](Tape& t) {
    const Tensor& dC = t.grad(out);
    if (t.needs_grad(a)) {
      Tensor& dA = t.grad_mut(a);
      const Tensor& B = t.value(b);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double g = dC.data[static_cast<size_t>(i) * n + j];
          for (int p = 0; p < k; ++p)
            dA.data[static_cast<size_t>(i) * k + p] += g * B.data[static_cast<size_t>(p) * n + j];
        }
    }
    if (t.needs_grad(b)) {
      Tensor& dB = t.grad_mut(b);
      const Tensor& A = t.value(a);
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          const double av = A.data[static_cast<size_t>(i) * k + p];
          for (int j = 0; j < n; ++j)
            dB.data[static_cast<size_t>(p) * n + j] += av * dC.data[static_cast<size_t>(i) * n + j];
        }
    }
  };
  return out;
}

Tape::NodeId Tape::linear(NodeId x, NodeId w) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  if (X.shape.size() != 2 || W.shape.size() != 2 || X.shape[1] != W.shape[1]) {
    throw Error("linear: incompatible shapes " + shape_str(X.shape) + " x " +
                shape_str(W.shape) + "^T");
  }
  const int n = X.shape[0], in = X.shape[1], out_f = W.shape[0];
  Tensor Y = Tensor::zeros({n, out_f});
  for (int i = 0; i < n; ++i)
    for (int o = 0; o < out_f; ++o) {
      double s = 0.0;
      const double* xr = &X.data[static_cast<size_t>(i) * in];
      const double* wr = &W.data[static_cast<size_t>(o) * in];
      for (int p = 0; p < in; ++p) s += xr[p] * wr[p];
      Y.data[static_cast<size_t>(i) * out_f + o] = s;
    }
  Y.check_finite("linear");
  bool rg = needs_grad(x) || needs_grad(w);
  NodeId id = push(std::move(Y), rg, {});
  nodes_.back().back = [x, w, id, n, in, out_f](Tape& t) {
    const Tensor& dY = t.grad(id);
    if (t.needs_grad(x)) {
      Tensor& dX = t.grad_mut(x);
      const Tensor& W = t.value(w);
      for (int i = 0; i < n; ++i)
        for (int o = 0; o < out_f; ++o) {
          const double g = dY.data[static_cast<size_t>(i) * out_f + o];
          const double* wr = &W.data[static_cast<size_t>(o) * in];
          double* dxr = &dX.data[static_cast<size_t>(i) * in];
          for (int p = 0; p < in; ++p) dxr[p] += g * wr[p];
        }
    }
    if (t.needs_grad(w)) {
      Tensor& dW = t.grad_mut(w);
      const Tensor& X = t.value(x);
      for (int i = 0; i < n; ++i)
        for (int o = 0; o < out_f; ++o) {
          const double g = dY.data[static_cast<size_t>(i) * out_f + o];
          const double* xr = &X.data[static_cast<size_t>(i) * in];
          double* dwr = &dW.data[static_cast<size_t>(o) * in];
          for (int p = 0; p < in; ++p) dwr[p] += g * xr[p];
        }
    }
  };
  return id;
}

Tape::NodeId Tape::conv2d(NodeId x, NodeId k, int pad) {
  const Tensor& X = value(x);
  const Tensor& K = value(k);
  if (X.shape.size() != 4 || K.shape.size() != 4 || X.shape[1] != K.shape[1]) {
    throw Error("conv2d: incompatible shapes input " + shape_str(X.shape) +
                " kernel " + shape_str(K.shape));
  }
  const int N = X.shape[0], C = X.shape[1], H = X.shape[2], W = X.shape[3];
  const int O = K.shape[0], kh = K.shape[2], kw = K.shape[3];
  const int OH = H + 2 * pad - kh + 1, OW = W + 2 * pad - kw + 1;
  if (OH <= 0 || OW <= 0) {
    throw Error("conv2d: kernel " + shape_str(K.shape) + " too large for input " +
                shape_str(X.shape) + " with pad " + std::to_string(pad));
  }
  Tensor Y = Tensor::zeros({N, O, OH, OW});
  // 3x3 kernels go through a zero-padded plane so every output element is a
  // straight 9-tap FMA chain with no edge bookkeeping; that is the shape the
  // vectorizer wants. Other kernel sizes take the per-tap plane walk.
  if (kh == 3 && kw == 3) {
    const int PH = H + 2 * pad, PW = W + 2 * pad;
    std::vector<double> xpad(static_cast<size_t>(PH) * PW);
    for (int nn = 0; nn < N; ++nn)
      for (int c = 0; c < C; ++c) {
        std::fill(xpad.begin(), xpad.end(), 0.0);
        const double* xp = &X.data[(static_cast<size_t>(nn) * C + c) * H * W];
        for (int i = 0; i < H; ++i)
          std::copy(xp + static_cast<size_t>(i) * W, xp + static_cast<size_t>(i + 1) * W,
                    xpad.begin() + static_cast<size_t>(i + pad) * PW + pad);
        for (int o = 0; o < O; ++o) {
          const double* kp = &K.data[(static_cast<size_t>(o) * C + c) * 9];
          const double k0 = kp[0], k1 = kp[1], k2 = kp[2], k3 = kp[3], k4 = kp[4],
                       k5 = kp[5], k6 = kp[6], k7 = kp[7], k8 = kp[8];
          double* yp = &Y.data[(static_cast<size_t>(nn) * O + o) * OH * OW];
          for (int oi = 0; oi < OH; ++oi) {
            const double* __restrict r0 = xpad.data() + static_cast<size_t>(oi) * PW;
            const double* __restrict r1 = r0 + PW;
            const double* __restrict r2 = r1 + PW;
            double* __restrict yr = yp + static_cast<size_t>(oi) * OW;
            for (int j = 0; j < OW; ++j)
              yr[j] += k0 * r0[j] + k1 * r0[j + 1] + k2 * r0[j + 2] + k3 * r1[j] +
                       k4 * r1[j + 1] + k5 * r1[j + 2] + k6 * r2[j] + k7 * r2[j + 1] +
                       k8 * r2[j + 2];
          }
        }
      }
  } else {
    for (int nn = 0; nn < N; ++nn)
      for (int o = 0; o < O; ++o) {
        double* yp = &Y.data[(static_cast<size_t>(nn) * O + o) * OH * OW];
        for (int c = 0; c < C; ++c) {
          const double* xp = &X.data[(static_cast<size_t>(nn) * C + c) * H * W];
          const double* kp = &K.data[(static_cast<size_t>(o) * C + c) * kh * kw];
          for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
              const double kv = kp[ki * kw + kj];
              const int oi_lo = std::max(0, pad - ki), oi_hi = std::min(OH, H + pad - ki);
              const int oj_lo = std::max(0, pad - kj), oj_hi = std::min(OW, W + pad - kj);
              const int run = oj_hi - oj_lo;
              for (int oi = oi_lo; oi < oi_hi; ++oi) {
                const double* __restrict xr =
                    xp + static_cast<size_t>(oi + ki - pad) * W + (oj_lo + kj - pad);
                double* __restrict yr = yp + static_cast<size_t>(oi) * OW + oj_lo;
                for (int j = 0; j < run; ++j) yr[j] += kv * xr[j];
              }
            }
        }
      }
  }
  Y.check_finite("conv2d");
  bool rg = needs_grad(x) || needs_grad(k);
  NodeId id = push(std::move(Y), rg, {});
  nodes_.back().back = [x, k, id, pad, N, C, H, W, O, kh, kw, OH, OW](Tape& t) {
    const Tensor& dY = t.grad(id);
    const Tensor& X = t.value(x);
    const Tensor& K = t.value(k);
    const bool gx = t.needs_grad(x);
    const bool gk = t.needs_grad(k);
    if (!gx && !gk) return;
    Tensor* dX = gx ? &t.grad_mut(x) : nullptr;
    Tensor* dK = gk ? &t.grad_mut(k) : nullptr;
    if (kh == 3 && kw == 3 && pad <= 2) {
      // dX is the full correlation with the flipped kernel against a
      // zero-padded dY; dK taps are plane dots against the padded input.
      // Same stencil shape as the forward pass.
      const int GH = H + 2, GW = W + 2, off = 2 - pad;
      const int PH = H + 2 * pad, PW = W + 2 * pad;
      std::vector<double> gpad(static_cast<size_t>(GH) * GW);
      std::vector<double> xpads;
      if (gk) xpads.resize(static_cast<size_t>(C) * PH * PW);
      for (int nn = 0; nn < N; ++nn) {
        if (gk) {
          std::fill(xpads.begin(), xpads.end(), 0.0);
          for (int c = 0; c < C; ++c) {
            const double* xp = &X.data[(static_cast<size_t>(nn) * C + c) * H * W];
            double* xq = &xpads[static_cast<size_t>(c) * PH * PW];
            for (int i = 0; i < H; ++i)
              std::copy(xp + static_cast<size_t>(i) * W,
                        xp + static_cast<size_t>(i + 1) * W,
                        xq + static_cast<size_t>(i + pad) * PW + pad);
          }
        }
        for (int o = 0; o < O; ++o) {
          const double* gp = &dY.data[(static_cast<size_t>(nn) * O + o) * OH * OW];
          std::fill(gpad.begin(), gpad.end(), 0.0);
          for (int i = 0; i < OH; ++i)
            std::copy(gp + static_cast<size_t>(i) * OW, gp + static_cast<size_t>(i + 1) * OW,
                      gpad.begin() + static_cast<size_t>(i + off) * GW + off);
          for (int c = 0; c < C; ++c) {
            const double* kp = &K.data[(static_cast<size_t>(o) * C + c) * 9];
            if (gx) {
              const double f0 = kp[8], f1 = kp[7], f2 = kp[6], f3 = kp[5], f4 = kp[4],
                           f5 = kp[3], f6 = kp[2], f7 = kp[1], f8 = kp[0];
              double* dxp = &dX->data[(static_cast<size_t>(nn) * C + c) * H * W];
              for (int i = 0; i < H; ++i) {
                const double* __restrict g0 = gpad.data() + static_cast<size_t>(i) * GW;
                const double* __restrict g1 = g0 + GW;
                const double* __restrict g2 = g1 + GW;
                double* __restrict dxr = dxp + static_cast<size_t>(i) * W;
                for (int j = 0; j < W; ++j)
                  dxr[j] += f0 * g0[j] + f1 * g0[j + 1] + f2 * g0[j + 2] + f3 * g1[j] +
                            f4 * g1[j + 1] + f5 * g1[j + 2] + f6 * g2[j] +
                            f7 * g2[j + 1] + f8 * g2[j + 2];
              }
            }
            if (gk) {
              const double* xq = &xpads[static_cast<size_t>(c) * PH * PW];
              double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0,
                     a6 = 0.0, a7 = 0.0, a8 = 0.0;
              for (int oi = 0; oi < OH; ++oi) {
                const double* __restrict gr = gp + static_cast<size_t>(oi) * OW;
                const double* __restrict x0 = xq + static_cast<size_t>(oi) * PW;
                const double* __restrict x1 = x0 + PW;
                const double* __restrict x2 = x1 + PW;
                for (int j = 0; j < OW; ++j) {
                  const double g = gr[j];
                  a0 += g * x0[j];
                  a1 += g * x0[j + 1];
                  a2 += g * x0[j + 2];
                  a3 += g * x1[j];
                  a4 += g * x1[j + 1];
                  a5 += g * x1[j + 2];
                  a6 += g * x2[j];
                  a7 += g * x2[j + 1];
                  a8 += g * x2[j + 2];
                }
              }
              double* dkp = &dK->data[(static_cast<size_t>(o) * C + c) * 9];
              dkp[0] += a0;
              dkp[1] += a1;
              dkp[2] += a2;
              dkp[3] += a3;
              dkp[4] += a4;
              dkp[5] += a5;
              dkp[6] += a6;
              dkp[7] += a7;
              dkp[8] += a8;
            }
          }
        }
      }
      return;
    }
    for (int nn = 0; nn < N; ++nn)
      for (int o = 0; o < O; ++o) {
        const double* gp = &dY.data[(static_cast<size_t>(nn) * O + o) * OH * OW];
        for (int c = 0; c < C; ++c) {
          const size_t xoff = (static_cast<size_t>(nn) * C + c) * H * W;
          const size_t koff = (static_cast<size_t>(o) * C + c) * kh * kw;
          for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
              const double kv = K.data[koff + static_cast<size_t>(ki) * kw + kj];
              const int oi_lo = std::max(0, pad - ki), oi_hi = std::min(OH, H + pad - ki);
              const int oj_lo = std::max(0, pad - kj), oj_hi = std::min(OW, W + pad - kj);
              const int run = oj_hi - oj_lo;
              double acc = 0.0;
              for (int oi = oi_lo; oi < oi_hi; ++oi) {
                const double* __restrict gr = gp + static_cast<size_t>(oi) * OW + oj_lo;
                const size_t xrow = xoff + static_cast<size_t>(oi + ki - pad) * W +
                                    static_cast<size_t>(oj_lo + kj - pad);
                if (gx) {
                  double* __restrict dxr = &dX->data[xrow];
                  for (int j = 0; j < run; ++j) dxr[j] += kv * gr[j];
                }
                if (gk) {
                  const double* __restrict xr = &X.data[xrow];
                  for (int j = 0; j < run; ++j) acc += gr[j] * xr[j];
                }
              }
              if (gk) dK->data[koff + static_cast<size_t>(ki) * kw + kj] += acc;
            }
        }
      }
  };
  return id;
}

Tape::NodeId Tape::add_bias(NodeId x, NodeId b) {
  const Tensor& X = value(x);
  const Tensor& B = value(b);
  if (B.shape.size() != 1) throw Error("add_bias: bias must be rank-1, got " + shape_str(B.shape));
  Tensor Y = X;
  if (X.shape.size() == 2 && X.shape[1] == B.shape[0]) {
    const int n = X.shape[0], f = X.shape[1];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < f; ++j) Y.data[static_cast<size_t>(i) * f + j] += B.data[static_cast<size_t>(j)];
  } else if (X.shape.size() == 4 && X.shape[1] == B.shape[0]) {
    const int N = X.shape[0], C = X.shape[1], HW = X.shape[2] * X.shape[3];
    for (int nn = 0; nn < N; ++nn)
      for (int c = 0; c < C; ++c)
        for (int p = 0; p < HW; ++p)
          Y.data[(static_cast<size_t>(nn) * C + c) * HW + p] += B.data[static_cast<size_t>(c)];
  } else {
    throw Error("add_bias: incompatible shapes " + shape_str(X.shape) + " + " + shape_str(B.shape));
  }
  Y.check_finite("add_bias");
  bool rg = needs_grad(x) || needs_grad(b);
  NodeId id = push(std::move(Y), rg, {});
  nodes_.back().back = [x, b, id](Tape& t) {
    const Tensor& dY = t.grad(id);
    if (t.needs_grad(x)) {
      Tensor& dX = t.grad_mut(x);
      for (size_t i = 0; i < dY.data.size(); ++i) dX.data[i] += dY.data[i];
    }
    if (t.needs_grad(b)) {
      Tensor& dB = t.grad_mut(b);
      const Tensor& X = t.value(x);
      if (X.shape.size() == 2) {
        const int n = X.shape[0], f = X.shape[1];
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < f; ++j) dB.data[static_cast<size_t>(j)] += dY.data[static_cast<size_t>(i) * f + j];
      } else {
        const int N = X.shape[0], C = X.shape[1], HW = X.shape[2] * X.shape[3];
        for (int nn = 0; nn < N; ++nn)
          for (int c = 0; c < C; ++c)
            for (int p = 0; p < HW; ++p)
              dB.data[static_cast<size_t>(c)] += dY.data[(static_cast<size_t>(nn) * C + c) * HW + p];
      }
    }
  };
  return id;
}

Tape::NodeId Tape::relu(NodeId a) {
  Tensor Y = value(a);
  for (double& v : Y.data) v = v > 0.0 ? v : 0.0;
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    const Tensor& X = t.value(a);
    Tensor& dX = t.grad_mut(a);
    // subgradient at exactly 0 is 0
    for (size_t i = 0; i < dY.data.size(); ++i)
      if (X.data[i] > 0.0) dX.data[i] += dY.data[i];
  };
  return id;
}

Tape::NodeId Tape::flatten(NodeId a) {
  const Tensor& X = value(a);
  if (X.shape.empty()) throw Error("flatten: rank-0 input");
  int rest = 1;
  for (size_t i = 1; i < X.shape.size(); ++i) rest *= X.shape[i];
  Tensor Y({X.shape[0], rest}, X.data);
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    Tensor& dX = t.grad_mut(a);
    for (size_t i = 0; i < dY.data.size(); ++i) dX.data[i] += dY.data[i];
  };
  return id;
}

Tape::NodeId Tape::log_softmax(NodeId a) {
  const Tensor& X = value(a);
  if (X.shape.size() != 2) throw Error("log_softmax: expected [n,C], got " + shape_str(X.shape));
  const int n = X.shape[0], C = X.shape[1];
  Tensor Y = Tensor::zeros({n, C});
  for (int i = 0; i < n; ++i) {
    const double* row = &X.data[static_cast<size_t>(i) * C];
    double mx = row[0];
    for (int j = 1; j < C; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (int j = 0; j < C; ++j) s += std::exp(row[j] - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < C; ++j) Y.data[static_cast<size_t>(i) * C + j] = row[j] - lse;
  }
  Y.check_finite("log_softmax");
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id, n, C](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    const Tensor& Y = t.value(id);
    Tensor& dX = t.grad_mut(a);
    for (int i = 0; i < n; ++i) {
      double gsum = 0.0;
      for (int j = 0; j < C; ++j) gsum += dY.data[static_cast<size_t>(i) * C + j];
      for (int j = 0; j < C; ++j) {
        const size_t ij = static_cast<size_t>(i) * C + j;
        dX.data[ij] += dY.data[ij] - std::exp(Y.data[ij]) * gsum;
      }
    }
  };
  return id;
}

Tape::NodeId Tape::exp(NodeId a) {
  Tensor Y = value(a);
  for (double& v : Y.data) v = std::exp(v);
  Y.check_finite("exp");
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    const Tensor& Y = t.value(id);
    Tensor& dX = t.grad_mut(a);
    for (size_t i = 0; i < dY.data.size(); ++i) dX.data[i] += dY.data[i] * Y.data[i];
  };
  return id;
}

Tape::NodeId Tape::log_floor(NodeId a) {
  Tensor Y = value(a);
  for (double& v : Y.data) v = std::log(std::max(v, kProbFloor));
  Y.check_finite("log_floor");
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    const Tensor& X = t.value(a);
    Tensor& dX = t.grad_mut(a);
    for (size_t i = 0; i < dY.data.size(); ++i)
      if (X.data[i] > kProbFloor) dX.data[i] += dY.data[i] / X.data[i];
  };
  return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) throw Error("add: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape));
  Tensor Y = A;
  for (size_t i = 0; i < Y.data.size(); ++i) Y.data[i] += B.data[i];
  Y.check_finite("add");
  NodeId id = push(std::move(Y), needs_grad(a) || needs_grad(b), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    const Tensor& dY = t.grad(id);
    if (t.needs_grad(a)) {
      Tensor& dA = t.grad_mut(a);
      for (size_t i = 0; i < dY.data.size(); ++i) dA.data[i] += dY.data[i];
    }
    if (t.needs_grad(b)) {
      Tensor& dB = t.grad_mut(b);
      for (size_t i = 0; i < dY.data.size(); ++i) dB.data[i] += dY.data[i];
    }
  };
  return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) throw Error("sub: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape));
  Tensor Y = A;
  for (size_t i = 0; i < Y.data.size(); ++i) Y.data[i] -= B.data[i];
  Y.check_finite("sub");
  NodeId id = push(std::move(Y), needs_grad(a) || needs_grad(b), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    const Tensor& dY = t.grad(id);
    if (t.needs_grad(a)) {
      Tensor& dA = t.grad_mut(a);
      for (size_t i = 0; i < dY.data.size(); ++i) dA.data[i] += dY.data[i];
    }
    if (t.needs_grad(b)) {
      Tensor& dB = t.grad_mut(b);
      for (size_t i = 0; i < dY.data.size(); ++i) dB.data[i] -= dY.data[i];
    }
  };
  return id;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (!A.same_shape(B)) throw Error("mul: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape));
  Tensor Y = A;
  for (size_t i = 0; i < Y.data.size(); ++i) Y.data[i] *= B.data[i];
  Y.check_finite("mul");
  NodeId id = push(std::move(Y), needs_grad(a) || needs_grad(b), {});
  nodes_.back().back = [a, b, id](Tape& t) {
    const Tensor& dY = t.grad(id);
    if (t.needs_grad(a)) {
      Tensor& dA = t.grad_mut(a);
      const Tensor& B = t.value(b);
      for (size_t i = 0; i < dY.data.size(); ++i) dA.data[i] += dY.data[i] * B.data[i];
    }
    if (t.needs_grad(b)) {
      Tensor& dB = t.grad_mut(b);
      const Tensor& A = t.value(a);
      for (size_t i = 0; i < dY.data.size(); ++i) dB.data[i] += dY.data[i] * A.data[i];
    }
  };
  return id;
}

Tape::NodeId Tape::affine(NodeId a, double s, double c) {
  Tensor Y = value(a);
  for (double& v : Y.data) v = s * v + c;
  Y.check_finite("affine");
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id, s](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    Tensor& dA = t.grad_mut(a);
    for (size_t i = 0; i < dY.data.size(); ++i) dA.data[i] += s * dY.data[i];
  };
  return id;
}

Tape::NodeId Tape::sum_all(NodeId a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (double v : A.data) s += v;
  Tensor Y = Tensor::scalar(s);
  Y.check_finite("sum_all");
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id](Tape& t) {
    if (!t.needs_grad(a)) return;
    const double g = t.grad(id).data[0];
    Tensor& dA = t.grad_mut(a);
    for (double& v : dA.data) v += g;
  };
  return id;
}

Tape::NodeId Tape::sum_rows(NodeId a) {
  const Tensor& A = value(a);
  if (A.shape.size() != 2) throw Error("sum_rows: expected [n,C], got " + shape_str(A.shape));
  const int n = A.shape[0], C = A.shape[1];
  Tensor Y = Tensor::zeros({n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < C; ++j) Y.data[static_cast<size_t>(i)] += A.data[static_cast<size_t>(i) * C + j];
  Y.check_finite("sum_rows");
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id, n, C](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    Tensor& dA = t.grad_mut(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < C; ++j) dA.data[static_cast<size_t>(i) * C + j] += dY.data[static_cast<size_t>(i)];
  };
  return id;
}

Tape::NodeId Tape::pick(NodeId a, const std::vector<int>& labels) {
  const Tensor& A = value(a);
  if (A.shape.size() != 2) throw Error("pick: expected [n,C], got " + shape_str(A.shape));
  const int n = A.shape[0], C = A.shape[1];
  if (static_cast<int>(labels.size()) != n) throw Error("pick: label count mismatch");
  Tensor Y = Tensor::zeros({n});
  for (int i = 0; i < n; ++i) {
    if (labels[static_cast<size_t>(i)] < 0 || labels[static_cast<size_t>(i)] >= C)
      throw Error("pick: label " + std::to_string(labels[static_cast<size_t>(i)]) +
                  " out of range for " + std::to_string(C) + " classes");
    Y.data[static_cast<size_t>(i)] = A.data[static_cast<size_t>(i) * C + labels[static_cast<size_t>(i)]];
  }
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id, labels, C](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    Tensor& dA = t.grad_mut(a);
    for (size_t i = 0; i < labels.size(); ++i)
      dA.data[i * C + static_cast<size_t>(labels[i])] += dY.data[i];
  };
  return id;
}

Tape::NodeId Tape::max_off_label(NodeId a, const std::vector<int>& labels) {
  const Tensor& A = value(a);
  if (A.shape.size() != 2) throw Error("max_off_label: expected [n,C], got " + shape_str(A.shape));
  const int n = A.shape[0], C = A.shape[1];
  if (C < 2) throw Error("max_off_label: needs >= 2 classes");
  if (static_cast<int>(labels.size()) != n) throw Error("max_off_label: label count mismatch");
  Tensor Y = Tensor::zeros({n});
  std::vector<int> argmax(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double bv = 0.0;
    for (int j = 0; j < C; ++j) {
      if (j == labels[static_cast<size_t>(i)]) continue;
      const double v = A.data[static_cast<size_t>(i) * C + j];
      if (best < 0 || v > bv) {
        best = j;
        bv = v;
      }
    }
    argmax[static_cast<size_t>(i)] = best;
    Y.data[static_cast<size_t>(i)] = bv;
  }
  NodeId id = push(std::move(Y), needs_grad(a), {});
  nodes_.back().back = [a, id, argmax, C](Tape& t) {
    if (!t.needs_grad(a)) return;
    const Tensor& dY = t.grad(id);
    Tensor& dA = t.grad_mut(a);
    for (size_t i = 0; i < argmax.size(); ++i)
      dA.data[i * C + static_cast<size_t>(argmax[i])] += dY.data[i];
  };
  return id;
}

void Tape::backward(NodeId root) {
  const Tensor& r = value(root);
  if (r.numel() != 1) throw Error("backward: root must be scalar, got " + shape_str(r.shape));
  grad_mut(root).data[0] = 1.0;
  for (int i = root; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.back && n.requires_grad) n.back(*this);
  }
}

double finite_difference_check(const std::function<double(const Tensor&)>& f,
                               const Tensor& at, const Tensor& analytic_grad,
                               double h) {
  if (h <= 0.0) throw Error("finite_difference_check: h must be positive");
  if (!at.same_shape(analytic_grad))
    throw Error("finite_difference_check: gradient shape mismatch");
  Tensor x = at;
  double max_err = 0.0;
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    const double fp = f(x);
    x.data[i] = orig - h;
    const double fm = f(x);
    x.data[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw Error("finite_difference_check: non-finite function value");
    const double num = (fp - fm) / (2.0 * h);
    const double ana = analytic_grad.data[i];
    const double err = std::fabs(ana - num) / std::max(1.0, std::fabs(ana));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace awplab
