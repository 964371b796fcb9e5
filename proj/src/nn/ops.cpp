/**
 * Copyright (c) histoens Contributors. See CONTRIBUTORS file.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "histoens/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "histoens/error.hpp"
#include "histoens/kernels.hpp"

namespace histoens::nn {

namespace {

void require_rank4(const Var &x, const char *op) {
  if (x.value().rank() != 4) {
    throw ValidationError(std::string(op) + ": expected (N,C,H,W) input, got " +
                          x.value().shape_string());
  }
}

// Accumulates `src` into parent i's grad when that parent is trainable.
template <typename F> void with_parent_grad(Node &self, std::size_t i, F &&f) {
  Node &p = *self.parents[i];
  if (p.requires_grad) {
    f(p.grad_buffer());
  }
}

struct PatternTrace {
  bool open = false;
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  void mix(std::uint64_t v) { hash = (hash ^ v) * 0x100000001b3ULL; }
};
thread_local PatternTrace g_trace;

} // namespace

void begin_pattern_trace() { g_trace = PatternTrace{true}; }

std::uint64_t end_pattern_trace() {
  g_trace.open = false;
  return g_trace.hash;
}

Var conv2d(const Var &x, const Var &weight, const Var &bias) {
  require_rank4(x, "conv2d");
  const auto &ws = weight.shape();
  require(ws.size() == 4 && ws[2] == ws[3] && ws[2] % 2 == 1, "conv2d: weight must be (Cout,Cin,k,k), k odd");
  if (ws[1] != x.value().dim(1)) {
    throw ValidationError("conv2d: input has " + std::to_string(x.value().dim(1)) +
                          " channels, layer expects " + std::to_string(ws[1]));
  }
  require(bias.value().size() == static_cast<std::size_t>(ws[0]), "conv2d: bias length mismatch");
  kernels::ConvShape s;
  s.batch = x.value().dim(0);
  s.in_channels = ws[1];
  s.out_channels = ws[0];
  s.height = x.value().dim(2);
  s.width = x.value().dim(3);
  s.kernel = ws[2];

  Tensor y({s.batch, s.out_channels, s.height, s.width});
  kernels::conv2d_forward(s, x.value().data(), weight.value().data(), bias.value().data(), y.data());
  return make_result(std::move(y), {x, weight, bias}, [s](Node &self) {
    const Tensor &dy = self.grad;
    const Tensor &xv = self.parents[0]->value;
    const Tensor &wv = self.parents[1]->value;
    with_parent_grad(self, 0, [&](Tensor &dx) {
      std::vector<float> tmp(dx.size());
      kernels::conv2d_backward_input(s, dy.data(), wv.data(), tmp);
      for (std::size_t i = 0; i < tmp.size(); ++i)
        dx[i] += tmp[i];
    });
    Node &wn = *self.parents[1];
    Node &bn = *self.parents[2];
    if (wn.requires_grad || bn.requires_grad) {
      std::vector<float> dw(wn.value.size(), 0.0f), db(bn.value.size(), 0.0f);
      kernels::conv2d_backward_params(s, xv.data(), dy.data(), dw, db);
      if (wn.requires_grad) {
        Tensor &g = wn.grad_buffer();
        for (std::size_t i = 0; i < dw.size(); ++i)
          g[i] += dw[i];
      }
      if (bn.requires_grad) {
        Tensor &g = bn.grad_buffer();
        for (std::size_t i = 0; i < db.size(); ++i)
          g[i] += db[i];
      }
    }
  });
}

Var relu(const Var &x) {
  Tensor y(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < in.size(); ++i)
    y[i] = in[i] > 0.0f ? in[i] : 0.0f;
  if (g_trace.open)
    for (float v : in)
      g_trace.mix(v > 0.0f ? 1 : 0);
  return make_result(std::move(y), {x}, [](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &dx) {
      const Tensor &xv = self.parents[0]->value;
      for (std::size_t i = 0; i < dx.size(); ++i)
        if (xv[i] > 0.0f)
          dx[i] += self.grad[i];
    });
  });
}

Var sigmoid(const Var &x) {
  Tensor y(x.shape());
  const auto in = x.value().data();
  for (std::size_t i = 0; i < in.size(); ++i)
    y[i] = 1.0f / (1.0f + std::exp(-in[i]));
  return make_result(std::move(y), {x}, [](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &dx) {
      for (std::size_t i = 0; i < dx.size(); ++i) {
        const float s = self.value[i];
        dx[i] += self.grad[i] * s * (1.0f - s);
      }
    });
  });
}

namespace {

template <bool IsMax> Var pool2(const Var &x) {
  require_rank4(x, IsMax ? "maxpool2" : "avgpool2");
  const int N = x.value().dim(0), C = x.value().dim(1), H = x.value().dim(2), W = x.value().dim(3);
  const int oh = H / 2, ow = W / 2;
  require(oh >= 1 && ow >= 1, "pool2: input smaller than 2x2");
  Tensor y({N, C, oh, ow});
  std::vector<int> argmax;
  if constexpr (IsMax) {
    argmax.resize(y.size());
  }
  const Tensor &xv = x.value();
  std::size_t o = 0;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int r = 0; r < oh; ++r)
        for (int q = 0; q < ow; ++q, ++o) {
          if constexpr (IsMax) {
            float best = xv.at(n, c, 2 * r, 2 * q);
            int arg = 0;
            for (int k = 1; k < 4; ++k) {
              const float v = xv.at(n, c, 2 * r + k / 2, 2 * q + k % 2);
              if (v > best) {
                best = v;
                arg = k;
              }
            }
            y[o] = best;
            argmax[o] = arg;
            if (g_trace.open)
              g_trace.mix(static_cast<std::uint64_t>(arg));
          } else {
            y[o] = 0.25f * (xv.at(n, c, 2 * r, 2 * q) + xv.at(n, c, 2 * r, 2 * q + 1) +
                            xv.at(n, c, 2 * r + 1, 2 * q) + xv.at(n, c, 2 * r + 1, 2 * q + 1));
          }
        }
  return make_result(std::move(y), {x}, [argmax = std::move(argmax), N, C, oh, ow](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &dx) {
      std::size_t o = 0;
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < oh; ++r)
            for (int q = 0; q < ow; ++q, ++o) {
              const float g = self.grad[o];
              if constexpr (IsMax) {
                dx.at(n, c, 2 * r + argmax[o] / 2, 2 * q + argmax[o] % 2) += g;
              } else {
                for (int k = 0; k < 4; ++k)
                  dx.at(n, c, 2 * r + k / 2, 2 * q + k % 2) += 0.25f * g;
              }
            }
    });
  });
}

} // namespace

Var maxpool2(const Var &x) { return pool2<true>(x); }
Var avgpool2(const Var &x) { return pool2<false>(x); }

Var upsample2(const Var &x) {
  require_rank4(x, "upsample2");
  const int N = x.value().dim(0), C = x.value().dim(1), H = x.value().dim(2), W = x.value().dim(3);
  Tensor y({N, C, 2 * H, 2 * W});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int r = 0; r < 2 * H; ++r)
        for (int q = 0; q < 2 * W; ++q)
          y.at(n, c, r, q) = x.value().at(n, c, r / 2, q / 2);
  return make_result(std::move(y), {x}, [N, C, H, W](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &dx) {
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
          for (int r = 0; r < 2 * H; ++r)
            for (int q = 0; q < 2 * W; ++q)
              dx.at(n, c, r / 2, q / 2) += self.grad.at(n, c, r, q);
    });
  });
}

Var concat_channels(const Var &a, const Var &b) {
  require_rank4(a, "concat");
  require_rank4(b, "concat");
  const auto &sa = a.shape();
  const auto &sb = b.shape();
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    throw ValidationError("concat: incompatible shapes " + shape_string(sa) + " and " + shape_string(sb));
  }
  const int N = sa[0], Ca = sa[1], Cb = sb[1];
  const std::size_t plane = static_cast<std::size_t>(sa[2]) * sa[3];
  Tensor y({N, Ca + Cb, sa[2], sa[3]});
  for (int n = 0; n < N; ++n) {
    std::copy_n(a.value().data().begin() + static_cast<std::ptrdiff_t>(n * Ca * plane), Ca * plane,
                y.data().begin() + static_cast<std::ptrdiff_t>(n * (Ca + Cb) * plane));
    std::copy_n(b.value().data().begin() + static_cast<std::ptrdiff_t>(n * Cb * plane), Cb * plane,
                y.data().begin() + static_cast<std::ptrdiff_t>((n * (Ca + Cb) + Ca) * plane));
  }
  return make_result(std::move(y), {a, b}, [N, Ca, Cb, plane](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &da) {
      for (int n = 0; n < N; ++n)
        for (std::size_t i = 0; i < Ca * plane; ++i)
          da[n * Ca * plane + i] += self.grad[n * (Ca + Cb) * plane + i];
    });
    with_parent_grad(self, 1, [&](Tensor &db) {
      for (int n = 0; n < N; ++n)
        for (std::size_t i = 0; i < Cb * plane; ++i)
          db[n * Cb * plane + i] += self.grad[(n * (Ca + Cb) + Ca) * plane + i];
    });
  });
}

int spp_features(int channels, int levels) {
  int cells = 0;
  for (int l = 1; l <= levels; ++l)
    cells += l * l;
  return channels * cells;
}

Var spp(const Var &x, int levels) {
  require_rank4(x, "spp");
  require(levels >= 1, "spp: levels must be >= 1");
  const int N = x.value().dim(0), C = x.value().dim(1), H = x.value().dim(2), W = x.value().dim(3);
  if (H < levels || W < levels) {
    throw ValidationError("spp: input " + x.value().shape_string() + " smaller than pyramid depth " +
                          std::to_string(levels));
  }
  const int F = spp_features(C, levels);
  Tensor y({N, F});
  auto cell_bounds = [](int extent, int l, int i) {
    return std::pair<int, int>{i * extent / l, (i + 1) * extent / l};
  };
  for (int n = 0; n < N; ++n) {
    int f = 0;
    for (int l = 1; l <= levels; ++l)
      for (int c = 0; c < C; ++c)
        for (int i = 0; i < l; ++i)
          for (int j = 0; j < l; ++j, ++f) {
            const auto [r0, r1] = cell_bounds(H, l, i);
            const auto [c0, c1] = cell_bounds(W, l, j);
            double acc = 0.0;
            for (int r = r0; r < r1; ++r)
              for (int q = c0; q < c1; ++q)
                acc += x.value().at(n, c, r, q);
            y[static_cast<std::size_t>(n) * F + f] = static_cast<float>(acc / ((r1 - r0) * (c1 - c0)));
          }
  }
  return make_result(std::move(y), {x}, [=](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &dx) {
      for (int n = 0; n < N; ++n) {
        int f = 0;
        for (int l = 1; l <= levels; ++l)
          for (int c = 0; c < C; ++c)
            for (int i = 0; i < l; ++i)
              for (int j = 0; j < l; ++j, ++f) {
                const auto [r0, r1] = cell_bounds(H, l, i);
                const auto [c0, c1] = cell_bounds(W, l, j);
                const float g = self.grad[static_cast<std::size_t>(n) * F + f] /
                                static_cast<float>((r1 - r0) * (c1 - c0));
                for (int r = r0; r < r1; ++r)
                  for (int q = c0; q < c1; ++q)
                    dx.at(n, c, r, q) += g;
              }
      }
    });
  });
}

Var dense(const Var &x, const Var &weight, const Var &bias) {
  require(x.value().rank() == 2, "dense: expected (N,F) input");
  const int N = x.value().dim(0), F = x.value().dim(1);
  require(weight.value().rank() == 2 && weight.value().dim(1) == F,
          "dense: input has " + std::to_string(F) + " features, weight is " + weight.value().shape_string());
  const int O = weight.value().dim(0);
  require(bias.value().size() == static_cast<std::size_t>(O), "dense: bias length mismatch");
  Tensor y({N, O});
  for (int n = 0; n < N; ++n)
    for (int o = 0; o < O; ++o) {
      float acc = bias.value()[o];
      for (int f = 0; f < F; ++f)
        acc += weight.value()[static_cast<std::size_t>(o) * F + f] * x.value()[static_cast<std::size_t>(n) * F + f];
      y[static_cast<std::size_t>(n) * O + o] = acc;
    }
  return make_result(std::move(y), {x, weight, bias}, [N, F, O](Node &self) {
    const Tensor &xv = self.parents[0]->value;
    const Tensor &wv = self.parents[1]->value;
    with_parent_grad(self, 0, [&](Tensor &dx) {
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
          for (int f = 0; f < F; ++f)
            dx[static_cast<std::size_t>(n) * F + f] +=
                self.grad[static_cast<std::size_t>(n) * O + o] * wv[static_cast<std::size_t>(o) * F + f];
    });
    with_parent_grad(self, 1, [&](Tensor &dw) {
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
          for (int f = 0; f < F; ++f)
            dw[static_cast<std::size_t>(o) * F + f] +=
                self.grad[static_cast<std::size_t>(n) * O + o] * xv[static_cast<std::size_t>(n) * F + f];
    });
    with_parent_grad(self, 2, [&](Tensor &db) {
      for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o)
          db[o] += self.grad[static_cast<std::size_t>(n) * O + o];
    });
  });
}

Var dot(const Var &x, const Tensor &coeffs) {
  require(coeffs.size() == x.value().size(), "dot: coefficient count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    acc += static_cast<double>(coeffs[i]) * x.value()[i];
  Tensor y({1}, static_cast<float>(acc));
  return make_result(std::move(y), {x}, [coeffs](Node &self) {
    with_parent_grad(self, 0, [&](Tensor &dx) {
      const float g = self.grad[0];
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx[i] += g * coeffs[i];
    });
  });
}

Tensor softmax_channels(const Tensor &logits) {
  require(logits.rank() == 2 || logits.rank() == 4, "softmax: expected (N,K) or (N,K,H,W)");
  const int N = logits.dim(0), K = logits.dim(1);
  const std::size_t plane = logits.rank() == 4 ? static_cast<std::size_t>(logits.dim(2)) * logits.dim(3) : 1;
  Tensor out(logits.shape());
  for (int n = 0; n < N; ++n)
    for (std::size_t p = 0; p < plane; ++p) {
      auto idx = [&](int k) { return (static_cast<std::size_t>(n) * K + k) * plane + p; };
      float mx = logits[idx(0)];
      for (int k = 1; k < K; ++k)
        mx = std::max(mx, logits[idx(k)]);
      double sum = 0.0;
      for (int k = 0; k < K; ++k)
        sum += std::exp(static_cast<double>(logits[idx(k)] - mx));
      for (int k = 0; k < K; ++k)
        out[idx(k)] = static_cast<float>(std::exp(static_cast<double>(logits[idx(k)] - mx)) / sum);
    }
  return out;
}

} // namespace histoens::nn
