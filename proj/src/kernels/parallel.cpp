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

#include "histoens/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace histoens::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

void conv2d_forward(const ConvShape &s, std::span<const float> x, std::span<const float> weights,
                    std::span<const float> bias, std::span<float> y) {
  const int pad = s.kernel / 2;
  const int H = s.height, W = s.width, K = s.kernel;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const int jobs = s.batch * s.out_channels;
#pragma omp parallel
  {
  // Per-output sums are kept in double and rounded once.
  std::vector<double> acc(plane);
#pragma omp for schedule(static)
  for (int job = 0; job < jobs; ++job) {
    const int n = job / s.out_channels, oc = job % s.out_channels;
    double *out = acc.data();
    std::fill(out, out + plane, static_cast<double>(bias[oc]));
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const float *in = x.data() + (static_cast<std::size_t>(n) * s.in_channels + ic) * plane;
      const float *wk = weights.data() + (static_cast<std::size_t>(oc) * s.in_channels + ic) * K * K;
      for (int ky = 0; ky < K; ++ky) {
        const int r0 = std::max(0, pad - ky), r1 = std::min(H, H + pad - ky);
        for (int kx = 0; kx < K; ++kx) {
          const double wv = wk[ky * K + kx];
          const int c0 = std::max(0, pad - kx), c1 = std::min(W, W + pad - kx);
          const int dr = ky - pad, dc = kx - pad;
          for (int r = r0; r < r1; ++r) {
            double *yo = out + static_cast<std::size_t>(r) * W;
            const float *xi = in + static_cast<std::size_t>(r + dr) * W + dc;
#pragma omp simd
            for (int c = c0; c < c1; ++c)
              yo[c] += wv * xi[c];
          }
        }
      }
    }
    float *dst = y.data() + static_cast<std::size_t>(job) * plane;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = static_cast<float>(out[i]);
  }
  }
}

void conv2d_backward_input(const ConvShape &s, std::span<const float> dy,
                           std::span<const float> weights, std::span<float> dx) {
  const int pad = s.kernel / 2;
  const int H = s.height, W = s.width, K = s.kernel;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const int jobs = s.batch * s.in_channels;
#pragma omp parallel
  {
  std::vector<double> acc(plane);
#pragma omp for schedule(static)
  for (int job = 0; job < jobs; ++job) {
    const int n = job / s.in_channels, ic = job % s.in_channels;
    double *out = acc.data();
    std::fill(out, out + plane, 0.0);
    for (int oc = 0; oc < s.out_channels; ++oc) {
      const float *g = dy.data() + (static_cast<std::size_t>(n) * s.out_channels + oc) * plane;
      const float *wk = weights.data() + (static_cast<std::size_t>(oc) * s.in_channels + ic) * K * K;
      for (int ky = 0; ky < K; ++ky) {
        // dx[r] += w * dy[r - ky + pad]
        const int dr = pad - ky;
        const int r0 = std::max(0, -dr), r1 = std::min(H, H - dr);
        for (int kx = 0; kx < K; ++kx) {
          const double wv = wk[ky * K + kx];
          const int dc = pad - kx;
          const int c0 = std::max(0, -dc), c1 = std::min(W, W - dc);
          for (int r = r0; r < r1; ++r) {
            double *o = out + static_cast<std::size_t>(r) * W;
            const float *gi = g + static_cast<std::size_t>(r + dr) * W + dc;
#pragma omp simd
            for (int c = c0; c < c1; ++c)
              o[c] += wv * gi[c];
          }
        }
      }
    }
    float *dst = dx.data() + static_cast<std::size_t>(job) * plane;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = static_cast<float>(out[i]);
  }
  }
}

void conv2d_backward_params(const ConvShape &s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dweights, std::span<float> dbias) {
  const int pad = s.kernel / 2;
  const int H = s.height, W = s.width, K = s.kernel;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < s.out_channels; ++oc) {
    double db = 0.0;
    for (int n = 0; n < s.batch; ++n) {
      const float *g = dy.data() + (static_cast<std::size_t>(n) * s.out_channels + oc) * plane;
      for (int r = 0; r < H; ++r) {
        float row = 0.0f;
#pragma omp simd reduction(+ : row)
        for (int c = 0; c < W; ++c)
          row += g[static_cast<std::size_t>(r) * W + c];
        db += row;
      }
    }
    dbias[oc] += static_cast<float>(db);
    for (int ic = 0; ic < s.in_channels; ++ic) {
      for (int ky = 0; ky < K; ++ky) {
        const int dr = ky - pad;
        const int r0 = std::max(0, -dr), r1 = std::min(H, H - dr);
        for (int kx = 0; kx < K; ++kx) {
          const int dc = kx - pad;
          const int c0 = std::max(0, -dc), c1 = std::min(W, W - dc);
          double acc = 0.0;
          for (int n = 0; n < s.batch; ++n) {
            const float *g = dy.data() + (static_cast<std::size_t>(n) * s.out_channels + oc) * plane;
            const float *in = x.data() + (static_cast<std::size_t>(n) * s.in_channels + ic) * plane;
            for (int r = r0; r < r1; ++r) {
              const float *gr = g + static_cast<std::size_t>(r) * W;
              const float *xr = in + static_cast<std::size_t>(r + dr) * W + dc;
              float row = 0.0f;
#pragma omp simd reduction(+ : row)
              for (int c = c0; c < c1; ++c)
                row += gr[c] * xr[c];
              acc += row;
            }
          }
          dweights[((static_cast<std::size_t>(oc) * s.in_channels + ic) * K + ky) * K + kx] +=
              static_cast<float>(acc);
        }
      }
    }
  }
}

void separable_filter_renorm(std::span<const float> in, int height, int width,
                             std::span<const double> taps, std::span<float> out) {
  const int rad = static_cast<int>(taps.size()) / 2;
  std::vector<double> tmp(static_cast<std::size_t>(height) * width);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const float *row = in.data() + static_cast<std::size_t>(r) * width;
    for (int c = 0; c < width; ++c) {
      double acc = 0.0, norm = 0.0;
      const int j0 = std::max(-rad, -c), j1 = std::min(rad, width - 1 - c);
      for (int j = j0; j <= j1; ++j) {
        acc += taps[j + rad] * row[c + j];
        norm += taps[j + rad];
      }
      tmp[static_cast<std::size_t>(r) * width + c] = acc / norm;
    }
  }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const int j0 = std::max(-rad, -r), j1 = std::min(rad, height - 1 - r);
    double norm = 0.0;
    for (int j = j0; j <= j1; ++j)
      norm += taps[j + rad];
    for (int c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int j = j0; j <= j1; ++j)
        acc += taps[j + rad] * tmp[static_cast<std::size_t>(r + j) * width + c];
      out[static_cast<std::size_t>(r) * width + c] = static_cast<float>(acc / norm);
    }
  }
}

namespace {

// Square window = row window then column window; both clipped to the image.
template <typename Pick>
void morph_separable(std::span<const std::uint8_t> in, int height, int width, int size,
                     std::span<std::uint8_t> out, Pick pick) {
  const int rad = size / 2;
  std::vector<std::uint8_t> tmp(static_cast<std::size_t>(height) * width);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const std::uint8_t *row = in.data() + static_cast<std::size_t>(r) * width;
    for (int c = 0; c < width; ++c) {
      std::uint8_t v = row[c];
      for (int cc = std::max(0, c - rad); cc <= std::min(width - 1, c + rad); ++cc)
        v = pick(v, row[cc]);
      tmp[static_cast<std::size_t>(r) * width + c] = v;
    }
  }
#pragma omp parallel for schedule(static)
  for (int r = 0; r < height; ++r) {
    const int r0 = std::max(0, r - rad), r1 = std::min(height - 1, r + rad);
    for (int c = 0; c < width; ++c) {
      std::uint8_t v = tmp[static_cast<std::size_t>(r) * width + c];
      for (int rr = r0; rr <= r1; ++rr)
        v = pick(v, tmp[static_cast<std::size_t>(rr) * width + c]);
      out[static_cast<std::size_t>(r) * width + c] = v;
    }
  }
}

} // namespace

void dilate_square(std::span<const std::uint8_t> in, int height, int width, int size,
                   std::span<std::uint8_t> out) {
  morph_separable(in, height, width, size, out,
                  [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); });
}

void erode_square(std::span<const std::uint8_t> in, int height, int width, int size,
                  std::span<std::uint8_t> out) {
  morph_separable(in, height, width, size, out,
                  [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); });
}

} // namespace omp
} // namespace histoens::kernels
