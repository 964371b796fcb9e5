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

#include "histoens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "histoens/kernels.hpp"

namespace histoens {

void SynthSpec::validate() const {
  require(height > 0 && width > 0, "synth: zero-area slide");
  double sum = 0.0;
  for (double p : priors) {
    require(p >= 0.0 && std::isfinite(p), "synth: class priors must be non-negative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-9, "synth: class priors must sum to 1");
  require(min_blobs >= 1 && max_blobs >= min_blobs, "synth: bad blob-count range");
  require(noise_level >= 0.0 && std::isfinite(noise_level), "synth: noise level must be >= 0");
}

std::array<std::array<double, 3>, 4> class_colors() {
  return {{{232.0, 188.0, 212.0},
           {204.0, 150.0, 196.0},
           {176.0, 112.0, 178.0},
           {128.0, 72.0, 156.0}}};
}

namespace {

// Zero-mean, unit-variance Gaussian noise smoothed at scale `sigma`.
std::vector<float> smooth_noise(int h, int w, double sigma, Rng &rng) {
  std::vector<float> white(static_cast<std::size_t>(h) * w);
  for (float &v : white) {
    v = static_cast<float>(rng.normal());
  }
  const int size = std::max(3, 2 * static_cast<int>(std::ceil(2.5 * sigma)) + 1);
  const auto taps = kernels::gaussian_taps(size, sigma);
  std::vector<float> out(white.size());
  kernels::separable_filter_renorm(white, h, w, taps, out);
  double mean = 0.0, sq = 0.0;
  for (float v : out) {
    mean += v;
    sq += static_cast<double>(v) * v;
  }
  mean /= static_cast<double>(out.size());
  const double sd = std::sqrt(std::max(1e-12, sq / static_cast<double>(out.size()) - mean * mean));
  for (float &v : out) {
    v = static_cast<float>((v - mean) / sd);
  }
  return out;
}

struct Window {
  int r0, c0, h, w;
};

// Tries to carve one blob of roughly `area` pixels into free space. Returns
// false when this attempt's placement collides with existing blobs.
bool try_place_blob(LabelMask &mask, std::uint8_t label, long area, Rng &rng) {
  const int H = mask.height(), W = mask.width();
  const double radius = std::sqrt(static_cast<double>(area) / 3.14159265358979);
  const int side = static_cast<int>(std::ceil(radius * 3.0)) + 4;
  Window win{0, 0, std::min(side, H), std::min(side, W)};
  win.r0 = static_cast<int>(rng.uniform_int(0, H - win.h));
  win.c0 = static_cast<int>(rng.uniform_int(0, W - win.w));
  const std::size_t n = static_cast<std::size_t>(win.h) * win.w;
  if (static_cast<std::size_t>(area) > n) {
    return false;
  }

  // Free = unlabeled and not 8-adjacent to another blob.
  std::vector<std::uint8_t> free_px(n, 0);
  for (int r = 0; r < win.h; ++r) {
    for (int c = 0; c < win.w; ++c) {
      bool ok = true;
      for (int dr = -1; dr <= 1 && ok; ++dr) {
        for (int dc = -1; dc <= 1 && ok; ++dc) {
          const int rr = win.r0 + r + dr, cc = win.c0 + c + dc;
          if (rr >= 0 && rr < H && cc >= 0 && cc < W && mask.at(rr, cc) != 0) {
            ok = false;
          }
        }
      }
      free_px[static_cast<std::size_t>(r) * win.w + c] = ok ? 1 : 0;
    }
  }

  const auto noise = smooth_noise(win.h, win.w, std::max(1.0, radius / 3.0), rng);
  const double cy = (win.h - 1) / 2.0, cx = (win.w - 1) / 2.0;
  std::vector<float> field(n);
  std::vector<float> candidates;
  candidates.reserve(n);
  for (int r = 0; r < win.h; ++r) {
    for (int c = 0; c < win.w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * win.w + c;
      const double d = std::hypot(r - cy, c - cx) / radius;
      field[i] = static_cast<float>(-d + 0.35 * noise[i]);
      if (free_px[i]) {
        candidates.push_back(field[i]);
      }
    }
  }
  if (candidates.size() < static_cast<std::size_t>(area)) {
    return false;
  }
  std::nth_element(candidates.begin(), candidates.begin() + (area - 1), candidates.end(),
                   std::greater<>());
  const float cut = candidates[static_cast<std::size_t>(area - 1)];

  std::vector<std::uint8_t> sel(n, 0);
  std::size_t seed = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (free_px[i] && field[i] >= cut) {
      sel[i] = 1;
      if (seed == n || field[i] > field[seed]) {
        seed = i;
      }
    }
  }

  // Keep the 4-connected component containing the field maximum.
  std::vector<std::uint8_t> blob(n, 0);
  std::queue<std::size_t> q;
  blob[seed] = 1;
  q.push(seed);
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    const int r = static_cast<int>(i) / win.w, c = static_cast<int>(i) % win.w;
    const int nr[4] = {r - 1, r + 1, r, r};
    const int nc[4] = {c, c, c - 1, c + 1};
    for (int k = 0; k < 4; ++k) {
      if (nr[k] < 0 || nr[k] >= win.h || nc[k] < 0 || nc[k] >= win.w) {
        continue;
      }
      const std::size_t j = static_cast<std::size_t>(nr[k]) * win.w + nc[k];
      if (sel[j] && !blob[j]) {
        blob[j] = 1;
        q.push(j);
      }
    }
  }

  // Fill holes: background not 4-reachable from the window border. A
  // border pixel of the window is treated as outside.
  std::vector<std::uint8_t> outside(n, 0);
  for (int r = 0; r < win.h; ++r) {
    for (int c = 0; c < win.w; ++c) {
      if (r != 0 && c != 0 && r != win.h - 1 && c != win.w - 1) {
        continue;
      }
      const std::size_t i = static_cast<std::size_t>(r) * win.w + c;
      if (!blob[i] && !outside[i]) {
        outside[i] = 1;
        q.push(i);
      }
    }
  }
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    const int r = static_cast<int>(i) / win.w, c = static_cast<int>(i) % win.w;
    const int nr[4] = {r - 1, r + 1, r, r};
    const int nc[4] = {c, c, c - 1, c + 1};
    for (int k = 0; k < 4; ++k) {
      if (nr[k] < 0 || nr[k] >= win.h || nc[k] < 0 || nc[k] >= win.w) {
        continue;
      }
      const std::size_t j = static_cast<std::size_t>(nr[k]) * win.w + nc[k];
      if (!blob[j] && !outside[j]) {
        outside[j] = 1;
        q.push(j);
      }
    }
  }
  long kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!outside[i]) {
      if (!free_px[i]) {
        return false; // would swallow another blob
      }
      ++kept;
    }
  }
  if (kept < (area * 7) / 10) {
    return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!outside[i]) {
      mask.set(win.r0 + static_cast<int>(i) / win.w, win.c0 + static_cast<int>(i) % win.w, label);
    }
  }
  return true;
}

} // namespace

SynthSlide synth_slide(const SynthSpec &spec, Rng &rng) {
  spec.validate();
  const int H = spec.height, W = spec.width;
  const double total = static_cast<double>(H) * W;
  LabelMask mask(H, W, 0);

  // Largest abnormal classes first so big blobs find room.
  std::array<int, 3> order = {1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return spec.priors[a] > spec.priors[b]; });
  for (int cls : order) {
    const long target = std::lround(spec.priors[cls] * total);
    if (target <= 0) {
      continue;
    }
    long blobs = rng.uniform_int(spec.min_blobs, spec.max_blobs);
    blobs = std::max(1L, std::min(blobs, target / 16));
    for (long b = 0; b < blobs; ++b) {
      const long area = target / blobs + (b < target % blobs ? 1 : 0);
      for (int attempt = 0; attempt < 200; ++attempt) {
        if (try_place_blob(mask, static_cast<std::uint8_t>(cls), area, rng)) {
          break;
        }
      }
    }
  }

  const auto colors = class_colors();
  const auto texture = smooth_noise(H, W, 3.0, rng);
  const double texture_amp[4] = {8.0, 12.0, 14.0, 16.0};
  Image8 image(H, W, 3);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      const int cls = mask.at(r, c);
      const double t = texture_amp[cls] * texture[static_cast<std::size_t>(r) * W + c];
      for (int ch = 0; ch < 3; ++ch) {
        const double v = colors[static_cast<std::size_t>(cls)][static_cast<std::size_t>(ch)] + t +
                         spec.noise_level * rng.normal();
        image.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return {std::move(image), std::move(mask)};
}

} // namespace histoens
