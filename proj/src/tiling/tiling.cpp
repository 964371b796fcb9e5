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

#include "histoens/tiling.hpp"

#include <algorithm>
#include <string>

namespace histoens {

std::vector<double> channel_means(const ImageF &img) {
  require(!img.empty(), "mean_subtract: empty image");
  const int ch = img.channels();
  std::vector<double> sums(static_cast<std::size_t>(ch), 0.0);
  const auto s = img.samples();
  for (std::size_t i = 0; i < s.size(); ++i) {
    sums[i % static_cast<std::size_t>(ch)] += s[i];
  }
  for (double &v : sums) {
    v /= static_cast<double>(img.pixel_count());
  }
  return sums;
}

ImageF subtract_means(const ImageF &img, const std::vector<double> &means) {
  require(static_cast<int>(means.size()) == img.channels(), "subtract_means: channel count mismatch");
  std::vector<float> out(img.samples().begin(), img.samples().end());
  const std::size_t ch = means.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(out[i] - means[i % ch]);
  }
  return ImageF(img.height(), img.width(), img.channels(), std::move(out));
}

template <typename T> ImageF mean_subtract(const BasicImage<T> &img) {
  require(!img.empty(), "mean_subtract: empty image");
  if constexpr (std::is_same_v<T, float>) {
    return subtract_means(img, channel_means(img));
  } else {
    const ImageF f = to_float(img);
    return subtract_means(f, channel_means(f));
  }
}

template ImageF mean_subtract(const Image8 &);
template ImageF mean_subtract(const ImageF &);

template <typename T> ImageF downsample(const BasicImage<T> &img, int factor) {
  require(factor >= 1, "downsample: factor must be >= 1");
  require(!img.empty(), "downsample: empty image");
  const int H = img.height(), W = img.width(), C = img.channels();
  const int oh = (H + factor - 1) / factor, ow = (W + factor - 1) / factor;
  ImageF out(oh, ow, C);
  std::vector<double> acc(static_cast<std::size_t>(C));
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const int r1 = std::min(H, (r + 1) * factor), c1 = std::min(W, (c + 1) * factor);
      for (int rr = r * factor; rr < r1; ++rr) {
        for (int cc = c * factor; cc < c1; ++cc) {
          for (int ch = 0; ch < C; ++ch) {
            acc[static_cast<std::size_t>(ch)] += img.at(rr, cc, ch);
          }
        }
      }
      const double count = static_cast<double>(r1 - r * factor) * (c1 - c * factor);
      for (int ch = 0; ch < C; ++ch) {
        out.at(r, c, ch) = static_cast<float>(acc[static_cast<std::size_t>(ch)] / count);
      }
    }
  }
  return out;
}

template ImageF downsample(const Image8 &, int);
template ImageF downsample(const ImageF &, int);

std::pair<int, int> downsampled_size(int height, int width, int factor) {
  require(factor >= 1, "downsample: factor must be >= 1");
  return {(height + factor - 1) / factor, (width + factor - 1) / factor};
}

LabelMask downsample_labels(const LabelMask &mask, int factor) {
  require(factor >= 1, "downsample: factor must be >= 1");
  const int H = mask.height(), W = mask.width();
  const int oh = (H + factor - 1) / factor, ow = (W + factor - 1) / factor;
  LabelMask out(oh, ow, 0);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      std::array<long, 4> votes{};
      for (int rr = r * factor; rr < std::min(H, (r + 1) * factor); ++rr) {
        for (int cc = c * factor; cc < std::min(W, (c + 1) * factor); ++cc) {
          ++votes[mask.at(rr, cc)];
        }
      }
      std::uint8_t best = 0;
      for (std::uint8_t k = 1; k < 4; ++k) {
        if (votes[k] >= votes[best]) {
          best = k;
        }
      }
      out.set(r, c, best);
    }
  }
  return out;
}

LabelMask upsample_labels(const LabelMask &mask, int height, int width) {
  require(mask.height() > 0 && mask.width() > 0, "upsample: empty mask");
  LabelMask out(height, width, 0);
  for (int r = 0; r < height; ++r) {
    const int sr = static_cast<int>(static_cast<long>(r) * mask.height() / height);
    for (int c = 0; c < width; ++c) {
      out.set(r, c, mask.at(sr, static_cast<int>(static_cast<long>(c) * mask.width() / width)));
    }
  }
  return out;
}

ProbMap upsample_probmap(const ProbMap &map, int height, int width) {
  require(map.height() > 0 && map.width() > 0, "upsample: empty map");
  ProbMap out(map.classes(), height, width);
  for (int k = 0; k < map.classes(); ++k) {
    for (int r = 0; r < height; ++r) {
      const int sr = static_cast<int>(static_cast<long>(r) * map.height() / height);
      for (int c = 0; c < width; ++c) {
        out.set(k, r, c, map.at(k, sr, static_cast<int>(static_cast<long>(c) * map.width() / width)));
      }
    }
  }
  return out;
}

namespace {

void check_fits(int height, int width, int ph, int pw) {
  require(ph >= 1 && pw >= 1, "patch dimensions must be >= 1");
  if (ph > height || pw > width) {
    throw ValidationError("patch " + std::to_string(ph) + "x" + std::to_string(pw) +
                          " is larger than image " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
}

} // namespace

template <typename T>
BasicImage<T> crop(const BasicImage<T> &img, PatchOrigin o, int patch_h, int patch_w) {
  check_fits(img.height(), img.width(), patch_h, patch_w);
  require(o.row >= 0 && o.col >= 0 && o.row + patch_h <= img.height() && o.col + patch_w <= img.width(),
          "crop: patch extends outside the image");
  const int C = img.channels();
  std::vector<T> out(static_cast<std::size_t>(patch_h) * patch_w * C);
  for (int r = 0; r < patch_h; ++r) {
    const T *src = &img.at(o.row + r, o.col, 0);
    std::copy(src, src + static_cast<std::size_t>(patch_w) * C,
              out.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * patch_w * C));
  }
  return BasicImage<T>(patch_h, patch_w, C, std::move(out));
}

template Image8 crop(const Image8 &, PatchOrigin, int, int);
template ImageF crop(const ImageF &, PatchOrigin, int, int);

LabelMask crop(const LabelMask &mask, PatchOrigin o, int patch_h, int patch_w) {
  check_fits(mask.height(), mask.width(), patch_h, patch_w);
  require(o.row >= 0 && o.col >= 0 && o.row + patch_h <= mask.height() &&
              o.col + patch_w <= mask.width(),
          "crop: patch extends outside the mask");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(patch_h) * patch_w);
  for (int r = 0; r < patch_h; ++r) {
    for (int c = 0; c < patch_w; ++c) {
      out[static_cast<std::size_t>(r) * patch_w + c] = mask.at(o.row + r, o.col + c);
    }
  }
  return LabelMask(patch_h, patch_w, std::move(out));
}

PatchOrigin random_origin(int height, int width, const PatchSpec &spec, Rng &rng) {
  check_fits(height, width, spec.patch_h, spec.patch_w);
  PatchOrigin o;
  o.row = static_cast<int>(rng.uniform_int(0, height - spec.patch_h));
  o.col = static_cast<int>(rng.uniform_int(0, width - spec.patch_w));
  return o;
}

template <typename T>
RandomPatch<T> random_patch(const BasicImage<T> &img, const PatchSpec &spec, Rng &rng) {
  const PatchOrigin o = random_origin(img.height(), img.width(), spec, rng);
  return {crop(img, o, spec.patch_h, spec.patch_w), o};
}

template RandomPatch<std::uint8_t> random_patch(const Image8 &, const PatchSpec &, Rng &);
template RandomPatch<float> random_patch(const ImageF &, const PatchSpec &, Rng &);

PatchGrid grid_patches(int height, int width, const PatchSpec &spec) {
  check_fits(height, width, spec.patch_h, spec.patch_w);
  require(spec.stride >= 1, "grid stride must be >= 1");
  PatchGrid grid;
  grid.spec = spec;
  grid.rows = (height - spec.patch_h) / spec.stride + 1;
  grid.cols = (width - spec.patch_w) / spec.stride + 1;
  grid.origins.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      grid.origins.push_back({i * spec.stride, j * spec.stride});
    }
  }
  return grid;
}

ImageF preprocess_patch(const ImageF &img, PatchOrigin origin, const PatchSpec &spec, MeanScope scope,
                        const std::vector<double> &whole_means) {
  const ImageF patch = crop(img, origin, spec.patch_h, spec.patch_w);
  if (scope == MeanScope::PerPatch) {
    return mean_subtract(patch);
  }
  return subtract_means(patch, whole_means);
}

} // namespace histoens
