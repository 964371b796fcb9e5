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

#include "histoens/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "histoens/kernels.hpp"

namespace histoens {

void PostprocessConfig::validate() const {
  require(blur_kernel >= 1 && blur_kernel % 2 == 1, "blur kernel must be odd and >= 1");
  require(blur_sigma > 0.0 && std::isfinite(blur_sigma), "blur sigma must be > 0");
  require(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
  require(closing_size >= 1 && closing_size % 2 == 1, "closing size must be odd and >= 1");
  require(area_exponent > 0.0 && std::isfinite(area_exponent), "area exponent must be > 0");
}

ProbMap gaussian_blur(const ProbMap &map, int kernel, double sigma) {
  require(map.classes() == 1, "gaussian_blur expects a single-channel map");
  require(kernel >= 1 && kernel % 2 == 1, "blur kernel must be odd and >= 1, got " + std::to_string(kernel));
  require(sigma > 0.0 && std::isfinite(sigma), "blur sigma must be > 0");
  const auto taps = kernels::gaussian_taps(kernel, sigma);
  std::vector<float> out(map.plane_size());
  kernels::separable_filter_renorm(map.values(), map.height(), map.width(), taps, out);
  // A convex combination of values in [0, 1] can only leave the range by
  // rounding.
  for (float &v : out)
    v = std::min(1.0f, std::max(0.0f, v));
  return ProbMap(1, map.height(), map.width(), std::move(out));
}

LabelMask threshold(const ProbMap &map, double t) {
  require(map.classes() == 1, "threshold expects a single-channel map");
  std::vector<std::uint8_t> out(map.plane_size());
  const auto v = map.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = v[i] >= t ? 1 : 0;
  return LabelMask(map.height(), map.width(), std::move(out));
}

LabelMask closing(const LabelMask &mask, int size) {
  require(size >= 1 && size % 2 == 1, "closing size must be odd and >= 1, got " + std::to_string(size));
  require(mask.is_binary(), "closing expects a binary mask");
  std::vector<std::uint8_t> dilated(mask.size()), closed(mask.size());
  kernels::dilate_square(mask.labels(), mask.height(), mask.width(), size, dilated);
  kernels::erode_square(dilated, mask.height(), mask.width(), size, closed);
  return LabelMask(mask.height(), mask.width(), std::move(closed));
}

std::vector<Component> components(const LabelMask &mask) {
  const int H = mask.height(), W = mask.width();
  const auto px = mask.labels();
  std::vector<int> label(px.size(), 0);
  std::vector<Component> out;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < px.size(); ++start) {
    if (px[start] == 0 || label[start] != 0)
      continue;
    Component comp;
    comp.label = static_cast<int>(out.size()) + 1;
    label[start] = comp.label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      comp.pixels.push_back(i);
      const int r = static_cast<int>(i / static_cast<std::size_t>(W));
      const int c = static_cast<int>(i % static_cast<std::size_t>(W));
      const auto visit = [&](int rr, int cc) {
        if (rr < 0 || rr >= H || cc < 0 || cc >= W)
          return;
        const std::size_t j = static_cast<std::size_t>(rr) * W + cc;
        if (px[j] != 0 && label[j] == 0) {
          label[j] = comp.label;
          stack.push_back(j);
        }
      };
      visit(r - 1, c);
      visit(r + 1, c);
      visit(r, c - 1);
      visit(r, c + 1);
    }
    std::sort(comp.pixels.begin(), comp.pixels.end());
    out.push_back(std::move(comp));
  }
  return out;
}

double area_threshold(const std::vector<Component> &comps, double a) {
  require(a > 0.0 && std::isfinite(a), "area exponent must be > 0");
  require(!comps.empty(), "area_threshold: no components");
  double sum = 0.0;
  for (const Component &c : comps)
    sum += std::pow(static_cast<double>(c.area()), a);
  return std::pow(sum / static_cast<double>(comps.size()), 1.0 / a);
}

std::vector<Component> area_filter(const std::vector<Component> &comps, double a) {
  require(a > 0.0 && std::isfinite(a), "area exponent must be > 0");
  if (comps.empty())
    return {};
  // Relative slack so equal areas survive the pow round trip.
  const double cut = area_threshold(comps, a) * (1.0 - 1e-12);
  std::vector<Component> kept;
  for (const Component &c : comps)
    if (static_cast<double>(c.area()) >= cut)
      kept.push_back(c);
  return kept;
}

LabelMask postprocess_chain(const ProbMap &map, const PostprocessConfig &config) {
  config.validate();
  const LabelMask closed =
      closing(threshold(gaussian_blur(map, config.blur_kernel, config.blur_sigma), config.threshold),
              config.closing_size);
  LabelMask out(closed.height(), closed.width(), 0);
  auto dst = out.labels();
  for (const Component &c : area_filter(components(closed), config.area_exponent))
    for (std::size_t i : c.pixels)
      dst[i] = 1;
  return out;
}

} // namespace histoens
