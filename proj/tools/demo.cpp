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

#include "demo.hpp"

#include <charconv>
#include <chrono>
#include <ostream>

#include "histoens/ensemble.hpp"
#include "histoens/nn/train.hpp"
#include "histoens/synth.hpp"
#include "histoens/tiling.hpp"

namespace histoens::demo {

const DemoRow &DemoReport::row(const std::string &method) const {
  for (const DemoRow &r : rows)
    if (r.method == method)
      return r;
  throw ValidationError("demo report has no row '" + method + "'");
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  return std::string(buf, end);
}

LabelMask argmax_labels(const ProbMap &p) {
  LabelMask out(p.height(), p.width(), 0);
  for (int r = 0; r < p.height(); ++r)
    for (int c = 0; c < p.width(); ++c) {
      int best = 0;
      for (int k = 1; k < p.classes(); ++k)
        if (p.at(k, r, c) > p.at(best, r, c))
          best = k;
      out.set(r, c, static_cast<std::uint8_t>(best));
    }
  return out;
}

} // namespace

std::string DemoReport::csv() const {
  std::string out = "method,bach,dice_b,dice_is,dice_iv,dice_abnormal\n";
  for (const DemoRow &r : rows) {
    out += r.method + "," + fmt(r.score.bach);
    for (int c = 1; c < 4; ++c)
      out += "," + fmt(r.score.dice_per_class[static_cast<std::size_t>(c)]);
    out += "," + fmt(r.score.dice_abnormal) + "\n";
  }
  return out;
}

DemoReport run_demo(const DemoConfig &cfg, std::ostream *log) {
  require(cfg.size % (cfg.downsample << (cfg.depth - 1)) == 0,
          "demo: slide size must be divisible by downsample * 2^(depth-1)");
  const auto say = [&](const std::string &msg) {
    if (log)
      *log << msg << std::endl;
  };
  Rng rng(cfg.seed);
  SynthSpec spec;
  spec.height = spec.width = cfg.size;
  std::vector<Image8> images, small_images;
  std::vector<LabelMask> masks, small_masks;
  for (int i = 0; i < cfg.train_slides; ++i) {
    SynthSlide s = synth_slide(spec, rng);
    small_images.push_back(to_u8(downsample(s.image, cfg.downsample)));
    small_masks.push_back(downsample_labels(s.mask, cfg.downsample));
    images.push_back(std::move(s.image));
    masks.push_back(std::move(s.mask));
  }
  const SynthSlide test = synth_slide(spec, rng);
  say("synthesized " + std::to_string(cfg.train_slides) + " training slides and 1 test slide of " +
      std::to_string(cfg.size) + "x" + std::to_string(cfg.size));

  const nn::TNetSpec binary_spec{3, cfg.depth, cfg.base_channels, cfg.skip_convs, 1};
  nn::SegTrainConfig base;
  base.epochs = cfg.epochs;
  base.steps_per_epoch = cfg.steps_per_epoch;
  const auto timed = [&](const std::string &name, auto &&fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto hist = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    say("trained " + name + ": loss " + fmt(hist.epoch_loss.front()) + " -> " + fmt(hist.epoch_loss.back()) + " (" +
        fmt(secs) + " s)");
  };

  // Patch network on full-resolution crops.
  Rng init1 = rng.fork(), train1 = rng.fork();
  nn::TNet net1(binary_spec, init1);
  nn::SegTrainConfig c1 = base;
  c1.patch = cfg.patch;
  c1.batch = cfg.patch_batch;
  c1.loss = nn::SegLoss::Binary;
  timed("T-Net 1 (patches)", [&] { return nn::train_segmentation(net1, images, masks, c1, train1); });

  // Whole-slide networks on downsampled slides.
  Rng init2 = rng.fork(), train2 = rng.fork();
  nn::TNet net2(binary_spec, init2);
  nn::SegTrainConfig c2 = base;
  c2.patch = 0;
  c2.batch = 1;
  c2.loss = nn::SegLoss::WeightedBoundary;
  c2.boundary_ramp = cfg.boundary_ramp;
  c2.scope = MeanScope::WholeImage;
  timed("T-Net 2 (downsampled, weighted boundary)",
        [&] { return nn::train_segmentation(net2, small_images, small_masks, c2, train2); });

  Rng init3 = rng.fork(), train3 = rng.fork();
  nn::TNet net3(nn::TNetSpec{3, cfg.depth, cfg.base_channels, cfg.skip_convs, 4}, init3);
  nn::SegTrainConfig c3 = c2;
  c3.loss = nn::SegLoss::Multiclass;
  timed("T-Net 3 (downsampled, multiclass)",
        [&] { return nn::train_segmentation(net3, small_images, small_masks, c3, train3); });

  const int H = test.mask.height(), W = test.mask.width();
  const ProbMap p1 = nn::predict_segmentation_tiled(net1, test.image, PatchSpec{cfg.tile, cfg.tile, cfg.tile_stride});
  const Image8 small_test = to_u8(downsample(test.image, cfg.downsample));
  const ProbMap p2 = upsample_probmap(nn::predict_segmentation(net2, small_test), H, W);
  const LabelMask m3 = upsample_labels(argmax_labels(nn::predict_segmentation(net3, small_test)), H, W);

  const LabelMask b1 = postprocess_chain(p1, cfg.post);
  const LabelMask b2 = postprocess_chain(p2, cfg.post);
  const LabelMask blended = postprocess_chain(blend_binary(p1, p2, cfg.blend_weight), cfg.post);

  DemoReport report;
  const auto add = [&](const std::string &method, const LabelMask &pred) {
    DemoRow row;
    row.method = method;
    row.score = evaluate_segmentation(pred, test.mask);
    row.bach_either = bach_score(pred, test.mask, BachGate::Either);
    report.rows.push_back(row);
  };
  // Binary outputs are scored as "abnormal = Invasive".
  const auto as_invasive = [](const LabelMask &b) { return compose_multiclass(b, LabelMask(b.height(), b.width(), 0)); };
  add("T-Net 1", as_invasive(b1));
  add("T-Net 2", as_invasive(b2));
  add("T-Net 3", m3);
  add(kEnsembleRow, compose_multiclass(blended, m3));
  add(kShiftedRow, shifted_blend(blended));
  return report;
}

} // namespace histoens::demo
