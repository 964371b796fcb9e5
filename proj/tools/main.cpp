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

// histoens command-line front end.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "demo.hpp"
#include "histoens/ensemble.hpp"
#include "histoens/error.hpp"
#include "histoens/io.hpp"
#include "histoens/metrics.hpp"
#include "histoens/nn/gradcheck.hpp"
#include "histoens/nn/model.hpp"
#include "histoens/nn/train.hpp"
#include "histoens/postprocess.hpp"
#include "histoens/stacking/features.hpp"
#include "histoens/stacking/gbt.hpp"
#include "histoens/stacking/selection.hpp"
#include "histoens/synth.hpp"
#include "histoens/tiling.hpp"

namespace fs = std::filesystem;
using namespace histoens;

namespace {

// Applies `value` unless the user set `opt` on the command line or in the
// config file.
template <typename T> void toy_default(CLI::Option *opt, T &field, T value) {
  if (opt->count() == 0) {
    field = value;
    opt->default_str(std::to_string(value));
  }
}

MeanScope parse_scope(const std::string &s) {
  if (s == "patch")
    return MeanScope::PerPatch;
  if (s == "image")
    return MeanScope::WholeImage;
  throw ValidationError("--mean-scope must be 'patch' or 'image', got '" + s + "'");
}

template <typename T> BasicImage<T> pad_to_multiple(const BasicImage<T> &img, int m) {
  const int H = (img.height() + m - 1) / m * m, W = (img.width() + m - 1) / m * m;
  BasicImage<T> out(H, W, img.channels());
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      for (int ch = 0; ch < img.channels(); ++ch)
        out.at(r, c, ch) = img.at(std::min(r, img.height() - 1), std::min(c, img.width() - 1), ch);
  return out;
}

LabelMask pad_to_multiple(const LabelMask &mask, int m) {
  const int H = (mask.height() + m - 1) / m * m, W = (mask.width() + m - 1) / m * m;
  LabelMask out(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      out.set(r, c, mask.at(std::min(r, mask.height() - 1), std::min(c, mask.width() - 1)));
  return out;
}

ProbMap crop_map(const ProbMap &map, int height, int width) {
  ProbMap out(map.classes(), height, width);
  for (int k = 0; k < map.classes(); ++k)
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        out.set(k, r, c, map.at(k, r, c));
  return out;
}

Image8 shrink(const Image8 &img, int factor) { return factor > 1 ? to_u8(downsample(img, factor)) : img; }

LabelMask shrink(const LabelMask &mask, int factor) {
  return factor > 1 ? downsample_labels(mask, factor) : mask;
}

LabelMask argmax_labels(const ProbMap &map) {
  require(map.classes() == LabelMask::kNumClasses, "expected a 4-class probability map");
  LabelMask out(map.height(), map.width());
  for (int r = 0; r < map.height(); ++r)
    for (int c = 0; c < map.width(); ++c) {
      int best = 0;
      for (int k = 1; k < map.classes(); ++k)
        if (map.at(k, r, c) > map.at(best, r, c))
          best = k;
      out.set(r, c, static_cast<std::uint8_t>(best));
    }
  return out;
}

LabelMask read_labels(const fs::path &path) {
  return path.extension() == ".pmap" ? argmax_labels(read_probmap(path)) : read_mask(path);
}

void write_text(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<Image8> read_images(const std::vector<std::string> &paths) {
  std::vector<Image8> out;
  for (const auto &p : paths)
    out.push_back(read_image(p));
  return out;
}

void add_gbt_options(CLI::App *cmd, stacking::GbtParams &p) {
  cmd->add_option("--rounds", p.rounds, "Boosting rounds")->capture_default_str();
  cmd->add_option("--max-depth", p.max_depth, "Tree depth")->capture_default_str();
  cmd->add_option("--learning-rate", p.learning_rate, "Shrinkage")->capture_default_str();
  cmd->add_option("--lambda", p.lambda, "L2 penalty on leaf weights")->capture_default_str();
  cmd->add_option("--min-child-weight", p.min_child_weight, "Minimum hessian per child")->capture_default_str();
}

void add_post_options(CLI::App *cmd, PostprocessConfig &p) {
  cmd->add_option("--blur-kernel", p.blur_kernel, "Gaussian kernel size (odd)")->capture_default_str();
  cmd->add_option("--blur-sigma", p.blur_sigma, "Gaussian sigma")->capture_default_str();
  cmd->add_option("--threshold", p.threshold, "Binarization threshold")->capture_default_str();
  cmd->add_option("--closing", p.closing_size, "Closing square size (odd)")->capture_default_str();
  cmd->add_option("--area-exponent", p.area_exponent, "Power-mean exponent of the area filter")
      ->capture_default_str();
}

std::vector<stacking::FeatureTable> read_tables(const std::vector<std::string> &paths) {
  std::vector<stacking::FeatureTable> out;
  for (const auto &p : paths)
    out.push_back(stacking::read_table(p));
  return out;
}

stacking::FeatureTable joined(const std::vector<stacking::FeatureTable> &tables) {
  std::vector<const stacking::FeatureTable *> ptrs;
  for (const auto &t : tables)
    ptrs.push_back(&t);
  return stacking::join_tables(ptrs);
}

const CLI::App *selected_leaf(const CLI::App &app) {
  const CLI::App *cur = &app;
  for (;;) {
    const auto subs = cur->get_subcommands();
    if (subs.empty())
      return cur;
    cur = subs.front();
  }
}

std::string command_path(const CLI::App *leaf) {
  std::string s;
  for (const CLI::App *a = leaf; a && a->get_parent(); a = a->get_parent())
    s = a->get_name() + (s.empty() ? "" : " " + s);
  return s;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Histopathology segmentation and ensembling toolkit", "histoens"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path;
  CLI::Option *config_opt =
      app.add_option("--config", config_path, "Plain-text key = value configuration; flags override it");

  std::function<void()> run;

  // synth -------------------------------------------------------------------
  struct {
    std::string out;
    std::uint64_t seed = 7;
    int count = 1;
    SynthSpec spec;
    std::vector<double> priors{0.75, 0.01, 0.01, 0.23};
  } synth;
  auto *c_synth = app.add_subcommand("synth", "Render synthetic slides and ground-truth masks");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--count", synth.count, "Number of slides")->capture_default_str();
  c_synth->add_option("--height", synth.spec.height)->capture_default_str();
  c_synth->add_option("--width", synth.spec.width)->capture_default_str();
  c_synth->add_option("--priors", synth.priors, "Pixel fractions of the four classes")
      ->expected(4)
      ->capture_default_str();
  c_synth->add_option("--min-blobs", synth.spec.min_blobs)->capture_default_str();
  c_synth->add_option("--max-blobs", synth.spec.max_blobs)->capture_default_str();
  c_synth->add_option("--noise", synth.spec.noise_level, "Pixel noise sd")->capture_default_str();
  c_synth->callback([&] {
    run = [&] {
      std::copy(synth.priors.begin(), synth.priors.end(), synth.spec.priors.begin());
      synth.spec.validate();
      require(synth.count >= 1, "--count must be >= 1");
      fs::create_directories(synth.out);
      Rng rng(synth.seed);
      for (int i = 0; i < synth.count; ++i) {
        const SynthSlide s = synth_slide(synth.spec, rng);
        char name[32];
        std::snprintf(name, sizeof name, "%03d", i);
        write_image(fs::path(synth.out) / ("slide_" + std::string(name) + ".png"), s.image);
        write_mask(fs::path(synth.out) / ("mask_" + std::string(name) + ".png"), s.mask);
      }
    };
  });

  // preprocess --------------------------------------------------------------
  struct {
    std::string image, mask, out_image, out_mask;
    int downsample = 40;
  } prep;
  auto *c_prep = app.add_subcommand("preprocess", "Downsample a slide and its mask");
  c_prep->add_option("--image", prep.image)->required()->check(CLI::ExistingFile);
  c_prep->add_option("--mask", prep.mask)->check(CLI::ExistingFile);
  c_prep->add_option("--downsample", prep.downsample, "Block-mean factor")->capture_default_str();
  c_prep->add_option("--out-image", prep.out_image)->required();
  c_prep->add_option("--out-mask", prep.out_mask);
  c_prep->callback([&] {
    run = [&] {
      require(prep.downsample >= 1, "--downsample must be >= 1");
      require(prep.mask.empty() == prep.out_mask.empty(), "--mask and --out-mask go together");
      write_image(prep.out_image, shrink(read_image(prep.image), prep.downsample));
      if (!prep.mask.empty())
        write_mask(prep.out_mask, shrink(read_mask(prep.mask), prep.downsample));
    };
  });

  // train-cls ---------------------------------------------------------------
  struct {
    std::vector<std::string> images;
    std::vector<int> labels;
    std::string layers = "avgpool2,conv3x3:8,relu,maxpool2,conv3x3:16,relu,maxpool2,conv3x3:32,relu,maxpool2,spp:3,"
                         "dense:4";
    std::string out, scope = "patch";
    std::uint64_t seed = 1;
    bool toy = false;
    nn::ClsTrainConfig cfg;
  } tc;
  auto *c_tc = app.add_subcommand("train-cls", "Train a patch classifier");
  c_tc->add_option("--images", tc.images, "Training slides")->required()->check(CLI::ExistingFile);
  c_tc->add_option("--labels", tc.labels, "Class id of each slide")->required();
  c_tc->add_option("--layers", tc.layers, "Layer list")->capture_default_str();
  c_tc->add_option("--out", tc.out, "Model file")->required();
  auto *tc_epochs = c_tc->add_option("--epochs", tc.cfg.epochs)->capture_default_str();
  auto *tc_steps = c_tc->add_option("--steps", tc.cfg.steps_per_epoch, "Steps per epoch")->capture_default_str();
  auto *tc_batch = c_tc->add_option("--batch", tc.cfg.batch)->capture_default_str();
  auto *tc_patch = c_tc->add_option("--patch", tc.cfg.patch)->capture_default_str();
  c_tc->add_option("--lr", tc.cfg.adam.lr0)->capture_default_str();
  c_tc->add_option("--halving", tc.cfg.adam.halving_period, "Epochs per learning-rate halving")
      ->capture_default_str();
  c_tc->add_option("--mean-scope", tc.scope, "patch or image")->capture_default_str();
  c_tc->add_option("--one-vs-all", tc.cfg.one_vs_all, "Class for a one-vs-all head; -1 for softmax")
      ->capture_default_str();
  c_tc->add_option("--seed", tc.seed)->capture_default_str();
  c_tc->add_flag("--toy", tc.toy, "Tiny settings for smoke runs");
  c_tc->callback([&] {
    if (tc.toy) {
      toy_default(tc_epochs, tc.cfg.epochs, 2);
      toy_default(tc_steps, tc.cfg.steps_per_epoch, 3);
      toy_default(tc_batch, tc.cfg.batch, 2);
      toy_default(tc_patch, tc.cfg.patch, 64);
    }
    run = [&] {
      require(tc.images.size() == tc.labels.size(), "--images and --labels differ in length");
      tc.cfg.scope = parse_scope(tc.scope);
      const auto images = read_images(tc.images);
      Rng rng(tc.seed);
      const nn::Sequential model(images.front().channels(), nn::parse_layers(tc.layers), rng);
      const auto hist = nn::train_classifier(model, images, tc.labels, tc.cfg, rng);
      for (std::size_t e = 0; e < hist.epoch_loss.size(); ++e)
        std::cerr << "epoch " << e << " loss " << fmt(hist.epoch_loss[e]) << '\n';
      nn::save_model(tc.out, model.bundle());
    };
  });

  // train-seg ---------------------------------------------------------------
  struct {
    std::vector<std::string> images, masks;
    std::string out, loss = "binary", scope = "patch", mode = "patch";
    int depth = 3, base = 8, skip = 1, downsample = 40;
    std::uint64_t seed = 1;
    bool toy = false;
    nn::SegTrainConfig cfg;
  } ts;
  auto *c_ts = app.add_subcommand("train-seg", "Train a T-Net segmentation network");
  c_ts->add_option("--images", ts.images)->required()->check(CLI::ExistingFile);
  c_ts->add_option("--masks", ts.masks)->required()->check(CLI::ExistingFile);
  c_ts->add_option("--out", ts.out, "Model file")->required();
  c_ts->add_option("--mode", ts.mode, "patch: random crops; whole: downsampled whole slides")
      ->capture_default_str();
  c_ts->add_option("--loss", ts.loss, "binary, boundary or multiclass")->capture_default_str();
  c_ts->add_option("--depth", ts.depth)->capture_default_str();
  c_ts->add_option("--base-channels", ts.base)->capture_default_str();
  c_ts->add_option("--skip-convs", ts.skip, "Conv blocks on each skip connection")->capture_default_str();
  auto *ts_ds = c_ts->add_option("--downsample", ts.downsample, "Factor used in whole mode")->capture_default_str();
  auto *ts_epochs = c_ts->add_option("--epochs", ts.cfg.epochs, "150 in patch mode, 1500 in whole mode");
  auto *ts_steps = c_ts->add_option("--steps", ts.cfg.steps_per_epoch, "Steps per epoch")->capture_default_str();
  auto *ts_batch = c_ts->add_option("--batch", ts.cfg.batch)->capture_default_str();
  auto *ts_patch = c_ts->add_option("--patch", ts.cfg.patch)->capture_default_str();
  c_ts->add_option("--boundary-ramp", ts.cfg.boundary_ramp, "Ramp width of the boundary loss")
      ->capture_default_str();
  c_ts->add_option("--lr", ts.cfg.adam.lr0)->capture_default_str();
  c_ts->add_option("--halving", ts.cfg.adam.halving_period)->capture_default_str();
  c_ts->add_option("--mean-scope", ts.scope, "patch or image")->capture_default_str();
  c_ts->add_option("--seed", ts.seed)->capture_default_str();
  c_ts->add_flag("--toy", ts.toy, "Tiny settings for smoke runs");
  c_ts->callback([&] {
    const bool whole = ts.mode == "whole";
    require(whole || ts.mode == "patch", "--mode must be 'patch' or 'whole'");
    toy_default(ts_epochs, ts.cfg.epochs, whole ? 1500 : 150);
    if (ts.toy) {
      toy_default(ts_epochs, ts.cfg.epochs, 2);
      toy_default(ts_steps, ts.cfg.steps_per_epoch, 3);
      toy_default(ts_batch, ts.cfg.batch, 2);
      toy_default(ts_patch, ts.cfg.patch, 32);
      toy_default(ts_ds, ts.downsample, 8);
    }
    run = [&] {
      require(ts.images.size() == ts.masks.size(), "--images and --masks differ in length");
      nn::TNetSpec spec{3, ts.depth, ts.base, ts.skip, 1};
      if (ts.loss == "binary")
        ts.cfg.loss = nn::SegLoss::Binary;
      else if (ts.loss == "boundary")
        ts.cfg.loss = nn::SegLoss::WeightedBoundary;
      else if (ts.loss == "multiclass") {
        ts.cfg.loss = nn::SegLoss::Multiclass;
        spec.out_classes = LabelMask::kNumClasses;
      } else
        throw ValidationError("--loss must be binary, boundary or multiclass");
      ts.cfg.scope = parse_scope(ts.scope);
      const int unit = 1 << (ts.depth - 1);
      std::vector<Image8> images;
      std::vector<LabelMask> masks;
      for (std::size_t i = 0; i < ts.images.size(); ++i) {
        Image8 img = read_image(ts.images[i]);
        LabelMask m = read_mask(ts.masks[i]);
        if (whole) {
          img = pad_to_multiple(shrink(img, ts.downsample), unit);
          m = pad_to_multiple(shrink(m, ts.downsample), unit);
        }
        images.push_back(std::move(img));
        masks.push_back(std::move(m));
      }
      if (whole) {
        ts.cfg.patch = 0;
        ts.cfg.batch = 1;
        ts.cfg.scope = MeanScope::WholeImage;
      } else {
        require(ts.cfg.patch % unit == 0, "--patch must be a multiple of 2^(depth-1)");
      }
      spec.in_channels = images.front().channels();
      Rng rng(ts.seed);
      const nn::TNet model(spec, rng);
      const auto hist = nn::train_segmentation(model, images, masks, ts.cfg, rng);
      for (std::size_t e = 0; e < hist.epoch_loss.size(); ++e)
        std::cerr << "epoch " << e << " loss " << fmt(hist.epoch_loss[e]) << '\n';
      nn::save_model(ts.out, model.bundle());
    };
  });

  // predict -----------------------------------------------------------------
  struct {
    std::string model, image, out, scope = "patch";
    int patch = 500, stride = 100, downsample = 1, tile = 0;
  } pr;
  auto *c_pr = app.add_subcommand("predict", "Run a trained network on a slide");
  c_pr->add_option("--model", pr.model)->required()->check(CLI::ExistingFile);
  c_pr->add_option("--image", pr.image)->required()->check(CLI::ExistingFile);
  c_pr->add_option("--out", pr.out, "CSV for classifiers, PMAP for segmentation nets")->required();
  c_pr->add_option("--patch", pr.patch, "Classifier patch size")->capture_default_str();
  c_pr->add_option("--stride", pr.stride, "Grid stride (classifier and tiled segmentation)")->capture_default_str();
  c_pr->add_option("--mean-scope", pr.scope, "patch or image")->capture_default_str();
  c_pr->add_option("--downsample", pr.downsample, "Segmentation: run on a downsampled slide")
      ->capture_default_str();
  c_pr->add_option("--tile", pr.tile, "Segmentation: tile size, 0 for the whole slide")->capture_default_str();
  c_pr->callback([&] {
    run = [&] {
      const nn::ModelBundle bundle = nn::load_model(pr.model);
      const auto model = nn::from_bundle(bundle);
      const Image8 image = read_image(pr.image);
      const MeanScope scope = parse_scope(pr.scope);
      if (const auto *tnet = dynamic_cast<const nn::TNet *>(model.get())) {
        require(pr.downsample >= 1, "--downsample must be >= 1");
        const Image8 small = shrink(image, pr.downsample);
        ProbMap map;
        if (pr.tile > 0) {
          map = nn::predict_segmentation_tiled(*model, small, PatchSpec{pr.tile, pr.tile, pr.stride}, scope);
        } else {
          const int unit = 1 << (tnet->spec().depth - 1);
          map = crop_map(nn::predict_segmentation(*model, pad_to_multiple(small, unit)), small.height(),
                         small.width());
        }
        if (pr.downsample > 1)
          map = upsample_probmap(map, image.height(), image.width());
        write_probmap(pr.out, map);
      } else {
        const PatchGrid grid = grid_patches(image, PatchSpec{pr.patch, pr.patch, pr.stride});
        PatchPredictions preds;
        for (const auto &o : grid.origins)
          preds.origins.emplace_back(o.row, o.col);
        preds.scores = nn::predict_patches(*model, image, grid, scope);
        write_predictions(pr.out, preds);
      }
    };
  });

  // stitch ------------------------------------------------------------------
  struct {
    std::string preds, like, out;
    int column = 0, patch = 500, height = 0, width = 0;
  } st;
  auto *c_st = app.add_subcommand("stitch", "Paint patch scores into a probability map");
  c_st->add_option("--preds", st.preds, "Patch prediction CSV with origins")->required()->check(CLI::ExistingFile);
  c_st->add_option("--column", st.column, "Score column")->capture_default_str();
  c_st->add_option("--patch", st.patch, "Patch size used for prediction")->capture_default_str();
  c_st->add_option("--like", st.like, "Take the output size from this image")->check(CLI::ExistingFile);
  c_st->add_option("--height", st.height);
  c_st->add_option("--width", st.width);
  c_st->add_option("--out", st.out, "PMAP file")->required();
  c_st->callback([&] {
    run = [&] {
      const PatchPredictions preds = read_predictions(st.preds);
      require(!preds.origins.empty(), "stitch: predictions carry no patch origins");
      require(st.column >= 0 && st.column < preds.scores.cols(), "--column out of range");
      if (!st.like.empty()) {
        const Image8 ref = read_image(st.like);
        st.height = ref.height();
        st.width = ref.width();
      }
      require(st.height > 0 && st.width > 0, "stitch: give --like or --height and --width");
      PatchGrid grid;
      grid.spec = PatchSpec{st.patch, st.patch, 1};
      for (const auto &[r, c] : preds.origins)
        grid.origins.push_back({r, c});
      PredMatrix col(preds.scores.rows(), 1);
      for (int r = 0; r < preds.scores.rows(); ++r)
        col.set(r, 0, preds.scores.at(r, st.column));
      write_probmap(st.out, stitch(col, grid, st.height, st.width));
    };
  });

  // postprocess -------------------------------------------------------------
  struct {
    std::string map, out;
    int channel = 0;
    PostprocessConfig cfg;
  } pp;
  auto *c_pp = app.add_subcommand("postprocess", "Blur, threshold, close and area-filter a probability map");
  c_pp->add_option("--map", pp.map)->required()->check(CLI::ExistingFile);
  c_pp->add_option("--channel", pp.channel, "Channel of a multi-channel map")->capture_default_str();
  c_pp->add_option("--out", pp.out, "Binary mask PNG")->required();
  add_post_options(c_pp, pp.cfg);
  c_pp->callback([&] {
    run = [&] {
      ProbMap map = read_probmap(pp.map);
      require(pp.channel >= 0 && pp.channel < map.classes(), "--channel out of range");
      if (map.classes() > 1) {
        const auto plane = map.plane(pp.channel);
        map = ProbMap(1, map.height(), map.width(), std::vector<float>(plane.begin(), plane.end()));
      }
      write_mask(pp.out, postprocess_chain(map, pp.cfg));
    };
  });

  // blend -------------------------------------------------------------------
  struct {
    std::string a, b, out;
    double weight = 0.5;
  } bl;
  auto *c_bl = app.add_subcommand("blend", "Weighted average of two binary probability maps");
  c_bl->add_option("--a", bl.a)->required()->check(CLI::ExistingFile);
  c_bl->add_option("--b", bl.b)->required()->check(CLI::ExistingFile);
  c_bl->add_option("--weight", bl.weight, "Weight of --a")->capture_default_str();
  c_bl->add_option("--out", bl.out)->required();
  c_bl->callback([&] {
    run = [&] { write_probmap(bl.out, blend_binary(read_probmap(bl.a), read_probmap(bl.b), bl.weight)); };
  });

  // compose -----------------------------------------------------------------
  struct {
    std::string binary, multiclass, out;
    bool shifted = false;
  } co;
  auto *c_co = app.add_subcommand("compose", "Combine a binary mask with a multiclass prediction");
  c_co->add_option("--binary", co.binary, "Binary mask PNG")->required()->check(CLI::ExistingFile);
  c_co->add_option("--multiclass", co.multiclass, "Label PNG or 4-class PMAP")->check(CLI::ExistingFile);
  c_co->add_flag("--shifted", co.shifted, "Map binary 0/1 to Benign/Invasive instead");
  c_co->add_option("--out", co.out, "Label mask PNG")->required();
  c_co->callback([&] {
    run = [&] {
      const LabelMask binary = read_mask(co.binary);
      if (co.shifted) {
        write_mask(co.out, shifted_blend(binary));
        return;
      }
      require(!co.multiclass.empty(), "compose: --multiclass is required without --shifted");
      write_mask(co.out, compose_multiclass(binary, read_labels(co.multiclass)));
    };
  });

  // features ----------------------------------------------------------------
  struct {
    std::vector<std::string> preds, ids;
    std::vector<int> labels;
    std::string prefix, out;
  } fe;
  auto *c_fe = app.add_subcommand("features", "Per-image features from patch predictions");
  c_fe->add_option("--preds", fe.preds, "One prediction CSV per image")->required()->check(CLI::ExistingFile);
  c_fe->add_option("--ids", fe.ids, "Image ids (default: file stems)");
  c_fe->add_option("--labels", fe.labels, "Image class ids");
  c_fe->add_option("--prefix", fe.prefix, "Feature name prefix, e.g. the model name");
  c_fe->add_option("--out", fe.out, "Feature table CSV")->required();
  c_fe->callback([&] {
    run = [&] {
      if (fe.ids.empty())
        for (const auto &p : fe.preds)
          fe.ids.push_back(fs::path(p).stem().string());
      require(fe.ids.size() == fe.preds.size(), "--ids and --preds differ in length");
      require(fe.labels.empty() || fe.labels.size() == fe.preds.size(), "--labels and --preds differ in length");
      std::vector<stacking::FeatureVector> rows;
      for (const auto &p : fe.preds)
        rows.push_back(stacking::extract_features(read_predictions(p).scores, fe.prefix));
      stacking::write_table(fe.out, stacking::make_table(fe.ids, rows, fe.labels));
    };
  });

  // stack -------------------------------------------------------------------
  auto *c_stack = app.add_subcommand("stack", "Gradient-boosted stacking of per-model feature tables");
  c_stack->require_subcommand(1);
  struct {
    std::vector<std::string> tables;
    std::string out;
    stacking::GbtParams params;
  } sk_train;
  auto *c_sk_train = c_stack->add_subcommand("train", "Fit the stacking classifier");
  c_sk_train->add_option("--tables", sk_train.tables, "Labeled feature tables, one per model")
      ->required()
      ->check(CLI::ExistingFile);
  c_sk_train->add_option("--out", sk_train.out, "Model JSON")->required();
  add_gbt_options(c_sk_train, sk_train.params);
  c_sk_train->callback([&] {
    run = [&] {
      const auto table = joined(read_tables(sk_train.tables));
      const auto model = stacking::gbt_train(table, sk_train.params);
      std::cerr << "training loss " << fmt(model.logistic_loss(table)) << '\n';
      stacking::save_gbt(sk_train.out, model);
    };
  });

  struct {
    std::vector<std::string> tables;
    std::string out;
    stacking::GbtParams params;
    stacking::CvPlan plan;
  } sk_sel;
  auto *c_sk_sel = c_stack->add_subcommand("select", "Greedy backward selection of models");
  c_sk_sel->add_option("--tables", sk_sel.tables, "Labeled feature tables, one per model")
      ->required()
      ->check(CLI::ExistingFile);
  c_sk_sel->add_option("--folds", sk_sel.plan.folds)->capture_default_str();
  c_sk_sel->add_option("--shuffles", sk_sel.plan.shuffles)->capture_default_str();
  c_sk_sel->add_option("--seed", sk_sel.plan.seed)->capture_default_str();
  c_sk_sel->add_option("--out", sk_sel.out, "Report CSV (default stdout)");
  add_gbt_options(c_sk_sel, sk_sel.params);
  c_sk_sel->callback([&] {
    run = [&] {
      const auto tables = read_tables(sk_sel.tables);
      const auto sel = stacking::greedy_select(tables, sk_sel.plan, sk_sel.params);
      std::ostringstream out;
      out << "step,removed,cv_accuracy\n";
      for (std::size_t i = 0; i < sel.trace.size(); ++i)
        out << i << ',' << (i == 0 ? std::string() : sk_sel.tables[sel.removed[i - 1]]) << ',' << fmt(sel.trace[i])
            << '\n';
      for (std::size_t k : sel.kept)
        std::cerr << "kept " << sk_sel.tables[k] << '\n';
      write_text(sk_sel.out, out.str());
    };
  });

  struct {
    std::string model, out;
    std::vector<std::string> tables;
  } sk_pred;
  auto *c_sk_pred = c_stack->add_subcommand("predict", "Apply a stacking model");
  c_sk_pred->add_option("--model", sk_pred.model)->required()->check(CLI::ExistingFile);
  c_sk_pred->add_option("--tables", sk_pred.tables)->required()->check(CLI::ExistingFile);
  c_sk_pred->add_option("--out", sk_pred.out, "Prediction CSV (default stdout)");
  c_sk_pred->callback([&] {
    run = [&] {
      const auto model = stacking::load_gbt(sk_pred.model);
      const auto table = joined(read_tables(sk_pred.tables));
      const auto proba = model.predict_proba(table);
      const auto pred = model.predict(table);
      std::ostringstream out;
      out << "image,prediction";
      for (int c : model.classes)
        out << ",p" << c;
      out << '\n';
      for (std::size_t r = 0; r < table.rows(); ++r) {
        out << table.ids[r] << ',' << pred[r];
        for (double p : proba[r])
          out << ',' << fmt(p);
        out << '\n';
      }
      write_text(sk_pred.out, out.str());
    };
  });

  // eval --------------------------------------------------------------------
  struct {
    std::string pred, gt, id, out;
  } ev;
  auto *c_ev = app.add_subcommand("eval", "Score a predicted label mask against ground truth");
  c_ev->add_option("--pred", ev.pred, "Label PNG or 4-class PMAP")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--gt", ev.gt)->required()->check(CLI::ExistingFile);
  c_ev->add_option("--id", ev.id, "Image id (default: prediction file stem)");
  c_ev->add_option("--out", ev.out, "CSV (default stdout)");
  c_ev->callback([&] {
    run = [&] {
      const LabelMask pred = read_labels(ev.pred), gt = read_mask(ev.gt);
      require(pred.same_shape(gt), "eval: prediction and ground truth differ in size");
      const std::string id = ev.id.empty() ? fs::path(ev.pred).stem().string() : ev.id;
      const SegScore s = evaluate_segmentation(pred, gt);
      static const char *names[] = {"dice_normal", "dice_benign", "dice_insitu", "dice_invasive"};
      std::ostringstream out;
      out << "image,metric,value\n" << id << ",bach," << fmt(s.bach) << '\n';
      for (int k = 0; k < 4; ++k)
        out << id << ',' << names[k] << ',' << fmt(s.dice_per_class[static_cast<std::size_t>(k)]) << '\n';
      out << id << ",dice_abnormal," << fmt(s.dice_abnormal) << '\n';
      write_text(ev.out, out.str());
    };
  });

  // gradcheck ---------------------------------------------------------------
  struct {
    std::string arch = "tnet in=3 depth=2 base=4 skip=1 out=1";
    int size = 8, batch = 1;
    std::uint64_t seed = 1;
    nn::GradcheckOptions opts;
  } gc;
  auto *c_gc = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients of a network");
  c_gc->add_option("--arch", gc.arch, "Architecture descriptor")->capture_default_str();
  c_gc->add_option("--size", gc.size, "Input height and width")->capture_default_str();
  c_gc->add_option("--batch", gc.batch)->capture_default_str();
  c_gc->add_option("--seed", gc.seed)->capture_default_str();
  c_gc->add_option("--step", gc.opts.step, "Difference half-width")->capture_default_str();
  c_gc->add_option("--tolerance", gc.opts.tolerance)->capture_default_str();
  c_gc->add_option("--max-entries", gc.opts.max_entries, "Entries checked per tensor, 0 = all")
      ->capture_default_str();
  int gradcheck_status = 0;
  c_gc->callback([&] {
    run = [&] {
      Rng rng(gc.seed);
      const auto model = nn::from_architecture(gc.arch, rng);
      const auto in_at = gc.arch.find("in=");
      const int in_ch = in_at == std::string::npos ? 3 : std::stoi(gc.arch.substr(in_at + 3));
      nn::Tensor x({gc.batch, in_ch, gc.size, gc.size});
      for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = static_cast<float>(rng.normal());
      gc.opts.seed = gc.seed;
      const auto rep = nn::gradcheck_model(*model, x, gc.opts);
      std::cout << "tensor,checked,one_sided,skipped,rel_error\n";
      for (const auto &t : rep.tensors)
        std::cout << t.name << ',' << t.checked << ',' << t.one_sided << ',' << t.skipped << ','
                  << fmt(t.rel_error) << '\n';
      std::cout << (rep.passed ? "PASS" : "FAIL") << " max_rel_error=" << rep.max_rel_error << '\n';
      gradcheck_status = rep.passed ? 0 : 1;
    };
  });

  // render ------------------------------------------------------------------
  struct {
    std::string image, mask, out;
    double alpha = 0.45;
  } rd;
  auto *c_rd = app.add_subcommand("render", "Overlay a label mask on a slide");
  c_rd->add_option("--image", rd.image)->required()->check(CLI::ExistingFile);
  c_rd->add_option("--mask", rd.mask, "Label PNG or 4-class PMAP")->required()->check(CLI::ExistingFile);
  c_rd->add_option("--alpha", rd.alpha, "Overlay opacity")->capture_default_str();
  c_rd->add_option("--out", rd.out, "RGB PNG")->required();
  c_rd->callback([&] {
    run = [&] {
      require(rd.alpha >= 0.0 && rd.alpha <= 1.0, "--alpha must lie in [0, 1]");
      const Image8 img = read_image(rd.image);
      const LabelMask mask = read_labels(rd.mask);
      require(mask.height() == img.height() && mask.width() == img.width(), "render: mask and image differ in size");
      // Benign red, InSitu green, Invasive blue; Normal is left untouched.
      static const std::uint8_t colors[4][3] = {{0, 0, 0}, {255, 0, 0}, {0, 200, 0}, {0, 0, 255}};
      Image8 out(img.height(), img.width(), 3);
      for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c) {
          const int k = mask.at(r, c);
          for (int ch = 0; ch < 3; ++ch) {
            const double base = img.at(r, c, img.channels() == 3 ? ch : 0);
            const double v = k == 0 ? base : (1.0 - rd.alpha) * base + rd.alpha * colors[k][ch];
            out.at(r, c, ch) = static_cast<std::uint8_t>(std::lround(v));
          }
        }
      write_image(rd.out, out);
    };
  });

  // demo --------------------------------------------------------------------
  struct {
    demo::DemoConfig cfg;
    std::string out;
    bool toy = false;
  } dm;
  auto *c_dm = app.add_subcommand("demo", "Synthetic end-to-end run producing a results table");
  c_dm->add_option("--seed", dm.cfg.seed)->capture_default_str();
  auto *dm_size = c_dm->add_option("--size", dm.cfg.size, "Slide side length")->capture_default_str();
  c_dm->add_option("--train-slides", dm.cfg.train_slides)->capture_default_str();
  c_dm->add_option("--downsample", dm.cfg.downsample)->capture_default_str();
  c_dm->add_option("--depth", dm.cfg.depth)->capture_default_str();
  c_dm->add_option("--base-channels", dm.cfg.base_channels)->capture_default_str();
  c_dm->add_option("--skip-convs", dm.cfg.skip_convs)->capture_default_str();
  c_dm->add_option("--patch", dm.cfg.patch)->capture_default_str();
  c_dm->add_option("--batch", dm.cfg.patch_batch)->capture_default_str();
  c_dm->add_option("--tile", dm.cfg.tile)->capture_default_str();
  c_dm->add_option("--tile-stride", dm.cfg.tile_stride)->capture_default_str();
  auto *dm_epochs = c_dm->add_option("--epochs", dm.cfg.epochs)->capture_default_str();
  c_dm->add_option("--steps", dm.cfg.steps_per_epoch)->capture_default_str();
  c_dm->add_option("--boundary-ramp", dm.cfg.boundary_ramp)->capture_default_str();
  c_dm->add_option("--blend-weight", dm.cfg.blend_weight)->capture_default_str();
  add_post_options(c_dm, dm.cfg.post);
  c_dm->add_option("--out", dm.out, "CSV (default stdout)");
  c_dm->add_flag("--toy", dm.toy, "Smaller slides and fewer epochs");
  c_dm->callback([&] {
    if (dm.toy) {
      toy_default(dm_size, dm.cfg.size, 256);
      toy_default(dm_epochs, dm.cfg.epochs, 8);
    }
    run = [&] { write_text(dm.out, demo::run_demo(dm.cfg, &std::cerr).csv()); };
  });

  // -------------------------------------------------------------------------
  std::vector<std::string> args(argv + 1, argv + argc);
  auto parse = [&](std::vector<std::string> a) {
    std::reverse(a.begin(), a.end());
    app.parse(a);
  };
  try {
    try {
      parse(args);
    } catch (const CLI::RequiredError &) {
      // Required values may still come from the config file.
      if (config_opt->count() == 0)
        throw;
    }
    if (config_opt->count() > 0) {
      const CLI::App *leaf = selected_leaf(app);
      require(leaf != &app, "no command given");
      const auto extra = cli::config_arguments(cli::load_config(config_path), app, *leaf);
      app.clear();
      run = nullptr;
      args.insert(args.end(), extra.begin(), extra.end());
      parse(args);
    }
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  const CLI::App *leaf = selected_leaf(app);
  std::cerr << "# " << command_path(leaf) << '\n' << leaf->config_to_str(true, false);
  try {
    if (run)
      run();
  } catch (const ValidationError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return gradcheck_status;
}
