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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "demo.hpp"
#include "histoens/ensemble.hpp"
#include "histoens/metrics.hpp"
#include "histoens/nn/gradcheck.hpp"
#include "histoens/nn/losses.hpp"
#include "histoens/nn/model.hpp"
#include "histoens/nn/ops.hpp"
#include "histoens/nn/optim.hpp"
#include "histoens/nn/train.hpp"
#include "histoens/postprocess.hpp"
#include "histoens/stacking/features.hpp"
#include "histoens/stacking/gbt.hpp"
#include "histoens/stacking/selection.hpp"
#include "histoens/synth.hpp"
#include "histoens/tiling.hpp"

using namespace histoens;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks; the first few messages end up in the report.
class Checker {
public:
  void check(bool ok, const std::string &what) {
    if (ok)
      return;
    if (++failures_ <= 3)
      notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Outcome outcome(const std::string &summary) const {
    if (failures_ == 0)
      return {true, summary};
    return {false, summary + " | " + std::to_string(failures_) + " failed check(s): " + notes_};
  }

private:
  int failures_ = 0;
  std::string notes_;
};

std::string fmt(const char *f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

LabelMask random_labels(int h, int w, int classes, Rng &rng) {
  LabelMask m(h, w);
  for (auto &v : m.labels())
    v = static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
  return m;
}

// ---------------------------------------------------------------------------

Outcome grid_arithmetic() {
  const PatchGrid g = grid_patches(1536, 2048, PatchSpec{500, 500, 100});
  return {g.origins.size() == 176, std::to_string(g.origins.size()) + " patches on 2048x1536, 500/100"};
}

Outcome metric_oracles() {
  Checker ck;
  const LabelMask hand_gt(1, 3, std::vector<std::uint8_t>{0, 3, 1}), hand_p(1, 3, std::vector<std::uint8_t>{0, 1, 1});
  const double hand = bach_score(hand_p, hand_gt);
  ck.check(hand == 0.6, "hand case gave " + std::to_string(hand));
  Rng rng(2024);
  double worst = 0.0;
  int undefined = 0;
  for (int t = 0; t < 200; ++t) {
    const LabelMask p = random_labels(64, 64, 4, rng), g = random_labels(64, 64, 4, rng);
    long num = 0, den = 0, same = 0;
    std::array<long, 4> inter{}, sp{}, sg{};
    long ai = 0, ap = 0, ag = 0;
    std::vector<int> pv, gv;
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const int pi = p.at(r, c), gi = g.at(r, c);
        num += std::abs(pi - gi);
        if (gi > 0 && pi > 0)
          den += std::max(gi, 3 - gi);
        same += pi == gi;
        pv.push_back(pi);
        gv.push_back(gi);
        for (int k = 0; k < 4; ++k) {
          inter[k] += pi == k && gi == k;
          sp[k] += pi == k;
          sg[k] += gi == k;
        }
        ai += pi > 0 && gi > 0;
        ap += pi > 0;
        ag += gi > 0;
      }
    if (den == 0) {
      ++undefined;
      continue;
    }
    ck.check(bach_score(p, g) == 1.0 - static_cast<double>(num) / static_cast<double>(den), "bach differs");
    for (int k = 0; k < 4; ++k) {
      const double ref = sp[k] + sg[k] == 0 ? 1.0 : 2.0 * inter[k] / static_cast<double>(sp[k] + sg[k]);
      worst = std::max(worst, std::abs(dice(p, g, k) - ref));
    }
    worst = std::max(worst, std::abs(dice_abnormal(p, g) - 2.0 * ai / static_cast<double>(ap + ag)));
    worst = std::max(worst, std::abs(accuracy(pv, gv) - same / 4096.0));
  }
  ck.check(worst <= 1e-9, fmt("float metric error %.3g", worst));
  ck.check(undefined == 0, "unexpected undefined score");
  return ck.outcome(fmt("hand case %.4g; 200 pairs, max float error %.2g", hand, worst));
}

Outcome blending_truth_table() {
  Checker ck;
  int cases = 0;
  for (int b = 0; b <= 1; ++b)
    for (int m = 0; m <= 3; ++m) {
      const LabelMask bm(1, 1, static_cast<std::uint8_t>(b)), mm(1, 1, static_cast<std::uint8_t>(m));
      ck.check(compose_multiclass(bm, mm).at(0, 0) == 3 * b + m * (1 - b), "compose b=" + std::to_string(b));
      const int s = shifted_blend(bm).at(0, 0);
      ck.check(s == 1 + 2 * b && (s == 1 || s == 3), "shifted b=" + std::to_string(b));
      ++cases;
    }
  return ck.outcome(std::to_string(cases) + " (binary, multiclass) pairs; shifted range {1,3}");
}

Outcome postprocessing() {
  Checker ck;
  Rng rng(7);
  // Components against an explicit-stack flood fill written here.
  for (int t = 0; t < 100; ++t) {
    LabelMask m(20, 25);
    const double density = rng.uniform(0.2, 0.7);
    for (auto &v : m.labels())
      v = rng.uniform01() < density ? 1 : 0;
    std::vector<int> oracle(m.size(), 0);
    int next = 0;
    for (std::size_t s = 0; s < m.size(); ++s) {
      if (!m.labels()[s] || oracle[s])
        continue;
      std::vector<std::size_t> stack{s};
      oracle[s] = ++next;
      while (!stack.empty()) {
        const std::size_t p = stack.back();
        stack.pop_back();
        const int r = static_cast<int>(p) / 25, c = static_cast<int>(p) % 25;
        const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (const auto &n : nb) {
          if (n[0] < 0 || n[0] >= 20 || n[1] < 0 || n[1] >= 25)
            continue;
          const auto q = static_cast<std::size_t>(n[0] * 25 + n[1]);
          if (m.labels()[q] && !oracle[q]) {
            oracle[q] = next;
            stack.push_back(q);
          }
        }
      }
    }
    std::vector<int> got(m.size(), 0);
    for (const auto &c : components(m))
      for (std::size_t p : c.pixels)
        got[p] = c.label;
    ck.check(got == oracle, "components mismatch");
  }
  // Closing laws.
  for (int t = 0; t < 100; ++t) {
    LabelMask m(24, 24);
    const double density = rng.uniform(0.05, 0.6);
    for (auto &v : m.labels())
      v = rng.uniform01() < density ? 1 : 0;
    const int size = 1 + 2 * static_cast<int>(rng.uniform_int(0, 5));
    const LabelMask c = closing(m, size);
    ck.check(closing(c, size) == c, "closing not idempotent");
    bool extensive = true;
    for (std::size_t i = 0; i < m.size(); ++i)
      extensive = extensive && c.labels()[i] >= m.labels()[i];
    ck.check(extensive, "closing not extensive");
  }
  // Area filter hand cases.
  auto blob = [](std::size_t area, std::size_t start) {
    Component c;
    for (std::size_t i = 0; i < area; ++i)
      c.pixels.push_back(start + i);
    return c;
  };
  const std::vector<Component> pair{blob(1, 0), blob(100, 10)};
  const auto kept = area_filter(pair, 1.0);
  ck.check(kept.size() == 1 && kept[0].area() == 100, "a=1 should keep only the 100-pixel blob");
  const double t2 = area_threshold(pair, 2.0);
  ck.check(std::abs(t2 - 70.71) < 0.01, fmt("a=2 threshold %.4f", t2));
  // Power mean is non-decreasing in the exponent.
  for (int t = 0; t < 50; ++t) {
    std::vector<Component> comps;
    for (int i = 0, n = 2 + static_cast<int>(rng.uniform_int(0, 6)); i < n; ++i)
      comps.push_back(blob(static_cast<std::size_t>(rng.uniform_int(1, 400)), 0));
    double prev = 0.0;
    for (double a : {0.5, 1.0, 2.0, 3.0, 5.0}) {
      const double v = area_threshold(comps, a);
      ck.check(v >= prev - 1e-9, "power mean decreased");
      prev = v;
    }
  }
  return ck.outcome(fmt("components, closing laws, a=2 threshold %.4f", t2));
}

Outcome gradient_checks() {
  using namespace histoens::nn;
  Rng rng(5);
  auto var = [&](std::vector<int> shape, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (auto &v : t.data())
      v = static_cast<float>(rng.uniform(-scale, scale));
    return Var(std::move(t), true);
  };
  struct Case {
    std::string name;
    std::function<Var()> fn;
    std::vector<Var> wrt;
  };
  std::vector<Case> cases;
  Var x = var({2, 3, 6, 5}), w3 = var({4, 3, 3, 3}), w1 = var({4, 3, 1, 1}), b = var({4});
  cases.push_back({"conv3x3", [=] { return conv2d(x, w3, b); }, {x, w3, b}});
  cases.push_back({"conv1x1", [=] { return conv2d(x, w1, b); }, {x, w1, b}});
  cases.push_back({"relu", [=] { return relu(x); }, {x}});
  cases.push_back({"sigmoid", [=] { return sigmoid(x); }, {x}});
  cases.push_back({"maxpool2", [=] { return maxpool2(x); }, {x}});
  cases.push_back({"avgpool2", [=] { return avgpool2(x); }, {x}});
  cases.push_back({"upsample2", [=] { return upsample2(x); }, {x}});
  Var y = var({2, 2, 6, 5});
  cases.push_back({"concat", [=] { return concat_channels(x, y); }, {x, y}});
  cases.push_back({"spp", [=] { return spp(x, 3); }, {x}});
  Var f = var({3, 7}), wd = var({4, 7}), bd = var({4});
  cases.push_back({"dense", [=] { return dense(f, wd, bd); }, {f, wd, bd}});
  // Mean-reduced losses are checked on a few elements: per-entry gradients
  // shrink as 1/N while the float32 rounding of the scalar loss does not.
  Var logits = var({1, 4, 1, 2}, 2.0), rows = var({2, 4}, 2.0);
  const std::vector<int> labels{static_cast<int>(rng.uniform_int(0, 3)), static_cast<int>(rng.uniform_int(0, 3))};
  cases.push_back({"softmax_ce", [=] { return softmax_ce(logits, labels); }, {logits}});
  cases.push_back({"softmax_ce rank 2", [=] { return softmax_ce(rows, labels); }, {rows}});
  Var z = var({1, 1, 2, 2}, 2.0);
  Tensor soft({1, 1, 2, 2}), mask({1, 1, 2, 2}, std::vector<float>{1, 0, 1, 1}), weights({1, 1, 2, 2});
  for (std::size_t i = 0; i < soft.size(); ++i) {
    soft[i] = static_cast<float>(rng.uniform01());
    weights[i] = static_cast<float>(rng.uniform01());
  }
  cases.push_back({"binary_logloss", [=] { return binary_logloss(sigmoid(z), soft); }, {z}});
  cases.push_back({"weighted_boundary", [=] { return weighted_boundary_logloss(sigmoid(z), mask, weights); }, {z}});

  Checker ck;
  double worst = 0.0;
  std::string worst_name;
  for (const auto &c : cases) {
    const auto rep = gradcheck(c.fn, c.wrt, {});
    ck.check(rep.passed, c.name + fmt(" error %.3g", rep.max_rel_error));
    if (rep.max_rel_error >= worst) {
      worst = rep.max_rel_error;
      worst_name = c.name;
    }
  }
  Rng init(1);
  const TNet net(TNetSpec{3, 2, 4, 1, 1}, init);
  Tensor input({1, 3, 8, 8});
  for (auto &v : input.data())
    v = static_cast<float>(init.uniform(-1.0, 1.0));
  const auto rep = gradcheck_model(net, input);
  std::size_t one_sided = 0, skipped = 0;
  for (const auto &t : rep.tensors) {
    one_sided += t.one_sided;
    skipped += t.skipped;
  }
  ck.check(rep.passed, fmt("tnet error %.3g", rep.max_rel_error));
  return ck.outcome(std::to_string(cases.size()) + fmt(" layer/loss checks, worst %.2g (", worst) + worst_name +
                    fmt("); T-Net D=2 error %.2g, %g one-sided, %g skipped", rep.max_rel_error,
                        static_cast<double>(one_sided), static_cast<double>(skipped)));
}

Outcome tnet_reduction() {
  using namespace histoens::nn;
  Checker ck;
  std::size_t compared = 0;
  for (int depth : {2, 3, 4}) {
    Rng rng(static_cast<std::uint64_t>(depth));
    const TNet net(TNetSpec{3, depth, 4, 0, 1}, rng);
    const auto &p = net.parameters();
    std::size_t at = 0;
    auto conv = [&](const Var &v, bool act) {
      Var o = conv2d(v, p[at], p[at + 1]);
      at += 2;
      return act ? relu(o) : o;
    };
    Tensor xt({2, 3, 16, 16});
    for (auto &v : xt.data())
      v = static_cast<float>(rng.normal());
    const Var x(xt);
    std::vector<Var> enc;
    Var h = x;
    for (int l = 0; l < depth; ++l) {
      h = conv(conv(l ? maxpool2(h) : h, true), true);
      enc.push_back(h);
    }
    for (int l = depth - 2; l >= 0; --l)
      h = conv(conv(concat_channels(conv(upsample2(h), true), enc[static_cast<std::size_t>(l)]), true), true);
    const Tensor ref = conv(h, false).value();
    const Tensor out = net.forward(x).value();
    ck.check(at == p.size(), "parameter count differs");
    ck.check(out.shape() == ref.shape() &&
                 std::equal(out.data().begin(), out.data().end(), ref.data().begin(),
                            [](float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }),
             "depth " + std::to_string(depth) + " output differs");
    compared += out.size();
  }
  return ck.outcome(std::to_string(compared) + " outputs bit-identical for depths 2-4");
}

Outcome optimizer_schedule() {
  using namespace histoens::nn;
  Checker ck;
  const AdamConfig cfg;
  ck.check(lr_at(cfg, 0) == 0.01 && lr_at(cfg, 20) == 0.005 && lr_at(cfg, 40) == 0.0025, "schedule");
  Rng rng(3);
  Tensor t({64});
  for (auto &v : t.data())
    v = static_cast<float>(rng.uniform(-1.0, 1.0));
  Var w(t, true);
  w.node()->grad_buffer();
  Adam zero({w});
  zero.step(0);
  zero.step(1);
  ck.check(w.value().data().size() == t.size() && std::equal(t.data().begin(), t.data().end(), w.value().data().begin()),
           "zero-gradient step moved a weight");
  Tensor &g = w.node()->grad_buffer();
  for (auto &v : g.data())
    v = static_cast<float>(rng.uniform(-2.0, 2.0));
  Adam adam({w});
  adam.step(0);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double step = static_cast<double>(t[i]) - w.value()[i];
    const double bound = 0.01 * cfg.epsilon / std::abs(g[i]) + 1e-7;
    const double err = std::abs(step - 0.01 * (g[i] > 0 ? 1.0 : -1.0));
    ck.check(err <= bound, "first step off");
    worst = std::max(worst, err);
  }
  return ck.outcome(fmt("lr 0.01/0.005/0.0025; first-step deviation %.2g", worst));
}

Outcome feature_contract() {
  Checker ck;
  Rng rng(9);
  PredMatrix p(176, 4);
  for (int r = 0; r < 176; ++r) {
    std::array<double, 4> e{};
    double s = 0;
    for (auto &v : e)
      s += v = std::exp(2.0 * rng.normal());
    for (int c = 0; c < 4; ++c)
      p.set(r, c, static_cast<float>(e[static_cast<std::size_t>(c)] / s));
  }
  const auto f = stacking::extract_features(p);
  ck.check(f.values.size() == 40 && f.names.size() == 40, "feature count " + std::to_string(f.values.size()));
  ck.check(std::set<std::string>(f.names.begin(), f.names.end()).size() == f.names.size(), "duplicate names");
  double argmax_sum = 0;
  for (int k = 0; k < 4; ++k)
    argmax_sum += f.values[static_cast<std::size_t>(12 + k)];
  ck.check(argmax_sum == 176.0, "argmax counts sum to " + std::to_string(argmax_sum));
  for (std::size_t k = 0; k < 4; ++k) {
    const double mn = f.values[3 * k], mx = f.values[3 * k + 1];
    const double *q = &f.values[16 + 4 * k];
    ck.check(mn <= q[0] && q[0] <= q[1] && q[1] <= q[2] && q[2] <= q[3] && q[3] <= mx, "percentile chain");
  }
  const auto single = stacking::extract_features(PredMatrix(5, 1, 0.5f));
  ck.check(single.values.size() == 9, "single-column count");
  return ck.outcome("40 named features, argmax counts sum to P=176, percentiles ordered");
}

// Four pseudo-models over the same labeled images; the last one carries no
// signal.
std::vector<stacking::FeatureTable> pseudo_models(std::uint64_t seed) {
  const std::vector<double> signals{0.9, 0.7, 0.5, 0.0};
  const int per_class = 15, patches = 12;
  Rng rng(seed);
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < per_class; ++i) {
      labels.push_back(k);
      ids.push_back("img" + std::to_string(labels.size()));
    }
  std::vector<stacking::FeatureTable> out;
  for (std::size_t m = 0; m < signals.size(); ++m) {
    std::vector<stacking::FeatureVector> rows;
    for (int label : labels) {
      PredMatrix p(patches, 4);
      for (int r = 0; r < patches; ++r) {
        std::array<double, 4> e{};
        double s = 0;
        for (int c = 0; c < 4; ++c)
          s += e[static_cast<std::size_t>(c)] = std::exp(rng.normal() + (c == label ? signals[m] : 0.0));
        for (int c = 0; c < 4; ++c)
          p.set(r, c, static_cast<float>(e[static_cast<std::size_t>(c)] / s));
      }
      rows.push_back(stacking::extract_features(p, "m" + std::to_string(m) + "_"));
    }
    out.push_back(stacking::make_table(ids, rows, labels));
  }
  return out;
}

Outcome stacking_end_to_end() {
  Checker ck;
  const auto tables = pseudo_models(11);
  const stacking::CvPlan plan{10, 20, 5};
  stacking::GbtParams params;
  params.rounds = 10;
  params.max_depth = 2;
  const auto a = stacking::cv_score(tables[0], plan, params);
  const auto b = stacking::cv_score(tables[0], plan, params);
  ck.check(a.fold_scores.size() == 200, "fold evaluations " + std::to_string(a.fold_scores.size()));
  ck.check(a.fold_scores == b.fold_scores, "cv not deterministic");

  const auto sel = stacking::greedy_select(tables, plan, params);
  const bool noise_removed = std::find(sel.removed.begin(), sel.removed.end(), 3u) != sel.removed.end();
  ck.check(noise_removed, "noise model kept");
  for (std::size_t i = 1; i < sel.trace.size(); ++i)
    ck.check(sel.trace[i] >= sel.trace[i - 1], "trace decreased");
  double best = 0.0;
  for (unsigned mask = 1; mask < 16; ++mask) {
    std::vector<std::size_t> which;
    for (std::size_t m = 0; m < 4; ++m)
      if (mask >> m & 1u)
        which.push_back(m);
    best = std::max(best, stacking::cv_score(stacking::subset_table(tables, which), plan, params).mean);
  }
  ck.check(sel.trace.back() >= best - 0.02, fmt("greedy %.4f vs exhaustive %.4f", sel.trace.back(), best));
  std::string kept;
  for (std::size_t k : sel.kept)
    kept += (kept.empty() ? "" : ",") + std::to_string(k);
  return ck.outcome("kept {" + kept + "}, trace " + fmt("%.4f -> %.4f, exhaustive best %.4f", sel.trace.front(),
                                                       sel.trace.back(), best));
}

Outcome desk_training() {
  using namespace histoens::nn;
  Checker ck;
  SynthSpec spec;
  spec.height = spec.width = 256;
  spec.priors = {0.8, 0.0, 0.0, 0.2};
  spec.min_blobs = spec.max_blobs = 2;
  Rng data(42);
  const SynthSlide slide = synth_slide(spec, data);
  LabelMask truth(256, 256);
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c)
      truth.set(r, c, slide.mask.at(r, c) > 0 ? 1 : 0);

  SegTrainConfig cfg;
  cfg.epochs = 20;
  cfg.steps_per_epoch = 10; // 200 steps
  cfg.batch = 1;
  cfg.patch = 64;
  Rng init(1), order(2);
  const TNet net(TNetSpec{3, 2, 8, 1, 1}, init);
  train_segmentation(net, std::span(&slide.image, 1), std::span(&slide.mask, 1), cfg, order);
  const LabelMask pred = postprocess_chain(predict_segmentation(net, slide.image));
  const double d = dice_abnormal(pred, truth);
  ck.check(d >= 0.6, fmt("abnormal Dice %.4f", d));

  cfg.loss = SegLoss::WeightedBoundary;
  cfg.boundary_ramp = 8.0;
  Rng init2(3), order2(4);
  const TNet net2(TNetSpec{3, 2, 8, 1, 1}, init2);
  const auto h = train_segmentation(net2, std::span(&slide.image, 1), std::span(&slide.mask, 1), cfg, order2);
  ck.check(h.epoch_loss.back() < h.epoch_loss.front(), "weighted-boundary loss did not drop");
  return ck.outcome(fmt("abnormal Dice %.4f after 200 steps; boundary loss %.4f -> %.4f", d, h.epoch_loss.front(),
                        h.epoch_loss.back()));
}

Outcome directional_demo() {
  const demo::DemoConfig cfg;
  const demo::DemoReport rep = demo::run_demo(cfg);
  const auto &composed = rep.row(demo::kEnsembleRow), &shifted = rep.row(demo::kShiftedRow);
  const bool ok = shifted.score.bach >= composed.score.bach;
  return {ok, fmt("seed 7: shifted %.4f vs composed %.4f", shifted.score.bach, composed.score.bach) +
                  fmt(" (either-gate diagnostic: shifted %.4f vs composed %.4f)", shifted.bach_either,
                      composed.bach_either)};
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char *name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "grid arithmetic", 1, grid_arithmetic},
      {2, "metric oracles", 5, metric_oracles},
      {3, "blending truth tables", 1, blending_truth_table},
      {4, "postprocessing laws", 10, postprocessing},
      {5, "gradient checks", 60, gradient_checks},
      {6, "T-Net reduction to U-Net", 5, tnet_reduction},
      {7, "optimizer schedule", 1, optimizer_schedule},
      {8, "feature contract", 1, feature_contract},
      {9, "stacking end to end", 120, stacking_end_to_end},
      {10, "desk-scale training", 300, desk_training},
      {11, "shifted vs composed BachScore", 300, directional_demo},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" | over time budget of %.0f s", c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s %2d %-30s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
