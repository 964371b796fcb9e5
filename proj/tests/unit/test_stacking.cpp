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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "histoens/metrics.hpp"
#include "histoens/stacking/features.hpp"
#include "histoens/stacking/gbt.hpp"
#include "histoens/stacking/selection.hpp"

using namespace histoens;
using namespace histoens::stacking;

namespace {

PredMatrix random_softmax(int rows, int cols, Rng &rng) {
  PredMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    std::vector<double> e(static_cast<std::size_t>(cols));
    double s = 0;
    for (auto &v : e)
      s += v = std::exp(2.0 * rng.normal());
    for (int c = 0; c < cols; ++c)
      m.set(r, c, static_cast<float>(e[static_cast<std::size_t>(c)] / s));
  }
  return m;
}

// Patch predictions of a pseudo-model: the true class's logit is raised by
// `signal` on every patch.
PredMatrix pseudo_predictions(int label, double signal, int patches, Rng &rng) {
  PredMatrix m(patches, 4);
  for (int r = 0; r < patches; ++r) {
    std::array<double, 4> e{};
    double s = 0;
    for (int c = 0; c < 4; ++c)
      s += e[static_cast<std::size_t>(c)] = std::exp(rng.normal() + (c == label ? signal : 0.0));
    for (int c = 0; c < 4; ++c)
      m.set(r, c, static_cast<float>(e[static_cast<std::size_t>(c)] / s));
  }
  return m;
}

std::vector<FeatureTable> pseudo_models(const std::vector<double> &signals, int per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < per_class; ++i) {
      labels.push_back(k);
      ids.push_back("img" + std::to_string(labels.size()));
    }
  std::vector<FeatureTable> out;
  for (std::size_t m = 0; m < signals.size(); ++m) {
    std::vector<FeatureVector> rows;
    for (int label : labels)
      rows.push_back(extract_features(pseudo_predictions(label, signals[m], 12, rng), "m" + std::to_string(m) + "_"));
    out.push_back(make_table(ids, rows, labels));
  }
  return out;
}

} // namespace

TEST(Features, MulticlassLayout) {
  Rng rng(1);
  const PredMatrix p = random_softmax(176, 4, rng);
  const FeatureVector f = extract_features(p, "resnet_");
  ASSERT_EQ(f.values.size(), 40u);
  ASSERT_EQ(f.names, feature_names(4, "resnet_"));
  EXPECT_EQ(std::set<std::string>(f.names.begin(), f.names.end()).size(), 40u);
  EXPECT_EQ(f.names[0], "resnet_c0_min");
  double argmax_total = 0;
  for (int k = 0; k < 4; ++k)
    argmax_total += f.values[static_cast<std::size_t>(12 + k)];
  EXPECT_EQ(argmax_total, 176.0);
  for (int k = 0; k < 4; ++k) {
    const auto at = [&](std::size_t i) { return f.values[i]; };
    const std::size_t base = 16 + 4 * static_cast<std::size_t>(k);
    const double mn = at(3 * static_cast<std::size_t>(k)), mx = at(3 * static_cast<std::size_t>(k) + 1);
    EXPECT_LE(mn, at(base));
    EXPECT_LE(at(base), at(base + 1));
    EXPECT_LE(at(base + 1), at(base + 2));
    EXPECT_LE(at(base + 2), at(base + 3));
    EXPECT_LE(at(base + 3), mx);
    const double gt15 = at(32 + 2 * static_cast<std::size_t>(k)), gt25 = at(33 + 2 * static_cast<std::size_t>(k));
    EXPECT_LE(gt25, gt15);
    EXPECT_LE(gt15, 176.0);
  }
}

TEST(Features, HandComputedColumn) {
  // One column, five patches: 0.1 0.2 0.3 0.4 1.0.
  const PredMatrix p(5, 1, std::vector<float>{0.4f, 0.1f, 1.0f, 0.3f, 0.2f});
  const FeatureVector f = extract_features(p);
  ASSERT_EQ(f.values.size(), 9u);
  EXPECT_NEAR(f.values[0], 0.1, 1e-7);
  EXPECT_NEAR(f.values[1], 1.0, 1e-7);
  EXPECT_NEAR(f.values[2], 0.4, 1e-7);
  EXPECT_NEAR(f.values[3], 0.14, 1e-7); // p10 at position 0.4
  EXPECT_NEAR(f.values[4], 0.2, 1e-7);  // p25 at position 1
  EXPECT_NEAR(f.values[5], 0.4, 1e-7);  // p75 at position 3
  EXPECT_NEAR(f.values[6], 0.76, 1e-7); // p90 at position 3.6
  EXPECT_EQ(f.values[7], 4.0);          // > 0.15
  EXPECT_EQ(f.values[8], 3.0);          // > 0.25
}

TEST(Features, ArgmaxTiesGoToLowestClass) {
  const PredMatrix p(2, 2, std::vector<float>{0.5f, 0.5f, 0.3f, 0.7f});
  const FeatureVector f = extract_features(p);
  EXPECT_EQ(f.values[6], 1.0);
  EXPECT_EQ(f.values[7], 1.0);
}

TEST(Features, TableCsvRoundTripAndJoin) {
  const auto tables = pseudo_models({1.0, 0.5}, 3, 4);
  const FeatureTable a = table_from_csv(table_to_csv(tables[0]));
  EXPECT_EQ(a.ids, tables[0].ids);
  EXPECT_EQ(a.columns, tables[0].columns);
  EXPECT_EQ(a.values, tables[0].values);
  EXPECT_EQ(a.labels, tables[0].labels);
  const FeatureTable *ptrs[] = {&tables[0], &tables[1]};
  const FeatureTable j = join_tables(ptrs);
  EXPECT_EQ(j.cols(), 80u);
  EXPECT_EQ(j.at(2, 41), tables[1].at(2, 1));
  const FeatureTable *dup[] = {&tables[0], &tables[0]};
  EXPECT_THROW(join_tables(dup), ValidationError);
  EXPECT_THROW(table_from_csv("image,a\nx,notanumber\n"), ValidationError);
}

TEST(Gbt, FitsSeparableData) {
  FeatureTable t;
  t.columns = {"x", "noise"};
  Rng rng(2);
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    t.ids.push_back("r" + std::to_string(i));
    t.values.push_back(label + rng.uniform(-0.4, 0.4));
    t.values.push_back(rng.uniform01());
    t.labels.push_back(label * 2); // classes {0, 2}
  }
  const GbtModel m = gbt_train(t);
  EXPECT_EQ(m.classes, (std::vector<int>{0, 2}));
  const auto pred = m.predict(t);
  EXPECT_EQ(accuracy(pred, t.labels), 1.0);
  for (const auto &row : m.predict_proba(t)) {
    EXPECT_NEAR(row[0] + row[1], 1.0, 1e-12);
  }
  GbtParams few;
  few.rounds = 2;
  EXPECT_GT(gbt_train(t, few).logistic_loss(t), m.logistic_loss(t));
}

TEST(Gbt, ColumnOrderDoesNotMatter) {
  const auto tables = pseudo_models({0.8}, 5, 3);
  const FeatureTable &t = tables[0];
  FeatureTable rev = t;
  std::reverse(rev.columns.begin(), rev.columns.end());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      rev.values[r * t.cols() + c] = t.at(r, t.cols() - 1 - c);
  EXPECT_EQ(gbt_to_json(gbt_train(t)), gbt_to_json(gbt_train(rev)));
}

TEST(Gbt, JsonRoundTrip) {
  const auto tables = pseudo_models({0.8}, 5, 5);
  const GbtModel m = gbt_train(tables[0]);
  const GbtModel back = gbt_from_json(gbt_to_json(m));
  EXPECT_EQ(back.predict_proba(tables[0]), m.predict_proba(tables[0]));
  EXPECT_THROW(gbt_from_json("{\"format\":\"other\"}"), ValidationError);
  EXPECT_THROW(gbt_from_json("not json"), ValidationError);
}

TEST(Gbt, ValidatesInput) {
  FeatureTable t;
  t.columns = {"x"};
  t.ids = {"a", "b"};
  t.values = {1, 2};
  EXPECT_THROW(gbt_train(t), ValidationError); // no labels
  t.labels = {1, 1};
  EXPECT_THROW(gbt_train(t), ValidationError); // one class
  GbtParams p;
  p.max_depth = 0;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Cv, FoldsPartitionAndStratify) {
  std::vector<int> labels;
  for (int i = 0; i < 53; ++i)
    labels.push_back(i % 7 < 4 ? 0 : (i % 7 < 6 ? 1 : 2));
  Rng rng(6);
  const auto folds = stratified_folds(labels, 5, rng);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<int> seen(labels.size(), 0);
  for (const auto &f : folds)
    for (std::size_t i : f)
      ++seen[i];
  for (int s : seen)
    EXPECT_EQ(s, 1);
  for (int k = 0; k < 3; ++k) {
    int lo = 1 << 30, hi = 0;
    for (const auto &f : folds) {
      int n = 0;
      for (std::size_t i : f)
        n += labels[i] == k;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1) << "class " << k;
  }
  std::size_t smallest = labels.size(), largest = 0;
  for (const auto &f : folds) {
    smallest = std::min(smallest, f.size());
    largest = std::max(largest, f.size());
  }
  EXPECT_LE(largest - smallest, 1u);
  Rng small(1);
  EXPECT_THROW(stratified_folds(std::vector<int>{0, 0, 1}, 2, small), ValidationError);
}

TEST(Cv, DeterministicPerSeed) {
  const auto tables = pseudo_models({0.6}, 10, 7);
  GbtParams p;
  p.rounds = 5;
  const CvPlan plan{10, 20, 3};
  const CvResult a = cv_score(tables[0], plan, p), b = cv_score(tables[0], plan, p);
  EXPECT_EQ(a.fold_scores.size(), 200u);
  EXPECT_EQ(a.fold_scores, b.fold_scores);
  const CvResult c = cv_score(tables[0], CvPlan{10, 20, 4}, p);
  EXPECT_NE(a.fold_scores, c.fold_scores);
  double s = 0;
  for (double v : a.fold_scores)
    s += v;
  EXPECT_NEAR(a.mean, s / 200.0, 1e-12);
  EXPECT_GT(a.sd, 0.0);
}

TEST(Selection, GreedyNearExhaustive) {
  const auto tables = pseudo_models({0.9, 0.7, 0.5, 0.0}, 10, 8);
  GbtParams p;
  p.rounds = 8;
  p.max_depth = 2;
  const CvPlan plan{5, 3, 1};
  const Selection sel = greedy_select(tables, plan, p);
  for (std::size_t i = 1; i < sel.trace.size(); ++i)
    EXPECT_GT(sel.trace[i], sel.trace[i - 1]);
  double best = 0;
  for (unsigned mask = 1; mask < 16; ++mask) {
    std::vector<std::size_t> which;
    for (std::size_t m = 0; m < 4; ++m)
      if (mask >> m & 1u)
        which.push_back(m);
    best = std::max(best, cv_score(subset_table(tables, which), plan, p).mean);
  }
  EXPECT_GE(sel.trace.back(), best - 0.02);
  EXPECT_EQ(sel.kept.size() + sel.removed.size(), 4u);
}
