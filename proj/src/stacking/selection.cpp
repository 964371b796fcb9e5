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

#include "histoens/stacking/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "histoens/error.hpp"

namespace histoens::stacking {

void CvPlan::validate() const {
  require(folds >= 2, "cv: folds must be >= 2");
  require(shuffles >= 1, "cv: shuffles must be >= 1");
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int folds, Rng &rng) {
  require(folds >= 2, "cv: folds must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);
  for (const auto &[cls, members] : by_class)
    require(members.size() >= static_cast<std::size_t>(folds),
            "cv: class " + std::to_string(cls) + " has " + std::to_string(members.size()) + " members, fewer than " +
                std::to_string(folds) + " folds");
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  std::size_t deal = 0;
  for (auto &[cls, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t i : members)
      out[deal++ % out.size()].push_back(i);
  }
  for (auto &f : out)
    std::sort(f.begin(), f.end());
  return out;
}

namespace {

FeatureTable take_rows(const FeatureTable &t, const std::vector<std::size_t> &rows) {
  FeatureTable out;
  out.columns = t.columns;
  for (std::size_t r : rows) {
    out.ids.push_back(t.ids[r]);
    const auto row = t.row(r);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.labels.push_back(t.labels[r]);
  }
  return out;
}

} // namespace

CvResult cv_score(const FeatureTable &table, const CvPlan &plan, const GbtParams &params) {
  plan.validate();
  params.validate();
  table.validate();
  require(table.has_labels(), "cv_score: table has no labels");

  struct Task {
    std::vector<std::size_t> train, test;
  };
  std::vector<Task> tasks;
  Rng rng(plan.seed);
  for (int s = 0; s < plan.shuffles; ++s) {
    Rng shuffle_rng = rng.fork();
    const auto folds = stratified_folds(table.labels, plan.folds, shuffle_rng);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      Task t;
      t.test = folds[f];
      for (std::size_t g = 0; g < folds.size(); ++g)
        if (g != f)
          t.train.insert(t.train.end(), folds[g].begin(), folds[g].end());
      std::sort(t.train.begin(), t.train.end());
      tasks.push_back(std::move(t));
    }
  }

  CvResult result;
  result.fold_scores.assign(tasks.size(), 0.0);
  const auto n_tasks = static_cast<std::ptrdiff_t>(tasks.size());
  // Each task writes only its own slot, so the result is thread-count
  // independent.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n_tasks; ++i) {
    const Task &t = tasks[static_cast<std::size_t>(i)];
    const FeatureTable test = take_rows(table, t.test);
    const GbtModel model = gbt_train(take_rows(table, t.train), params);
    const auto pred = model.predict(test);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < pred.size(); ++r)
      hits += pred[r] == test.labels[r] ? 1 : 0;
    result.fold_scores[static_cast<std::size_t>(i)] = static_cast<double>(hits) / static_cast<double>(pred.size());
  }

  double sum = 0.0;
  for (double s : result.fold_scores)
    sum += s;
  result.mean = sum / static_cast<double>(result.fold_scores.size());
  double ss = 0.0;
  for (double s : result.fold_scores)
    ss += (s - result.mean) * (s - result.mean);
  result.sd = result.fold_scores.size() > 1 ? std::sqrt(ss / static_cast<double>(result.fold_scores.size() - 1)) : 0.0;
  return result;
}

FeatureTable subset_table(const std::vector<FeatureTable> &per_model, std::span<const std::size_t> which) {
  std::vector<const FeatureTable *> parts;
  for (std::size_t m : which) {
    require(m < per_model.size(), "subset_table: model index out of range");
    parts.push_back(&per_model[m]);
  }
  return join_tables(parts);
}

Selection greedy_select(const std::vector<FeatureTable> &per_model, const CvPlan &plan, const GbtParams &params) {
  require(!per_model.empty(), "greedy_select: no models");
  Selection sel;
  for (std::size_t m = 0; m < per_model.size(); ++m)
    sel.kept.push_back(m);
  double current = cv_score(subset_table(per_model, sel.kept), plan, params).mean;
  sel.trace.push_back(current);
  while (sel.kept.size() > 1) {
    double best = current;
    std::size_t best_pos = sel.kept.size();
    for (std::size_t pos = 0; pos < sel.kept.size(); ++pos) {
      std::vector<std::size_t> trial = sel.kept;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(pos));
      const double score = cv_score(subset_table(per_model, trial), plan, params).mean;
      if (score > best) {
        best = score;
        best_pos = pos;
      }
    }
    if (best_pos == sel.kept.size())
      break;
    sel.removed.push_back(sel.kept[best_pos]);
    sel.kept.erase(sel.kept.begin() + static_cast<std::ptrdiff_t>(best_pos));
    current = best;
    sel.trace.push_back(current);
  }
  return sel;
}

} // namespace histoens::stacking
