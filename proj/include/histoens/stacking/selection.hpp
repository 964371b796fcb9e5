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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "histoens/rng.hpp"
#include "histoens/stacking/gbt.hpp"

namespace histoens::stacking {

struct CvPlan {
  int folds = 10;
  int shuffles = 20;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Stratified split of 0..n-1: each class is shuffled and dealt round-robin,
/// continuing the deal where the previous class stopped.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int folds, Rng &rng);

struct CvResult {
  double mean = 0.0;
  double sd = 0.0; ///< sample standard deviation of the fold scores
  /// Accuracy of every held-out fold, shuffle-major.
  std::vector<double> fold_scores;
};

/// Repeated stratified k-fold accuracy of a GBT on `table`. Throws when a
/// class has fewer members than folds.
CvResult cv_score(const FeatureTable &table, const CvPlan &plan, const GbtParams &params = {});

struct Selection {
  std::vector<std::size_t> kept;    ///< indices into the model list, ascending
  std::vector<std::size_t> removed; ///< in removal order
  std::vector<double> trace;        ///< CV score of the full set, then after each removal
};

/// Backward elimination: each step scores every single-model removal and
/// applies the best one if it strictly improves the CV score.
Selection greedy_select(const std::vector<FeatureTable> &per_model, const CvPlan &plan,
                        const GbtParams &params = {});

/// Joined table of the listed models.
FeatureTable subset_table(const std::vector<FeatureTable> &per_model, std::span<const std::size_t> which);

} // namespace histoens::stacking
