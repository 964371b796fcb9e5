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

#include "histoens/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "histoens/nn/ops.hpp"
#include "histoens/rng.hpp"

namespace histoens::nn {

namespace {

struct Probe {
  double value;
  std::uint64_t pattern;
};

Probe evaluate(const std::function<Var()> &fn, const Tensor &coeffs) {
  begin_pattern_trace();
  Var out = fn();
  const std::uint64_t pattern = end_pattern_trace();
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    acc += static_cast<double>(coeffs[i]) * out.value()[i];
  return {acc, pattern};
}

} // namespace

GradcheckReport gradcheck(const std::function<Var()> &fn, const std::vector<Var> &wrt,
                          const std::vector<std::string> &names, const GradcheckOptions &options) {
  for (Var v : wrt)
    v.zero_grad();
  Var out = fn();
  Tensor coeffs(out.shape(), 1.0f);
  if (coeffs.size() > 1) {
    Rng rng(options.seed);
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      coeffs[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
  backward(out, coeffs);
  const Probe base = evaluate(fn, coeffs);
  std::vector<Tensor> analytic;
  for (const Var &v : wrt)
    analytic.push_back(v.grad().size() ? v.grad() : Tensor(v.shape(), 0.0f));

  GradcheckReport report;
  for (std::size_t t = 0; t < wrt.size(); ++t) {
    Var v = wrt[t];
    TensorCheck tc;
    tc.name = t < names.size() ? names[t] : "tensor" + std::to_string(t);
    const std::size_t n = v.value().size();
    const std::size_t stride =
        options.max_entries == 0 || n <= options.max_entries ? 1 : (n + options.max_entries - 1) / options.max_entries;
    for (std::size_t i = 0; i < n; i += stride) {
      const float saved = v.value()[i];
      const float hi = static_cast<float>(saved + options.step);
      const float lo = static_cast<float>(saved - options.step);
      v.value()[i] = hi;
      const Probe plus = evaluate(fn, coeffs);
      v.value()[i] = lo;
      const Probe minus = evaluate(fn, coeffs);
      v.value()[i] = saved;
      const bool plus_ok = plus.pattern == base.pattern, minus_ok = minus.pattern == base.pattern;
      if (!plus_ok && !minus_ok) {
        ++tc.skipped;
        continue;
      }
      // Divide by the steps actually representable in float32. When one
      // side crosses a switch, fall back to the one-sided difference on the
      // other.
      double numeric;
      if (plus_ok && minus_ok) {
        numeric = (plus.value - minus.value) / (static_cast<double>(hi) - static_cast<double>(lo));
      } else if (plus_ok) {
        ++tc.one_sided;
        numeric = (plus.value - base.value) / (static_cast<double>(hi) - static_cast<double>(saved));
      } else {
        ++tc.one_sided;
        numeric = (base.value - minus.value) / (static_cast<double>(saved) - static_cast<double>(lo));
      }
      const double a = analytic[t][i];
      const double err = std::abs(a - numeric);
      tc.scale = std::max({tc.scale, std::abs(a), std::abs(numeric)});
      if (tc.checked == 0 || err > tc.max_abs_error) {
        tc.max_abs_error = err;
        tc.worst_index = i;
        tc.worst_analytic = a;
        tc.worst_numeric = numeric;
      }
      ++tc.checked;
    }
    if (tc.checked == 0 && n > 0)
      report.passed = false;
    report.scale = std::max(report.scale, tc.scale);
    report.tensors.push_back(tc);
  }
  for (TensorCheck &tc : report.tensors) {
    tc.rel_error = report.scale > 0.0 ? tc.max_abs_error / report.scale : 0.0;
    report.max_rel_error = std::max(report.max_rel_error, tc.rel_error);
  }
  report.passed = report.passed && report.max_rel_error < options.tolerance;
  return report;
}

GradcheckReport gradcheck_model(const Model &model, const Tensor &input, const GradcheckOptions &options) {
  Var x(input, true);
  std::vector<Var> wrt = model.parameters();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < wrt.size(); ++i)
    names.push_back("param" + std::to_string(i));
  wrt.push_back(x);
  names.emplace_back("input");
  return gradcheck([&] { return model.forward(x); }, wrt, names, options);
}

} // namespace histoens::nn
