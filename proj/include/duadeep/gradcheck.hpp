// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "duadeep/model.hpp"
#include "duadeep/tape.hpp"

namespace duadeep::gradcheck {

struct Options {
  double step = 1e-5;            // finite-difference step h
  double tolerance = 1e-6;       // max relative error per group
  double grad_floor = 1e-8;      // elements with smaller gradients are not compared
  double kink_threshold = 1e-8;  // 2-point vs 4-point disagreement that flags a kink
  int refinements = 3;           // step shrinks by 16 per retry once a kink is flagged
};

struct GroupResult {
  std::string group;
  std::size_t elements = 0;
  std::size_t compared = 0;
  std::size_t kinked = 0;  // elements whose difference quotient straddled a kink at every step
  double max_rel_err = 0.0;
  std::string worst;  // "tensor[index]" of the largest error
  bool passed = true;
};

struct Report {
  std::vector<GroupResult> groups;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool passed() const;
  std::string table() const;
};

/// Parameter group of a tensor name: per-head suffixes (".h0", ".h1", ...)
/// are folded so all heads of one projection form a single group.
std::string group_of(const std::string& tensor_name);

/// |a - n| / max(|a|, |n|), 0 when both are 0.
double relative_error(double analytic, double numeric);

struct Difference {
  long double value = 0;  // fourth-order estimate
  bool kinked = false;
};

/// Fourth-order central difference of f around offset 0. A kink (ReLU)
/// inside [-2h, 2h] makes the second- and fourth-order estimates disagree;
/// the step then shrinks until they agree or retries run out.
template <typename F>
Difference central_difference(F&& f_at_offset, long double h, long double kink_threshold, int refinements) {
  Difference d;
  for (int attempt = 0;; ++attempt, h /= 16) {
    const long double f2 = f_at_offset(2 * h), f1 = f_at_offset(h);
    const long double m1 = f_at_offset(-h), m2 = f_at_offset(-2 * h);
    const long double fourth = (-f2 + 8 * f1 - 8 * m1 + m2) / (12 * h);
    const long double second = (f1 - m1) / (2 * h);
    d.value = fourth;
    d.kinked = std::abs(fourth - second) > kink_threshold * std::max(1.0L, std::abs(fourth));
    if (!d.kinked || attempt >= refinements) return d;
  }
}

/// Compares reverse-mode gradients of a scalar loss at 64-bit precision with
/// finite differences evaluated in extended precision.
///
/// `loss` is a generic callable `(Tape<T>&, const ModelParams<T>&) -> Var<T>`
/// invoked with T = double for the analytic pass and T = long double for the
/// numeric oracle.
template <typename LossFn>
Report check_model_gradients(const model::ModelParams<double>& params, LossFn&& loss, const Options& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();

  model::ModelParams<double> analytic = params;
  analytic.set_requires_grad(true);
  analytic.zero_grad();
  {
    Tape<double> tape;
    backward(loss(tape, static_cast<const model::ModelParams<double>&>(analytic)));
  }
  std::vector<std::string> names;
  std::vector<const Tensor<double>*> grads;
  analytic.visit([&](const std::string& name, const Tensor<double>& t) {
    names.push_back(name);
    grads.push_back(&t);
  });

  model::ModelParams<long double> probe = params.template cast<long double>();
  std::vector<Tensor<long double>*> slots;
  probe.visit([&](const std::string&, Tensor<long double>& t) { slots.push_back(&t); });

  std::map<std::string, GroupResult> by_group;
  std::vector<std::string> group_order;
  const long double h = static_cast<long double>(opt.step);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const std::string group = group_of(names[k]);
    auto [it, fresh] = by_group.try_emplace(group);
    if (fresh) {
      it->second.group = group;
      group_order.push_back(group);
    }
    GroupResult& g = it->second;
    Tensor<long double>& t = *slots[k];
    const std::span<const double> a_grad = grads[k]->grad();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const long double x0 = t[i];
      const Difference numeric = central_difference(
          [&](long double offset) {
            t[i] = x0 + offset;
            Tape<long double> tape;
            return loss(tape, static_cast<const model::ModelParams<long double>&>(probe)).value().item();
          },
          h, static_cast<long double>(opt.kink_threshold), opt.refinements);
      t[i] = x0;
      ++g.elements;
      if (numeric.kinked) {
        ++g.kinked;
        continue;
      }
      const double a = a_grad[i], n = static_cast<double>(numeric.value);
      if (std::max(std::abs(a), std::abs(n)) <= opt.grad_floor) continue;
      ++g.compared;
      const double err = relative_error(a, n);
      if (err > g.max_rel_err || g.worst.empty()) {
        g.max_rel_err = err;
        g.worst = names[k] + "[" + std::to_string(i) + "]";
      }
    }
  }

  Report report;
  report.tolerance = opt.tolerance;
  for (const std::string& name : group_order) {
    GroupResult g = by_group.at(name);
    g.passed = g.compared > 0 && g.max_rel_err < opt.tolerance;
    report.groups.push_back(std::move(g));
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct ToyProblem {
  model::ModelConfig config;
  std::size_t pairs = 2;
  std::size_t max_len = 8;
  std::uint64_t seed = 0;
};

/// d_e = 16, two heads, one encoder layer, 8-filter convolutions of width 3
/// and 5, one 8-unit hidden head layer.
ToyProblem default_toy_problem(std::uint64_t seed = 0, model::Variant variant = model::Variant::kDuaDeep);

/// Random embeddings of random lengths (padded to a common length so the
/// masking path is exercised), random standardized targets, mean squared
/// error loss, and a gradient check of every parameter group.
Report run_model_gradcheck(const ToyProblem& problem, const Options& opt = {});

}  // namespace duadeep::gradcheck
