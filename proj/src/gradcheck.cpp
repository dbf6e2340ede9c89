// SPDX-FileCopyrightText: 2026 DuaDeep contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "duadeep/gradcheck.hpp"

#include <cstdio>
#include <regex>

#include "duadeep/ops.hpp"
#include "duadeep/rng.hpp"

namespace duadeep::gradcheck {

bool Report::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupResult& g) { return g.passed; });
}

std::string Report::table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-34s %8s %8s %6s %12s  %s\n", "group", "elements", "compared", "kinked",
                "max_rel_err", "status");
  out += line;
  for (const GroupResult& g : groups) {
    std::snprintf(line, sizeof line, "%-34s %8zu %8zu %6zu %12.3e  %s\n", g.group.c_str(), g.elements, g.compared,
                  g.kinked, g.max_rel_err, g.passed ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof line, "tolerance %.1e, %.2f s, %s\n", tolerance, seconds, passed() ? "PASS" : "FAIL");
  out += line;
  return out;
}

std::string group_of(const std::string& tensor_name) {
  static const std::regex head_suffix(R"(\.h[0-9]+$)");
  return std::regex_replace(tensor_name, head_suffix, "");
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale == 0.0 ? 0.0 : std::abs(analytic - numeric) / scale;
}

ToyProblem default_toy_problem(std::uint64_t seed, model::Variant variant) {
  ToyProblem p;
  p.config.d_e = 16;
  p.config.n_heads = 2;
  p.config.n_layers = 1;
  p.config.d_ff = 0;
  p.config.conv1 = {8, 3};
  p.config.conv2 = {8, 5};
  p.config.head_dims = {8};
  p.config.variant = variant;
  p.config.seed = seed;
  p.seed = seed;
  return p;
}

Report run_model_gradcheck(const ToyProblem& problem, const Options& opt) {
  problem.config.validate();
  Rng rng(mix64(problem.seed ^ 0x67726164636865ULL));
  const std::size_t d = problem.config.d_e;
  auto random_matrix = [&](std::size_t rows) {
    Tensor<double> t({rows, d});
    for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
    return t;
  };
  struct Pair {
    Tensor<double> antigen, antibody;
    double target;
  };
  std::vector<Pair> pairs;
  std::size_t pad_ag = 0, pad_ab = 0;
  for (std::size_t i = 0; i < problem.pairs; ++i) {
    const std::size_t la = 2 + rng.below(problem.max_len - 1);
    const std::size_t lb = 2 + rng.below(problem.max_len - 1);
    pad_ag = std::max(pad_ag, la);
    pad_ab = std::max(pad_ab, lb);
    pairs.push_back({random_matrix(la), random_matrix(lb), rng.uniform(-1.0, 1.0)});
  }

  const model::ModelParams<double> params = model::init_params<double>(problem.config);
  auto loss = [&](auto& tape, const auto& p) {
    using T = typename std::remove_cvref_t<decltype(p.head.b_out)>::value_type;
    std::vector<Var<T>> preds;
    Tensor<T> targets({pairs.size()});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto ag = model::StreamInput<T>::from(pairs[i].antigen, pad_ag);
      const auto ab = model::StreamInput<T>::from(pairs[i].antibody, pad_ab);
      preds.push_back(model::model_forward(tape, ag, ab, p));
      targets[i] = static_cast<T>(pairs[i].target);
    }
    return ops::mse_loss(ops::concat_last(preds), targets);
  };
  return check_model_gradients(params, loss, opt);
}

}  // namespace duadeep::gradcheck
