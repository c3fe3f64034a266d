/*
 * SPDX-FileCopyrightText: Copyright (c) 2026, The seqforge Authors.
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "seqforge/model.hpp"

namespace seqforge::testing {

enum class Stencil { Central2, Central4 };

struct TensorGradError {
  double relative = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

/// Per-tensor ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||),
/// evaluated in double on a cast copy of the checkpoint parameters. Tensors
/// whose gradients are both exactly zero report 0.
inline std::map<std::string, TensorGradError> gradient_check(const Checkpoint& ckpt, const ModelInput& input,
                                                             const std::vector<int>& targets, double eps,
                                                             Stencil stencil) {
  ParameterSet<double> params = ckpt.params.cast<double>();
  const Transformer<double> model(ckpt.config, params);
  ParameterSet<double> analytic = params.zeros_like();
  model.backward(model.loss(input, targets), analytic);

  auto loss_at = [&](double& slot, double value) {
    const double saved = slot;
    slot = value;
    const double l = model.loss(input, targets).loss;
    slot = saved;
    return l;
  };

  std::map<std::string, TensorGradError> out;
  for (auto& [name, tensor] : params) {
    const auto& ga = analytic.at(name);
    double diff2 = 0.0;
    double a2 = 0.0;
    double n2 = 0.0;
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      double& slot = tensor.data()[i];
      const double x = slot;
      double g = 0.0;
      if (stencil == Stencil::Central2) {
        g = (loss_at(slot, x + eps) - loss_at(slot, x - eps)) / (2.0 * eps);
      } else {
        g = (8.0 * (loss_at(slot, x + eps) - loss_at(slot, x - eps)) -
             (loss_at(slot, x + 2.0 * eps) - loss_at(slot, x - 2.0 * eps))) /
            (12.0 * eps);
      }
      const double a = ga.data()[i];
      diff2 += (a - g) * (a - g);
      a2 += a * a;
      n2 += g * g;
    }
    TensorGradError e;
    e.analytic_norm = std::sqrt(a2);
    e.numeric_norm = std::sqrt(n2);
    const double scale = std::max(e.analytic_norm, e.numeric_norm);
    e.relative = scale > 0.0 ? std::sqrt(diff2) / scale : 0.0;
    out[name] = e;
  }
  return out;
}

inline double worst_relative(const std::map<std::string, TensorGradError>& errors, std::string* which = nullptr) {
  double worst = 0.0;
  for (const auto& [name, e] : errors) {
    if (e.relative >= worst) {
      worst = e.relative;
      if (which != nullptr) *which = name;
    }
  }
  return worst;
}

}  // namespace seqforge::testing
