/* Copyright 2026 The mcreplay Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mcreplay {

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients against central differences
//   (f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps)
// on the given coordinates. f must be evaluable at perturbed points.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> theta,
                           std::span<const double> analytic,
                           std::span<const std::size_t> coordinates, double eps);

}  // namespace mcreplay
