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

#include "mcreplay/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "mcreplay/error.hpp"

namespace mcreplay {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> theta,
                           std::span<const double> analytic,
                           std::span<const std::size_t> coordinates, double eps) {
  check(analytic.size() == theta.size(), ErrorCode::kDimension,
        "grad_check: gradient and parameter sizes differ");
  std::vector<double> point(theta.begin(), theta.end());
  GradCheckReport report;
  for (const std::size_t i : coordinates) {
    check(i < point.size(), ErrorCode::kInput, "grad_check: coordinate out of range");
    const double saved = point[i];
    point[i] = saved + eps;
    const double up = f(point);
    point[i] = saved - eps;
    const double down = f(point);
    point[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = relative_error(analytic[i], numeric);
    if (err > report.max_relative_error || report.checked == 0) {
      report.max_relative_error = err;
      report.worst_coordinate = i;
      report.worst_analytic = analytic[i];
      report.worst_numeric = numeric;
    }
    ++report.checked;
  }
  return report;
}

}  // namespace mcreplay
