// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Core>

namespace ldpcrowd {

struct LassoOptions
{
    std::size_t max_sweeps = 100000;
    double tolerance = 1e-12;
};

/// Minimizes 1/2 x'Gx - x'r + lambda * sum(x) over x >= 0 by cyclic
/// coordinate descent, given the Gram matrix G = A'A and r = A'y of a
/// least-squares problem. Coordinates with G(j,j) == 0 stay at zero.
template <class GramDerived, class RhsDerived>
Eigen::Matrix<typename GramDerived::Scalar, Eigen::Dynamic, 1>
nonnegative_lasso(const Eigen::MatrixBase<GramDerived>& gram, const Eigen::MatrixBase<RhsDerived>& rhs,
                  typename GramDerived::Scalar lambda, const LassoOptions& options = {})
{
    using Scalar = typename GramDerived::Scalar;
    using vec_t = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    const Eigen::Index p = gram.cols();
    vec_t x = vec_t::Zero(p);
    // grad = G x - r, maintained incrementally.
    vec_t grad = -rhs.template cast<Scalar>();

    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        Scalar max_step = 0;
        Scalar max_x = 0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const Scalar diag = gram(j, j);
            if (diag <= Scalar(0)) continue;
            const Scalar old = x[j];
            const Scalar target = std::max(Scalar(0), old - (grad[j] + lambda) / diag);
            const Scalar step = target - old;
            if (step != Scalar(0)) {
                x[j] = target;
                grad += step * gram.col(j);
            }
            max_step = std::max(max_step, std::abs(step));
            max_x = std::max(max_x, std::abs(x[j]));
        }
        if (max_step <= options.tolerance * (Scalar(1) + max_x)) break;
    }
    return x;
}

} // namespace ldpcrowd
