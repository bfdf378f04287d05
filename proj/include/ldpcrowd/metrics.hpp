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
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include <ldpcrowd/domain.hpp>

namespace ldpcrowd {

/// Zones listed from most to least populated.
using Ranking = std::vector<ZoneIndex>;

struct MetricReport
{
    double rmse = 0.0;
    /// Empty when the true counts have zero range.
    std::optional<double> nrmse;
    std::uint64_t kendall_tau = 0;
};

template <class TrueDerived, class EstDerived>
double rmse(const Eigen::DenseBase<TrueDerived>& z, const Eigen::DenseBase<EstDerived>& z_hat)
{
    if (z.size() != z_hat.size()) fail(ErrorCode::invalid_argument, "rmse: length mismatch");
    if (z.size() == 0) fail(ErrorCode::invalid_argument, "rmse: empty vectors");
    const auto diff = (z.derived().template cast<double>().array() -
                       z_hat.derived().template cast<double>().array());
    return std::sqrt(diff.square().mean());
}

/// RMSE divided by the range of the true vector.
template <class TrueDerived, class EstDerived>
double nrmse(const Eigen::DenseBase<TrueDerived>& z, const Eigen::DenseBase<EstDerived>& z_hat)
{
    const double err = rmse(z, z_hat);
    const double range = static_cast<double>(z.maxCoeff()) - static_cast<double>(z.minCoeff());
    if (!(range > 0.0)) fail(ErrorCode::degenerate_range, "nrmse: true counts have zero range");
    return err / range;
}

/// Descending by count; equal counts keep ascending zone order.
template <class Derived>
Ranking rank_zones(const Eigen::DenseBase<Derived>& counts)
{
    if (counts.size() == 0) fail(ErrorCode::invalid_argument, "rank_zones: empty vector");
    Ranking order(static_cast<std::size_t>(counts.size()));
    std::iota(order.begin(), order.end(), ZoneIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](ZoneIndex a, ZoneIndex b) {
        return counts.derived().coeff(static_cast<Eigen::Index>(a)) >
               counts.derived().coeff(static_cast<Eigen::Index>(b));
    });
    return order;
}

/// Number of discordant pairs between two rankings of the same items.
/// Throws invalid_argument unless both are permutations of 0..L-1.
std::uint64_t kendall_tau_distance(std::span<const ZoneIndex> tau1, std::span<const ZoneIndex> tau2);

inline std::uint64_t max_kendall_tau(std::size_t l_items)
{
    return static_cast<std::uint64_t>(l_items) * (l_items == 0 ? 0 : l_items - 1) / 2;
}

/// RMSE/NRMSE against `estimate`; Kendall on the rankings of both vectors.
template <class TrueDerived, class EstDerived>
MetricReport evaluate(const Eigen::DenseBase<TrueDerived>& truth, const Eigen::DenseBase<EstDerived>& estimate)
{
    MetricReport report;
    report.rmse = rmse(truth, estimate);
    if (truth.maxCoeff() > truth.minCoeff()) report.nrmse = nrmse(truth, estimate);
    const auto r1 = rank_zones(truth);
    const auto r2 = rank_zones(estimate);
    report.kendall_tau = kendall_tau_distance(r1, r2);
    return report;
}

} // namespace ldpcrowd
