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

#include <ldpcrowd/metrics.hpp>

namespace ldpcrowd {
namespace {

std::vector<std::size_t> positions_of(std::span<const ZoneIndex> ranking)
{
    constexpr auto unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> pos(ranking.size(), unset);
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto item = ranking[i];
        if (item >= ranking.size() || pos[item] != unset) {
            fail(ErrorCode::invalid_argument, "kendall_tau_distance: ranking is not a permutation");
        }
        pos[item] = i;
    }
    return pos;
}

// Counts inversions of `seq` by merge sort.
std::uint64_t count_inversions(std::vector<std::size_t>& seq, std::vector<std::size_t>& scratch,
                               std::size_t lo, std::size_t hi)
{
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(seq, scratch, lo, mid) + count_inversions(seq, scratch, mid, hi);
    std::size_t i = lo, j = mid, out = lo;
    while (i < mid && j < hi) {
        if (seq[j] < seq[i]) {
            inv += mid - i;
            scratch[out++] = seq[j++];
        } else {
            scratch[out++] = seq[i++];
        }
    }
    while (i < mid) scratch[out++] = seq[i++];
    while (j < hi) scratch[out++] = seq[j++];
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              seq.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

} // namespace

std::uint64_t kendall_tau_distance(std::span<const ZoneIndex> tau1, std::span<const ZoneIndex> tau2)
{
    if (tau1.size() != tau2.size()) {
        fail(ErrorCode::invalid_argument, "kendall_tau_distance: rankings differ in length");
    }
    positions_of(tau1);
    const auto pos2 = positions_of(tau2);
    std::vector<std::size_t> seq(tau1.size());
    for (std::size_t i = 0; i < tau1.size(); ++i) seq[i] = pos2[tau1[i]];
    std::vector<std::size_t> scratch(seq.size());
    return count_inversions(seq, scratch, 0, seq.size());
}

} // namespace ldpcrowd
