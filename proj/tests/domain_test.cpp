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

#include <ldpcrowd/domain.hpp>

#include <limits>

#include <gtest/gtest.h>

#include <ldpcrowd/random.hpp>

namespace ldpcrowd {
namespace {

// Counts m-subsets of n items by walking every bitmask; independent of the
// multiplicative formula.
std::uint64_t count_subsets(unsigned n, unsigned m)
{
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        if (static_cast<unsigned>(std::popcount(mask)) == m) ++count;
    }
    return count;
}

TEST(MaxZoneCount, DatasetApCounts)
{
    EXPECT_EQ(max_zone_count(9, 3), 84u);
    EXPECT_EQ(max_zone_count(7, 7), 1u);
    EXPECT_EQ(max_zone_count(36, 3), 7140u);
}

TEST(MaxZoneCount, MatchesSubsetEnumeration)
{
    for (unsigned n = 1; n <= 16; ++n) {
        for (unsigned m = 1; m <= n; ++m) {
            EXPECT_EQ(max_zone_count(n, m), count_subsets(n, m)) << n << " choose " << m;
        }
    }
}

TEST(MaxZoneCount, BinomialSymmetry)
{
    for (std::size_t n = 2; n <= 60; ++n) {
        for (std::size_t m = 1; m < n; ++m) {
            EXPECT_EQ(max_zone_count(n, m), max_zone_count(n, n - m));
        }
    }
}

TEST(MaxZoneCount, RejectsMoreStrongestThanAps)
{
    try {
        max_zone_count(3, 4);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(OneHot, Examples)
{
    EXPECT_EQ(one_hot(0, 3), (ZoneVector(3) << 1, 0, 0).finished());
    EXPECT_EQ(one_hot(2, 3), (ZoneVector(3) << 0, 0, 1).finished());
    const auto v = one_hot(7, 8);
    EXPECT_EQ(v[7], 1);
    EXPECT_EQ(v.cast<int>().sum(), 1);
}

TEST(OneHot, BitSumIsOne)
{
    for (std::size_t l = 1; l <= 40; ++l) {
        for (std::size_t z = 0; z < l; ++z) EXPECT_EQ(one_hot(z, l).cast<int>().sum(), 1);
    }
}

TEST(OneHot, RejectsOutOfRange)
{
    EXPECT_THROW(one_hot(3, 3), Error);
}

TEST(FrequencyEstimate, ClampingNeverIncreasesError)
{
    Rng rng(11);
    for (int rep = 0; rep < 500; ++rep) {
        const Eigen::Index l = 1 + static_cast<Eigen::Index>(rng.below(12));
        CountVector truth(l), raw(l);
        for (Eigen::Index j = 0; j < l; ++j) {
            truth[j] = static_cast<double>(rng.below(50));
            raw[j] = truth[j] + (rng.uniform() - 0.5) * 120.0;
        }
        const auto est = FrequencyEstimate::from_raw(raw, 10);
        EXPECT_TRUE((est.clamped.array() == raw.cwiseMax(0.0).array()).all());
        EXPECT_TRUE(((est.clamped - truth).cwiseAbs().array() <= (raw - truth).cwiseAbs().array()).all());
    }
}

TEST(FrequencyEstimate, RoundsHalfUp)
{
    const auto est = FrequencyEstimate::from_raw((CountVector(4) << 2.5, 2.49, -3.0, 0.5).finished(), 4);
    EXPECT_EQ(est.rounded(), (std::vector<long long>{3, 2, 0, 1}));
}

TEST(Fingerprint, ClampsBelowSentinel)
{
    Fingerprint fp({-40.0, -120.0, -110.0});
    EXPECT_EQ(fp.rssi()[1], missing_rssi);
    EXPECT_FALSE(is_sensed(fp.rssi()[2]));
    EXPECT_TRUE(is_sensed(fp.rssi()[0]));
}

TEST(ZoneTable, DenseFirstSeenIndices)
{
    ZoneTable table(4, 2);
    EXPECT_EQ(table.insert(StrongestSet({2, 1})), 0u);
    EXPECT_EQ(table.insert(StrongestSet({0, 3})), 1u);
    EXPECT_EQ(table.insert(StrongestSet({1, 2})), 0u);
    EXPECT_EQ(table.zone_count(), 2u);
    EXPECT_FALSE(table.find(StrongestSet({0, 1})).has_value());
    EXPECT_THROW(table.insert(StrongestSet({0, 1, 2})), Error);
    EXPECT_THROW(table.insert(StrongestSet({0, 4})), Error);
}

TEST(PrivacyParams, Validation)
{
    PrivacyParams p;
    EXPECT_NO_THROW(p.validate());
    p.epsilon = 0.0;
    EXPECT_THROW(p.validate(), Error);
    p.epsilon = 1.0;
    p.cms_k = 0;
    EXPECT_THROW(p.validate(), Error);
    p.cms_k = 1;
    p.cms_m = 1;
    EXPECT_THROW(p.validate(), Error);
    p.cms_m = 2;
    EXPECT_NO_THROW(p.validate());
    p.epsilon = std::numeric_limits<double>::infinity();
    EXPECT_THROW(p.validate(), Error);
}

TEST(Mechanism, NamesRoundTrip)
{
    for (auto m : all_mechanisms) EXPECT_EQ(parse_mechanism(to_string(m)), m);
    EXPECT_EQ(parse_mechanism("rappor"), Mechanism::rappor);
    EXPECT_THROW(parse_mechanism("laplace"), Error);
}

} // namespace
} // namespace ldpcrowd
