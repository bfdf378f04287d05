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

#include <ldpcrowd/zoning.hpp>

#include <algorithm>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include <ldpcrowd/random.hpp>

namespace ldpcrowd {
namespace {

std::vector<ApId> ids(const StrongestSet& s) { return s.ids(); }

std::vector<Fingerprint> random_fingerprints(Rng& rng, std::size_t count, std::size_t n_aps)
{
    std::vector<Fingerprint> out;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> rssi(n_aps);
        for (auto& v : rssi) {
            // Integer dBm with deliberate ties and unsensed APs.
            v = rng.bernoulli(0.2) ? missing_rssi : -30.0 - static_cast<double>(rng.below(40));
        }
        out.emplace_back(std::move(rssi));
    }
    return out;
}

TEST(StrongestAps, DistinctValues)
{
    const std::vector<double> rssi = {-40, -50, -60, -110};
    EXPECT_EQ(ids(strongest_aps(rssi, 3)), (std::vector<ApId>{0, 1, 2}));
}

TEST(StrongestAps, TiesPreferLowerId)
{
    const std::vector<double> rssi = {-50, -50, -50, -50};
    EXPECT_EQ(ids(strongest_aps(rssi, 3)), (std::vector<ApId>{0, 1, 2}));
    const std::vector<double> partial = {-60, -50, -50, -70, -50};
    EXPECT_EQ(ids(strongest_aps(partial, 2)), (std::vector<ApId>{1, 2}));
}

TEST(StrongestAps, InsufficientSignals)
{
    const std::vector<double> rssi = {-110, -110, -70, -110};
    try {
        strongest_aps(rssi, 3);
        FAIL() << "expected InsufficientSignals";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::insufficient_signals);
    }
}

TEST(BuildZoneTable, CountsDistinctSets)
{
    // Strongest triples {0,1,2}, {0,1,2}, {1,2,3}, {0,2,3}.
    const std::vector<Fingerprint> training = {
        Fingerprint({-40, -45, -50, -90}),
        Fingerprint({-41, -44, -52, -95}),
        Fingerprint({-90, -45, -50, -40}),
        Fingerprint({-40, -90, -50, -45}),
    };
    const auto build = build_zone_table(training, 3);
    EXPECT_EQ(build.table.zone_count(), 3u);
    EXPECT_EQ(build.insufficient, 0u);
}

TEST(BuildZoneTable, SkipsAndCountsWeakRows)
{
    const std::vector<Fingerprint> training = {
        Fingerprint({-40, -45, -50, -90}),
        Fingerprint({-110, -110, -50, -110}),
    };
    const auto build = build_zone_table(training, 3);
    EXPECT_EQ(build.table.zone_count(), 1u);
    EXPECT_EQ(build.insufficient, 1u);
}

TEST(BuildZoneTable, EmptyTable)
{
    const std::vector<Fingerprint> training = {Fingerprint({-110, -110, -50, -110})};
    try {
        build_zone_table(training, 3);
        FAIL() << "expected EmptyTable";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty_table);
    }
}

TEST(LookupZone, MatchedAndUnmatched)
{
    ZoneTable table(4, 3);
    table.insert(StrongestSet({0, 1, 2}));
    const std::vector<double> hit = {-40, -45, -50, -110};
    const std::vector<double> miss = {-110, -45, -50, -40};
    EXPECT_EQ(std::get<ZoneIndex>(lookup_zone(table, hit)), 0u);
    const auto r = lookup_zone(table, miss);
    ASSERT_TRUE(std::holds_alternative<Unmatched>(r));
    EXPECT_EQ(std::get<Unmatched>(r).set.ids(), (std::vector<ApId>{1, 2, 3}));
}

TEST(LookupZone, PropagatesInsufficientSignals)
{
    ZoneTable table(4, 3);
    table.insert(StrongestSet({0, 1, 2}));
    const std::vector<double> weak = {-110, -45, -110, -110};
    EXPECT_THROW(lookup_zone(table, weak), Error);
}

TEST(ZoneProperties, BoundRoundTripDeterminism)
{
    Rng rng(2024);
    for (int rep = 0; rep < 200; ++rep) {
        const auto training = random_fingerprints(rng, 1 + rng.below(300), 9);
        ZoneBuild build = [&] {
            try {
                return build_zone_table(training, 3);
            } catch (const Error&) {
                return ZoneBuild{ZoneTable(9, 3), 0};
            }
        }();
        if (build.table.zone_count() == 0) continue;
        EXPECT_LE(build.table.zone_count(), max_zone_count(9, 3));

        for (const auto& fp : training) {
            try {
                const auto set = strongest_aps(fp.rssi(), 3);
                EXPECT_EQ(std::get<ZoneIndex>(lookup_zone(build.table, fp.rssi())), *build.table.find(set));
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::insufficient_signals);
            }
        }
        EXPECT_EQ(build_zone_table(training, 3).table, build.table);
    }
}

TEST(ZoneProperties, PermutationInvariantPartition)
{
    Rng rng(99);
    for (int rep = 0; rep < 50; ++rep) {
        auto training = random_fingerprints(rng, 120, 9);
        const auto a = build_zone_table(training, 3).table;

        std::vector<std::size_t> perm(training.size());
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        std::vector<Fingerprint> shuffled;
        for (auto i : perm) shuffled.push_back(training[i]);
        const auto b = build_zone_table(shuffled, 3).table;

        ASSERT_EQ(a.zone_count(), b.zone_count());
        // Same partition: fingerprints share a zone in `a` iff they do in `b`.
        std::map<ZoneIndex, ZoneIndex> relabel;
        for (const auto& fp : training) {
            const auto za = lookup_zone(a, fp.rssi());
            if (!std::holds_alternative<ZoneIndex>(za)) continue;
            const auto zb = std::get<ZoneIndex>(lookup_zone(b, fp.rssi()));
            const auto [it, fresh] = relabel.emplace(std::get<ZoneIndex>(za), zb);
            EXPECT_EQ(it->second, zb);
        }
    }
}

TEST(ZoneTableJson, StableFormatAndRoundTrip)
{
    ZoneTable table(9, 3);
    table.insert(StrongestSet({4, 1, 7}));
    table.insert(StrongestSet({0, 1, 2}));
    const auto text = zone_table_to_json(table);
    EXPECT_EQ(text, R"({"n_aps":9,"m":3,"zones":[{"aps":[1,4,7],"zone":0},{"aps":[0,1,2],"zone":1}]})"
                    "\n");
    EXPECT_EQ(zone_table_from_json(text), table);
}

TEST(ZoneTableJson, RejectsGapsAndDuplicates)
{
    EXPECT_THROW(zone_table_from_json(R"({"n_aps":4,"m":2,"zones":[{"aps":[0,1],"zone":1}]})"), Error);
    EXPECT_THROW(
        zone_table_from_json(R"({"n_aps":4,"m":2,"zones":[{"aps":[0,1],"zone":0},{"aps":[1,0],"zone":1}]})"),
        Error);
}

} // namespace
} // namespace ldpcrowd
