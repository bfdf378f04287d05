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


#include <ldpcrowd/simulator.hpp>

#include <ldpcrowd/dataio.hpp>
#include <ldpcrowd/zoning.hpp>

#include <algorithm>
#include <numeric>

#include <gtest/gtest.h>

namespace ldpcrowd {
namespace {

const std::vector<std::size_t> cri_counts(cri_zone_counts.begin(), cri_zone_counts.end());

ExperimentConfig counts_config(std::vector<Mechanism> mechs, std::vector<double> eps, std::size_t trials,
                               std::uint64_t seed = 1)
{
    ExperimentConfig c;
    c.mechanisms = std::move(mechs);
    c.epsilons = std::move(eps);
    c.trials = trials;
    c.seed = seed;
    c.population = ZoneCountsSource{cri_counts};
    return c;
}

std::vector<Mechanism> every_mechanism()
{
    return {all_mechanisms.begin(), all_mechanisms.end()};
}

TEST(RunRound, NoUsersGivesZeroEstimate)
{
    for (auto m : all_mechanisms) {
        PrivacyParams p;
        p.mechanism = m;
        p.epsilon = 1.0;
        const auto est = run_round({}, 5, p, StreamFactory(1));
        EXPECT_EQ(est.raw, Eigen::VectorXd::Zero(5)) << to_string(m);
        EXPECT_EQ(est.n_reports, 0u);
    }
}

TEST(RunRound, RejectsZoneOutOfRange)
{
    PrivacyParams p;
    const std::vector<ZoneIndex> users = {0, 3};
    EXPECT_THROW(run_round(users, 3, p, StreamFactory(1)), Error);
}

TEST(RunRound, NoiselessLimitIsExact)
{
    Rng pop(3);
    const auto users = synth_population(cri_counts, pop);
    const std::vector<long long> truth(cri_counts.begin(), cri_counts.end());
    for (auto m : {Mechanism::olh, Mechanism::the}) {
        PrivacyParams p;
        p.mechanism = m;
        p.epsilon = 50.0;
        // A threshold of one half splits the unit signal from zero once the
        // Laplace noise vanishes.
        p.the_theta = 0.5;
        EXPECT_EQ(run_round(users, 8, p, StreamFactory(4)).rounded(), truth) << to_string(m);
    }
}

TEST(RunRound, WorkerCountDoesNotChangeEstimate)
{
    Rng pop(5);
    const auto users = synth_population(cri_counts, pop);
    for (auto m : all_mechanisms) {
        PrivacyParams p;
        p.mechanism = m;
        p.epsilon = 1.0;
        p.family_seed = 9;
        std::vector<Report> t1, t4;
        const auto a = run_round(users, 8, p, StreamFactory(6), 1, &t1);
        const auto b = run_round(users, 8, p, StreamFactory(6), 4, &t4);
        EXPECT_EQ(a.raw, b.raw) << to_string(m);
        EXPECT_EQ(t1, t4);
        EXPECT_EQ(t1.size(), users.size());
    }
}

TEST(RunTrial, OlhCriDiffsAreModerate)
{
    const auto r = run_trial(counts_config({Mechanism::olh}, {2.0}, 1), Mechanism::olh, 2.0, 0);
    for (auto d : r.diffs()) EXPECT_LE(std::abs(d), 40);
    EXPECT_EQ(r.true_counts, cri_counts);
}

TEST(RunSweep, SingleCell)
{
    const auto results = run_sweep(counts_config({Mechanism::hr}, {1.0}, 1));
    ASSERT_EQ(results.size(), 1u);
    EXPECT_EQ(results[0].mechanism, Mechanism::hr);
    EXPECT_EQ(results[0].epsilon, 1.0);
}

std::string as_lines(const std::vector<TrialResult>& results)
{
    std::string out;
    for (const auto& r : results) out += trial_result_to_json(r) + '\n';
    return out;
}

TEST(RunSweep, DeterministicAcrossRunsAndWorkers)
{
    auto config = counts_config(every_mechanism(), {0.5, 2.0}, 3, 77);
    const auto first = as_lines(run_sweep(config));
    EXPECT_EQ(as_lines(run_sweep(config)), first);
    config.workers = 4;
    EXPECT_EQ(as_lines(run_sweep(config)), first);
    config.seed = 78;
    EXPECT_NE(as_lines(run_sweep(config)), first);
}

TEST(RunSweep, MatchesRunTrial)
{
    const auto config = counts_config({Mechanism::oue, Mechanism::cms}, {1.0, 3.0}, 2, 5);
    const auto results = run_sweep(config);
    ASSERT_EQ(results.size(), 8u);
    EXPECT_EQ(results[5].mechanism, Mechanism::cms);
    EXPECT_EQ(results[5].epsilon, 1.0);
    EXPECT_EQ(results[5].trial, 1u);
    EXPECT_EQ(trial_result_to_json(results[5]), trial_result_to_json(run_trial(config, Mechanism::cms, 1.0, 1)));
}

TEST(RunSweep, FullGridAndUtilityTrend)
{
    const std::vector<double> eps = {0.5, 0.75, 1, 1.5, 2, 3, 5};
    const auto results = run_sweep(counts_config(every_mechanism(), eps, 20, 2024));
    ASSERT_EQ(results.size(), 840u);
    for (auto m : all_mechanisms) {
        auto mean_rmse = [&](double e) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& r : results) {
                if (r.mechanism == m && r.epsilon == e) {
                    sum += r.metrics.rmse;
                    ++n;
                }
            }
            EXPECT_EQ(n, 20u);
            return sum / static_cast<double>(n);
        };
        EXPECT_LT(mean_rmse(5.0), mean_rmse(0.5)) << to_string(m);
    }
}

TEST(Summarize, SingleResultEqualsItsMetrics)
{
    const auto results = run_sweep(counts_config({Mechanism::oue}, {2.0}, 1));
    const auto rows = summarize(results);
    auto find = [&](const std::string& metric) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const SummaryRow& r) { return r.metric == metric; });
        EXPECT_NE(it, rows.end()) << metric;
        return *it;
    };
    const auto rmse = find("rmse");
    EXPECT_EQ(rmse.mechanism, "OUE");
    EXPECT_EQ(rmse.mean, results[0].metrics.rmse);
    EXPECT_EQ(rmse.median, results[0].metrics.rmse);
    EXPECT_EQ(rmse.q1, results[0].metrics.rmse);
    EXPECT_EQ(rmse.q3, results[0].metrics.rmse);
    EXPECT_EQ(find("nrmse").mean, *results[0].metrics.nrmse);
    EXPECT_EQ(find("kendall_tau").mean, static_cast<double>(results[0].metrics.kendall_tau));
    EXPECT_EQ(find("abs_diff_7").mean, std::abs(static_cast<double>(results[0].diffs()[7])));
}

TEST(ZoneErrorStatistic, PublishedCriRows)
{
    const std::vector<long long> h = {-4, 15, 11, 9, -7, 15};
    const std::vector<long long> g = {8, 11, 8, 11, 10, 4};
    EXPECT_EQ(zone_error_statistic(h, 125), 1);
    EXPECT_EQ(zone_error_statistic(g, 6), 9);
    EXPECT_EQ(zone_error_statistic(g, 0), std::nullopt);
    const std::vector<long long> none = {0, 0};
    EXPECT_EQ(zone_error_statistic(none, 3), 0);
}

TEST(Summarize, ZoneErrorRowsCombineMechanisms)
{
    const auto results = run_sweep(counts_config(every_mechanism(), {2.0}, 4, 8));
    const auto rows = summarize(results);
    std::size_t zone_rows = 0;
    for (const auto& row : rows) {
        if (row.mechanism != "ALL") continue;
        ++zone_rows;
        const auto j = std::stoul(row.metric.substr(std::string("zone_error_").size()));
        std::vector<double> per_trial;
        for (std::size_t t = 0; t < 4; ++t) {
            long long sum = 0;
            for (const auto& r : results) {
                if (r.trial == t) sum += std::abs(r.diffs()[j]);
            }
            const auto orig = static_cast<long long>(cri_counts[j]);
            per_trial.push_back(static_cast<double>((sum + orig - 1) / orig));
        }
        EXPECT_DOUBLE_EQ(row.mean, std::accumulate(per_trial.begin(), per_trial.end(), 0.0) / 4.0);
    }
    EXPECT_EQ(zone_rows, 8u);
}

TEST(Summarize, CsvHeaderAndQuantiles)
{
    const std::vector<SummaryRow> rows = {{"OUE", 0.5, "rmse", 1.5, 1.0, 0.25, 2.0}};
    EXPECT_EQ(summary_to_csv(rows), "mechanism,epsilon,metric,mean,median,q1,q3\nOUE,0.5,rmse,1.5,1,0.25,2\n");
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.75), 7.0);
    EXPECT_THROW(summarize({}), Error);
}

TEST(TrialResultJson, RoundTrip)
{
    const auto results = run_sweep(counts_config(every_mechanism(), {1.0}, 1, 3));
    for (const auto& r : results) {
        const auto line = trial_result_to_json(r);
        EXPECT_EQ(line.find('\n'), std::string::npos);
        EXPECT_EQ(trial_result_to_json(trial_result_from_json(line)), line);
    }
}

// Fingerprint population: 9 APs, zones learned from a survey, users drawn
// around survey points plus a few that cannot be placed.
FingerprintSource fingerprint_population(std::size_t users, std::size_t& expected_dropped)
{
    Rng rng(31);
    auto random_fp = [&](std::size_t sensed) {
        std::vector<double> rssi(9, missing_rssi);
        std::vector<ApId> ids(9);
        std::iota(ids.begin(), ids.end(), ApId{0});
        for (std::size_t i = 0; i < sensed; ++i) {
            std::swap(ids[i], ids[i + rng.below(9 - i)]);
            rssi[ids[i]] = -40.0 - 60.0 * rng.uniform();
        }
        return Fingerprint(rssi);
    };
    std::vector<Fingerprint> survey;
    for (int i = 0; i < 12; ++i) survey.push_back(random_fp(5));
    auto table = build_zone_table(survey, 3).table;

    std::vector<Fingerprint> population;
    expected_dropped = 0;
    for (std::size_t i = 0; i < users; ++i) {
        if (i % 10 == 0) {
            population.push_back(random_fp(2));
            ++expected_dropped;
        } else {
            population.push_back(survey[rng.below(survey.size())]);
        }
    }
    population.push_back(random_fp(9));
    if (!lookup_zone(table, population.back().rssi()).index() == 0) ++expected_dropped;
    return {RssiMatrix::from_fingerprints(population), std::move(table)};
}

TEST(FingerprintSource, ConservationOfUsers)
{
    std::size_t dropped = 0;
    auto source = fingerprint_population(200, dropped);
    const auto k = source.users.user_count();
    ExperimentConfig c;
    c.mechanisms = every_mechanism();
    c.epsilons = {1.0};
    c.trials = 2;
    c.population = std::move(source);
    for (const auto& r : run_sweep(c)) {
        const auto located = std::accumulate(r.true_counts.begin(), r.true_counts.end(), std::size_t{0});
        EXPECT_EQ(located + r.diagnostics.dropped(), k);
        EXPECT_EQ(r.estimate.n_reports, located);
        EXPECT_GE(r.diagnostics.insufficient_signals, 20u);
        EXPECT_EQ(r.diagnostics.dropped(), dropped);
    }
}

TEST(LocateUsers, CountsUnmatched)
{
    ZoneTable table(4, 2);
    table.insert(StrongestSet({0, 1}));
    Eigen::Matrix<double, 3, 4, Eigen::RowMajor> rows;
    rows << -40, -50, -90, -100, -100, -90, -50, -40, -40, -110, -110, -110;
    const auto located = locate_users(RssiMatrix(rows), table);
    EXPECT_EQ(located.zones, std::vector<ZoneIndex>{0});
    EXPECT_EQ(located.diagnostics.unmatched, 1u);
    EXPECT_EQ(located.diagnostics.insufficient_signals, 1u);
}

TEST(LowPopulation, ZoneErrorShrinksWithPopulation)
{
    const auto results = run_sweep(counts_config(every_mechanism(), {2.0}, 400, 99));
    std::vector<double> mean(8, 0.0);
    for (const auto& row : summarize(results)) {
        if (row.mechanism == "ALL") mean[std::stoul(row.metric.substr(11))] = row.mean;
    }
    // Zones are ordered by population: 6, 9, 11, 17, 17, 81, 88, 125. The
    // expected statistics of the 81 and 88 zones differ by about 0.12.
    for (std::size_t j = 0; j + 1 < 8; ++j) {
        if (cri_counts[j] < cri_counts[j + 1]) EXPECT_GE(mean[j], mean[j + 1]) << "zone " << j;
    }
}

TEST(Config, ParsesAndRejects)
{
    const auto c = parse_experiment_config(
        R"({"mechanisms": "all", "epsilons": [0.5, 2], "trials": 3, "seed": 9, "workers": 2,
            "params": {"cms_k": 4, "rappor_decoder": "least_squares"},
            "population": {"zone_counts": [6, 9, 11]}})",
        ".");
    EXPECT_EQ(c.mechanisms.size(), 6u);
    EXPECT_EQ(c.epsilons, (std::vector<double>{0.5, 2.0}));
    EXPECT_EQ(c.trials, 3u);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.workers, 2u);
    EXPECT_EQ(c.params.cms_k, 4u);
    EXPECT_EQ(c.params.rappor_decoder, RapporDecoder::least_squares);
    EXPECT_EQ(c.zone_count(), 3u);

    auto rejects = [](const std::string& text) {
        EXPECT_THROW(parse_experiment_config(text, ".").validate(), Error) << text;
    };
    rejects(R"({"mechanisms": ["OUE"], "epsilons": [1], "population": {"zone_counts": [1]}, "extra": 1})");
    rejects(R"({"mechanisms": ["XYZ"], "epsilons": [1], "population": {"zone_counts": [1]}})");
    rejects(R"({"mechanisms": ["OUE"], "epsilons": [-1], "population": {"zone_counts": [1]}})");
    rejects(R"({"mechanisms": ["OUE"], "epsilons": [], "population": {"zone_counts": [1]}})");
    rejects(R"({"mechanisms": ["OUE"], "epsilons": [1], "trials": 0, "population": {"zone_counts": [1]}})");
    rejects(R"({"mechanisms": ["OUE"], "epsilons": [1], "population": {"zone_counts": [0, 0]}})");
    rejects(R"({"mechanisms": ["OUE"], "epsilons": [1], "params": {"cms_q": 1}, "population": {"zone_counts": [1]}})");
    rejects("[1, 2");
}

} // namespace
} // namespace ldpcrowd
