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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <ldpcrowd/domain.hpp>
#include <ldpcrowd/metrics.hpp>
#include <ldpcrowd/oracles.hpp>
#include <ldpcrowd/random.hpp>

namespace ldpcrowd {

/// Population given directly as per-zone user counts.
struct ZoneCountsSource
{
    std::vector<std::size_t> counts;
};

/// Population given as user fingerprints plus the public zone table; users
/// locate themselves with `lookup_zone`.
struct FingerprintSource
{
    RssiMatrix users;
    ZoneTable table;
};

using PopulationSource = std::variant<ZoneCountsSource, FingerprintSource>;

struct ExperimentConfig
{
    /// Shared mechanism parameters; `mechanism` and `epsilon` are overridden
    /// per sweep cell.
    PrivacyParams params;
    std::vector<Mechanism> mechanisms;
    std::vector<double> epsilons;
    std::size_t trials = 20;
    std::uint64_t seed = 0;
    PopulationSource population = ZoneCountsSource{};
    /// Worker threads; results do not depend on it.
    std::size_t workers = 1;

    void validate() const;
    std::size_t zone_count() const;
};

struct Diagnostics
{
    std::size_t insufficient_signals = 0;
    std::size_t unmatched = 0;

    std::size_t dropped() const noexcept { return insufficient_signals + unmatched; }
};

struct TrialResult
{
    Mechanism mechanism = Mechanism::oue;
    double epsilon = 0.0;
    std::size_t trial = 0;
    std::vector<std::size_t> true_counts;
    FrequencyEstimate estimate;
    MetricReport metrics;
    Diagnostics diagnostics;

    /// Rounded clamped estimate minus the true count, per zone.
    std::vector<long long> diffs() const;
};

/// Users located by the client-side lookup; dropped users are tallied.
struct LocatedUsers
{
    std::vector<ZoneIndex> zones;
    Diagnostics diagnostics;
};

LocatedUsers locate_users(const RssiMatrix& users, const ZoneTable& table);

/// One aggregation round: user i perturbs with `streams.stream(i)`. If
/// `trace` is set, every report is appended to it in user order.
FrequencyEstimate run_round(std::span<const ZoneIndex> users, std::size_t l_zones, const PrivacyParams& params,
                            const StreamFactory& streams, std::size_t workers = 1,
                            std::vector<Report>* trace = nullptr);

/// Every (mechanism, epsilon, trial) cell, ordered mechanism-major then
/// epsilon then trial. Deterministic given the config.
std::vector<TrialResult> run_sweep(const ExperimentConfig& config);

/// A single (mechanism, epsilon, trial) cell of a sweep.
TrialResult run_trial(const ExperimentConfig& config, Mechanism mechanism, double epsilon, std::size_t trial,
                      std::vector<Report>* trace = nullptr);

/// ceil(sum |diff| / original); empty for an unpopulated zone.
std::optional<long long> zone_error_statistic(std::span<const long long> diffs, std::size_t original);

struct SummaryRow
{
    std::string mechanism;
    double epsilon = 0.0;
    std::string metric;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

/// Per (mechanism, epsilon): rmse, nrmse, kendall_tau and per-zone
/// abs_diff_<j>. Per epsilon, mechanism "ALL": zone_error_<j>, the
/// per-trial ceil(sum over mechanisms |diff| / original).
std::vector<SummaryRow> summarize(std::span<const TrialResult> results);

std::string summary_to_csv(std::span<const SummaryRow> rows);

std::string trial_result_to_json(const TrialResult& result);
TrialResult trial_result_from_json(const std::string& line);

/// Parses the experiment JSON; relative paths resolve against `base_dir`.
/// Unknown keys and mistyped values throw invalid_argument; range checks
/// are left to ExperimentConfig::validate.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir);

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double prob);

/// Shortest round-trip decimal form.
std::string format_number(double value);

} // namespace ldpcrowd
