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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace ldpcrowd {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::out_of_range: return "OutOfRange";
        case ErrorCode::insufficient_signals: return "InsufficientSignals";
        case ErrorCode::empty_table: return "EmptyTable";
        case ErrorCode::degenerate_probabilities: return "DegenerateProbabilities";
        case ErrorCode::degenerate_range: return "DegenerateRange";
        case ErrorCode::param_mismatch: return "ParamMismatch";
        case ErrorCode::malformed_row: return "MalformedRow";
        case ErrorCode::schema_mismatch: return "SchemaMismatch";
        case ErrorCode::io: return "IoError";
    }
    return "Unknown";
}

Fingerprint::Fingerprint(std::vector<double> rssi, std::optional<Location> location)
    : rssi_(std::move(rssi)), location_(location)
{
    for (auto& v : rssi_) {
        if (std::isnan(v)) fail(ErrorCode::invalid_argument, "RSSI value is NaN");
        if (v < missing_rssi) v = missing_rssi;
    }
}

RssiMatrix::RssiMatrix(matrix_type rows) : rows_(std::move(rows))
{
    rows_ = rows_.cwiseMax(missing_rssi);
}

RssiMatrix RssiMatrix::from_fingerprints(const std::vector<Fingerprint>& fps)
{
    if (fps.empty()) return RssiMatrix();
    const auto n = fps.front().ap_count();
    matrix_type rows(static_cast<Eigen::Index>(fps.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < fps.size(); ++i) {
        if (fps[i].ap_count() != n) {
            fail(ErrorCode::schema_mismatch, "fingerprint rows have differing AP counts");
        }
        rows.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(fps[i].rssi().data(), static_cast<Eigen::Index>(n));
    }
    return RssiMatrix(std::move(rows));
}

StrongestSet::StrongestSet(std::vector<ApId> ids) : ids_(std::move(ids))
{
    std::sort(ids_.begin(), ids_.end());
    if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end()) {
        fail(ErrorCode::invalid_argument, "strongest set has duplicate AP ids");
    }
}

ZoneTable::ZoneTable(std::size_t ap_count, std::size_t strongest_count)
    : ap_count_(ap_count), strongest_count_(strongest_count)
{
    if (strongest_count == 0 || strongest_count > ap_count) {
        fail(ErrorCode::invalid_argument, "zone table needs 1 <= m <= n_aps");
    }
}

ZoneIndex ZoneTable::insert(const StrongestSet& set)
{
    if (set.size() != strongest_count_) {
        fail(ErrorCode::invalid_argument, "strongest set size differs from table m");
    }
    if (!set.ids().empty() && set.ids().back() >= ap_count_) {
        fail(ErrorCode::out_of_range, "AP id exceeds table AP count");
    }
    auto [it, inserted] = by_set_.try_emplace(set, by_zone_.size());
    if (inserted) by_zone_.push_back(set);
    return it->second;
}

std::optional<ZoneIndex> ZoneTable::find(const StrongestSet& set) const
{
    auto it = by_set_.find(set);
    if (it == by_set_.end()) return std::nullopt;
    return it->second;
}

std::string_view to_string(Mechanism m)
{
    switch (m) {
        case Mechanism::olh: return "OLH";
        case Mechanism::oue: return "OUE";
        case Mechanism::the: return "THE";
        case Mechanism::hr: return "HR";
        case Mechanism::cms: return "CMS";
        case Mechanism::rappor: return "RAPPOR";
    }
    return "?";
}

Mechanism parse_mechanism(std::string_view name)
{
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    for (auto m : all_mechanisms) {
        if (to_string(m) == upper) return m;
    }
    fail(ErrorCode::invalid_argument, "unknown mechanism '" + std::string(name) + "'");
}

void PrivacyParams::validate() const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        fail(ErrorCode::invalid_argument, "epsilon must be a positive finite number");
    }
    if (!std::isfinite(the_theta)) fail(ErrorCode::invalid_argument, "THE theta must be finite");
    if (cms_k == 0 || cms_m == 0 || rappor_k == 0 || rappor_m == 0 || rappor_hashes == 0) {
        fail(ErrorCode::invalid_argument, "mechanism size parameters must be >= 1");
    }
    if (cms_m < 2) fail(ErrorCode::invalid_argument, "CMS sketch width must be >= 2");
}

FrequencyEstimate FrequencyEstimate::from_raw(CountVector raw, std::size_t n_reports)
{
    FrequencyEstimate est;
    est.clamped = raw.cwiseMax(0.0);
    est.raw = std::move(raw);
    est.n_reports = n_reports;
    return est;
}

std::vector<long long> FrequencyEstimate::rounded() const
{
    std::vector<long long> out(static_cast<std::size_t>(clamped.size()));
    for (Eigen::Index j = 0; j < clamped.size(); ++j) {
        out[static_cast<std::size_t>(j)] = static_cast<long long>(std::floor(clamped[j] + 0.5));
    }
    return out;
}

std::uint64_t max_zone_count(std::size_t n_aps, std::size_t m_strongest)
{
    if (n_aps == 0 || m_strongest == 0) {
        fail(ErrorCode::invalid_argument, "max_zone_count needs positive arguments");
    }
    if (m_strongest > n_aps) {
        fail(ErrorCode::invalid_argument, "m_strongest exceeds n_aps");
    }
    const std::uint64_t k = std::min(m_strongest, n_aps - m_strongest);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // result * (n - k + i) / i stays integral at every step; divide by
        // the gcd first to keep the intermediate small.
        std::uint64_t num = n_aps - k + i;
        std::uint64_t den = i;
        const std::uint64_t g1 = std::gcd(result, den);
        result /= g1;
        den /= g1;
        num /= den;
        if (result > std::numeric_limits<std::uint64_t>::max() / num) {
            fail(ErrorCode::out_of_range, "max_zone_count overflows 64 bits");
        }
        result *= num;
    }
    return result;
}

ZoneVector one_hot(ZoneIndex zone, std::size_t l_zones)
{
    if (zone >= l_zones) {
        fail(ErrorCode::out_of_range, "zone index " + std::to_string(zone) +
                                          " outside 0.." + std::to_string(l_zones));
    }
    ZoneVector bits = ZoneVector::Zero(static_cast<Eigen::Index>(l_zones));
    bits[static_cast<Eigen::Index>(zone)] = 1;
    return bits;
}

} // namespace ldpcrowd
