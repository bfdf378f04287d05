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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include <ldpcrowd/error.hpp>

namespace ldpcrowd {

template <class Scalar>
using vec_type = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CountVector = vec_type<double>;

/// Zone indices are dense: 0..L-1.
using ZoneIndex = std::size_t;
using ApId = std::size_t;

/// RSSI reported for an AP that was not sensed (dBm).
inline constexpr double missing_rssi = -110.0;

inline bool is_sensed(double rssi) noexcept { return rssi > missing_rssi; }

struct Location
{
    double x = 0.0;
    double y = 0.0;
};

/// One reference-point (or user) observation: optional planar location and one
/// RSSI value per AP, with `missing_rssi` marking unsensed APs.
class Fingerprint
{
public:
    Fingerprint() = default;
    explicit Fingerprint(std::vector<double> rssi, std::optional<Location> location = std::nullopt);

    const std::vector<double>& rssi() const noexcept { return rssi_; }
    const std::optional<Location>& location() const noexcept { return location_; }
    std::size_t ap_count() const noexcept { return rssi_.size(); }

private:
    std::vector<double> rssi_;
    std::optional<Location> location_;
};

/// K x N matrix of user fingerprints for one time window. Rows carry no
/// coordinates; users never share where they are.
class RssiMatrix
{
public:
    using matrix_type = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    RssiMatrix() = default;
    explicit RssiMatrix(matrix_type rows);
    static RssiMatrix from_fingerprints(const std::vector<Fingerprint>& fps);

    const matrix_type& rows() const noexcept { return rows_; }
    std::size_t user_count() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
    std::size_t ap_count() const noexcept { return static_cast<std::size_t>(rows_.cols()); }

private:
    matrix_type rows_;
};

/// Sorted, duplicate-free set of the M strongest AP ids.
class StrongestSet
{
public:
    StrongestSet() = default;
    explicit StrongestSet(std::vector<ApId> ids);

    const std::vector<ApId>& ids() const noexcept { return ids_; }
    std::size_t size() const noexcept { return ids_.size(); }

    friend auto operator<=>(const StrongestSet&, const StrongestSet&) = default;

private:
    std::vector<ApId> ids_;
};

/// Public mapping from M-subsets of APs to zone indices. Contains no
/// geometry, only AP ids.
class ZoneTable
{
public:
    ZoneTable(std::size_t ap_count, std::size_t strongest_count);

    /// Returns the zone for `set`, assigning the next index if unseen.
    ZoneIndex insert(const StrongestSet& set);
    std::optional<ZoneIndex> find(const StrongestSet& set) const;

    std::size_t ap_count() const noexcept { return ap_count_; }
    std::size_t strongest_count() const noexcept { return strongest_count_; }
    std::size_t zone_count() const noexcept { return by_zone_.size(); }

    /// Sets ordered by zone index.
    const std::vector<StrongestSet>& zones() const noexcept { return by_zone_; }

    friend bool operator==(const ZoneTable& a, const ZoneTable& b)
    {
        return a.ap_count_ == b.ap_count_ && a.strongest_count_ == b.strongest_count_ &&
               a.by_zone_ == b.by_zone_;
    }

private:
    std::size_t ap_count_;
    std::size_t strongest_count_;
    std::map<StrongestSet, ZoneIndex> by_set_;
    std::vector<StrongestSet> by_zone_;
};

/// One-hot zone membership vector.
using ZoneVector = vec_type<std::uint8_t>;

enum class Mechanism { olh, oue, the, hr, cms, rappor };

inline constexpr std::array<Mechanism, 6> all_mechanisms = {
    Mechanism::olh, Mechanism::oue, Mechanism::the, Mechanism::hr, Mechanism::cms, Mechanism::rappor};

std::string_view to_string(Mechanism m);
/// Case-insensitive; throws invalid_argument for unknown names.
Mechanism parse_mechanism(std::string_view name);

enum class RapporDecoder { lasso, least_squares };

struct PrivacyParams
{
    double epsilon = 1.0;
    Mechanism mechanism = Mechanism::oue;
    double the_theta = 1.0;
    std::size_t cms_k = 128;
    std::size_t cms_m = 1024;
    std::size_t rappor_k = 64;
    std::size_t rappor_m = 1024;
    std::size_t rappor_hashes = 1;
    RapporDecoder rappor_decoder = RapporDecoder::lasso;
    /// Seed of the public CMS / RAPPOR hash family.
    std::uint64_t family_seed = 0;

    /// Throws invalid_argument on epsilon <= 0 (or non-finite) and zero sizes.
    void validate() const;
};

/// Per-zone count estimates of one aggregation round.
struct FrequencyEstimate
{
    CountVector raw;
    CountVector clamped;
    std::size_t n_reports = 0;
    /// Zones the decoder could not identify (RAPPOR all-zero design column);
    /// their estimate is 0.
    std::vector<ZoneIndex> unfit_zones;

    static FrequencyEstimate from_raw(CountVector raw, std::size_t n_reports);

    /// Clamped values rounded half-up, as reported in population tables.
    std::vector<long long> rounded() const;
};

/// C(n_aps, m_strongest): the largest number of zones M strongest APs can
/// distinguish.
std::uint64_t max_zone_count(std::size_t n_aps, std::size_t m_strongest);

ZoneVector one_hot(ZoneIndex zone, std::size_t l_zones);

} // namespace ldpcrowd
