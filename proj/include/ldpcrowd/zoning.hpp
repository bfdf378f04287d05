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

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <ldpcrowd/domain.hpp>

namespace ldpcrowd {

/// Ids of the m largest RSSI values; ties go to the lower AP id. Throws
/// insufficient_signals when fewer than m APs are sensed.
StrongestSet strongest_aps(std::span<const double> rssi, std::size_t m);

struct ZoneBuild
{
    ZoneTable table;
    /// Training rows skipped because fewer than m APs were sensed.
    std::size_t insufficient = 0;
};

/// One zone per distinct strongest set, indexed in first-seen order. Throws
/// empty_table if no row yields a strongest set.
ZoneBuild build_zone_table(std::span<const Fingerprint> training, std::size_t m);

struct Unmatched
{
    StrongestSet set;
};

using LookupResult = std::variant<ZoneIndex, Unmatched>;

/// Client-side zone lookup against the public table. Propagates
/// insufficient_signals.
LookupResult lookup_zone(const ZoneTable& table, std::span<const double> rssi);

/// Stable JSON form: {"n_aps": N, "m": M, "zones": [{"aps": [...], "zone": j}, ...]}.
std::string zone_table_to_json(const ZoneTable& table);
ZoneTable zone_table_from_json(const std::string& text);

} // namespace ldpcrowd
