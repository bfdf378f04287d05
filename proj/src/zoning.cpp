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
#include <numeric>

#include <json.hpp>

namespace ldpcrowd {

StrongestSet strongest_aps(std::span<const double> rssi, std::size_t m)
{
    if (m == 0) fail(ErrorCode::invalid_argument, "m must be >= 1");
    std::vector<ApId> sensed;
    sensed.reserve(rssi.size());
    for (ApId i = 0; i < rssi.size(); ++i) {
        if (is_sensed(rssi[i])) sensed.push_back(i);
    }
    if (sensed.size() < m) {
        fail(ErrorCode::insufficient_signals,
             "only " + std::to_string(sensed.size()) + " APs sensed, need " + std::to_string(m));
    }
    std::partial_sort(sensed.begin(), sensed.begin() + static_cast<std::ptrdiff_t>(m), sensed.end(),
                      [&](ApId a, ApId b) {
                          if (rssi[a] != rssi[b]) return rssi[a] > rssi[b];
                          return a < b;
                      });
    sensed.resize(m);
    return StrongestSet(std::move(sensed));
}

ZoneBuild build_zone_table(std::span<const Fingerprint> training, std::size_t m)
{
    if (training.empty()) fail(ErrorCode::invalid_argument, "training set is empty");
    const auto n = training.front().ap_count();
    ZoneBuild out{ZoneTable(n, m), 0};
    for (const auto& fp : training) {
        if (fp.ap_count() != n) {
            fail(ErrorCode::schema_mismatch, "training fingerprints have differing AP counts");
        }
        try {
            out.table.insert(strongest_aps(fp.rssi(), m));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::insufficient_signals) throw;
            ++out.insufficient;
        }
    }
    if (out.table.zone_count() == 0) {
        fail(ErrorCode::empty_table, "no training fingerprint sensed enough APs");
    }
    return out;
}

LookupResult lookup_zone(const ZoneTable& table, std::span<const double> rssi)
{
    if (rssi.size() != table.ap_count()) {
        fail(ErrorCode::schema_mismatch, "RSSI vector length differs from table AP count");
    }
    auto set = strongest_aps(rssi, table.strongest_count());
    if (auto zone = table.find(set)) return *zone;
    return Unmatched{std::move(set)};
}

std::string zone_table_to_json(const ZoneTable& table)
{
    nlohmann::ordered_json zones = nlohmann::ordered_json::array();
    for (ZoneIndex j = 0; j < table.zone_count(); ++j) {
        nlohmann::ordered_json entry;
        entry["aps"] = table.zones()[j].ids();
        entry["zone"] = j;
        zones.push_back(std::move(entry));
    }
    nlohmann::ordered_json doc;
    doc["n_aps"] = table.ap_count();
    doc["m"] = table.strongest_count();
    doc["zones"] = std::move(zones);
    return doc.dump() + "\n";
}

ZoneTable zone_table_from_json(const std::string& text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        ZoneTable table(doc.at("n_aps").get<std::size_t>(), doc.at("m").get<std::size_t>());
        auto entries = doc.at("zones");
        std::vector<std::pair<std::size_t, std::vector<ApId>>> rows;
        for (const auto& e : entries) {
            rows.emplace_back(e.at("zone").get<std::size_t>(), e.at("aps").get<std::vector<ApId>>());
        }
        std::sort(rows.begin(), rows.end());
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (rows[j].first != j) {
                fail(ErrorCode::schema_mismatch, "zone indices are not contiguous from 0");
            }
            if (table.insert(StrongestSet(rows[j].second)) != j) {
                fail(ErrorCode::schema_mismatch, "zone table maps one AP set to two zones");
            }
        }
        return table;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::schema_mismatch, std::string("bad zone table JSON: ") + e.what());
    }
}

} // namespace ldpcrowd
