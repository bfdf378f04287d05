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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <ldpcrowd/domain.hpp>
#include <ldpcrowd/random.hpp>

namespace ldpcrowd {

struct FloorFilter
{
    std::string column;
    std::string value;
};

/// Maps a dataset's column names onto AP indices. JSON form:
/// {"delimiter": ",", "rssi_columns": [...], "x": name|null, "y": name|null,
///  "floor": {"column": name, "value": v}|null, "not_detected": marker}
struct FingerprintSchema
{
    char delimiter = ',';
    std::vector<std::string> rssi_columns;
    std::optional<std::string> x;
    std::optional<std::string> y;
    std::optional<FloorFilter> floor;
    std::optional<std::string> not_detected;
    std::string name;

    static FingerprintSchema from_json(const std::string& text);
    static FingerprintSchema load(const std::filesystem::path& path);
    std::string to_json() const;
};

struct DatasetMeta
{
    std::string name;
    std::size_t n_aps = 0;
    std::size_t n_users = 0;
    std::string area_note;
};

struct Dataset
{
    DatasetMeta meta;
    std::vector<Fingerprint> fingerprints;
};

/// Parses a delimited file with a header row. Empty cells, the schema's
/// not-detected marker and values <= -110 all become `missing_rssi`.
/// Throws io, malformed_row or schema_mismatch.
Dataset load_fingerprints(const std::filesystem::path& path, const FingerprintSchema& schema);
Dataset parse_fingerprints(const std::string& text, const FingerprintSchema& schema);

/// Inverse of parse_fingerprints for the schema's columns (no floor column).
std::string format_fingerprints(std::span<const Fingerprint> fps, const FingerprintSchema& schema);

/// Zone populations of the eight CRI zones, ordered G, E, B, D, F, A, C, H.
inline constexpr std::array<std::size_t, 8> cri_zone_counts = {6, 9, 11, 17, 17, 81, 88, 125};

/// Rescales `base` to total `n` by largest remainder (ties to the lower index).
std::vector<std::size_t> scale_counts(std::span<const std::size_t> base, std::size_t n);

/// Shuffled per-user zone list with exactly zone_counts[j] users in zone j.
std::vector<ZoneIndex> synth_population(std::span<const std::size_t> zone_counts, Rng& rng);
std::vector<ZoneIndex> synth_population(std::span<const std::size_t> zone_counts, const ZoneTable& table,
                                        Rng& rng);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

} // namespace ldpcrowd
