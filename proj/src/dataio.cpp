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

#include <ldpcrowd/dataio.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace ldpcrowd {
namespace {

std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n\"";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

std::optional<double> parse_number(std::string_view cell)
{
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

bool same_value(std::string_view cell, std::string_view wanted)
{
    if (cell == wanted) return true;
    const auto a = parse_number(cell);
    const auto b = parse_number(wanted);
    return a && b && *a == *b;
}

std::string json_scalar_to_string(const nlohmann::json& j)
{
    if (j.is_string()) return j.get<std::string>();
    return j.dump();
}

} // namespace

FingerprintSchema FingerprintSchema::from_json(const std::string& text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        FingerprintSchema schema;
        if (doc.contains("delimiter")) {
            const auto d = doc.at("delimiter").get<std::string>();
            if (d.size() != 1) fail(ErrorCode::schema_mismatch, "delimiter must be one character");
            schema.delimiter = d.front();
        }
        schema.rssi_columns = doc.at("rssi_columns").get<std::vector<std::string>>();
        if (schema.rssi_columns.empty()) fail(ErrorCode::schema_mismatch, "schema lists no RSSI columns");
        if (doc.contains("x") && !doc.at("x").is_null()) schema.x = doc.at("x").get<std::string>();
        if (doc.contains("y") && !doc.at("y").is_null()) schema.y = doc.at("y").get<std::string>();
        if (doc.contains("floor") && !doc.at("floor").is_null()) {
            const auto& f = doc.at("floor");
            schema.floor = FloorFilter{f.at("column").get<std::string>(), json_scalar_to_string(f.at("value"))};
        }
        if (doc.contains("not_detected") && !doc.at("not_detected").is_null()) {
            schema.not_detected = json_scalar_to_string(doc.at("not_detected"));
        }
        if (doc.contains("name")) schema.name = doc.at("name").get<std::string>();
        return schema;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::schema_mismatch, std::string("bad schema descriptor: ") + e.what());
    }
}

FingerprintSchema FingerprintSchema::load(const std::filesystem::path& path)
{
    return from_json(read_file(path));
}

std::string FingerprintSchema::to_json() const
{
    nlohmann::ordered_json doc;
    doc["delimiter"] = std::string(1, delimiter);
    doc["rssi_columns"] = rssi_columns;
    doc["x"] = x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
    doc["y"] = y ? nlohmann::ordered_json(*y) : nlohmann::ordered_json(nullptr);
    if (floor) {
        doc["floor"] = {{"column", floor->column}, {"value", floor->value}};
    } else {
        doc["floor"] = nullptr;
    }
    doc["not_detected"] = not_detected ? nlohmann::ordered_json(*not_detected) : nlohmann::ordered_json(nullptr);
    if (!name.empty()) doc["name"] = name;
    return doc.dump(2) + "\n";
}

Dataset load_fingerprints(const std::filesystem::path& path, const FingerprintSchema& schema)
{
    auto data = parse_fingerprints(read_file(path), schema);
    if (data.meta.name.empty()) data.meta.name = path.stem().string();
    return data;
}

Dataset parse_fingerprints(const std::string& text, const FingerprintSchema& schema)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!trim(line).empty()) return true;
        }
        return false;
    };

    if (!next_line()) fail(ErrorCode::schema_mismatch, "fingerprint file has no header row");
    const auto header = split(line, schema.delimiter);
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(header[i]), i);

    auto index_of = [&](const std::string& name) {
        auto it = column.find(name);
        if (it == column.end()) fail(ErrorCode::schema_mismatch, "column '" + name + "' not in header");
        return it->second;
    };

    std::vector<std::size_t> rssi_idx;
    for (const auto& name : schema.rssi_columns) rssi_idx.push_back(index_of(name));
    std::optional<std::size_t> x_idx, y_idx, floor_idx;
    if (schema.x) x_idx = index_of(*schema.x);
    if (schema.y) y_idx = index_of(*schema.y);
    if (schema.floor) floor_idx = index_of(schema.floor->column);

    Dataset data;
    data.meta.name = schema.name;
    data.meta.n_aps = rssi_idx.size();

    auto number_at = [&](const std::vector<std::string_view>& cells, std::size_t idx) {
        const auto v = parse_number(cells[idx]);
        if (!v) {
            fail(ErrorCode::malformed_row, "line " + std::to_string(line_no) + ": '" +
                                               std::string(cells[idx]) + "' is not a number");
        }
        return *v;
    };

    while (next_line()) {
        const auto cells = split(line, schema.delimiter);
        if (cells.size() != header.size()) {
            fail(ErrorCode::schema_mismatch, "line " + std::to_string(line_no) + " has " +
                                                 std::to_string(cells.size()) + " cells, header has " +
                                                 std::to_string(header.size()));
        }
        if (floor_idx && !same_value(cells[*floor_idx], schema.floor->value)) continue;

        std::vector<double> rssi;
        rssi.reserve(rssi_idx.size());
        for (auto idx : rssi_idx) {
            const auto cell = cells[idx];
            if (cell.empty() || (schema.not_detected && cell == *schema.not_detected)) {
                rssi.push_back(missing_rssi);
                continue;
            }
            rssi.push_back(std::max(number_at(cells, idx), missing_rssi));
        }
        std::optional<Location> loc;
        if (x_idx && y_idx) loc = Location{number_at(cells, *x_idx), number_at(cells, *y_idx)};
        data.fingerprints.emplace_back(std::move(rssi), loc);
    }
    data.meta.n_users = data.fingerprints.size();
    return data;
}

std::string format_fingerprints(std::span<const Fingerprint> fps, const FingerprintSchema& schema)
{
    const bool coords = schema.x && schema.y;
    std::ostringstream out;
    out.precision(17);
    const char d = schema.delimiter;
    bool first = true;
    auto cell = [&](const auto& v) {
        if (!first) out << d;
        out << v;
        first = false;
    };
    if (coords) {
        cell(*schema.x);
        cell(*schema.y);
    }
    for (const auto& c : schema.rssi_columns) cell(c);
    out << '\n';
    for (const auto& fp : fps) {
        if (fp.ap_count() != schema.rssi_columns.size()) {
            fail(ErrorCode::schema_mismatch, "fingerprint AP count differs from schema columns");
        }
        first = true;
        if (coords) {
            const auto loc = fp.location().value_or(Location{});
            cell(loc.x);
            cell(loc.y);
        }
        for (double v : fp.rssi()) cell(v);
        out << '\n';
    }
    return out.str();
}

std::vector<std::size_t> scale_counts(std::span<const std::size_t> base, std::size_t n)
{
    const auto total = std::accumulate(base.begin(), base.end(), std::size_t{0});
    if (total == 0) fail(ErrorCode::invalid_argument, "scale_counts: base counts sum to zero");
    std::vector<std::size_t> out(base.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < base.size(); ++j) {
        const double exact = static_cast<double>(base[j]) * static_cast<double>(n) / static_cast<double>(total);
        out[j] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[j];
        remainders.emplace_back(-(exact - std::floor(exact)), j);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++out[remainders[i % remainders.size()].second];
    return out;
}

std::vector<ZoneIndex> synth_population(std::span<const std::size_t> zone_counts, Rng& rng)
{
    const auto total = std::accumulate(zone_counts.begin(), zone_counts.end(), std::size_t{0});
    if (total == 0) fail(ErrorCode::invalid_argument, "synth_population: counts sum to zero");
    std::vector<ZoneIndex> users;
    users.reserve(total);
    for (ZoneIndex j = 0; j < zone_counts.size(); ++j) users.insert(users.end(), zone_counts[j], j);
    for (std::size_t i = users.size() - 1; i > 0; --i) {
        std::swap(users[i], users[rng.below(i + 1)]);
    }
    return users;
}

std::vector<ZoneIndex> synth_population(std::span<const std::size_t> zone_counts, const ZoneTable& table,
                                        Rng& rng)
{
    if (zone_counts.size() != table.zone_count()) {
        fail(ErrorCode::invalid_argument, "synth_population: count vector length differs from zone count");
    }
    return synth_population(zone_counts, rng);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::io, "cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            fail(ErrorCode::io, "failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::io, "cannot move output into place at " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace ldpcrowd
