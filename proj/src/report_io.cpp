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

#include <ldpcrowd/oracles.hpp>

#include <json.hpp>

namespace ldpcrowd {
namespace {

using ojson = nlohmann::ordered_json;

ojson bits_to_json(const std::vector<bool>& bits)
{
    ojson out = ojson::array();
    for (bool b : bits) out.push_back(b ? 1 : 0);
    return out;
}

std::vector<bool> bits_from_json(const nlohmann::json& j)
{
    std::vector<bool> bits;
    bits.reserve(j.size());
    for (const auto& v : j) {
        const int b = v.get<int>();
        if (b != 0 && b != 1) fail(ErrorCode::malformed_row, "bit vector entries must be 0 or 1");
        bits.push_back(b == 1);
    }
    return bits;
}

} // namespace

std::string report_to_json(const Report& report)
{
    ojson payload;
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, OlhReport>) {
                payload["hash_seed"] = r.hash_seed;
                payload["value"] = r.value;
            } else if constexpr (std::is_same_v<T, OueReport>) {
                payload["bits"] = bits_to_json(r.bits);
            } else if constexpr (std::is_same_v<T, TheReport>) {
                payload["values"] = r.values;
            } else if constexpr (std::is_same_v<T, HrReport>) {
                payload["row_index"] = r.row_index;
                payload["signed_value"] = r.signed_value;
            } else if constexpr (std::is_same_v<T, CmsReport>) {
                payload["hash_index"] = r.hash_index;
                payload["sketch_row"] = bits_to_json(r.sketch_row);
            } else {
                payload["cohort"] = r.cohort;
                payload["bits"] = bits_to_json(r.bits);
            }
        },
        report);
    ojson doc;
    doc["mech"] = to_string(mechanism_of(report));
    doc["payload"] = std::move(payload);
    return doc.dump();
}

Report report_from_json(const std::string& line)
{
    try {
        const auto doc = nlohmann::json::parse(line);
        const auto mech = parse_mechanism(doc.at("mech").get<std::string>());
        const auto& p = doc.at("payload");
        switch (mech) {
            case Mechanism::olh:
                return OlhReport{p.at("hash_seed").get<std::uint64_t>(), p.at("value").get<std::uint64_t>()};
            case Mechanism::oue: return OueReport{bits_from_json(p.at("bits"))};
            case Mechanism::the: return TheReport{p.at("values").get<std::vector<double>>()};
            case Mechanism::hr:
                return HrReport{p.at("row_index").get<std::uint64_t>(), p.at("signed_value").get<double>()};
            case Mechanism::cms:
                return CmsReport{p.at("hash_index").get<std::uint64_t>(), bits_from_json(p.at("sketch_row"))};
            case Mechanism::rappor:
                return RapporReport{p.at("cohort").get<std::uint64_t>(), bits_from_json(p.at("bits"))};
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::malformed_row, std::string("bad report line: ") + e.what());
    }
    fail(ErrorCode::malformed_row, "bad report line");
}

} // namespace ldpcrowd
