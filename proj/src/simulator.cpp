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

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include <ldpcrowd/dataio.hpp>
#include <ldpcrowd/zoning.hpp>

namespace ldpcrowd {
namespace {

constexpr std::uint64_t population_tag = 0x9070ULL;
constexpr std::uint64_t family_tag = 0xfa3117ULL;
constexpr std::uint64_t round_tag = 0x20a2dULL;

struct PreparedPopulation
{
    // Set for fingerprint sources; zone-count sources are drawn per trial.
    std::optional<LocatedUsers> located;
    std::vector<std::size_t> fixed_counts;
    std::size_t zones = 0;
};

std::vector<std::size_t> histogram(std::span<const ZoneIndex> users, std::size_t l_zones)
{
    std::vector<std::size_t> counts(l_zones, 0);
    for (auto z : users) ++counts.at(z);
    return counts;
}

PreparedPopulation prepare(const ExperimentConfig& config)
{
    PreparedPopulation prep;
    prep.zones = config.zone_count();
    if (const auto* fp = std::get_if<FingerprintSource>(&config.population)) {
        prep.located = locate_users(fp->users, fp->table);
        prep.fixed_counts = histogram(prep.located->zones, prep.zones);
    } else {
        prep.fixed_counts = std::get<ZoneCountsSource>(config.population).counts;
    }
    return prep;
}

TrialResult run_prepared(const ExperimentConfig& config, const PreparedPopulation& prep, Mechanism mechanism,
                         double epsilon, std::size_t trial, std::vector<Report>* trace)
{
    TrialResult result;
    result.mechanism = mechanism;
    result.epsilon = epsilon;
    result.trial = trial;
    result.true_counts = prep.fixed_counts;

    std::vector<ZoneIndex> drawn;
    std::span<const ZoneIndex> users;
    if (prep.located) {
        users = prep.located->zones;
        result.diagnostics = prep.located->diagnostics;
    } else {
        Rng rng(derive_key({config.seed, population_tag, trial}));
        drawn = synth_population(prep.fixed_counts, rng);
        users = drawn;
    }

    PrivacyParams params = config.params;
    params.mechanism = mechanism;
    params.epsilon = epsilon;
    params.family_seed = derive_key({config.seed, family_tag, trial});

    const StreamFactory streams(derive_key({config.seed, round_tag, static_cast<std::uint64_t>(mechanism),
                                            std::bit_cast<std::uint64_t>(epsilon), trial}));
    result.estimate = run_round(users, prep.zones, params, streams, 1, trace);

    const Eigen::Map<const Eigen::Matrix<std::size_t, Eigen::Dynamic, 1>> truth(
        result.true_counts.data(), static_cast<Eigen::Index>(result.true_counts.size()));
    result.metrics = evaluate(truth.cast<double>(), result.estimate.raw);
    return result;
}

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view where)
{
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail(ErrorCode::invalid_argument, "unknown key '" + key + "' in " + std::string(where));
        }
    }
}

} // namespace

void ExperimentConfig::validate() const
{
    if (mechanisms.empty()) fail(ErrorCode::invalid_argument, "config lists no mechanisms");
    if (epsilons.empty()) fail(ErrorCode::invalid_argument, "config lists no epsilon values");
    if (trials == 0) fail(ErrorCode::invalid_argument, "trials must be >= 1");
    for (double eps : epsilons) {
        auto p = params;
        p.epsilon = eps;
        p.validate();
    }
    if (const auto* zc = std::get_if<ZoneCountsSource>(&population)) {
        if (zc->counts.empty()) fail(ErrorCode::invalid_argument, "zone_counts is empty");
        if (std::accumulate(zc->counts.begin(), zc->counts.end(), std::size_t{0}) == 0) {
            fail(ErrorCode::invalid_argument, "zone_counts sum to zero");
        }
    } else {
        const auto& fp = std::get<FingerprintSource>(population);
        if (fp.users.ap_count() != fp.table.ap_count()) {
            fail(ErrorCode::schema_mismatch, "user fingerprints and zone table disagree on AP count");
        }
    }
}

std::size_t ExperimentConfig::zone_count() const
{
    if (const auto* zc = std::get_if<ZoneCountsSource>(&population)) return zc->counts.size();
    return std::get<FingerprintSource>(population).table.zone_count();
}

std::vector<long long> TrialResult::diffs() const
{
    auto out = estimate.rounded();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= static_cast<long long>(true_counts.at(j));
    return out;
}

LocatedUsers locate_users(const RssiMatrix& users, const ZoneTable& table)
{
    LocatedUsers out;
    out.zones.reserve(users.user_count());
    const auto& rows = users.rows();
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const auto row = rows.row(i);
        try {
            const auto hit = lookup_zone(table, std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
            if (const auto* zone = std::get_if<ZoneIndex>(&hit)) {
                out.zones.push_back(*zone);
            } else {
                ++out.diagnostics.unmatched;
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::insufficient_signals) throw;
            ++out.diagnostics.insufficient_signals;
        }
    }
    return out;
}

FrequencyEstimate run_round(std::span<const ZoneIndex> users, std::size_t l_zones, const PrivacyParams& params,
                            const StreamFactory& streams, std::size_t workers, std::vector<Report>* trace)
{
    params.validate();
    for (auto z : users) {
        if (z >= l_zones) fail(ErrorCode::out_of_range, "user zone index outside 0..L-1");
    }
    if (trace) trace->assign(users.size(), Report{});

    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, users.size()));
    std::vector<Aggregator> partial(workers, Aggregator(l_zones, params));

    auto work = [&](std::size_t w) {
        const std::size_t begin = users.size() * w / workers;
        const std::size_t end = users.size() * (w + 1) / workers;
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = streams.stream(i);
            auto report = perturb(users[i], l_zones, params, rng);
            partial[w].add(report);
            if (trace) (*trace)[i] = std::move(report);
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    for (std::size_t w = 1; w < workers; ++w) partial[0].merge(partial[w]);
    return partial[0].estimate();
}

TrialResult run_trial(const ExperimentConfig& config, Mechanism mechanism, double epsilon, std::size_t trial,
                      std::vector<Report>* trace)
{
    config.validate();
    return run_prepared(config, prepare(config), mechanism, epsilon, trial, trace);
}

std::vector<TrialResult> run_sweep(const ExperimentConfig& config)
{
    config.validate();
    const auto prep = prepare(config);

    struct Cell
    {
        Mechanism mechanism;
        double epsilon;
        std::size_t trial;
    };
    std::vector<Cell> cells;
    for (auto m : config.mechanisms) {
        for (double eps : config.epsilons) {
            for (std::size_t t = 0; t < config.trials; ++t) cells.push_back({m, eps, t});
        }
    }

    std::vector<TrialResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_prepared(config, prep, cells[i].mechanism, cells[i].epsilon, cells[i].trial, nullptr);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    const auto workers = std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(1, cells.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return results;
}

std::optional<long long> zone_error_statistic(std::span<const long long> diffs, std::size_t original)
{
    if (original == 0) return std::nullopt;
    long long total = 0;
    for (auto d : diffs) total += d < 0 ? -d : d;
    const auto orig = static_cast<long long>(original);
    return (total + orig - 1) / orig;
}

double quantile(std::vector<double> values, double prob)
{
    if (values.empty()) fail(ErrorCode::invalid_argument, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(std::span<const TrialResult> results)
{
    if (results.empty()) fail(ErrorCode::invalid_argument, "summarize needs at least one result");

    auto make_row = [](std::string mech, double eps, std::string metric, const std::vector<double>& sample) {
        SummaryRow row{std::move(mech), eps, std::move(metric)};
        row.mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
        row.median = quantile(sample, 0.5);
        row.q1 = quantile(sample, 0.25);
        row.q3 = quantile(sample, 0.75);
        return row;
    };

    // Keyed by (mechanism, epsilon); std::map keeps enum-then-epsilon order.
    std::map<std::pair<Mechanism, double>, std::vector<const TrialResult*>> cells;
    for (const auto& r : results) cells[{r.mechanism, r.epsilon}].push_back(&r);

    std::vector<SummaryRow> rows;
    for (const auto& [key, group] : cells) {
        const auto mech = std::string(to_string(key.first));
        std::vector<double> rmse_s, nrmse_s, kendall_s;
        for (const auto* r : group) {
            rmse_s.push_back(r->metrics.rmse);
            if (r->metrics.nrmse) nrmse_s.push_back(*r->metrics.nrmse);
            kendall_s.push_back(static_cast<double>(r->metrics.kendall_tau));
        }
        rows.push_back(make_row(mech, key.second, "rmse", rmse_s));
        if (!nrmse_s.empty()) rows.push_back(make_row(mech, key.second, "nrmse", nrmse_s));
        rows.push_back(make_row(mech, key.second, "kendall_tau", kendall_s));

        const auto zones = group.front()->true_counts.size();
        for (std::size_t j = 0; j < zones; ++j) {
            std::vector<double> abs_diff;
            for (const auto* r : group) abs_diff.push_back(std::abs(static_cast<double>(r->diffs().at(j))));
            rows.push_back(make_row(mech, key.second, "abs_diff_" + std::to_string(j), abs_diff));
        }
    }

    // Per (epsilon, trial): sum |diff| over mechanisms, one statistic per zone.
    std::map<double, std::map<std::size_t, std::vector<const TrialResult*>>> by_eps;
    for (const auto& r : results) by_eps[r.epsilon][r.trial].push_back(&r);
    for (const auto& [eps, trials] : by_eps) {
        const auto zones = trials.begin()->second.front()->true_counts.size();
        for (std::size_t j = 0; j < zones; ++j) {
            std::vector<double> sample;
            for (const auto& [t, group] : trials) {
                std::vector<long long> diffs;
                for (const auto* r : group) diffs.push_back(r->diffs().at(j));
                if (auto stat = zone_error_statistic(diffs, group.front()->true_counts.at(j))) {
                    sample.push_back(static_cast<double>(*stat));
                }
            }
            if (!sample.empty()) rows.push_back(make_row("ALL", eps, "zone_error_" + std::to_string(j), sample));
        }
    }
    return rows;
}

std::string format_number(double value)
{
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string summary_to_csv(std::span<const SummaryRow> rows)
{
    std::string out = "mechanism,epsilon,metric,mean,median,q1,q3\n";
    for (const auto& r : rows) {
        out += r.mechanism + ',' + format_number(r.epsilon) + ',' + r.metric + ',' + format_number(r.mean) + ',' +
               format_number(r.median) + ',' + format_number(r.q1) + ',' + format_number(r.q3) + '\n';
    }
    return out;
}

std::string trial_result_to_json(const TrialResult& r)
{
    auto vec = [](const CountVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::ordered_json doc;
    doc["mechanism"] = to_string(r.mechanism);
    doc["epsilon"] = r.epsilon;
    doc["trial"] = r.trial;
    doc["true_counts"] = r.true_counts;
    doc["raw"] = vec(r.estimate.raw);
    doc["clamped"] = vec(r.estimate.clamped);
    doc["rounded"] = r.estimate.rounded();
    doc["diff"] = r.diffs();
    doc["n_reports"] = r.estimate.n_reports;
    doc["unfit_zones"] = r.estimate.unfit_zones;
    doc["rmse"] = r.metrics.rmse;
    doc["nrmse"] = r.metrics.nrmse ? nlohmann::ordered_json(*r.metrics.nrmse) : nlohmann::ordered_json(nullptr);
    doc["kendall_tau"] = r.metrics.kendall_tau;
    doc["dropped"] = {{"insufficient_signals", r.diagnostics.insufficient_signals},
                      {"unmatched", r.diagnostics.unmatched}};
    return doc.dump();
}

TrialResult trial_result_from_json(const std::string& line)
{
    try {
        const auto doc = nlohmann::json::parse(line);
        TrialResult r;
        r.mechanism = parse_mechanism(doc.at("mechanism").get<std::string>());
        r.epsilon = doc.at("epsilon").get<double>();
        r.trial = doc.at("trial").get<std::size_t>();
        r.true_counts = doc.at("true_counts").get<std::vector<std::size_t>>();
        const auto raw = doc.at("raw").get<std::vector<double>>();
        r.estimate = FrequencyEstimate::from_raw(Eigen::Map<const CountVector>(raw.data(), static_cast<Eigen::Index>(raw.size())),
                                                 doc.at("n_reports").get<std::size_t>());
        r.estimate.unfit_zones = doc.at("unfit_zones").get<std::vector<ZoneIndex>>();
        r.metrics.rmse = doc.at("rmse").get<double>();
        if (!doc.at("nrmse").is_null()) r.metrics.nrmse = doc.at("nrmse").get<double>();
        r.metrics.kendall_tau = doc.at("kendall_tau").get<std::uint64_t>();
        r.diagnostics.insufficient_signals = doc.at("dropped").at("insufficient_signals").get<std::size_t>();
        r.diagnostics.unmatched = doc.at("dropped").at("unmatched").get<std::size_t>();
        if (r.true_counts.size() != static_cast<std::size_t>(r.estimate.raw.size())) {
            fail(ErrorCode::malformed_row, "result line has mismatched vector lengths");
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::malformed_row, std::string("bad result line: ") + e.what());
    }
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("config is not valid JSON: ") + e.what());
    }
    try {
        reject_unknown_keys(doc, {"mechanisms", "epsilons", "trials", "seed", "params", "population", "workers"},
                            "config");
        ExperimentConfig config;

        const auto& mechs = doc.at("mechanisms");
        if (mechs.is_string() && mechs.get<std::string>() == "all") {
            config.mechanisms.assign(all_mechanisms.begin(), all_mechanisms.end());
        } else {
            for (const auto& m : mechs) config.mechanisms.push_back(parse_mechanism(m.get<std::string>()));
        }
        config.epsilons = doc.at("epsilons").get<std::vector<double>>();
        if (doc.contains("trials")) config.trials = doc.at("trials").get<std::size_t>();
        if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("workers")) config.workers = doc.at("workers").get<std::size_t>();

        if (doc.contains("params")) {
            const auto& p = doc.at("params");
            reject_unknown_keys(p, {"the_theta", "cms_k", "cms_m", "rappor_k", "rappor_m", "rappor_hashes",
                                    "rappor_decoder"},
                                "params");
            auto& pp = config.params;
            pp.the_theta = p.value("the_theta", pp.the_theta);
            pp.cms_k = p.value("cms_k", pp.cms_k);
            pp.cms_m = p.value("cms_m", pp.cms_m);
            pp.rappor_k = p.value("rappor_k", pp.rappor_k);
            pp.rappor_m = p.value("rappor_m", pp.rappor_m);
            pp.rappor_hashes = p.value("rappor_hashes", pp.rappor_hashes);
            if (p.contains("rappor_decoder")) {
                const auto d = p.at("rappor_decoder").get<std::string>();
                if (d == "lasso") {
                    pp.rappor_decoder = RapporDecoder::lasso;
                } else if (d == "least_squares") {
                    pp.rappor_decoder = RapporDecoder::least_squares;
                } else {
                    fail(ErrorCode::invalid_argument, "rappor_decoder must be 'lasso' or 'least_squares'");
                }
            }
        }

        const auto& pop = doc.at("population");
        reject_unknown_keys(pop, {"zone_counts", "users", "fingerprints", "schema", "zone_table"}, "population");
        if (pop.contains("zone_counts")) {
            auto counts = pop.at("zone_counts").get<std::vector<std::size_t>>();
            if (pop.contains("users")) counts = scale_counts(counts, pop.at("users").get<std::size_t>());
            config.population = ZoneCountsSource{std::move(counts)};
        } else {
            auto resolve = [&](const std::string& key) {
                std::filesystem::path p = pop.at(key).get<std::string>();
                return p.is_relative() ? base_dir / p : p;
            };
            const auto schema = FingerprintSchema::load(resolve("schema"));
            const auto data = load_fingerprints(resolve("fingerprints"), schema);
            auto table = zone_table_from_json(read_file(resolve("zone_table")));
            config.population = FingerprintSource{RssiMatrix::from_fingerprints(data.fingerprints), std::move(table)};
        }
        return config;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("bad config: ") + e.what());
    }
}

} // namespace ldpcrowd
