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

#include <ldpcrowd/cli.hpp>

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include <ldpcrowd/dataio.hpp>
#include <ldpcrowd/simulator.hpp>
#include <ldpcrowd/zoning.hpp>

namespace ldpcrowd::cli {
namespace {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code)
{
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::out_of_range:
        case ErrorCode::param_mismatch: return usage;
        case ErrorCode::io: return io;
        default: return data;
    }
}

struct ExperimentFlags
{
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> trials;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& flags)
{
    cmd->add_option("--config", flags.config, "Experiment config (JSON)")->required();
    cmd->add_option("--seed", flags.seed, "Override the config seed");
    cmd->add_option("--workers", flags.workers, "Worker threads (does not change results)");
    cmd->add_option("--trials", flags.trials, "Override the config trial count");
}

ExperimentConfig load_config(const ExperimentFlags& flags, std::ostream& err)
{
    const auto text = read_file(flags.config);
    auto config = parse_experiment_config(text, fs::path(flags.config).parent_path());
    bool config_has_seed = false;
    try {
        config_has_seed = nlohmann::json::parse(text).contains("seed");
    } catch (const nlohmann::json::exception&) {
    }
    if (flags.seed) {
        config.seed = *flags.seed;
    } else if (!config_has_seed) {
        if (const char* env = std::getenv(seed_env)) {
            try {
                config.seed = std::stoull(env);
            } catch (const std::exception&) {
                fail(ErrorCode::invalid_argument, std::string(seed_env) + " is not an unsigned integer");
            }
        }
    }
    if (flags.workers) config.workers = *flags.workers;
    if (flags.trials) config.trials = *flags.trials;
    config.validate();
    err << "seed: " << config.seed << '\n';
    return config;
}

int cmd_zones(const std::string& input, const std::string& schema_path, std::size_t m, const std::string& out_path,
              std::ostream& out, std::ostream& err)
{
    const auto schema = FingerprintSchema::load(schema_path);
    const auto data = load_fingerprints(input, schema);
    if (m == 0 || m > data.meta.n_aps) {
        err << "error: --m must be in 1.." << data.meta.n_aps << '\n';
        return usage;
    }
    const auto build = build_zone_table(data.fingerprints, m);
    write_file_atomic(out_path, zone_table_to_json(build.table));
    nlohmann::ordered_json doc;
    doc["zones"] = build.table.zone_count();
    doc["max_zones"] = max_zone_count(data.meta.n_aps, m);
    doc["n_aps"] = data.meta.n_aps;
    doc["records"] = data.meta.n_users;
    doc["insufficient_signals"] = build.insufficient;
    out << doc.dump() << '\n';
    return ok;
}

int cmd_simulate(const ExperimentFlags& flags, const std::optional<std::string>& mechanism,
                 const std::optional<double>& epsilon, const std::string& out_path,
                 const std::optional<std::string>& trace_path, std::ostream& out, std::ostream& err)
{
    auto config = load_config(flags, err);
    const auto mech = mechanism ? parse_mechanism(*mechanism) : config.mechanisms.front();
    const double eps = epsilon ? *epsilon : config.epsilons.front();
    std::vector<Report> trace;
    const auto result = run_trial(config, mech, eps, 0, trace_path ? &trace : nullptr);

    std::string trace_text;
    if (trace_path) {
        for (const auto& r : trace) trace_text += report_to_json(r) + '\n';
        write_file_atomic(*trace_path, trace_text);
    }
    try {
        write_file_atomic(out_path, trial_result_to_json(result) + '\n');
    } catch (...) {
        if (trace_path) {
            std::error_code ec;
            fs::remove(*trace_path, ec);
        }
        throw;
    }
    nlohmann::ordered_json doc;
    doc["seed"] = config.seed;
    doc["mechanism"] = to_string(mech);
    doc["epsilon"] = eps;
    doc["result"] = out_path;
    if (trace_path) doc["trace"] = *trace_path;
    out << doc.dump() << '\n';
    return ok;
}

int cmd_sweep(const ExperimentFlags& flags, const std::string& out_dir, std::ostream& out, std::ostream& err)
{
    const auto config = load_config(flags, err);
    const auto results = run_sweep(config);
    std::string lines;
    for (const auto& r : results) lines += trial_result_to_json(r) + '\n';
    const auto rows = summarize(results);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory " + out_dir);
    const auto results_path = fs::path(out_dir) / "results.jsonl";
    const auto summary_path = fs::path(out_dir) / "summary.csv";
    write_file_atomic(results_path, lines);
    try {
        write_file_atomic(summary_path, summary_to_csv(rows));
    } catch (...) {
        fs::remove(results_path, ec);
        throw;
    }
    nlohmann::ordered_json doc;
    doc["seed"] = config.seed;
    doc["trials"] = results.size();
    doc["results"] = results_path.string();
    doc["summary"] = summary_path.string();
    out << doc.dump() << '\n';
    return ok;
}

int cmd_summarize(const std::string& results_path, const std::string& out_path, std::ostream& out)
{
    std::istringstream in(read_file(results_path));
    std::vector<TrialResult> results;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) results.push_back(trial_result_from_json(line));
    }
    if (results.empty()) fail(ErrorCode::malformed_row, "results file holds no trial results");
    const auto rows = summarize(results);
    write_file_atomic(out_path, summary_to_csv(rows));
    nlohmann::ordered_json doc;
    doc["results"] = results.size();
    doc["rows"] = rows.size();
    doc["summary"] = out_path;
    out << doc.dump() << '\n';
    return ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Private zone-population estimation from Wi-Fi fingerprints", "ldpcrowd"};
    app.require_subcommand(1, 1);

    std::string input, schema, out_path, results_path;
    std::size_t m = 3;
    auto* zones = app.add_subcommand("zones", "Build the public zone table from training fingerprints");
    zones->add_option("--input", input, "Fingerprint file")->required();
    zones->add_option("--schema", schema, "Schema descriptor (JSON)")->required();
    zones->add_option("--m", m, "Number of strongest APs per zone")->required();
    zones->add_option("--out", out_path, "Zone table output path")->required();

    ExperimentFlags sim_flags;
    std::optional<std::string> sim_mechanism, trace_path;
    std::optional<double> sim_epsilon;
    auto* simulate = app.add_subcommand("simulate", "Run a single aggregation round");
    add_experiment_flags(simulate, sim_flags);
    simulate->add_option("--out", out_path, "Trial result output path")->required();
    simulate->add_option("--mechanism", sim_mechanism, "Mechanism (defaults to the first in the config)");
    simulate->add_option("--epsilon", sim_epsilon, "Privacy level (defaults to the first in the config)");
    simulate->add_option("--trace", trace_path, "Write every report as JSON lines");

    ExperimentFlags sweep_flags;
    std::string out_dir;
    auto* sweep = app.add_subcommand("sweep", "Run every mechanism x epsilon x trial cell");
    add_experiment_flags(sweep, sweep_flags);
    sweep->add_option("--out", out_dir, "Output directory")->required();

    auto* summ = app.add_subcommand("summarize", "Summarize a results file");
    summ->add_option("--results", results_path, "Results file (JSON lines)")->required();
    summ->add_option("--out", out_path, "Summary output path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return usage;
    }

    try {
        if (*zones) return cmd_zones(input, schema, m, out_path, out, err);
        if (*simulate) return cmd_simulate(sim_flags, sim_mechanism, sim_epsilon, out_path, trace_path, out, err);
        if (*sweep) return cmd_sweep(sweep_flags, out_dir, out, err);
        return cmd_summarize(results_path, out_path, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

} // namespace ldpcrowd::cli
