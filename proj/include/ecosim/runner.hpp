#pragma once

#include <ecosim/config.hpp>
#include <ecosim/engine.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ecosim {

struct ExperimentPreset
{
    std::string name;
    nlohmann::json overrides;
};

/// exp1_single, exp2_threshold, exp3_ucb. Short forms exp1..exp3 are accepted.
const std::vector<ExperimentPreset>& experiment_presets();
std::optional<ExperimentPreset> find_preset(const std::string& name);

/// Applies a preset on top of a base config. Throws if a preset key was
/// explicitly set to a different value in `explicit_overrides`.
SimConfig configure_experiment(const ExperimentPreset& preset, const SimConfig& base,
                               const nlohmann::json& explicit_overrides = nlohmann::json::object());

// Nine significant digits, the format used by every numeric CSV field.
std::string format_number(double x);

std::string sha256_hex(std::string_view bytes);

struct FileManifest
{
    std::map<std::string, std::string> sha256; // file name -> hex digest
};

/// Writes consumer_daily.csv, provider_cycle.csv, switches.csv, manifest.json
/// (and events.jsonl when requested) into `out_dir`.
FileManifest write_metrics(const RunResult& run, const std::filesystem::path& out_dir,
                           const std::string& experiment = "", bool log_events = false,
                           const nlohmann::json& extra_manifest = nlohmann::json::object());

struct RunSummary
{
    std::string experiment;
    SimConfig config;
    double niche_consumer_last_day = 0.0;
    double mainstream_consumer_last_day = 0.0;
    double niche_provider_last_day = 0.0;
    double mainstream_provider_last_day = 0.0; // mean over mainstream providers
    double niche_provider_total = 0.0;
    double mainstream_provider_total = 0.0; // mean over mainstream providers
    std::vector<double> niche_consumer_last_day_values;
    std::vector<double> mainstream_consumer_last_day_values;
};

RunSummary summarize_run(const std::string& experiment, const RunResult& run);

struct Statistic
{
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation, 0 when n == 1
    std::size_t n = 0;
    bool single_sample = false;
};

Statistic describe(std::span<const double> values);

struct SweepSummary
{
    std::vector<RunSummary> runs;
    // experiment -> metric name -> statistic across seeds
    std::map<std::string, std::map<std::string, Statistic>> aggregates;
};

SweepSummary summarize_sweep(std::span<const RunSummary> runs);

nlohmann::json to_json(const SweepSummary& s);

/// Entry point behind the `ecosim` executable.
int run_cli(int argc, char** argv);

} // namespace ecosim
