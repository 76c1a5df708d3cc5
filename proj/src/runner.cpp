#include <ecosim/runner.hpp>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <mutex>
#include <thread>

namespace ecosim {

const std::vector<ExperimentPreset>& experiment_presets()
{
    static const std::vector<ExperimentPreset> presets = {
        {"exp1_single", {{"selection_model", "none"}, {"niche_recommender_enabled", false}}},
        {"exp2_threshold", {{"selection_model", "threshold"}, {"niche_recommender_enabled", true}}},
        {"exp3_ucb", {{"selection_model", "ucb"}, {"niche_recommender_enabled", true}}},
    };
    return presets;
}

std::optional<ExperimentPreset> find_preset(const std::string& name)
{
    for (const auto& p : experiment_presets()) {
        if (p.name == name || p.name.substr(0, p.name.find('_')) == name) return p;
    }
    return std::nullopt;
}

SimConfig configure_experiment(const ExperimentPreset& preset, const SimConfig& base,
                               const nlohmann::json& explicit_overrides)
{
    for (const auto& [key, value] : preset.overrides.items()) {
        if (auto it = explicit_overrides.find(key); it != explicit_overrides.end() && *it != value) {
            throw ValidationError("config sets " + key + "=" + it->dump() + " but experiment " + preset.name +
                                  " requires " + value.dump());
        }
    }
    return apply_overrides(base, preset.overrides);
}

std::string format_number(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

double provider_last_day(const RunResult& run, ProviderId v)
{
    if (run.day_records.empty()) return 0.0;
    const auto& f = run.config.fee_schedule;
    double u = 0.0;
    for (const auto& d : run.day_records.back().per_provider_delta) {
        if (d.provider != v) continue;
        u += (f.display_utility - f.display_fee) * static_cast<double>(d.displays) +
             (f.click_utility - f.click_fee) * static_cast<double>(d.clicks);
    }
    return u;
}

double mean_of(std::span<const double> v)
{
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

FileManifest write_metrics(const RunResult& run, const std::filesystem::path& out_dir, const std::string& experiment,
                           bool log_events, const nlohmann::json& extra_manifest)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw std::runtime_error("cannot create output directory " + out_dir.string());
    }

    std::map<ConsumerId, ConsumerClass> classes;
    for (const auto& c : run.consumers) classes[c.consumer_id] = c.consumer_class;

    FileManifest manifest;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(out_dir / name, content);
        manifest.sha256[name] = sha256_hex(content);
    };

    {
        std::string s = "day,consumer_id,class,recommender_id,list_utility\n";
        s.reserve(run.day_records.size() * run.consumers.size() * 40);
        for (const auto& day : run.day_records) {
            const std::string day_str = std::to_string(day.day) + ",";
            for (const auto& cd : day.per_consumer) {
                s += day_str;
                s += std::to_string(cd.consumer);
                s += ',';
                s += to_string(classes.at(cd.consumer));
                s += ',';
                s += std::to_string(cd.recommender);
                s += ',';
                s += format_number(cd.list_utility);
                s += '\n';
            }
        }
        emit("consumer_daily.csv", s);
    }
    {
        std::string s = "cycle,provider_id,class,recommender_id,displays,clicks,utility\n";
        for (const auto& r : run.provider_cycles) {
            s += std::to_string(r.cycle) + "," + std::to_string(r.provider) + "," + to_string(r.provider_class) + "," +
                 std::to_string(r.recommender) + "," + std::to_string(r.displays) + "," + std::to_string(r.clicks) +
                 "," + format_number(r.utility) + "\n";
        }
        emit("provider_cycle.csv", s);
    }
    {
        std::string s = "cycle,consumer_id,from,to\n";
        for (const auto& e : run.switch_events) {
            s += std::to_string(e.cycle) + "," + std::to_string(e.consumer) + "," + std::to_string(e.from) + "," +
                 std::to_string(e.to) + "\n";
        }
        emit("switches.csv", s);
    }
    if (log_events) {
        std::ostringstream ss;
        write_event_log(run, ss);
        emit("events.jsonl", ss.str());
    }

    nlohmann::json m = extra_manifest;
    m["experiment"] = experiment;
    m["seed"] = run.config.seed;
    m["config"] = run.config;
    m["niche_provider_id"] = run.niche_provider_id;
    m["files"] = manifest.sha256;
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
    return manifest;
}

RunSummary summarize_run(const std::string& experiment, const RunResult& run)
{
    RunSummary s;
    s.experiment = experiment;
    s.config = run.config;
    s.niche_consumer_last_day_values = last_day_utilities(run, ConsumerClass::niche);
    s.mainstream_consumer_last_day_values = last_day_utilities(run, ConsumerClass::mainstream);
    s.niche_consumer_last_day = mean_of(s.niche_consumer_last_day_values);
    s.mainstream_consumer_last_day = mean_of(s.mainstream_consumer_last_day_values);
    std::vector<double> ms_last, ms_total;
    for (const auto& p : run.providers) {
        if (p.provider_class == ConsumerClass::niche) {
            s.niche_provider_last_day += provider_last_day(run, p.provider_id);
            s.niche_provider_total += p.total_utility();
        } else {
            ms_last.push_back(provider_last_day(run, p.provider_id));
            ms_total.push_back(p.total_utility());
        }
    }
    s.mainstream_provider_last_day = mean_of(ms_last);
    s.mainstream_provider_total = mean_of(ms_total);
    return s;
}

Statistic describe(std::span<const double> values)
{
    Statistic st;
    st.n = values.size();
    if (values.empty()) return st;
    st.mean = mean_of(values);
    st.single_sample = values.size() == 1;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double x : values) ss += (x - st.mean) * (x - st.mean);
        st.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return st;
}

SweepSummary summarize_sweep(std::span<const RunSummary> runs)
{
    SweepSummary out;
    out.runs.assign(runs.begin(), runs.end());
    std::map<std::string, std::vector<const RunSummary*>> by_exp;
    for (const auto& r : runs) by_exp[r.experiment].push_back(&r);
    for (const auto& [exp, list] : by_exp) {
        for (const auto* r : list) {
            SimConfig a = r->config, b = list.front()->config;
            a.seed = b.seed = 0;
            if (!(a == b)) throw ValidationError("runs of experiment " + exp + " use different configs");
        }
        auto collect = [&](double RunSummary::*field) {
            std::vector<double> v;
            for (const auto* r : list) v.push_back(r->*field);
            return describe(v);
        };
        auto& agg = out.aggregates[exp];
        agg["niche_consumer"] = collect(&RunSummary::niche_consumer_last_day);
        agg["mainstream_consumer"] = collect(&RunSummary::mainstream_consumer_last_day);
        agg["niche_provider"] = collect(&RunSummary::niche_provider_last_day);
        agg["mainstream_provider"] = collect(&RunSummary::mainstream_provider_last_day);
        agg["niche_provider_total"] = collect(&RunSummary::niche_provider_total);
        agg["mainstream_provider_total"] = collect(&RunSummary::mainstream_provider_total);
    }
    return out;
}

nlohmann::json to_json(const SweepSummary& s)
{
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : s.runs) {
        runs.push_back({{"experiment", r.experiment},
                        {"seed", r.config.seed},
                        {"niche_consumer", r.niche_consumer_last_day},
                        {"mainstream_consumer", r.mainstream_consumer_last_day},
                        {"niche_provider", r.niche_provider_last_day},
                        {"mainstream_provider", r.mainstream_provider_last_day},
                        {"niche_provider_total", r.niche_provider_total},
                        {"mainstream_provider_total", r.mainstream_provider_total},
                        {"niche_consumer_last_day_values", r.niche_consumer_last_day_values},
                        {"mainstream_consumer_last_day_values", r.mainstream_consumer_last_day_values}});
    }
    nlohmann::json agg = nlohmann::json::object();
    for (const auto& [exp, metrics] : s.aggregates) {
        for (const auto& [name, st] : metrics) {
            agg[exp][name] = {{"mean", st.mean}, {"std", st.stddev}, {"n", st.n}, {"single_sample", st.single_sample}};
        }
    }
    return {{"runs", runs}, {"aggregates", agg}};
}

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kMissingInput = 3,
    kInvalidConfig = 4,
    kWriteFailure = 5,
};

struct MissingInput : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct WriteFailure : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

std::filesystem::path resolve_data_dir(const std::string& flag)
{
    std::string dir = flag;
    if (dir.empty()) {
        if (const char* env = std::getenv("ECOSIM_DATA")) dir = env;
    }
    if (dir.empty()) throw MissingInput("no dataset directory: pass --data or set ECOSIM_DATA");
    if (!std::filesystem::is_directory(dir)) throw MissingInput("dataset directory not found: " + dir);
    return dir;
}

nlohmann::json load_overrides(const std::string& path)
{
    if (path.empty()) return nlohmann::json::object();
    if (!std::filesystem::exists(path)) throw MissingInput("config file not found: " + path);
    try {
        return nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
    }
}

SimConfig checked_config(const ExperimentPreset& preset, const nlohmann::json& overrides, std::uint64_t seed)
{
    SimConfig base = apply_overrides(SimConfig{}, overrides);
    SimConfig cfg = configure_experiment(preset, base, overrides);
    cfg.seed = seed;
    if (auto v = validate_config(cfg); !v.empty()) {
        std::string msg = "invalid config:";
        for (const auto& s : v) msg += "\n  " + s;
        throw ValidationError(msg);
    }
    return cfg;
}

Dataset load_dataset(const std::filesystem::path& dir)
{
    try {
        return load_movielens(dir);
    } catch (const ParseError&) {
        throw;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::runtime_error& e) {
        throw MissingInput(e.what());
    }
}

nlohmann::json dataset_manifest(const std::filesystem::path& dir)
{
    nlohmann::json files;
    for (const char* name : {"u.genre", "u.item", "u.data"}) files[name] = sha256_hex(read_file_bytes(dir / name));
    return {{"dataset", {{"path", dir.string()}, {"sha256", files}}}};
}

FileManifest write_checked(const RunResult& r, const std::filesystem::path& out, const std::string& exp, bool log,
                           const nlohmann::json& extra)
{
    try {
        return write_metrics(r, out, exp, log, extra);
    } catch (const std::runtime_error& e) {
        throw WriteFailure(e.what());
    }
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"Decoupled recommender ecosystem simulator"};
    app.require_subcommand(1);

    std::string experiment;
    std::uint64_t seed = 1;
    int seeds = 5;
    std::string data_dir;
    std::string out_dir;
    std::string config_path;
    bool log_events = false;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Run one experiment with one seed");
    run->add_option("--experiment", experiment, "exp1 | exp2 | exp3 (or exp1_single, exp2_threshold, exp3_ucb)")
        ->required();
    run->add_option("--seed", seed, "Master seed")->default_val(1);
    run->add_option("--data", data_dir, "ML-100k directory (falls back to $ECOSIM_DATA)");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--config", config_path, "JSON file of config overrides");
    run->add_flag("--log-events", log_events, "Also write events.jsonl");

    std::vector<std::string> experiments;
    auto* sweep = app.add_subcommand("sweep", "Run experiments over seeds 1..N and summarize");
    sweep->add_option("--seeds", seeds, "Number of seeds (1..N)")->default_val(5)->check(CLI::PositiveNumber);
    sweep->add_option("--experiment", experiments, "Subset of experiments (default: all three)");
    sweep->add_option("--data", data_dir, "ML-100k directory (falls back to $ECOSIM_DATA)");
    sweep->add_option("--out", out_dir, "Output directory")->required();
    sweep->add_option("--config", config_path, "JSON file of config overrides");
    sweep->add_flag("--log-events", log_events, "Also write events.jsonl per run");
    sweep->add_option("--threads", threads, "Concurrent runs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const auto overrides = load_overrides(config_path);
        if (run->parsed()) {
            auto preset = find_preset(experiment);
            if (!preset) {
                std::cerr << "error: unknown experiment '" << experiment << "' (expected exp1, exp2 or exp3)\n";
                return kUsage;
            }
            const auto cfg = checked_config(*preset, overrides, seed);
            const auto dir = resolve_data_dir(data_dir);
            const auto data = load_dataset(dir);
            const auto population = build_population(cfg, data);
            const auto result = run_experiment(cfg, population);
            write_checked(result, out_dir, preset->name, log_events, dataset_manifest(dir));
            const auto s = summarize_run(preset->name, result);
            std::cout << preset->name << " seed " << seed << ": niche consumers " << format_number(s.niche_consumer_last_day)
                      << ", mainstream consumers " << format_number(s.mainstream_consumer_last_day)
                      << ", switches " << result.switch_events.size() << "\n";
            return kOk;
        }

        std::vector<ExperimentPreset> presets;
        if (experiments.empty()) {
            presets = experiment_presets();
        } else {
            for (const auto& name : experiments) {
                auto p = find_preset(name);
                if (!p) {
                    std::cerr << "error: unknown experiment '" << name << "' (expected exp1, exp2 or exp3)\n";
                    return kUsage;
                }
                presets.push_back(*p);
            }
        }
        const auto dir = resolve_data_dir(data_dir);
        const auto data = load_dataset(dir);
        const auto data_manifest = dataset_manifest(dir);

        struct Job
        {
            ExperimentPreset preset;
            SimConfig config;
        };
        std::vector<Job> jobs;
        for (int s = 1; s <= seeds; ++s) {
            for (const auto& p : presets) jobs.push_back({p, checked_config(p, overrides, static_cast<std::uint64_t>(s))});
        }

        std::vector<RunSummary> summaries(jobs.size());
        std::size_t next = 0;
        std::mutex lock;
        auto worker = [&]() {
            while (true) {
                std::size_t i;
                {
                    std::lock_guard g(lock);
                    if (next >= jobs.size()) return;
                    i = next++;
                }
                const auto& job = jobs[i];
                const auto population = build_population(job.config, data);
                const auto result = run_experiment(job.config, population);
                const auto sub = std::filesystem::path(out_dir) / job.preset.name / ("seed_" + std::to_string(job.config.seed));
                write_checked(result, sub, job.preset.name, log_events, data_manifest);
                summaries[i] = summarize_run(job.preset.name, result);
            }
        };
        std::vector<std::future<void>> pool;
        const unsigned n_threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
        for (unsigned t = 0; t < n_threads; ++t) pool.push_back(std::async(std::launch::async, worker));
        for (auto& f : pool) f.get();

        const auto summary = summarize_sweep(summaries);
        try {
            write_file(std::filesystem::path(out_dir) / "summary.json", to_json(summary).dump(2) + "\n");
            std::string csv = "experiment,metric,mean,std,n\n";
            for (const auto& [exp, metrics] : summary.aggregates) {
                for (const auto& [name, st] : metrics) {
                    csv += exp + "," + name + "," + format_number(st.mean) + "," + format_number(st.stddev) + "," +
                           std::to_string(st.n) + "\n";
                }
            }
            write_file(std::filesystem::path(out_dir) / "summary.csv", csv);
        } catch (const std::runtime_error& e) {
            throw WriteFailure(e.what());
        }
        for (const auto& [exp, metrics] : summary.aggregates) {
            std::cout << exp << ": niche consumers " << format_number(metrics.at("niche_consumer").mean)
                      << ", mainstream consumers " << format_number(metrics.at("mainstream_consumer").mean)
                      << ", niche provider total " << format_number(metrics.at("niche_provider_total").mean) << "\n";
        }
        return kOk;
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissingInput;
    } catch (const WriteFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kWriteFailure;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalidConfig;
    } catch (const ParseError& e) {
        std::cerr << "error: dataset parse failure, " << e.what() << "\n";
        return kMissingInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}

} // namespace ecosim
