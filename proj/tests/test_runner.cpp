#include <doctest.h>

#include "toy_universe.hpp"

#include <ecosim/runner.hpp>

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace ecosim;
using namespace ecosim::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir
{
    fs::path path;
    explicit TempDir(const std::string& tag)
    {
        path = fs::temp_directory_path() / ("ecosim_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "ecosim");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

// A miniature dataset in ML-100k layout: 19 genres, 30 items (every fifth one a
// Western), 12 users.
void write_mini_dataset(const fs::path& dir)
{
    const char* genres[] = {"unknown", "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
                            "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical", "Mystery",
                            "Romance", "Sci-Fi", "Thriller", "War", "Western"};
    std::ofstream g(dir / "u.genre");
    for (int i = 0; i < 19; ++i) g << genres[i] << '|' << i << '\n';
    g << '\n';

    std::ofstream it(dir / "u.item");
    for (int id = 1; id <= 30; ++id) {
        it << id << "|Movie " << id << " (1990)|01-Jan-1990||url";
        for (int f = 0; f < 19; ++f) {
            int flag = 0;
            if (f == 18) flag = id % 5 == 0;
            else if (f == 1 + id % 17) flag = 1;
            it << '|' << flag;
        }
        it << '\n';
    }

    std::ofstream d(dir / "u.data");
    for (int u = 1; u <= 12; ++u) {
        for (int id = 1; id <= 30; ++id) {
            if ((u + id) % 3 == 0) d << u << '\t' << id << '\t' << 1 + (u * id) % 5 << '\t' << 880000000 + id << '\n';
        }
    }
}

void write_mini_config(const fs::path& file)
{
    std::ofstream c(file);
    c << R"({"consumer_sample_size": 6, "provider_count": 3, "items_per_mainstream_provider": 5,
             "days_per_cycle": 3, "cycles": 4, "list_size": 2})";
}

} // namespace

TEST_CASE("format_number and sha256_hex")
{
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(format_number(12.0) == "12");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("experiment presets")
{
    CHECK(experiment_presets().size() == 3);
    REQUIRE(find_preset("exp2"));
    CHECK(find_preset("exp2")->name == "exp2_threshold");
    CHECK(find_preset("exp3_ucb"));
    CHECK_FALSE(find_preset("exp9"));

    const auto c1 = configure_experiment(*find_preset("exp1"), SimConfig{});
    CHECK(c1.selection_model == SelectionModel::none);
    CHECK_FALSE(c1.niche_recommender_enabled);
    const auto c3 = configure_experiment(*find_preset("exp3"), SimConfig{});
    CHECK(c3.selection_model == SelectionModel::ucb);
    CHECK(c3.niche_recommender_enabled);

    CHECK_THROWS_AS(configure_experiment(*find_preset("exp1"), SimConfig{}, {{"selection_model", "ucb"}}),
                    ValidationError);
    CHECK_NOTHROW(configure_experiment(*find_preset("exp1"), SimConfig{}, {{"selection_model", "none"}}));
}

TEST_CASE("write_metrics schemas")
{
    TempDir tmp("metrics");
    const auto pop = toy_population();

    const auto single = run_experiment(toy_config(SelectionModel::none), pop);
    write_metrics(single, tmp.path / "exp1", "exp1_single");
    CHECK(slurp(tmp.path / "exp1" / "switches.csv") == "cycle,consumer_id,from,to\n");

    const auto run = run_experiment(toy_config(SelectionModel::threshold), pop);
    const auto m = write_metrics(run, tmp.path / "exp2", "exp2_threshold", true);
    const auto daily = lines_of(slurp(tmp.path / "exp2" / "consumer_daily.csv"));
    CHECK(daily.front() == "day,consumer_id,class,recommender_id,list_utility");
    CHECK(daily.size() == 1 + 4 * 4);
    CHECK(daily[1].rfind("1,1,mainstream,1,", 0) == 0);

    const auto prov = lines_of(slurp(tmp.path / "exp2" / "provider_cycle.csv"));
    CHECK(prov.front() == "cycle,provider_id,class,recommender_id,displays,clicks,utility");
    CHECK(prov.size() == 1 + 2 * 2 * 2);

    const auto sw = lines_of(slurp(tmp.path / "exp2" / "switches.csv"));
    CHECK(sw.size() == 1 + run.switch_events.size());

    CHECK(lines_of(slurp(tmp.path / "exp2" / "events.jsonl")).size() == 16);

    const auto manifest = nlohmann::json::parse(slurp(tmp.path / "exp2" / "manifest.json"));
    CHECK(manifest["experiment"] == "exp2_threshold");
    CHECK(manifest["seed"] == 20240601u);
    CHECK(manifest["config"]["selection_model"] == "threshold");
    CHECK(manifest["niche_provider_id"] == 2);
    for (const auto& [name, digest] : m.sha256) {
        CHECK(manifest["files"][name] == digest);
        CHECK(sha256_hex(slurp(tmp.path / "exp2" / name)) == digest);
    }
}

TEST_CASE("summarize_sweep")
{
    RunSummary a, b;
    a.experiment = b.experiment = "exp1_single";
    a.config.seed = 1;
    b.config.seed = 2;
    a.niche_consumer_last_day = 0.1;
    b.niche_consumer_last_day = 0.3;
    const std::vector<RunSummary> runs{a, b};
    const auto s = summarize_sweep(runs);
    const auto& st = s.aggregates.at("exp1_single").at("niche_consumer");
    CHECK(st.mean == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(st.stddev == doctest::Approx(0.1414).epsilon(1e-3));
    CHECK(st.n == 2);
    CHECK_FALSE(st.single_sample);

    const std::vector<RunSummary> one{a};
    const auto& single = summarize_sweep(one).aggregates.at("exp1_single").at("niche_consumer");
    CHECK(single.stddev == 0.0);
    CHECK(single.single_sample);

    b.config.list_size = 7;
    const std::vector<RunSummary> mismatched{a, b};
    CHECK_THROWS_AS(summarize_sweep(mismatched), ValidationError);

    const auto j = to_json(s);
    CHECK(j["aggregates"]["exp1_single"]["niche_consumer"]["n"] == 2);
    CHECK(j["runs"].size() == 2);
}

TEST_CASE("run_cli exit codes")
{
    TempDir tmp("cli");
    write_mini_dataset(tmp.path / ".");
    write_mini_config(tmp.path / "mini.json");
    const auto data = tmp.path.string();
    const auto config = (tmp.path / "mini.json").string();

    CHECK(cli({}) == 2);
    CHECK(cli({"run", "--experiment", "exp9", "--data", data, "--out", (tmp.path / "o").string()}) == 2);
    CHECK(cli({"run", "--experiment", "exp1", "--data", (tmp.path / "missing").string(), "--out",
               (tmp.path / "o").string()}) == 3);
    CHECK(cli({"run", "--experiment", "exp1", "--data", data, "--config", (tmp.path / "none.json").string(),
               "--out", (tmp.path / "o").string()}) == 3);

    {
        std::ofstream bad(tmp.path / "bad.json");
        bad << R"({"list_size": 0})";
    }
    CHECK(cli({"run", "--experiment", "exp1", "--data", data, "--config", (tmp.path / "bad.json").string(),
               "--out", (tmp.path / "o").string()}) == 4);
    {
        std::ofstream clash(tmp.path / "clash.json");
        clash << R"({"selection_model": "ucb"})";
    }
    CHECK(cli({"run", "--experiment", "exp1", "--data", data, "--config", (tmp.path / "clash.json").string(),
               "--out", (tmp.path / "o").string()}) == 4);

    {
        std::ofstream blocker(tmp.path / "file");
        blocker << "x";
    }
    CHECK(cli({"run", "--experiment", "exp1", "--data", data, "--config", config, "--out",
               (tmp.path / "file" / "sub").string()}) == 5);
}

TEST_CASE("run_cli run and sweep on a miniature dataset")
{
    TempDir tmp("cli_run");
    write_mini_dataset(tmp.path);
    write_mini_config(tmp.path / "mini.json");
    const auto data = tmp.path.string();
    const auto config = (tmp.path / "mini.json").string();

    const auto out1 = tmp.path / "r1";
    const auto out2 = tmp.path / "r2";
    REQUIRE(cli({"run", "--experiment", "exp3", "--seed", "7", "--data", data, "--config", config, "--out",
                 out1.string(), "--log-events"}) == 0);
    REQUIRE(cli({"run", "--experiment", "exp3", "--seed", "7", "--data", data, "--config", config, "--out",
                 out2.string(), "--log-events"}) == 0);
    for (const char* f : {"consumer_daily.csv", "provider_cycle.csv", "switches.csv", "events.jsonl", "manifest.json"}) {
        CHECK(slurp(out1 / f) == slurp(out2 / f));
    }
    const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
    CHECK(manifest["experiment"] == "exp3_ucb");
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["dataset"]["sha256"].contains("u.data"));
    CHECK(lines_of(slurp(out1 / "consumer_daily.csv")).size() == 1 + 6 * 12);

    const auto sweep = tmp.path / "sweep";
    REQUIRE(cli({"sweep", "--seeds", "2", "--data", data, "--config", config, "--out", sweep.string(), "--threads",
                 "2"}) == 0);
    for (const char* exp : {"exp1_single", "exp2_threshold", "exp3_ucb"}) {
        for (const char* seed : {"seed_1", "seed_2"}) CHECK(fs::exists(sweep / exp / seed / "manifest.json"));
    }
    const auto summary = nlohmann::json::parse(slurp(sweep / "summary.json"));
    CHECK(summary["runs"].size() == 6);
    CHECK(summary["aggregates"]["exp2_threshold"]["niche_consumer"]["n"] == 2);
    const auto csv = lines_of(slurp(sweep / "summary.csv"));
    CHECK(csv.front() == "experiment,metric,mean,std,n");
    CHECK(csv.size() == 1 + 3 * 6);
}
