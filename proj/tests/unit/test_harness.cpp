#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rso/harness.hpp"

using namespace rso;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ExperimentConfig tiny_config(const std::string& out) {
    ExperimentConfig cfg;
    cfg.env_name = "mountaincar";
    cfg.operators = {OperatorKind::bellman(), OperatorKind::rso(BetaSpec::constant(0.0))};
    cfg.trials = 2;
    cfg.episodes = 15;
    cfg.test_episodes = 3;
    cfg.window = 5;
    cfg.base_seed = 40;
    cfg.out_dir = out;
    return cfg;
}

} // namespace

TEST_CASE("moving_window_average") {
    SUBCASE("constant scores give a flat curve with zero std") {
        const std::vector<std::vector<double>> scores(3, std::vector<double>(10, 4.0));
        const WindowCurve c = moving_window_average(scores, 4);
        CHECK(c.mean.size() == 7);
        for (double m : c.mean) CHECK(m == doctest::Approx(4.0));
        for (double s : c.stddev) CHECK(s == doctest::Approx(0.0));
    }
    SUBCASE("window = 1 is the per-episode cross-trial mean") {
        const std::vector<std::vector<double>> scores = {{1.0, 2.0}, {3.0, 6.0}};
        const WindowCurve c = moving_window_average(scores, 1);
        CHECK(c.mean == std::vector<double>{2.0, 4.0});
    }
    SUBCASE("scores 1..N with window 2 give k - 0.5 at index k") {
        std::vector<double> row(10);
        for (int i = 0; i < 10; ++i) row[i] = i + 1;
        const WindowCurve c = moving_window_average({row}, 2);
        for (std::size_t i = 0; i < c.mean.size(); ++i)
            CHECK(c.mean[i] == doctest::Approx((i + 2) - 0.5)); // episodes i+1, i+2
    }
    SUBCASE("window larger than the episode count throws") {
        CHECK_THROWS_AS(moving_window_average({{1.0, 2.0}}, 3), std::invalid_argument);
    }
}

TEST_CASE("final_gap_report") {
    TrialRecord a;
    a.mean_gaps = {0.0, 0.5, 1.0};
    TrialRecord b;
    b.mean_gaps = {0.0, 0.0, 2.0};

    CHECK(final_gap_report({a}) == doctest::Approx(1.0));          // single trial
    CHECK(final_gap_report({a, b}) == doctest::Approx(1.5));       // mean over trials
    CHECK(final_gap_report({a, b}, 2) == doctest::Approx((0.75 + 1.0) / 2.0));

    TrialRecord zero;
    zero.mean_gaps = {0.0, 0.0};
    CHECK(final_gap_report({zero}) == 0.0); // untrained table

    CHECK_THROWS_AS(final_gap_report({}), std::invalid_argument);
}

TEST_CASE("experiment config parsing mirrors ExperimentConfig") {
    std::stringstream ss;
    ss << "# comment\n"
       << "env mountaincar\n"
       << "operator bellman\n"
       << "operator rso:uniform:0:2\n"
       << "trials 3\n"
       << "episodes 100\n"
       << "test_episodes 10\n"
       << "base_seed 77\n"
       << "window 20\n"
       << "alpha constant:0.2\n"
       << "eps constant:0.05\n"
       << "gamma 0.95\n"
       << "out some_dir\n"
       << "grid -1.2:0.6:40 -0.07:0.07:40\n";
    const ExperimentConfig cfg = parse_experiment_config(ss);
    CHECK(cfg.env_name == "mountaincar");
    CHECK(cfg.operators.size() == 2);
    CHECK(cfg.operators[1] == OperatorKind::rso(BetaSpec::uniform(0.0, 2.0)));
    CHECK(cfg.trials == 3);
    CHECK(cfg.episodes == 100);
    CHECK(cfg.test_episodes == 10);
    CHECK(cfg.base_seed == 77);
    CHECK(cfg.window == 20);
    CHECK(cfg.train.gamma == doctest::Approx(0.95));
    CHECK(cfg.out_dir == "some_dir");
    CHECK(cfg.grid_override.size() == 2);
    CHECK_NOTHROW(cfg.validate());

    std::stringstream bad("frobnicate 12\n");
    CHECK_THROWS_AS(parse_experiment_config(bad), std::invalid_argument);
}

TEST_CASE("ExperimentConfig validation") {
    ExperimentConfig cfg = tiny_config("unused");
    cfg.operators.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config("unused");
    cfg.window = cfg.episodes + 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config("unused");
    cfg.env_name = "pong";
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("run_experiment pairs seeds and equates bellman with zero-beta rso") {
    const fs::path out = fs::temp_directory_path() / "rso_harness_test";
    fs::remove_all(out);
    const ExperimentConfig cfg = tiny_config(out.string());
    const ExperimentResult result = run_experiment(cfg);

    REQUIRE(result.summaries.size() == 2);
    CHECK(result.trial_seeds == std::vector<std::uint64_t>{40, 41});

    // pairing contract is recorded in the metadata
    const std::string meta = slurp(out / "metadata.txt");
    CHECK(meta.find("trial_seeds 40 41") != std::string::npos);

    // operator equivalence at beta = 0: byte-identical per-trial artifacts
    for (int i = 0; i < cfg.trials; ++i) {
        CHECK(slurp(out / ("bellman_trial" + std::to_string(i) + ".csv")) ==
              slurp(out / ("rso_constant_0_trial" + std::to_string(i) + ".csv")));
        CHECK(slurp(out / ("bellman_test" + std::to_string(i) + ".csv")) ==
              slurp(out / ("rso_constant_0_test" + std::to_string(i) + ".csv")));
    }
    CHECK(result.summaries[0].test_mean == doctest::Approx(result.summaries[1].test_mean));

    // reruns are byte-identical (modulo nothing: no timestamps are written)
    const fs::path out2 = fs::temp_directory_path() / "rso_harness_test2";
    fs::remove_all(out2);
    ExperimentConfig cfg2 = cfg;
    cfg2.out_dir = out2.string();
    run_experiment(cfg2);
    CHECK(slurp(out / "summary.csv") == slurp(out2 / "summary.csv"));
    CHECK(slurp(out / "bellman_trial0.csv") == slurp(out2 / "bellman_trial0.csv"));
    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST_CASE("shipped experiment configs load and validate") {
    for (const char* name : {"mountaincar.cfg", "acrobot.cfg", "cartpole.cfg",
                             "ablation_mountaincar.cfg"}) {
        const fs::path path = fs::path(RSO_SOURCE_DIR) / "configs" / name;
        REQUIRE(fs::exists(path));
        const ExperimentConfig cfg = load_experiment_config(path.string());
        if (cfg.operators.empty()) continue; // the ablation fills in its trio
        CHECK_NOTHROW(cfg.validate());
        CHECK_NOTHROW(cfg.grid());
    }
}

TEST_CASE("parallel_for_index covers every index once and propagates errors") {
    std::vector<int> hits(500, 0);
    parallel_for_index(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
    for (int h : hits) CHECK(h == 1);

    CHECK_THROWS_AS(parallel_for_index(
                        100, [](std::size_t i) { if (i == 37) throw std::runtime_error("boom"); },
                        4),
                    std::runtime_error);
}

TEST_CASE("results are independent of the worker count") {
    const fs::path out1 = fs::temp_directory_path() / "rso_workers_1";
    const fs::path outn = fs::temp_directory_path() / "rso_workers_n";
    fs::remove_all(out1);
    fs::remove_all(outn);
    ExperimentConfig cfg = tiny_config(out1.string());
    cfg.max_workers = 1;
    run_experiment(cfg);
    cfg.out_dir = outn.string();
    cfg.max_workers = 4;
    run_experiment(cfg);
    CHECK(slurp(out1 / "summary.csv") == slurp(outn / "summary.csv"));
    CHECK(slurp(out1 / "bellman_trial1.csv") == slurp(outn / "bellman_trial1.csv"));
    fs::remove_all(out1);
    fs::remove_all(outn);
}

TEST_CASE("summary statistics are recomputable from the CSV artifacts") {
    const fs::path out = fs::temp_directory_path() / "rso_recompute";
    fs::remove_all(out);
    ExperimentConfig cfg = tiny_config(out.string());
    cfg.operators = {OperatorKind::rso(BetaSpec::uniform(0.0, 2.0))};
    const ExperimentResult result = run_experiment(cfg);

    // pooled test mean straight from the test CSVs
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < cfg.trials; ++i) {
        std::ifstream is(out / ("rso_uniform_0_2_test" + std::to_string(i) + ".csv"));
        std::string line;
        std::getline(is, line); // header
        while (std::getline(is, line)) {
            sum += std::stod(line.substr(line.find(',') + 1));
            ++n;
        }
    }
    REQUIRE(n == cfg.trials * cfg.test_episodes);
    CHECK(sum / n == doctest::Approx(result.summaries[0].test_mean).epsilon(1e-12));
    fs::remove_all(out);
}

TEST_CASE("ablation_beta emits a full ranking table") {
    const fs::path out = fs::temp_directory_path() / "rso_ablation_test";
    fs::remove_all(out);
    ExperimentConfig cfg = tiny_config(out.string());
    cfg.operators.clear(); // default trio
    const std::vector<AblationRow> rows = ablation_beta(cfg);

    int test_rows = 0, gap_rows = 0;
    for (const AblationRow& r : rows) {
        if (r.metric == "test_score") ++test_rows;
        if (r.metric == "final_gap") ++gap_rows;
    }
    CHECK(test_rows == 3);
    CHECK(gap_rows == 3);
    CHECK(fs::exists(out / "ablation.csv"));

    ExperimentConfig bad = tiny_config((out / "x").string());
    CHECK_THROWS_AS(ablation_beta(bad), std::invalid_argument); // bellman in the list
    fs::remove_all(out);
}
