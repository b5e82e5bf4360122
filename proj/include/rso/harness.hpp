#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rso/mdp_io.hpp"
#include "rso/parallel.hpp"
#include "rso/qlearn.hpp"

namespace rso {

/// Full description of one multi-trial, multi-operator experiment.
/// Trial i uses base_seed + i for every operator (paired comparison).
struct ExperimentConfig {
    std::string env_name = "mountaincar";
    std::vector<OperatorKind> operators;
    int trials = 5;
    int episodes = 3000;
    int test_episodes = 200;
    std::uint64_t base_seed = 1;
    int window = 100;
    TrainConfig train;
    std::string out_dir = "out";
    std::vector<GridDim> grid_override; // empty = default_grid(env)
    unsigned max_workers = 0;           // 0 = auto
    bool dump_qtables = false;          // write <op>_qtable<i>.txt per trial

    void validate() const {
        EnvKind::parse(env_name);
        if (operators.empty()) throw std::invalid_argument("ExperimentConfig: no operators");
        if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
        if (episodes < 1) throw std::invalid_argument("ExperimentConfig: episodes must be >= 1");
        if (test_episodes < 0)
            throw std::invalid_argument("ExperimentConfig: test_episodes must be >= 0");
        if (window < 1 || window > episodes)
            throw std::invalid_argument("ExperimentConfig: window must lie in [1, episodes]");
    }

    GridSpec grid() const {
        const EnvKind env = EnvKind::parse(env_name);
        return grid_override.empty() ? default_grid(env) : GridSpec(grid_override);
    }
};

/// Parses the key-value experiment config format; unknown keys are errors.
/// Recognized keys: env, operator (repeatable), trials, episodes,
/// test_episodes, base_seed, window, alpha, eps, gamma, out, grid.
inline ExperimentConfig parse_experiment_config(std::istream& is) {
    ExperimentConfig cfg;
    cfg.operators.clear();
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key) || key[0] == '#') continue;
        std::string rest;
        std::getline(ls, rest);
        const std::size_t start = rest.find_first_not_of(" \t");
        rest = start == std::string::npos ? std::string() : rest.substr(start);
        const std::size_t last = rest.find_last_not_of(" \t\r");
        rest = last == std::string::npos ? std::string() : rest.substr(0, last + 1);
        try {
            if (key == "env") cfg.env_name = rest;
            else if (key == "operator") cfg.operators.push_back(OperatorKind::parse(rest));
            else if (key == "trials") cfg.trials = std::stoi(rest);
            else if (key == "episodes") cfg.episodes = std::stoi(rest);
            else if (key == "test_episodes") cfg.test_episodes = std::stoi(rest);
            else if (key == "base_seed") cfg.base_seed = std::stoull(rest);
            else if (key == "window") cfg.window = std::stoi(rest);
            else if (key == "alpha") cfg.train.alpha = Schedule::parse(rest);
            else if (key == "eps") cfg.train.eps = Schedule::parse(rest);
            else if (key == "gamma") cfg.train.gamma = std::stod(rest);
            else if (key == "out") cfg.out_dir = rest;
            else if (key == "grid") cfg.grid_override = parse_grid(rest).dims();
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::exception& e) {
            throw std::invalid_argument("experiment config line " + std::to_string(line_no) +
                                        ": " + e.what());
        }
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    return parse_experiment_config(is);
}

/// Trailing moving-window mean and standard deviation across trials.
/// curve[i] (for i >= window-1) aggregates scores[trial][i-window+1 .. i]
/// over all trials.
struct WindowCurve {
    int window = 1;
    std::vector<double> mean; // indexed by episode - (window - 1)
    std::vector<double> stddev;
};

inline WindowCurve moving_window_average(const std::vector<std::vector<double>>& scores,
                                         int window) {
    if (scores.empty()) throw std::invalid_argument("moving_window_average: no trials");
    const std::size_t episodes = scores.front().size();
    for (const auto& row : scores)
        if (row.size() != episodes)
            throw std::invalid_argument("moving_window_average: ragged score matrix");
    if (window < 1 || static_cast<std::size_t>(window) > episodes)
        throw std::invalid_argument("moving_window_average: window must lie in [1, episodes]");

    WindowCurve curve;
    curve.window = window;
    const std::size_t n_points = episodes - window + 1;
    curve.mean.resize(n_points);
    curve.stddev.resize(n_points);
    const double count = static_cast<double>(scores.size()) * window;
    for (std::size_t i = 0; i < n_points; ++i) {
        double sum = 0.0;
        for (const auto& row : scores)
            for (int j = 0; j < window; ++j) sum += row[i + j];
        const double mean = sum / count;
        double sq = 0.0;
        for (const auto& row : scores)
            for (int j = 0; j < window; ++j) sq += (row[i + j] - mean) * (row[i + j] - mean);
        curve.mean[i] = mean;
        curve.stddev[i] = std::sqrt(sq / count);
    }
    return curve;
}

/// Mean over trials of the mean action gap across the last `episodes_tail`
/// recorded episodes of each trial.
inline double final_gap_report(const std::vector<TrialRecord>& records, int episodes_tail = 1) {
    if (records.empty()) throw std::invalid_argument("final_gap_report: no records");
    if (episodes_tail < 1) throw std::invalid_argument("final_gap_report: tail must be >= 1");
    double acc = 0.0;
    for (const TrialRecord& rec : records) {
        const int n = static_cast<int>(rec.mean_gaps.size());
        const int tail = std::min(episodes_tail, n);
        double trial_acc = 0.0;
        for (int i = n - tail; i < n; ++i) trial_acc += rec.mean_gaps[i];
        acc += trial_acc / tail;
    }
    return acc / records.size();
}

/// Per-operator aggregate written to summary.csv.
struct OperatorSummary {
    std::string op_name;
    double train_last_window_mean = 0.0;
    double train_last_window_std = 0.0;
    double test_mean = 0.0;
    double test_std = 0.0;
    double final_gap_mean = 0.0;
    std::vector<double> per_trial_test_mean; // one entry per trial
};

struct ExperimentResult {
    std::vector<OperatorSummary> summaries;
    std::vector<std::uint64_t> trial_seeds;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / v.size())};
}

inline std::string sanitize_name(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
    return s;
}

} // namespace detail

/// Runs the full paired experiment and writes, under cfg.out_dir:
///   <op>_trial<i>.csv   per-episode `episode,score,mean_gap`
///   <op>_test<i>.csv    per-episode `episode,score` greedy evaluation
///   summary.csv         one row per operator
///   metadata.txt        config echo, per-trial seeds, library version
/// Numeric output uses 17 significant digits; reruns with the same config
/// produce byte-identical files.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    const EnvKind env = EnvKind::parse(cfg.env_name);
    const GridSpec grid = cfg.grid();
    ExperimentResult result;
    for (int i = 0; i < cfg.trials; ++i)
        result.trial_seeds.push_back(cfg.base_seed + static_cast<std::uint64_t>(i));

    for (const OperatorKind& op : cfg.operators) {
        const std::string op_file = detail::sanitize_name(op.to_string());
        std::vector<TrialRecord> records(cfg.trials, TrialRecord{});
        std::vector<std::vector<double>> test_scores(cfg.trials);
        parallel_for_index(static_cast<std::size_t>(cfg.trials), [&](std::size_t i) {
            const std::uint64_t seed = result.trial_seeds[i];
            try {
                records[i] = train(env, grid, op, cfg.episodes, cfg.train, seed);
                if (cfg.test_episodes > 0)
                    test_scores[i] =
                        evaluate(env, grid, records[i].final_q, cfg.test_episodes, seed);
            } catch (const std::exception& e) {
                throw std::runtime_error("trial with seed " + std::to_string(seed) + " failed: " +
                                         e.what());
            }
        }, cfg.max_workers);

        std::vector<std::vector<double>> score_matrix;
        for (int i = 0; i < cfg.trials; ++i) {
            score_matrix.push_back(records[i].scores);
            if (cfg.dump_qtables) {
                std::ofstream qs(fs::path(cfg.out_dir) /
                                 (op_file + "_qtable" + std::to_string(i) + ".txt"));
                save_qtable(records[i].final_q, qs);
            }
            std::ofstream os(fs::path(cfg.out_dir) / (op_file + "_trial" + std::to_string(i) + ".csv"));
            os << "episode,score,mean_gap\n";
            for (std::size_t e = 0; e < records[i].scores.size(); ++e)
                os << e << "," << detail::num17(records[i].scores[e]) << ","
                   << detail::num17(records[i].mean_gaps[e]) << "\n";
            if (cfg.test_episodes > 0) {
                std::ofstream ts(fs::path(cfg.out_dir) / (op_file + "_test" + std::to_string(i) + ".csv"));
                ts << "episode,score\n";
                for (std::size_t e = 0; e < test_scores[i].size(); ++e)
                    ts << e << "," << detail::num17(test_scores[i][e]) << "\n";
            }
        }

        OperatorSummary sum;
        sum.op_name = op.to_string();
        const WindowCurve curve = moving_window_average(score_matrix, cfg.window);
        sum.train_last_window_mean = curve.mean.back();
        sum.train_last_window_std = curve.stddev.back();
        if (cfg.test_episodes > 0) {
            std::vector<double> pooled;
            for (int i = 0; i < cfg.trials; ++i) {
                pooled.insert(pooled.end(), test_scores[i].begin(), test_scores[i].end());
                sum.per_trial_test_mean.push_back(detail::mean_std(test_scores[i]).first);
            }
            const auto [m, s] = detail::mean_std(pooled);
            sum.test_mean = m;
            sum.test_std = s;
        }
        sum.final_gap_mean = final_gap_report(records);
        result.summaries.push_back(std::move(sum));
    }

    std::ofstream sums(fs::path(cfg.out_dir) / "summary.csv");
    sums << "operator,train_last_window_mean,train_last_window_std,test_mean,test_std,final_gap_mean\n";
    for (const OperatorSummary& s : result.summaries)
        sums << s.op_name << "," << detail::num17(s.train_last_window_mean) << ","
             << detail::num17(s.train_last_window_std) << "," << detail::num17(s.test_mean) << ","
             << detail::num17(s.test_std) << "," << detail::num17(s.final_gap_mean) << "\n";

    std::ofstream meta(fs::path(cfg.out_dir) / "metadata.txt");
    meta << "version 1\n";
    meta << "env " << cfg.env_name << "\n";
    for (const OperatorKind& op : cfg.operators) meta << "operator " << op.to_string() << "\n";
    meta << "trials " << cfg.trials << "\n";
    meta << "episodes " << cfg.episodes << "\n";
    meta << "test_episodes " << cfg.test_episodes << "\n";
    meta << "base_seed " << cfg.base_seed << "\n";
    meta << "window " << cfg.window << "\n";
    meta << "alpha " << cfg.train.alpha.to_string() << "\n";
    meta << "eps " << cfg.train.eps.to_string() << "\n";
    meta << "gamma " << detail::num17(cfg.train.gamma) << "\n";
    const GridSpec g = cfg.grid();
    meta << "grid";
    for (const GridDim& d : g.dims())
        meta << " " << detail::num17(d.lo) << ":" << detail::num17(d.hi) << ":" << d.bins;
    meta << "\n";
    meta << "trial_seeds";
    for (std::uint64_t s : result.trial_seeds) meta << " " << s;
    meta << "\n";
    return result;
}

/// One row of the beta-distribution ablation ranking.
struct AblationRow {
    std::string metric;
    int rank = 0; // 1 = best
    std::string op_name;
    double value = 0.0;
};

/// Compares robust-operator beta distributions with paired seeds. If the
/// config lists no operators, the standard trio uniform[0,2), uniform[0,1),
/// constant 1 is used; any non-RSO operator in the list is an error. Ranking
/// direction follows the environment's score convention; the action-gap
/// metric ranks larger as better. Writes ablation.csv next to the usual
/// experiment artifacts.
inline std::vector<AblationRow> ablation_beta(ExperimentConfig cfg) {
    if (cfg.operators.empty()) {
        cfg.operators = {OperatorKind::rso(BetaSpec::uniform(0.0, 2.0)),
                         OperatorKind::rso(BetaSpec::uniform(0.0, 1.0)),
                         OperatorKind::rso(BetaSpec::constant(1.0))};
    }
    for (const OperatorKind& op : cfg.operators)
        if (!op.is_rso())
            throw std::invalid_argument("ablation_beta: operator list must contain only rso specs");
    const ExperimentResult result = run_experiment(cfg);
    const bool maximize = EnvKind::parse(cfg.env_name).maximize_score();

    std::vector<AblationRow> rows;
    auto emit = [&](const std::string& metric, auto getter, bool larger_is_better) {
        std::vector<std::size_t> order(result.summaries.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = getter(result.summaries[a]);
            const double vb = getter(result.summaries[b]);
            return larger_is_better ? va > vb : va < vb;
        });
        for (std::size_t r = 0; r < order.size(); ++r)
            rows.push_back({metric, static_cast<int>(r) + 1, result.summaries[order[r]].op_name,
                            getter(result.summaries[order[r]])});
    };
    if (cfg.test_episodes > 0)
        emit("test_score", [](const OperatorSummary& s) { return s.test_mean; }, maximize);
    emit("train_last_window", [](const OperatorSummary& s) { return s.train_last_window_mean; },
         maximize);
    emit("final_gap", [](const OperatorSummary& s) { return s.final_gap_mean; }, true);

    std::ofstream os(std::filesystem::path(cfg.out_dir) / "ablation.csv");
    os << "metric,rank,operator,value\n";
    for (const AblationRow& r : rows)
        os << r.metric << "," << r.rank << "," << r.op_name << "," << detail::num17(r.value)
           << "\n";
    return rows;
}

} // namespace rso
