#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedswarm/comms_ledger.hpp"
#include "fedswarm/experiment.hpp"

namespace fedswarm::exp {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class ExperimentTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("fedswarm_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    ExperimentConfig tiny(const std::string& sub) const {
        ExperimentConfig c = desk_preset();
        c.trainer.episodes = 5;
        c.trainer.steps_per_episode = 24;
        c.trainer.ddpg.hidden_width = 8;
        c.trainer.ddpg.batch_size = 16;
        c.eval.runs = 2;
        c.eval.time_limit = 3.0;
        c.seeds = {3};
        c.strategies = {train::StrategyKind::FLDDPG};
        c.output_dir = root_ / sub;
        return c;
    }

    fs::path root_;
};

TEST_F(ExperimentTest, OneCellWritesOneRecordSet) {
    const auto c = tiny("one");
    const auto m = run_experiment(c);
    ASSERT_EQ(m.runs.size(), 1u);
    EXPECT_TRUE(m.runs[0].ok);
    const fs::path dir = c.output_dir / "FLDDPG" / "seed_3";
    for (const char* f : {"record.json", "ledger.csv", "ledger_summary.json", "metrics.json", "actor_0.fswn",
                          "critic_3.fswn"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_FALSE(fs::exists(dir / "FAILED"));
    EXPECT_TRUE(fs::exists(c.output_dir / "manifest.json"));
    EXPECT_EQ(load_config(c.output_dir / "config.json"), c);
    std::size_t cells = 0;
    for (const auto& e : fs::directory_iterator(c.output_dir / "FLDDPG")) cells += e.is_directory();
    EXPECT_EQ(cells, 1u);

    const auto loaded = load_manifest(c.output_dir / "manifest.json");
    EXPECT_EQ(loaded.config_hash, config_hash(c));
    EXPECT_EQ(loaded.runs.at(0).files, m.runs[0].files);
}

TEST_F(ExperimentTest, RepeatRunsGiveIdenticalMetrics) {
    const auto a = tiny("a");
    auto b = a;
    b.output_dir = root_ / "b";
    run_experiment(a);
    run_experiment(b);
    const fs::path cell = fs::path("FLDDPG") / "seed_3";
    EXPECT_EQ(slurp(a.output_dir / cell / "metrics.json"), slurp(b.output_dir / cell / "metrics.json"));
    EXPECT_EQ(slurp(a.output_dir / cell / "record.json"), slurp(b.output_dir / cell / "record.json"));
    EXPECT_EQ(slurp(a.output_dir / cell / "actor_1.fswn"), slurp(b.output_dir / cell / "actor_1.fswn"));
}

TEST_F(ExperimentTest, AllStrategiesAndPlotData) {
    auto c = tiny("all");
    c.strategies.assign(std::begin(train::kAllStrategies), std::end(train::kAllStrategies));
    c.seeds = {1, 2};
    const auto m = run_experiment(c);
    emit_plot_data({m}, c.output_dir);

    const auto curves = slurp(c.output_dir / "reward_curves.csv");
    EXPECT_EQ(curves.substr(0, curves.find('\n')), "episode,strategy,seed,r_avg");
    EXPECT_EQ(count_lines(curves), 1 + 4 * 2 * c.trainer.episodes);

    const auto summary = slurp(c.output_dir / "summary.csv");
    EXPECT_EQ(summary.substr(0, summary.find('\n')), "strategy,n_ci,n_fa,rho_s,t_comp,comm_mb");
    EXPECT_EQ(count_lines(summary), 5u);
    EXPECT_NE(summary.find("\nIDDPG,"), std::string::npos);
    const auto iddpg_line = summary.substr(summary.find("\nIDDPG,") + 1);
    EXPECT_EQ(iddpg_line.substr(iddpg_line.find_last_of(',', iddpg_line.find('\n')) + 1, 4), "0.0\n");

    const auto best = slurp(c.output_dir / "best_models.csv");
    EXPECT_EQ(count_lines(best), 5u);

    // IDDPG metrics carry a zero ledger.
    const auto iddpg = parse_metrics_json(slurp(c.output_dir / "IDDPG" / "seed_1" / "metrics.json"));
    EXPECT_EQ(iddpg.comm_bytes, 0u);
}

TEST_F(ExperimentTest, SummaryIsRecomputedFromCellFiles) {
    auto c = tiny("recompute");
    c.seeds = {1, 2, 3};
    const auto m = run_experiment(c);
    double rho = 0.0, n_ci = 0.0;
    for (auto seed : c.seeds) {
        const auto cell = parse_metrics_json(slurp(c.output_dir / "FLDDPG" / ("seed_" + std::to_string(seed)) /
                                                   "metrics.json"));
        rho += cell.rho_s / 3.0;
        n_ci += static_cast<double>(cell.n_ci) / 3.0;
    }
    emit_plot_data({m}, root_ / "plots");
    std::istringstream summary(slurp(root_ / "plots" / "summary.csv"));
    std::string header, row;
    std::getline(summary, header);
    std::getline(summary, row);
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string col; std::getline(ss, col, ',');) cols.push_back(col);
    ASSERT_GE(cols.size(), 4u);
    EXPECT_EQ(cols[0], "FLDDPG");
    EXPECT_NEAR(std::stod(cols[1]), n_ci, 1e-12);
    EXPECT_NEAR(std::stod(cols[3]), rho, 1e-12);
}

TEST_F(ExperimentTest, FullScheduleReportsBudgetVolume) {
    auto c = tiny("full");
    c.trainer.episodes = 120;
    c.trainer.steps_per_episode = 1;
    c.trainer.ddpg.batch_size = 1000;
    c.eval.runs = 1;
    c.eval.time_limit = 0.5;
    c.save_checkpoints = false;
    const auto m = run_experiment(c);
    emit_plot_data({m}, c.output_dir);
    const auto summary = slurp(c.output_dir / "summary.csv");
    const auto row = summary.substr(summary.find('\n') + 1);
    EXPECT_EQ(row.substr(row.find_last_of(',') + 1), "132.0\n");
}

TEST_F(ExperimentTest, AbortLeavesFailureMarker) {
    auto c = tiny("abort");
    c.trainer.comms.total_budget = 2 * c.trainer.comms.model_cycle();
    EXPECT_THROW(run_experiment(c), comms::BudgetExceeded);
    const fs::path dir = c.output_dir / "FLDDPG" / "seed_3";
    EXPECT_TRUE(fs::exists(dir / "FAILED"));
    EXPECT_TRUE(fs::exists(dir / "ledger.csv"));
    EXPECT_FALSE(fs::exists(dir / "metrics.json"));
    const auto m = load_manifest(c.output_dir / "manifest.json");
    ASSERT_EQ(m.runs.size(), 1u);
    EXPECT_FALSE(m.runs[0].ok);
    EXPECT_NE(m.runs[0].error.find("budget"), std::string::npos);
    // Two full rounds (up + down each) fit; the third upload does not.
    EXPECT_EQ(count_lines(slurp(dir / "ledger.csv")), 1u + 4u);
}

TEST(MetricsJsonTest, RoundTrip) {
    CellMetrics m;
    m.strategy = train::StrategyKind::SEDDPG;
    m.seed = 9;
    m.r_avg_curve = {-1.5, 2.25, 0.1};
    m.n_ci = 1;
    m.n_fa = 2;
    m.rho_s = 0.35;
    m.t_comp = 12.5;
    m.comm_bytes = 115'200'000;
    m.agents = {{0.5, 10.0}, {0.2, std::nullopt}};
    const auto back = parse_metrics_json(metrics_json(m));
    EXPECT_EQ(metrics_json(back), metrics_json(m));
    const auto j = nlohmann::json::parse(metrics_json(m));
    for (const char* key : {"r_avg_curve", "n_ci", "n_fa", "rho_s", "t_comp"}) EXPECT_TRUE(j.contains(key)) << key;
}

}  // namespace
}  // namespace fedswarm::exp
