#include "fedswarm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedswarm/checkpoint.hpp"
#include "fedswarm/comms_ledger.hpp"
#include "fedswarm/error.hpp"
#include "fedswarm/seeding.hpp"

namespace fedswarm::exp {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string record_json(const train::TrainingRecord& r) {
    ojson events = ojson::array();
    for (const auto& e : r.events) events.push_back({{"episode", e.episode}, {"kind", e.kind}, {"detail", e.detail}});
    ojson root;
    root["strategy"] = std::string(train::to_string(r.strategy));
    root["seed"] = r.seed;
    root["episodes"] = r.episodes();
    root["rewards"] = r.rewards;
    root["goals"] = r.goals;
    root["collisions"] = r.collisions;
    root["train_steps"] = r.train_steps;
    root["skipped_train_steps"] = r.skipped_train_steps;
    root["comm_total_bytes"] = r.ledger.total_bytes();
    root["sync_count"] = r.ledger.sync_count();
    root["events"] = events;
    return root.dump(2) + "\n";
}

fs::path cell_dir(train::StrategyKind kind, std::uint64_t seed) {
    return fs::path(std::string(train::to_string(kind))) / ("seed_" + std::to_string(seed));
}

}  // namespace

std::string_view version() { return FEDSWARM_VERSION; }

CellMetrics compute_cell_metrics(const train::TrainingRecord& record, const ExperimentConfig& config) {
    CellMetrics m;
    m.strategy = record.strategy;
    m.seed = record.seed;
    m.r_avg_curve = metrics::average_reward_curve(record);
    m.n_ci = m.r_avg_curve.size() >= 2 ? metrics::count_catastrophic_interference(m.r_avg_curve) : 0;
    m.n_fa = metrics::count_failed_agents(record);
    m.comm_bytes = record.ledger.total_bytes();

    metrics::EvalSpec spec = config.eval;
    spec.dt = config.trainer.dt;
    spec.min_start_goal_distance = config.trainer.min_start_goal_distance;

    double rho_sum = 0.0;
    double t_sum = 0.0;
    std::size_t t_count = 0;
    for (std::size_t i = 0; i < record.final_actors.size(); ++i) {
        const auto& arena = config.trainer.arenas.at(i);
        const auto res = metrics::evaluate(record.final_actors[i], arena, spec,
                                           derive_seed(record.seed, SeedStream::Evaluation, i));
        m.agents.push_back({res.rho_s, res.t_comp});
        rho_sum += res.rho_s;
        if (res.t_comp) {
            t_sum += *res.t_comp;
            ++t_count;
        }
    }
    if (!m.agents.empty()) m.rho_s = rho_sum / static_cast<double>(m.agents.size());
    if (t_count > 0) m.t_comp = t_sum / static_cast<double>(t_count);
    return m;
}

std::string metrics_json(const CellMetrics& m) {
    ojson agents = ojson::array();
    for (const auto& a : m.agents) agents.push_back({{"rho_s", a.rho_s}, {"t_comp", optional_number(a.t_comp)}});
    ojson root;
    root["strategy"] = std::string(train::to_string(m.strategy));
    root["seed"] = m.seed;
    root["r_avg_curve"] = m.r_avg_curve;
    root["n_ci"] = m.n_ci;
    root["n_fa"] = m.n_fa;
    root["rho_s"] = m.rho_s;
    root["t_comp"] = optional_number(m.t_comp);
    root["comm_bytes"] = m.comm_bytes;
    root["agents"] = agents;
    return root.dump(2) + "\n";
}

CellMetrics parse_metrics_json(std::string_view text) {
    const auto root = nlohmann::json::parse(text);
    CellMetrics m;
    const auto kind = train::parse_strategy(root.at("strategy").get<std::string>());
    if (!kind) throw Error("metrics.json: unknown strategy");
    m.strategy = *kind;
    m.seed = root.at("seed").get<std::uint64_t>();
    m.r_avg_curve = root.at("r_avg_curve").get<std::vector<double>>();
    m.n_ci = root.at("n_ci").get<std::size_t>();
    m.n_fa = root.at("n_fa").get<std::size_t>();
    m.rho_s = root.at("rho_s").get<double>();
    if (!root.at("t_comp").is_null()) m.t_comp = root.at("t_comp").get<double>();
    m.comm_bytes = root.at("comm_bytes").get<std::uint64_t>();
    for (const auto& a : root.at("agents")) {
        AgentEval e{a.at("rho_s").get<double>(), std::nullopt};
        if (!a.at("t_comp").is_null()) e.t_comp = a.at("t_comp").get<double>();
        m.agents.push_back(e);
    }
    return m;
}

std::string manifest_json(const RunManifest& manifest) {
    ojson runs = ojson::array();
    for (const auto& r : manifest.runs) {
        runs.push_back({{"strategy", std::string(train::to_string(r.strategy))},
                        {"seed", r.seed},
                        {"dir", r.dir.generic_string()},
                        {"files", r.files},
                        {"duration_s", r.duration_s},
                        {"ok", r.ok},
                        {"error", r.error}});
    }
    ojson root;
    root["config_hash"] = manifest.config_hash;
    root["version"] = manifest.version;
    root["output_dir"] = manifest.output_dir.string();
    root["duration_s"] = manifest.duration_s;
    root["runs"] = runs;
    return root.dump(2) + "\n";
}

RunManifest load_manifest(const fs::path& path) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    RunManifest m;
    m.config_hash = root.at("config_hash").get<std::string>();
    m.version = root.at("version").get<std::string>();
    m.output_dir = path.parent_path();
    m.duration_s = root.at("duration_s").get<double>();
    for (const auto& r : root.at("runs")) {
        RunEntry e;
        const auto kind = train::parse_strategy(r.at("strategy").get<std::string>());
        if (!kind) throw Error(path.string() + ": unknown strategy in runs");
        e.strategy = *kind;
        e.seed = r.at("seed").get<std::uint64_t>();
        e.dir = r.at("dir").get<std::string>();
        e.files = r.at("files").get<std::vector<std::string>>();
        e.duration_s = r.at("duration_s").get<double>();
        e.ok = r.at("ok").get<bool>();
        e.error = r.at("error").get<std::string>();
        m.runs.push_back(std::move(e));
    }
    return m;
}

RunManifest run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
    config.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const fs::path root = config.output_dir;
    fs::create_directories(root);
    save_config(root / "config.json", config);

    RunManifest manifest;
    manifest.config_hash = config_hash(config);
    manifest.version = std::string(version());
    manifest.output_dir = root;

    const auto finish_manifest = [&] {
        manifest.duration_s = std::chrono::duration<double>(clock::now() - start).count();
        write_text(root / "manifest.json", manifest_json(manifest));
    };

    for (auto kind : config.strategies) {
        for (auto seed : config.seeds) {
            const auto cell_start = clock::now();
            RunEntry entry;
            entry.strategy = kind;
            entry.seed = seed;
            entry.dir = cell_dir(kind, seed);
            const fs::path dir = root / entry.dir;
            fs::create_directories(dir);
            fs::remove(dir / "FAILED");
            if (progress) progress(std::string(train::to_string(kind)) + " seed " + std::to_string(seed));

            train::TrainerConfig tc = config.trainer;
            tc.seed = seed;
            train::SwarmTrainer trainer(kind, tc);
            std::exception_ptr failure;
            try {
                while (!trainer.finished()) trainer.run_episode();
            } catch (const Error& e) {
                failure = std::current_exception();
                entry.ok = false;
                entry.error = e.what();
            }

            const train::TrainingRecord record = trainer.take_record();
            const auto put = [&](const std::string& name, std::string_view text) {
                write_text(dir / name, text);
                entry.files.push_back(name);
            };
            put("record.json", record_json(record));
            put("ledger.csv", record.ledger.to_csv());
            put("ledger_summary.json", record.ledger.summary_json());

            if (failure) {
                put("FAILED", entry.error + "\n");
                entry.duration_s = std::chrono::duration<double>(clock::now() - cell_start).count();
                manifest.runs.push_back(std::move(entry));
                finish_manifest();
                std::rethrow_exception(failure);
            }

            put("metrics.json", metrics_json(compute_cell_metrics(record, config)));
            if (config.save_checkpoints) {
                for (std::size_t i = 0; i < record.final_actors.size(); ++i) {
                    const std::string actor = "actor_" + std::to_string(i) + ".fswn";
                    const std::string critic = "critic_" + std::to_string(i) + ".fswn";
                    nn::save_checkpoint(dir / actor, record.final_actors[i]);
                    nn::save_checkpoint(dir / critic, record.final_critics[i]);
                    entry.files.push_back(actor);
                    entry.files.push_back(critic);
                }
            }
            entry.duration_s = std::chrono::duration<double>(clock::now() - cell_start).count();
            manifest.runs.push_back(std::move(entry));
        }
    }
    finish_manifest();
    return manifest;
}

void emit_plot_data(const std::vector<RunManifest>& manifests, const fs::path& out_dir) {
    if (manifests.empty()) throw InvalidArgument("emit_plot_data needs at least one manifest");
    fs::create_directories(out_dir);

    struct Cell {
        CellMetrics metrics;
        fs::path dir;
    };
    std::vector<train::StrategyKind> order;
    std::map<train::StrategyKind, std::vector<Cell>> cells;
    for (const auto& man : manifests) {
        for (const auto& run : man.runs) {
            if (!run.ok) continue;
            const fs::path dir = man.output_dir / run.dir;
            Cell cell{parse_metrics_json(read_text(dir / "metrics.json")), dir};
            if (!cells.contains(run.strategy)) order.push_back(run.strategy);
            cells[run.strategy].push_back(std::move(cell));
        }
    }

    std::string curves = "episode,strategy,seed,r_avg\n";
    for (auto kind : order) {
        for (const auto& c : cells[kind]) {
            for (std::size_t m = 0; m < c.metrics.r_avg_curve.size(); ++m) {
                curves += std::to_string(m + 1) + "," + std::string(train::to_string(kind)) + "," +
                          std::to_string(c.metrics.seed) + "," + number(c.metrics.r_avg_curve[m]) + "\n";
            }
        }
    }
    write_text(out_dir / "reward_curves.csv", curves);

    std::string summary = "strategy,n_ci,n_fa,rho_s,t_comp,comm_mb\n";
    std::string best = "strategy,seed,agent,rho_s,t_comp,actor\n";
    for (auto kind : order) {
        const auto& list = cells[kind];
        const double n = static_cast<double>(list.size());
        double n_ci = 0.0, n_fa = 0.0, rho = 0.0, bytes = 0.0, t_sum = 0.0;
        std::size_t t_count = 0;
        for (const auto& c : list) {
            n_ci += static_cast<double>(c.metrics.n_ci);
            n_fa += static_cast<double>(c.metrics.n_fa);
            rho += c.metrics.rho_s;
            bytes += static_cast<double>(c.metrics.comm_bytes);
            if (c.metrics.t_comp) {
                t_sum += *c.metrics.t_comp;
                ++t_count;
            }
        }
        summary += std::string(train::to_string(kind)) + "," + number(n_ci / n) + "," + number(n_fa / n) + "," +
                   number(rho / n) + "," + (t_count ? number(t_sum / static_cast<double>(t_count)) : "") + "," +
                   comms::format_megabytes(static_cast<std::uint64_t>(std::llround(bytes / n))) + "\n";

        // Highest success rate, then shortest completion time.
        const Cell* best_cell = nullptr;
        std::size_t best_agent = 0;
        for (const auto& c : list) {
            for (std::size_t i = 0; i < c.metrics.agents.size(); ++i) {
                const auto& a = c.metrics.agents[i];
                bool better = best_cell == nullptr;
                if (!better) {
                    const auto& b = best_cell->metrics.agents[best_agent];
                    const double at = a.t_comp.value_or(INFINITY);
                    const double bt = b.t_comp.value_or(INFINITY);
                    better = a.rho_s > b.rho_s || (a.rho_s == b.rho_s && at < bt);
                }
                if (better) {
                    best_cell = &c;
                    best_agent = i;
                }
            }
        }
        if (best_cell) {
            const auto& a = best_cell->metrics.agents[best_agent];
            best += std::string(train::to_string(kind)) + "," + std::to_string(best_cell->metrics.seed) + "," +
                    std::to_string(best_agent) + "," + number(a.rho_s) + "," +
                    (a.t_comp ? number(*a.t_comp) : "") + "," +
                    (best_cell->dir / ("actor_" + std::to_string(best_agent) + ".fswn")).generic_string() + "\n";
        }
    }
    write_text(out_dir / "summary.csv", summary);
    write_text(out_dir / "best_models.csv", best);
}

}  // namespace fedswarm::exp
