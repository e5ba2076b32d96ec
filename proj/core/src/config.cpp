#include "fedswarm/config.hpp"

#include <algorithm>
#include <cctype>
#include <concepts>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fedswarm/error.hpp"

namespace fedswarm::exp {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can be rejected.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(label() + ": expected an object");
    }

    std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json* find(std::string_view key) {
        const auto it = node_.find(std::string(key));
        if (it == node_.end()) return nullptr;
        seen_.insert(std::string(key));
        return &*it;
    }

    template <std::unsigned_integral U>
    void read(std::string_view key, U& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) throw ConfigError(field(key) + ": expected a non-negative integer");
            out = v->get<U>();
        }
    }
    void read(std::string_view key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
            out = v->get<double>();
        }
    }
    void read(std::string_view key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }
    void read(std::string_view key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
            out = v->get<std::string>();
        }
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.contains(key)) throw ConfigError(field(key) + ": unknown key");
        }
    }

private:
    std::string label() const { return path_.empty() ? "config" : path_; }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

sim::ArenaSpec parse_arena(const json& node, const std::string& path) {
    sim::ArenaSpec arena;
    Section s(node, path);
    s.read("width", arena.width);
    s.read("height", arena.height);
    s.read("goal_radius", arena.goal_radius);
    s.read("robot_radius", arena.robot_radius);
    if (const json* obs = s.find("obstacles")) {
        if (!obs->is_array()) throw ConfigError(s.field("obstacles") + ": expected an array");
        for (std::size_t i = 0; i < obs->size(); ++i) {
            const json& r = (*obs)[i];
            const std::string where = s.field("obstacles") + "[" + std::to_string(i) + "]";
            if (!r.is_array() || r.size() != 4 || !std::all_of(r.begin(), r.end(), [](const json& x) {
                    return x.is_number();
                })) {
                throw ConfigError(where + ": expected [xmin, ymin, xmax, ymax]");
            }
            arena.obstacles.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()});
        }
    }
    s.finish();
    try {
        arena.validate();
    } catch (const InvalidWorldState& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return arena;
}

ojson arena_json(const sim::ArenaSpec& a) {
    ojson obstacles = ojson::array();
    for (const auto& r : a.obstacles) obstacles.push_back({r.xmin, r.ymin, r.xmax, r.ymax});
    return ojson{{"width", a.width},
                 {"height", a.height},
                 {"goal_radius", a.goal_radius},
                 {"robot_radius", a.robot_radius},
                 {"obstacles", obstacles}};
}

// Trainer validation reports bare field names; map them to their place in the file.
const std::map<std::string, std::string>& field_paths() {
    static const std::map<std::string, std::string> paths = {
        {"episodes", "trainer.episodes"},
        {"steps_per_episode", "trainer.steps_per_episode"},
        {"robots", "trainer.robots"},
        {"tau", "trainer.tau"},
        {"federated_period", "trainer.federated_period"},
        {"seddpg_period", "trainer.seddpg_period"},
        {"snddpg_period", "trainer.snddpg_period"},
        {"dt", "trainer.dt"},
        {"min_start_goal_distance", "trainer.min_start_goal_distance"},
        {"gamma", "ddpg.gamma"},
        {"hidden_width", "ddpg.hidden_width"},
        {"batch_size", "ddpg.batch_size"},
        {"train_every", "ddpg.train_every"},
        {"target_every", "ddpg.target_every"},
        {"buffer_capacity", "ddpg.buffer_capacity"},
        {"actor_lr", "ddpg.actor_lr"},
        {"critic_lr", "ddpg.critic_lr"},
        {"noise_v", "ddpg.noise_v"},
        {"noise_omega", "ddpg.noise_omega"},
    };
    return paths;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (strategies.empty()) throw ConfigError("strategies: at least one strategy is required");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    if (!(arena_size > 0.0)) throw ConfigError("arena_size: must be > 0");
    if (eval.runs == 0) throw ConfigError("eval.runs: must be >= 1");
    if (!(eval.time_limit > 0.0)) throw ConfigError("eval.time_limit: must be > 0");
    try {
        trainer.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        const std::string name = msg.substr(0, colon);
        const auto& paths = field_paths();
        if (const auto it = paths.find(name); it != paths.end() && colon != std::string::npos) {
            throw ConfigError(it->second + msg.substr(colon));
        }
        throw;
    }
}

ExperimentConfig full_preset() {
    ExperimentConfig c;
    c.arena_size = 4.0;
    c.trainer.arenas = sim::training_arenas(c.trainer.robots, c.arena_size);
    c.eval.time_limit = static_cast<double>(c.trainer.steps_per_episode) * c.trainer.dt;
    return c;
}

ExperimentConfig desk_preset() {
    ExperimentConfig c;
    c.trainer.robots = 4;
    c.trainer.episodes = 30;
    c.trainer.steps_per_episode = 256;
    c.trainer.ddpg.hidden_width = 64;
    c.trainer.ddpg.batch_size = 64;
    c.arena_size = 2.5;
    c.trainer.arenas = sim::training_arenas(c.trainer.robots, c.arena_size);
    c.eval.time_limit = static_cast<double>(c.trainer.steps_per_episode) * c.trainer.dt;
    c.output_dir = "runs/desk";
    return c;
}

ExperimentConfig preset(std::string_view name) {
    if (name == "full") return full_preset();
    if (name == "desk") return desk_preset();
    throw ConfigError("preset: unknown preset '" + std::string(name) + "' (expected full or desk)");
}

ExperimentConfig parse_config(std::string_view text) {
    const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
    if (blank) {
        ExperimentConfig c = full_preset();
        c.validate();
        return c;
    }

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Section top(root, "");

    std::string preset_name = "full";
    top.read("preset", preset_name);
    ExperimentConfig c = preset(preset_name);
    auto& t = c.trainer;
    const std::size_t preset_robots = t.robots;

    if (const json* node = top.find("trainer")) {
        Section s(*node, "trainer");
        s.read("episodes", t.episodes);
        s.read("steps_per_episode", t.steps_per_episode);
        s.read("robots", t.robots);
        s.read("tau", t.tau);
        s.read("federated_period", t.federated_period);
        s.read("seddpg_period", t.seddpg_period);
        s.read("snddpg_period", t.snddpg_period);
        s.read("dt", t.dt);
        s.read("min_start_goal_distance", t.min_start_goal_distance);
        s.read("enforce_budget", t.enforce_budget);
        s.read("measured_sizes", t.measured_sizes);
        s.finish();
    }
    if (const json* node = top.find("ddpg")) {
        Section s(*node, "ddpg");
        auto& d = t.ddpg;
        s.read("hidden_width", d.hidden_width);
        s.read("batch_size", d.batch_size);
        s.read("train_every", d.train_every);
        s.read("target_every", d.target_every);
        s.read("buffer_capacity", d.buffer_capacity);
        s.read("gamma", d.gamma);
        s.read("actor_lr", d.actor_lr);
        s.read("critic_lr", d.critic_lr);
        s.read("noise_v", d.noise.sigma_v);
        s.read("noise_omega", d.noise.sigma_omega);
        s.finish();
    }
    if (const json* node = top.find("reward")) {
        Section s(*node, "reward");
        s.read("goal_reward", t.reward.goal_reward);
        s.read("collision_penalty", t.reward.collision_penalty);
        s.read("progress_factor", t.reward.progress_factor);
        s.read("proximity_lambda", t.reward.proximity_lambda);
        s.finish();
    }
    if (const json* node = top.find("comms")) {
        Section s(*node, "comms");
        s.read("total_budget_bytes", t.comms.total_budget);
        s.read("model_oneway_bytes", t.comms.model_oneway);
        s.read("buffer_oneway_bytes", t.comms.buffer_oneway);
        s.read("snddpg_per_update_bytes", t.comms.snddpg_per_update);
        s.finish();
    }

    const double preset_size = c.arena_size;
    top.read("arena_size", c.arena_size);
    if (const json* node = top.find("arenas")) {
        if (!node->is_array()) throw ConfigError("arenas: expected an array");
        t.arenas.clear();
        for (std::size_t i = 0; i < node->size(); ++i) {
            t.arenas.push_back(parse_arena((*node)[i], "arenas[" + std::to_string(i) + "]"));
        }
    } else if (t.robots != preset_robots || c.arena_size != preset_size) {
        t.arenas = sim::training_arenas(t.robots, c.arena_size);
    }

    if (const json* node = top.find("strategies")) {
        if (!node->is_array()) throw ConfigError("strategies: expected an array of names");
        c.strategies.clear();
        for (const auto& item : *node) {
            const auto kind = item.is_string() ? train::parse_strategy(item.get<std::string>()) : std::nullopt;
            if (!kind) throw ConfigError("strategies: unknown strategy " + item.dump());
            c.strategies.push_back(*kind);
        }
    }
    if (const json* node = top.find("seeds")) {
        if (!node->is_array()) throw ConfigError("seeds: expected an array of integers");
        c.seeds.clear();
        for (const auto& item : *node) {
            if (!item.is_number_unsigned()) throw ConfigError("seeds: expected non-negative integers");
            c.seeds.push_back(item.get<std::uint64_t>());
        }
    }
    if (const json* node = top.find("eval")) {
        Section s(*node, "eval");
        s.read("runs", c.eval.runs);
        s.read("time_limit", c.eval.time_limit);
        s.finish();
    }
    std::string out = c.output_dir.string();
    top.read("output_dir", out);
    c.output_dir = out;
    top.read("save_checkpoints", c.save_checkpoints);
    top.finish();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string dump_config(const ExperimentConfig& c) {
    const auto& t = c.trainer;
    const auto& d = t.ddpg;
    ojson arenas = ojson::array();
    for (const auto& a : t.arenas) arenas.push_back(arena_json(a));
    ojson strategies = ojson::array();
    for (auto k : c.strategies) strategies.push_back(std::string(train::to_string(k)));

    ojson root;
    root["trainer"] = ojson{{"episodes", t.episodes},
                            {"steps_per_episode", t.steps_per_episode},
                            {"robots", t.robots},
                            {"tau", t.tau},
                            {"federated_period", t.federated_period},
                            {"seddpg_period", t.seddpg_period},
                            {"snddpg_period", t.snddpg_period},
                            {"dt", t.dt},
                            {"min_start_goal_distance", t.min_start_goal_distance},
                            {"enforce_budget", t.enforce_budget},
                            {"measured_sizes", t.measured_sizes}};
    root["ddpg"] = ojson{{"hidden_width", d.hidden_width},   {"batch_size", d.batch_size},
                         {"train_every", d.train_every},     {"target_every", d.target_every},
                         {"buffer_capacity", d.buffer_capacity}, {"gamma", d.gamma},
                         {"actor_lr", d.actor_lr},           {"critic_lr", d.critic_lr},
                         {"noise_v", d.noise.sigma_v},       {"noise_omega", d.noise.sigma_omega}};
    root["reward"] = ojson{{"goal_reward", t.reward.goal_reward},
                           {"collision_penalty", t.reward.collision_penalty},
                           {"progress_factor", t.reward.progress_factor},
                           {"proximity_lambda", t.reward.proximity_lambda}};
    root["comms"] = ojson{{"total_budget_bytes", t.comms.total_budget},
                          {"model_oneway_bytes", t.comms.model_oneway},
                          {"buffer_oneway_bytes", t.comms.buffer_oneway},
                          {"snddpg_per_update_bytes", t.comms.snddpg_per_update}};
    root["arena_size"] = c.arena_size;
    root["arenas"] = arenas;
    root["strategies"] = strategies;
    root["seeds"] = c.seeds;
    root["eval"] = ojson{{"runs", c.eval.runs}, {"time_limit", c.eval.time_limit}};
    root["output_dir"] = c.output_dir.string();
    root["save_checkpoints"] = c.save_checkpoints;
    return root.dump(2) + "\n";
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << dump_config(config);
    if (!out) throw ConfigError("failed writing " + path.string());
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : dump_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    const auto& x = a.trainer;
    const auto& y = b.trainer;
    return x.episodes == y.episodes && x.steps_per_episode == y.steps_per_episode && x.robots == y.robots &&
           x.tau == y.tau && x.federated_period == y.federated_period && x.seddpg_period == y.seddpg_period &&
           x.snddpg_period == y.snddpg_period && x.ddpg == y.ddpg && x.reward == y.reward && x.dt == y.dt &&
           x.min_start_goal_distance == y.min_start_goal_distance && x.arenas == y.arenas && x.comms == y.comms &&
           x.enforce_budget == y.enforce_budget && x.measured_sizes == y.measured_sizes &&
           a.arena_size == b.arena_size && a.strategies == b.strategies && a.seeds == b.seeds &&
           a.eval.runs == b.eval.runs && a.eval.time_limit == b.eval.time_limit && a.output_dir == b.output_dir &&
           a.save_checkpoints == b.save_checkpoints;
}

sim::ArenaSpec load_arena(std::string_view spec) {
    const std::filesystem::path path{std::string(spec)};
    if (std::filesystem::is_regular_file(path)) {
        json node;
        try {
            node = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw ConfigError(path.string() + ": not valid JSON: " + e.what());
        }
        return parse_arena(node, "arena");
    }

    std::string name(spec);
    double size = 4.0;
    if (const auto colon = name.find(':'); colon != std::string::npos) {
        try {
            size = std::stod(name.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("arena: bad size in '" + name + "'");
        }
        name.resize(colon);
    }
    static const std::map<std::string, std::size_t> layouts = {{"open", 0}, {"pillar", 1}, {"walls", 2}, {"boxes", 3}};
    const auto it = layouts.find(name);
    if (it == layouts.end()) {
        throw ConfigError("arena: '" + std::string(spec) +
                          "' is neither a file nor a built-in layout (open, pillar, walls, boxes)");
    }
    if (!(size > 0.0)) throw ConfigError("arena: size must be positive");
    return sim::training_arenas(4, size)[it->second];
}

std::string dump_arena(const sim::ArenaSpec& arena) { return arena_json(arena).dump(2) + "\n"; }

}  // namespace fedswarm::exp
