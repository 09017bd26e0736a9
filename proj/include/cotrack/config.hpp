#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "cotrack/core.hpp"

namespace cotrack {

enum class PlannerKind { greedy, random, continuous, exhaustive };

inline std::string to_string(PlannerKind p) {
    switch (p) {
        case PlannerKind::greedy: return "greedy";
        case PlannerKind::random: return "random";
        case PlannerKind::continuous: return "continuous";
        case PlannerKind::exhaustive: return "exhaustive";
    }
    return "greedy";
}

inline PlannerKind planner_from_string(const std::string& s) {
    if (s == "greedy") return PlannerKind::greedy;
    if (s == "random") return PlannerKind::random;
    if (s == "continuous") return PlannerKind::continuous;
    if (s == "exhaustive") return PlannerKind::exhaustive;
    throw ConfigError("unknown planner: " + s);
}

// Scripted target motion. "until" is an exclusive step bound; steps past the
// last segment command zero velocity.
struct ScriptSegment {
    int until = 0;
    Vec2 velocity = Vec2::Zero();
};

struct TargetScript {
    enum class Kind { stationary, constant, piecewise };
    Kind kind = Kind::stationary;
    Vec2 velocity = Vec2::Zero();          // constant
    std::vector<ScriptSegment> segments;   // piecewise
    double speed_max = std::numeric_limits<double>::infinity();

    double max_speed() const {
        double s = 0.0;
        if (kind == Kind::constant) s = velocity.norm();
        if (kind == Kind::piecewise) {
            for (const auto& seg : segments) s = std::max(s, seg.velocity.norm());
        }
        return std::min(s, speed_max);
    }
};

// All scenario parameters. NaN marks fields whose default is derived from
// other fields; validate_config fills them.
struct ScenarioConfig {
    int n_robots = 0;
    int n_targets = 0;
    double r_c = 0.0;
    double d_min = 0.0;
    double u_max = 0.0;
    double dt = 1.0;
    int horizon = 50;
    double eps_conn = 1e-5;
    double sigma_norm = std::numeric_limits<double>::quiet_NaN();       // default r_c^4 / ln 2
    double action_magnitude = std::numeric_limits<double>::quiet_NaN(); // default u_max
    int action_headings = 8;
    double q_robot = 0.01;
    double q_target = std::numeric_limits<double>::quiet_NaN();         // default max script speed^2
    double sigma_range = 0.1;
    double sigma_bearing = 0.05;
    double sigma_gps = 0.5;
    double range_noise_scale = 0.0;
    double init_cov_robot = 25.0;
    double init_cov_target = 1000.0;
    std::uint64_t seed = 0;
    PlannerKind planner = PlannerKind::greedy;
    std::vector<TargetScript> target_scripts;  // empty -> all stationary
    std::array<double, 2> arena = {10.0, 10.0};
    double cbf_gamma = 1.0;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace detail

// Checks invariants and fills derived defaults. Returns the completed config.
inline ScenarioConfig validate_config(ScenarioConfig cfg) {
    using detail::require;
    require(cfg.n_robots >= 1, "n_robots must be >= 1");
    require(cfg.n_targets >= 1, "n_targets must be >= 1");
    require(cfg.d_min > 0.0, "d_min must be > 0");
    require(cfg.r_c > cfg.d_min, "r_c must be > d_min");
    require(cfg.u_max > 0.0, "u_max must be > 0");
    require(cfg.dt > 0.0, "dt must be > 0");
    require(cfg.horizon >= 1, "horizon must be >= 1");
    require(cfg.eps_conn > 0.0, "eps_conn must be > 0");
    require(cfg.action_headings >= 1, "action_headings must be >= 1");
    require(cfg.q_robot >= 0.0, "q_robot must be >= 0");
    require(cfg.sigma_range >= 0.0, "sigma_range must be >= 0");
    require(cfg.sigma_bearing >= 0.0, "sigma_bearing must be >= 0");
    require(cfg.sigma_gps >= 0.0, "sigma_gps must be >= 0");
    require(cfg.range_noise_scale >= 0.0, "range_noise_scale must be >= 0");
    require(cfg.init_cov_robot >= 0.0, "init_cov_robot must be >= 0");
    require(cfg.init_cov_target >= 0.0, "init_cov_target must be >= 0");
    require(cfg.arena[0] > 0.0 && cfg.arena[1] > 0.0, "arena dimensions must be > 0");
    require(cfg.cbf_gamma > 0.0, "cbf_gamma must be > 0");

    if (std::isnan(cfg.sigma_norm)) {
        cfg.sigma_norm = std::pow(cfg.r_c, 4) / std::log(2.0);
    }
    require(cfg.sigma_norm > 0.0, "sigma_norm must be > 0");

    if (std::isnan(cfg.action_magnitude)) cfg.action_magnitude = cfg.u_max;
    require(cfg.action_magnitude >= 0.0, "action_magnitude must be >= 0");
    require(cfg.action_magnitude <= cfg.u_max, "action_magnitude must be <= u_max");

    if (cfg.target_scripts.empty()) {
        cfg.target_scripts.assign(static_cast<std::size_t>(cfg.n_targets), TargetScript{});
    }
    require(static_cast<int>(cfg.target_scripts.size()) == cfg.n_targets,
            "target_scripts must have one entry per target");
    for (const auto& script : cfg.target_scripts) {
        require(script.speed_max >= 0.0, "script speed_max must be >= 0");
        if (script.kind == TargetScript::Kind::piecewise) {
            int prev = 0;
            for (const auto& seg : script.segments) {
                require(seg.until > prev, "piecewise segments must have increasing 'until'");
                prev = seg.until;
            }
        }
    }

    if (std::isnan(cfg.q_target)) {
        double s = 0.0;
        for (const auto& script : cfg.target_scripts) s = std::max(s, script.max_speed());
        cfg.q_target = s * s;
    }
    require(cfg.q_target >= 0.0, "q_target must be >= 0");
    return cfg;
}

// ---------------------------------------------------------------------------
// JSON (snake_case field names; unknown keys rejected)
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::vector<std::string>& allowed,
                       const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed) {
            if (it.key() == k) { known = true; break; }
        }
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline Vec2 vec2_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be a [x, y] array");
    return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace detail

inline TargetScript script_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("target script must be an object");
    detail::check_keys(j, {"kind", "velocity", "segments", "speed_max"}, "target script");
    TargetScript s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "stationary") {
        s.kind = TargetScript::Kind::stationary;
    } else if (kind == "constant") {
        s.kind = TargetScript::Kind::constant;
        s.velocity = detail::vec2_from_json(j.at("velocity"), "script velocity");
    } else if (kind == "piecewise") {
        s.kind = TargetScript::Kind::piecewise;
        for (const auto& seg : j.at("segments")) {
            detail::check_keys(seg, {"until", "velocity"}, "script segment");
            ScriptSegment out;
            out.until = seg.at("until").get<int>();
            out.velocity = detail::vec2_from_json(seg.at("velocity"), "segment velocity");
            s.segments.push_back(out);
        }
    } else {
        throw ConfigError("unknown script kind: " + kind);
    }
    if (j.contains("speed_max")) s.speed_max = j.at("speed_max").get<double>();
    return s;
}

inline nlohmann::json script_to_json(const TargetScript& s) {
    nlohmann::json j;
    switch (s.kind) {
        case TargetScript::Kind::stationary:
            j["kind"] = "stationary";
            break;
        case TargetScript::Kind::constant:
            j["kind"] = "constant";
            j["velocity"] = {s.velocity.x(), s.velocity.y()};
            break;
        case TargetScript::Kind::piecewise: {
            j["kind"] = "piecewise";
            auto segs = nlohmann::json::array();
            for (const auto& seg : s.segments) {
                segs.push_back({{"until", seg.until},
                                {"velocity", {seg.velocity.x(), seg.velocity.y()}}});
            }
            j["segments"] = segs;
            break;
        }
    }
    if (std::isfinite(s.speed_max)) j["speed_max"] = s.speed_max;
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    static const std::vector<std::string> keys = {
        "n_robots", "n_targets", "r_c", "d_min", "u_max", "dt", "horizon",
        "eps_conn", "sigma_norm", "action_magnitude", "action_headings",
        "q_robot", "q_target", "sigma_range", "sigma_bearing", "sigma_gps",
        "range_noise_scale", "init_cov_robot", "init_cov_target", "seed",
        "planner", "target_scripts", "arena", "cbf_gamma"};
    detail::check_keys(j, keys, "config");

    ScenarioConfig cfg;
    auto get_if = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get_if("n_robots", cfg.n_robots);
    get_if("n_targets", cfg.n_targets);
    get_if("r_c", cfg.r_c);
    get_if("d_min", cfg.d_min);
    get_if("u_max", cfg.u_max);
    get_if("dt", cfg.dt);
    get_if("horizon", cfg.horizon);
    get_if("eps_conn", cfg.eps_conn);
    get_if("sigma_norm", cfg.sigma_norm);
    get_if("action_magnitude", cfg.action_magnitude);
    get_if("action_headings", cfg.action_headings);
    get_if("q_robot", cfg.q_robot);
    get_if("q_target", cfg.q_target);
    get_if("sigma_range", cfg.sigma_range);
    get_if("sigma_bearing", cfg.sigma_bearing);
    get_if("sigma_gps", cfg.sigma_gps);
    get_if("range_noise_scale", cfg.range_noise_scale);
    get_if("init_cov_robot", cfg.init_cov_robot);
    get_if("init_cov_target", cfg.init_cov_target);
    get_if("seed", cfg.seed);
    get_if("cbf_gamma", cfg.cbf_gamma);
    if (j.contains("planner")) cfg.planner = planner_from_string(j.at("planner").get<std::string>());
    if (j.contains("target_scripts")) {
        for (const auto& s : j.at("target_scripts")) cfg.target_scripts.push_back(script_from_json(s));
    }
    if (j.contains("arena")) {
        const auto& a = j.at("arena");
        if (!a.is_array() || a.size() != 2) throw ConfigError("arena must be a [width, height] array");
        cfg.arena = {a[0].get<double>(), a[1].get<double>()};
    }
    return cfg;
}

inline nlohmann::json config_to_json(const ScenarioConfig& cfg) {
    nlohmann::json j;
    j["n_robots"] = cfg.n_robots;
    j["n_targets"] = cfg.n_targets;
    j["r_c"] = cfg.r_c;
    j["d_min"] = cfg.d_min;
    j["u_max"] = cfg.u_max;
    j["dt"] = cfg.dt;
    j["horizon"] = cfg.horizon;
    j["eps_conn"] = cfg.eps_conn;
    if (!std::isnan(cfg.sigma_norm)) j["sigma_norm"] = cfg.sigma_norm;
    if (!std::isnan(cfg.action_magnitude)) j["action_magnitude"] = cfg.action_magnitude;
    j["action_headings"] = cfg.action_headings;
    j["q_robot"] = cfg.q_robot;
    if (!std::isnan(cfg.q_target)) j["q_target"] = cfg.q_target;
    j["sigma_range"] = cfg.sigma_range;
    j["sigma_bearing"] = cfg.sigma_bearing;
    j["sigma_gps"] = cfg.sigma_gps;
    j["range_noise_scale"] = cfg.range_noise_scale;
    j["init_cov_robot"] = cfg.init_cov_robot;
    j["init_cov_target"] = cfg.init_cov_target;
    j["seed"] = cfg.seed;
    j["planner"] = to_string(cfg.planner);
    auto scripts = nlohmann::json::array();
    for (const auto& s : cfg.target_scripts) scripts.push_back(script_to_json(s));
    j["target_scripts"] = scripts;
    j["arena"] = {cfg.arena[0], cfg.arena[1]};
    j["cbf_gamma"] = cfg.cbf_gamma;
    return j;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return validate_config(config_from_json(j));
}

}  // namespace cotrack
