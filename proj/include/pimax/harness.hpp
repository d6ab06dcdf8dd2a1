#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimax/composer.hpp"
#include "pimax/infotheory.hpp"
#include "pimax/learner.hpp"
#include "pimax/metrics.hpp"
#include "pimax/rng.hpp"
#include "pimax/simworld.hpp"

namespace pimax {

enum class ControlMode { Split, Combined };

inline ControlMode parse_control_mode(const std::string& s) {
    if (s == "split") return ControlMode::Split;
    if (s == "combined") return ControlMode::Combined;
    throw std::invalid_argument("unknown control mode: " + s);
}

// Full parameterization of one run. The r-c notation: robots=r with split
// control gives c=2r controllers, combined control gives c=r.
struct ExperimentConfig {
    int robots = 1;
    ControlMode control = ControlMode::Split;
    int bins = 4;
    std::uint64_t steps = 1'000'000;
    double control_rate = 10.0; // Hz
    std::uint64_t seed = 0;
    ArenaConfig arena;
    SimParams sim;
    RateSchedule rate_schedule{RateSchedule::Kind::Warmup, 0.0, 150};
    std::filesystem::path output_dir;
    std::optional<std::filesystem::path> init_policy; // learner dir, combined only
    int analysis_bins = 30;
    std::uint64_t analysis_window = 500'000;
    std::uint64_t pi_stride = 100; // 1 = sample PI every tick

    int controllers_per_robot() const {
        return control == ControlMode::Split ? 2 : 1;
    }
    int num_controllers() const { return robots * controllers_per_robot(); }
    int states_per_controller() const {
        return control == ControlMode::Split ? bins : bins * bins;
    }

    std::string label() const {
        return std::to_string(robots) + "-" + std::to_string(num_controllers());
    }

    void apply_key_value(const std::string& key, const std::string& value);
    static ExperimentConfig from_file(const std::filesystem::path& p);
    void write(std::ostream& os) const;
};

inline void ExperimentConfig::apply_key_value(const std::string& key,
                                              const std::string& value) {
    if (key == "robots") robots = std::stoi(value);
    else if (key == "control") control = parse_control_mode(value);
    else if (key == "bins") bins = std::stoi(value);
    else if (key == "steps") steps = std::stoull(value);
    else if (key == "control_rate") control_rate = std::stod(value);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "arena_width") arena.width = std::stod(value);
    else if (key == "arena_height") arena.height = std::stod(value);
    else if (key == "rate_schedule") rate_schedule = RateSchedule::parse(value);
    else if (key == "wheel_lag") sim.wheel_lag = std::stod(value);
    else if (key == "v_max") sim.v_max = std::stod(value);
    else if (key == "hinge_limit") sim.hinge_limit = std::stod(value);
    else if (key == "coupling_mix") sim.coupling_mix = std::stod(value);
    else if (key == "spin_mix") sim.spin_mix = std::stod(value);
    else if (key == "heading_align") sim.heading_align = std::stod(value);
    else if (key == "back_drive") sim.back_drive = std::stod(value);
    else if (key == "out") output_dir = value;
    else if (key == "init_policy") init_policy = value;
    else if (key == "analysis_bins") analysis_bins = std::stoi(value);
    else if (key == "analysis_window") analysis_window = std::stoull(value);
    else if (key == "pi_stride") pi_stride = std::stoull(value);
    else throw std::invalid_argument("unknown config key: " + key);
}

inline ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot read config " + p.string());
    ExperimentConfig cfg;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line without '=': " + line);
        cfg.apply_key_value(line.substr(0, eq), line.substr(eq + 1));
    }
    return cfg;
}

inline void ExperimentConfig::write(std::ostream& os) const {
    os << "robots=" << robots << '\n'
       << "control=" << (control == ControlMode::Split ? "split" : "combined") << '\n'
       << "bins=" << bins << '\n'
       << "steps=" << steps << '\n'
       << "control_rate=" << control_rate << '\n'
       << "seed=" << seed << '\n'
       << "arena_width=" << arena.width << '\n'
       << "arena_height=" << arena.height << '\n'
       << "rate_schedule=" << rate_schedule.to_string() << '\n'
       << "wheel_lag=" << sim.wheel_lag << '\n'
       << "v_max=" << sim.v_max << '\n'
       << "hinge_limit=" << sim.hinge_limit << '\n'
       << "coupling_mix=" << sim.coupling_mix << '\n'
       << "spin_mix=" << sim.spin_mix << '\n'
       << "heading_align=" << sim.heading_align << '\n'
       << "back_drive=" << sim.back_drive << '\n'
       << "analysis_bins=" << analysis_bins << '\n'
       << "analysis_window=" << analysis_window << '\n'
       << "pi_stride=" << pi_stride << '\n';
    if (init_policy) os << "init_policy=" << init_policy->string() << '\n';
}

struct ExperimentResult {
    RunLog log;
    std::vector<LearnerState> learners;
    CoverageGrid coverage;
    double final_mean_pi = 0.0;
};

namespace detail {

// Sensor fusion for a combined controller: the left wheel is the low-order
// digit (the same convention combine_split_policies uses).
inline int fuse_state(int left_bin, int right_bin, int bins) {
    return left_bin + bins * right_bin;
}

} // namespace detail

// The control loop: read_sensors -> encode -> sample_action -> decode ->
// step -> learning_step, every tick, per controller. Controllers share
// nothing but the world.
inline ExperimentResult run_control_loop(
    const ExperimentConfig& cfg, bool learn,
    std::vector<LearnerState> learners) {
    const int nc = cfg.num_controllers();
    const Binner binner(cfg.bins);
    const Binner action_binner(cfg.bins);

    SimParams sim = cfg.sim;
    sim.dt = 1.0 / cfg.control_rate;
    ChainState chain = init_chain(cfg.robots, cfg.arena, sim);

    ExperimentResult res{RunLog{}, std::move(learners),
                         CoverageGrid(cfg.arena.width, cfg.arena.height)};
    RunLog& log = res.log;
    log.arena_width = cfg.arena.width;
    log.arena_height = cfg.arena.height;
    log.num_robots = static_cast<std::size_t>(cfg.robots);
    log.num_controllers = static_cast<std::size_t>(nc);

    Rng rng(cfg.seed);

    auto encode_states = [&](const std::vector<std::pair<double, double>>& sensors) {
        std::vector<int> s(static_cast<std::size_t>(nc));
        for (int i = 0; i < cfg.robots; ++i) {
            const int lb = binner.encode(sensors[static_cast<std::size_t>(i)].first);
            const int rb = binner.encode(sensors[static_cast<std::size_t>(i)].second);
            if (cfg.control == ControlMode::Split) {
                s[static_cast<std::size_t>(2 * i)] = lb;
                s[static_cast<std::size_t>(2 * i + 1)] = rb;
            } else {
                s[static_cast<std::size_t>(i)] = detail::fuse_state(lb, rb, cfg.bins);
            }
        }
        return s;
    };

    auto desired_from_actions = [&](const std::vector<int>& a) {
        std::vector<std::pair<double, double>> desired(
            static_cast<std::size_t>(cfg.robots));
        for (int i = 0; i < cfg.robots; ++i) {
            if (cfg.control == ControlMode::Split) {
                desired[static_cast<std::size_t>(i)] = {
                    action_binner.decode(a[static_cast<std::size_t>(2 * i)]),
                    action_binner.decode(a[static_cast<std::size_t>(2 * i + 1)])};
            } else {
                const int ac = a[static_cast<std::size_t>(i)];
                desired[static_cast<std::size_t>(i)] = {
                    action_binner.decode(ac % cfg.bins),
                    action_binner.decode(ac / cfg.bins)};
            }
        }
        return desired;
    };

    auto record_tick = [&](std::uint64_t t, const std::vector<int>& s,
                           const std::vector<int>& a) {
        std::vector<double> xs, ys, hs, vls, vrs;
        for (const auto& b : chain.bodies) {
            xs.push_back(b.x);
            ys.push_back(b.y);
            hs.push_back(b.heading);
            vls.push_back(b.v_left);
            vrs.push_back(b.v_right);
        }
        log.append_tick(t, xs, ys, hs, vls, vrs, s, a);
        const auto& center = chain.bodies[static_cast<std::size_t>(cfg.robots / 2)];
        res.coverage.record(center.x, center.y);
        if (t % cfg.pi_stride == 0) {
            std::vector<double> pis;
            for (const auto& l : res.learners) pis.push_back(l.intrinsic_pi());
            log.append_pi(t, pis);
        }
    };

    // tick 0: one sensor read, actions from the initial policy; learning
    // starts at tick 1 once an (s, a, s') triple exists
    std::vector<int> s_prev = encode_states(read_sensors(chain));
    std::vector<int> a_prev(static_cast<std::size_t>(nc));
    for (int i = 0; i < nc; ++i)
        a_prev[static_cast<std::size_t>(i)] =
            res.learners[static_cast<std::size_t>(i)].sample_action(
                s_prev[static_cast<std::size_t>(i)], rng);
    record_tick(0, s_prev, a_prev);

    for (std::uint64_t t = 1; t <= cfg.steps; ++t) {
        step(chain, desired_from_actions(a_prev));
        std::vector<int> s_now = encode_states(read_sensors(chain));
        if (learn) {
            for (int i = 0; i < nc; ++i)
                res.learners[static_cast<std::size_t>(i)].learning_step(
                    s_prev[static_cast<std::size_t>(i)],
                    a_prev[static_cast<std::size_t>(i)],
                    s_now[static_cast<std::size_t>(i)], cfg.rate_schedule);
        }
        std::vector<int> a_now(static_cast<std::size_t>(nc));
        for (int i = 0; i < nc; ++i)
            a_now[static_cast<std::size_t>(i)] =
                res.learners[static_cast<std::size_t>(i)].sample_action(
                    s_now[static_cast<std::size_t>(i)], rng);
        record_tick(t, s_now, a_now);
        s_prev = std::move(s_now);
        a_prev = std::move(a_now);
    }

    double sum = 0.0;
    for (const auto& l : res.learners) sum += l.intrinsic_pi();
    res.final_mean_pi = sum / static_cast<double>(nc);
    return res;
}

inline std::vector<LearnerState> fresh_learners(const ExperimentConfig& cfg) {
    std::vector<LearnerState> learners;
    const std::size_t n = static_cast<std::size_t>(cfg.states_per_controller());
    for (int i = 0; i < cfg.num_controllers(); ++i)
        learners.emplace_back(n, n);
    return learners;
}

inline void write_experiment_outputs(const ExperimentConfig& cfg,
                                     const ExperimentResult& res) {
    namespace fs = std::filesystem;
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "config.txt");
        if (!f) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
        cfg.write(f);
    }
    write_run_log(res.log, dir);
    write_coverage_csv(res.coverage, dir / "coverage.csv");
    write_sliding_csv(sliding_coverage_entropy(
                          res.log, std::min<std::size_t>(1000, res.log.size())),
                      dir / "sliding.csv");
    for (std::size_t i = 0; i < res.learners.size(); ++i)
        save_learner(res.learners[i], dir / ("learner_" + std::to_string(i)));
}

// `pimax run`: fresh or composition-initialized learners, full learning.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    std::vector<LearnerState> learners;
    if (cfg.init_policy) {
        if (cfg.control != ControlMode::Combined)
            throw std::invalid_argument("init_policy requires combined control");
        learners.push_back(load_learner(*cfg.init_policy));
        if (learners[0].num_sensors() !=
            static_cast<std::size_t>(cfg.states_per_controller()))
            throw std::invalid_argument("init_policy: learner shape does not match config");
    } else {
        learners = fresh_learners(cfg);
    }
    ExperimentResult res = run_control_loop(cfg, /*learn=*/true, std::move(learners));
    if (!cfg.output_dir.empty()) write_experiment_outputs(cfg, res);
    return res;
}

// `pimax eval`: frozen policies, no updates; used for transient analysis.
inline ExperimentResult run_fixed_policy(const ExperimentConfig& cfg,
                                         const std::filesystem::path& learner_root) {
    std::vector<LearnerState> learners;
    for (int i = 0; i < cfg.num_controllers(); ++i) {
        auto dir = learner_root / ("learner_" + std::to_string(i));
        if (!std::filesystem::exists(dir))
            throw std::runtime_error("missing learner dir " + dir.string());
        learners.push_back(load_learner(dir));
    }
    ExperimentResult res = run_control_loop(cfg, /*learn=*/false, std::move(learners));
    if (!cfg.output_dir.empty()) write_experiment_outputs(cfg, res);
    return res;
}

struct CompositionReport {
    double split_pi_left = 0.0;
    double split_pi_right = 0.0;
    double composed_pi_initial = 0.0;
    double composed_pi_final = 0.0;
    double composed_pi_min = 0.0;
    double policy_distance_init_final = 0.0;
};

// `pimax compose`: build a combined learner from two converged split
// learners, train it further, and report how far it moves.
inline CompositionReport run_composition_experiment(
    const std::filesystem::path& left_dir, const std::filesystem::path& right_dir,
    ExperimentConfig cfg) {
    LearnerState left = load_learner(left_dir);
    LearnerState right = load_learner(right_dir);
    LearnerState composed = combine_learners(left, right);

    CompositionReport rep;
    rep.split_pi_left = left.intrinsic_pi();
    rep.split_pi_right = right.intrinsic_pi();
    rep.composed_pi_initial = composed.intrinsic_pi();

    cfg.control = ControlMode::Combined;
    const ConditionalTable initial_policy = composed.policy();

    std::vector<LearnerState> learners;
    learners.push_back(std::move(composed));
    ExperimentResult res = run_control_loop(cfg, /*learn=*/true, std::move(learners));

    rep.composed_pi_final = res.learners[0].intrinsic_pi();
    rep.composed_pi_min = rep.composed_pi_initial;
    for (std::size_t s = 0; s < res.log.pi_ticks.size(); ++s)
        rep.composed_pi_min = std::min(rep.composed_pi_min, res.log.pi_bits[s]);
    rep.policy_distance_init_final =
        policy_distance(initial_policy, res.learners[0].policy());

    if (!cfg.output_dir.empty()) {
        write_experiment_outputs(cfg, res);
        std::ofstream f(cfg.output_dir / "composition.txt");
        f << std::setprecision(12)
          << "split_pi_left=" << rep.split_pi_left << '\n'
          << "split_pi_right=" << rep.split_pi_right << '\n'
          << "composed_pi_initial=" << rep.composed_pi_initial << '\n'
          << "composed_pi_final=" << rep.composed_pi_final << '\n'
          << "composed_pi_min=" << rep.composed_pi_min << '\n'
          << "policy_distance_init_final=" << rep.policy_distance_init_final << '\n';
    }
    return rep;
}

// A-posteriori analysis of a recorded run: per-robot empirical PI at fine
// binning over the last `analysis_window` transitions, plus coverage and
// sliding-window coverage entropy.
struct AnalysisReport {
    std::vector<double> per_robot_pi;
    double coverage_entropy_bits = 0.0;
    double mean_sliding_entropy = 0.0;
};

inline AnalysisReport analyze_run(const RunLog& log, int analysis_bins,
                                  std::uint64_t analysis_window,
                                  std::size_t sliding_window = 1000) {
    AnalysisReport rep;
    const Binner binner(analysis_bins);
    const std::size_t window =
        std::min<std::size_t>(analysis_window, log.size() - 1);
    for (std::size_t robot = 0; robot < log.num_robots; ++robot) {
        std::vector<std::pair<double, double>> series;
        series.reserve(log.size());
        for (std::size_t t = 0; t < log.size(); ++t)
            series.push_back(log.wheels(t, robot));
        rep.per_robot_pi.push_back(empirical_mi_from_series(series, binner, window));
    }
    CoverageGrid grid(log.arena_width, log.arena_height);
    const std::size_t center = log.center_robot();
    for (std::size_t t = 0; t < log.size(); ++t) {
        const std::size_t i = t * log.num_robots + center;
        grid.record(log.x[i], log.y[i]);
    }
    rep.coverage_entropy_bits = coverage_entropy(grid);
    auto sliding = sliding_coverage_entropy(
        log, std::min<std::size_t>(sliding_window, log.size()));
    double sum = 0.0;
    for (const auto& [tick, bits] : sliding) sum += bits;
    rep.mean_sliding_entropy = sum / static_cast<double>(sliding.size());
    return rep;
}

} // namespace pimax
