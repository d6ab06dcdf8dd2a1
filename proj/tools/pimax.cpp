// pimax: run, evaluate and analyze predictive-information-maximizing
// robot-chain experiments.

#include <cstdio>
#include <exception>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pimax/harness.hpp"

namespace {

// Shared --config / flag plumbing: the config file is applied first, any
// explicitly given flag overrides it.
struct ConfigCli {
    std::string config_file;
    std::string control = "split";
    std::string rate_schedule = "reciprocal";
    std::string out;
    std::string init_policy;
    pimax::ExperimentConfig cfg;

    void attach(CLI::App* app, bool with_learning_opts) {
        app->add_option("--config", config_file, "key=value config file");
        app->add_option("--robots", cfg.robots, "number of chain segments (1|3|5 canonical)");
        app->add_option("--bins", cfg.bins, "wheel-velocity bins per wheel");
        app->add_option("--steps", cfg.steps, "controller updates to run");
        app->add_option("--seed", cfg.seed, "RNG seed");
        app->add_option("--control-rate", cfg.control_rate, "controller frequency in Hz");
        app->add_option("--arena-width", cfg.arena.width);
        app->add_option("--arena-height", cfg.arena.height);
        app->add_option("--pi-stride", cfg.pi_stride, "ticks between PI samples (1 = every tick)");
        app->add_option("--wheel-lag", cfg.sim.wheel_lag, "fraction of (desired-actual) applied per tick");
        app->add_option("--v-max", cfg.sim.v_max, "linear speed at wheel value 1, m/s");
        app->add_option("--hinge-limit", cfg.sim.hinge_limit, "max relative heading of chain neighbors, rad");
        app->add_option("--coupling-mix", cfg.sim.coupling_mix, "along-link speed mismatch averaged per sweep");
        app->add_option("--spin-mix", cfg.sim.spin_mix, "neighbor spin mismatch averaged per sweep");
        app->add_option("--heading-align", cfg.sim.heading_align, "body-axis-to-link misalignment removed per sweep");
        app->add_option("--back-drive", cfg.sim.back_drive, "fraction of constraint displacement fed back into wheels");
        app->add_option("--out", out, "output directory")->required();
        if (with_learning_opts) {
            app->add_option("--control", control, "split|combined");
            app->add_option("--rate-schedule", rate_schedule,
                            "reciprocal|floor:F|warmup:K");
            app->add_option("--init-policy", init_policy,
                            "learner dir to initialize from (combined control)");
        }
    }

    pimax::ExperimentConfig resolve(const CLI::App* app) {
        pimax::ExperimentConfig base;
        if (!config_file.empty())
            base = pimax::ExperimentConfig::from_file(config_file);
        auto used = [&](const std::string& name) {
            return app->count(name) > 0;
        };
        if (used("--robots")) base.robots = cfg.robots;
        if (used("--bins")) base.bins = cfg.bins;
        if (used("--steps")) base.steps = cfg.steps;
        if (used("--seed")) base.seed = cfg.seed;
        if (used("--control-rate")) base.control_rate = cfg.control_rate;
        if (used("--arena-width")) base.arena.width = cfg.arena.width;
        if (used("--arena-height")) base.arena.height = cfg.arena.height;
        if (used("--pi-stride")) base.pi_stride = cfg.pi_stride;
        if (used("--wheel-lag")) base.sim.wheel_lag = cfg.sim.wheel_lag;
        if (used("--v-max")) base.sim.v_max = cfg.sim.v_max;
        if (used("--hinge-limit")) base.sim.hinge_limit = cfg.sim.hinge_limit;
        if (used("--coupling-mix")) base.sim.coupling_mix = cfg.sim.coupling_mix;
        if (used("--spin-mix")) base.sim.spin_mix = cfg.sim.spin_mix;
        if (used("--heading-align")) base.sim.heading_align = cfg.sim.heading_align;
        if (used("--back-drive")) base.sim.back_drive = cfg.sim.back_drive;
        if (app->get_option_no_throw("--control") && used("--control"))
            base.control = pimax::parse_control_mode(control);
        if (app->get_option_no_throw("--rate-schedule") && used("--rate-schedule"))
            base.rate_schedule = pimax::RateSchedule::parse(rate_schedule);
        if (app->get_option_no_throw("--init-policy") && used("--init-policy"))
            base.init_policy = init_policy;
        base.output_dir = out;
        return base;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"predictive-information maximization for robot chains"};
    app.require_subcommand(1);

    ConfigCli run_cli, eval_cli, compose_cli;
    std::string eval_learner, compose_left, compose_right;
    std::string analyze_log;
    int analysis_bins = 30;
    std::uint64_t analysis_window = 500'000;

    auto* run = app.add_subcommand("run", "learn from scratch (or from --init-policy)");
    run_cli.attach(run, true);

    auto* eval = app.add_subcommand("eval", "run saved learners with learning frozen");
    eval_cli.cfg.steps = 36'000; // one simulated hour at 10 Hz
    eval_cli.attach(eval, true);
    eval->add_option("--learner", eval_learner,
                     "run directory containing learner_<i>/ subdirs")->required();

    auto* compose = app.add_subcommand(
        "compose", "build a combined learner from two split learners and retrain");
    compose_cli.attach(compose, false);
    compose->add_option("--left", compose_left, "left split learner dir")->required();
    compose->add_option("--right", compose_right, "right split learner dir")->required();

    auto* analyze = app.add_subcommand("analyze", "a-posteriori metrics of a recorded run");
    analyze->add_option("--log", analyze_log, "run directory")->required();
    analyze->add_option("--analysis-bins", analysis_bins, "bins for empirical PI");
    analyze->add_option("--window", analysis_window, "transitions for empirical PI");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto cfg = run_cli.resolve(run);
            auto res = pimax::run_experiment(cfg);
            std::cout << std::setprecision(6) << "config " << cfg.label()
                      << ": final mean intrinsic PI " << res.final_mean_pi
                      << " bits, coverage entropy "
                      << pimax::coverage_entropy(res.coverage) << " bits\n";
        } else if (eval->parsed()) {
            auto cfg = eval_cli.resolve(eval);
            auto res = pimax::run_fixed_policy(cfg, eval_learner);
            std::cout << std::setprecision(6) << "fixed-policy run " << cfg.label()
                      << ": coverage entropy "
                      << pimax::coverage_entropy(res.coverage) << " bits\n";
        } else if (compose->parsed()) {
            auto cfg = compose_cli.resolve(compose);
            auto rep = pimax::run_composition_experiment(compose_left,
                                                         compose_right, cfg);
            std::cout << std::setprecision(6)
                      << "composed PI initial " << rep.composed_pi_initial
                      << " (split sum "
                      << rep.split_pi_left + rep.split_pi_right << "), final "
                      << rep.composed_pi_final << ", L2 distance "
                      << rep.policy_distance_init_final << '\n';
        } else if (analyze->parsed()) {
            auto log = pimax::read_run_log(analyze_log);
            auto rep = pimax::analyze_run(log, analysis_bins, analysis_window);
            std::cout << std::setprecision(6);
            for (std::size_t i = 0; i < rep.per_robot_pi.size(); ++i)
                std::cout << "robot " << i << " empirical PI "
                          << rep.per_robot_pi[i] << " bits\n";
            std::cout << "coverage entropy " << rep.coverage_entropy_bits
                      << " bits\nmean sliding coverage entropy "
                      << rep.mean_sliding_entropy << " bits\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "pimax: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
