// Command-line entry point: single training runs, optimizer comparison
// sweeps, the trajectory approximation probe, and the built-in verification
// suite.
//
// Exit codes: 0 success, 1 failed checks, 2 configuration error,
// 3 divergence, 4 I/O error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stepahead/stepahead.hpp"

namespace {

using namespace stepahead;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string seeds;
    bool quiet = false;
};

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

void persist_run(const config::LoadedConfig& cfg,
                 const controller::RunRecord& rec) {
    if (cfg.experiment.output_dir.empty()) return;
    std::filesystem::create_directories(cfg.experiment.output_dir);
    harness::write_metrics_csv({rec},
                               cfg.experiment.output_dir + "/metrics.csv");
    if (cfg.experiment.plan.record_steps) {
        harness::write_steps_csv(rec, cfg.experiment.output_dir + "/steps_" +
                                          rec.mode + "_seed" +
                                          std::to_string(rec.seed) + ".csv");
    }
}

int cmd_train(const CommonArgs& args) {
    const auto start = std::chrono::steady_clock::now();
    const config::LoadedConfig cfg = config::load_config(
        args.config_path, args.overrides, args.out_dir, args.seeds);
    const harness::ExperimentConfig& exp = cfg.experiment;

    const std::uint64_t seed = exp.seeds.front();
    const harness::ProblemData pd = harness::make_data(exp.problem, seed);
    const auto model = harness::make_model(exp.problem, pd, seed);
    controller::TrainPlan plan = exp.plan;
    plan.mode = cfg.train_mode;
    plan.seed = seed;

    controller::RunRecord rec = controller::run_training(
        plan, *model, pd.train, pd.validation, exp.optimizer);
    rec.problem = exp.problem.tag();
    persist_run(cfg, rec);

    if (!args.quiet) {
        std::printf("problem: %s\n", rec.problem.c_str());
        std::printf("mode: %s  seed: %llu  epochs: %zu\n", rec.mode.c_str(),
                    static_cast<unsigned long long>(rec.seed),
                    rec.epochs.size());
        std::printf("final train loss: %.6g\n", rec.summary.final_train_loss);
        std::printf("min val loss: %.6g (epoch %d)\n",
                    rec.summary.min_val_loss, rec.summary.best_epoch);
        if (!std::isnan(rec.summary.max_val_acc)) {
            std::printf("max val accuracy: %.4f\n", rec.summary.max_val_acc);
        }
        std::printf("wall time: %.2fs\n", elapsed_seconds(start));
        if (!exp.output_dir.empty()) {
            std::printf("metrics: %s/metrics.csv\n", exp.output_dir.c_str());
        }
    }
    if (rec.diverged) {
        std::fprintf(stderr, "diverged at step %lld\n", rec.diverged_at_step);
        return 3;
    }
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const auto start = std::chrono::steady_clock::now();
    const config::LoadedConfig cfg = config::load_config(
        args.config_path, args.overrides, args.out_dir, args.seeds);

    const std::vector<controller::RunRecord> records =
        harness::run_comparison(cfg.experiment);
    const std::vector<harness::ModeSummary> summaries =
        harness::aggregate(records);

    if (!args.quiet) {
        std::printf("problem: %s  (%zu seeds, %.2fs)\n",
                    records.front().problem.c_str(),
                    cfg.experiment.seeds.size(), elapsed_seconds(start));
        std::printf("%-10s %4s %4s  %-19s %-19s %-12s %9s %9s\n", "mode",
                    "runs", "div", "max val acc", "min val loss",
                    "final train", "d acc", "d loss");
        // rows in the order the modes were configured
        for (const controller::ModeSpec& mode : cfg.experiment.modes) {
            for (const harness::ModeSummary& ms : summaries) {
                if (ms.mode != mode.token()) continue;
                std::printf(
                    "%-10s %4d %4d  %9.4f +-%7.4f %9.4g +-%7.2g %12.5g %9.4f "
                    "%9.4g\n",
                    ms.mode.c_str(), ms.runs, ms.diverged, ms.max_val_acc.mean,
                    ms.max_val_acc.stddev, ms.min_val_loss.mean,
                    ms.min_val_loss.stddev, ms.final_train_loss.mean,
                    ms.delta_acc_vs_baseline, ms.delta_loss_vs_baseline);
            }
        }
        if (!cfg.experiment.output_dir.empty()) {
            std::printf("metrics: %s/metrics.csv\n",
                        cfg.experiment.output_dir.c_str());
        }
    }
    return 0;
}

int cmd_probe(const CommonArgs& args) {
    const config::LoadedConfig cfg = config::load_config(
        args.config_path, args.overrides, args.out_dir, args.seeds);
    const int horizon = cfg.probe.horizon_epochs > 0
                            ? cfg.probe.horizon_epochs
                            : cfg.experiment.plan.epochs;
    const harness::ProbeReport report = harness::approximation_probe(
        cfg.experiment, cfg.probe.s_max, horizon, cfg.probe.checkpoints);

    if (!args.quiet) {
        std::printf("probe over %lld steps, s up to %d\n", report.total_steps,
                    cfg.probe.s_max);
        std::printf("%10s %3s %14s %14s\n", "checkpoint", "s", "sum err",
                    "extrap err");
        for (const harness::ProbeCheckpoint& cp : report.checkpoints) {
            for (const harness::ProbeEntry& entry : cp.entries) {
                std::printf("%10lld %3d %14.6e %14.6e\n", cp.step, entry.s,
                            entry.sum_err, entry.extrap_err);
            }
        }
    }
    return 0;
}

// --- verification suite -------------------------------------------------------

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

CheckResult check_hand_values(const optim::AdamWConfig& base) {
    double worst = 0.0;
    optim::AdamWConfig cfg = base;
    cfg.gamma = 0.1;

    cfg.lambda = 0.0;
    const auto no_decay =
        optim::adamw_step({1.0}, optim::init_state(1), {1.0}, cfg);
    worst = std::max(worst,
                     std::abs(no_decay.params[0] - (1.0 - 0.1 / (1.0 + 1e-8))));

    cfg.lambda = 0.1;
    const auto with_decay =
        optim::adamw_step({1.0}, optim::init_state(1), {1.0}, cfg);
    worst = std::max(worst, std::abs(with_decay.params[0] -
                                     (0.99 - 0.1 / (1.0 + 1e-8))));

    cfg.lambda = 0.0;
    const auto zero_grad =
        optim::adamw_step({5.0}, optim::init_state(1), {0.0}, cfg);
    worst = std::max(worst, std::abs(zero_grad.params[0] - 5.0));

    // tiny gradient: 1e-6 / (1e-6 + 1e-8) distinguishes the eps placement
    const auto tiny = optim::adamw_step({1.0}, optim::init_state(1), {1e-6}, cfg);
    worst = std::max(worst, std::abs(tiny.params[0] -
                                     (1.0 - 0.1 * (1e-6 / (1e-6 + 1e-8)))));

    CheckResult result;
    result.name = "adamw-step-hand-values";
    result.passed = worst <= 1e-15;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |error| = %.3e", worst);
    result.detail = buf;
    return result;
}

CheckResult check_s0_collapse(const optim::AdamWConfig& base) {
    const data::Dataset all = data::gen_blobs(3, 40, 4, 1.0, 101);
    const auto split = data::split_dataset(all, 0.8, 102);

    controller::TrainPlan plan;
    plan.epochs = 30;
    plan.batch_size = 32;
    plan.seed = 103;

    optim::AdamWConfig cfg = base;
    cfg.gamma = 0.01;

    models::MlpModel baseline({4, 8, 3}, models::LossKind::CrossEntropy, 104);
    models::MlpModel predictive = baseline;

    std::vector<ParamVector> base_traj, pred_traj;
    plan.mode = {controller::Mode::Baseline, 0};
    controller::run_training(plan, baseline, split.first, split.second, cfg,
                             [&](const controller::StepTrace&,
                                 const ParamVector& p) {
                                 base_traj.push_back(p);
                             });
    plan.mode = {controller::Mode::Predictive, 0};
    controller::run_training(plan, predictive, split.first, split.second, cfg,
                             [&](const controller::StepTrace&,
                                 const ParamVector& p) {
                                 pred_traj.push_back(p);
                             });

    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < base_traj.size(); ++i) {
        if (base_traj[i] != pred_traj[i]) ++mismatches;
    }
    CheckResult result;
    result.name = "prediction-s0-collapse";
    result.passed = mismatches == 0 && base_traj.size() == pred_traj.size() &&
                    !base_traj.empty();
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%zu steps, %zu mismatched",
                  base_traj.size(), mismatches);
    result.detail = buf;
    return result;
}

CheckResult check_gradients() {
    SplitMix64 rng(105);
    double worst = 0.0;
    models::LogisticRegressionModel logreg(5, 3, 106);
    models::MlpModel mlp({4, 8, 3}, models::LossKind::CrossEntropy, 107);
    const auto rel_err = [&](models::Model& model, int width, int classes) {
        models::Batch batch;
        for (int n = 0; n < 6; ++n) {
            std::vector<double> x(static_cast<std::size_t>(width));
            for (double& v : x) v = rng.next_uniform(-2, 2);
            batch.inputs.push_back(std::move(x));
            batch.targets.push_back(static_cast<double>(
                rng.next_below(static_cast<std::uint64_t>(classes))));
        }
        for (double& p : model.params()) p = rng.next_uniform(-1, 1);
        const GradVector analytic = model.loss_and_gradient(batch).grad;
        const GradVector fd =
            models::finite_difference_gradient(model, batch, 1e-5);
        double local = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double denom =
                std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-8});
            local = std::max(local, std::abs(analytic[i] - fd[i]) / denom);
        }
        return local;
    };
    for (int point = 0; point < 5; ++point) {
        worst = std::max(worst, rel_err(logreg, 5, 3));
        worst = std::max(worst, rel_err(mlp, 4, 3));
    }
    CheckResult result;
    result.name = "gradient-finite-difference";
    result.passed = worst <= 1e-5;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err = %.3e", worst);
    result.detail = buf;
    return result;
}

CheckResult check_probe_identity(const optim::AdamWConfig& base) {
    harness::ExperimentConfig cfg;
    cfg.problem.kind = harness::ProblemKind::LogregBlobs;
    cfg.problem.classes = 2;
    cfg.problem.per_class = 40;
    cfg.problem.dim = 4;
    cfg.optimizer = base;
    cfg.optimizer.gamma = 0.02;
    cfg.optimizer.lambda = 0.0;
    cfg.plan.epochs = 4;
    cfg.plan.batch_size = 16;
    cfg.seeds = {108};
    const harness::ProbeReport report =
        harness::approximation_probe(cfg, 3, 4);
    double worst = 0.0;
    for (const auto& cp : report.checkpoints) {
        for (const auto& entry : cp.entries) {
            worst = std::max(worst, entry.sum_err);
        }
    }
    CheckResult result;
    result.name = "probe-decay-identity";
    result.passed = worst <= 1e-15;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |error| = %.3e at lambda = 0", worst);
    result.detail = buf;
    return result;
}

CheckResult check_decay_separability(const optim::AdamWConfig& base) {
    SplitMix64 rng(109);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        ParamVector theta(6);
        GradVector g(6);
        for (double& x : theta) x = rng.next_uniform(-1, 1);
        for (double& x : g) x = rng.next_uniform(-1, 1);
        optim::AdamWConfig cfg = base;
        cfg.gamma = rng.next_uniform(1e-3, 0.1);
        cfg.lambda = rng.next_uniform(0.0, 0.05);
        optim::AdamWConfig no_decay = cfg;
        no_decay.lambda = 0.0;
        const auto with = optim::adamw_step(theta, optim::init_state(6), g, cfg);
        const auto without =
            optim::adamw_step(theta, optim::init_state(6), g, no_decay);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            worst = std::max(worst,
                             std::abs(with.params[i] - without.params[i] +
                                      cfg.gamma * cfg.lambda * theta[i]));
        }
    }
    CheckResult result;
    result.name = "decay-separability";
    result.passed = worst <= 1e-15;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |error| = %.3e", worst);
    result.detail = buf;
    return result;
}

CheckResult check_prediction_linearity(const optim::AdamWConfig& base) {
    SplitMix64 rng(110);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        optim::AdamWConfig cfg = base;
        cfg.gamma = rng.next_uniform(1e-3, 0.2);
        optim::AdamWState state = optim::init_state(5);
        const int history = 1 + static_cast<int>(rng.next_below(4));
        for (int h = 0; h < history; ++h) {
            GradVector g(5);
            for (double& x : g) x = rng.next_uniform(-2, 2);
            state = optim::update_moments(state, g, cfg);
        }
        ParamVector theta(5);
        for (double& x : theta) x = rng.next_uniform(-1, 1);
        cfg.s = 1;
        const ParamVector p1 = optim::predict_weights(theta, state, cfg);
        for (int s = 2; s <= 3; ++s) {
            cfg.s = s;
            const ParamVector ps = optim::predict_weights(theta, state, cfg);
            for (std::size_t i = 0; i < theta.size(); ++i) {
                worst = std::max(worst, std::abs((ps[i] - theta[i]) -
                                                 s * (p1[i] - theta[i])));
            }
        }
    }
    CheckResult result;
    result.name = "prediction-linearity";
    result.passed = worst <= 1e-12;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |error| = %.3e", worst);
    result.detail = buf;
    return result;
}

int cmd_verify(bool misplace_eps, bool quiet) {
    optim::AdamWConfig base;
    base.eps_inside_sqrt = misplace_eps;

    const std::vector<CheckResult> results = {
        check_hand_values(base),        check_s0_collapse(base),
        check_gradients(),              check_probe_identity(base),
        check_decay_separability(base), check_prediction_linearity(base),
    };
    bool all_passed = true;
    for (const CheckResult& result : results) {
        all_passed = all_passed && result.passed;
        if (!quiet) {
            std::printf("[%s] %-28s %s\n", result.passed ? "PASS" : "FAIL",
                        result.name.c_str(), result.detail.c_str());
        }
    }
    if (!quiet) {
        std::printf("%s\n", all_passed ? "all checks passed"
                                       : "some checks FAILED");
    }
    return all_passed ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AdamW weight-prediction training benchmark"};
    app.require_subcommand(1);

    CommonArgs args;
    bool misplace_eps = false;

    const auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* config_opt =
            cmd->add_option("--config", args.config_path, "config file path");
        if (needs_config) config_opt->required();
        cmd->add_option("--set", args.overrides,
                        "override a config key (key=value, repeatable)");
        cmd->add_option("--out", args.out_dir, "output directory for CSV files");
        cmd->add_option("--seeds", args.seeds, "comma-separated seed list");
        cmd->add_flag("--quiet", args.quiet, "suppress normal output");
    };

    CLI::App* train = app.add_subcommand("train", "run one training");
    add_common(train, true);
    CLI::App* compare =
        app.add_subcommand("compare", "compare optimizer modes across seeds");
    add_common(compare, true);
    CLI::App* probe = app.add_subcommand(
        "probe", "measure multi-step trajectory approximation errors");
    add_common(probe, true);
    CLI::App* verify =
        app.add_subcommand("verify", "run the built-in oracle checks");
    verify->add_flag("--quiet", args.quiet, "suppress normal output");
    verify->add_flag("--misplace-eps", misplace_eps, "")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(args);
        if (compare->parsed()) return cmd_compare(args);
        if (probe->parsed()) return cmd_probe(args);
        return cmd_verify(misplace_eps, args.quiet);
    } catch (const ConfigError& err) {
        std::fprintf(stderr, "config error: %s\n", err.what());
        return 2;
    } catch (const DataError& err) {
        std::fprintf(stderr, "data error: %s\n", err.what());
        return 2;
    } catch (const DivergenceError& err) {
        std::fprintf(stderr, "divergence: %s\n", err.what());
        return 3;
    } catch (const IoError& err) {
        std::fprintf(stderr, "i/o error: %s\n", err.what());
        return 4;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
}
