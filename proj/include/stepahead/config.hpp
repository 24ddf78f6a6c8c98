// Experiment configuration files and command-line overrides.
//
// The file format is a flat list of dotted key/value assignments, one per
// line: `section.key = value`. Blank lines and lines starting with `#` are
// skipped. Values may be wrapped in double quotes (required for lists if the
// file should also parse as TOML). Unknown keys are errors.
//
// Schema (defaults in parentheses):
//   problem.kind            quadratic | logreg_blobs | mlp_blobs |
//                           logreg_csv | mlp_csv            (quadratic)
//   problem.dim             feature / bowl dimension        (10)
//   problem.classes         blob cluster count              (2)
//   problem.per_class       rows per cluster                (100)
//   problem.spread          blob standard deviation         (1.0)
//   problem.curvature_lo    bowl curvature lower bound      (0.5)
//   problem.curvature_hi    bowl curvature upper bound      (2.0)
//   problem.steps_per_epoch bowl updates per epoch          (1)
//   problem.csv_path        csv dataset path                ("")
//   problem.target_column   0-based target index, -1 = last (-1)
//   problem.split_fraction  train share                     (0.8)
//   problem.mlp_hidden      hidden layer sizes, "16,8"      ("8")
//   optimizer.gamma         learning rate                   (1e-3)
//   optimizer.beta1         first-moment decay              (0.9)
//   optimizer.beta2         second-moment decay             (0.999)
//   optimizer.eps           denominator smoothing           (1e-8)
//   optimizer.lambda        decoupled weight decay          (5e-4)
//   optimizer.s             prediction steps                (0)
//   train.mode              baseline | predictive | plain_adam (baseline)
//   train.epochs            passes over the training set    (1)
//   train.batch_size        rows per update                 (32)
//   train.shuffle           reshuffle each epoch            (true)
//   train.schedule          "epoch:mult,..." 0-based        ("")
//   train.record_steps      also write per-step streams     (false)
//   run.modes               comparison modes, "baseline,s1" ("baseline,s1,s2,s3")
//   run.seeds               comma-separated seeds           ("1")
//   output.dir              where CSV files go              ("out")
//   probe.s_max             probe lookahead                 (3)
//   probe.horizon_epochs    probe trajectory length         (train.epochs)
//   probe.checkpoints       step indices, "10,50,100"       (epoch 1/mid/last ends)
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "stepahead/controller.hpp"
#include "stepahead/errors.hpp"
#include "stepahead/harness.hpp"

namespace stepahead::config {

struct ProbeOptions {
    int s_max = 3;
    int horizon_epochs = -1; // -1: use train.epochs
    std::vector<long long> checkpoints;
};

struct LoadedConfig {
    harness::ExperimentConfig experiment;
    controller::ModeSpec train_mode{controller::Mode::Baseline, 0};
    ProbeOptions probe;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        const std::string item =
            trim(comma == std::string::npos ? s.substr(pos)
                                            : s.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double x = std::stod(value, &used);
        if (used == value.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      value + "'");
}

inline long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(value, &used);
        if (used == value.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      value + "'");
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" +
                      value + "'");
}

inline std::vector<std::pair<int, double>> parse_schedule(
    const std::string& key, const std::string& value) {
    std::vector<std::pair<int, double>> schedule;
    for (const std::string& item : split_list(value)) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("config key '" + key +
                              "': schedule entries are epoch:multiplier, got '" +
                              item + "'");
        }
        schedule.emplace_back(
            static_cast<int>(parse_int(key, trim(item.substr(0, colon)))),
            parse_double(key, trim(item.substr(colon + 1))));
    }
    return schedule;
}

} // namespace detail

/// Applies one `key = value` assignment. Unknown keys are errors; value
/// validation beyond basic typing happens in validate() after all
/// assignments (overrides included) are in.
inline void apply_assignment(LoadedConfig& cfg, const std::string& key,
                             const std::string& raw_value) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;
    const std::string value = detail::unquote(detail::trim(raw_value));
    harness::ExperimentConfig& exp = cfg.experiment;

    if (key == "problem.kind") {
        exp.problem.kind = harness::parse_problem_kind(value);
    } else if (key == "problem.dim") {
        exp.problem.dim = static_cast<int>(parse_int(key, value));
    } else if (key == "problem.classes") {
        exp.problem.classes = static_cast<int>(parse_int(key, value));
    } else if (key == "problem.per_class") {
        exp.problem.per_class = static_cast<int>(parse_int(key, value));
    } else if (key == "problem.spread") {
        exp.problem.spread = parse_double(key, value);
    } else if (key == "problem.curvature_lo") {
        exp.problem.curvature_lo = parse_double(key, value);
    } else if (key == "problem.curvature_hi") {
        exp.problem.curvature_hi = parse_double(key, value);
    } else if (key == "problem.steps_per_epoch") {
        exp.problem.steps_per_epoch = static_cast<int>(parse_int(key, value));
    } else if (key == "problem.csv_path") {
        exp.problem.csv_path = value;
    } else if (key == "problem.target_column") {
        exp.problem.target_column = static_cast<int>(parse_int(key, value));
    } else if (key == "problem.split_fraction") {
        exp.problem.split_fraction = parse_double(key, value);
    } else if (key == "problem.mlp_hidden") {
        exp.problem.mlp_hidden.clear();
        for (const std::string& item : detail::split_list(value)) {
            exp.problem.mlp_hidden.push_back(
                static_cast<int>(parse_int(key, item)));
        }
    } else if (key == "optimizer.gamma") {
        exp.optimizer.gamma = parse_double(key, value);
    } else if (key == "optimizer.beta1") {
        exp.optimizer.beta1 = parse_double(key, value);
    } else if (key == "optimizer.beta2") {
        exp.optimizer.beta2 = parse_double(key, value);
    } else if (key == "optimizer.eps") {
        exp.optimizer.eps = parse_double(key, value);
    } else if (key == "optimizer.lambda") {
        exp.optimizer.lambda = parse_double(key, value);
    } else if (key == "optimizer.s") {
        exp.optimizer.s = static_cast<int>(parse_int(key, value));
    } else if (key == "train.mode") {
        if (value != "baseline" && value != "predictive" &&
            value != "plain_adam") {
            throw ConfigError("train.mode must be baseline, predictive, or "
                              "plain_adam");
        }
        cfg.train_mode.kind = value == "baseline"
                                  ? controller::Mode::Baseline
                                  : (value == "predictive"
                                         ? controller::Mode::Predictive
                                         : controller::Mode::PlainAdam);
    } else if (key == "train.epochs") {
        exp.plan.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.batch_size") {
        const long long b = parse_int(key, value);
        if (b < 1) throw ConfigError("train.batch_size must be >= 1");
        exp.plan.batch_size = static_cast<std::size_t>(b);
    } else if (key == "train.shuffle") {
        exp.plan.shuffle = parse_bool(key, value);
    } else if (key == "train.schedule") {
        exp.plan.lr_schedule = detail::parse_schedule(key, value);
    } else if (key == "train.record_steps") {
        exp.plan.record_steps = parse_bool(key, value);
    } else if (key == "run.modes") {
        exp.modes.clear();
        for (const std::string& item : detail::split_list(value)) {
            exp.modes.push_back(
                controller::ModeSpec::parse(item, exp.optimizer.s));
        }
    } else if (key == "run.seeds") {
        exp.seeds.clear();
        for (const std::string& item : detail::split_list(value)) {
            const long long s = parse_int(key, item);
            if (s < 0) throw ConfigError("run.seeds must be >= 0");
            exp.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    } else if (key == "output.dir") {
        exp.output_dir = value;
    } else if (key == "probe.s_max") {
        cfg.probe.s_max = static_cast<int>(parse_int(key, value));
    } else if (key == "probe.horizon_epochs") {
        cfg.probe.horizon_epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "probe.checkpoints") {
        cfg.probe.checkpoints.clear();
        for (const std::string& item : detail::split_list(value)) {
            cfg.probe.checkpoints.push_back(parse_int(key, item));
        }
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

/// `--set key=value` override, applied after the file parse and before
/// validation. Keys must exist in the schema.
inline void apply_override(LoadedConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not key=value");
    }
    apply_assignment(cfg, detail::trim(assignment.substr(0, eq)),
                     assignment.substr(eq + 1));
}

inline LoadedConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    LoadedConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              " of '" + path + "' is not key = value");
        }
        apply_assignment(cfg, detail::trim(stripped.substr(0, eq)),
                         stripped.substr(eq + 1));
    }
    return cfg;
}

/// File + overrides + CLI-level settings, then validation. The returned
/// config is ready to run.
inline LoadedConfig load_config(const std::string& path,
                                const std::vector<std::string>& overrides,
                                const std::string& out_dir = "",
                                const std::string& seeds = "") {
    LoadedConfig cfg = load_config_file(path);
    for (const std::string& item : overrides) apply_override(cfg, item);
    if (!out_dir.empty()) cfg.experiment.output_dir = out_dir;
    if (!seeds.empty()) apply_assignment(cfg, "run.seeds", seeds);
    if (cfg.train_mode.kind == controller::Mode::Predictive) {
        cfg.train_mode.s = cfg.experiment.optimizer.s;
    }
    cfg.experiment.validate();
    if (cfg.probe.s_max < 1) throw ConfigError("probe.s_max must be >= 1");
    return cfg;
}

} // namespace stepahead::config
