// Experiment orchestration: optimizer-mode comparison sweeps over shared
// seeds, the trajectory approximation probe, multi-seed aggregation, and
// metrics persistence.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stepahead/controller.hpp"
#include "stepahead/data.hpp"
#include "stepahead/errors.hpp"
#include "stepahead/models.hpp"
#include "stepahead/optim.hpp"
#include "stepahead/rng.hpp"

namespace stepahead::harness {

enum class ProblemKind {
    Quadratic,
    LogregBlobs,
    MlpBlobs,
    LogregCsv,
    MlpCsv,
};

inline std::string problem_kind_name(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::Quadratic: return "quadratic";
        case ProblemKind::LogregBlobs: return "logreg_blobs";
        case ProblemKind::MlpBlobs: return "mlp_blobs";
        case ProblemKind::LogregCsv: return "logreg_csv";
        case ProblemKind::MlpCsv: return "mlp_csv";
    }
    return "?";
}

inline ProblemKind parse_problem_kind(const std::string& name) {
    if (name == "quadratic") return ProblemKind::Quadratic;
    if (name == "logreg_blobs") return ProblemKind::LogregBlobs;
    if (name == "mlp_blobs") return ProblemKind::MlpBlobs;
    if (name == "logreg_csv") return ProblemKind::LogregCsv;
    if (name == "mlp_csv") return ProblemKind::MlpCsv;
    throw ConfigError("unknown problem.kind '" + name + "'");
}

struct ProblemSpec {
    ProblemKind kind = ProblemKind::Quadratic;
    int dim = 10;                 // features / quadratic dimension
    int classes = 2;              // blob clusters
    int per_class = 100;          // rows per cluster
    double spread = 1.0;          // blob standard deviation
    double curvature_lo = 0.5;    // quadratic curvature range
    double curvature_hi = 2.0;
    int steps_per_epoch = 1;      // quadratic: update steps per epoch
    std::string csv_path;
    int target_column = -1;       // csv: 0-based, -1 = last
    double split_fraction = 0.8;  // train share of the shuffled rows
    std::vector<int> mlp_hidden = {8};

    bool uses_blobs() const {
        return kind == ProblemKind::LogregBlobs || kind == ProblemKind::MlpBlobs;
    }
    bool uses_csv() const {
        return kind == ProblemKind::LogregCsv || kind == ProblemKind::MlpCsv;
    }
    bool uses_mlp() const {
        return kind == ProblemKind::MlpBlobs || kind == ProblemKind::MlpCsv;
    }

    void validate() const {
        if (kind == ProblemKind::Quadratic) {
            if (dim < 1) throw ConfigError("problem.dim must be >= 1");
            if (!(curvature_lo > 0.0) || !(curvature_hi >= curvature_lo)) {
                throw ConfigError("problem curvature range must satisfy "
                                  "0 < lo <= hi");
            }
            if (steps_per_epoch < 1) {
                throw ConfigError("problem.steps_per_epoch must be >= 1");
            }
        }
        if (uses_blobs()) {
            if (classes < 2) throw ConfigError("problem.classes must be >= 2");
            if (per_class < 1) throw ConfigError("problem.per_class must be >= 1");
            if (dim < 1) throw ConfigError("problem.dim must be >= 1");
            if (!(spread > 0.0)) throw ConfigError("problem.spread must be > 0");
        }
        if (uses_csv() && csv_path.empty()) {
            throw ConfigError("problem.csv_path is required for csv problems");
        }
        if (kind != ProblemKind::Quadratic &&
            !(split_fraction > 0.0 && split_fraction < 1.0)) {
            throw ConfigError("problem.split_fraction must be in (0, 1)");
        }
        if (uses_mlp()) {
            for (int h : mlp_hidden) {
                if (h < 1) throw ConfigError("problem.mlp_hidden sizes must be >= 1");
            }
        }
    }

    // Identity string; aggregation refuses to mix records from different tags.
    std::string tag() const {
        std::ostringstream out;
        out << problem_kind_name(kind);
        switch (kind) {
            case ProblemKind::Quadratic:
                out << "(dim=" << dim << ",curv=[" << curvature_lo << ","
                    << curvature_hi << "])";
                break;
            case ProblemKind::LogregBlobs:
            case ProblemKind::MlpBlobs:
                out << "(classes=" << classes << ",per_class=" << per_class
                    << ",dim=" << dim << ",spread=" << spread << ")";
                break;
            case ProblemKind::LogregCsv:
            case ProblemKind::MlpCsv:
                out << "(" << csv_path << ")";
                break;
        }
        return out.str();
    }
};

struct ExperimentConfig {
    ProblemSpec problem;
    optim::AdamWConfig optimizer;
    controller::TrainPlan plan; // mode and seed are overridden per run
    std::vector<controller::ModeSpec> modes = {{controller::Mode::Baseline, 0}};
    std::vector<std::uint64_t> seeds = {1};
    std::string output_dir;
    bool quiet = false;

    void validate() const {
        problem.validate();
        optimizer.validate();
        plan.validate();
        if (modes.empty()) throw ConfigError("run.modes must name at least one mode");
        if (seeds.empty()) throw ConfigError("run.seeds must name at least one seed");
    }
};

// Materialized problem instance: datasets plus whatever the model factory
// needs (the quadratic curvature spectrum).
struct ProblemData {
    data::Dataset train;
    data::Dataset validation;
    std::vector<double> curvature;
    int classes = 0;
};

namespace detail {

inline data::Dataset placeholder_rows(std::size_t count) {
    data::Dataset ds;
    ds.feature_width = 1;
    ds.rows.assign(count, data::Row{{0.0}, 0.0});
    return ds;
}

inline int infer_classes(const data::Dataset& ds) {
    int classes = 0;
    for (const data::Row& row : ds.rows) {
        const int y = static_cast<int>(row.target);
        if (static_cast<double>(y) != row.target || y < 0) {
            throw DataError("csv targets must be non-negative integer class ids");
        }
        classes = std::max(classes, y + 1);
    }
    if (classes < 2) throw DataError("csv targets must cover >= 2 classes");
    return classes;
}

} // namespace detail

/// Builds the datasets for one seed. Pure function of (spec, seed): every
/// mode that shares the seed trains on bitwise-identical data.
inline ProblemData make_data(const ProblemSpec& spec, std::uint64_t seed) {
    ProblemData pd;
    switch (spec.kind) {
        case ProblemKind::Quadratic:
            pd.curvature = data::gen_quadratic_target(
                spec.dim, spec.curvature_lo, spec.curvature_hi,
                derive_seed(seed, kDataStream));
            // placeholder rows only clock the loop: steps_per_epoch updates
            pd.train = detail::placeholder_rows(
                static_cast<std::size_t>(spec.steps_per_epoch));
            pd.validation = detail::placeholder_rows(1);
            pd.validation.split = data::Split::Validation;
            break;
        case ProblemKind::LogregBlobs:
        case ProblemKind::MlpBlobs: {
            const data::Dataset all =
                data::gen_blobs(spec.classes, spec.per_class, spec.dim,
                                spec.spread, derive_seed(seed, kDataStream));
            auto split = data::split_dataset(all, spec.split_fraction,
                                             derive_seed(seed, kSplitStream));
            pd.train = std::move(split.first);
            pd.validation = std::move(split.second);
            pd.classes = spec.classes;
            break;
        }
        case ProblemKind::LogregCsv:
        case ProblemKind::MlpCsv: {
            auto split = data::load_csv(spec.csv_path, spec.target_column,
                                        spec.split_fraction,
                                        derive_seed(seed, kSplitStream));
            pd.train = std::move(split.first);
            pd.validation = std::move(split.second);
            data::Dataset merged = pd.train;
            merged.rows.insert(merged.rows.end(), pd.validation.rows.begin(),
                               pd.validation.rows.end());
            pd.classes = detail::infer_classes(merged);
            break;
        }
    }
    return pd;
}

/// Builds a freshly initialized model for one seed. Pure function of
/// (spec, data, seed); all modes start from bitwise-identical weights.
inline std::unique_ptr<models::Model> make_model(const ProblemSpec& spec,
                                                 const ProblemData& pd,
                                                 std::uint64_t seed) {
    const std::uint64_t init_seed = derive_seed(seed, kInitStream);
    switch (spec.kind) {
        case ProblemKind::Quadratic:
            return std::make_unique<models::QuadraticModel>(
                models::QuadraticModel::seeded(pd.curvature, init_seed));
        case ProblemKind::LogregBlobs:
        case ProblemKind::LogregCsv:
            return std::make_unique<models::LogisticRegressionModel>(
                static_cast<int>(pd.train.feature_width), pd.classes,
                init_seed);
        case ProblemKind::MlpBlobs:
        case ProblemKind::MlpCsv: {
            std::vector<int> layers;
            layers.push_back(static_cast<int>(pd.train.feature_width));
            layers.insert(layers.end(), spec.mlp_hidden.begin(),
                          spec.mlp_hidden.end());
            layers.push_back(pd.classes);
            return std::make_unique<models::MlpModel>(
                std::move(layers), models::LossKind::CrossEntropy, init_seed);
        }
    }
    throw ConfigError("make_model: unhandled problem kind");
}

namespace detail {

// %.17g is round-trip exact for double; "nan" marks undefined metrics.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

} // namespace detail

/// Writes one row per (mode, seed, epoch) with a fixed column order. Floats
/// are printed with 17 significant digits so reading them back is exact.
inline void write_metrics_csv(const std::vector<controller::RunRecord>& records,
                              const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_metrics_csv: cannot open '" + path + "'");
    out << "mode,seed,epoch,train_loss,val_loss,val_acc,gamma\n";
    for (const controller::RunRecord& rec : records) {
        for (const controller::EpochRecord& er : rec.epochs) {
            out << rec.mode << ',' << rec.seed << ',' << er.epoch << ','
                << detail::format_double(er.train_loss) << ','
                << detail::format_double(er.val_loss) << ','
                << detail::format_double(er.val_acc) << ','
                << detail::format_double(er.gamma) << '\n';
        }
    }
    if (!out.flush()) {
        throw IoError("write_metrics_csv: write failed for '" + path + "'");
    }
}

/// Per-step trace stream for one run (flag-gated by train.record_steps).
inline void write_steps_csv(const controller::RunRecord& rec,
                            const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("write_steps_csv: cannot open '" + path + "'");
    out << "step,loss,grad_norm,gamma,pred_distance\n";
    for (const controller::StepTrace& st : rec.steps) {
        out << st.step << ',' << detail::format_double(st.loss) << ','
            << detail::format_double(st.grad_norm) << ','
            << detail::format_double(st.gamma) << ','
            << detail::format_double(st.pred_distance) << '\n';
    }
    if (!out.flush()) {
        throw IoError("write_steps_csv: write failed for '" + path + "'");
    }
}

/// Trains every (mode, seed) pair of the sweep from identical per-seed data
/// and initial weights, replaying identical batch sequences across modes. A
/// diverged run is recorded, not fatal. When output_dir is set the records
/// are persisted there as metrics.csv (plus per-run step streams when
/// enabled).
inline std::vector<controller::RunRecord> run_comparison(
    const ExperimentConfig& config) {
    config.validate();
    std::vector<controller::RunRecord> records;
    for (const controller::ModeSpec& mode : config.modes) {
        for (const std::uint64_t seed : config.seeds) {
            const ProblemData pd = make_data(config.problem, seed);
            const std::unique_ptr<models::Model> model =
                make_model(config.problem, pd, seed);
            controller::TrainPlan plan = config.plan;
            plan.mode = mode;
            plan.seed = seed;
            controller::RunRecord rec = controller::run_training(
                plan, *model, pd.train, pd.validation, config.optimizer);
            rec.problem = config.problem.tag();
            records.push_back(std::move(rec));
        }
    }
    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        write_metrics_csv(records, config.output_dir + "/metrics.csv");
        if (config.plan.record_steps) {
            for (const controller::RunRecord& rec : records) {
                write_steps_csv(rec, config.output_dir + "/steps_" + rec.mode +
                                         "_seed" + std::to_string(rec.seed) +
                                         ".csv");
            }
        }
    }
    return records;
}

// --- aggregation -------------------------------------------------------------

struct Stats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
};

inline Stats compute_stats(const std::vector<double>& xs) {
    Stats s;
    if (xs.empty()) return s;
    double sum = 0.0;
    s.min = xs.front();
    s.max = xs.front();
    for (double x : xs) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

struct ModeSummary {
    std::string mode;
    std::string problem;
    int runs = 0;
    int diverged = 0;
    Stats max_val_acc;
    Stats min_val_loss;
    Stats final_train_loss;
    double delta_acc_vs_baseline = std::numeric_limits<double>::quiet_NaN();
    double delta_loss_vs_baseline = std::numeric_limits<double>::quiet_NaN();
};

/// Per-mode statistics over seeds (completed runs only; diverged runs are
/// counted separately) plus mean deltas against the baseline mode when one
/// is present. Values do not depend on record order; summaries are sorted by
/// mode token.
inline std::vector<ModeSummary> aggregate(
    const std::vector<controller::RunRecord>& records) {
    if (records.empty()) throw PreconditionError("aggregate: no records");
    const std::string& problem = records.front().problem;
    for (const auto& rec : records) {
        if (rec.problem != problem) {
            throw ConfigError("aggregate: records mix problems '" + problem +
                              "' and '" + rec.problem + "'");
        }
    }
    std::map<std::string, std::vector<const controller::RunRecord*>> by_mode;
    for (const auto& rec : records) by_mode[rec.mode].push_back(&rec);

    std::vector<ModeSummary> out;
    for (const auto& [mode, recs] : by_mode) {
        ModeSummary ms;
        ms.mode = mode;
        ms.problem = problem;
        ms.runs = static_cast<int>(recs.size());
        std::vector<double> accs, losses, finals;
        for (const controller::RunRecord* rec : recs) {
            if (rec->diverged) {
                ++ms.diverged;
                continue;
            }
            accs.push_back(rec->summary.max_val_acc);
            losses.push_back(rec->summary.min_val_loss);
            finals.push_back(rec->summary.final_train_loss);
        }
        ms.max_val_acc = compute_stats(accs);
        ms.min_val_loss = compute_stats(losses);
        ms.final_train_loss = compute_stats(finals);
        out.push_back(std::move(ms));
    }
    for (ModeSummary& ms : out) {
        for (const ModeSummary& base : out) {
            if (base.mode == "baseline") {
                ms.delta_acc_vs_baseline =
                    ms.max_val_acc.mean - base.max_val_acc.mean;
                ms.delta_loss_vs_baseline =
                    ms.min_val_loss.mean - base.min_val_loss.mean;
            }
        }
    }
    return out;
}

// --- approximation probe -----------------------------------------------------

struct ProbeEntry {
    int s = 0;
    double sum_err = 0.0;    // ||(theta_t - sum of true update terms) - true theta_{t+s}||_inf
    double extrap_err = 0.0; // ||predicted theta_{t+s} - true theta_{t+s}||_inf
};

struct ProbeCheckpoint {
    long long step = 0; // checkpoint position: after this many updates
    std::vector<ProbeEntry> entries;
};

struct ProbeReport {
    std::vector<ProbeCheckpoint> checkpoints;
    ParamVector final_params; // trajectory end, for observer-purity checks
    long long total_steps = 0;
};

namespace detail {

// Deterministic walk over the baseline trajectory's upcoming (batch, gamma)
// pairs. Copyable so a probe can look ahead without disturbing the walk.
struct ScheduleCursor {
    const data::Dataset* train = nullptr;
    const controller::TrainPlan* plan = nullptr;
    double base_gamma = 0.0;
    int epoch = -1;
    std::size_t index = 0;
    double gamma = 0.0;
    std::vector<models::Batch> batches;

    void advance_epoch() {
        ++epoch;
        gamma = controller::effective_gamma(base_gamma, plan->lr_schedule,
                                            epoch);
        batches = controller::epoch_batches(*train, *plan, epoch);
        index = 0;
    }

    std::pair<const models::Batch*, double> next() {
        if (epoch < 0 || index == batches.size()) advance_epoch();
        return {&batches[index++], gamma};
    }
};

} // namespace detail

/// Observes a baseline training trajectory and, at each checkpoint (a step
/// count; defaults cover the first, middle, and last epoch ends), compares
/// three ways of reaching the weights s updates ahead, for s = 1..s_max:
///
///   a. the true trajectory: s genuine AdamW updates, future batches and all;
///   b. the decay-decoupled sum: theta_t minus the true per-step update terms
///      gamma * m_hat_i / (sqrt(v_hat_i) + eps), i.e. the exact trajectory
///      with only the gamma*lambda coupling dropped (identical to a when
///      lambda = 0);
///   c. the s-step extrapolation used by the predictive controller.
///
/// Reports the max-norm errors |b - a| and |c - a| per (checkpoint, s). The
/// probe works on copies; the observed trajectory is bitwise unchanged.
inline ProbeReport probe_trajectory(models::Model& model,
                                    const data::Dataset& train,
                                    controller::TrainPlan plan,
                                    const optim::AdamWConfig& optimizer,
                                    int s_max, int horizon_epochs,
                                    std::vector<long long> checkpoints = {}) {
    if (s_max < 1) throw ConfigError("probe: s_max must be >= 1");
    if (horizon_epochs < 1) throw ConfigError("probe: horizon must be >= 1");
    plan.mode = {controller::Mode::Baseline, 0};
    plan.epochs = horizon_epochs;

    const long long steps_per_epoch = static_cast<long long>(
        (train.size() + plan.batch_size - 1) / plan.batch_size);
    const long long total_steps = steps_per_epoch * horizon_epochs;
    if (total_steps < s_max) {
        throw ConfigError("probe: horizon shorter than s_max");
    }
    if (checkpoints.empty()) {
        const int mid = (horizon_epochs + 1) / 2;
        std::set<long long> marks = {steps_per_epoch,
                                     steps_per_epoch * mid,
                                     total_steps};
        checkpoints.assign(marks.begin(), marks.end());
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    for (long long c : checkpoints) {
        if (c < 1 || c > total_steps) {
            throw ConfigError("probe: checkpoint " + std::to_string(c) +
                              " outside 1.." + std::to_string(total_steps));
        }
    }

    detail::ScheduleCursor cursor;
    cursor.train = &train;
    cursor.plan = &plan;
    cursor.base_gamma = optimizer.gamma;
    optim::AdamWState state = optim::init_state(model.param_count());
    ProbeReport report;
    report.total_steps = total_steps;

    for (long long step = 1; step <= total_steps; ++step) {
        const auto [batch, gamma] = cursor.next();
        optim::AdamWConfig cfg = optimizer;
        cfg.gamma = gamma;
        controller::train_step_baseline(model, *batch, state, cfg);

        if (!std::binary_search(checkpoints.begin(), checkpoints.end(), step)) {
            continue;
        }
        // look ahead on copies
        ProbeCheckpoint cp;
        cp.step = step;
        const ParamVector theta_t = model.params();
        std::unique_ptr<models::Model> ahead = model.clone();
        optim::AdamWState ahead_state = state;
        detail::ScheduleCursor ahead_cursor = cursor;
        ParamVector summed = theta_t;
        ParamVector update_term(theta_t.size());
        for (int s = 1; s <= s_max; ++s) {
            const auto [next_batch, next_gamma] = ahead_cursor.next();
            optim::AdamWConfig ahead_cfg = optimizer;
            ahead_cfg.gamma = next_gamma;
            const models::ForwardBackward fb =
                ahead->loss_and_gradient(*next_batch);
            optim::StepResult res = optim::adamw_step(
                ahead->params(), ahead_state, fb.grad, ahead_cfg, &update_term);
            ahead->params() = std::move(res.params);
            ahead_state = std::move(res.state);
            for (std::size_t i = 0; i < summed.size(); ++i) {
                summed[i] -= update_term[i];
            }
            optim::AdamWConfig predict_cfg = cfg;
            predict_cfg.s = s;
            const ParamVector extrapolated =
                optim::predict_weights(theta_t, state, predict_cfg);
            ProbeEntry entry;
            entry.s = s;
            entry.sum_err = numerics::max_abs_diff(summed, ahead->params());
            entry.extrap_err =
                numerics::max_abs_diff(extrapolated, ahead->params());
            cp.entries.push_back(entry);
        }
        report.checkpoints.push_back(std::move(cp));
    }
    report.final_params = model.params();
    return report;
}

/// Probe over the configured problem: builds the seed's data and model, then
/// observes a baseline trajectory of horizon_epochs epochs.
inline ProbeReport approximation_probe(const ExperimentConfig& config,
                                       int s_max, int horizon_epochs,
                                       std::vector<long long> checkpoints = {}) {
    config.validate();
    const std::uint64_t seed = config.seeds.front();
    const ProblemData pd = make_data(config.problem, seed);
    const std::unique_ptr<models::Model> model =
        make_model(config.problem, pd, seed);
    controller::TrainPlan plan = config.plan;
    plan.seed = seed;
    return probe_trajectory(*model, pd.train, plan, config.optimizer, s_max,
                            horizon_epochs, std::move(checkpoints));
}

} // namespace stepahead::harness
