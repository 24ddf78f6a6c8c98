// Seeded synthetic dataset generators, a minimal CSV loader, and batching.
// Every generator is a pure function of its arguments and seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "stepahead/errors.hpp"
#include "stepahead/models.hpp"
#include "stepahead/rng.hpp"

namespace stepahead::data {

enum class Split { Train, Validation };

struct Row {
    std::vector<double> features;
    double target = 0.0;
};

struct Dataset {
    std::vector<Row> rows;
    std::size_t feature_width = 0;
    Split split = Split::Train;

    std::size_t size() const { return rows.size(); }
};

// Centers of the generated clusters are drawn uniformly from this cube.
inline constexpr double kBlobCenterRange = 2.0;

/// Gaussian clusters: one seeded random center per class in
/// [-kBlobCenterRange, kBlobCenterRange]^dim, then per_class points per class
/// at center + spread * N(0, 1). Rows are emitted class-major. Draw order:
/// all centers (class-major, coordinate-minor), then all points.
inline Dataset gen_blobs(int classes, int per_class, int dim, double spread,
                         std::uint64_t seed) {
    if (classes < 2 || per_class < 1 || dim < 1 || !(spread > 0.0)) {
        throw ConfigError("gen_blobs: needs classes >= 2, per_class >= 1, "
                          "dim >= 1, spread > 0");
    }
    SplitMix64 rng(seed);
    std::vector<std::vector<double>> centers(
        static_cast<std::size_t>(classes),
        std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& c : centers) {
        for (double& x : c) {
            x = rng.next_uniform(-kBlobCenterRange, kBlobCenterRange);
        }
    }
    Dataset ds;
    ds.feature_width = static_cast<std::size_t>(dim);
    ds.rows.reserve(static_cast<std::size_t>(classes) * per_class);
    for (int c = 0; c < classes; ++c) {
        for (int k = 0; k < per_class; ++k) {
            Row row;
            row.features.resize(static_cast<std::size_t>(dim));
            for (int j = 0; j < dim; ++j) {
                row.features[static_cast<std::size_t>(j)] =
                    centers[static_cast<std::size_t>(c)]
                           [static_cast<std::size_t>(j)] +
                    spread * rng.next_gaussian();
            }
            row.target = static_cast<double>(c);
            ds.rows.push_back(std::move(row));
        }
    }
    return ds;
}

/// Seeded curvature spectrum for the quadratic bowl, uniform in [lo, hi].
inline std::vector<double> gen_quadratic_target(int dim, double lo, double hi,
                                                std::uint64_t seed) {
    if (dim < 1 || !(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
        throw ConfigError("gen_quadratic_target: needs dim >= 1 and "
                          "0 < lo <= hi < inf");
    }
    SplitMix64 rng(seed);
    std::vector<double> curvature(static_cast<std::size_t>(dim));
    for (double& c : curvature) c = rng.next_uniform(lo, hi);
    return curvature;
}

/// Seeded shuffle of the rows followed by a split: round(n * fraction) rows
/// go to train, the rest to validation.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                                 double fraction,
                                                 std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("split_dataset: fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(ds.size()) * fraction));
    Dataset train, val;
    train.feature_width = val.feature_width = ds.feature_width;
    train.split = Split::Train;
    val.split = Split::Validation;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? train : val).rows.push_back(ds.rows[order[i]]);
    }
    return {std::move(train), std::move(val)};
}

namespace detail {

inline bool parse_cell(const std::string& cell, double& out) {
    std::size_t start = cell.find_first_not_of(" \t\r");
    if (start == std::string::npos) return false;
    std::size_t stop = cell.find_last_not_of(" \t\r");
    const std::string token = cell.substr(start, stop - start + 1);
    try {
        std::size_t used = 0;
        out = std::stod(token, &used);
        return used == token.size();
    } catch (const std::exception&) {
        return false;
    }
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(pos));
            return cells;
        }
        cells.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

} // namespace detail

/// Loads a numeric CSV (comma separator, '.' decimal point, no quoting). A
/// header line is auto-detected when any cell of the first row is
/// non-numeric. target_column is a 0-based index; -1 selects the last
/// column. Returns seeded-shuffle train/validation splits.
inline std::pair<Dataset, Dataset> load_csv(const std::string& path,
                                            int target_column,
                                            double split_fraction,
                                            std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv: cannot open '" + path + "'");

    Dataset all;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_line(line);
        std::vector<double> values(cells.size());
        bool numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_cell(cells[c], values[c])) {
                numeric = false;
                bad_col = c;
                break;
            }
        }
        if (!numeric) {
            if (first_data_row) continue; // header line
            throw DataError("load_csv: non-numeric cell at row " +
                            std::to_string(line_no) + ", column " +
                            std::to_string(bad_col + 1) + " of '" + path + "'");
        }
        first_data_row = false;
        if (all.rows.empty()) {
            if (values.size() < 2) {
                throw DataError("load_csv: need at least two columns in '" +
                                path + "'");
            }
            all.feature_width = values.size() - 1;
        } else if (values.size() != all.feature_width + 1) {
            throw DataError("load_csv: inconsistent column count at row " +
                            std::to_string(line_no) + " of '" + path + "'");
        }
        const int width = static_cast<int>(values.size());
        const int tcol = target_column < 0 ? width - 1 : target_column;
        if (tcol >= width) {
            throw ConfigError("load_csv: target column " +
                              std::to_string(target_column) +
                              " out of range for " + std::to_string(width) +
                              " columns");
        }
        Row row;
        row.features.reserve(values.size() - 1);
        for (int c = 0; c < width; ++c) {
            if (c == tcol) {
                row.target = values[static_cast<std::size_t>(c)];
            } else {
                row.features.push_back(values[static_cast<std::size_t>(c)]);
            }
        }
        all.rows.push_back(std::move(row));
    }
    if (all.rows.empty()) {
        throw DataError("load_csv: no data rows in '" + path + "'");
    }
    return split_dataset(all, split_fraction, seed);
}

/// Partitions the dataset into ceil(n / batch_size) batches covering every
/// row exactly once; the last batch may be short. With shuffle, row order is
/// permuted by the seeded generator first.
inline std::vector<models::Batch> batches(const Dataset& ds,
                                          std::size_t batch_size, bool shuffle,
                                          std::uint64_t seed) {
    if (ds.size() == 0) throw DataError("batches: empty dataset");
    if (batch_size < 1) throw ConfigError("batches: batch_size must be >= 1");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) {
        SplitMix64 rng(seed);
        rng.shuffle(order);
    }
    std::vector<models::Batch> out;
    out.reserve((ds.size() + batch_size - 1) / batch_size);
    for (std::size_t pos = 0; pos < order.size(); pos += batch_size) {
        models::Batch b;
        const std::size_t stop = std::min(pos + batch_size, order.size());
        b.inputs.reserve(stop - pos);
        b.targets.reserve(stop - pos);
        for (std::size_t i = pos; i < stop; ++i) {
            b.inputs.push_back(ds.rows[order[i]].features);
            b.targets.push_back(ds.rows[order[i]].target);
        }
        out.push_back(std::move(b));
    }
    return out;
}

/// One batch holding the whole dataset, for full-set evaluation.
inline models::Batch as_batch(const Dataset& ds) {
    if (ds.size() == 0) throw DataError("as_batch: empty dataset");
    models::Batch b;
    b.inputs.reserve(ds.size());
    b.targets.reserve(ds.size());
    for (const Row& row : ds.rows) {
        b.inputs.push_back(row.features);
        b.targets.push_back(row.target);
    }
    return b;
}

} // namespace stepahead::data
