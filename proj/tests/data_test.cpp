#include "stepahead/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "stepahead/controller.hpp"
#include "stepahead/errors.hpp"
#include "stepahead/models.hpp"
#include "stepahead/optim.hpp"
#include "test_support.hpp"

namespace stepahead {
namespace {

using data::batches;
using data::Dataset;
using data::gen_blobs;
using data::gen_quadratic_target;
using data::load_csv;
using data::split_dataset;

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    out << contents;
}

TEST(GenBlobs, CountsAndBalance) {
    const Dataset ds = gen_blobs(2, 10, 2, 0.5, 3);
    EXPECT_EQ(ds.size(), 20u);
    EXPECT_EQ(ds.feature_width, 2u);
    std::map<int, int> per_label;
    for (const auto& row : ds.rows) {
        ++per_label[static_cast<int>(row.target)];
        EXPECT_EQ(row.features.size(), 2u);
    }
    EXPECT_EQ(per_label[0], 10);
    EXPECT_EQ(per_label[1], 10);
}

TEST(GenBlobs, DeterministicPerSeed) {
    const Dataset a = gen_blobs(3, 5, 4, 1.0, 11);
    const Dataset b = gen_blobs(3, 5, 4, 1.0, 11);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.rows[i].features, b.rows[i].features);
        EXPECT_EQ(a.rows[i].target, b.rows[i].target);
    }
    const Dataset c = gen_blobs(3, 5, 4, 1.0, 12);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size() && !any_diff; ++i) {
        any_diff = a.rows[i].features != c.rows[i].features;
    }
    EXPECT_TRUE(any_diff);
}

TEST(GenBlobs, RejectsBadArguments) {
    EXPECT_THROW(gen_blobs(1, 5, 2, 1.0, 0), ConfigError);
    EXPECT_THROW(gen_blobs(2, 0, 2, 1.0, 0), ConfigError);
    EXPECT_THROW(gen_blobs(2, 5, 0, 1.0, 0), ConfigError);
    EXPECT_THROW(gen_blobs(2, 5, 2, 0.0, 0), ConfigError);
}

// Tight clusters with well-separated centers are linearly separable: a
// logistic regression trained to convergence classifies nearly everything.
TEST(GenBlobs, TightClustersAreLearnable) {
    const std::uint64_t seed = 5;
    const Dataset ds = gen_blobs(2, 40, 2, 0.01, seed);
    // verify the premise: centers at least 1 apart (estimated by class means)
    std::vector<std::vector<double>> means(2, std::vector<double>(2, 0.0));
    for (const auto& row : ds.rows) {
        const auto c = static_cast<std::size_t>(row.target);
        means[c][0] += row.features[0] / 40.0;
        means[c][1] += row.features[1] / 40.0;
    }
    const double dx = means[0][0] - means[1][0];
    const double dy = means[0][1] - means[1][1];
    ASSERT_GE(std::sqrt(dx * dx + dy * dy), 1.0)
        << "seed no longer satisfies the separation premise";

    models::LogisticRegressionModel model(2, 2, 1);
    optim::AdamWConfig cfg;
    cfg.gamma = 0.1;
    optim::AdamWState state = optim::init_state(model.param_count());
    const models::Batch full = data::as_batch(ds);
    for (int step = 0; step < 300; ++step) {
        controller::train_step_baseline(model, full, state, cfg);
    }
    EXPECT_GE(model.accuracy(full), 0.99);
}

TEST(GenQuadraticTarget, DegenerateRangeAndBounds) {
    EXPECT_EQ(gen_quadratic_target(3, 1.0, 1.0, 9),
              (std::vector<double>{1.0, 1.0, 1.0}));
    const auto c = gen_quadratic_target(5, 0.5, 2.0, 4);
    EXPECT_EQ(c.size(), 5u);
    for (double x : c) {
        EXPECT_GE(x, 0.5);
        EXPECT_LT(x, 2.0);
    }
    EXPECT_EQ(gen_quadratic_target(5, 0.5, 2.0, 4), c);
}

TEST(GenQuadraticTarget, RejectsBadRange) {
    EXPECT_THROW(gen_quadratic_target(3, 0.0, 1.0, 0), ConfigError);
    EXPECT_THROW(gen_quadratic_target(3, 2.0, 1.0, 0), ConfigError);
    EXPECT_THROW(gen_quadratic_target(0, 0.5, 1.0, 0), ConfigError);
}

TEST(SplitDataset, SplitArithmetic) {
    Dataset ds;
    ds.feature_width = 1;
    for (int i = 0; i < 100; ++i) {
        ds.rows.push_back({{static_cast<double>(i)}, 0.0});
    }
    const auto [train, val] = split_dataset(ds, 0.8, 1);
    EXPECT_EQ(train.size(), 80u);
    EXPECT_EQ(val.size(), 20u);
    EXPECT_EQ(train.split, data::Split::Train);
    EXPECT_EQ(val.split, data::Split::Validation);

    // same seed, same membership
    const auto [train2, val2] = split_dataset(ds, 0.8, 1);
    for (std::size_t i = 0; i < train.size(); ++i) {
        EXPECT_EQ(train.rows[i].features, train2.rows[i].features);
    }

    // membership is a partition of the original rows
    std::multiset<double> seen;
    for (const auto& row : train.rows) seen.insert(row.features[0]);
    for (const auto& row : val.rows) seen.insert(row.features[0]);
    EXPECT_EQ(seen.size(), 100u);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(seen.count(static_cast<double>(i)), 1u);
    }
}

TEST(LoadCsv, SplitsAndAutoDetectsHeader) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/simple.csv";
    std::string contents = "x0,x1,label\n";
    for (int i = 0; i < 100; ++i) {
        contents += std::to_string(i) + "," + std::to_string(i * 2) + "," +
                    std::to_string(i % 2) + "\n";
    }
    write_file(path, contents);
    const auto [train, val] = load_csv(path, -1, 0.8, 7);
    EXPECT_EQ(train.size(), 80u);
    EXPECT_EQ(val.size(), 20u);
    EXPECT_EQ(train.feature_width, 2u);
    for (const auto& row : train.rows) {
        EXPECT_EQ(row.features[1], row.features[0] * 2);
    }
}

TEST(LoadCsv, HeaderlessFileWorks) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/plain.csv";
    write_file(path, "1.5,2.5,0\n-1.0,0.25,1\n3,4,0\n0,1,1\n2,2,0\n");
    const auto [train, val] = load_csv(path, -1, 0.6, 3);
    EXPECT_EQ(train.size(), 3u);
    EXPECT_EQ(val.size(), 2u);
}

TEST(LoadCsv, TargetColumnSelection) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/target0.csv";
    write_file(path, "0,10,20\n1,30,40\n0,50,60\n1,70,80\n");
    const auto [train, val] = load_csv(path, 0, 0.5, 1);
    for (const auto& row : train.rows) {
        EXPECT_TRUE(row.target == 0.0 || row.target == 1.0);
        EXPECT_EQ(row.features.size(), 2u);
        EXPECT_GE(row.features[0], 10.0);
    }
    (void)val;
}

TEST(LoadCsv, SameSeedSameMembership) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/member.csv";
    std::string contents;
    for (int i = 0; i < 50; ++i) {
        contents += std::to_string(i) + ",0\n";
    }
    write_file(path, contents);
    const auto [a_train, a_val] = load_csv(path, 1, 0.7, 21);
    const auto [b_train, b_val] = load_csv(path, 1, 0.7, 21);
    ASSERT_EQ(a_train.size(), b_train.size());
    for (std::size_t i = 0; i < a_train.size(); ++i) {
        EXPECT_EQ(a_train.rows[i].features, b_train.rows[i].features);
    }
}

TEST(LoadCsv, MissingFileThrowsIoError) {
    EXPECT_THROW(load_csv("/nonexistent/never.csv", -1, 0.8, 1), IoError);
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/bad.csv";
    write_file(path, "1,2,0\n3,oops,1\n");
    try {
        load_csv(path, -1, 0.5, 1);
        FAIL() << "expected DataError";
    } catch (const DataError& err) {
        const std::string what = err.what();
        EXPECT_NE(what.find("row 2"), std::string::npos) << what;
        EXPECT_NE(what.find("column 2"), std::string::npos) << what;
    }
}

TEST(LoadCsv, EmptyFileThrows) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/empty.csv";
    write_file(path, "");
    EXPECT_THROW(load_csv(path, -1, 0.5, 1), DataError);
    write_file(path, "a,b,c\n");
    EXPECT_THROW(load_csv(path, -1, 0.5, 1), DataError);
}

TEST(LoadCsv, InconsistentWidthThrows) {
    testing::TempDir dir("csv");
    const std::string path = dir.str() + "/ragged.csv";
    write_file(path, "1,2,0\n1,2,3,0\n");
    EXPECT_THROW(load_csv(path, -1, 0.5, 1), DataError);
}

TEST(Batches, PartitionArithmetic) {
    Dataset ds;
    ds.feature_width = 1;
    for (int i = 0; i < 10; ++i) {
        ds.rows.push_back({{static_cast<double>(i)}, static_cast<double>(i)});
    }
    const auto bs = batches(ds, 4, false, 0);
    ASSERT_EQ(bs.size(), 3u);
    EXPECT_EQ(bs[0].size(), 4u);
    EXPECT_EQ(bs[1].size(), 4u);
    EXPECT_EQ(bs[2].size(), 2u);
}

TEST(Batches, NoShuffleKeepsOrder) {
    Dataset ds;
    ds.feature_width = 1;
    for (int i = 0; i < 7; ++i) {
        ds.rows.push_back({{static_cast<double>(i)}, 0.0});
    }
    const auto bs = batches(ds, 3, false, 99);
    double expect = 0.0;
    for (const auto& b : bs) {
        for (const auto& x : b.inputs) {
            EXPECT_EQ(x[0], expect);
            expect += 1.0;
        }
    }
}

TEST(Batches, ShuffledBatchesCoverEveryRowOnce) {
    Dataset ds;
    ds.feature_width = 1;
    for (int i = 0; i < 23; ++i) {
        ds.rows.push_back({{static_cast<double>(i)}, 0.0});
    }
    const auto bs = batches(ds, 5, true, 31);
    std::multiset<double> seen;
    for (const auto& b : bs) {
        for (const auto& x : b.inputs) seen.insert(x[0]);
    }
    EXPECT_EQ(seen.size(), 23u);
    for (int i = 0; i < 23; ++i) {
        EXPECT_EQ(seen.count(static_cast<double>(i)), 1u);
    }
    // deterministic per seed, different across seeds
    const auto again = batches(ds, 5, true, 31);
    EXPECT_EQ(bs[0].inputs, again[0].inputs);
    const auto other = batches(ds, 5, true, 32);
    EXPECT_NE(bs[0].inputs, other[0].inputs);
}

TEST(Batches, EmptyDatasetThrows) {
    Dataset ds;
    EXPECT_THROW(batches(ds, 4, false, 0), DataError);
}

} // namespace
} // namespace stepahead
