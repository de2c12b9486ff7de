#include "crtcea/csv.hpp"
#include "crtcea/dataset.hpp"
#include "crtcea/errors.hpp"
#include "crtcea/rng.hpp"
#include "test_helpers.hpp"

#include <cstdio>
#include <doctest.h>
#include <filesystem>
#include <fstream>

using namespace crtcea;
using crtcea::testing::DatasetBuilder;
using crtcea::testing::missing;

namespace {

std::string temp_path(const std::string &name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_CASE("load_csv: blanks become missing values with cleared mask bits") {
    const auto path = temp_path("crtcea_blank.csv");
    write_text(path, "cluster_id,arm,cost,qaly\n"
                     "c1,0,10.5,0.02\n"
                     "c1,0,11,0.03\n"
                     "c2,1,,0.01\n"
                     "c2,1,9.25,0.04\n");
    auto d = load_csv(path);
    REQUIRE(d.n_rows() == 4);
    CHECK(d.cost_mask() == std::vector<std::uint8_t>{1, 1, 0, 1});
    CHECK(d.qaly_mask() == std::vector<std::uint8_t>{1, 1, 1, 1});
    CHECK(std::isnan(d.cost(2)));
    CHECK(d.n_missing_cost() == 1);
    CHECK(d.clusters().size() == 2);
    CHECK(d.clusters()[0].size == 2);
    std::remove(path.c_str());
}

TEST_CASE("load_csv: cluster in both arms is a consistency error") {
    const auto path = temp_path("crtcea_botharms.csv");
    write_text(path, "cluster_id,arm,cost,qaly\n"
                     "c7,0,10,0.02\n"
                     "c7,1,11,0.03\n");
    CHECK_THROWS_AS(load_csv(path), InputError);
    std::remove(path.c_str());
}

TEST_CASE("load_csv: malformed numerics and unknown arm labels") {
    const auto path = temp_path("crtcea_bad.csv");
    write_text(path, "cluster_id,arm,cost,qaly\nc1,0,abc,0.02\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("column cost"), InputError);
    write_text(path, "cluster_id,arm,cost,qaly\nc1,2,10,0.02\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("arm"), InputError);
    write_text(path, "cluster_id,arm,cost,qaly,epd\nc1,0,10,0.02,\n");
    CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("epd"), InputError);
    std::remove(path.c_str());
}

namespace {

// Missingness pattern shaped like the case study's Table 1: 911 control rows
// with 402 missing costs / 39 missing QALYs, 1730 intervention rows with 460
// missing costs / 59 missing QALYs, 18 zero-cost rows (15 intervention).
TrialDataset table1_shaped_dataset() {
    DatasetBuilder b;
    Rng rng(77);
    auto add_arm = [&](Arm arm, int n, int miss_cost, int miss_qaly, int zero_cost,
                       const std::string &prefix, int n_clusters) {
        for (int i = 0; i < n; ++i) {
            double c = 100.0 + (i % 50);
            double q = 0.02 + 1e-4 * (i % 9);
            if (i < miss_cost)
                c = missing();
            else if (i < miss_cost + zero_cost)
                c = 0.0;
            if (i >= n - miss_qaly) q = missing();
            b.row(prefix + std::to_string(i % n_clusters), arm, c, q);
        }
    };
    add_arm(Arm::control, 911, 402, 39, 3, "ctl", 49);
    add_arm(Arm::intervention, 1730, 460, 59, 15, "int", 52);
    return b.build();
}

} // namespace

TEST_CASE("table-1 shaped file reproduces the mask totals and arm sizes") {
    auto d = table1_shaped_dataset();
    const auto path = temp_path("crtcea_table1.csv");
    save_csv(d, path);
    auto loaded = load_csv(path);
    REQUIRE(loaded.n_rows() == 2641);
    CHECK(loaded.n_missing_cost() == 402 + 460);
    CHECK(loaded.n_missing_qaly() == 39 + 59);

    auto split = split_by_arm(loaded);
    CHECK(split.control.n_rows() == 911);
    CHECK(split.intervention.n_rows() == 1730);

    auto filtered = filter_positive_costs(loaded);
    CHECK(filtered.removed == 18);
    std::size_t zero_int = 0;
    for (std::size_t i = 0; i < loaded.n_rows(); ++i)
        if (loaded.cost_observed(i) && loaded.cost(i) <= 0.0 && loaded.arm(i) == Arm::intervention)
            ++zero_int;
    CHECK(zero_int == 15);
    std::remove(path.c_str());
}

TEST_CASE("filter_positive_costs keeps missing rows and is idempotent") {
    auto d = DatasetBuilder{}
                 .row("a", Arm::control, 5.0, 0.1)
                 .row("a", Arm::control, 0.0, 0.2)
                 .row("b", Arm::intervention, missing(), 0.3)
                 .build();
    auto r = filter_positive_costs(d);
    CHECK(r.removed == 1);
    REQUIRE(r.dataset.n_rows() == 2);
    CHECK(r.dataset.cost(0) == 5.0);
    CHECK_FALSE(r.dataset.cost_observed(1));
    // sizes are the randomized counts, not recomputed
    CHECK(r.dataset.clusters()[0].size == 2);

    auto again = filter_positive_costs(r.dataset);
    CHECK(again.removed == 0);
    CHECK(again.dataset.n_rows() == r.dataset.n_rows());
}

TEST_CASE("filter_positive_costs on an all-positive dataset is the identity") {
    auto d = DatasetBuilder{}
                 .row("a", Arm::control, 5.0, 0.1)
                 .row("b", Arm::intervention, 2.0, 0.2)
                 .build();
    auto r = filter_positive_costs(d);
    CHECK(r.removed == 0);
    CHECK(r.dataset.n_rows() == 2);
}

TEST_CASE("split_by_arm partitions clusters; single-arm input errors") {
    auto d = DatasetBuilder{}
                 .row("a", Arm::control, 1.0, 0.1)
                 .row("b", Arm::control, 2.0, 0.1)
                 .row("c", Arm::intervention, 3.0, 0.1)
                 .row("d", Arm::intervention, 4.0, 0.1)
                 .build();
    auto split = split_by_arm(d);
    CHECK(split.control.n_clusters() == 2);
    CHECK(split.intervention.n_clusters() == 2);

    auto single = DatasetBuilder{}.row("a", Arm::control, 1.0, 0.1).build();
    CHECK_THROWS_AS(split_by_arm(single), InputError);
}

TEST_CASE("save/load round-trip preserves values and masks bit-exactly") {
    Rng rng(2024);
    DatasetBuilder b;
    b.with_covariates({"epd", "eco"});
    for (int i = 0; i < 200; ++i) {
        const std::string cluster = "cl" + std::to_string(i % 7);
        const Arm arm = (i % 7) < 4 ? Arm::control : Arm::intervention;
        double c = rng.bernoulli(0.25) ? missing() : std::exp(rng.normal(5.0, 1.0));
        double q = rng.bernoulli(0.10) ? missing() : rng.normal(0.03, 0.01);
        b.row(cluster, arm, c, q, {rng.normal(10, 5), static_cast<double>(rng.bernoulli(0.5))});
    }
    auto d = b.build();
    const auto path = temp_path("crtcea_roundtrip.csv");
    save_csv(d, path);
    auto loaded = load_csv(path, d.schema());
    REQUIRE(loaded.n_rows() == d.n_rows());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        CHECK(loaded.cluster_id(i) == d.cluster_id(i));
        CHECK(loaded.arm(i) == d.arm(i));
        CHECK(loaded.cost_observed(i) == d.cost_observed(i));
        CHECK(loaded.qaly_observed(i) == d.qaly_observed(i));
        if (d.cost_observed(i)) CHECK(loaded.cost(i) == d.cost(i));
        if (d.qaly_observed(i)) CHECK(loaded.qaly(i) == d.qaly(i));
        CHECK(loaded.covariate(i, 0) == d.covariate(i, 0));
        // mask consistency: value present XOR mask = 0
        CHECK(loaded.cost_observed(i) == !std::isnan(loaded.cost(i)));
        CHECK(loaded.qaly_observed(i) == !std::isnan(loaded.qaly(i)));
    }
    std::remove(path.c_str());
}
