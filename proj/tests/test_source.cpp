#include "doctest.h"

#include <cmath>
#include <vector>

#include "tl2/core.hpp"
#include "tl2/source.hpp"

using namespace tl2;

namespace {

Dataset make_source(std::vector<std::pair<double, double>> pts) {
    Dataset ds;
    ds.dim = 1;
    ds.role = DatasetRole::source;
    for (auto [x, y] : pts) ds.samples.push_back({{x}, y});
    return ds;
}

}  // namespace

TEST_SUITE_BEGIN("source");

TEST_CASE("bandwidth rules") {
    CHECK(bandwidth_rule_source(100, 1, 1.0, SourceBandwidthRule::algorithm_box) ==
          doctest::Approx(0.21544346900318837).epsilon(1e-14));
    // exponents coincide when d == beta
    CHECK(bandwidth_rule_source(100, 1, 1.0, SourceBandwidthRule::appendix_optimal) ==
          bandwidth_rule_source(100, 1, 1.0, SourceBandwidthRule::algorithm_box));
    CHECK(bandwidth_rule_source(4096, 2, 1.0, SourceBandwidthRule::appendix_optimal) ==
          doctest::Approx(0.125).epsilon(1e-14));
    CHECK(bandwidth_rule_source(10, 1, 1.0, SourceBandwidthRule::fixed, 0.37) == 0.37);
    CHECK_THROWS_AS(bandwidth_rule_source(10, 1, -1.0, SourceBandwidthRule::algorithm_box),
                    std::invalid_argument);
    CHECK_THROWS_AS(bandwidth_rule_source(10, 1, 1.0, SourceBandwidthRule::fixed, 0.0),
                    std::invalid_argument);
}

TEST_CASE("constant responses predict the constant") {
    const SourceModel m = nw_fit(make_source({{0.1, 3.7}, {0.5, 3.7}, {0.9, 3.7}}), Kernel{}, 0.3);
    for (double x : {0.0, 0.25, 0.5, 0.99})
        CHECK(nw_predict(m, std::vector<double>{x}) == doctest::Approx(3.7).epsilon(1e-15));
}

TEST_CASE("single training point dominates everywhere weights are positive") {
    const SourceModel m = nw_fit(make_source({{0.4, -2.5}}), Kernel{}, 0.2);
    for (double x : {0.0, 0.4, 1.0})
        CHECK(nw_predict(m, std::vector<double>{x}) == -2.5);
}

TEST_CASE("symmetric weights at the midpoint") {
    const SourceModel m = nw_fit(make_source({{0.0, 0.0}, {1.0, 1.0}}), Kernel{}, 0.5);
    CHECK(nw_predict(m, std::vector<double>{0.5}) == 0.5);
}

TEST_CASE("range containment for nonnegative kernels") {
    Rng rng(101);
    for (KernelShape shape : {KernelShape::gaussian, KernelShape::epanechnikov}) {
        Dataset ds;
        ds.dim = 2;
        ds.role = DatasetRole::source;
        double lo = 1e300, hi = -1e300;
        for (int i = 0; i < 50; ++i) {
            const double y = rng.uniform(-5.0, 5.0);
            ds.samples.push_back({{rng.uniform01(), rng.uniform01()}, y});
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        const SourceModel m = nw_fit(ds, Kernel{shape}, 0.3);
        for (int i = 0; i < 100; ++i) {
            const std::vector<double> x{rng.uniform01(), rng.uniform01()};
            const double p = nw_predict(m, x);
            CHECK(p >= lo - 1e-12);
            CHECK(p <= hi + 1e-12);
        }
    }
}

TEST_CASE("shift and scale equivariance") {
    Rng rng(102);
    Dataset ds;
    ds.dim = 1;
    ds.role = DatasetRole::source;
    for (int i = 0; i < 30; ++i) ds.samples.push_back({{rng.uniform01()}, rng.uniform(-1.0, 1.0)});
    const SourceModel m = nw_fit(ds, Kernel{}, 0.15);

    const double c = 1.7, s = -0.4;
    Dataset mapped = ds;
    for (auto& p : mapped.samples) p.y = c * p.y + s;
    const SourceModel m2 = nw_fit(mapped, Kernel{}, 0.15);

    for (int i = 0; i < 50; ++i) {
        const std::vector<double> x{rng.uniform01()};
        CHECK(nw_predict(m2, x) == doctest::Approx(c * nw_predict(m, x) + s).epsilon(1e-12));
    }
}

TEST_CASE("interpolation limit with compact kernel and ties") {
    const SourceModel m =
        nw_fit(make_source({{0.3, 1.0}, {0.3, 3.0}, {0.7, 10.0}}), Kernel{KernelShape::epanechnikov}, 0.01);
    CHECK(nw_predict(m, std::vector<double>{0.3}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(nw_predict(m, std::vector<double>{0.7}) == 10.0);
}

TEST_CASE("vanishing weights fall back to the nearest neighbour and flag it") {
    const SourceModel m = nw_fit(make_source({{0.1, 5.0}, {0.2, 7.0}}), Kernel{KernelShape::uniform}, 0.05);
    const auto p = nw_predict_detail(m, std::vector<double>{0.9});
    CHECK(p.extrapolated);
    CHECK(p.value == 7.0);
    const auto q = nw_predict_detail(m, std::vector<double>{0.12});
    CHECK(!q.extrapolated);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(nw_fit(Dataset{}, Kernel{}, 0.1), std::invalid_argument);
    const SourceModel m = nw_fit(make_source({{0.5, 1.0}}), Kernel{}, 0.1);
    CHECK_THROWS_AS(nw_predict(m, std::vector<double>{0.1, 0.2}), std::invalid_argument);
}

TEST_SUITE_END();
