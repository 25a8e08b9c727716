#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "oracle_utils.hpp"
#include "tl2/core.hpp"
#include "tl2/source.hpp"
#include "tl2/synth.hpp"
#include "tl2/tessellation.hpp"
#include "tl2/transfer.hpp"

using namespace tl2;

namespace {

std::shared_ptr<const SourceModel> ramp_source() {
    // Two-point source: fs is a smooth strictly increasing function on [0,1].
    Dataset ds;
    ds.dim = 1;
    ds.role = DatasetRole::source;
    ds.samples = {{{0.0}, 0.0}, {{1.0}, 1.0}};
    return std::make_shared<SourceModel>(nw_fit(ds, Kernel{}, 0.5));
}

struct Instance {
    std::vector<double> z, y, w;
};

// The Step-2 ingredients of a cell, recomputed from public operations only.
Instance cell_instance(const Cell& cell, const Dataset& train, const SourceModel& src,
                       const FitConfig& cfg) {
    Instance inst;
    const double fs_center = nw_predict(src, cell.rep);
    for (const auto& s : train.samples) {
        if (!cell.contains(s.x)) continue;
        const double z = nw_predict(src, s.x) - fs_center;
        std::vector<double> diff(s.x.size());
        for (std::size_t j = 0; j < s.x.size(); ++j) diff[j] = s.x[j] - cell.rep[j];
        inst.z.push_back(z);
        inst.y.push_back(s.y);
        inst.w.push_back(kernel_eval(cfg.kx, std::span<const double>(diff), cfg.h) *
                         kernel_eval(cfg.kz, z, cfg.hbar));
    }
    return inst;
}

Dataset random_train(Rng& rng, int n, double lo = 0.0, double hi = 1.0) {
    Dataset train;
    train.dim = 1;
    train.role = DatasetRole::target_train;
    for (int i = 0; i < n; ++i) train.samples.push_back({{rng.uniform(lo, hi)}, rng.normal()});
    return train;
}

}  // namespace

TEST_SUITE_BEGIN("transfer");

TEST_CASE("transfer bandwidth rules") {
    const auto bw = bandwidth_rule_transfer(1000, 1, TransferBandwidthRule::experiment_n13);
    CHECK(bw.h == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(bw.hbar == bw.h);

    const auto th = bandwidth_rule_transfer(1024, 2, TransferBandwidthRule::theory_optimal, 0.25, 1.5);
    CHECK(th.h == 0.25);
    CHECK(th.hbar == doctest::Approx(0.35355339059327373).epsilon(1e-14));

    const auto fx = bandwidth_rule_transfer(7, 3, TransferBandwidthRule::fixed, 0.2, 0.3);
    CHECK(fx.h == 0.2);
    CHECK(fx.hbar == 0.3);
    CHECK_THROWS_AS(bandwidth_rule_transfer(7, 1, TransferBandwidthRule::fixed, 0.0, 0.3),
                    std::invalid_argument);
}

TEST_CASE("polynomial reproduction: exactly affine responses are recovered") {
    auto src = ramp_source();
    const Tessellation t = single_cell_tessellation(1, 20);
    const Cell cell = t.cell(0);
    FitConfig cfg;
    cfg.h = 0.5;
    cfg.hbar = 0.5;

    Rng rng(21);
    Dataset train = random_train(rng, 15);
    const double fs_center = nw_predict(*src, cell.rep);
    for (auto& s : train.samples) s.y = 2.0 * (nw_predict(*src, s.x) - fs_center) + 3.0;

    const CellFit fit = fit_cell(cell, train, *src, cfg);
    CHECK(fit.fallback == CellFallback::none);
    CHECK(fit.a == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.b == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("constant responses give a zero slope and the constant intercept") {
    auto src = ramp_source();
    const Tessellation t = single_cell_tessellation(1, 20);
    FitConfig cfg;
    cfg.h = 0.6;
    cfg.hbar = 0.6;
    Rng rng(22);
    Dataset train = random_train(rng, 12);
    for (auto& s : train.samples) s.y = 3.7;

    const CellFit fit = fit_cell(t.cell(0), train, *src, cfg);
    CHECK(fit.fallback == CellFallback::none);
    CHECK(std::abs(fit.a) < 1e-12);
    CHECK(fit.b == doctest::Approx(3.7).epsilon(1e-12));
}

TEST_CASE("fit matches the brute-force minimizer of the objective") {
    auto src = ramp_source();
    const Tessellation t(1, 20, {{10}});
    FitConfig cfg;
    cfg.h = 0.4;
    cfg.hbar = 0.4;
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Cell cell = t.cell(trial % 2);
        Dataset train = random_train(rng, 5 + static_cast<int>(rng.uniform_index(26)),
                                     cell.lo[0] + 1e-9, cell.hi[0]);
        for (auto& s : train.samples) s.y = rng.uniform(-2.0, 2.0) + 0.5 * rng.normal();

        const CellFit fit = fit_cell(cell, train, *src, cfg);
        if (fit.fallback != CellFallback::none) continue;
        const Instance inst = cell_instance(cell, train, *src, cfg);
        const auto brute = oracle::brute_force_wls(inst.z, inst.y, inst.w);
        CHECK(fit.a == doctest::Approx(brute.a).epsilon(1e-6));
        CHECK(fit.b == doctest::Approx(brute.b).epsilon(1e-6));
    }
}

TEST_CASE("stationarity of the fitted coefficients") {
    auto src = ramp_source();
    const Tessellation t = single_cell_tessellation(1, 20);
    const Cell cell = t.cell(0);
    FitConfig cfg;
    cfg.h = 0.5;
    cfg.hbar = 0.5;
    Rng rng(24);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset train = random_train(rng, 10 + static_cast<int>(rng.uniform_index(10)));
        const CellFit fit = fit_cell(cell, train, *src, cfg);
        if (fit.fallback != CellFallback::none) continue;
        const Instance inst = cell_instance(cell, train, *src, cfg);
        double g0 = 0.0, g1 = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < inst.z.size(); ++i) {
            const double r = inst.y[i] - fit.a * inst.z[i] - fit.b;
            g0 += inst.w[i] * r;
            g1 += inst.w[i] * inst.z[i] * r;
            scale += inst.w[i] * std::abs(inst.y[i]);
        }
        CHECK(std::abs(g0) <= 1e-9 * scale);
        CHECK(std::abs(g1) <= 1e-9 * scale);
    }
}

TEST_CASE("compact-kernel weight locality: far points have zero influence bit-for-bit") {
    auto src = ramp_source();
    // One wide cell; spatial window much smaller than the cell.
    const Tessellation t = single_cell_tessellation(1, 20);
    const Cell cell = t.cell(0);
    FitConfig cfg;
    cfg.kx = Kernel{KernelShape::epanechnikov};
    cfg.kz = Kernel{KernelShape::uniform};
    cfg.h = 0.2;
    cfg.hbar = 10.0;  // z-window inactive here
    Rng rng(25);
    Dataset train = random_train(rng, 20);
    const CellFit before = fit_cell(cell, train, *src, cfg);

    Dataset perturbed = train;
    int touched = 0;
    for (auto& s : perturbed.samples)
        if (std::abs(s.x[0] - cell.rep[0]) > cfg.h) {
            s.y += 1000.0;
            ++touched;
        }
    REQUIRE(touched > 0);
    const CellFit after = fit_cell(cell, perturbed, *src, cfg);
    CHECK(after.a == before.a);
    CHECK(after.b == before.b);
    CHECK(after.n_window == before.n_window);
}

TEST_CASE("response equivariance") {
    auto src = ramp_source();
    const Tessellation t = single_cell_tessellation(1, 20);
    const Cell cell = t.cell(0);
    FitConfig cfg;
    cfg.h = 0.5;
    cfg.hbar = 0.5;
    Rng rng(26);
    Dataset train = random_train(rng, 14);
    const CellFit base = fit_cell(cell, train, *src, cfg);
    REQUIRE(base.fallback == CellFallback::none);

    SUBCASE("power-of-two rescale is bit-exact") {
        Dataset scaled = train;
        for (auto& s : scaled.samples) s.y *= 4.0;
        const CellFit fit = fit_cell(cell, scaled, *src, cfg);
        CHECK(fit.a == 4.0 * base.a);
        CHECK(fit.b == 4.0 * base.b);
    }
    SUBCASE("general affine response map within 1e-12") {
        const double c = 1.7, s0 = -0.4;
        Dataset mapped = train;
        for (auto& s : mapped.samples) s.y = c * s.y + s0;
        const CellFit fit = fit_cell(cell, mapped, *src, cfg);
        CHECK(fit.a == doctest::Approx(c * base.a).epsilon(1e-12));
        CHECK(fit.b == doctest::Approx(c * base.b + s0).epsilon(1e-12));
    }
}

TEST_CASE("fallback ladder: empty, single point, collinear scores") {
    auto src = ramp_source();
    const Tessellation t(1, 20, {{10}});
    FitConfig cfg;
    cfg.h = 0.5;
    cfg.hbar = 0.5;

    Dataset train;
    train.dim = 1;
    train.role = DatasetRole::target_train;
    train.samples = {{{0.8}, 5.0}, {{0.9}, 7.0}};  // right cell only

    const TransferModel model = fit_transfer(t, train, src, cfg);
    const CellFit& left = model.fit_for(0);
    CHECK(left.fallback == CellFallback::empty);
    CHECK(left.a == 0.0);
    CHECK(left.b == 6.0);  // global training mean

    Dataset one = train;
    one.samples.resize(1);
    const CellFit single = fit_cell(t.cell(1), one, *src, cfg);
    CHECK(single.fallback == CellFallback::mean);
    CHECK(single.a == 0.0);
    CHECK(single.b == 5.0);

    // Constant source scores make the slope unidentifiable: ridge path.
    Dataset cs;
    cs.dim = 1;
    cs.role = DatasetRole::source;
    cs.samples = {{{0.5}, 2.0}};
    auto flat = std::make_shared<SourceModel>(nw_fit(cs, Kernel{}, 0.5));
    const CellFit ridge = fit_cell(t.cell(1), train, *flat, cfg);
    CHECK(ridge.fallback == CellFallback::ridge);
    CHECK(ridge.a == 0.0);
    double wsum = 0.0, wy = 0.0;  // all scores equal: the fit shrinks to the weighted mean
    for (const auto& s : train.samples) {
        const double w = kernel_eval(cfg.kx, s.x[0] - t.cell(1).rep[0], cfg.h) *
                         kernel_eval(cfg.kz, 0.0, cfg.hbar);
        wsum += w;
        wy += w * s.y;
    }
    CHECK(ridge.b == doctest::Approx(wy / wsum).epsilon(1e-7));
    CHECK(ridge.gram_min_eig == 0.0);
}

TEST_CASE("prediction forms") {
    auto src = ramp_source();
    const Tessellation t(1, 20, {{10}});
    TransferModel m;
    m.source = src;
    m.tessellation = t;

    SUBCASE("identity transfer reproduces the source fit") {
        for (std::uint64_t ci : {0ull, 1ull}) {
            const double yc = nw_predict(*src, t.cell(ci).rep);
            m.fitted[ci] = CellFit{1.0, yc, yc, 5, 1.0, CellFallback::none};
        }
        Rng rng(27);
        for (int i = 0; i < 50; ++i) {
            const std::vector<double> x{rng.uniform01()};
            CHECK(predict_transfer(m, x) == doctest::Approx(nw_predict(*src, x)).epsilon(1e-12));
        }
    }
    SUBCASE("zero slopes give piecewise constants") {
        m.fitted[0] = CellFit{0.0, -1.0, 0.3, 5, 1.0, CellFallback::none};
        m.fitted[1] = CellFit{0.0, 2.0, 0.7, 5, 1.0, CellFallback::none};
        CHECK(predict_transfer(m, std::vector<double>{0.2}) == -1.0);
        CHECK(predict_transfer(m, std::vector<double>{0.8}) == 2.0);
    }
    SUBCASE("single-cell arithmetic") {
        TransferModel s;
        s.source = src;
        s.tessellation = single_cell_tessellation(1, 20);
        const double yc = nw_predict(*src, s.tessellation.cell(0).rep);
        s.fitted[0] = CellFit{2.0, 3.0, yc, 5, 1.0, CellFallback::none};
        // pick x with fs(x) - yc = 0.4 via the transfer-function view
        CHECK(transfer_function_at(s, std::vector<double>{0.5}, yc + 0.4) ==
              doctest::Approx(3.8).epsilon(1e-14));
        CHECK(transfer_function_at(s, std::vector<double>{0.5}, yc) == 3.0);
    }
    SUBCASE("unit-slope transfer function is the identity in y") {
        TransferModel s;
        s.source = src;
        s.tessellation = single_cell_tessellation(1, 20);
        s.fitted[0] = CellFit{1.0, 0.0, 0.0, 5, 1.0, CellFallback::none};
        CHECK(transfer_function_at(s, std::vector<double>{0.1}, 0.7) == 0.7);
    }
}

TEST_CASE("within a cell the prediction is affine in the source score") {
    SyntheticSpec spec;
    spec.n_source = 50;
    spec.n_target = 30;
    spec.seed = {33, 0};
    auto src = std::make_shared<SourceModel>(nw_fit(gen_source(spec), Kernel{}, 0.2));
    Dataset train = gen_target(spec);
    train.role = DatasetRole::target_train;
    FitConfig cfg;
    cfg.h = 0.4;
    cfg.hbar = 0.4;
    const TransferModel model = fit_transfer(Tessellation(1, 20, {{10}}), train, src, cfg);
    Rng rng(34);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{rng.uniform01()};
        const std::uint64_t ci = model.tessellation.locate(x);
        const CellFit& f = model.fit_for(ci);
        const double expected = f.a * (nw_predict(*src, x) - f.y_center) + f.b;
        CHECK(predict_transfer(model, x) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(predict_transfer(model, x) == model.predict_scored(nw_predict(*src, x), ci));
    }
}

TEST_CASE("cell restriction vs window-only summation") {
    auto src = ramp_source();
    const Tessellation t(1, 20, {{10}});
    FitConfig cfg;
    cfg.kx = Kernel{KernelShape::gaussian};
    cfg.h = 0.6;  // window reaches across the split
    cfg.hbar = 5.0;
    Rng rng(28);
    Dataset train = random_train(rng, 16);

    // Perturbing a left-cell point must not change the right cell's fit in
    // the default cell-restricted mode.
    Dataset perturbed = train;
    for (auto& s : perturbed.samples)
        if (s.x[0] <= 0.5) s.y += 100.0;

    const TransferModel base = fit_transfer(t, train, src, cfg);
    const TransferModel moved = fit_transfer(t, perturbed, src, cfg);
    CHECK(moved.fit_for(1).a == base.fit_for(1).a);
    CHECK(moved.fit_for(1).b == base.fit_for(1).b);

    FitConfig wcfg = cfg;
    wcfg.window_only = true;
    const TransferModel wbase = fit_transfer(t, train, src, wcfg);
    const TransferModel wmoved = fit_transfer(t, perturbed, src, wcfg);
    CHECK(wmoved.fit_for(1).b != wbase.fit_for(1).b);
}

TEST_CASE("model record round-trips to bit-identical predictions") {
    SyntheticSpec spec;
    spec.d = 2;
    spec.n_source = 40;
    spec.n_target = 30;
    spec.seed = {31, 0};
    auto src = std::make_shared<SourceModel>(nw_fit(gen_source(spec), Kernel{}, 0.25));
    Dataset train = gen_target(spec);
    train.role = DatasetRole::target_train;
    FitConfig cfg;
    cfg.h = 0.3;
    cfg.hbar = 0.4;
    const Tessellation t(2, 20, {{10}, {5, 15}});
    const TransferModel model = fit_transfer(t, train, src, cfg);

    const std::string rec = to_record(model);
    const TransferModel back = transfer_model_from_record(rec);
    CHECK(to_record(back) == rec);

    Rng rng(32);
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> x{rng.uniform01(), rng.uniform01()};
        CHECK(predict_transfer(back, x) == predict_transfer(model, x));
    }

    CHECK_THROWS_AS(transfer_model_from_record("garbage"), std::invalid_argument);
    const std::string truncated = rec.substr(0, rec.size() / 2);
    CHECK_THROWS(transfer_model_from_record(truncated));
}

TEST_SUITE_END();
