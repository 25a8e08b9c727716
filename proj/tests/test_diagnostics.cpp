#include "doctest.h"

#include <cmath>
#include <vector>

#include "tl2/diagnostics.hpp"
#include "tl2/synth.hpp"

using namespace tl2;

TEST_SUITE_BEGIN("diagnostics");

TEST_CASE("mse_against_truth basics") {
    Rng rng(41);
    const Predictor truth = [](std::span<const double> x) { return source_truth(x); };

    SUBCASE("predictor equals truth") {
        Rng r2(41);
        const auto est = mse_against_truth(truth, truth, 1, 500, r2);
        CHECK(est.mse == 0.0);
        CHECK(est.std_error == 0.0);
    }
    SUBCASE("constant offset of one") {
        const Predictor off = [&](std::span<const double> x) { return source_truth(x) + 1.0; };
        Rng r2(42);
        const auto est = mse_against_truth(off, truth, 1, 500, r2);
        CHECK(est.mse == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("zero predictor against x^2: fourth moment") {
        const Predictor zero = [](std::span<const double>) { return 0.0; };
        Rng r2(43);
        const auto est = mse_against_truth(zero, truth, 1, 20000, r2);
        CHECK(std::abs(est.mse - 0.2) <= 3.0 * est.std_error);  // E X^4 = 1/5
    }
}

TEST_CASE("error-reduction arithmetic identity") {
    CHECK((1.0 - 0.74) / 1.0 == doctest::Approx(0.26).epsilon(1e-15));
    CHECK((1.0 - 1.0) / 1.0 == 0.0);
    CHECK((1.0 - 1.26) / 1.0 == doctest::Approx(-0.26).epsilon(1e-15));

    SyntheticSpec spec;  // Target 1, d = 1, n_T = 20, n_S = 100
    PipelineConfig pc;
    pc.schedule.steps = 60;
    pc.n_eval = 300;
    const ExperimentResult res = error_reduction(spec, pc, 3, {51, 0});
    REQUIRE(res.rows.size() == 3);
    for (const auto& row : res.rows) {
        CHECK(row.e_red == (row.mse_nw - row.mse_tl2) / row.mse_nw);
        CHECK(row.mse_nw > 0.0);
        CHECK(std::isfinite(row.mse_tl2));
    }
}

TEST_CASE("error_reduction is deterministic under the seed") {
    SyntheticSpec spec;
    PipelineConfig pc;
    pc.schedule.steps = 40;
    pc.n_eval = 200;
    const ExperimentResult a = error_reduction(spec, pc, 2, {52, 0});
    const ExperimentResult b = error_reduction(spec, pc, 2, {52, 0});
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mse_nw == b.rows[i].mse_nw);
        CHECK(a.rows[i].mse_tl2 == b.rows[i].mse_tl2);
        CHECK(a.rows[i].chosen_record == b.rows[i].chosen_record);
    }
}

TEST_CASE("well-specified decomposition has negligible transfer bias") {
    // f_T affine in f_S on each oracle cell: Approx vanishes by construction.
    SyntheticSpec spec;
    spec.d = 1;
    spec.n_source = 2000;
    spec.n_target = 400;
    spec.target = SyntheticTarget::custom;
    spec.custom_target = [](std::span<const double> x) {
        const double s = source_truth(x);
        return x[0] >= 0.5 ? 2.0 * s + 1.0 : -1.0 * s + 0.5;
    };
    spec.seed = {53, 0};
    PipelineConfig pc;
    const Tessellation oracle(1, 20, {{10}});
    const DecompositionReport rep = decompose_risk(oracle, spec, pc, 4000, {53, 0}, 50000);

    CHECK(rep.approx <= 3.0 * rep.se_approx + 1e-6);
    CHECK(rep.approx >= 0.0);
    CHECK(rep.fit >= 0.0);
    CHECK(rep.plug >= 0.0);
    CHECK(rep.total_bound == 2.0 * (rep.approx + rep.fit + rep.plug));
    // factored triangle bound, allowing MC noise
    CHECK(rep.excess <= rep.total_bound + 3.0 * (rep.se_approx + rep.se_fit + rep.se_plug + rep.se_excess));
}

TEST_CASE("transfer-function estimate tightens with the training sample") {
    // One cell, true transfer g*(y) = y^2 of the source score: the MSE of
    // transfer_function_at over scores near the center drops as n_T1 grows.
    const auto run = [](std::size_t n_target, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.d = 1;
        spec.n_source = 4000;
        spec.n_target = 2 * n_target;
        spec.target = SyntheticTarget::custom;
        spec.custom_target = [](std::span<const double> x) {
            const double s = source_truth(x);
            return s * s;
        };
        spec.seed = {seed, 0};
        auto src = std::make_shared<SourceModel>(
            nw_fit(gen_source(spec), Kernel{},
                   bandwidth_rule_source(spec.n_source, 1, 1.0, SourceBandwidthRule::appendix_optimal)));
        auto [train, validate] = split_target(gen_target(spec), substream(spec.seed, 2));
        FitConfig cfg;
        const auto bw = bandwidth_rule_transfer(train.size(), 1, TransferBandwidthRule::experiment_n13);
        cfg.h = bw.h;
        cfg.hbar = bw.hbar;
        const TransferModel model =
            fit_transfer(single_cell_tessellation(1, 20), train, src, cfg);
        const CellFit& fit = model.fit_for(0);
        // score grid within hbar of the center score
        double mse = 0.0;
        const int grid = 200;
        const std::vector<double> x_probe{0.5};
        for (int i = 0; i < grid; ++i) {
            const double y = fit.y_center + cfg.hbar * (2.0 * i / (grid - 1) - 1.0);
            const double err = transfer_function_at(model, x_probe, y) - y * y;
            mse += err * err;
        }
        return mse / grid;
    };
    std::vector<double> med;
    for (std::size_t n : {200u, 800u, 3200u}) {
        std::vector<double> runs;
        for (std::uint64_t s = 0; s < 9; ++s) runs.push_back(run(n, 9100 + s));
        med.push_back(median_of(runs));
    }
    CHECK(med[0] > med[1]);
    CHECK(med[1] > med[2]);
}

TEST_CASE("error reduction on ingested data uses the held-out remainder") {
    SyntheticSpec src_spec;
    src_spec.d = 2;
    src_spec.n_source = 300;
    src_spec.seed = {91, 0};
    const Dataset source_pool = gen_source(src_spec);
    SyntheticSpec tgt_spec = src_spec;
    tgt_spec.n_target = 120;
    tgt_spec.target = SyntheticTarget::target1;
    Dataset target_pool = gen_target(tgt_spec);

    PipelineConfig pc;
    pc.schedule.steps = 20;
    pc.grid_m = 20;
    const ExperimentResult res =
        error_reduction_ingested(source_pool, target_pool, 60, pc, 3, {92, 0});
    REQUIRE(res.rows.size() == 3);
    for (const auto& r : res.rows) {
        CHECK(std::isfinite(r.mse_nw));
        CHECK(std::isfinite(r.mse_tl2));
        CHECK(r.e_red == (r.mse_nw - r.mse_tl2) / r.mse_nw);
    }
    const ExperimentResult res2 =
        error_reduction_ingested(source_pool, target_pool, 60, pc, 3, {92, 0});
    CHECK(to_table(res2) == to_table(res));
    CHECK_THROWS_AS(error_reduction_ingested(source_pool, target_pool, 120, pc, 1, {92, 0}),
                    std::invalid_argument);
}

TEST_CASE("parametric and bias rate probes land in their theory windows") {
    const RateProbeResult par =
        rate_probe(RateAxis::n_target_parametric, {125, 500, 2000}, 9, {95, 0}, 1, 600);
    CHECK(par.slope >= -1.3);
    CHECK(par.slope <= -0.6);

    const RateProbeResult bias = rate_probe(RateAxis::l_bias, {2, 4, 8}, 3, {96, 0}, 1, 800);
    CHECK(bias.slope <= -2.0);
}

TEST_CASE("rate probes are reproducible and negatively sloped") {
    const std::vector<std::size_t> sizes{100, 200, 400};
    const RateProbeResult a = rate_probe(RateAxis::n_source_plugin, sizes, 5, {54, 0}, 1, 300);
    const RateProbeResult b = rate_probe(RateAxis::n_source_plugin, sizes, 5, {54, 0}, 1, 300);
    CHECK(a.slope == b.slope);
    CHECK(a.medians == b.medians);
    CHECK(a.slope < 0.0);
}

TEST_CASE("probe input validation") {
    CHECK_THROWS_AS(rate_probe(RateAxis::l_bias, {2, 4}, 3, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(rate_probe(RateAxis::l_bias, {2, 4, 8}, 0, {1, 0}), std::invalid_argument);
    SyntheticSpec spec;
    PipelineConfig pc;
    CHECK_THROWS_AS(error_reduction(spec, pc, 0, {1, 0}), std::invalid_argument);
}

TEST_SUITE_END();
