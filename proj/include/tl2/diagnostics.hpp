#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tl2/core.hpp"
#include "tl2/selection.hpp"
#include "tl2/source.hpp"
#include "tl2/synth.hpp"
#include "tl2/tessellation.hpp"
#include "tl2/transfer.hpp"

namespace tl2 {

using Predictor = std::function<double(std::span<const double>)>;

struct MseEstimate {
    double mse = 0.0;
    double std_error = 0.0;  // Monte Carlo standard error of the mse estimate
    std::size_t n_eval = 0;
};

/// Monte Carlo L2(uniform) distance between a predictor and a reference.
inline MseEstimate mse_against_truth(const Predictor& predictor, const Predictor& truth, int d,
                                     std::size_t n_eval, Rng& rng) {
    if (n_eval < 1) throw std::invalid_argument("mse_against_truth: n_eval must be >= 1");
    double s = 0.0, s2 = 0.0;
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n_eval; ++i) {
        for (double& c : x) c = rng.uniform01();
        const double e = predictor(x) - truth(x);
        s += e * e;
        s2 += e * e * e * e;
    }
    MseEstimate out;
    out.n_eval = n_eval;
    out.mse = s / static_cast<double>(n_eval);
    const double var = std::max(0.0, s2 / n_eval - out.mse * out.mse);
    out.std_error = std::sqrt(var / static_cast<double>(n_eval));
    return out;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median_of: empty");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- end-to-end pipeline configuration -------------------------------------

/// Everything one transfer-pipeline run needs beyond the data itself. The defaults
/// reproduce the Target-1, d = 1 headline experiment.
struct PipelineConfig {
    Kernel kernel{};  // shared shape for K, K_x, K_z

    SourceBandwidthRule source_rule = SourceBandwidthRule::appendix_optimal;
    double source_beta = 1.0;
    double source_fixed_h = 0.0;

    // Nadaraya-Watson baseline on the full target sample.
    SourceBandwidthRule nw_rule = SourceBandwidthRule::appendix_optimal;
    double nw_beta = 1.0;
    double nw_fixed_h = 0.0;

    TransferBandwidthRule transfer_rule = TransferBandwidthRule::experiment_n13;
    double transfer_p1 = 0.0;  // h for theory-optimal / fixed
    double transfer_p2 = 0.0;  // beta_g for theory-optimal, hbar for fixed

    int grid_m = 0;            // 0: use n_target as the grid denominator
    std::uint64_t l_max = 0;   // 0: m^d
    AnnealSchedule schedule{};
    SelectionMethod method{};
    double mom_delta = 0.1;    // feeds mom_block_rule when blocks are left at 0
    bool window_only = false;
    AdmissibilityConstants constants{};

    std::size_t n_eval = 2000;  // MC evaluation points per replication

    FitConfig make_fit_config(std::size_t n_train, int d) const {
        FitConfig cfg;
        cfg.kx = kernel;
        cfg.kz = kernel;
        const auto bw = bandwidth_rule_transfer(n_train, d, transfer_rule, transfer_p1, transfer_p2);
        cfg.h = bw.h;
        cfg.hbar = bw.hbar;
        cfg.window_only = window_only;
        return cfg;
    }
};

struct ReplicationRow {
    int replication = 0;
    double mse_nw = 0.0;
    double mse_tl2 = 0.0;
    double e_red = 0.0;  // (mse_nw - mse_tl2) / mse_nw
    std::string chosen_record;
};

struct ExperimentResult {
    std::vector<ReplicationRow> rows;
    double median_mse_nw = 0.0;
    double median_mse_tl2 = 0.0;
    double median_e_red = 0.0;

    void aggregate() {
        std::vector<double> a, b, c;
        for (const auto& r : rows) {
            a.push_back(r.mse_nw);
            b.push_back(r.mse_tl2);
            c.push_back(r.e_red);
        }
        median_mse_nw = median_of(a);
        median_mse_tl2 = median_of(b);
        median_e_red = median_of(c);
    }
};

namespace detail {

/// Fits the full pipeline on already-generated source/target data and returns
/// the selection report plus the baseline NW model on the full target sample.
struct PipelineFit {
    SelectionReport selection;
    SourceModel nw_baseline;
    std::shared_ptr<const SourceModel> source;
};

inline PipelineFit run_pipeline(const Dataset& source_data, const Dataset& target_full,
                                const PipelineConfig& pc, RngSeed rep_seed) {
    PipelineFit out;
    const int d = target_full.dim;
    auto [train, validate] = split_target(target_full, substream(rep_seed, 2));

    const double h_s = bandwidth_rule_source(source_data.size(), d, pc.source_beta,
                                             pc.source_rule, pc.source_fixed_h);
    out.source = std::make_shared<SourceModel>(nw_fit(source_data, pc.kernel, h_s, pc.source_beta));

    const double h_nw = bandwidth_rule_source(target_full.size(), d, pc.nw_beta,
                                              pc.nw_rule, pc.nw_fixed_h);
    out.nw_baseline = nw_fit(target_full, pc.kernel, h_nw, pc.nw_beta);

    const FitConfig cfg = pc.make_fit_config(train.size(), d);
    AnnealSpace space;
    space.d = d;
    space.m = pc.grid_m > 0 ? pc.grid_m : static_cast<int>(target_full.size());
    space.l_max = pc.l_max;
    SelectionMethod method = pc.method;
    if (method.kind == SelectionMethod::Kind::mom && method.blocks <= 0) {
        // Candidate count is not known upfront for the annealer: the schedule
        // length caps the evaluated family.
        const std::size_t family = static_cast<std::size_t>(pc.schedule.steps) *
                                       static_cast<std::size_t>(pc.schedule.moves_per_step) + 1;
        method.blocks = mom_block_rule(std::max<std::size_t>(1, family), pc.mom_delta);
        method.blocks = std::min<int>(method.blocks, static_cast<int>(validate.size()));
        if (method.blocks < 1) method.blocks = 1;
    }
    out.selection = anneal_select(space, train, validate, out.source, cfg, pc.schedule, method,
                                  substream(rep_seed, 3), pc.constants);
    return out;
}

}  // namespace detail

/// One synthetic replication: error of the target-only NW baseline vs the
/// transfer pipeline, both against the known truth on a shared MC sample.
inline ReplicationRow run_replication(SyntheticSpec spec, const PipelineConfig& pc) {
    const RngSeed rep_seed = spec.seed;
    const Dataset source_data = gen_source(spec);
    const Dataset target_full = gen_target(spec);
    auto fitted = detail::run_pipeline(source_data, target_full, pc, rep_seed);

    Rng eval_rng(substream(rep_seed, 4));
    std::vector<double> x(spec.d);
    double s_nw = 0.0, s_tl = 0.0;
    for (std::size_t i = 0; i < pc.n_eval; ++i) {
        for (double& c : x) c = eval_rng.uniform01();
        const double truth = spec.eval_target(x);
        const double e_nw = nw_predict(fitted.nw_baseline, x) - truth;
        const double e_tl = predict_transfer(fitted.selection.chosen_model, x) - truth;
        s_nw += e_nw * e_nw;
        s_tl += e_tl * e_tl;
    }
    ReplicationRow row;
    row.mse_nw = s_nw / static_cast<double>(pc.n_eval);
    row.mse_tl2 = s_tl / static_cast<double>(pc.n_eval);
    row.e_red = row.mse_nw > 0.0 ? (row.mse_nw - row.mse_tl2) / row.mse_nw : 0.0;
    row.chosen_record = fitted.selection.chosen_record;
    return row;
}

/// The E_red experiment: R replications, per-replication rows plus medians.
inline ExperimentResult error_reduction(const SyntheticSpec& base_spec, const PipelineConfig& pc,
                                        int replications, RngSeed seed) {
    if (replications < 1) throw std::invalid_argument("error_reduction: need at least one replication");
    if (base_spec.n_target < 4) throw std::invalid_argument("error_reduction: degenerate target split");
    ExperimentResult out;
    for (int r = 0; r < replications; ++r) {
        SyntheticSpec spec = base_spec;
        spec.seed = RngSeed{seed.seed, seed.stream + static_cast<std::uint64_t>(r) + 1};
        ReplicationRow row = run_replication(spec, pc);
        row.replication = r;
        out.rows.push_back(std::move(row));
    }
    out.aggregate();
    return out;
}

/// E_red on ingested data: per replication, a seeded subsample of the target
/// pool is used for fitting and the remaining points form the held-out
/// evaluation set (no truth function is available).
inline ExperimentResult error_reduction_ingested(const Dataset& source_data, const Dataset& target_pool,
                                                 std::size_t n_target_subsample, const PipelineConfig& pc,
                                                 int replications, RngSeed seed) {
    if (replications < 1) throw std::invalid_argument("error_reduction_ingested: need at least one replication");
    if (n_target_subsample < 4 || n_target_subsample >= target_pool.size())
        throw std::invalid_argument("error_reduction_ingested: subsample must leave a held-out remainder");
    ExperimentResult out;
    for (int r = 0; r < replications; ++r) {
        const RngSeed rep_seed{seed.seed, seed.stream + static_cast<std::uint64_t>(r) + 1};
        std::vector<std::size_t> perm(target_pool.size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        Rng rng(substream(rep_seed, 5));
        rng.shuffle(perm);
        Dataset target_fit, held_out;
        target_fit.dim = held_out.dim = target_pool.dim;
        target_fit.role = DatasetRole::target_full;
        held_out.role = DatasetRole::target_validate;
        for (std::size_t i = 0; i < perm.size(); ++i)
            (i < n_target_subsample ? target_fit : held_out).samples.push_back(target_pool.samples[perm[i]]);

        auto fitted = detail::run_pipeline(source_data, target_fit, pc, rep_seed);
        double s_nw = 0.0, s_tl = 0.0;
        for (const auto& p : held_out.samples) {
            const double e_nw = nw_predict(fitted.nw_baseline, p.x) - p.y;
            const double e_tl = predict_transfer(fitted.selection.chosen_model, p.x) - p.y;
            s_nw += e_nw * e_nw;
            s_tl += e_tl * e_tl;
        }
        ReplicationRow row;
        row.replication = r;
        row.mse_nw = s_nw / static_cast<double>(held_out.size());
        row.mse_tl2 = s_tl / static_cast<double>(held_out.size());
        row.e_red = row.mse_nw > 0.0 ? (row.mse_nw - row.mse_tl2) / row.mse_nw : 0.0;
        row.chosen_record = fitted.selection.chosen_record;
        out.rows.push_back(std::move(row));
    }
    out.aggregate();
    return out;
}

namespace detail {

/// Tessellation records carry commas in breakpoint lists; inside delimited
/// tables those become semicolons so rows stay rectangular.
inline std::string table_safe(std::string record, char delim) {
    for (char& c : record)
        if (c == delim) c = ';';
    return record;
}

}  // namespace detail

/// Flat per-replication table (one row each) plus no aggregation; the
/// delimiter is configurable to match the data format.
inline std::string to_table(const ExperimentResult& res, char delim = ',') {
    std::ostringstream os;
    os << "replication" << delim << "mse_nw" << delim << "mse_tl2" << delim << "e_red" << delim
       << "chosen\n";
    for (const auto& r : res.rows) {
        os << r.replication << delim << detail::fmt17(r.mse_nw) << delim << detail::fmt17(r.mse_tl2)
           << delim << detail::fmt17(r.e_red) << delim << detail::table_safe(r.chosen_record, delim)
           << '\n';
    }
    return os.str();
}

// --- error decomposition ----------------------------------------------------

struct DecompositionReport {
    double approx = 0.0;  // |f_T - population cellwise linearization|^2
    double fit = 0.0;     // |population linearization - oracle-score fit|^2
    double plug = 0.0;    // |oracle-score fit - plug-in estimator|^2
    double excess = 0.0;  // measured |f_T - plug-in estimator|^2
    double total_bound = 0.0;  // 2 * (approx + fit + plug)
    double se_approx = 0.0, se_fit = 0.0, se_plug = 0.0, se_excess = 0.0;
    std::size_t n_mc = 0;
};

/// Splits the excess risk of the transfer estimator on a fixed tessellation
/// into approximation, coefficient-estimation, and source plug-in parts,
/// against the known truth of a synthetic spec. Population coefficients are
/// the large-sample limit of the kernel-weighted cell fit with the true
/// source function, estimated on a fresh noiseless oracle sample.
inline DecompositionReport decompose_risk(const Tessellation& tess, const SyntheticSpec& spec,
                                          const PipelineConfig& pc, std::size_t n_mc, RngSeed seed,
                                          std::size_t n_oracle = 100000) {
    const int d = spec.d;
    const Dataset source_data = gen_source(spec);
    const Dataset target_full = gen_target(spec);
    auto [train, validate] = split_target(target_full, substream(spec.seed, 2));

    const double h_s = bandwidth_rule_source(source_data.size(), d, pc.source_beta,
                                             pc.source_rule, pc.source_fixed_h);
    auto source = std::make_shared<SourceModel>(nw_fit(source_data, pc.kernel, h_s, pc.source_beta));
    const FitConfig cfg = pc.make_fit_config(train.size(), d);

    // Plug-in fit (the actual estimator).
    const TransferModel plug_model = fit_transfer(tess, train, source, cfg);

    const auto f_s = [&](std::span<const double> x) { return spec.eval_source(x); };
    const auto f_t = [&](std::span<const double> x) { return spec.eval_target(x); };

    const std::vector<Cell> cells = tess.cells();

    // Oracle-score fit: same WLS on the training sample, true f_S throughout.
    double train_mean = 0.0;
    for (const auto& s : train.samples) train_mean += s.y;
    if (!train.empty()) train_mean /= static_cast<double>(train.size());
    std::map<std::uint64_t, CellFit> oracle_fit;
    {
        std::vector<std::vector<std::size_t>> members(cells.size());
        for (std::size_t i = 0; i < train.size(); ++i)
            members[tess.locate(train.samples[i].x)].push_back(i);
        for (const Cell& cell : cells) {
            const double fs_center = f_s(cell.rep);
            std::vector<double> z, y, w;
            for (std::size_t i : members[cell.index]) {
                const double zi = f_s(train.samples[i].x) - fs_center;
                const double dist = std::sqrt(squared_distance(train.samples[i].x, cell.rep));
                z.push_back(zi);
                y.push_back(train.samples[i].y);
                w.push_back(cfg.kx(dist / cfg.h) * cfg.kz(std::abs(zi) / cfg.hbar));
            }
            oracle_fit[cell.index] = detail::wls_affine(z, y, w, fs_center, train_mean, cfg);
        }
    }

    // Population coefficients from a large fresh noiseless oracle sample.
    std::map<std::uint64_t, CellFit> population;
    {
        Rng rng(substream(seed, 6));
        std::vector<std::vector<double>> zs(cells.size()), ys(cells.size()), ws(cells.size());
        std::vector<double> centers(cells.size());
        for (const Cell& cell : cells) centers[cell.index] = f_s(cell.rep);
        std::vector<double> x(d);
        for (std::size_t i = 0; i < n_oracle; ++i) {
            for (double& c : x) c = rng.uniform01();
            const std::uint64_t ci = tess.locate(x);
            const Cell& cell = cells[ci];
            const double zi = f_s(x) - centers[ci];
            const double dist = std::sqrt(squared_distance(x, cell.rep));
            zs[ci].push_back(zi);
            ys[ci].push_back(f_t(x));
            ws[ci].push_back(cfg.kx(dist / cfg.h) * cfg.kz(std::abs(zi) / cfg.hbar));
        }
        double pop_mean = 0.0;
        for (const auto& v : ys) for (double y : v) pop_mean += y;
        pop_mean /= static_cast<double>(n_oracle);
        for (const Cell& cell : cells)
            population[cell.index] = detail::wls_affine(zs[cell.index], ys[cell.index],
                                                        ws[cell.index], centers[cell.index],
                                                        pop_mean, cfg);
    }

    const auto affine_eval = [](const CellFit& f, double score) {
        return f.a * (score - f.y_center) + f.b;
    };

    DecompositionReport rep;
    rep.n_mc = n_mc;
    Rng rng(substream(seed, 7));
    std::vector<double> x(d);
    double sa = 0.0, sa2 = 0.0, sf = 0.0, sf2 = 0.0, sp = 0.0, sp2 = 0.0, se = 0.0, se2 = 0.0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        for (double& c : x) c = rng.uniform01();
        const std::uint64_t ci = tess.locate(x);
        const double fs_true = f_s(x);
        const double ft = f_t(x);
        const double g_star = affine_eval(population.at(ci), fs_true);
        const double g_bar = affine_eval(oracle_fit.at(ci), fs_true);
        const double f_hat = predict_transfer(plug_model, x);
        const double ea = ft - g_star, ef = g_star - g_bar, ep = g_bar - f_hat, ee = ft - f_hat;
        sa += ea * ea; sa2 += ea * ea * ea * ea;
        sf += ef * ef; sf2 += ef * ef * ef * ef;
        sp += ep * ep; sp2 += ep * ep * ep * ep;
        se += ee * ee; se2 += ee * ee * ee * ee;
    }
    const double n = static_cast<double>(n_mc);
    const auto finish = [&](double s, double s2, double& mean, double& sem) {
        mean = s / n;
        sem = std::sqrt(std::max(0.0, s2 / n - mean * mean) / n);
    };
    finish(sa, sa2, rep.approx, rep.se_approx);
    finish(sf, sf2, rep.fit, rep.se_fit);
    finish(sp, sp2, rep.plug, rep.se_plug);
    finish(se, se2, rep.excess, rep.se_excess);
    rep.total_bound = 2.0 * (rep.approx + rep.fit + rep.plug);
    return rep;
}

// --- rate probes -------------------------------------------------------------

enum class RateAxis { n_target_parametric, n_source_plugin, l_bias };

struct RateProbeResult {
    RateAxis axis = RateAxis::n_source_plugin;
    std::vector<std::size_t> sizes;
    std::vector<double> medians;  // median risk per size
    double slope = 0.0;           // least-squares slope of log median vs log size
};

namespace detail {

inline double loglog_slope(const std::vector<std::size_t>& sizes, const std::vector<double>& medians) {
    const std::size_t n = sizes.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(static_cast<double>(sizes[i]));
        const double ly = std::log(medians[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Controlled scaling experiments, one per error source. Each axis holds the
/// other two sources dominated:
///  - n-source-plugin: MC MSE of the NW source fit itself (appendix-optimal
///    bandwidth) as n_S grows; the other terms never enter.
///  - n-target-parametric: excess risk of the transfer fit on the oracle
///    2-cell split of a piecewise affine-in-score target, with a huge
///    noiseless source and bandwidths held fixed, as n_T grows.
///  - l-bias: distance between a smooth target and its population cellwise
///    linearization on uniform grids (no data error at all) as L grows.
inline RateProbeResult rate_probe(RateAxis axis, const std::vector<std::size_t>& sizes,
                                  int replications, RngSeed seed, int d = 1,
                                  std::size_t n_eval = 1000) {
    if (sizes.size() < 3) throw std::invalid_argument("rate_probe: need at least 3 sizes");
    if (replications < 1) throw std::invalid_argument("rate_probe: need at least 1 replication");
    RateProbeResult out;
    out.axis = axis;
    out.sizes = sizes;

    const Kernel kernel{};
    switch (axis) {
    case RateAxis::n_source_plugin: {
        for (std::size_t si = 0; si < sizes.size(); ++si) {
            std::vector<double> risks;
            for (int r = 0; r < replications; ++r) {
                SyntheticSpec spec;
                spec.d = d;
                spec.n_source = sizes[si];
                spec.noise_convention = NoiseConvention::variance;  // the 0.1-variance probe setting
                spec.seed = RngSeed{seed.seed, (static_cast<std::uint64_t>(si) * 1000 + r) + 1};
                const Dataset data = gen_source(spec);
                const double h = bandwidth_rule_source(data.size(), d, 1.0,
                                                       SourceBandwidthRule::appendix_optimal);
                const SourceModel m = nw_fit(data, kernel, h);
                Rng eval(substream(spec.seed, 4));
                const auto est = mse_against_truth(
                    [&](std::span<const double> x) { return nw_predict(m, x); },
                    [&](std::span<const double> x) { return source_truth(x); }, d, n_eval, eval);
                risks.push_back(est.mse);
            }
            out.medians.push_back(median_of(risks));
        }
        break;
    }
    case RateAxis::n_target_parametric: {
        // Piecewise affine in the score on the oracle split (zero transfer
        // bias), scored with the true source function (zero plug-in error):
        // only the coefficient-estimation term remains.
        const auto target = [](std::span<const double> x) {
            const double s = source_truth(x);
            return x[0] >= 0.5 ? -1.5 * s + 0.5 : 2.0 * s + 1.0;
        };
        const Tessellation tess(d, 20, [&] {
            std::vector<std::vector<int>> bp(d);
            bp[0] = {10};
            return bp;
        }());
        const std::vector<Cell> cells = tess.cells();
        for (std::size_t si = 0; si < sizes.size(); ++si) {
            std::vector<double> risks;
            for (int r = 0; r < replications; ++r) {
                SyntheticSpec spec;
                spec.d = d;
                spec.n_target = sizes[si];
                spec.target = SyntheticTarget::custom;
                spec.custom_target = target;
                spec.seed = RngSeed{seed.seed, (static_cast<std::uint64_t>(si) * 1000 + r) + 1};
                const Dataset target_full = gen_target(spec);
                auto [train, validate] = split_target(target_full, substream(spec.seed, 2));
                FitConfig cfg;
                cfg.kx = cfg.kz = kernel;
                cfg.h = 0.5;     // fixed windows: the parametric 1/n term drives the rate
                cfg.hbar = 0.5;
                double train_mean = 0.0;
                for (const auto& s : train.samples) train_mean += s.y;
                train_mean /= static_cast<double>(train.size());
                std::vector<CellFit> fits(cells.size());
                {
                    std::vector<std::vector<double>> zs(cells.size()), ys(cells.size()), ws(cells.size());
                    for (std::size_t i = 0; i < train.size(); ++i) {
                        const std::uint64_t ci = tess.locate(train.samples[i].x);
                        const double zi = source_truth(train.samples[i].x) - source_truth(cells[ci].rep);
                        const double dist = std::sqrt(squared_distance(train.samples[i].x, cells[ci].rep));
                        zs[ci].push_back(zi);
                        ys[ci].push_back(train.samples[i].y);
                        ws[ci].push_back(cfg.kx(dist / cfg.h) * cfg.kz(std::abs(zi) / cfg.hbar));
                    }
                    for (const Cell& c : cells)
                        fits[c.index] = detail::wls_affine(zs[c.index], ys[c.index], ws[c.index],
                                                           source_truth(c.rep), train_mean, cfg);
                }
                Rng eval(substream(spec.seed, 4));
                const auto est = mse_against_truth(
                    [&](std::span<const double> x) {
                        const CellFit& f = fits[tess.locate(x)];
                        return f.a * (source_truth(x) - f.y_center) + f.b;
                    },
                    target, d, n_eval, eval);
                risks.push_back(est.mse);
            }
            out.medians.push_back(median_of(risks));
        }
        break;
    }
    case RateAxis::l_bias: {
        // Pure approximation error of the population cellwise linearization.
        const auto target = [](std::span<const double> x) { return std::exp(euclidean_norm(x)); };
        int m = 1;
        for (std::size_t s : sizes) m = static_cast<int>(std::lcm<std::int64_t>(m, static_cast<std::int64_t>(s)));
        for (std::size_t si = 0; si < sizes.size(); ++si) {
            const int intervals = static_cast<int>(sizes[si]);
            const Tessellation tess = uniform_grid_tessellation(d, m, intervals);
            const std::vector<Cell> cells = tess.cells();
            std::vector<double> risks;
            for (int r = 0; r < replications; ++r) {
                const RngSeed rs{seed.seed, (static_cast<std::uint64_t>(si) * 1000 + r) + 1};
                FitConfig cfg;
                cfg.kx = cfg.kz = kernel;
                cfg.h = 1.0 / intervals;  // locality scales with the cells
                cfg.hbar = 2.0 / intervals;
                // Population fit per cell on a fresh noiseless sample.
                Rng rng(substream(rs, 6));
                std::vector<std::vector<double>> zs(cells.size()), ys(cells.size()), ws(cells.size());
                std::vector<double> centers(cells.size());
                for (const Cell& c : cells) centers[c.index] = source_truth(c.rep);
                std::vector<double> x(d);
                const std::size_t n_oracle = 20000 * cells.size();
                for (std::size_t i = 0; i < n_oracle; ++i) {
                    for (double& c : x) c = rng.uniform01();
                    const std::uint64_t ci = tess.locate(x);
                    const double zi = source_truth(x) - centers[ci];
                    const double dist = std::sqrt(squared_distance(x, cells[ci].rep));
                    zs[ci].push_back(zi);
                    ys[ci].push_back(target(x));
                    ws[ci].push_back(cfg.kx(dist / cfg.h) * cfg.kz(std::abs(zi) / cfg.hbar));
                }
                std::vector<CellFit> pop(cells.size());
                for (const Cell& c : cells)
                    pop[c.index] = detail::wls_affine(zs[c.index], ys[c.index], ws[c.index],
                                                      centers[c.index], 0.0, cfg);
                Rng eval(substream(rs, 7));
                const auto est = mse_against_truth(
                    [&](std::span<const double> xx) {
                        const std::uint64_t ci = tess.locate(xx);
                        const CellFit& f = pop[ci];
                        return f.a * (source_truth(xx) - f.y_center) + f.b;
                    },
                    target, d, n_eval, eval);
                risks.push_back(est.mse);
            }
            out.medians.push_back(median_of(risks));
        }
        break;
    }
    }
    out.slope = detail::loglog_slope(out.sizes, out.medians);
    return out;
}

}  // namespace tl2
