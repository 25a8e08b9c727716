#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tl2/core.hpp"
#include "tl2/source.hpp"
#include "tl2/tessellation.hpp"

namespace tl2 {

enum class TransferBandwidthRule { experiment_n13, theory_optimal, fixed };

struct TransferBandwidths {
    double h = 0.0;
    double hbar = 0.0;
};

/// Transfer bandwidths (h, hbar).
///   experiment-n13:  h = hbar = n^{-1/3}
///   theory-optimal:  h given, hbar = (n * h^d)^{-1/(2*beta_g+1)}
///   fixed:           both given
inline TransferBandwidths bandwidth_rule_transfer(std::size_t n, int d, TransferBandwidthRule rule,
                                                  double p1 = 0.0, double p2 = 0.0) {
    if (n < 1) throw std::invalid_argument("bandwidth_rule_transfer: n must be >= 1");
    switch (rule) {
    case TransferBandwidthRule::experiment_n13: {
        const double h = std::pow(static_cast<double>(n), -1.0 / 3.0);
        return {h, h};
    }
    case TransferBandwidthRule::theory_optimal: {
        const double h = p1, beta_g = p2;
        if (!(h > 0.0)) throw std::invalid_argument("bandwidth_rule_transfer: h must be positive");
        if (!(beta_g > 0.0)) throw std::invalid_argument("bandwidth_rule_transfer: beta_g must be positive");
        const double hbar = std::pow(static_cast<double>(n) * std::pow(h, d), -1.0 / (2.0 * beta_g + 1.0));
        return {h, hbar};
    }
    case TransferBandwidthRule::fixed:
        if (!(p1 > 0.0 && p2 > 0.0)) throw std::invalid_argument("bandwidth_rule_transfer: fixed values must be positive");
        return {p1, p2};
    }
    throw std::invalid_argument("bandwidth_rule_transfer: unknown rule");
}

enum class CellFallback { none, ridge, mean, empty };

inline const char* to_string(CellFallback f) {
    switch (f) {
    case CellFallback::none: return "none";
    case CellFallback::ridge: return "ridge";
    case CellFallback::mean: return "mean";
    case CellFallback::empty: return "empty";
    }
    return "?";
}

inline CellFallback cell_fallback_from_string(const std::string& s) {
    if (s == "none") return CellFallback::none;
    if (s == "ridge") return CellFallback::ridge;
    if (s == "mean") return CellFallback::mean;
    if (s == "empty") return CellFallback::empty;
    throw std::invalid_argument("unknown fallback: " + s);
}

/// Fitted affine transfer (a, b) of one cell: y -> a*(y - y_center) + b.
struct CellFit {
    double a = 0.0;
    double b = 0.0;
    double y_center = 0.0;      // source score at the representative point
    int n_window = 0;           // points carrying weight above the floor
    double gram_min_eig = 0.0;  // min eigenvalue of the weight-normalized 2x2 Gram
    CellFallback fallback = CellFallback::empty;
};

struct FitConfig {
    Kernel kx{};
    Kernel kz{};
    double h = 0.0;
    double hbar = 0.0;
    double eig_rel_threshold = 1e-10;  // degenerate when min_eig < threshold * trace
    double ridge_rel = 1e-8;           // ridge added: ridge_rel * trace / 2
    bool window_only = false;          // sum over all of T1, kernel windows only (no cell restriction)
};

namespace detail {

/// Weighted affine least squares on features (1, z). Weights at or below the
/// floor are skipped entirely, so far-away points have zero influence
/// bit-for-bit under compact kernels.
inline CellFit wls_affine(std::span<const double> z, std::span<const double> y,
                          std::span<const double> w, double y_center, double train_mean,
                          const FitConfig& cfg) {
    CellFit fit;
    fit.y_center = y_center;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!(w[i] > kWeightFloor)) continue;
        ++fit.n_window;
        s0 += w[i];
        s1 += w[i] * z[i];
        s2 += w[i] * z[i] * z[i];
        t0 += w[i] * y[i];
        t1 += w[i] * z[i] * y[i];
    }
    if (fit.n_window == 0) {
        fit.a = 0.0;
        fit.b = train_mean;
        fit.fallback = CellFallback::empty;
        return fit;
    }
    if (fit.n_window == 1) {
        fit.a = 0.0;
        fit.b = t0 / s0;
        fit.fallback = CellFallback::mean;
        return fit;
    }
    // Weight-normalized Gram and moment vector.
    double m00 = 1.0, m01 = s1 / s0, m11 = s2 / s0;
    const double r0 = t0 / s0, r1 = t1 / s0;
    double emin, emax;
    min_eig_2x2(m00, m01, m11, emin, emax);
    fit.gram_min_eig = emin;
    const double trace = m00 + m11;
    if (emin < cfg.eig_rel_threshold * trace) {
        const double ridge = cfg.ridge_rel * trace / 2.0;
        m00 += ridge;
        m11 += ridge;
        fit.fallback = CellFallback::ridge;
    } else {
        fit.fallback = CellFallback::none;
    }
    const double det = m00 * m11 - m01 * m01;
    fit.b = (m11 * r0 - m01 * r1) / det;
    fit.a = (m00 * r1 - m01 * r0) / det;
    return fit;
}

}  // namespace detail

/// Cellwise transfer fit: weighted least squares of Y on
/// (1, fs(X) - fs(x_l)) with weights K_x(dist/h) * K_z(|z|/hbar), restricted
/// to training points inside the cell (or windows only, per config).
inline CellFit fit_cell(const Cell& cell, const Dataset& train, const SourceModel& source,
                        const FitConfig& cfg) {
    if (!(cfg.h > 0.0 && cfg.hbar > 0.0))
        throw std::invalid_argument("fit_cell: bandwidths must be positive");
    double mean = 0.0;
    for (const auto& s : train.samples) mean += s.y;
    if (!train.empty()) mean /= static_cast<double>(train.size());

    const double fs_center = nw_predict(source, cell.rep);
    std::vector<double> z, y, w;
    for (const auto& s : train.samples) {
        if (!cfg.window_only && !cell.contains(s.x)) continue;
        const double zi = nw_predict(source, s.x) - fs_center;
        const double dist = std::sqrt(squared_distance(s.x, cell.rep));
        z.push_back(zi);
        y.push_back(s.y);
        w.push_back(cfg.kx(dist / cfg.h) * cfg.kz(std::abs(zi) / cfg.hbar));
    }
    return detail::wls_affine(z, y, w, fs_center, mean, cfg);
}

/// Piecewise-affine transfer estimator on a tessellation. Cells that never
/// received a fit share `default_fit` (the empty-cell rule). Immutable after
/// construction; predictions are pure.
struct TransferModel {
    std::shared_ptr<const SourceModel> source;
    Tessellation tessellation;
    FitConfig config;
    std::map<std::uint64_t, CellFit> fitted;
    CellFit default_fit;
    double train_mean = 0.0;

    const CellFit& fit_for(std::uint64_t cell_index) const {
        const auto it = fitted.find(cell_index);
        return it == fitted.end() ? default_fit : it->second;
    }

    /// Prediction from a precomputed source score and cell index.
    double predict_scored(double source_score, std::uint64_t cell_index) const {
        const CellFit& f = fit_for(cell_index);
        if (f.a == 0.0) return f.b;
        return f.a * (source_score - f.y_center) + f.b;
    }
};

inline TransferModel fit_transfer(const Tessellation& t, const Dataset& train,
                                  std::shared_ptr<const SourceModel> source, FitConfig cfg) {
    if (!source) throw std::invalid_argument("fit_transfer: null source model");
    if (!(cfg.h > 0.0 && cfg.hbar > 0.0))
        throw std::invalid_argument("fit_transfer: bandwidths must be positive");
    TransferModel model;
    model.tessellation = t;
    model.config = cfg;

    double mean = 0.0;
    for (const auto& s : train.samples) mean += s.y;
    if (!train.empty()) mean /= static_cast<double>(train.size());
    model.train_mean = mean;
    model.default_fit = CellFit{0.0, mean, 0.0, 0, 0.0, CellFallback::empty};

    std::vector<double> fs(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) fs[i] = nw_predict(*source, train.samples[i].x);

    if (cfg.window_only) {
        // Every cell collects all window points; needs a materializable partition.
        for (const Cell& cell : t.cells()) {
            const double fs_center = nw_predict(*source, cell.rep);
            std::vector<double> z(train.size()), y(train.size()), w(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) {
                z[i] = fs[i] - fs_center;
                y[i] = train.samples[i].y;
                const double dist = std::sqrt(squared_distance(train.samples[i].x, cell.rep));
                w[i] = cfg.kx(dist / cfg.h) * cfg.kz(std::abs(z[i]) / cfg.hbar);
            }
            model.fitted[cell.index] = detail::wls_affine(z, y, w, fs_center, mean, cfg);
        }
        model.source = std::move(source);
        return model;
    }

    std::map<std::uint64_t, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < train.size(); ++i) members[t.locate(train.samples[i].x)].push_back(i);

    for (const auto& [ci, idxs] : members) {
        const Cell cell = t.cell(ci);
        const double fs_center = nw_predict(*source, cell.rep);
        std::vector<double> z, y, w;
        z.reserve(idxs.size());
        y.reserve(idxs.size());
        w.reserve(idxs.size());
        for (std::size_t i : idxs) {
            const double zi = fs[i] - fs_center;
            const double dist = std::sqrt(squared_distance(train.samples[i].x, cell.rep));
            z.push_back(zi);
            y.push_back(train.samples[i].y);
            w.push_back(cfg.kx(dist / cfg.h) * cfg.kz(std::abs(zi) / cfg.hbar));
        }
        model.fitted[ci] = detail::wls_affine(z, y, w, fs_center, mean, cfg);
    }
    model.source = std::move(source);
    return model;
}

/// f_T^H(x) = a_l * (fs(x) - fs(x_l)) + b_l with l = locate(H, x).
inline double predict_transfer(const TransferModel& model, std::span<const double> x) {
    const std::uint64_t ci = model.tessellation.locate(x);
    const CellFit& f = model.fit_for(ci);
    if (f.a == 0.0) return f.b;
    return f.a * (nw_predict(*model.source, x) - f.y_center) + f.b;
}

/// Estimated transfer function g(x, y) = a_l * (y - fs(x_l)) + b_l at an
/// arbitrary source value y; the |y - y_l| <= hbar localization event is the
/// caller's concern.
inline double transfer_function_at(const TransferModel& model, std::span<const double> x, double y) {
    const std::uint64_t ci = model.tessellation.locate(x);
    const CellFit& f = model.fit_for(ci);
    return f.a * (y - f.y_center) + f.b;
}

// --- serialization -----------------------------------------------------

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_cell_fit(std::ostream& os, const char* tag, std::uint64_t idx, const CellFit& f) {
    os << tag;
    if (tag[0] == 'c') os << ' ' << idx;
    os << ' ' << fmt17(f.a) << ' ' << fmt17(f.b) << ' ' << fmt17(f.y_center) << ' '
       << f.n_window << ' ' << fmt17(f.gram_min_eig) << ' ' << to_string(f.fallback) << '\n';
}

inline CellFit read_cell_fit(std::istringstream& is) {
    CellFit f;
    std::string fb;
    is >> f.a >> f.b >> f.y_center >> f.n_window >> f.gram_min_eig >> fb;
    f.fallback = cell_fallback_from_string(fb);
    return f;
}

}  // namespace detail

/// Full-precision text record; reloads to bit-identical predictions.
inline std::string to_record(const TransferModel& m) {
    std::ostringstream os;
    os << "tl2-model v1\n";
    os << to_record(m.tessellation) << '\n';
    os << "bandwidths " << detail::fmt17(m.config.h) << ' ' << detail::fmt17(m.config.hbar) << '\n';
    os << "kernels " << to_string(m.config.kx.shape) << ' ' << to_string(m.config.kz.shape) << '\n';
    os << "train_mean " << detail::fmt17(m.train_mean) << '\n';
    detail::write_cell_fit(os, "default_cell", 0, m.default_fit);
    os << "cells " << m.fitted.size() << '\n';
    for (const auto& [ci, f] : m.fitted) detail::write_cell_fit(os, "cell", ci, f);
    const SourceModel& s = *m.source;
    os << "source n=" << s.data.size() << " d=" << s.data.dim
       << " kernel=" << to_string(s.kernel.shape) << " h=" << detail::fmt17(s.bandwidth)
       << " beta=" << detail::fmt17(s.beta) << '\n';
    for (const auto& sample : s.data.samples) {
        os << 's';
        for (double c : sample.x) os << ' ' << detail::fmt17(c);
        os << ' ' << detail::fmt17(sample.y) << '\n';
    }
    os << "end\n";
    return os.str();
}

inline TransferModel transfer_model_from_record(const std::string& record) {
    std::istringstream in(record);
    std::string line;
    const auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw std::invalid_argument(std::string("model record: missing ") + what);
        return line;
    };
    if (next_line("header") != "tl2-model v1")
        throw std::invalid_argument("model record: bad header");
    TransferModel m;
    m.tessellation = tessellation_from_record(next_line("tessellation"));
    {
        std::istringstream is(next_line("bandwidths"));
        std::string tag;
        is >> tag >> m.config.h >> m.config.hbar;
        if (tag != "bandwidths") throw std::invalid_argument("model record: expected bandwidths");
    }
    {
        std::istringstream is(next_line("kernels"));
        std::string tag, kx, kz;
        is >> tag >> kx >> kz;
        if (tag != "kernels") throw std::invalid_argument("model record: expected kernels");
        m.config.kx.shape = kernel_shape_from_string(kx);
        m.config.kz.shape = kernel_shape_from_string(kz);
    }
    {
        std::istringstream is(next_line("train_mean"));
        std::string tag;
        is >> tag >> m.train_mean;
    }
    {
        std::istringstream is(next_line("default_cell"));
        std::string tag;
        is >> tag;
        m.default_fit = detail::read_cell_fit(is);
    }
    std::size_t count = 0;
    {
        std::istringstream is(next_line("cells"));
        std::string tag;
        is >> tag >> count;
        if (tag != "cells") throw std::invalid_argument("model record: expected cells");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream is(next_line("cell"));
        std::string tag;
        std::uint64_t ci;
        is >> tag >> ci;
        m.fitted[ci] = detail::read_cell_fit(is);
    }
    {
        std::istringstream is(next_line("source"));
        std::string tag, ntok, dtok, ktok, htok, btok;
        is >> tag >> ntok >> dtok >> ktok >> htok >> btok;
        if (tag != "source") throw std::invalid_argument("model record: expected source");
        auto src = std::make_shared<SourceModel>();
        src->data.role = DatasetRole::source;
        src->data.dim = std::stoi(dtok.substr(2));
        src->kernel.shape = kernel_shape_from_string(ktok.substr(7));
        src->bandwidth = std::stod(htok.substr(2));
        src->beta = std::stod(btok.substr(5));
        const std::size_t n = std::stoul(ntok.substr(2));
        src->data.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::istringstream rs(next_line("source sample"));
            std::string stag;
            rs >> stag;
            auto& sample = src->data.samples[i];
            sample.x.resize(src->data.dim);
            for (double& c : sample.x) rs >> c;
            rs >> sample.y;
        }
        m.source = std::move(src);
    }
    return m;
}

}  // namespace tl2
