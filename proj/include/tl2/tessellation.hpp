#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tl2/core.hpp"
#include "tl2/source.hpp"

namespace tl2 {

/// Axis-aligned box cell of a tessellation. The box is half-open,
/// prod (lo_j, hi_j], except that cells touching the lower domain boundary
/// include it, so the cells tile [0,1]^d exactly.
struct Cell {
    std::uint64_t index = 0;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> rep;  // representative point x_l = box center

    double diameter() const {
        double s = 0.0;
        for (std::size_t j = 0; j < lo.size(); ++j) {
            const double len = hi[j] - lo[j];
            s += len * len;
        }
        return std::sqrt(s);
    }

    double inscribed_radius() const {
        double r = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lo.size(); ++j) r = std::min(r, 0.5 * (hi[j] - lo[j]));
        return r;
    }

    bool contains(std::span<const double> x) const {
        for (std::size_t j = 0; j < lo.size(); ++j) {
            const bool lower_ok = lo[j] == 0.0 ? x[j] >= 0.0 : x[j] > lo[j];
            if (!lower_ok || x[j] > hi[j]) return false;
        }
        return true;
    }
};

/// Product partition of [0,1]^d: every axis carries a subset of the grid
/// points {1/m, ..., (m-1)/m} as breakpoints (stored as integers k), and the
/// cells are the products of the resulting intervals. Immutable; cells are
/// derived on demand so very fine tessellations stay cheap to hold.
class Tessellation {
public:
    Tessellation() = default;

    Tessellation(int d, int m, std::vector<std::vector<int>> breakpoints)
        : dim_(d), m_(m), bp_(std::move(breakpoints)) {
        if (d < 1) throw std::invalid_argument("Tessellation: d must be >= 1");
        if (m < 1) throw std::invalid_argument("Tessellation: m must be >= 1");
        if (static_cast<int>(bp_.size()) != d)
            throw std::invalid_argument("Tessellation: need one breakpoint list per axis");
        for (auto& axis : bp_) {
            int prev = 0;
            for (int k : axis) {
                if (k < 1 || k > m - 1)
                    throw std::invalid_argument("Tessellation: breakpoint outside 1..m-1");
                if (k <= prev)
                    throw std::invalid_argument("Tessellation: breakpoints must be strictly increasing");
                prev = k;
            }
        }
        strides_.assign(d, 1);
        for (int j = d - 2; j >= 0; --j)
            strides_[j] = mul_sat(strides_[j + 1], interval_count(j + 1));
    }

    int dim() const { return dim_; }
    int resolution() const { return m_; }
    const std::vector<std::vector<int>>& breakpoints() const { return bp_; }

    std::uint64_t interval_count(int axis) const { return bp_[axis].size() + 1; }

    /// L_H = prod_j (|breakpoints_j| + 1). Saturates at uint64 max.
    std::uint64_t cell_count() const { return mul_sat(strides_[0], interval_count(0)); }

    /// Index of the interval of `axis` containing x: the number of
    /// breakpoints strictly below x (half-open upper inclusion).
    std::uint64_t axis_interval(int axis, double x) const {
        const auto& a = bp_[axis];
        std::size_t lo = 0, hi = a.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (static_cast<double>(a[mid]) / m_ < x) lo = mid + 1; else hi = mid;
        }
        return lo;
    }

    /// Cell index l_H(x). Throws if x is outside [0,1]^d.
    std::uint64_t locate(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("locate: dimension mismatch");
        std::uint64_t idx = 0;
        for (int j = 0; j < dim_; ++j) {
            if (!(x[j] >= 0.0 && x[j] <= 1.0))
                throw std::invalid_argument("locate: point outside [0,1]^d");
            idx += strides_[j] * axis_interval(j, x[j]);
        }
        return idx;
    }

    /// Materializes the cell with flat index `idx`.
    Cell cell(std::uint64_t idx) const {
        Cell c;
        c.index = idx;
        c.lo.resize(dim_);
        c.hi.resize(dim_);
        c.rep.resize(dim_);
        std::uint64_t rest = idx;
        for (int j = 0; j < dim_; ++j) {
            const std::uint64_t i = rest / strides_[j];
            rest %= strides_[j];
            const auto& a = bp_[j];
            const int klo = i == 0 ? 0 : a[i - 1];
            const int khi = i == a.size() ? m_ : a[i];
            c.lo[j] = static_cast<double>(klo) / m_;
            c.hi[j] = static_cast<double>(khi) / m_;
            c.rep[j] = 0.5 * (c.lo[j] + c.hi[j]);
        }
        return c;
    }

    /// All cells, in flat-index order. Guarded against huge partitions.
    std::vector<Cell> cells(std::uint64_t limit = 1u << 20) const {
        const std::uint64_t n = cell_count();
        if (n > limit) throw std::runtime_error("Tessellation::cells: partition too fine to materialize");
        std::vector<Cell> out;
        out.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) out.push_back(cell(i));
        return out;
    }

    /// Cell volume in exact grid units (sum over all cells is m^d).
    std::uint64_t cell_volume_units(std::uint64_t idx) const {
        std::uint64_t rest = idx, vol = 1;
        for (int j = 0; j < dim_; ++j) {
            const std::uint64_t i = rest / strides_[j];
            rest %= strides_[j];
            const auto& a = bp_[j];
            const int klo = i == 0 ? 0 : a[i - 1];
            const int khi = i == a.size() ? m_ : a[i];
            vol *= static_cast<std::uint64_t>(khi - klo);
        }
        return vol;
    }

    bool operator==(const Tessellation& o) const {
        return dim_ == o.dim_ && m_ == o.m_ && bp_ == o.bp_;
    }

    /// Lexicographic order on per-axis breakpoint lists (selection tie-break).
    bool breakpoints_less(const Tessellation& o) const { return bp_ < o.bp_; }

private:
    static std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
        if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
            return std::numeric_limits<std::uint64_t>::max();
        return a * b;
    }

    int dim_ = 0;
    int m_ = 1;
    std::vector<std::vector<int>> bp_;
    std::vector<std::uint64_t> strides_;
};

inline Tessellation grid_tessellation(int d, int m, std::vector<std::vector<int>> breakpoints) {
    return Tessellation(d, m, std::move(breakpoints));
}

inline Tessellation single_cell_tessellation(int d, int m) {
    return Tessellation(d, m, std::vector<std::vector<int>>(d));
}

/// Uniform grid with `splits_per_axis`+1 intervals per axis; split points must
/// land on the 1/m grid.
inline Tessellation uniform_grid_tessellation(int d, int m, int intervals_per_axis) {
    if (intervals_per_axis < 1 || m % intervals_per_axis != 0)
        throw std::invalid_argument("uniform_grid_tessellation: m must be divisible by intervals_per_axis");
    std::vector<int> axis;
    for (int k = 1; k < intervals_per_axis; ++k) axis.push_back(k * (m / intervals_per_axis));
    return Tessellation(d, m, std::vector<std::vector<int>>(d, axis));
}

// --- serialization -----------------------------------------------------

/// One-line text record: "tess d=<d> m=<m> bp=<axis0>|...|<axisd-1>" with
/// comma-separated integer breakpoints per axis. Round-trips bit-exactly.
inline std::string to_record(const Tessellation& t) {
    std::ostringstream os;
    os << "tess d=" << t.dim() << " m=" << t.resolution() << " bp=";
    for (int j = 0; j < t.dim(); ++j) {
        if (j > 0) os << '|';
        const auto& a = t.breakpoints()[j];
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i > 0) os << ',';
            os << a[i];
        }
    }
    return os.str();
}

inline Tessellation tessellation_from_record(const std::string& record) {
    std::istringstream is(record);
    std::string tag, dtok, mtok, bptok;
    is >> tag >> dtok >> mtok;
    std::getline(is, bptok);
    if (tag != "tess" || dtok.rfind("d=", 0) != 0 || mtok.rfind("m=", 0) != 0)
        throw std::invalid_argument("tessellation_from_record: malformed record: " + record);
    const int d = std::stoi(dtok.substr(2));
    const int m = std::stoi(mtok.substr(2));
    const auto bp_pos = bptok.find("bp=");
    if (bp_pos == std::string::npos)
        throw std::invalid_argument("tessellation_from_record: missing bp=: " + record);
    const std::string body = bptok.substr(bp_pos + 3);
    std::vector<std::vector<int>> bp;
    std::string axis;
    std::istringstream bs(body);
    while (std::getline(bs, axis, '|')) {
        std::vector<int> list;
        std::istringstream as(axis);
        std::string num;
        while (std::getline(as, num, ',')) if (!num.empty()) list.push_back(std::stoi(num));
        bp.push_back(std::move(list));
    }
    while (static_cast<int>(bp.size()) < d) bp.emplace_back();
    return Tessellation(d, m, std::move(bp));
}

// --- neighbourhood move -------------------------------------------------

/// Elementary edit for the annealer: add a breakpoint on a uniformly chosen
/// axis, remove one, or shift one by +-1/m, each type with probability 1/3.
/// Inapplicable types fall back cyclically; if no edit applies (m = 1) the
/// input is returned unchanged.
inline Tessellation neighbor_move(const Tessellation& t, Rng& rng) {
    const int d = t.dim();
    const int m = t.resolution();
    auto bp = t.breakpoints();

    const auto try_add = [&]() -> bool {
        std::vector<int> axes;
        for (int j = 0; j < d; ++j)
            if (static_cast<int>(bp[j].size()) < m - 1) axes.push_back(j);
        if (axes.empty()) return false;
        const int j = axes[rng.uniform_index(axes.size())];
        std::vector<int> free;
        std::size_t p = 0;
        for (int k = 1; k <= m - 1; ++k) {
            if (p < bp[j].size() && bp[j][p] == k) { ++p; continue; }
            free.push_back(k);
        }
        const int k = free[rng.uniform_index(free.size())];
        bp[j].insert(std::upper_bound(bp[j].begin(), bp[j].end(), k), k);
        return true;
    };

    const auto try_remove = [&]() -> bool {
        std::vector<int> axes;
        for (int j = 0; j < d; ++j)
            if (!bp[j].empty()) axes.push_back(j);
        if (axes.empty()) return false;
        const int j = axes[rng.uniform_index(axes.size())];
        const std::size_t i = rng.uniform_index(bp[j].size());
        bp[j].erase(bp[j].begin() + static_cast<std::ptrdiff_t>(i));
        return true;
    };

    const auto try_shift = [&]() -> bool {
        struct Move { int axis; std::size_t pos; int dir; };
        std::vector<Move> feasible;
        for (int j = 0; j < d; ++j) {
            const auto& a = bp[j];
            for (std::size_t i = 0; i < a.size(); ++i) {
                for (int dir : {-1, +1}) {
                    const int tgt = a[i] + dir;
                    if (tgt < 1 || tgt > m - 1) continue;
                    if (std::binary_search(a.begin(), a.end(), tgt)) continue;
                    feasible.push_back({j, i, dir});
                }
            }
        }
        if (feasible.empty()) return false;
        const Move mv = feasible[rng.uniform_index(feasible.size())];
        bp[mv.axis][mv.pos] += mv.dir;
        return true;
    };

    const std::uint64_t first = rng.uniform_index(3);
    for (int attempt = 0; attempt < 3; ++attempt) {
        switch ((first + attempt) % 3) {
        case 0: if (try_add()) return Tessellation(d, m, std::move(bp)); break;
        case 1: if (try_remove()) return Tessellation(d, m, std::move(bp)); break;
        case 2: if (try_shift()) return Tessellation(d, m, std::move(bp)); break;
        }
    }
    return t;
}

// --- admissibility diagnostics -------------------------------------------

struct AdmissibilityConstants {
    double c_mass = 1.0;   // clause (i):  |T1^{H,l}| >= c_mass * n * h^d
    double c_rad = 4.0;    // clause (ii): diam(A) <= c_rad * h
    double r_loc = 0.25;   // clause (iii): ball of radius r_loc * h fits in the cell
};

struct CellDiagnostics {
    std::uint64_t cell_index = 0;
    std::size_t mass = 0;             // |T1^{H,l}|
    double diameter = 0.0;
    double inscribed_radius = 0.0;
    std::size_t effective_n = 0;      // N_{H,l}: joint (h, hbar) window count around the center
    double gram_min_eig = 0.0;        // weighted, weight-normalized 2x2 Gram on (1, z)
    double gram_max_eig = 0.0;
};

/// Advisory admissibility diagnostic: the mass/radius/shape clauses plus the effective-sample
/// and local-design quantities. The pipeline may proceed on failing
/// tessellations; callers record, they do not reject.
struct AdmissibilityReport {
    double h = 0.0, hbar = 0.0;
    std::size_t n_train = 0;
    std::uint64_t cell_count = 0;
    AdmissibilityConstants constants;

    bool detailed = false;                 // per-cell rows cover every cell
    std::vector<CellDiagnostics> cells;    // all cells if detailed, else only occupied ones

    std::size_t min_mass = 0;
    double mass_threshold = 0.0;
    bool mass_ok = false;

    double max_diameter = 0.0;
    double diameter_threshold = 0.0;
    bool radius_ok = false;

    double min_inscribed = 0.0;
    double inscribed_threshold = 0.0;
    bool shape_ok = false;

    // effective-sample-size range over the reported cells
    std::size_t min_effective_n = 0, max_effective_n = 0;
    // weighted Gram eigenvalue range over the reported cells
    double lambda_min = 0.0, lambda_max = 0.0;

    // cellwise lower-mass diagnostic: n * min p_hat vs 8 log(L_H / delta), delta = 0.1
    double mass_condition_lhs = 0.0, mass_condition_rhs = 0.0;
    bool mass_condition_ok = false;

    bool admissible() const { return mass_ok && radius_ok && shape_ok; }
};

namespace detail {

inline void min_eig_2x2(double s0, double s1, double s2, double& emin, double& emax) {
    const double tr = s0 + s2;
    const double det = s0 * s2 - s1 * s1;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    emax = 0.5 * (tr + disc);
    emin = emax > 0.0 ? std::max(0.0, det / emax) : 0.0;
}

}  // namespace detail

inline AdmissibilityReport check_admissible(const Tessellation& t, const Dataset& train,
                                            double h, double hbar, const SourceModel& source,
                                            AdmissibilityConstants constants = {},
                                            Kernel kx = {}, Kernel kz = {},
                                            std::uint64_t detail_limit = 4096) {
    AdmissibilityReport rep;
    rep.h = h;
    rep.hbar = hbar;
    rep.n_train = train.size();
    rep.cell_count = t.cell_count();
    rep.constants = constants;
    rep.mass_threshold = constants.c_mass * static_cast<double>(train.size()) * std::pow(h, t.dim());
    rep.diameter_threshold = constants.c_rad * h;
    rep.inscribed_threshold = constants.r_loc * h;

    // Source scores of the training points, shared across cells.
    std::vector<double> fs(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) fs[i] = nw_predict(source, train.samples[i].x);

    // Occupancy by located cell.
    std::vector<std::uint64_t> located(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) located[i] = t.locate(train.samples[i].x);

    rep.detailed = rep.cell_count <= detail_limit;
    std::vector<std::uint64_t> indices;
    if (rep.detailed) {
        for (std::uint64_t c = 0; c < rep.cell_count; ++c) indices.push_back(c);
    } else {
        indices = located;
        std::sort(indices.begin(), indices.end());
        indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    }

    rep.min_mass = std::numeric_limits<std::size_t>::max();
    rep.min_effective_n = std::numeric_limits<std::size_t>::max();
    rep.lambda_min = std::numeric_limits<double>::infinity();
    double min_inscribed = std::numeric_limits<double>::infinity();
    double max_diam = 0.0;

    for (std::uint64_t ci : indices) {
        const Cell cell = t.cell(ci);
        CellDiagnostics cd;
        cd.cell_index = ci;
        cd.diameter = cell.diameter();
        cd.inscribed_radius = cell.inscribed_radius();
        const double fs_center = nw_predict(source, cell.rep);
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, wsum = 0.0;
        for (std::size_t i = 0; i < train.size(); ++i) {
            const double dist = std::sqrt(squared_distance(train.samples[i].x, cell.rep));
            const double zgap = std::abs(fs[i] - fs_center);
            if (dist <= h && zgap <= hbar) ++cd.effective_n;
            if (located[i] != ci) continue;
            ++cd.mass;
            const double w = kx(dist / h) * kz(zgap / hbar);
            if (w <= kWeightFloor) continue;
            const double z = fs[i] - fs_center;
            wsum += w;
            s0 += w;
            s1 += w * z;
            s2 += w * z * z;
        }
        if (wsum > 0.0) detail::min_eig_2x2(s0 / wsum, s1 / wsum, s2 / wsum, cd.gram_min_eig, cd.gram_max_eig);
        rep.min_mass = std::min(rep.min_mass, cd.mass);
        rep.min_effective_n = std::min(rep.min_effective_n, cd.effective_n);
        rep.max_effective_n = std::max(rep.max_effective_n, cd.effective_n);
        rep.lambda_min = std::min(rep.lambda_min, cd.gram_min_eig);
        rep.lambda_max = std::max(rep.lambda_max, cd.gram_max_eig);
        min_inscribed = std::min(min_inscribed, cd.inscribed_radius);
        max_diam = std::max(max_diam, cd.diameter);
        rep.cells.push_back(std::move(cd));
    }

    if (!rep.detailed) {
        // Product structure: the extremal cells exist even without enumeration.
        double diam2 = 0.0;
        double min_len = std::numeric_limits<double>::infinity();
        for (int j = 0; j < t.dim(); ++j) {
            const auto& a = t.breakpoints()[j];
            int prev = 0;
            int axis_max = 0, axis_min = t.resolution();
            for (std::size_t i = 0; i <= a.size(); ++i) {
                const int k = i == a.size() ? t.resolution() : a[i];
                axis_max = std::max(axis_max, k - prev);
                axis_min = std::min(axis_min, k - prev);
                prev = k;
            }
            const double lmax = static_cast<double>(axis_max) / t.resolution();
            diam2 += lmax * lmax;
            min_len = std::min(min_len, static_cast<double>(axis_min) / t.resolution());
        }
        max_diam = std::sqrt(diam2);
        min_inscribed = 0.5 * min_len;
        // Some cell is unoccupied whenever there are more cells than points.
        if (rep.cell_count > static_cast<std::uint64_t>(train.size()) ||
            indices.size() < rep.cell_count)
            rep.min_mass = 0;
    }
    if (rep.min_mass == std::numeric_limits<std::size_t>::max()) rep.min_mass = 0;
    if (rep.min_effective_n == std::numeric_limits<std::size_t>::max()) rep.min_effective_n = 0;
    if (!std::isfinite(rep.lambda_min)) rep.lambda_min = 0.0;

    rep.max_diameter = max_diam;
    rep.min_inscribed = min_inscribed;
    rep.mass_ok = static_cast<double>(rep.min_mass) >= rep.mass_threshold;
    rep.radius_ok = rep.max_diameter <= rep.diameter_threshold;
    rep.shape_ok = rep.min_inscribed >= rep.inscribed_threshold;

    const double delta = 0.1;
    const double min_phat = train.empty() ? 0.0 : static_cast<double>(rep.min_mass) / train.size();
    rep.mass_condition_lhs = static_cast<double>(train.size()) * min_phat;
    rep.mass_condition_rhs = 8.0 * std::log(static_cast<double>(rep.cell_count) / delta);
    rep.mass_condition_ok = rep.mass_condition_lhs >= rep.mass_condition_rhs;
    return rep;
}

}  // namespace tl2
