#pragma once

#include <algorithm>
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
#include "tl2/tessellation.hpp"
#include "tl2/transfer.hpp"

namespace tl2 {

/// Validation risk (1/n) sum (Y_i - f(X_i))^2 over the validation sample.
inline double empirical_risk(const TransferModel& model, const Dataset& validate) {
    if (validate.empty()) throw std::invalid_argument("empirical_risk: empty validation set");
    double s = 0.0;
    for (const auto& p : validate.samples) {
        const double r = p.y - predict_transfer(model, p.x);
        s += r * r;
    }
    return s / static_cast<double>(validate.size());
}

namespace detail {

inline std::vector<double> validation_losses(const TransferModel& model, const Dataset& validate) {
    std::vector<double> losses(validate.size());
    for (std::size_t i = 0; i < validate.size(); ++i) {
        const double r = validate.samples[i].y - predict_transfer(model, validate.samples[i].x);
        losses[i] = r * r;
    }
    return losses;
}

/// Median of blockwise means over a pre-permuted loss sequence. Blocks are
/// contiguous slices of size floor(n/B); the remainder is dropped; even B
/// takes the lower median.
inline double mom_from_losses(std::span<const double> losses, std::span<const std::size_t> perm, int blocks) {
    const std::size_t bs = perm.size() / static_cast<std::size_t>(blocks);
    std::vector<double> means(static_cast<std::size_t>(blocks));
    for (int b = 0; b < blocks; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < bs; ++i) s += losses[perm[static_cast<std::size_t>(b) * bs + i]];
        means[static_cast<std::size_t>(b)] = s / static_cast<double>(bs);
    }
    std::sort(means.begin(), means.end());
    return means[(static_cast<std::size_t>(blocks) - 1) / 2];
}

}  // namespace detail

/// Median-of-means validation risk with B blocks formed by a seeded random
/// permutation. B = 1 is exactly the plain empirical risk.
inline double mom_risk(const TransferModel& model, const Dataset& validate, int blocks, Rng& rng) {
    if (validate.empty()) throw std::invalid_argument("mom_risk: empty validation set");
    if (blocks < 1 || static_cast<std::size_t>(blocks) > validate.size())
        throw std::invalid_argument("mom_risk: blocks must be in [1, n_validate]");
    if (blocks == 1) return empirical_risk(model, validate);
    std::vector<std::size_t> perm(validate.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    const auto losses = detail::validation_losses(model, validate);
    return detail::mom_from_losses(losses, perm, blocks);
}

/// Smallest odd B >= max(5, ceil(log(|H| / delta))).
inline int mom_block_rule(std::size_t n_candidates, double delta) {
    if (n_candidates < 1) throw std::invalid_argument("mom_block_rule: need at least one candidate");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("mom_block_rule: delta must be in (0,1)");
    int b = std::max(5, static_cast<int>(std::ceil(std::log(static_cast<double>(n_candidates) / delta))));
    if (b % 2 == 0) ++b;
    return b;
}

struct RiskEstimate {
    double mean_risk = 0.0;
    double mom_risk = 0.0;
    std::size_t n_validate = 0;
    int blocks = 1;
};

struct SelectionMethod {
    enum class Kind { erm, mom };
    Kind kind = Kind::erm;
    int blocks = 1;  // used when kind == mom
};

/// Cheap admissibility booleans (no source evaluations), used
/// to annotate every evaluated candidate.
struct AdmissibilitySummary {
    std::size_t min_mass = 0;
    double mass_threshold = 0.0;
    double max_diameter = 0.0;
    double min_inscribed = 0.0;
    bool mass_ok = false;
    bool radius_ok = false;
    bool shape_ok = false;
    bool admissible() const { return mass_ok && radius_ok && shape_ok; }
};

inline AdmissibilitySummary admissibility_summary(const Tessellation& t, const Dataset& train,
                                                  double h, AdmissibilityConstants constants = {}) {
    AdmissibilitySummary s;
    s.mass_threshold = constants.c_mass * static_cast<double>(train.size()) * std::pow(h, t.dim());

    std::vector<std::uint64_t> located(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) located[i] = t.locate(train.samples[i].x);
    std::sort(located.begin(), located.end());
    std::size_t min_count = std::numeric_limits<std::size_t>::max();
    std::uint64_t occupied = 0;
    for (std::size_t i = 0; i < located.size();) {
        std::size_t j = i;
        while (j < located.size() && located[j] == located[i]) ++j;
        min_count = std::min(min_count, j - i);
        ++occupied;
        i = j;
    }
    if (occupied < t.cell_count() || located.empty()) min_count = 0;
    s.min_mass = min_count;

    double diam2 = 0.0;
    double min_len = std::numeric_limits<double>::infinity();
    for (int j = 0; j < t.dim(); ++j) {
        const auto& a = t.breakpoints()[j];
        int prev = 0, axis_max = 0, axis_min = t.resolution();
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
    s.max_diameter = std::sqrt(diam2);
    s.min_inscribed = 0.5 * min_len;
    s.mass_ok = static_cast<double>(s.min_mass) >= s.mass_threshold;
    s.radius_ok = s.max_diameter <= constants.c_rad * h;
    s.shape_ok = s.min_inscribed >= constants.r_loc * h;
    return s;
}

struct CandidateScore {
    std::string record;
    std::uint64_t cell_count = 0;
    RiskEstimate risk;
    AdmissibilitySummary admissibility;
};

struct AnnealStep {
    int step = 0;
    double temperature = 0.0;
    double proposal_risk = 0.0;
    bool accepted = false;
    bool size_rejected = false;   // proposal exceeded L_max, rejected unscored
    double accept_uniform = -1.0; // uniform drawn for the Metropolis test, -1 if none
};

struct SelectionReport {
    SelectionMethod method;
    RngSeed seed;
    std::vector<CandidateScore> candidates;
    std::string chosen_record;
    double chosen_risk = 0.0;
    Tessellation chosen;
    TransferModel chosen_model;  // fitted model of the chosen tessellation
    std::vector<AnnealStep> trace;
};

namespace detail {

struct ChoiceTracker {
    bool has = false;
    double risk = 0.0;
    Tessellation tess;
    TransferModel model;

    // Minimal risk; ties broken by smaller L_H, then lexicographic breakpoints.
    bool offer(double r, const Tessellation& t, TransferModel m) {
        bool take = !has;
        if (!take) {
            if (r < risk) take = true;
            else if (r == risk) {
                if (t.cell_count() < tess.cell_count()) take = true;
                else if (t.cell_count() == tess.cell_count() && t.breakpoints_less(tess)) take = true;
            }
        }
        if (take) {
            has = true;
            risk = r;
            tess = t;
            model = std::move(m);
        }
        return take;
    }
};

struct CandidateEvaluator {
    const Dataset& train;
    const Dataset& validate;
    std::shared_ptr<const SourceModel> source;
    FitConfig cfg;
    SelectionMethod method;
    AdmissibilityConstants constants;
    std::vector<std::size_t> mom_perm;  // shared block permutation, drawn once

    void init_mom_perm(Rng& rng) {
        if (method.kind == SelectionMethod::Kind::mom && method.blocks > 1) {
            mom_perm.resize(validate.size());
            std::iota(mom_perm.begin(), mom_perm.end(), std::size_t{0});
            rng.shuffle(mom_perm);
        }
    }

    /// Fits and scores one candidate; returns (selection risk, fitted model)
    /// and appends the CandidateScore.
    std::pair<double, TransferModel> evaluate(const Tessellation& t, std::vector<CandidateScore>& out) {
        TransferModel model = fit_transfer(t, train, source, cfg);
        CandidateScore cs;
        cs.record = to_record(t);
        cs.cell_count = t.cell_count();
        cs.risk.n_validate = validate.size();
        cs.risk.blocks = method.kind == SelectionMethod::Kind::mom ? method.blocks : 1;
        cs.risk.mean_risk = empirical_risk(model, validate);
        if (method.kind == SelectionMethod::Kind::mom && method.blocks > 1) {
            const auto losses = validation_losses(model, validate);
            cs.risk.mom_risk = mom_from_losses(losses, mom_perm, method.blocks);
        } else {
            cs.risk.mom_risk = cs.risk.mean_risk;
        }
        cs.admissibility = admissibility_summary(t, train, cfg.h, constants);
        const double sel = method.kind == SelectionMethod::Kind::mom ? cs.risk.mom_risk : cs.risk.mean_risk;
        out.push_back(std::move(cs));
        return {sel, std::move(model)};
    }
};

}  // namespace detail

/// Fits every candidate on the training half, scores it on the validation
/// half, and returns the argmin (ties: smaller L_H, then lexicographic
/// breakpoint order).
inline SelectionReport select_over(const std::vector<Tessellation>& candidates, const Dataset& train,
                                   const Dataset& validate, std::shared_ptr<const SourceModel> source,
                                   const FitConfig& cfg, SelectionMethod method, RngSeed seed = {},
                                   AdmissibilityConstants constants = {}) {
    if (candidates.empty()) throw std::invalid_argument("select_over: empty candidate list");
    if (method.kind == SelectionMethod::Kind::erm) method.blocks = 1;
    SelectionReport rep;
    rep.method = method;
    rep.seed = seed;
    Rng rng(seed);
    detail::CandidateEvaluator ev{train, validate, std::move(source), cfg, method, constants, {}};
    ev.init_mom_perm(rng);
    detail::ChoiceTracker best;
    for (const auto& t : candidates) {
        auto [risk, model] = ev.evaluate(t, rep.candidates);
        best.offer(risk, t, std::move(model));
    }
    rep.chosen = best.tess;
    rep.chosen_record = to_record(best.tess);
    rep.chosen_risk = best.risk;
    rep.chosen_model = std::move(best.model);
    return rep;
}

struct AnnealSpace {
    int d = 1;
    int m = 20;
    std::uint64_t l_max = 0;  // 0 => m^d (saturated)
};

struct AnnealSchedule {
    double t0 = -1.0;  // < 0: auto, initial risk of the single-cell start
    double alpha = 0.95;
    int steps = 100;   // evaluated-candidate budget; small validation halves overfit fast
    int moves_per_step = 1;
};

/// Metropolis simulated annealing over product tessellations, starting from
/// the single-cell partition. Proposals exceeding l_max are rejected without
/// being scored. Returns the best-ever visited tessellation, not the final
/// chain state.
inline SelectionReport anneal_select(AnnealSpace space, const Dataset& train, const Dataset& validate,
                                     std::shared_ptr<const SourceModel> source, const FitConfig& cfg,
                                     AnnealSchedule schedule, SelectionMethod method, RngSeed seed,
                                     AdmissibilityConstants constants = {}) {
    if (!(schedule.alpha > 0.0 && schedule.alpha < 1.0))
        throw std::invalid_argument("anneal_select: cooling alpha must be in (0,1)");
    if (schedule.steps < 0 || schedule.moves_per_step < 1)
        throw std::invalid_argument("anneal_select: invalid schedule");
    if (method.kind == SelectionMethod::Kind::erm) method.blocks = 1;
    std::uint64_t l_max = space.l_max;
    if (l_max == 0) {
        l_max = 1;
        for (int j = 0; j < space.d; ++j) {
            const std::uint64_t next = l_max * static_cast<std::uint64_t>(space.m);
            l_max = next / static_cast<std::uint64_t>(space.m) == l_max
                        ? next : std::numeric_limits<std::uint64_t>::max();
        }
    }

    SelectionReport rep;
    rep.method = method;
    rep.seed = seed;
    Rng rng(seed);
    detail::CandidateEvaluator ev{train, validate, std::move(source), cfg, method, constants, {}};
    ev.init_mom_perm(rng);

    Tessellation current = single_cell_tessellation(space.d, space.m);
    auto [current_risk, current_model] = ev.evaluate(current, rep.candidates);
    detail::ChoiceTracker best;
    best.offer(current_risk, current, std::move(current_model));

    double temp = schedule.t0 < 0.0 ? current_risk : schedule.t0;
    for (int step = 0; step < schedule.steps; ++step) {
        for (int mv = 0; mv < schedule.moves_per_step; ++mv) {
            Tessellation proposal = neighbor_move(current, rng);
            AnnealStep ts;
            ts.step = step;
            ts.temperature = temp;
            if (proposal.cell_count() > l_max) {
                ts.size_rejected = true;
                ts.proposal_risk = std::numeric_limits<double>::infinity();
                rep.trace.push_back(ts);
                continue;
            }
            auto [risk, model] = ev.evaluate(proposal, rep.candidates);
            ts.proposal_risk = risk;
            const double delta = risk - current_risk;
            bool accept = delta < 0.0;
            if (!accept && temp > 0.0) {
                ts.accept_uniform = rng.uniform01();
                accept = ts.accept_uniform < std::exp(-delta / temp);
            }
            ts.accepted = accept;
            rep.trace.push_back(ts);
            if (accept) {
                current = proposal;
                current_risk = risk;
                best.offer(risk, current, std::move(model));
            }
        }
        temp *= schedule.alpha;
    }

    rep.chosen = best.tess;
    rep.chosen_record = to_record(best.tess);
    rep.chosen_risk = best.risk;
    rep.chosen_model = std::move(best.model);
    return rep;
}

// --- report serialization -------------------------------------------------

/// Deterministic structured text form of a SelectionReport (stable key order,
/// full decimal precision); byte-identical under identical seeds and inputs.
inline std::string to_text(const SelectionReport& rep) {
    using detail::fmt17;
    std::ostringstream os;
    os << "selection-report v1\n";
    os << "method: " << (rep.method.kind == SelectionMethod::Kind::mom ? "mom" : "erm") << '\n';
    os << "blocks: " << rep.method.blocks << '\n';
    os << "seed: " << rep.seed.seed << '/' << rep.seed.stream << '\n';
    os << "chosen: " << rep.chosen_record << '\n';
    os << "chosen_risk: " << fmt17(rep.chosen_risk) << '\n';
    os << "candidates: " << rep.candidates.size() << '\n';
    for (const auto& c : rep.candidates) {
        os << "  - record: " << c.record << '\n';
        os << "    cells: " << c.cell_count << '\n';
        os << "    mean_risk: " << fmt17(c.risk.mean_risk) << '\n';
        os << "    mom_risk: " << fmt17(c.risk.mom_risk) << '\n';
        os << "    blocks: " << c.risk.blocks << '\n';
        os << "    admissible: " << (c.admissibility.admissible() ? "true" : "false") << '\n';
    }
    os << "trace: " << rep.trace.size() << '\n';
    for (const auto& t : rep.trace) {
        os << "  " << t.step << ' ' << fmt17(t.temperature) << ' ' << fmt17(t.proposal_risk) << ' '
           << (t.size_rejected ? "size-rejected" : (t.accepted ? "accepted" : "rejected")) << '\n';
    }
    return os.str();
}

}  // namespace tl2
