#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "tl2/core.hpp"

namespace tl2 {

enum class SourceBandwidthRule { algorithm_box, appendix_optimal, fixed };

/// Source bandwidth h_S.
///   algorithm-box:    n^{-1/(2d+beta)}
///   appendix-optimal: n^{-1/(2beta+d)}
///   fixed:            the supplied value
inline double bandwidth_rule_source(std::size_t n, int d, double beta,
                                    SourceBandwidthRule rule, double fixed_value = 0.0) {
    if (n < 1) throw std::invalid_argument("bandwidth_rule_source: n must be >= 1");
    if (d < 1) throw std::invalid_argument("bandwidth_rule_source: d must be >= 1");
    switch (rule) {
    case SourceBandwidthRule::algorithm_box:
        if (!(beta > 0.0)) throw std::invalid_argument("bandwidth_rule_source: beta must be positive");
        return std::pow(static_cast<double>(n), -1.0 / (2.0 * d + beta));
    case SourceBandwidthRule::appendix_optimal:
        if (!(beta > 0.0)) throw std::invalid_argument("bandwidth_rule_source: beta must be positive");
        return std::pow(static_cast<double>(n), -1.0 / (2.0 * beta + d));
    case SourceBandwidthRule::fixed:
        if (!(fixed_value > 0.0)) throw std::invalid_argument("bandwidth_rule_source: fixed value must be positive");
        return fixed_value;
    }
    throw std::invalid_argument("bandwidth_rule_source: unknown rule");
}

/// Nadaraya-Watson regressor fitted on the source sample. Immutable after
/// construction; predictions are pure and thread-safe.
struct SourceModel {
    Dataset data;
    Kernel kernel;
    double bandwidth = 0.0;
    double beta = 1.0;  // smoothness input to the bandwidth rule, kept for reporting

    int dim() const { return data.dim; }
};

inline SourceModel nw_fit(Dataset data, Kernel kernel, double bandwidth, double beta = 1.0) {
    if (data.empty()) throw std::invalid_argument("nw_fit: empty dataset");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("nw_fit: bandwidth must be positive");
    return SourceModel{std::move(data), kernel, bandwidth, beta};
}

struct NwPrediction {
    double value = 0.0;
    bool extrapolated = false;  // all kernel weights vanished; nearest-neighbour response used
};

inline NwPrediction nw_predict_detail(const SourceModel& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.data.dim)
        throw std::invalid_argument("nw_predict: query dimension mismatch");
    double num = 0.0, den = 0.0;
    double best_d2 = std::numeric_limits<double>::infinity();
    double nearest_y = 0.0;
    const double h = m.bandwidth;
    for (const auto& s : m.data.samples) {
        const double d2 = squared_distance(s.x, x);
        const double w = m.kernel(std::sqrt(d2) / h);
        num += w * s.y;
        den += w;
        if (d2 < best_d2) {
            best_d2 = d2;
            nearest_y = s.y;
        }
    }
    if (den < 1e-300) return {nearest_y, true};
    return {num / den, false};
}

inline double nw_predict(const SourceModel& m, std::span<const double> x) {
    return nw_predict_detail(m, x).value;
}

}  // namespace tl2
