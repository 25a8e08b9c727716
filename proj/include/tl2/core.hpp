#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tl2 {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

// Weights below this are treated as zero when counting window membership.
constexpr double kWeightFloor = 1e-300;

/// One observation (X_i, Y_i) with X_i in [0,1]^d.
struct LabeledSample {
    std::vector<double> x;
    double y = 0.0;
};

enum class DatasetRole { source, target_full, target_train, target_validate };

inline const char* to_string(DatasetRole r) {
    switch (r) {
    case DatasetRole::source: return "source";
    case DatasetRole::target_full: return "target-full";
    case DatasetRole::target_train: return "target-train";
    case DatasetRole::target_validate: return "target-validate";
    }
    return "?";
}

/// A sample with a fixed covariate dimension and a pipeline role.
struct Dataset {
    int dim = 0;
    DatasetRole role = DatasetRole::source;
    std::vector<LabeledSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    /// Checks the type invariants (consistent dims, coordinates in [0,1],
    /// finite responses). Throws std::invalid_argument on violation.
    void validate() const {
        if (dim <= 0) throw std::invalid_argument("Dataset: dim must be positive");
        for (const auto& s : samples) {
            if (static_cast<int>(s.x.size()) != dim)
                throw std::invalid_argument("Dataset: sample dimension mismatch");
            if (!std::isfinite(s.y))
                throw std::invalid_argument("Dataset: non-finite response");
            for (double c : s.x)
                if (!(c >= 0.0 && c <= 1.0))
                    throw std::invalid_argument("Dataset: coordinate outside [0,1]");
        }
    }
};

enum class KernelShape { gaussian, epanechnikov, uniform };

inline const char* to_string(KernelShape s) {
    switch (s) {
    case KernelShape::gaussian: return "gaussian";
    case KernelShape::epanechnikov: return "epanechnikov";
    case KernelShape::uniform: return "uniform";
    }
    return "?";
}

inline KernelShape kernel_shape_from_string(const std::string& s) {
    if (s == "gaussian") return KernelShape::gaussian;
    if (s == "epanechnikov") return KernelShape::epanechnikov;
    if (s == "uniform") return KernelShape::uniform;
    throw std::invalid_argument("unknown kernel shape: " + s);
}

/// Symmetric nonnegative kernel profile. Vector arguments are reduced by
/// Euclidean norm; the gaussian keeps the scalar (2*pi)^{-1/2} constant in
/// every dimension (all uses are ratios or argmins, so constants cancel).
struct Kernel {
    KernelShape shape = KernelShape::gaussian;

    bool compact_support() const { return shape != KernelShape::gaussian; }

    double operator()(double u) const {
        const double a = std::abs(u);
        switch (shape) {
        case KernelShape::gaussian:
            return kInvSqrt2Pi * std::exp(-0.5 * a * a);
        case KernelShape::epanechnikov:
            return a <= 1.0 ? 0.75 * (1.0 - a * a) : 0.0;
        case KernelShape::uniform:
            return a <= 1.0 ? 0.5 : 0.0;
        }
        return 0.0;
    }
};

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double c : v) s += c * c;
    return s;
}

inline double euclidean_norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

/// K(u / bandwidth), with no bandwidth-power normalization.
inline double kernel_eval(const Kernel& k, double u, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kernel_eval: bandwidth must be positive");
    return k(u / bandwidth);
}

inline double kernel_eval(const Kernel& k, std::span<const double> u, double bandwidth) {
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kernel_eval: bandwidth must be positive");
    return k(euclidean_norm(u) / bandwidth);
}

/// Seed plus stream id. Identical (seed, stream) reproduces identical draws;
/// parallel work partitions by stream id, never by sharing one generator.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Deterministic random stream. The raw engine is mt19937_64 (portable
/// sequence); uniform and normal variates are derived by hand so that the
/// produced doubles do not depend on the standard library's distribution
/// implementations.
class Rng {
public:
    explicit Rng(RngSeed s) : Rng(s.seed, s.stream) {}
    Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        eng_.seed(seq);
    }

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::uniform_index: n must be positive");
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace tl2
