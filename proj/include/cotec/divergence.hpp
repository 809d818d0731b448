#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotec/tensor.hpp"

namespace cotec {

enum class DivKind {
    SquaredEuclidean,
    GeneralizedKL,
    L1,
    CustomBregman,
    HilbertianCPD,
};

/// Scalar divergence family together with its optimal-representative rule.
/// Construct through the factory functions; from_token() covers the
/// command-line names.
struct DivergenceSpec {
    DivKind kind = DivKind::SquaredEuclidean;
    std::string token = "sqeuclidean";

    // GeneralizedKL: inputs must stay >= kl_eps.
    double kl_eps = 1e-6;

    // CustomBregman: strictly convex f and its derivative on [dom_lo, dom_hi].
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    double dom_lo = 0.0;
    double dom_hi = 0.0;

    // HilbertianCPD: conditionally positive definite kernel C(x, y).
    std::function<double(double, double)> kernel;

    bool is_bregman() const {
        return kind == DivKind::SquaredEuclidean ||
               kind == DivKind::GeneralizedKL || kind == DivKind::CustomBregman;
    }

    static DivergenceSpec squared_euclidean() {
        DivergenceSpec s;
        s.kind = DivKind::SquaredEuclidean;
        s.token = "sqeuclidean";
        return s;
    }

    static DivergenceSpec generalized_kl(double eps = 1e-6) {
        if (!(eps > 0.0))
            throw std::invalid_argument("generalized_kl: eps must be > 0");
        DivergenceSpec s;
        s.kind = DivKind::GeneralizedKL;
        s.token = "kl";
        s.kl_eps = eps;
        return s;
    }

    static DivergenceSpec l1() {
        DivergenceSpec s;
        s.kind = DivKind::L1;
        s.token = "l1";
        return s;
    }

    /// Caller asserts f is strictly convex on [lo, hi]; convexity is
    /// spot-checked by sampling the sign of a finite-difference f''.
    static DivergenceSpec custom_bregman(std::function<double(double)> f,
                                         std::function<double(double)> fprime,
                                         double lo, double hi) {
        if (!(lo < hi))
            throw std::invalid_argument("custom_bregman: empty domain");
        DivergenceSpec s;
        s.kind = DivKind::CustomBregman;
        s.token = "custom";
        s.f = std::move(f);
        s.fprime = std::move(fprime);
        s.dom_lo = lo;
        s.dom_hi = hi;
        const double h = (hi - lo) * 1e-5;
        for (int i = 1; i < 32; ++i) {
            const double x = lo + (hi - lo) * i / 32.0;
            const double second = (s.fprime(x + h) - s.fprime(x - h)) / (2 * h);
            if (!(second > 0.0))
                throw std::invalid_argument(
                    "custom_bregman: f'' not positive near x=" +
                    std::to_string(x));
        }
        return s;
    }

    static DivergenceSpec hilbertian(std::function<double(double, double)> c,
                                     std::string name) {
        DivergenceSpec s;
        s.kind = DivKind::HilbertianCPD;
        s.token = std::move(name);
        s.kernel = std::move(c);
        return s;
    }

    static DivergenceSpec kernel_absdiff() {
        return hilbertian([](double x, double y) { return -std::fabs(x - y); },
                          "kernel:absdiff");
    }

    static DivergenceSpec kernel_sqdiff() {
        return hilbertian(
            [](double x, double y) { return -(x - y) * (x - y); },
            "kernel:sqdiff");
    }

    static DivergenceSpec from_token(const std::string& token) {
        if (token == "sqeuclidean") return squared_euclidean();
        if (token == "kl") return generalized_kl();
        if (token == "l1") return l1();
        if (token == "kernel:absdiff") return kernel_absdiff();
        if (token == "kernel:sqdiff") return kernel_sqdiff();
        throw std::invalid_argument("unknown divergence token: " + token);
    }
};

/// Curvature constants sandwiching the squared distance by a Bregman
/// divergence on a bounded domain:
///   sigma_L * B_f(x,y) <= (x-y)^2 <= sigma_U * B_f(x,y).
struct CurvatureBounds {
    double sigma_lower = 0.0;
    double sigma_upper = 0.0;
};

inline double scalar_div(const DivergenceSpec& spec, double x, double y) {
    double v = 0.0;
    switch (spec.kind) {
        case DivKind::SquaredEuclidean:
            v = (x - y) * (x - y);
            break;
        case DivKind::GeneralizedKL:
            if (x < spec.kl_eps || y < spec.kl_eps)
                throw std::domain_error(
                    "generalized KL evaluated below the positivity floor " +
                    std::to_string(spec.kl_eps));
            v = x * std::log(x / y) - x + y;
            break;
        case DivKind::L1:
            v = std::fabs(x - y);
            break;
        case DivKind::CustomBregman:
            v = spec.f(x) - spec.f(y) - spec.fprime(y) * (x - y);
            break;
        case DivKind::HilbertianCPD:
            v = -spec.kernel(x, y) +
                0.5 * (spec.kernel(x, x) + spec.kernel(y, y));
            break;
    }
    if (v < 0.0) {
        if (v < -1e-12)
            throw std::domain_error(
                "divergence negative beyond round-off: " + std::to_string(v));
        v = 0.0;
    }
    return v;
}

/// Separable tensor divergence: elementwise sum of scalar divergences.
inline double tensor_div(const DivergenceSpec& spec, const DenseTensor& a,
                         const DenseTensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("tensor_div: shape mismatch (" +
                                    a.shape().to_string() + " vs " +
                                    b.shape().to_string() + ")");
    double sum = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i)
        sum += scalar_div(spec, da[i], db[i]);
    return sum;
}

namespace div_detail {

inline double weighted_mean(std::span<const double> values,
                            std::span<const double> weights) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        num += w * values[i];
        den += w;
    }
    return num / den;
}

/// Weighted lower median: the smallest value whose cumulative weight
/// reaches half the total. Ties in value are kept in input order so the
/// result is deterministic.
inline double weighted_lower_median(std::span<const double> values,
                                    std::span<const double> weights) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return values[a] < values[b];
                     });
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        total += weights.empty() ? 1.0 : weights[i];
    double acc = 0.0;
    for (std::size_t idx : order) {
        acc += weights.empty() ? 1.0 : weights[idx];
        if (acc * 2.0 >= total) return values[idx];
    }
    return values[order.back()];
}

}  // namespace div_detail

/// Optimal scalar representative of a weighted value set under the
/// divergence: the weighted mean for Bregman kinds, the weighted lower
/// median for L1. For CPD kernels the true representative lives in feature
/// space; the arithmetic mean is returned as a scalar marker.
inline double representative(const DivergenceSpec& spec,
                             std::span<const double> values,
                             std::span<const double> weights = {}) {
    if (values.empty())
        throw std::invalid_argument("representative: empty value list");
    if (!weights.empty() && weights.size() != values.size())
        throw std::invalid_argument("representative: weight length mismatch");
    for (double w : weights)
        if (!(w > 0.0))
            throw std::invalid_argument("representative: weights must be > 0");
    switch (spec.kind) {
        case DivKind::L1:
            return div_detail::weighted_lower_median(values, weights);
        case DivKind::SquaredEuclidean:
        case DivKind::GeneralizedKL:
        case DivKind::CustomBregman:
        case DivKind::HilbertianCPD:
            return div_detail::weighted_mean(values, weights);
    }
    return 0.0;  // unreachable
}

/// Curvature bounds for generalized KL (f = x log x, f'' = 1/x) on the
/// interval [data_min, data_max]: sigma_L = 2*data_min, sigma_U = 2*data_max.
inline CurvatureBounds kl_curvature_bounds(double data_min, double data_max) {
    if (!(data_min > 0.0))
        throw std::invalid_argument("kl_curvature_bounds: data_min must be > 0");
    if (!(data_min <= data_max))
        throw std::invalid_argument(
            "kl_curvature_bounds: need data_min <= data_max");
    return CurvatureBounds{2.0 * data_min, 2.0 * data_max};
}

}  // namespace cotec
