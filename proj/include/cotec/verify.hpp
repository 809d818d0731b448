#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotec/cluster1d.hpp"
#include "cotec/divergence.hpp"
#include "cotec/rng.hpp"
#include "cotec/tenclus.hpp"
#include "cotec/tensor.hpp"

namespace cotec {

/// Thrown when an exhaustive enumeration would exceed its evaluation
/// budget; carries the combination count that was refused.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(unsigned long long count, unsigned long long budget)
        : std::runtime_error("enumeration refused: " + std::to_string(count) +
                             " combinations exceed the budget of " +
                             std::to_string(budget)),
          count_(count),
          budget_(budget) {}
    unsigned long long count() const { return count_; }
    unsigned long long budget() const { return budget_; }

private:
    unsigned long long count_;
    unsigned long long budget_;
};

inline constexpr unsigned long long kDefaultEnumerationBudget = 10'000'000ULL;

// ---------------------------------------------------------------------------
// Set-partition enumeration via restricted growth strings
// ---------------------------------------------------------------------------

/// Number of partitions of n items into at most max_blocks nonempty blocks:
/// the Stirling sum  S(n,1) + ... + S(n,min(n,max_blocks)). Saturates at
/// ULLONG_MAX on overflow.
inline unsigned long long partition_count(std::size_t n,
                                          std::size_t max_blocks) {
    if (n == 0 || max_blocks == 0) return 0;
    const std::size_t kmax = std::min(n, max_blocks);
    // Stirling second kind by recurrence S(n,k) = k S(n-1,k) + S(n-1,k-1)
    std::vector<unsigned long long> row(kmax + 1, 0);
    row[std::min<std::size_t>(1, kmax)] = 1;  // S(1,1) = 1
    const unsigned long long cap =
        std::numeric_limits<unsigned long long>::max();
    for (std::size_t i = 2; i <= n; ++i) {
        for (std::size_t k = kmax; k >= 1; --k) {
            unsigned long long v = row[k - 1];
            if (row[k] != 0) {
                if (row[k] > cap / k) return cap;
                const unsigned long long t = row[k] * k;
                if (v > cap - t) return cap;
                v += t;
            }
            row[k] = v;
        }
        row[0] = 0;
    }
    unsigned long long total = 0;
    for (std::size_t k = 1; k <= kmax; ++k) {
        if (row[k] > cap - total) return cap;
        total += row[k];
    }
    return total;
}

/// Visits every partition of {0..n-1} into at most max_blocks blocks
/// exactly once, in lexicographic order of the restricted growth string.
/// The visited vector holds the block label of each item.
template <typename Visitor>
void for_each_partition(std::size_t n, std::size_t max_blocks,
                        Visitor&& visit) {
    if (n == 0 || max_blocks == 0) return;
    std::vector<int> labels(n, 0);
    std::vector<int> prefix_max(n, 0);  // max label over items 0..i
    const int cap = static_cast<int>(std::min(n, max_blocks)) - 1;
    for (;;) {
        visit(static_cast<const std::vector<int>&>(labels));
        // advance to the next restricted growth string
        std::size_t i = n;
        while (i-- > 1) {
            const int limit = std::min(prefix_max[i - 1] + 1, cap);
            if (labels[i] < limit) break;
        }
        if (i == 0) return;
        ++labels[i];
        prefix_max[i] = std::max(prefix_max[i - 1], labels[i]);
        for (std::size_t t = i + 1; t < n; ++t) {
            labels[t] = 0;
            prefix_max[t] = prefix_max[t - 1];
        }
    }
}

// ---------------------------------------------------------------------------
// Exact oracles
// ---------------------------------------------------------------------------

struct Oracle1dResult {
    Assignment assignment;
    double objective = 0.0;
};

namespace verify_detail {

inline double cluster_cost(const PointSet& ps,
                           const std::vector<std::size_t>& members,
                           const DivergenceSpec& spec) {
    std::vector<double> column(members.size());
    std::vector<double> rep(ps.dim());
    for (std::size_t d = 0; d < ps.dim(); ++d) {
        for (std::size_t t = 0; t < members.size(); ++t)
            column[t] = ps.point(members[t])[d];
        rep[d] = representative(spec, column);
    }
    double cost = 0.0;
    for (std::size_t t = 0; t < members.size(); ++t)
        cost += point_div(spec, ps.point(members[t]), rep);
    return cost;
}

/// Feature-space cost of one cluster for a CPD kernel:
/// sum_i K(i,i) - (1/|c|) sum_{i,j} K(i,j) on the centered Gram matrix.
inline double kernel_cluster_cost(const std::vector<double>& gram,
                                  std::size_t n,
                                  const std::vector<std::size_t>& members) {
    double diag = 0.0, all = 0.0;
    for (std::size_t i : members) {
        diag += gram[i * n + i];
        for (std::size_t j : members) all += gram[i * n + j];
    }
    return diag - all / static_cast<double>(members.size());
}

}  // namespace verify_detail

/// Exact optimum of the 1D clustering objective by full enumeration.
/// Scalar data under squared Euclidean or L1 takes the dynamic-programming
/// fast path (optimal clusters are contiguous on sorted scalars).
inline Oracle1dResult oracle_1d_enumerate(
    const PointSet& ps, int k, const DivergenceSpec& spec,
    unsigned long long budget = kDefaultEnumerationBudget) {
    const std::size_t n = ps.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("oracle_1d: need 1 <= k <= n");
    const unsigned long long count =
        partition_count(n, static_cast<std::size_t>(k));
    if (count > budget) throw BudgetExceeded(count, budget);

    const bool kernel = spec.kind == DivKind::HilbertianCPD;
    std::vector<double> gram;
    if (kernel) gram = cluster_detail::centered_gram(ps, spec);

    Oracle1dResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for_each_partition(n, static_cast<std::size_t>(k),
                       [&](const std::vector<int>& labels) {
        int blocks = 0;
        for (int label : labels) blocks = std::max(blocks, label + 1);
        std::vector<std::vector<std::size_t>> members(
            static_cast<std::size_t>(blocks));
        for (std::size_t i = 0; i < n; ++i)
            members[static_cast<std::size_t>(labels[i])].push_back(i);
        double j_total = 0.0;
        for (const auto& c : members)
            j_total += kernel
                           ? verify_detail::kernel_cluster_cost(gram, n, c)
                           : verify_detail::cluster_cost(ps, c, spec);
        if (j_total < best.objective) {
            best.objective = j_total;
            best.assignment.labels = labels;
            best.assignment.k = k;
        }
    });
    return best;
}

/// O(k n^2) dynamic program over sorted scalars; exact for divergences
/// whose optimal 1D clusters are contiguous in sorted order (squared
/// Euclidean with mean representatives, L1 with medians).
inline Oracle1dResult kmeans_1d_dp(const std::vector<double>& values, int k,
                                   const DivergenceSpec& spec) {
    if (spec.kind != DivKind::SquaredEuclidean && spec.kind != DivKind::L1)
        throw std::invalid_argument(
            "kmeans_1d_dp: fast path covers sqeuclidean and l1 only");
    const std::size_t n = values.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("kmeans_1d_dp: need 1 <= k <= n");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return values[a] < values[b];
                     });
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = values[order[i]];

    std::vector<double> prefix(n + 1, 0.0), prefix_sq(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + x[i];
        prefix_sq[i + 1] = prefix_sq[i] + x[i] * x[i];
    }
    // cost of the sorted segment [lo, hi] around its own representative
    auto segment_cost = [&](std::size_t lo, std::size_t hi) {
        const double len = static_cast<double>(hi - lo + 1);
        if (spec.kind == DivKind::SquaredEuclidean) {
            const double s = prefix[hi + 1] - prefix[lo];
            const double sq = prefix_sq[hi + 1] - prefix_sq[lo];
            return std::max(0.0, sq - s * s / len);
        }
        const std::size_t mid = lo + (hi - lo) / 2;  // lower median
        const double med = x[mid];
        const double left = med * static_cast<double>(mid - lo + 1) -
                            (prefix[mid + 1] - prefix[lo]);
        const double right = (prefix[hi + 1] - prefix[mid + 1]) -
                             med * static_cast<double>(hi - mid);
        return left + right;
    };

    const auto ku = static_cast<std::size_t>(k);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(ku,
                                        std::vector<double>(n, inf));
    std::vector<std::vector<std::size_t>> cut(ku,
                                              std::vector<std::size_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i) dp[0][i] = segment_cost(0, i);
    for (std::size_t c = 1; c < ku; ++c) {
        for (std::size_t i = c; i < n; ++i) {
            for (std::size_t t = c; t <= i; ++t) {
                const double cand = dp[c - 1][t - 1] + segment_cost(t, i);
                if (cand < dp[c][i]) {
                    dp[c][i] = cand;
                    cut[c][i] = t;
                }
            }
        }
    }

    // backtrack; fewer effective clusters never beat more, so exactly-k
    // segments with k <= n realize the <=k optimum
    std::vector<int> sorted_labels(n, 0);
    std::size_t hi = n - 1;
    for (std::size_t c = ku; c-- > 1;) {
        const std::size_t lo = cut[c][hi];
        for (std::size_t i = lo; i <= hi; ++i)
            sorted_labels[i] = static_cast<int>(c);
        hi = lo - 1;
    }
    Oracle1dResult out;
    out.assignment.k = k;
    out.assignment.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.assignment.labels[order[i]] = sorted_labels[i];
    // recompute the objective through the shared representative rules so
    // downstream comparisons use one arithmetic path
    PointSet ps = PointSet::from_scalars(values);
    std::vector<std::vector<std::size_t>> members(ku);
    for (std::size_t i = 0; i < n; ++i)
        members[static_cast<std::size_t>(out.assignment.labels[i])].push_back(
            i);
    out.objective = 0.0;
    for (const auto& c : members)
        if (!c.empty())
            out.objective += verify_detail::cluster_cost(ps, c, spec);
    return out;
}

/// Exact 1D optimum; dispatches scalar sqeuclidean/L1 instances to the
/// dynamic program and everything else to enumeration.
inline Oracle1dResult oracle_1d_exact(
    const PointSet& ps, int k, const DivergenceSpec& spec,
    unsigned long long budget = kDefaultEnumerationBudget) {
    if (ps.dim() == 1 && (spec.kind == DivKind::SquaredEuclidean ||
                          spec.kind == DivKind::L1)) {
        std::vector<double> values(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) values[i] = ps.point(i)[0];
        return kmeans_1d_dp(values, k, spec);
    }
    return oracle_1d_enumerate(ps, k, spec, budget);
}

struct OracleResult {
    CoClustering clustering;
    double j_opt = 0.0;
    unsigned long long combinations = 0;
};

/// Exhaustive minimum of the tensor clustering objective: enumerates the
/// product of per-dimension partitions (at most k_j blocks each) and keeps
/// the first minimizer, which is the lexicographically smallest label
/// string among ties.
inline OracleResult oracle_optimal(
    const DenseTensor& a, const std::vector<int>& k, const DivergenceSpec& spec,
    unsigned long long budget = kDefaultEnumerationBudget) {
    const std::size_t m = a.order();
    if (k.size() != m)
        throw std::invalid_argument("oracle_optimal: cluster count list has " +
                                    std::to_string(k.size()) +
                                    " entries for an order-" +
                                    std::to_string(m) + " tensor");
    unsigned long long total = 1;
    for (std::size_t j = 0; j < m; ++j) {
        if (k[j] < 1 || static_cast<std::size_t>(k[j]) > a.shape().dim(j))
            throw std::invalid_argument(
                "oracle_optimal: need 1 <= k_j <= n_j on dimension " +
                std::to_string(j));
        const unsigned long long c = partition_count(
            a.shape().dim(j), static_cast<std::size_t>(k[j]));
        if (c != 0 &&
            total > std::numeric_limits<unsigned long long>::max() / c)
            total = std::numeric_limits<unsigned long long>::max();
        else
            total *= c;
    }
    if (total > budget) throw BudgetExceeded(total, budget);

    std::vector<Assignment> current(m);
    for (std::size_t j = 0; j < m; ++j) {
        current[j].k = k[j];
        current[j].labels.assign(a.shape().dim(j), 0);
    }
    std::vector<Assignment> best;
    double best_j = std::numeric_limits<double>::infinity();

    // nested enumeration, dimension 0 outermost
    auto recurse = [&](auto&& self, std::size_t j) -> void {
        if (j == m) {
            auto reps = block_representatives(a, current, spec);
            const double j_val =
                evaluate_objective(a, current, reps.means, spec);
            if (j_val < best_j) {
                best_j = j_val;
                best = current;
            }
            return;
        }
        for_each_partition(a.shape().dim(j), static_cast<std::size_t>(k[j]),
                           [&](const std::vector<int>& labels) {
                               current[j].labels = labels;
                               self(self, j + 1);
                           });
    };
    recurse(recurse, 0);

    OracleResult out;
    out.combinations = total;
    out.j_opt = best_j;
    out.clustering = make_coclustering(a, std::move(best), spec);
    return out;
}

// ---------------------------------------------------------------------------
// Projection-matrix machinery and identity checkers
// ---------------------------------------------------------------------------

/// Projection matrices P_j built from normalized cluster indicators,
/// P_j = Cbar_j Cbar_j^T; unclustered dimensions carry identity markers.
struct ProjectionSet {
    std::vector<Matrix> mats;
    std::vector<bool> clustered;

    static Matrix projection_from(const Assignment& assignment) {
        const std::size_t n = assignment.labels.size();
        auto sizes = assignment.cluster_sizes();
        Matrix p(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < n; ++t)
                if (assignment.labels[i] == assignment.labels[t])
                    p.at(i, t) = 1.0 / static_cast<double>(sizes[
                        static_cast<std::size_t>(assignment.labels[i])]);
        return p;
    }

    static ProjectionSet from_assignments(
        const Shape& shape, const std::vector<Assignment>& assignments) {
        ProjectionSet out;
        for (std::size_t j = 0; j < shape.order(); ++j) {
            out.mats.push_back(projection_from(assignments[j]));
            out.clustered.push_back(true);
        }
        return out;
    }

    /// Only dimension `dim` clustered; every other mode gets the identity.
    static ProjectionSet single_dimension(const Shape& shape, std::size_t dim,
                                          const Assignment& assignment) {
        ProjectionSet out;
        for (std::size_t j = 0; j < shape.order(); ++j) {
            if (j == dim) {
                out.mats.push_back(projection_from(assignment));
                out.clustered.push_back(true);
            } else {
                out.mats.push_back(Matrix::identity(shape.dim(j)));
                out.clustered.push_back(false);
            }
        }
        return out;
    }

    DenseTensor apply(const DenseTensor& a) const {
        return multilinear_multiply(mats, a);
    }

    /// Worst deviation from symmetry, idempotence and Cbar^T Cbar = I.
    double max_projection_residual() const {
        double worst = 0.0;
        for (std::size_t j = 0; j < mats.size(); ++j) {
            const Matrix& p = mats[j];
            const Matrix pp = matmul(p, p);
            for (std::size_t r = 0; r < p.rows; ++r)
                for (std::size_t c = 0; c < p.cols; ++c) {
                    worst = std::max(worst,
                                     std::fabs(p.at(r, c) - p.at(c, r)));
                    worst = std::max(worst,
                                     std::fabs(pp.at(r, c) - p.at(r, c)));
                }
        }
        return worst;
    }
};

/// Numeric check of the Pythagorean identity
///   ||(P,S).A + (Pperp,R).B||^2 = ||(P,S).A||^2 + ||(Pperp,R).B||^2
/// on randomized splits, second tensors and clusterings R. Returns the
/// worst relative residual observed.
inline double check_pythagorean(const DenseTensor& a, const ProjectionSet& proj,
                                Rng& rng, int trials = 100) {
    const std::size_t m = a.order();
    if (proj.mats.size() != m)
        throw std::invalid_argument("check_pythagorean: projection count");
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t t = 1 + rng.uniform_index(m);
        // first t modes orthogonal-split, remaining modes random projections
        MatrixList first(proj.mats.begin(),
                         proj.mats.begin() + static_cast<std::ptrdiff_t>(t));
        MatrixList first_perp;
        for (std::size_t j = 0; j < t; ++j) {
            Matrix perp = Matrix::identity(proj.mats[j].rows);
            for (std::size_t i = 0; i < perp.data.size(); ++i)
                perp.data[i] -= proj.mats[j].data[i];
            first_perp.push_back(std::move(perp));
        }
        MatrixList lhs_rest, rhs_rest;
        for (std::size_t j = t; j < m; ++j) {
            lhs_rest.push_back(proj.mats[j]);
            Assignment random_clusters;
            const std::size_t nj = a.shape().dim(j);
            random_clusters.k = 1 + static_cast<int>(rng.uniform_index(nj));
            random_clusters.labels.resize(nj);
            for (auto& label : random_clusters.labels)
                label = static_cast<int>(rng.uniform_index(
                    static_cast<std::size_t>(random_clusters.k)));
            rhs_rest.push_back(ProjectionSet::projection_from(random_clusters));
        }
        std::vector<double> bdata(a.size());
        for (auto& v : bdata) v = rng.uniform01() * 2 - 1;
        DenseTensor b(a.shape(), std::move(bdata));

        MatrixList lhs_mats = first, rhs_mats = first_perp;
        lhs_mats.insert(lhs_mats.end(), lhs_rest.begin(), lhs_rest.end());
        rhs_mats.insert(rhs_mats.end(), rhs_rest.begin(), rhs_rest.end());
        DenseTensor term1 = multilinear_multiply(lhs_mats, a);
        DenseTensor term2 = multilinear_multiply(rhs_mats, b);
        const double sum_sq = inner_product(add(term1, term2),
                                            add(term1, term2));
        const double split_sq =
            inner_product(term1, term1) + inner_product(term2, term2);
        const double scale = std::max({1e-30, sum_sq, split_sq});
        worst = std::max(worst, std::fabs(sum_sq - split_sq) / scale);
    }
    return worst;
}

/// 2^ceil(log2 q) for integer q >= 1.
inline double pow2_ceil_log2(std::size_t q) {
    double p = 1.0;
    std::size_t reach = 1;
    while (reach < q) {
        reach *= 2;
        p *= 2.0;
    }
    return p;
}

struct BoundCheck {
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Checks the combination bound for the squared Frobenius objective: the
/// fully combined clustering loses at most a factor 2^ceil(log2 m) against
/// the worst single-dimension clustering,
///   ||A - Q.A||^2 <= 2^ceil(log2 m) * max_j ||A - Qj.A||^2 .
/// Non-power-of-two orders use the ceiling (identity-padded dimensions).
inline BoundCheck combination_bound_check(
    const DenseTensor& a, const std::vector<Assignment>& assignments) {
    tenclus_detail::validate_assignments(a.shape(), assignments);
    const std::size_t m = a.order();
    ProjectionSet full = ProjectionSet::from_assignments(a.shape(), assignments);
    DenseTensor res_full = subtract(a, full.apply(a));
    const double lhs = inner_product(res_full, res_full);

    double worst_single = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        ProjectionSet single =
            ProjectionSet::single_dimension(a.shape(), j, assignments[j]);
        DenseTensor res = subtract(a, single.apply(a));
        worst_single = std::max(worst_single, inner_product(res, res));
    }
    BoundCheck out;
    out.lhs = lhs;
    out.rhs = pow2_ceil_log2(m) * worst_single;
    out.pass = lhs <= out.rhs * (1.0 + 1e-9) + 1e-12;
    return out;
}

// ---------------------------------------------------------------------------
// Approximation factors
// ---------------------------------------------------------------------------

enum class BoundCase {
    SquaredEuclidean,   // p(m/t) = 2^ceil(log2 m/t)
    Metric,             // p(m/t) = 2 m/t
    Bregman,            // curvature ratio times the Euclidean factor
    HilbertianSeeding,  // Euclidean factor with the seeding alpha
};

/// Expected seeding guarantee for distance-proportional seeding with K
/// clusters: 8 (ln K + 2).
inline double seeding_alpha(std::size_t max_clusters) {
    return 8.0 * (std::log(static_cast<double>(max_clusters)) + 2.0);
}

/// Worst-case factor for the combined tensor clustering given a base
/// clusterer with guarantee alpha_t over t dimensions at a time.
inline double theoretical_bound(std::size_t m, std::size_t t, BoundCase which,
                                double alpha_t,
                                std::optional<CurvatureBounds> sigma = {}) {
    if (m < 1 || t < 1 || t > m)
        throw std::invalid_argument("theoretical_bound: need 1 <= t <= m");
    const std::size_t q = (m + t - 1) / t;
    switch (which) {
        case BoundCase::SquaredEuclidean:
        case BoundCase::HilbertianSeeding:
            return pow2_ceil_log2(q) * alpha_t;
        case BoundCase::Metric:
            return 2.0 * static_cast<double>(m) / static_cast<double>(t) *
                   alpha_t;
        case BoundCase::Bregman: {
            if (!sigma)
                throw std::invalid_argument(
                    "theoretical_bound: Bregman case needs curvature bounds");
            return sigma->sigma_upper / sigma->sigma_lower *
                   pow2_ceil_log2(q) * alpha_t;
        }
    }
    return 0.0;  // unreachable
}

inline BoundCase bound_case_for(const DivergenceSpec& spec) {
    switch (spec.kind) {
        case DivKind::SquaredEuclidean:
            return BoundCase::SquaredEuclidean;
        case DivKind::GeneralizedKL:
        case DivKind::CustomBregman:
            return BoundCase::Bregman;
        case DivKind::L1:
            return BoundCase::Metric;
        case DivKind::HilbertianCPD:
            return BoundCase::HilbertianSeeding;
    }
    return BoundCase::SquaredEuclidean;
}

/// Achieved-over-reference factor report. The reference is either an
/// exact optimum or the planted clustering's objective; a nonpositive
/// reference is flagged rather than divided by.
struct FactorReport {
    double j_achieved = 0.0;
    double j_reference = 0.0;
    double alpha_hat = 0.0;
    double theoretical = 0.0;
    bool reference_positive = false;
};

inline FactorReport empirical_factor(double j_achieved, double j_reference,
                                     double theoretical) {
    FactorReport out;
    out.j_achieved = j_achieved;
    out.j_reference = j_reference;
    out.theoretical = theoretical;
    out.reference_positive = j_reference > 0.0;
    out.alpha_hat = out.reference_positive
                        ? j_achieved / j_reference
                        : std::numeric_limits<double>::infinity();
    return out;
}

/// CoTeC with the exact 1D oracle substituted for every per-dimension
/// clustering (the alpha = 1 baseline of the combination bound checks).
inline CoClustering cotec_with_exact_1d(
    const DenseTensor& a, const std::vector<int>& k, const DivergenceSpec& spec,
    unsigned long long budget = kDefaultEnumerationBudget) {
    std::vector<Assignment> assignments(a.order());
    for (std::size_t j = 0; j < a.order(); ++j) {
        PointSet fibers = PointSet::from_vectors(fibers_along(a, j));
        assignments[j] = oracle_1d_exact(fibers, k[j], spec, budget).assignment;
    }
    return make_coclustering(a, std::move(assignments), spec);
}

}  // namespace cotec
