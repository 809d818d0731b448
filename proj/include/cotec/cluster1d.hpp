#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotec/divergence.hpp"
#include "cotec/rng.hpp"

namespace cotec {

/// n flat vectors of equal length d. Divergence between points is the
/// elementwise sum of scalar divergences.
class PointSet {
public:
    PointSet(std::size_t n, std::size_t dim)
        : n_(n), dim_(dim), data_(n * dim, 0.0) {
        if (n == 0 || dim == 0)
            throw std::invalid_argument("PointSet: empty point set");
    }

    static PointSet from_vectors(const std::vector<std::vector<double>>& vecs) {
        if (vecs.empty())
            throw std::invalid_argument("PointSet: no points");
        PointSet ps(vecs.size(), vecs.front().size());
        for (std::size_t i = 0; i < vecs.size(); ++i) {
            if (vecs[i].size() != ps.dim_)
                throw std::invalid_argument(
                    "PointSet: point " + std::to_string(i) +
                    " has inconsistent length");
            std::copy(vecs[i].begin(), vecs[i].end(),
                      ps.data_.begin() + static_cast<std::ptrdiff_t>(i * ps.dim_));
        }
        return ps;
    }

    static PointSet from_scalars(const std::vector<double>& values) {
        PointSet ps(values.size(), 1);
        std::copy(values.begin(), values.end(), ps.data_.begin());
        return ps;
    }

    std::size_t size() const { return n_; }
    std::size_t dim() const { return dim_; }
    std::span<const double> point(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    double& at(std::size_t i, std::size_t c) { return data_[i * dim_ + c]; }

private:
    std::size_t n_;
    std::size_t dim_;
    std::vector<double> data_;
};

inline double point_div(const DivergenceSpec& spec, std::span<const double> a,
                        std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c)
        sum += scalar_div(spec, a[c], b[c]);
    return sum;
}

/// Cluster labels for n points; labels lie in [0, k). Clusters may be
/// empty (the enumeration convention allows fewer than k used blocks).
struct Assignment {
    std::vector<int> labels;
    int k = 1;

    void validate() const {
        if (k < 1) throw std::invalid_argument("Assignment: k must be >= 1");
        for (int label : labels)
            if (label < 0 || label >= k)
                throw std::invalid_argument("Assignment: label out of range");
    }

    std::vector<std::size_t> cluster_sizes() const {
        std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
        for (int label : labels) ++sizes[static_cast<std::size_t>(label)];
        return sizes;
    }
};

/// Relabels clusters in order of first appearance; canonical form for
/// comparing assignments up to cluster renaming.
inline std::vector<int> canonical_labels(const std::vector<int>& labels) {
    std::vector<int> out(labels.size());
    std::vector<int> remap;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int label = labels[i];
        int found = -1;
        for (std::size_t r = 0; r < remap.size(); ++r)
            if (remap[r] == label) {
                found = static_cast<int>(r);
                break;
            }
        if (found < 0) {
            found = static_cast<int>(remap.size());
            remap.push_back(label);
        }
        out[i] = found;
    }
    return out;
}

enum class Seeding { Uniform, DSquared };
enum class Refine { None, Lloyd };

struct ClusterConfig {
    int k = 1;
    Seeding seeding = Seeding::DSquared;
    Refine refine = Refine::Lloyd;
    int restarts = 1;
    int max_iters = 100;
    double tol = 1e-9;
    std::uint64_t rng_seed = 0;

    void validate(std::size_t n) const {
        if (k < 1) throw std::invalid_argument("ClusterConfig: k must be >= 1");
        if (static_cast<std::size_t>(k) > n)
            throw std::invalid_argument("ClusterConfig: k = " +
                                        std::to_string(k) + " exceeds n = " +
                                        std::to_string(n));
        if (restarts < 1)
            throw std::invalid_argument("ClusterConfig: restarts must be >= 1");
        if (max_iters < 1)
            throw std::invalid_argument("ClusterConfig: max_iters must be >= 1");
        if (tol < 0.0)
            throw std::invalid_argument("ClusterConfig: tol must be >= 0");
    }
};

using Centers = std::vector<std::vector<double>>;

/// k distinct indices drawn uniformly without replacement; centers are
/// copies of those points.
inline Centers seed_uniform(const PointSet& ps, int k, Rng& rng) {
    const std::size_t n = ps.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("seed_uniform: need 1 <= k <= n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Centers centers;
    centers.reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) {
        const std::size_t pick =
            static_cast<std::size_t>(t) + rng.uniform_index(n - static_cast<std::size_t>(t));
        std::swap(idx[static_cast<std::size_t>(t)], idx[pick]);
        auto p = ps.point(idx[static_cast<std::size_t>(t)]);
        centers.emplace_back(p.begin(), p.end());
    }
    return centers;
}

/// Distance-proportional seeding: first center uniform, each next center
/// drawn with probability proportional to the divergence to its nearest
/// chosen center. If every remaining distance is zero the draw falls back
/// to uniform among unchosen points.
inline Centers seed_dsq(const PointSet& ps, int k, const DivergenceSpec& spec,
                        Rng& rng) {
    const std::size_t n = ps.size();
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("seed_dsq: need 1 <= k <= n");

    std::vector<bool> chosen(n, false);
    Centers centers;
    centers.reserve(static_cast<std::size_t>(k));

    const std::size_t first = rng.uniform_index(n);
    chosen[first] = true;
    {
        auto p = ps.point(first);
        centers.emplace_back(p.begin(), p.end());
    }

    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i)
        dist[i] = point_div(spec, ps.point(i), centers.back());

    for (int t = 1; t < k; ++t) {
        double total = 0.0;
        for (double d : dist) total += d;
        std::size_t pick = n;
        if (total > 0.0) {
            const double u = rng.uniform01() * total;
            double acc = 0.0;
            std::size_t last_positive = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (dist[i] <= 0.0) continue;
                last_positive = i;
                acc += dist[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) pick = last_positive;  // guard fp edge at u ~ total
        } else {
            // all remaining distances zero: uniform among unchosen points
            std::size_t unchosen = 0;
            for (std::size_t i = 0; i < n; ++i) unchosen += chosen[i] ? 0 : 1;
            std::size_t want = rng.uniform_index(unchosen);
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) continue;
                if (want == 0) {
                    pick = i;
                    break;
                }
                --want;
            }
        }
        chosen[pick] = true;
        auto p = ps.point(pick);
        centers.emplace_back(p.begin(), p.end());
        for (std::size_t i = 0; i < n; ++i)
            dist[i] = std::min(dist[i], point_div(spec, ps.point(i),
                                                  centers.back()));
    }
    return centers;
}

namespace cluster_detail {

/// Assigns every point to its divergence-minimizing center (data point
/// first, center second). Ties break to the lowest cluster index.
inline std::pair<Assignment, double> assign_to_centers(
    const PointSet& ps, const Centers& centers, const DivergenceSpec& spec) {
    Assignment out;
    out.k = static_cast<int>(centers.size());
    out.labels.resize(ps.size());
    double objective = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = point_div(spec, ps.point(i), centers[c]);
            if (d < best) {
                best = d;
                best_c = static_cast<int>(c);
            }
        }
        out.labels[i] = best_c;
        objective += best;
    }
    return {std::move(out), objective};
}

}  // namespace cluster_detail

struct LloydResult {
    Assignment assignment;
    Centers centers;
    double objective = 0.0;
    int iters = 0;
    std::vector<double> trace;  // objective after each half-step
};

/// Alternating minimization: assign each point to the nearest center,
/// recompute centers coordinatewise via representative(). Empty clusters
/// are repaired by reseeding the center at the point farthest from its
/// current center; the repaired solution is re-evaluated, so the
/// objective sequence stays nonincreasing.
inline LloydResult lloyd_refine(const PointSet& ps, const Centers& init_centers,
                                const DivergenceSpec& spec, int max_iters,
                                double tol) {
    if (init_centers.empty())
        throw std::invalid_argument("lloyd_refine: no initial centers");
    const std::size_t k = init_centers.size();
    Centers centers = init_centers;
    Assignment labels;
    int iters = 0;
    std::vector<double> trace;

    for (int iter = 0; iter < max_iters; ++iter) {
        auto [assigned, j_before] =
            cluster_detail::assign_to_centers(ps, centers, spec);
        labels = std::move(assigned);
        trace.push_back(j_before);

        // repair empty clusters: move the globally worst-fit point into
        // each empty cluster (never draining a singleton)
        auto sizes = labels.cluster_sizes();
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] > 0) continue;
            double worst = -1.0;
            std::size_t worst_i = ps.size();
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const auto owner = static_cast<std::size_t>(labels.labels[i]);
                if (sizes[owner] < 2) continue;
                const double d = point_div(spec, ps.point(i), centers[owner]);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            if (worst_i == ps.size()) continue;  // all survivors are singletons
            --sizes[static_cast<std::size_t>(labels.labels[worst_i])];
            labels.labels[worst_i] = static_cast<int>(c);
            ++sizes[c];
            centers[c].assign(ps.point(worst_i).begin(),
                              ps.point(worst_i).end());
        }

        // center update, coordinatewise optimal representative
        std::vector<std::vector<std::size_t>> members(k);
        for (std::size_t i = 0; i < ps.size(); ++i)
            members[static_cast<std::size_t>(labels.labels[i])].push_back(i);
        for (std::size_t c = 0; c < k; ++c) {
            if (members[c].empty()) continue;
            std::vector<double> column(members[c].size());
            for (std::size_t d = 0; d < ps.dim(); ++d) {
                for (std::size_t t = 0; t < members[c].size(); ++t)
                    column[t] = ps.point(members[c][t])[d];
                centers[c][d] = representative(spec, column);
            }
        }

        double j_after = 0.0;
        for (std::size_t i = 0; i < ps.size(); ++i)
            j_after += point_div(spec, ps.point(i),
                                 centers[static_cast<std::size_t>(labels.labels[i])]);
        trace.push_back(j_after);

        iters = iter + 1;
        if (j_before - j_after <= tol * std::fabs(j_before)) break;
    }

    // final assignment pass so no point can improve against the returned
    // centers; this only ever lowers the objective
    auto [final_labels, final_j] =
        cluster_detail::assign_to_centers(ps, centers, spec);
    trace.push_back(final_j);
    return LloydResult{std::move(final_labels), std::move(centers), final_j,
                       iters, std::move(trace)};
}

struct KernelKmeansResult {
    Assignment assignment;
    double objective = 0.0;
    int iters = 0;
    std::vector<double> trace;  // objective after each iteration
};

namespace cluster_detail {

/// Centered kernel Gram matrix built from a CPD kernel, summed over
/// coordinates: K(x,y) = 1/2 (C(x,y) - C(x,a) - C(y,a) + C(a,a)) with the
/// first point as the anchor a. Feature-space distances computed from this
/// Gram matrix equal the separable Hilbertian divergence.
inline std::vector<double> centered_gram(const PointSet& ps,
                                         const DivergenceSpec& spec) {
    const std::size_t n = ps.size();
    std::vector<double> gram(n * n, 0.0);
    auto anchor = ps.point(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double sum = 0.0;
            auto pi = ps.point(i);
            auto pj = ps.point(j);
            for (std::size_t c = 0; c < ps.dim(); ++c) {
                const double a = anchor[c];
                sum += 0.5 * (spec.kernel(pi[c], pj[c]) -
                              spec.kernel(pi[c], a) - spec.kernel(pj[c], a) +
                              spec.kernel(a, a));
            }
            gram[i * n + j] = sum;
            gram[j * n + i] = sum;
        }
    }
    return gram;
}

/// Lloyd-style iterations in feature space from an initial assignment.
inline KernelKmeansResult kernel_iterate(const PointSet& ps,
                                         Assignment labels,
                                         const DivergenceSpec& spec,
                                         int max_iters, double tol) {
    const std::size_t n = ps.size();
    const std::size_t k = static_cast<std::size_t>(labels.k);
    const std::vector<double> gram = centered_gram(ps, spec);
    auto g = [&](std::size_t i, std::size_t j) { return gram[i * n + j]; };

    // point-to-mean distances for the current composition:
    //   K(i,i) - 2/|c| sum_{y in c} K(i,y) + 1/|c|^2 sum_{y,z in c} K(y,z)
    std::vector<double> cross(n * k), self(k);
    std::vector<std::size_t> sizes(k);
    auto recompute_stats = [&]() {
        std::fill(cross.begin(), cross.end(), 0.0);
        std::fill(self.begin(), self.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i)
            ++sizes[static_cast<std::size_t>(labels.labels[i])];
        for (std::size_t i = 0; i < n; ++i) {
            const auto ci = static_cast<std::size_t>(labels.labels[i]);
            for (std::size_t j = 0; j < n; ++j) {
                const auto cj = static_cast<std::size_t>(labels.labels[j]);
                cross[j * k + ci] += g(i, j);
                if (ci == cj) self[ci] += g(i, j);
            }
        }
    };
    auto dist_to = [&](std::size_t i, std::size_t c) {
        const double sz = static_cast<double>(sizes[c]);
        return g(i, i) - 2.0 * cross[i * k + c] / sz +
               self[c] / (sz * sz);
    };
    auto objective = [&]() {
        double j_total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            j_total += std::max(
                0.0, dist_to(i, static_cast<std::size_t>(labels.labels[i])));
        return j_total;
    };

    recompute_stats();
    double j_prev = objective();
    int iters = 0;
    std::vector<double> trace{j_prev};
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        std::vector<int> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = labels.labels[i];
            for (std::size_t c = 0; c < k; ++c) {
                if (sizes[c] == 0) continue;
                const double d = dist_to(i, c);
                if (d < best) {
                    best = d;
                    best_c = static_cast<int>(c);
                }
            }
            next[i] = best_c;
            changed = changed || next[i] != labels.labels[i];
        }
        std::vector<std::size_t> next_sizes(k, 0);
        for (int label : next) ++next_sizes[static_cast<std::size_t>(label)];

        // empty-cluster repair: steal the worst-fit point (by distance to
        // its new cluster's current mean) from a non-singleton cluster
        for (std::size_t c = 0; c < k; ++c) {
            if (next_sizes[c] > 0) continue;
            double worst = -1.0;
            std::size_t worst_i = n;
            for (std::size_t i = 0; i < n; ++i) {
                const auto owner = static_cast<std::size_t>(next[i]);
                if (next_sizes[owner] < 2 || sizes[owner] == 0) continue;
                const double d = dist_to(i, owner);
                if (d > worst) {
                    worst = d;
                    worst_i = i;
                }
            }
            if (worst_i == n) continue;
            --next_sizes[static_cast<std::size_t>(next[worst_i])];
            next[worst_i] = static_cast<int>(c);
            ++next_sizes[c];
            changed = true;
        }

        labels.labels = std::move(next);
        recompute_stats();
        const double j_now = objective();
        trace.push_back(j_now);
        iters = iter + 1;
        if (!changed || j_prev - j_now <= tol * std::fabs(j_prev)) {
            j_prev = j_now;
            break;
        }
        j_prev = j_now;
    }
    return KernelKmeansResult{std::move(labels), j_prev, iters,
                              std::move(trace)};
}

}  // namespace cluster_detail

/// Kernel k-means for a CPD kernel divergence: distance-proportional
/// seeding on the Hilbertian metric, then feature-space iterations.
/// Returns the assignment only; representatives stay implicit.
inline KernelKmeansResult kernel_kmeans(const PointSet& ps, int k,
                                        const DivergenceSpec& spec,
                                        int max_iters, double tol, Rng& rng) {
    if (spec.kind != DivKind::HilbertianCPD)
        throw std::invalid_argument("kernel_kmeans: spec must be a CPD kernel");
    Centers seeds = seed_dsq(ps, k, spec, rng);
    auto [init, j0] = cluster_detail::assign_to_centers(ps, seeds, spec);
    (void)j0;
    return cluster_detail::kernel_iterate(ps, std::move(init), spec, max_iters,
                                          tol);
}

struct Cluster1dResult {
    Assignment assignment;
    std::optional<Centers> centers;  // absent for kernel k-means
    double objective = 0.0;
    int iters = 0;
    int best_restart = 0;
};

/// Runs the configured seeding (plus optional refinement) cfg.restarts
/// times on independent substreams and keeps the run with the lowest
/// objective; ties break to the earliest restart.
inline Cluster1dResult cluster_1d(const PointSet& ps, const ClusterConfig& cfg,
                                  const DivergenceSpec& spec) {
    cfg.validate(ps.size());
    Cluster1dResult best;
    bool have_best = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        Rng rng(derive_seed(cfg.rng_seed, rng_tag::restart,
                            static_cast<std::uint64_t>(r)));
        Centers seeds = cfg.seeding == Seeding::Uniform
                            ? seed_uniform(ps, cfg.k, rng)
                            : seed_dsq(ps, cfg.k, spec, rng);
        Cluster1dResult run;
        run.best_restart = r;
        if (cfg.refine == Refine::None) {
            auto [labels, objective] =
                cluster_detail::assign_to_centers(ps, seeds, spec);
            run.assignment = std::move(labels);
            run.centers = std::move(seeds);
            run.objective = objective;
            run.iters = 0;
        } else if (spec.kind == DivKind::HilbertianCPD) {
            auto [init, j0] =
                cluster_detail::assign_to_centers(ps, seeds, spec);
            (void)j0;
            auto res = cluster_detail::kernel_iterate(
                ps, std::move(init), spec, cfg.max_iters, cfg.tol);
            run.assignment = std::move(res.assignment);
            run.objective = res.objective;
            run.iters = res.iters;
        } else {
            auto res = lloyd_refine(ps, seeds, spec, cfg.max_iters, cfg.tol);
            run.assignment = std::move(res.assignment);
            run.centers = std::move(res.centers);
            run.objective = res.objective;
            run.iters = res.iters;
        }
        if (!have_best || run.objective < best.objective) {
            best = std::move(run);
            have_best = true;
        }
    }
    return best;
}

}  // namespace cotec
