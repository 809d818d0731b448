#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotec/cluster1d.hpp"
#include "cotec/divergence.hpp"
#include "cotec/rng.hpp"
#include "cotec/tensor.hpp"

namespace cotec {

/// A tensor co-clustering: one assignment per dimension, the tensor of
/// block representatives, and the achieved objective.
struct CoClustering {
    std::vector<Assignment> assignments;
    DenseTensor means;
    double objective = 0.0;
    DivergenceSpec divergence;
    std::size_t empty_blocks = 0;  // informational; no entry maps to one
};

namespace tenclus_detail {

inline void validate_assignments(const Shape& shape,
                                 const std::vector<Assignment>& assignments) {
    if (assignments.size() != shape.order())
        throw std::invalid_argument(
            "assignments: got " + std::to_string(assignments.size()) +
            " dimensions for an order-" + std::to_string(shape.order()) +
            " tensor");
    for (std::size_t j = 0; j < assignments.size(); ++j) {
        assignments[j].validate();
        if (assignments[j].labels.size() != shape.dim(j))
            throw std::invalid_argument(
                "assignments: dimension " + std::to_string(j) + " has " +
                std::to_string(assignments[j].labels.size()) +
                " labels for extent " + std::to_string(shape.dim(j)));
    }
}

inline Shape means_shape(const std::vector<Assignment>& assignments) {
    std::vector<std::size_t> dims;
    dims.reserve(assignments.size());
    for (const auto& a : assignments)
        dims.push_back(static_cast<std::size_t>(a.k));
    return Shape(dims);
}

/// Flat index into the means tensor of the block containing entry `flat`.
/// Works one dimension at a time using the label lookup tables.
struct BlockIndexer {
    std::vector<std::size_t> entry_strides;   // strides of the data tensor
    std::vector<std::size_t> block_strides;   // strides of the means tensor
    std::vector<const int*> labels;
    std::vector<std::size_t> dims;

    BlockIndexer(const Shape& shape, const std::vector<Assignment>& assignments,
                 const Shape& means) {
        const std::size_t m = shape.order();
        entry_strides.resize(m);
        block_strides.resize(m);
        dims = shape.dims();
        std::size_t es = 1, bs = 1;
        for (std::size_t j = m; j-- > 0;) {
            entry_strides[j] = es;
            block_strides[j] = bs;
            es *= shape.dim(j);
            bs *= means.dim(j);
        }
        for (const auto& a : assignments) labels.push_back(a.labels.data());
    }

    std::size_t block_of(std::size_t flat) const {
        std::size_t block = 0;
        for (std::size_t j = 0; j < dims.size(); ++j) {
            const std::size_t ij = (flat / entry_strides[j]) % dims[j];
            block += block_strides[j] *
                     static_cast<std::size_t>(labels[j][ij]);
        }
        return block;
    }
};

}  // namespace tenclus_detail

struct BlockRepresentatives {
    DenseTensor means;
    std::vector<std::size_t> empty_blocks;  // flat indices into means
};

/// Per-block optimal representatives: the mean for Bregman kinds (and the
/// mean marker for CPD kernels), the median for L1. Blocks with no entries
/// get the global representative and are flagged, not fatal.
inline BlockRepresentatives block_representatives(
    const DenseTensor& a, const std::vector<Assignment>& assignments,
    const DivergenceSpec& spec) {
    tenclus_detail::validate_assignments(a.shape(), assignments);
    const Shape mshape = tenclus_detail::means_shape(assignments);
    tenclus_detail::BlockIndexer indexer(a.shape(), assignments, mshape);

    BlockRepresentatives out;
    const auto data = a.data();

    if (spec.kind == DivKind::L1) {
        std::vector<std::vector<double>> blocks(mshape.count());
        for (std::size_t f = 0; f < data.size(); ++f)
            blocks[indexer.block_of(f)].push_back(data[f]);
        const double global = representative(
            spec, std::vector<double>(data.begin(), data.end()));
        std::vector<double> means(mshape.count());
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (blocks[b].empty()) {
                means[b] = global;
                out.empty_blocks.push_back(b);
            } else {
                means[b] = representative(spec, blocks[b]);
            }
        }
        out.means = DenseTensor(mshape, std::move(means));
        return out;
    }

    std::vector<double> sums(mshape.count(), 0.0);
    std::vector<std::size_t> counts(mshape.count(), 0);
    double total = 0.0;
    for (std::size_t f = 0; f < data.size(); ++f) {
        const std::size_t b = indexer.block_of(f);
        sums[b] += data[f];
        ++counts[b];
        total += data[f];
    }
    const double global = total / static_cast<double>(data.size());
    std::vector<double> means(mshape.count());
    for (std::size_t b = 0; b < means.size(); ++b) {
        if (counts[b] == 0) {
            means[b] = global;
            out.empty_blocks.push_back(b);
        } else {
            means[b] = sums[b] / static_cast<double>(counts[b]);
        }
    }
    out.means = DenseTensor(mshape, std::move(means));
    return out;
}

/// J = d(A, reconstruction) where the reconstruction holds each entry's
/// block representative.
inline double evaluate_objective(const DenseTensor& a,
                                 const std::vector<Assignment>& assignments,
                                 const DenseTensor& means,
                                 const DivergenceSpec& spec) {
    tenclus_detail::validate_assignments(a.shape(), assignments);
    if (means.shape() != tenclus_detail::means_shape(assignments))
        throw std::invalid_argument(
            "evaluate_objective: means shape does not match cluster counts");
    tenclus_detail::BlockIndexer indexer(a.shape(), assignments, means.shape());
    const auto data = a.data();
    double j_total = 0.0;
    for (std::size_t f = 0; f < data.size(); ++f)
        j_total += scalar_div(spec, data[f], means[indexer.block_of(f)]);
    return j_total;
}

inline CoClustering make_coclustering(const DenseTensor& a,
                                      std::vector<Assignment> assignments,
                                      const DivergenceSpec& spec) {
    auto reps = block_representatives(a, assignments, spec);
    const double j = evaluate_objective(a, assignments, reps.means, spec);
    return CoClustering{std::move(assignments), std::move(reps.means), j, spec,
                        reps.empty_blocks.size()};
}

/// Combination tensor clustering: cluster the fibers of each dimension
/// independently, combine the per-dimension assignments, then compute the
/// block representatives. Dimension j draws from its own substream of the
/// configured seed, so the per-dimension results do not depend on the
/// order in which dimensions are processed.
inline CoClustering cotec(const DenseTensor& a,
                          const std::vector<ClusterConfig>& per_dim_cfg,
                          const DivergenceSpec& spec) {
    const std::size_t m = a.order();
    if (per_dim_cfg.size() != m)
        throw std::invalid_argument(
            "cotec: got " + std::to_string(per_dim_cfg.size()) +
            " configs for an order-" + std::to_string(m) + " tensor");
    std::vector<Assignment> assignments(m);
    for (std::size_t j = 0; j < m; ++j) {
        PointSet fibers = PointSet::from_vectors(fibers_along(a, j));
        ClusterConfig cfg = per_dim_cfg[j];
        cfg.rng_seed = derive_seed(cfg.rng_seed, rng_tag::dimension, j);
        assignments[j] = cluster_1d(fibers, cfg, spec).assignment;
    }
    return make_coclustering(a, std::move(assignments), spec);
}

struct SitecResult {
    CoClustering clustering;
    int sweeps = 0;
    std::vector<double> trace;  // objective after every half-step
};

/// Simultaneous refinement: sweep the dimensions in order, recomputing the
/// representatives and then reassigning one dimension's indices against
/// them. Stops when a full sweep improves the objective by less than tol
/// (relative); the terminating sweep is counted.
inline SitecResult sitec(const DenseTensor& a, const CoClustering& init,
                         const DivergenceSpec& spec, int max_iters,
                         double tol) {
    tenclus_detail::validate_assignments(a.shape(), init.assignments);
    const std::size_t m = a.order();
    std::vector<Assignment> labels = init.assignments;

    SitecResult out;
    out.trace.push_back(init.objective);
    double j_current = init.objective;
    DenseTensor means = init.means;

    const auto data = a.data();
    for (int sweep = 0; sweep < max_iters; ++sweep) {
        const double j_sweep_start = j_current;
        for (std::size_t j = 0; j < m; ++j) {
            // (i) representative update
            auto reps = block_representatives(a, labels, spec);
            means = std::move(reps.means);
            j_current = evaluate_objective(a, labels, means, spec);
            out.trace.push_back(j_current);

            // (ii) reassign dimension j: each index moves to the cluster
            // minimizing its fiber cost against the current representatives
            const std::size_t nj = a.shape().dim(j);
            const std::size_t kj = static_cast<std::size_t>(labels[j].k);
            std::vector<double> cost(nj * kj, 0.0);
            {
                tenclus_detail::BlockIndexer indexer(a.shape(), labels,
                                                     means.shape());
                const std::size_t estride = indexer.entry_strides[j];
                const std::size_t bstride = indexer.block_strides[j];
                for (std::size_t f = 0; f < data.size(); ++f) {
                    const std::size_t ij = (f / estride) % nj;
                    const std::size_t base =
                        indexer.block_of(f) -
                        bstride * static_cast<std::size_t>(labels[j].labels[ij]);
                    for (std::size_t c = 0; c < kj; ++c)
                        cost[ij * kj + c] += scalar_div(
                            spec, data[f], means[base + bstride * c]);
                }
            }
            for (std::size_t i = 0; i < nj; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int best_c = 0;
                for (std::size_t c = 0; c < kj; ++c) {
                    if (cost[i * kj + c] < best) {
                        best = cost[i * kj + c];
                        best_c = static_cast<int>(c);
                    }
                }
                labels[j].labels[i] = best_c;
            }

            // empty-cluster repair: move the worst-fit fiber into the
            // empty cluster; the immediate representative update restores
            // monotonicity
            auto sizes = labels[j].cluster_sizes();
            bool repaired = false;
            for (std::size_t c = 0; c < kj; ++c) {
                if (sizes[c] > 0) continue;
                double worst = -1.0;
                std::size_t worst_i = nj;
                for (std::size_t i = 0; i < nj; ++i) {
                    const auto owner =
                        static_cast<std::size_t>(labels[j].labels[i]);
                    if (sizes[owner] < 2) continue;
                    const double d = cost[i * kj + owner];
                    if (d > worst) {
                        worst = d;
                        worst_i = i;
                    }
                }
                if (worst_i == nj) continue;
                --sizes[static_cast<std::size_t>(labels[j].labels[worst_i])];
                labels[j].labels[worst_i] = static_cast<int>(c);
                ++sizes[c];
                repaired = true;
            }
            if (repaired) {
                auto reps2 = block_representatives(a, labels, spec);
                means = std::move(reps2.means);
            }
            j_current = evaluate_objective(a, labels, means, spec);
            out.trace.push_back(j_current);
        }
        out.sweeps = sweep + 1;
        if (j_sweep_start - j_current <= tol * std::fabs(j_sweep_start)) break;
    }

    // final representative refresh so the returned clustering is consistent
    auto reps = block_representatives(a, labels, spec);
    const double j_final = evaluate_objective(a, labels, reps.means, spec);
    out.trace.push_back(j_final);
    out.clustering = CoClustering{std::move(labels), std::move(reps.means),
                                  j_final, spec, reps.empty_blocks.size()};
    return out;
}

/// The eight pipeline variants: seeding r (uniform) or s (distance
/// proportional), optional 1D refinement (suffix k), optional simultaneous
/// refinement (suffix c).
struct VariantSpec {
    Seeding seeding = Seeding::Uniform;
    bool refine_1d = false;
    bool simultaneous = false;

    static VariantSpec parse(const std::string& token) {
        VariantSpec v;
        std::size_t pos = 0;
        if (pos >= token.size() || (token[pos] != 'r' && token[pos] != 's'))
            throw std::invalid_argument("unknown variant token: " + token);
        v.seeding = token[pos] == 's' ? Seeding::DSquared : Seeding::Uniform;
        ++pos;
        if (pos < token.size() && token[pos] == 'k') {
            v.refine_1d = true;
            ++pos;
        }
        if (pos < token.size() && token[pos] == 'c') {
            v.simultaneous = true;
            ++pos;
        }
        if (pos != token.size())
            throw std::invalid_argument("unknown variant token: " + token);
        return v;
    }
};

inline const std::vector<std::string>& all_variant_tokens() {
    static const std::vector<std::string> tokens{"r",  "s",  "rk",  "sk",
                                                 "rc", "sc", "rkc", "skc"};
    return tokens;
}

struct TensorClusterConfig {
    std::vector<int> k;
    std::uint64_t seed = 0;
    int restarts = 1;
    int max_iters = 100;
    double tol = 1e-9;
};

struct PipelineResult {
    CoClustering clustering;
    int sitec_sweeps = -1;             // -1 when the variant has no c suffix
    std::vector<double> sitec_trace;
};

inline PipelineResult variant_pipeline(const DenseTensor& a,
                                       const std::string& token,
                                       const TensorClusterConfig& cfg,
                                       const DivergenceSpec& spec) {
    const VariantSpec variant = VariantSpec::parse(token);
    if (cfg.k.size() != a.order())
        throw std::invalid_argument(
            "variant_pipeline: got " + std::to_string(cfg.k.size()) +
            " cluster counts for an order-" + std::to_string(a.order()) +
            " tensor");
    std::vector<ClusterConfig> per_dim(a.order());
    for (std::size_t j = 0; j < a.order(); ++j) {
        per_dim[j].k = cfg.k[j];
        per_dim[j].seeding = variant.seeding;
        per_dim[j].refine = variant.refine_1d ? Refine::Lloyd : Refine::None;
        per_dim[j].restarts = cfg.restarts;
        per_dim[j].max_iters = cfg.max_iters;
        per_dim[j].tol = cfg.tol;
        per_dim[j].rng_seed = cfg.seed;
    }
    PipelineResult out;
    out.clustering = cotec(a, per_dim, spec);
    if (variant.simultaneous) {
        auto refined = sitec(a, out.clustering, spec, cfg.max_iters, cfg.tol);
        out.clustering = std::move(refined.clustering);
        out.sitec_sweeps = refined.sweeps;
        out.sitec_trace = std::move(refined.trace);
    }
    return out;
}

}  // namespace cotec
