#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotec/divergence.hpp"
#include "cotec/rng.hpp"
#include "cotec/tenclus.hpp"
#include "cotec/tensor.hpp"

namespace cotec {

enum class NoiseModel { Gaussian, Poisson };

/// Planted-cluster tensor description. Gaussian noise targets squared
/// Euclidean clustering; the Poisson model targets generalized KL (scaled
/// Poisson draws around the block means, so the noise grows with the
/// noise knob while the mean structure is preserved).
struct PlantedSpec {
    Shape shape;
    std::vector<int> k;
    double noise = 1.0;
    NoiseModel model = NoiseModel::Gaussian;
    double means_lo = 1.0;
    double means_hi = 10.0;
    double poisson_scale = 1.0;  // sigma' = noise * poisson_scale
    double kl_eps = 1e-6;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (k.size() != shape.order())
            throw std::invalid_argument(
                "PlantedSpec: got " + std::to_string(k.size()) +
                " cluster counts for an order-" +
                std::to_string(shape.order()) + " tensor");
        for (std::size_t j = 0; j < k.size(); ++j) {
            if (k[j] < 1)
                throw std::invalid_argument(
                    "PlantedSpec: k must be >= 1 on dimension " +
                    std::to_string(j));
            if (static_cast<std::size_t>(k[j]) > shape.dim(j))
                throw std::invalid_argument(
                    "PlantedSpec: k = " + std::to_string(k[j]) +
                    " exceeds extent " + std::to_string(shape.dim(j)) +
                    " on dimension " + std::to_string(j));
        }
        if (!(noise >= 0.0))
            throw std::invalid_argument("PlantedSpec: noise must be >= 0");
        if (!(means_lo < means_hi))
            throw std::invalid_argument("PlantedSpec: empty means range");
        if (model == NoiseModel::Poisson && means_lo < 10.0 * kl_eps)
            throw std::invalid_argument(
                "PlantedSpec: Poisson means must stay >= 10*eps above zero");
        if (!(poisson_scale > 0.0))
            throw std::invalid_argument(
                "PlantedSpec: poisson_scale must be > 0");
    }

    DivergenceSpec divergence() const {
        return model == NoiseModel::Gaussian
                   ? DivergenceSpec::squared_euclidean()
                   : DivergenceSpec::generalized_kl(kl_eps);
    }
};

struct PlantedResult {
    DenseTensor tensor;
    CoClustering truth;  // planted labels with their exact objective
};

namespace datagen_detail {

/// Uniform labels conditioned on every cluster being nonempty. Rejection
/// sampling keeps the conditional law exact; k == n short-circuits to a
/// random permutation (the only valid assignments).
inline std::vector<int> nonempty_labels(std::size_t n, int k, Rng& rng) {
    if (k == 1) return std::vector<int>(n, 0);
    if (static_cast<std::size_t>(k) == n) {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i);
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = rng.uniform_index(i + 1);
            std::swap(labels[i], labels[j]);
        }
        return labels;
    }
    std::vector<int> labels(n);
    std::vector<bool> used(static_cast<std::size_t>(k));
    for (long attempt = 0; attempt < 1000000; ++attempt) {
        std::fill(used.begin(), used.end(), false);
        for (auto& label : labels) {
            label = static_cast<int>(
                rng.uniform_index(static_cast<std::size_t>(k)));
            used[static_cast<std::size_t>(label)] = true;
        }
        if (std::all_of(used.begin(), used.end(), [](bool b) { return b; }))
            return labels;
    }
    throw std::runtime_error("nonempty_labels: rejection sampling stalled");
}

}  // namespace datagen_detail

/// Draws a means tensor with i.i.d. uniform entries, assigns every index
/// uniformly to a cluster subject to nonemptiness, then adds noise around
/// the block means. Returns the tensor together with the planted
/// clustering and its exact objective under the target divergence.
inline PlantedResult generate(const PlantedSpec& spec) {
    spec.validate();
    const std::size_t m = spec.shape.order();

    Rng means_rng(derive_seed(spec.rng_seed, rng_tag::planted_means));
    std::vector<std::size_t> mean_dims;
    for (int kj : spec.k) mean_dims.push_back(static_cast<std::size_t>(kj));
    Shape mean_shape(mean_dims);
    std::vector<double> mean_values(mean_shape.count());
    for (auto& v : mean_values)
        v = spec.means_lo +
            (spec.means_hi - spec.means_lo) * means_rng.uniform01();
    DenseTensor planted_means(mean_shape, std::move(mean_values));

    std::vector<Assignment> truth(m);
    for (std::size_t j = 0; j < m; ++j) {
        Rng label_rng(derive_seed(spec.rng_seed, rng_tag::planted_labels, j));
        truth[j].k = spec.k[j];
        truth[j].labels = datagen_detail::nonempty_labels(
            spec.shape.dim(j), spec.k[j], label_rng);
    }

    tenclus_detail::BlockIndexer indexer(spec.shape, truth, mean_shape);
    Rng noise_rng(derive_seed(spec.rng_seed, rng_tag::planted_noise));
    std::vector<double> data(spec.shape.count());
    if (spec.model == NoiseModel::Gaussian) {
        for (std::size_t f = 0; f < data.size(); ++f)
            data[f] = planted_means[indexer.block_of(f)] +
                      spec.noise * noise_rng.normal();
    } else {
        const double sigma = spec.noise * spec.poisson_scale;
        for (std::size_t f = 0; f < data.size(); ++f) {
            const double mean = planted_means[indexer.block_of(f)];
            if (sigma == 0.0) {
                data[f] = mean;
            } else {
                const double draw =
                    sigma *
                    static_cast<double>(noise_rng.poisson(mean / sigma));
                data[f] = std::max(spec.kl_eps, draw);
            }
        }
    }

    PlantedResult out;
    out.tensor = DenseTensor(spec.shape, std::move(data));
    out.truth = make_coclustering(out.tensor, std::move(truth),
                                  spec.divergence());
    return out;
}

}  // namespace cotec
