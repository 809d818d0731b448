#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cotec/datagen.hpp"
#include "cotec/divergence.hpp"
#include "cotec/io.hpp"
#include "cotec/rng.hpp"
#include "cotec/tenclus.hpp"
#include "cotec/verify.hpp"

namespace cotec {

/// Sweep description: for every noise level, tensors_per_noise planted
/// tensors are generated and each seeded trials times; all variants run on
/// the same per-trial seed so comparisons are paired.
struct ExperimentConfig {
    Shape shape;
    std::vector<int> k;
    std::string div_token = "sqeuclidean";
    std::vector<double> noises{0.5, 1.0, 2.0, 3.0};
    int trials = 20;
    int tensors_per_noise = 3;
    std::uint64_t seed = 0;
    int restarts = 1;
    int max_iters = 100;
    double tol = 1e-9;
    double means_lo = 1.0;
    double means_hi = 10.0;
    double poisson_scale = 1.0;
    std::vector<std::string> variants = all_variant_tokens();

    void validate() const {
        if (trials < 1 || tensors_per_noise < 1)
            throw std::invalid_argument(
                "ExperimentConfig: trial counts must be >= 1");
        if (noises.empty())
            throw std::invalid_argument("ExperimentConfig: no noise levels");
        if (variants.empty())
            throw std::invalid_argument("ExperimentConfig: no variants");
    }

    PlantedSpec planted_for(double noise, std::uint64_t tensor_seed) const {
        PlantedSpec spec;
        spec.shape = shape;
        spec.k = k;
        spec.noise = noise;
        spec.model = div_token == "kl" ? NoiseModel::Poisson
                                       : NoiseModel::Gaussian;
        spec.means_lo = means_lo;
        spec.means_hi = means_hi;
        spec.poisson_scale = poisson_scale;
        spec.rng_seed = tensor_seed;
        return spec;
    }
};

/// One pipeline invocation inside a sweep.
struct RunRecord {
    double noise = 0.0;
    int tensor_index = 0;
    int trial = 0;
    std::string variant;
    double objective = 0.0;
    double alpha_hat = 0.0;  // infinity when the reference is nonpositive
    int sweeps = -1;         // -1 when the variant has no simultaneous stage
    bool trace_monotone = true;
};

/// Aggregated row of the report table, one per (noise, variant).
struct VariantStats {
    std::string variant;
    double mean_objective = 0.0;
    double std_objective = 0.0;
    double improvement_pct = 0.0;  // over variant r at the same noise
    double mean_sweeps = -1.0;     // -1 when not applicable
    double std_sweeps = -1.0;
    double alpha_mean = 0.0;
    double bound = 0.0;
};

struct NoiseBlock {
    double noise = 0.0;
    std::vector<VariantStats> rows;
};

struct ExperimentReport {
    std::vector<std::size_t> dims;
    std::vector<int> k;
    std::string divergence;
    std::vector<double> noises;
    int trials = 0;
    int tensors_per_noise = 0;
    std::uint64_t seed = 0;
    std::vector<NoiseBlock> blocks;
};

namespace experiment_detail {

inline bool trace_is_monotone(const std::vector<double>& trace,
                              double slack = 1e-9) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] > trace[i - 1] + slack * std::fabs(trace[i - 1]))
            return false;
    return true;
}

inline double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace experiment_detail

/// Theoretical factor reported next to the empirical one: the combination
/// factor for the divergence case with the distance-proportional seeding
/// guarantee 8(ln K* + 2) as the base alpha. Bregman divergences multiply
/// in the curvature ratio of the tensor's value range.
inline double experiment_bound(const DivergenceSpec& spec, std::size_t order,
                               std::size_t max_clusters,
                               const DenseTensor& tensor) {
    const double alpha = seeding_alpha(max_clusters);
    const BoundCase which = bound_case_for(spec);
    if (which == BoundCase::Bregman) {
        double lo = tensor[0], hi = tensor[0];
        for (double v : tensor.data()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return theoretical_bound(order, 1, which, alpha,
                                 kl_curvature_bounds(lo, hi));
    }
    return theoretical_bound(order, 1, which, alpha);
}

/// Runs the full sweep. Per trial, every variant receives the same seed,
/// so r/rk (and s/sk) consume identical seeding draws and the c-variants
/// refine exactly the clustering their base variant reported.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       std::vector<RunRecord>* records = nullptr) {
    cfg.validate();
    const DivergenceSpec spec = DivergenceSpec::from_token(cfg.div_token);
    std::size_t max_clusters = 1;
    for (int kj : cfg.k)
        max_clusters = std::max(max_clusters, static_cast<std::size_t>(kj));

    ExperimentReport report;
    report.dims = cfg.shape.dims();
    report.k = cfg.k;
    report.divergence = cfg.div_token;
    report.noises = cfg.noises;
    report.trials = cfg.trials;
    report.tensors_per_noise = cfg.tensors_per_noise;
    report.seed = cfg.seed;

    for (std::size_t ni = 0; ni < cfg.noises.size(); ++ni) {
        const double noise = cfg.noises[ni];
        std::vector<std::vector<double>> objective_samples(
            cfg.variants.size());
        std::vector<std::vector<double>> sweep_samples(cfg.variants.size());
        std::vector<std::vector<double>> alpha_samples(cfg.variants.size());
        double bound = 0.0;

        for (int g = 0; g < cfg.tensors_per_noise; ++g) {
            const std::uint64_t tensor_seed =
                derive_seed(cfg.seed, rng_tag::experiment_tensor, ni,
                            static_cast<std::uint64_t>(g));
            PlantedResult planted =
                generate(cfg.planted_for(noise, tensor_seed));
            const double reference = planted.truth.objective;
            bound = std::max(bound,
                             experiment_bound(spec, cfg.shape.order(),
                                              max_clusters, planted.tensor));

            for (int trial = 0; trial < cfg.trials; ++trial) {
                TensorClusterConfig run_cfg;
                run_cfg.k = cfg.k;
                run_cfg.seed = derive_seed(tensor_seed,
                                           rng_tag::experiment_trial,
                                           static_cast<std::uint64_t>(trial));
                run_cfg.restarts = cfg.restarts;
                run_cfg.max_iters = cfg.max_iters;
                run_cfg.tol = cfg.tol;
                for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
                    auto result = variant_pipeline(planted.tensor,
                                                   cfg.variants[v], run_cfg,
                                                   spec);
                    // references at round-off scale (noiseless data) are
                    // degenerate; flag instead of dividing
                    const double alpha =
                        reference > 1e-12
                            ? result.clustering.objective / reference
                            : std::numeric_limits<double>::infinity();
                    objective_samples[v].push_back(
                        result.clustering.objective);
                    if (result.sitec_sweeps >= 0)
                        sweep_samples[v].push_back(
                            static_cast<double>(result.sitec_sweeps));
                    if (std::isfinite(alpha))
                        alpha_samples[v].push_back(alpha);
                    if (records) {
                        RunRecord rec;
                        rec.noise = noise;
                        rec.tensor_index = g;
                        rec.trial = trial;
                        rec.variant = cfg.variants[v];
                        rec.objective = result.clustering.objective;
                        rec.alpha_hat = alpha;
                        rec.sweeps = result.sitec_sweeps;
                        rec.trace_monotone =
                            experiment_detail::trace_is_monotone(
                                result.sitec_trace);
                        records->push_back(std::move(rec));
                    }
                }
            }
        }

        NoiseBlock block;
        block.noise = noise;
        double mean_r = 0.0;
        for (std::size_t v = 0; v < cfg.variants.size(); ++v)
            if (cfg.variants[v] == "r")
                mean_r = experiment_detail::sample_mean(objective_samples[v]);
        for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
            VariantStats row;
            row.variant = cfg.variants[v];
            row.mean_objective =
                experiment_detail::sample_mean(objective_samples[v]);
            row.std_objective =
                experiment_detail::sample_std(objective_samples[v]);
            row.improvement_pct =
                mean_r > 0.0
                    ? (mean_r - row.mean_objective) / mean_r * 100.0
                    : 0.0;
            if (!sweep_samples[v].empty()) {
                row.mean_sweeps =
                    experiment_detail::sample_mean(sweep_samples[v]);
                row.std_sweeps =
                    experiment_detail::sample_std(sweep_samples[v]);
            }
            row.alpha_mean =
                alpha_samples[v].empty()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : experiment_detail::sample_mean(alpha_samples[v]);
            row.bound = bound;
            block.rows.push_back(std::move(row));
        }
        report.blocks.push_back(std::move(block));
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV emission and parsing (round-trippable at full precision)
// ---------------------------------------------------------------------------

namespace experiment_detail {

inline std::string csv_field(double v) {
    if (std::isnan(v)) return "";
    return io_detail::format_double(v);
}

inline double parse_field(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(s);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace experiment_detail

/// Table-shaped CSV: one row per (noise, variant) with the aggregate
/// statistics. Sweep columns stay empty for variants without the
/// simultaneous stage; the alpha column stays empty when the reference
/// objective was nonpositive.
inline std::string experiment_table_csv(const ExperimentReport& report) {
    std::string out =
        "noise,variant,mean_j,std_j,improvement_pct,mean_sweeps,std_sweeps,"
        "alpha_mean,bound\n";
    using experiment_detail::csv_field;
    for (const auto& block : report.blocks)
        for (const auto& row : block.rows) {
            out += csv_field(block.noise) + "," + row.variant + "," +
                   csv_field(row.mean_objective) + "," +
                   csv_field(row.std_objective) + "," +
                   csv_field(row.improvement_pct) + ",";
            out += row.mean_sweeps < 0 ? "" : csv_field(row.mean_sweeps);
            out += ",";
            out += row.std_sweeps < 0 ? "" : csv_field(row.std_sweeps);
            out += "," + csv_field(row.alpha_mean) + "," +
                   csv_field(row.bound) + "\n";
        }
    return out;
}

/// Factor-curve CSV: (noise, variant, alpha) rows for external plotting.
inline std::string experiment_factors_csv(const ExperimentReport& report) {
    std::string out = "noise,variant,alpha_mean,bound\n";
    using experiment_detail::csv_field;
    for (const auto& block : report.blocks)
        for (const auto& row : block.rows)
            out += csv_field(block.noise) + "," + row.variant + "," +
                   csv_field(row.alpha_mean) + "," + csv_field(row.bound) +
                   "\n";
    return out;
}

/// Parses experiment_table_csv output back into (noise, VariantStats)
/// blocks; used to confirm emissions round-trip exactly.
inline std::vector<NoiseBlock> parse_table_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("table csv: missing header");
    std::vector<NoiseBlock> blocks;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = experiment_detail::split_csv_line(line);
        if (cells.size() != 9)
            throw std::runtime_error("table csv: expected 9 columns, got " +
                                     std::to_string(cells.size()));
        const double noise = experiment_detail::parse_field(cells[0]);
        if (blocks.empty() || blocks.back().noise != noise) {
            blocks.push_back(NoiseBlock{noise, {}});
        }
        VariantStats row;
        row.variant = cells[1];
        row.mean_objective = experiment_detail::parse_field(cells[2]);
        row.std_objective = experiment_detail::parse_field(cells[3]);
        row.improvement_pct = experiment_detail::parse_field(cells[4]);
        row.mean_sweeps =
            cells[5].empty() ? -1.0 : experiment_detail::parse_field(cells[5]);
        row.std_sweeps =
            cells[6].empty() ? -1.0 : experiment_detail::parse_field(cells[6]);
        row.alpha_mean = experiment_detail::parse_field(cells[7]);
        row.bound = experiment_detail::parse_field(cells[8]);
        blocks.back().rows.push_back(std::move(row));
    }
    return blocks;
}

}  // namespace cotec
