#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cotec/experiment.hpp"
#include "cotec/tenclus.hpp"
#include "cotec/verify.hpp"

namespace cotec {

using json = nlohmann::json;

namespace report_detail {

inline json finite_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

}  // namespace report_detail

inline json experiment_report_to_json(const ExperimentReport& report) {
    json meta{{"shape", report.dims},
              {"k", report.k},
              {"divergence", report.divergence},
              {"noises", report.noises},
              {"trials", report.trials},
              {"tensors_per_noise", report.tensors_per_noise},
              {"seed", report.seed}};
    json blocks = json::array();
    for (const auto& block : report.blocks) {
        json rows = json::array();
        for (const auto& row : block.rows) {
            rows.push_back(
                {{"variant", row.variant},
                 {"mean_j", row.mean_objective},
                 {"std_j", row.std_objective},
                 {"improvement_pct", row.improvement_pct},
                 {"mean_sweeps", row.mean_sweeps < 0
                                     ? json(nullptr)
                                     : json(row.mean_sweeps)},
                 {"std_sweeps", row.std_sweeps < 0 ? json(nullptr)
                                                   : json(row.std_sweeps)},
                 {"alpha_mean", report_detail::finite_or_null(row.alpha_mean)},
                 {"bound", row.bound}});
        }
        blocks.push_back({{"noise", block.noise}, {"rows", rows}});
    }
    return json{{"metadata", meta}, {"results", blocks}};
}

inline ExperimentReport experiment_report_from_json(const json& j) {
    ExperimentReport report;
    const auto& meta = j.at("metadata");
    report.dims = meta.at("shape").get<std::vector<std::size_t>>();
    report.k = meta.at("k").get<std::vector<int>>();
    report.divergence = meta.at("divergence").get<std::string>();
    report.noises = meta.at("noises").get<std::vector<double>>();
    report.trials = meta.at("trials").get<int>();
    report.tensors_per_noise = meta.at("tensors_per_noise").get<int>();
    report.seed = meta.at("seed").get<std::uint64_t>();
    for (const auto& jblock : j.at("results")) {
        NoiseBlock block;
        block.noise = jblock.at("noise").get<double>();
        for (const auto& jrow : jblock.at("rows")) {
            VariantStats row;
            row.variant = jrow.at("variant").get<std::string>();
            row.mean_objective = jrow.at("mean_j").get<double>();
            row.std_objective = jrow.at("std_j").get<double>();
            row.improvement_pct = jrow.at("improvement_pct").get<double>();
            row.mean_sweeps = jrow.at("mean_sweeps").is_null()
                                  ? -1.0
                                  : jrow.at("mean_sweeps").get<double>();
            row.std_sweeps = jrow.at("std_sweeps").is_null()
                                 ? -1.0
                                 : jrow.at("std_sweeps").get<double>();
            row.alpha_mean =
                jrow.at("alpha_mean").is_null()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : jrow.at("alpha_mean").get<double>();
            row.bound = jrow.at("bound").get<double>();
            block.rows.push_back(std::move(row));
        }
        report.blocks.push_back(std::move(block));
    }
    return report;
}

/// JSON report for one clustering run: objective, labels, representatives,
/// sweep counts, and the empirical factor when a reference is available.
inline json cluster_report_json(const PipelineResult& result,
                                const std::string& variant,
                                const std::string& div_token,
                                std::uint64_t seed,
                                std::optional<double> reference_objective,
                                std::optional<double> bound) {
    const CoClustering& cc = result.clustering;
    json labels = json::array();
    for (const auto& assignment : cc.assignments)
        labels.push_back(assignment.labels);
    json out{{"variant", variant},
             {"divergence", div_token},
             {"seed", seed},
             {"objective", cc.objective},
             {"labels", labels},
             {"means",
              {{"shape", cc.means.shape().dims()},
               {"values", std::vector<double>(cc.means.data().begin(),
                                              cc.means.data().end())}}},
             {"empty_blocks", cc.empty_blocks},
             {"sitec_sweeps", result.sitec_sweeps < 0
                                  ? json(nullptr)
                                  : json(result.sitec_sweeps)}};
    if (reference_objective) {
        out["reference_j"] = *reference_objective;
        out["alpha_hat"] = report_detail::finite_or_null(
            *reference_objective > 1e-12
                ? cc.objective / *reference_objective
                : std::numeric_limits<double>::infinity());
    }
    if (bound) out["bound"] = *bound;
    return out;
}

}  // namespace cotec
