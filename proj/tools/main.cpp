// cotec: planted-tensor generation, co-clustering runs, experiment sweeps,
// and exact-oracle reports over dense tensors.
//
// Exit codes: 0 success, 1 usage error, 2 data/domain error, 3 enumeration
// budget refusal.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cotec/datagen.hpp"
#include "cotec/experiment.hpp"
#include "cotec/io.hpp"
#include "cotec/report_json.hpp"
#include "cotec/tenclus.hpp"
#include "cotec/verify.hpp"

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::size_t> parse_shape(const std::string& text) {
    std::vector<std::size_t> dims;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, 'x')) {
        try {
            const long long v = std::stoll(part);
            if (v < 1) throw std::invalid_argument("nonpositive");
            dims.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw UsageError("bad --shape component '" + part + "'");
        }
    }
    if (dims.empty()) throw UsageError("empty --shape");
    return dims;
}

std::vector<int> parse_k(const std::string& text) {
    std::vector<int> k;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ',')) {
        try {
            const int v = std::stoi(part);
            if (v < 1) throw std::invalid_argument("nonpositive");
            k.push_back(v);
        } catch (const std::exception&) {
            throw UsageError("bad --k component '" + part + "'");
        }
    }
    if (k.empty()) throw UsageError("empty --k");
    return k;
}

std::vector<double> parse_noise_list(const std::string& text) {
    std::vector<double> out;
    std::string part;
    std::istringstream in(text);
    while (std::getline(in, part, ',')) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw UsageError("bad --noise component '" + part + "'");
        }
    }
    if (out.empty()) throw UsageError("empty --noise");
    return out;
}

/// KL needs entries above the positivity floor; report the first offender
/// with its multi-index.
void require_divergence_domain(const cotec::DenseTensor& tensor,
                               const cotec::DivergenceSpec& spec) {
    if (spec.kind != cotec::DivKind::GeneralizedKL) return;
    for (std::size_t f = 0; f < tensor.size(); ++f) {
        if (tensor[f] >= spec.kl_eps) continue;
        const auto idx = tensor.shape().multi_index(f);
        std::string at = "(";
        for (std::size_t j = 0; j < idx.size(); ++j)
            at += (j ? "," : "") + std::to_string(idx[j]);
        at += ")";
        throw std::domain_error(
            "entry " + at + " = " + std::to_string(tensor[f]) +
            " lies below the KL positivity floor " +
            std::to_string(spec.kl_eps));
    }
}

struct CommonFlags {
    std::string div_token = "sqeuclidean";
    std::uint64_t seed = 0;
    double tol = 1e-9;
    int max_iters = 100;
    int restarts = 1;
    std::string output_dir = ".";
    std::string format = "json";
};

void emit(const cotec::json& report) {
    std::cout << report.dump(2) << "\n";
}

fs::path prepare_output_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

int cmd_gen(const CommonFlags& common, const std::string& shape_text,
            const std::string& k_text, double noise, double means_lo,
            double means_hi, double poisson_scale, const std::string& prefix) {
    cotec::PlantedSpec spec;
    try {
        spec.shape = cotec::Shape(parse_shape(shape_text));
        spec.k = parse_k(k_text);
        spec.noise = noise;
        spec.model = common.div_token == "kl" ? cotec::NoiseModel::Poisson
                                              : cotec::NoiseModel::Gaussian;
        spec.means_lo = means_lo;
        spec.means_hi = means_hi;
        spec.poisson_scale = poisson_scale;
        spec.rng_seed = common.seed;
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    auto result = cotec::generate(spec);
    const fs::path dir = prepare_output_dir(common.output_dir);
    const fs::path tensor_path = dir / (prefix + ".tns");
    const fs::path truth_path = dir / (prefix + ".truth");
    cotec::write_tensor_file(tensor_path.string(), result.tensor);

    cotec::TruthFile truth;
    for (const auto& assignment : result.truth.assignments)
        truth.labels.push_back(assignment.labels);
    for (int kj : spec.k) truth.k.push_back(static_cast<std::size_t>(kj));
    truth.planted_objective = result.truth.objective;
    cotec::write_truth_file(truth_path.string(), truth);

    emit(cotec::json{{"tensor", tensor_path.string()},
                     {"truth", truth_path.string()},
                     {"shape", spec.shape.dims()},
                     {"k", spec.k},
                     {"divergence", common.div_token},
                     {"noise", noise},
                     {"seed", common.seed},
                     {"planted_j", result.truth.objective}});
    return 0;
}

int cmd_cluster(const CommonFlags& common, const std::string& input,
                const std::string& k_text, std::string variant,
                const std::string& truth_path, bool force_simultaneous) {
    if (force_simultaneous && variant.find('c') == std::string::npos)
        variant += "c";
    try {
        cotec::VariantSpec::parse(variant);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto spec = cotec::DivergenceSpec::from_token(common.div_token);
    cotec::DenseTensor tensor = cotec::read_tensor_file(input);
    require_divergence_domain(tensor, spec);

    cotec::TensorClusterConfig cfg;
    cfg.k = parse_k(k_text);
    cfg.seed = common.seed;
    cfg.restarts = common.restarts;
    cfg.max_iters = common.max_iters;
    cfg.tol = common.tol;
    auto result = cotec::variant_pipeline(tensor, variant, cfg, spec);

    std::optional<double> reference;
    std::optional<double> bound;
    if (!truth_path.empty()) {
        const cotec::TruthFile truth = cotec::read_truth_file(truth_path);
        reference = truth.planted_objective;
        std::size_t kmax = 1;
        for (std::size_t kj : truth.k) kmax = std::max(kmax, kj);
        bound = cotec::experiment_bound(spec, tensor.order(), kmax, tensor);
    }
    const cotec::json report = cotec::cluster_report_json(
        result, variant, common.div_token, common.seed, reference, bound);
    emit(report);

    if (common.format == "csv") {
        const fs::path dir = prepare_output_dir(common.output_dir);
        std::ofstream csv(dir / "cluster_labels.csv");
        csv << "dim,index,label\n";
        for (std::size_t j = 0; j < result.clustering.assignments.size(); ++j) {
            const auto& labels = result.clustering.assignments[j].labels;
            for (std::size_t i = 0; i < labels.size(); ++i)
                csv << j << "," << i << "," << labels[i] << "\n";
        }
    }
    return 0;
}

int cmd_experiment(const CommonFlags& common, const std::string& shape_text,
                   const std::string& k_text, const std::string& noise_text,
                   int trials, int tensors_per_noise, double means_lo,
                   double means_hi, double poisson_scale) {
    cotec::ExperimentConfig cfg;
    try {
        cfg.shape = cotec::Shape(parse_shape(shape_text));
        cfg.k = parse_k(k_text);
        cfg.noises = parse_noise_list(noise_text);
        cfg.div_token = common.div_token;
        cfg.trials = trials;
        cfg.tensors_per_noise = tensors_per_noise;
        cfg.seed = common.seed;
        cfg.restarts = common.restarts;
        cfg.max_iters = common.max_iters;
        cfg.tol = common.tol;
        cfg.means_lo = means_lo;
        cfg.means_hi = means_hi;
        cfg.poisson_scale = poisson_scale;
        cfg.validate();
        cfg.planted_for(cfg.noises.front(), 0).validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto t0 = std::chrono::steady_clock::now();
    cotec::ExperimentReport report = cotec::run_experiment(cfg);
    const auto elapsed = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    // timing goes to stderr so repeated runs stay byte-identical on stdout
    std::cerr << "experiment finished in " << elapsed << " s\n";

    const fs::path dir = prepare_output_dir(common.output_dir);
    const cotec::json jreport = cotec::experiment_report_to_json(report);
    {
        std::ofstream out(dir / "experiment.json");
        out << jreport.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "experiment_table.csv");
        out << cotec::experiment_table_csv(report);
    }
    {
        std::ofstream out(dir / "experiment_factors.csv");
        out << cotec::experiment_factors_csv(report);
    }
    emit(jreport);
    return 0;
}

int cmd_oracle(const CommonFlags& common, const std::string& input,
               const std::string& k_text, unsigned long long budget,
               double compare_j, bool have_compare) {
    const auto spec = cotec::DivergenceSpec::from_token(common.div_token);
    cotec::DenseTensor tensor = cotec::read_tensor_file(input);
    require_divergence_domain(tensor, spec);
    const std::vector<int> k = parse_k(k_text);

    auto oracle = cotec::oracle_optimal(tensor, k, spec, budget);
    cotec::json labels = cotec::json::array();
    for (const auto& assignment : oracle.clustering.assignments)
        labels.push_back(assignment.labels);
    cotec::json report{{"j_opt", oracle.j_opt},
                       {"labels", labels},
                       {"combinations", oracle.combinations},
                       {"divergence", common.div_token}};
    if (have_compare) {
        // exact-case factor: the combination bound with alpha = 1 applies
        // when the heuristic's per-dimension stages were solved exactly
        std::size_t kmax = 1;
        for (int kj : k) kmax = std::max(kmax, static_cast<std::size_t>(kj));
        double bound;
        if (cotec::bound_case_for(spec) == cotec::BoundCase::Bregman) {
            double lo = tensor[0], hi = tensor[0];
            for (double v : tensor.data()) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            bound = cotec::theoretical_bound(
                tensor.order(), 1, cotec::BoundCase::Bregman, 1.0,
                cotec::kl_curvature_bounds(lo, hi));
        } else {
            bound = cotec::theoretical_bound(tensor.order(), 1,
                                             cotec::bound_case_for(spec), 1.0);
        }
        const auto factor =
            cotec::empirical_factor(compare_j, oracle.j_opt, bound);
        report["compare"] = {
            {"j", compare_j},
            {"alpha_hat", cotec::report_detail::finite_or_null(
                              factor.alpha_hat)},
            {"exact_case_bound", bound},
            {"within_exact_case_bound",
             compare_j <= bound * oracle.j_opt * (1 + 1e-9) + 1e-12},
            {"sandwich_ok", compare_j >= oracle.j_opt - 1e-9}};
    }
    emit(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Dense-tensor co-clustering: combination and simultaneous "
        "algorithms for Bregman divergences and separable metrics"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonFlags common;
    app.add_option("--div", common.div_token,
                   "divergence: sqeuclidean | kl | l1 | kernel:absdiff | "
                   "kernel:sqdiff");
    app.add_option("--seed", common.seed, "master RNG seed");
    app.add_option("--tol", common.tol, "relative-decrease stop threshold");
    app.add_option("--max-iters", common.max_iters, "iteration cap");
    app.add_option("--restarts", common.restarts, "independent restarts");
    app.add_option("--output-dir", common.output_dir, "directory for files");
    app.add_option("--format", common.format, "stdout report format")
        ->check(CLI::IsMember({"json", "csv"}));

    // gen
    auto* gen = app.add_subcommand("gen", "generate a planted tensor");
    std::string gen_shape, gen_k, gen_prefix = "planted";
    double gen_noise = 1.0, gen_means_lo = 1.0, gen_means_hi = 10.0;
    double gen_poisson_scale = 1.0;
    gen->add_option("--shape", gen_shape, "tensor shape, e.g. 30x30x20")
        ->required();
    gen->add_option("--k", gen_k, "planted clusters per dimension, e.g. 5,5,5")
        ->required();
    gen->add_option("--noise", gen_noise, "noise level");
    gen->add_option("--means-lo", gen_means_lo, "means range lower end");
    gen->add_option("--means-hi", gen_means_hi, "means range upper end");
    gen->add_option("--poisson-scale", gen_poisson_scale,
                    "scale knob for the KL noise model");
    gen->add_option("--out", gen_prefix, "output file prefix");

    // cluster / sitec
    std::string run_input, run_k, run_variant = "skc", run_truth;
    auto* cluster = app.add_subcommand("cluster", "run one variant");
    auto* sitec_cmd = app.add_subcommand(
        "sitec", "run a simultaneous variant (appends c if missing)");
    for (auto* cmd : {cluster, sitec_cmd}) {
        cmd->add_option("--input", run_input, "tensor file (.tns or .csv)")
            ->required();
        cmd->add_option("--k", run_k, "clusters per dimension")->required();
        cmd->add_option("--variant", run_variant,
                        "r | s | rk | sk | rc | sc | rkc | skc");
        cmd->add_option("--truth", run_truth, "planted-truth sidecar file");
    }

    // experiment
    auto* experiment = app.add_subcommand("experiment", "variant sweep");
    std::string exp_shape = "30x30x20", exp_k = "5,5,5",
                exp_noise = "0.5,1,2,3";
    int exp_trials = 20, exp_tensors = 3;
    double exp_means_lo = 1.0, exp_means_hi = 10.0, exp_poisson_scale = 1.0;
    experiment->add_option("--shape", exp_shape, "tensor shape");
    experiment->add_option("--k", exp_k, "clusters per dimension");
    experiment->add_option("--noise", exp_noise, "comma-separated levels");
    experiment->add_option("--trials", exp_trials, "seedings per tensor");
    experiment->add_option("--tensors", exp_tensors, "tensors per level");
    experiment->add_option("--means-lo", exp_means_lo, "means range low");
    experiment->add_option("--means-hi", exp_means_hi, "means range high");
    experiment->add_option("--poisson-scale", exp_poisson_scale,
                           "KL noise scale knob");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "exhaustive exact optimum");
    std::string oracle_input, oracle_k;
    unsigned long long oracle_budget = cotec::kDefaultEnumerationBudget;
    double oracle_compare_j = 0.0;
    oracle->add_option("--input", oracle_input, "tensor file")->required();
    oracle->add_option("--k", oracle_k, "clusters per dimension")->required();
    oracle->add_option("--budget", oracle_budget,
                       "max combinations to enumerate");
    auto* compare_opt = oracle->add_option(
        "--compare-j", oracle_compare_j,
        "heuristic objective to grade against the optimum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed())
            return cmd_gen(common, gen_shape, gen_k, gen_noise, gen_means_lo,
                           gen_means_hi, gen_poisson_scale, gen_prefix);
        if (cluster->parsed())
            return cmd_cluster(common, run_input, run_k, run_variant,
                               run_truth, false);
        if (sitec_cmd->parsed())
            return cmd_cluster(common, run_input, run_k, run_variant,
                               run_truth, true);
        if (experiment->parsed())
            return cmd_experiment(common, exp_shape, exp_k, exp_noise,
                                  exp_trials, exp_tensors, exp_means_lo,
                                  exp_means_hi, exp_poisson_scale);
        if (oracle->parsed())
            return cmd_oracle(common, oracle_input, oracle_k, oracle_budget,
                              oracle_compare_j, compare_opt->count() > 0);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const cotec::BudgetExceeded& e) {
        std::cerr << "budget refusal: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
