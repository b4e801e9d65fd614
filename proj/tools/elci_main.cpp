// elci command-line front end: compute confidence intervals on user data,
// run the weight optimizer standalone, run coverage experiments, and estimate
// ground-truth values. Every output file is accompanied by a run manifest
// sufficient to reproduce it bit-exactly.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "elci/elci.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw elci::ValidationError("cannot open '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i)
            h = (h ^ static_cast<unsigned char>(buf[i])) * 0x100000001b3ULL;
    }
    return h;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw elci::ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct ManifestWriter {
    json doc;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    bool stable = false;

    ManifestWriter(const std::string& command, std::uint64_t seed) {
        doc["command"] = command;
        doc["artifact_version"] = elci::kVersion;
        doc["master_seed"] = seed;
        doc["outputs"] = json::array();
    }

    void add_output(const std::string& path) { doc["outputs"].push_back(path); }

    void write(const std::string& path) {
        if (!stable) {
            const auto wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
            json info;
            info["wall_time_s"] = wall.count();
            info["written_unix_ms"] =
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count();
            doc["info"] = info;
        }
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw elci::ValidationError("cannot write '" + path + "'");
        out << doc.dump(2) << '\n';
    }
};

json interval_to_json(const elci::ConfidenceInterval& ci) {
    json j;
    j["method"] = elci::to_string(ci.method);
    j["level"] = ci.level;
    j["lower"] = ci.lower;
    j["upper"] = ci.upper;
    j["diagnostics"]["z_hat"] = ci.diag.z_hat;
    if (ci.diag.sigma_hat) j["diagnostics"]["sigma_hat"] = *ci.diag.sigma_hat;
    if (ci.diag.sigma_I_hat) j["diagnostics"]["sigma_I_hat"] = *ci.diag.sigma_I_hat;
    j["diagnostics"]["sims_used"] = ci.diag.sims_used;
    return j;
}

json weights_summary(const elci::ProbabilityWeights& w) {
    json out = json::array();
    for (const auto& row : w.rows) {
        double lo = row.front(), hi = row.front(), sum = 0.0;
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        out.push_back({{"n", row.size()}, {"min", lo}, {"max", hi}, {"sum", sum}});
    }
    return out;
}

struct ModelBundle {
    elci::PerformanceModel model;
    elci::TrueInputSpec truth;  // empty for plain dag models without --rates
    std::string name;
};

ModelBundle resolve_model_ref(const std::string& ref) {
    ModelBundle b;
    b.name = ref;
    if (elci::is_dag_reference(ref)) {
        b.model = elci::resolve_dag_model(ref.rfind("dag:", 0) == 0 ? ref.substr(4) : ref);
        return b;
    }
    const elci::BuiltinSpec preset = elci::builtin_spec(ref);
    b.model = preset.model;
    b.truth = preset.truth;
    return b;
}

int cmd_ci(const std::string& model_ref, const std::string& data_dir, double alpha,
           const std::string& method_name, const elci::BudgetPlan& budgets, std::uint64_t seed,
           const std::string& out_dir, bool stable) {
    ManifestWriter manifest("ci", seed);
    manifest.stable = stable;

    const ModelBundle bundle = resolve_model_ref(model_ref);
    const elci::InputDataset dataset =
        elci::load_dataset_dir(data_dir, bundle.model.model_count());
    elci::validate(dataset, bundle.model);

    const elci::Method method = elci::method_from_string(method_name);
    const elci::StreamKey key(seed);
    elci::ConfidenceInterval ci;
    json extra;
    switch (method) {
        case elci::Method::BEL:
        case elci::Method::EEL:
        case elci::Method::FEL: {
            const auto state = elci::run_pipeline(bundle.model, dataset, alpha, budgets.r1,
                                                  budgets.r2, key);
            ci = method == elci::Method::BEL ? elci::bel(state)
                 : method == elci::Method::EEL ? elci::eel(state, alpha)
                                               : elci::fel(state, alpha);
            extra["weights_min"] = weights_summary(state.solution.w_min);
            extra["weights_max"] = weights_summary(state.solution.w_max);
            extra["degenerate"] = state.solution.degenerate;
            break;
        }
        case elci::Method::LEL: {
            const auto state =
                elci::run_pipeline_linearized(bundle.model, dataset, alpha, budgets.r1, key);
            ci = elci::linearized_el(state);
            extra["weights_min"] = weights_summary(state.solution.w_min);
            extra["weights_max"] = weights_summary(state.solution.w_max);
            extra["degenerate"] = state.solution.degenerate;
            break;
        }
        case elci::Method::BOOT:
            ci = elci::percentile_bootstrap(bundle.model, dataset, alpha, budgets.b, budgets.rb,
                                            key);
            break;
        case elci::Method::DELTA:
            ci = elci::delta_method(bundle.model, dataset, alpha, budgets.rd, key);
            break;
    }

    char line[80];
    std::snprintf(line, sizeof(line), "%.10g,%.10g", ci.lower, ci.upper);
    std::cout << line << '\n';

    fs::create_directories(out_dir);
    json result = interval_to_json(ci);
    result["alpha"] = alpha;
    result["model"] = model_ref;
    for (auto& [k, v] : extra.items()) result[k] = v;
    const std::string result_path = out_dir + "/ci_result.json";
    std::ofstream rf(result_path, std::ios::trunc);
    rf << result.dump(2) << '\n';

    manifest.doc["resolved_config"] = {{"model", model_ref}, {"data", data_dir},
                                       {"alpha", alpha},     {"method", method_name},
                                       {"r1", budgets.r1},   {"r2", budgets.r2},
                                       {"b", budgets.b},     {"rb", budgets.rb},
                                       {"rd", budgets.rd}};
    json data_files = json::array();
    for (int i = 1; i <= bundle.model.model_count(); ++i) {
        const std::string p = data_dir + "/model_" + std::to_string(i) + ".csv";
        data_files.push_back({{"path", p}, {"fnv1a64", fnv1a64_file(p)}});
    }
    manifest.doc["data_files"] = data_files;
    manifest.add_output(result_path);
    manifest.write(out_dir + "/ci_manifest.json");
    return 0;
}

int cmd_solve(const std::string& coeffs_path, double alpha, const std::string& out_dir,
              bool stable) {
    ManifestWriter manifest("solve", 0);
    manifest.stable = stable;

    std::ifstream in(coeffs_path);
    if (!in) throw elci::ValidationError("cannot open coefficients file '" + coeffs_path + "'");
    std::vector<std::vector<double>> coeffs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        coeffs.push_back(std::move(row));
    }
    if (coeffs.empty()) throw elci::ValidationError("coefficients file is empty");

    const elci::ElSolution sol = elci::solve_weights(coeffs, alpha);

    char buf[160];
    if (sol.degenerate) {
        std::snprintf(buf, sizeof(buf), "degenerate min=%.10g max=%.10g", sol.obj_min, sol.obj_max);
        std::cout << buf << '\n';
    } else {
        std::snprintf(buf, sizeof(buf), "min=%.10g max=%.10g", sol.obj_min, sol.obj_max);
        std::cout << buf << '\n';
        std::snprintf(buf, sizeof(buf), "beta_min=%.10g beta_max=%.10g", sol.beta_min,
                      sol.beta_max);
        std::cout << buf << '\n';
        auto print_lambdas = [&](const char* name, const std::vector<double>& l) {
            std::cout << name << '=';
            for (std::size_t i = 0; i < l.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s%.10g", i ? "," : "", l[i]);
                std::cout << buf;
            }
            std::cout << '\n';
        };
        print_lambdas("lambda_min", sol.lambdas_min);
        print_lambdas("lambda_max", sol.lambdas_max);
    }

    fs::create_directories(out_dir);
    json result;
    result["alpha"] = alpha;
    result["degenerate"] = sol.degenerate;
    result["obj_min"] = sol.obj_min;
    result["obj_max"] = sol.obj_max;
    result["beta_min"] = sol.beta_min;
    result["beta_max"] = sol.beta_max;
    result["lambdas_min"] = sol.lambdas_min;
    result["lambdas_max"] = sol.lambdas_max;
    result["w_min"] = sol.w_min.rows;
    result["w_max"] = sol.w_max.rows;
    const std::string result_path = out_dir + "/solve_result.json";
    std::ofstream rf(result_path, std::ios::trunc);
    rf << result.dump(2) << '\n';

    manifest.doc["resolved_config"] = {{"coeffs", coeffs_path}, {"alpha", alpha}};
    manifest.doc["coeffs_fnv1a64"] = fnv1a64_file(coeffs_path);
    manifest.add_output(result_path);
    manifest.write(out_dir + "/solve_manifest.json");
    return 0;
}

int cmd_truth(const std::string& model_ref, const std::vector<double>& rates, long long n,
              std::uint64_t seed, const std::string& pin_path) {
    ModelBundle bundle = resolve_model_ref(model_ref);
    if (!rates.empty()) bundle.truth = elci::TrueInputSpec::exponential(rates);
    if (bundle.truth.model_count() == 0)
        throw elci::ValidationError("dag models need --rates for the true input laws");

    const auto [value, se] =
        elci::estimate_truth(bundle.model, bundle.truth, n, elci::StreamKey(seed).child("truth", 0));
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.10g %.10g", value, se);
    std::cout << buf << '\n';

    if (!pin_path.empty()) {
        elci::pin_truth_into_config(pin_path, value, se, n, seed);
        std::cout << "pinned into " << pin_path << '\n';
    }
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir, int workers,
                   bool stable) {
    const std::string config_text = read_file(config_path);
    std::istringstream ss(config_text);
    const elci::ExperimentConfig config = elci::parse_experiment_config(ss);

    ManifestWriter manifest("experiment", config.seed);
    manifest.stable = stable;

    std::pair<double, double> truth{0.0, 0.0};
    const std::vector<elci::ResultRow> rows = elci::run_experiment(config, workers, &truth);

    fs::create_directories(out_dir);
    const std::string csv_path = out_dir + "/results.csv";
    {
        std::ofstream out(csv_path, std::ios::trunc);
        if (!out) throw elci::ValidationError("cannot write '" + csv_path + "'");
        elci::emit_table(rows, out, /*include_timing=*/!stable);
    }

    // deterministic per-row summary on stdout (no timing)
    for (const auto& r : rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s %s coverage=%.6g mean_len=%.6g failures=%d",
                      r.method.c_str(), r.params.c_str(), r.coverage, r.mean_len, r.failures);
        std::cout << buf << '\n';
    }
    std::cout << "wrote " << csv_path << '\n';

    manifest.doc["resolved_config"] = {{"path", config_path}, {"text", config_text},
                                       {"workers", workers}};
    manifest.doc["truth"] = {{"value", truth.first},
                             {"se", truth.second},
                             {"pinned", config.truth_value.has_value()},
                             {"n", config.truth_n},
                             {"seed", config.truth_seed}};
    json rows_json = json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"method", r.method},
                             {"params", r.params},
                             {"coverage", r.coverage},
                             {"coverage_se", r.coverage_se},
                             {"mean_len", r.mean_len},
                             {"std_len", r.std_len},
                             {"overshoot", r.overshoot},
                             {"failures", r.failures}});
    manifest.doc["rows"] = rows_json;
    manifest.add_output(csv_path);
    manifest.write(out_dir + "/manifest.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimization-based confidence intervals for stochastic simulation "
                 "under nonparametric input uncertainty"};
    app.require_subcommand(1);

    // ci
    auto* ci = app.add_subcommand("ci", "Build a confidence interval from data files");
    std::string ci_model, ci_data, ci_method, ci_out = ".";
    double ci_alpha = 0.05;
    elci::BudgetPlan ci_budgets;
    std::uint64_t ci_seed = 0;
    bool ci_stable = false;
    ci->add_option("--model", ci_model, "Preset name or dag:<file>[:tail=<thr>]")->required();
    ci->add_option("--data", ci_data, "Directory with model_<i>.csv files")->required();
    ci->add_option("--alpha", ci_alpha, "1 - confidence level");
    ci->add_option("--method", ci_method, "bel|eel|fel|lel|boot|delta")->required();
    ci->add_option("--r1", ci_budgets.r1, "Step-1 replications (EL methods)");
    ci->add_option("--r2", ci_budgets.r2, "Step-3 replications per bound (EL methods)");
    ci->add_option("--b", ci_budgets.b, "Bootstrap resamples");
    ci->add_option("--rb", ci_budgets.rb, "Runs per bootstrap resample");
    ci->add_option("--rd", ci_budgets.rd, "Delta-method replications");
    ci->add_option("--seed", ci_seed, "Master seed");
    ci->add_option("--out", ci_out, "Output directory");
    ci->add_flag("--stable-output", ci_stable, "Omit wall-clock info from outputs");

    // solve
    auto* solve = app.add_subcommand("solve", "Run the weight optimizer on raw coefficients");
    std::string solve_coeffs, solve_out = ".";
    double solve_alpha = 0.05;
    bool solve_stable = false;
    solve->add_option("--coeffs", solve_coeffs, "File with comma-separated rows, one per model")
        ->required();
    solve->add_option("--alpha", solve_alpha, "1 - confidence level");
    solve->add_option("--out", solve_out, "Output directory");
    solve->add_flag("--stable-output", solve_stable, "Omit wall-clock info from outputs");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a coverage experiment sweep");
    std::string exp_config, exp_out;
    int exp_workers = 1;
    bool exp_stable = false;
    exp->add_option("--config", exp_config, "Experiment config file")->required();
    exp->add_option("--out", exp_out, "Output directory")->required();
    exp->add_option("--workers", exp_workers, "Worker threads")->check(CLI::PositiveNumber);
    exp->add_flag("--stable-output", exp_stable,
                  "Zero the timing column and omit wall-clock info");

    // truth
    auto* truth = app.add_subcommand("truth", "Estimate a ground-truth performance value");
    std::string truth_model, truth_pin;
    std::vector<double> truth_rates;
    long long truth_n = 1000000;
    std::uint64_t truth_seed = 0;
    truth->add_option("--model", truth_model, "Preset name or dag:<file>[:tail=<thr>]")->required();
    truth->add_option("--rates", truth_rates, "Exponential rates (comma-separated)")
        ->delimiter(',');
    truth->add_option("--n", truth_n, "Oracle replications");
    truth->add_option("--seed", truth_seed, "Master seed");
    truth->add_option("--pin", truth_pin, "Write the result into this experiment config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (ci->parsed())
            return cmd_ci(ci_model, ci_data, ci_alpha, ci_method, ci_budgets, ci_seed, ci_out,
                          ci_stable);
        if (solve->parsed()) return cmd_solve(solve_coeffs, solve_alpha, solve_out, solve_stable);
        if (exp->parsed()) return cmd_experiment(exp_config, exp_out, exp_workers, exp_stable);
        if (truth->parsed())
            return cmd_truth(truth_model, truth_rates, truth_n, truth_seed, truth_pin);
    } catch (const elci::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const elci::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const elci::SimulationError& e) {
        std::cerr << "simulation failure: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}
