#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "elci/core.hpp"
#include "elci/experiments.hpp"
#include "elci/models.hpp"

namespace elci {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ValidationError("config key '" + key + "': bad number '" + tok + "'");
        }
    }
    if (out.empty()) throw ValidationError("config key '" + key + "': empty list");
    return out;
}

inline long long parse_int(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(trim(s), &pos);
        if (pos != trim(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad integer '" + trim(s) + "'");
    }
}

inline double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(trim(s), &pos);
        if (pos != trim(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad number '" + trim(s) + "'");
    }
}

}  // namespace detail

/// Parses `row = <method> key=value ...` into a MethodSpec. EL methods take
/// r1/r2, the bootstrap b/rb, the delta method rd.
inline MethodSpec parse_method_row(const std::string& text) {
    std::istringstream ss(text);
    std::string name;
    if (!(ss >> name)) throw ValidationError("config key 'row': empty row spec");
    MethodSpec spec;
    spec.method = method_from_string(name);
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config key 'row': expected key=value, got '" + tok + "'");
        const std::string k = tok.substr(0, eq);
        const long long v = detail::parse_int(tok.substr(eq + 1), "row." + k);
        if (k == "r1") spec.budgets.r1 = static_cast<int>(v);
        else if (k == "r2") spec.budgets.r2 = static_cast<int>(v);
        else if (k == "b") spec.budgets.b = static_cast<int>(v);
        else if (k == "rb") spec.budgets.rb = static_cast<int>(v);
        else if (k == "rd") spec.budgets.rd = static_cast<int>(v);
        else throw ValidationError("config key 'row': unknown budget key '" + k + "'");
    }
    return spec;
}

/// Resolves a model reference: a preset name, a DAG edge-list file path, or
/// `dag:<path>` explicitly (append `:tail=<thr>` for the tail-probability
/// variant).
inline PerformanceModel resolve_dag_model(std::string rest) {
    double threshold = 0.0;
    bool tail = false;
    const auto colon = rest.find(":tail=");
    if (colon != std::string::npos) {
        threshold = detail::parse_double(rest.substr(colon + 6), "model");
        rest = rest.substr(0, colon);
        tail = true;
    }
    const DagSpec dag = DagSpec::from_file(rest);
    return san(dag, tail ? SanMode::tail_indicator : SanMode::completion_time, threshold);
}

inline bool is_dag_reference(const std::string& ref) {
    if (ref.rfind("dag:", 0) == 0) return true;
    std::error_code ec;
    return std::filesystem::is_regular_file(ref, ec);
}

inline void resolve_model(const std::string& ref, ExperimentConfig& config) {
    config.model_name = ref;
    if (is_dag_reference(ref)) {
        config.model = resolve_dag_model(ref.rfind("dag:", 0) == 0 ? ref.substr(4) : ref);
        return;
    }
    const BuiltinSpec preset = builtin_spec(ref);
    config.model = preset.model;
    config.truth_spec = preset.truth;
    config.sizes = preset.sizes;
}

/// Line-based `key = value` experiment configuration. Unknown keys are
/// rejected with the offending key named.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig config;
    config.replications = 0;
    std::string line;
    bool have_model = false;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));

        if (key == "model") {
            resolve_model(value, config);
            have_model = true;
        } else if (key == "sizes") {
            config.sizes.clear();
            for (double v : detail::parse_double_list(value, key))
                config.sizes.push_back(static_cast<int>(v));
        } else if (key == "rates") {
            config.truth_spec = TrueInputSpec::exponential(detail::parse_double_list(value, key));
        } else if (key == "alpha") {
            config.alpha = detail::parse_double(value, key);
        } else if (key == "k") {
            config.replications = static_cast<int>(detail::parse_int(value, key));
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
        } else if (key == "row") {
            config.rows.push_back(parse_method_row(value));
        } else if (key == "truth_value") {
            config.truth_value = detail::parse_double(value, key);
        } else if (key == "truth_se") {
            config.truth_se = detail::parse_double(value, key);
        } else if (key == "truth_n") {
            config.truth_n = detail::parse_int(value, key);
        } else if (key == "truth_seed") {
            config.truth_seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
        } else if (key == "budget") {
            config.declared_budget = detail::parse_int(value, key);
        } else if (key == "benchmark") {
            if (value == "true") config.benchmark = true;
            else if (value == "false") config.benchmark = false;
            else throw ValidationError("config key 'benchmark': expected true or false");
        } else if (key == "allow_noisy_truth") {
            if (value == "true") config.allow_noisy_truth = true;
            else if (value == "false") config.allow_noisy_truth = false;
            else throw ValidationError("config key 'allow_noisy_truth': expected true or false");
        } else if (key == "benchmark_r") {
            config.benchmark_r = static_cast<int>(detail::parse_int(value, key));
        } else {
            throw ValidationError("config: unknown key '" + key + "'");
        }
    }
    if (!have_model) throw ValidationError("config key 'model': missing");
    config.validate();
    return config;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open file '" + path + "'");
    return parse_experiment_config(in);
}

/// Rewrites truth_* keys in a config file in place (used by truth pinning).
inline void pin_truth_into_config(const std::string& path, double value, double se, long long n,
                                  std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open file '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        const bool is_truth_key = t.rfind("truth_value", 0) == 0 || t.rfind("truth_se", 0) == 0 ||
                                  t.rfind("truth_n", 0) == 0 || t.rfind("truth_seed", 0) == 0;
        if (!is_truth_key) lines.push_back(line);
    }
    in.close();

    char buf[80];
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("config: cannot write file '" + path + "'");
    for (const auto& l : lines) out << l << '\n';
    std::snprintf(buf, sizeof(buf), "truth_value = %.17g", value);
    out << buf << '\n';
    std::snprintf(buf, sizeof(buf), "truth_se = %.17g", se);
    out << buf << '\n';
    out << "truth_n = " << n << '\n';
    out << "truth_seed = " << seed << '\n';
}

}  // namespace elci
