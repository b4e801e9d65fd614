#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace elci {

/// A single observation: a real vector of fixed per-model dimensionality.
using Observation = std::vector<double>;

/// Bad inputs, datasets, models or configurations. Maps to CLI exit code 2.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Optimizer could not produce a solution (bracket/sign failures). Exit code 3.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A simulation run produced an unusable output (non-finite value etc.).
struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The m observed input samples {X_{i,j}}. Immutable after construction by
/// convention; nothing in the library mutates a dataset it is handed.
struct InputDataset {
    std::vector<std::vector<Observation>> models;

    int model_count() const { return static_cast<int>(models.size()); }
    int sample_size(int i) const { return static_cast<int>(models[static_cast<std::size_t>(i)].size()); }

    /// Total number of observations N across all models.
    int total_size() const {
        int n = 0;
        for (const auto& s : models) n += static_cast<int>(s.size());
        return n;
    }

    std::vector<int> sizes() const {
        std::vector<int> out;
        out.reserve(models.size());
        for (const auto& s : models) out.push_back(static_cast<int>(s.size()));
        return out;
    }

    void validate() const {
        if (models.empty()) throw ValidationError("dataset: need at least one input model");
        for (std::size_t i = 0; i < models.size(); ++i) {
            const auto& sample = models[i];
            if (sample.size() < 2)
                throw ValidationError("dataset: sample too small for model " + std::to_string(i + 1) +
                                      " (need n >= 2, got " + std::to_string(sample.size()) + ")");
            const std::size_t dim = sample.front().size();
            if (dim == 0)
                throw ValidationError("dataset: empty observation in model " + std::to_string(i + 1));
            for (const auto& obs : sample) {
                if (obs.size() != dim)
                    throw ValidationError("dataset: dimension mismatch within model " +
                                          std::to_string(i + 1));
                for (double v : obs)
                    if (!std::isfinite(v))
                        throw ValidationError("dataset: non-finite observation in model " +
                                              std::to_string(i + 1));
            }
        }
    }
};

/// Per-model probability weights on the data support. The solver's decision
/// variable and the resampling measure.
struct ProbabilityWeights {
    std::vector<std::vector<double>> rows;

    static ProbabilityWeights uniform(const std::vector<int>& sizes) {
        ProbabilityWeights w;
        w.rows.reserve(sizes.size());
        for (int n : sizes)
            w.rows.emplace_back(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
        return w;
    }

    int model_count() const { return static_cast<int>(rows.size()); }

    void validate() const {
        if (rows.empty()) throw ValidationError("weights: empty");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            double sum = 0.0;
            for (double v : rows[i]) {
                if (!(v >= 0.0))
                    throw ValidationError("weights: negative entry in model " + std::to_string(i + 1));
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw ValidationError("weights: model " + std::to_string(i + 1) +
                                      " does not sum to 1 (sum = " + std::to_string(sum) + ")");
        }
    }
};

/// One replication's input variates. For model i, run_lengths[i] observations
/// are exposed, either resolved through drawn data indices or read directly
/// from a buffer of synthetic observations (when draw == nullptr).
class ReplicationInputs {
public:
    ReplicationInputs(const std::vector<std::vector<Observation>>& obs,
                      const std::vector<std::vector<std::uint32_t>>* draw)
        : obs_(&obs), draw_(draw) {}

    const Observation& at(int model, int t) const {
        const auto i = static_cast<std::size_t>(model);
        const auto k = static_cast<std::size_t>(t);
        return draw_ ? (*obs_)[i][(*draw_)[i][k]] : (*obs_)[i][k];
    }

private:
    const std::vector<std::vector<Observation>>* obs_;
    const std::vector<std::vector<std::uint32_t>>* draw_;
};

/// The black-box performance function h with its declared run lengths T_i.
/// evaluate must be pure: identical inputs give identical outputs.
struct PerformanceModel {
    std::vector<int> run_lengths;
    std::vector<int> obs_dims;  // expected observation dimensionality per model
    std::optional<std::pair<double, double>> natural_range;  // used for overshoot accounting only
    std::function<double(const ReplicationInputs&)> evaluate;

    int model_count() const { return static_cast<int>(run_lengths.size()); }
};

/// Checks dataset and model invariants and that their model counts agree.
inline void validate(const InputDataset& dataset, const PerformanceModel& model) {
    dataset.validate();
    if (model.model_count() == 0) throw ValidationError("model: no input models declared");
    for (int t : model.run_lengths)
        if (t <= 0) throw ValidationError("model: run lengths must be positive");
    if (model.model_count() != dataset.model_count())
        throw ValidationError("model/dataset arity mismatch: model expects m=" +
                              std::to_string(model.model_count()) + ", dataset has m=" +
                              std::to_string(dataset.model_count()));
    if (!model.obs_dims.empty()) {
        if (static_cast<int>(model.obs_dims.size()) != model.model_count())
            throw ValidationError("model: obs_dims arity mismatch");
        for (int i = 0; i < dataset.model_count(); ++i) {
            const int dim = static_cast<int>(dataset.models[static_cast<std::size_t>(i)].front().size());
            if (model.obs_dims[static_cast<std::size_t>(i)] != dim)
                throw ValidationError("dimension mismatch for model " + std::to_string(i + 1) +
                                      ": expected " + std::to_string(model.obs_dims[static_cast<std::size_t>(i)]) +
                                      ", dataset has " + std::to_string(dim));
        }
    }
    if (!model.evaluate) throw ValidationError("model: evaluate function not set");
}

/// Output of the paired min/max weight optimization.
struct ElSolution {
    ProbabilityWeights w_min, w_max;
    double obj_min = 0.0, obj_max = 0.0;
    double beta_min = 0.0, beta_max = 0.0;  // KKT multipliers of the divergence constraint
    std::vector<double> lambdas_min, lambdas_max;
    bool degenerate = false;
};

enum class Method { BEL, EEL, FEL, LEL, BOOT, DELTA };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::BEL: return "BEL";
        case Method::EEL: return "EEL";
        case Method::FEL: return "FEL";
        case Method::LEL: return "LEL";
        case Method::BOOT: return "BOOT";
        case Method::DELTA: return "DELTA";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "bel" || s == "BEL") return Method::BEL;
    if (s == "eel" || s == "EEL") return Method::EEL;
    if (s == "fel" || s == "FEL") return Method::FEL;
    if (s == "lel" || s == "LEL") return Method::LEL;
    if (s == "boot" || s == "BOOT") return Method::BOOT;
    if (s == "delta" || s == "DELTA") return Method::DELTA;
    throw ValidationError("unknown method '" + s + "' (expected bel|eel|fel|lel|boot|delta)");
}

struct CiDiagnostics {
    double z_hat = std::numeric_limits<double>::quiet_NaN();  // point estimate
    std::optional<double> sigma_hat;    // output standard deviation
    std::optional<double> sigma_I_hat;  // input-induced standard deviation
    long long sims_used = 0;
};

/// A confidence interval with its level recorded verbatim. Bounds are never
/// clipped to the model's natural range; overshoot is reported, not repaired.
struct ConfidenceInterval {
    double lower = 0.0, upper = 0.0;
    double level = 0.0;
    Method method = Method::BEL;
    CiDiagnostics diag;

    double length() const { return upper - lower; }
};

/// Simulation budgets for the various methods.
struct BudgetPlan {
    int r1 = 0, r2 = 0;  // EL methods
    int b = 0, rb = 0;   // percentile bootstrap
    int rd = 0;          // delta method
};

}  // namespace elci
