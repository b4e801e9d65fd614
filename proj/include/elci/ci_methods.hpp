#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "elci/core.hpp"
#include "elci/el_solver.hpp"
#include "elci/influence.hpp"
#include "elci/sampling.hpp"
#include "elci/stats.hpp"

namespace elci {

struct Step3Stats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double var = std::numeric_limits<double>::quiet_NaN();  // divisor r2 - 1
    int r2 = 0;
};

/// Shared state of the EL pipeline: Step 1 (influence estimation), Step 2
/// (weight optimization), the input-variance estimate, and two Step-3
/// evaluation batches run under the min and max weights with independent
/// streams. All EL interval variants are pure functions of this state, which
/// makes their nesting relation hold sample-wise.
struct ElPipelineState {
    InfluenceEstimate influence;
    ElSolution solution;
    double sigma_I2 = 0.0;
    Step3Stats step3_min, step3_max;
    double alpha = 0.0;
};

namespace detail {

inline Step3Stats evaluate_batch(const PerformanceModel& model, const InputDataset& dataset,
                                 const ProbabilityWeights& weights, int r2, const StreamKey& key) {
    Step3Stats s;
    const std::vector<double> out = simulate(model, dataset, weights, r2, key);
    s.mean = mean(out);
    s.var = sample_variance(out, s.mean);
    s.r2 = r2;
    return s;
}

/// Assembles [lower, upper] from the two Step-3 anchors and their one-sided
/// widenings. The smaller anchor takes its widening downward and the larger
/// one upward, so lower <= upper holds even when the two noisy means cross.
inline ConfidenceInterval anchored_interval(const ElPipelineState& state, double widen_min,
                                            double widen_max, Method method, double level) {
    const double a = state.step3_min.mean;
    const double b = state.step3_max.mean;
    ConfidenceInterval ci;
    if (a <= b) {
        ci.lower = a - widen_min;
        ci.upper = b + widen_max;
    } else {
        ci.lower = b - widen_max;
        ci.upper = a + widen_min;
    }
    ci.level = level;
    ci.method = method;
    ci.diag.z_hat = state.influence.z_hat;
    ci.diag.sigma_hat = std::sqrt(state.influence.sigma2_hat);
    ci.diag.sigma_I_hat = std::sqrt(state.sigma_I2);
    ci.diag.sims_used = static_cast<long long>(state.influence.r1) + 2LL * state.step3_min.r2;
    return ci;
}

inline void require_step3(const ElPipelineState& state, const char* who) {
    if (state.step3_min.r2 < 2 || state.step3_max.r2 < 2)
        throw ValidationError(std::string(who) + ": pipeline state has no Step-3 batches");
}

}  // namespace detail

/// Runs Steps 1-3 once so that all EL variants can be read off the same state.
inline ElPipelineState run_pipeline(const PerformanceModel& model, const InputDataset& dataset,
                                    double alpha, int r1, int r2, const StreamKey& key,
                                    const SolverConfig& cfg = {}) {
    validate(dataset, model);
    if (r1 < 2) throw ValidationError("run_pipeline: need R1 >= 2");
    if (r2 < 2) throw ValidationError("run_pipeline: need R2 >= 2");

    ElPipelineState state;
    state.alpha = alpha;
    state.influence = estimate_influence(model, dataset, r1, key.child("step1", 0));
    state.solution = solve_weights(state.influence.g_hats, alpha, cfg);
    state.sigma_I2 = input_variance(state.influence, dataset);
    state.step3_min = detail::evaluate_batch(model, dataset, state.solution.w_min, r2,
                                             key.child("step3", 0));
    state.step3_max = detail::evaluate_batch(model, dataset, state.solution.w_max, r2,
                                             key.child("step3", 1));
    return state;
}

inline ElPipelineState run_pipeline(const PerformanceModel& model, const InputDataset& dataset,
                                    double alpha, int r1, int r2, std::uint64_t seed,
                                    const SolverConfig& cfg = {}) {
    return run_pipeline(model, dataset, alpha, r1, r2, StreamKey(seed), cfg);
}

/// Step 1 + Step 2 only; enough for the linearized interval.
inline ElPipelineState run_pipeline_linearized(const PerformanceModel& model,
                                               const InputDataset& dataset, double alpha, int r1,
                                               const StreamKey& key, const SolverConfig& cfg = {}) {
    validate(dataset, model);
    if (r1 < 2) throw ValidationError("run_pipeline: need R1 >= 2");
    ElPipelineState state;
    state.alpha = alpha;
    state.influence = estimate_influence(model, dataset, r1, key.child("step1", 0));
    state.solution = solve_weights(state.influence.g_hats, alpha, cfg);
    state.sigma_I2 = input_variance(state.influence, dataset);
    return state;
}

/// Basic interval: the two Step-3 sample means as they stand.
inline ConfidenceInterval bel(const ElPipelineState& state) {
    detail::require_step3(state, "bel");
    return detail::anchored_interval(state, 0.0, 0.0, Method::BEL, 1.0 - state.alpha);
}

/// Evaluation-adjusted interval: each bound pushed out by a normal-quantile
/// multiple of its batch's standard error.
inline ConfidenceInterval eel(const ElPipelineState& state, double alpha) {
    detail::require_step3(state, "eel");
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    const double widen_min = z * std::sqrt(state.step3_min.var / state.step3_min.r2);
    const double widen_max = z * std::sqrt(state.step3_max.var / state.step3_max.r2);
    return detail::anchored_interval(state, widen_min, widen_max, Method::EEL, 1.0 - alpha);
}

/// Fully adjusted interval: the widening matches the joint input-plus-noise
/// standard error, z (sqrt(sigma_I^2 + var/R2) - sigma_I). That never exceeds
/// the evaluation adjustment (sqrt(a^2+b^2) <= a+b), and the minimum below
/// pins the coupling inequality down to the last bit.
inline ConfidenceInterval fel(const ElPipelineState& state, double alpha) {
    detail::require_step3(state, "fel");
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    const double sigma_i = std::sqrt(state.sigma_I2);
    auto widen = [&](const Step3Stats& s) {
        const double eel_widen = z * std::sqrt(s.var / s.r2);
        const double joint = z * (std::sqrt(state.sigma_I2 + s.var / s.r2) - sigma_i);
        return std::min(std::max(joint, 0.0), eel_widen);
    };
    return detail::anchored_interval(state, widen(state.step3_min), widen(state.step3_max),
                                     Method::FEL, 1.0 - alpha);
}

/// Interval from the sampled linear approximation evaluated at the optimal
/// weights; needs no Step-3 runs.
inline ConfidenceInterval linearized_el(const ElPipelineState& state) {
    ConfidenceInterval ci;
    const double lo = state.influence.z_hat + state.solution.obj_min;
    const double hi = state.influence.z_hat + state.solution.obj_max;
    ci.lower = std::min(lo, hi);
    ci.upper = std::max(lo, hi);
    ci.level = 1.0 - state.alpha;
    ci.method = Method::LEL;
    ci.diag.z_hat = state.influence.z_hat;
    ci.diag.sigma_hat = std::sqrt(state.influence.sigma2_hat);
    ci.diag.sigma_I_hat = std::sqrt(state.sigma_I2);
    ci.diag.sims_used = state.influence.r1;
    return ci;
}

/// Smallest bootstrap size containing both nominal order-statistic ranks.
inline int min_bootstrap_size(double alpha) {
    int b = 3;
    while (std::lround(0.5 * alpha * (b + 1)) < 1) ++b;
    return b;
}

/// 1-based order-statistic ranks round(q (B+1)) for q = alpha/2, 1 - alpha/2,
/// clamped to [1, B]. Throws when the nominal ranks do not fit in [1, B].
inline std::pair<int, int> bootstrap_ranks(double alpha, int b) {
    const long rank_lo = std::lround(0.5 * alpha * (b + 1));
    const long rank_hi = std::lround((1.0 - 0.5 * alpha) * (b + 1));
    if (rank_lo < 1 || rank_hi > b)
        throw ValidationError("B too small for requested level: B=" + std::to_string(b) +
                              ", alpha=" + std::to_string(alpha) + "; need B >= " +
                              std::to_string(min_bootstrap_size(alpha)));
    return {static_cast<int>(std::clamp(rank_lo, 1L, static_cast<long>(b))),
            static_cast<int>(std::clamp(rank_hi, 1L, static_cast<long>(b)))};
}

/// Standard percentile bootstrap: resample each input model with replacement,
/// average R_b simulation runs per resample, and report order statistics at
/// the rounded ranks round(q (B+1)) for q = alpha/2 and 1 - alpha/2.
inline ConfidenceInterval percentile_bootstrap(const PerformanceModel& model,
                                               const InputDataset& dataset, double alpha, int b,
                                               int rb, const StreamKey& key) {
    validate(dataset, model);
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    const auto [k_lo, k_hi] = bootstrap_ranks(alpha, b);
    if (b < 3) throw ValidationError("percentile_bootstrap: need B >= 3");
    if (rb < 1) throw ValidationError("percentile_bootstrap: need R_b >= 1");

    const int m = dataset.model_count();
    const std::vector<int> sizes = dataset.sizes();
    std::vector<double> z(static_cast<std::size_t>(b));
    for (int l = 0; l < b; ++l) {
        RandomStream rs(key.child("resample", static_cast<std::uint64_t>(l)));
        ProbabilityWeights w;
        w.rows.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const auto n = static_cast<std::uint32_t>(sizes[static_cast<std::size_t>(i)]);
            auto& row = w.rows[static_cast<std::size_t>(i)];
            row.assign(n, 0.0);
            for (std::uint32_t t = 0; t < n; ++t) row[rs.uniform_index(n)] += 1.0 / n;
        }
        const std::vector<double> runs =
            simulate(model, dataset, w, rb, key.child("bootsim", static_cast<std::uint64_t>(l)));
        z[static_cast<std::size_t>(l)] = mean(runs);
    }

    ConfidenceInterval ci;
    ci.diag.z_hat = mean(z);
    ci.diag.sigma_hat = b >= 2 ? std::optional<double>(std::sqrt(sample_variance(z, ci.diag.z_hat)))
                               : std::nullopt;
    std::sort(z.begin(), z.end());
    ci.lower = z[static_cast<std::size_t>(k_lo - 1)];
    ci.upper = z[static_cast<std::size_t>(k_hi - 1)];
    ci.level = 1.0 - alpha;
    ci.method = Method::BOOT;
    ci.diag.sims_used = static_cast<long long>(b) * rb;
    return ci;
}

inline ConfidenceInterval percentile_bootstrap(const PerformanceModel& model,
                                               const InputDataset& dataset, double alpha, int b,
                                               int rb, std::uint64_t seed) {
    return percentile_bootstrap(model, dataset, alpha, b, rb, StreamKey(seed));
}

/// Nonparametric delta method: one influence-estimation pass with R_d runs,
/// then a normal interval with the stochastic and (floored) input variances
/// added under the root.
inline ConfidenceInterval delta_method(const PerformanceModel& model, const InputDataset& dataset,
                                       double alpha, int rd, const StreamKey& key) {
    if (rd < 2) throw ValidationError("delta_method: need R_d >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    const InfluenceEstimate est = estimate_influence(model, dataset, rd, key.child("step1", 0));
    const double iv = input_variance(est, dataset);
    const double z = normal_quantile(1.0 - 0.5 * alpha);
    const double half = z * std::sqrt(est.sigma2_hat / rd + iv);

    ConfidenceInterval ci;
    ci.lower = est.z_hat - half;
    ci.upper = est.z_hat + half;
    ci.level = 1.0 - alpha;
    ci.method = Method::DELTA;
    ci.diag.z_hat = est.z_hat;
    ci.diag.sigma_hat = std::sqrt(est.sigma2_hat);
    ci.diag.sigma_I_hat = std::sqrt(iv);
    ci.diag.sims_used = rd;
    return ci;
}

inline ConfidenceInterval delta_method(const PerformanceModel& model, const InputDataset& dataset,
                                       double alpha, int rd, std::uint64_t seed) {
    return delta_method(model, dataset, alpha, rd, StreamKey(seed));
}

}  // namespace elci
