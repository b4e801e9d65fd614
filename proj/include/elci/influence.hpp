#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "elci/core.hpp"
#include "elci/sampling.hpp"
#include "elci/stats.hpp"

namespace elci {

/// Monte Carlo estimate of the empirical influence function together with the
/// point estimate and output variance of the same R1 uniform-weight runs.
struct InfluenceEstimate {
    std::vector<std::vector<double>> g_hats;  // per model i, length n_i, sums to zero
    double z_hat = 0.0;
    double sigma2_hat = 0.0;  // divisor R1 - 1
    int r1 = 0;
    std::vector<int> run_lengths;  // T_i, copied from the model
};

/// Step 1 of the pipeline: R1 replications under uniform weights. The
/// influence value at data point (i,j) is the sample covariance between the
/// output and the centered occurrence count of that point,
///   g[i][j] = (1/R1) sum_r (h_r - zbar) * (n_i * c_{i,j,r} - T_i),
/// where c counts how often index j was drawn among the T_i variates of
/// model i in replication r. Occurrence counting is per drawn index, so ties
/// in the data values do not matter.
inline InfluenceEstimate estimate_influence(const PerformanceModel& model,
                                            const InputDataset& dataset, int r1,
                                            const StreamKey& key) {
    validate(dataset, model);
    if (r1 < 2) throw ValidationError("estimate_influence: need R1 >= 2");

    const int m = dataset.model_count();
    const std::vector<int> sizes = dataset.sizes();
    const WeightedSampler sampler(ProbabilityWeights::uniform(sizes));

    // Pass 1: draw, evaluate, and keep the flat index record per model.
    std::vector<std::vector<std::uint32_t>> flat(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        flat[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(r1) *
                                                 static_cast<std::size_t>(model.run_lengths[static_cast<std::size_t>(i)]));
    std::vector<double> outputs(static_cast<std::size_t>(r1));
    const std::uint64_t base = key.hash();
    ReplicationDraw draw;
    for (int rep = 0; rep < r1; ++rep) {
        RandomStream rs(child_hash(base, "rep", static_cast<std::uint64_t>(rep)));
        draw_replication_into(draw, sampler, model.run_lengths, rs);
        const ReplicationInputs inputs(dataset.models, &draw.indices);
        const double h = model.evaluate(inputs);
        if (!std::isfinite(h))
            throw SimulationError("model returned non-finite value at replication " +
                                  std::to_string(rep + 1));
        outputs[static_cast<std::size_t>(rep)] = h;
        for (int i = 0; i < m; ++i) {
            const auto t_i = static_cast<std::size_t>(model.run_lengths[static_cast<std::size_t>(i)]);
            std::copy(draw.indices[static_cast<std::size_t>(i)].begin(),
                      draw.indices[static_cast<std::size_t>(i)].end(),
                      flat[static_cast<std::size_t>(i)].begin() + static_cast<std::size_t>(rep) * t_i);
        }
    }

    InfluenceEstimate est;
    est.r1 = r1;
    est.run_lengths = model.run_lengths;
    est.z_hat = mean(outputs);
    est.sigma2_hat = sample_variance(outputs, est.z_hat);

    // Pass 2: centered-count inner products, O(sum_i (n_i + T_i)) per replication.
    est.g_hats.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const int n_i = sizes[iu];
        const int t_i = model.run_lengths[iu];
        auto& g = est.g_hats[iu];
        g.assign(static_cast<std::size_t>(n_i), 0.0);
        std::vector<int> count(static_cast<std::size_t>(n_i), 0);
        const auto& idx = flat[iu];
        for (int rep = 0; rep < r1; ++rep) {
            const auto offset = static_cast<std::size_t>(rep) * static_cast<std::size_t>(t_i);
            for (int t = 0; t < t_i; ++t) ++count[idx[offset + static_cast<std::size_t>(t)]];
            const double dev = outputs[static_cast<std::size_t>(rep)] - est.z_hat;
            for (int j = 0; j < n_i; ++j)
                g[static_cast<std::size_t>(j)] +=
                    dev * (static_cast<double>(n_i) * count[static_cast<std::size_t>(j)] - t_i);
            for (int t = 0; t < t_i; ++t) count[idx[offset + static_cast<std::size_t>(t)]] = 0;
        }
        for (auto& v : g) v /= static_cast<double>(r1);
    }
    return est;
}

/// Input-induced variance estimate from the Step-1 replications, with the
/// simulation-noise bias removed and the result reset to zero if the
/// correction overshoots:
///   max{ sum_i (1/n_i) [ sum_j g[i][j]^2 / n_i - n_i T_i sigma2 / R1 ], 0 }.
inline double input_variance(const InfluenceEstimate& est, const InputDataset& dataset) {
    if (est.g_hats.size() != dataset.models.size())
        throw ValidationError("input_variance: estimate/dataset arity mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < est.g_hats.size(); ++i) {
        const double n_i = static_cast<double>(dataset.sample_size(static_cast<int>(i)));
        double sq = 0.0;
        for (double v : est.g_hats[i]) sq += v * v;
        const double bias = n_i * static_cast<double>(est.run_lengths[i]) * est.sigma2_hat /
                            static_cast<double>(est.r1);
        total += (sq / n_i - bias) / n_i;
    }
    return std::max(total, 0.0);
}

}  // namespace elci
