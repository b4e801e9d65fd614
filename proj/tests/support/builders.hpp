#pragma once

// Small model/dataset builders shared by the test suites.

#include <vector>

#include "elci/core.hpp"
#include "elci/sampling.hpp"

namespace builders {

inline elci::InputDataset dataset_1d(const std::vector<std::vector<double>>& values) {
    elci::InputDataset d;
    for (const auto& sample : values) {
        std::vector<elci::Observation> obs;
        for (double v : sample) obs.push_back({v});
        d.models.push_back(std::move(obs));
    }
    return d;
}

inline elci::PerformanceModel constant_model(int m, int t, double c) {
    elci::PerformanceModel model;
    model.run_lengths.assign(static_cast<std::size_t>(m), t);
    model.obs_dims.assign(static_cast<std::size_t>(m), 1);
    model.evaluate = [c](const elci::ReplicationInputs&) { return c; };
    return model;
}

/// m = 1, T = 1, h(x) = x: the influence function is x - mean.
inline elci::PerformanceModel identity_model() {
    elci::PerformanceModel model;
    model.run_lengths = {1};
    model.obs_dims = {1};
    model.evaluate = [](const elci::ReplicationInputs& in) { return in.at(0, 0)[0]; };
    return model;
}

/// Sum over models and slots of the (scalar) inputs, optionally squared on the
/// second model; small and nonlinear enough to exercise influence estimation.
inline elci::PerformanceModel toy_nonlinear_model(const std::vector<int>& run_lengths) {
    elci::PerformanceModel model;
    model.run_lengths = run_lengths;
    model.obs_dims.assign(run_lengths.size(), 1);
    model.evaluate = [run_lengths](const elci::ReplicationInputs& in) {
        double s = 0.0;
        for (std::size_t i = 0; i < run_lengths.size(); ++i)
            for (int t = 0; t < run_lengths[i]; ++t) {
                const double x = in.at(static_cast<int>(i), t)[0];
                s += (i % 2 == 0) ? x : x * x;
            }
        return s + 0.25 * in.at(0, 0)[0] * in.at(0, run_lengths[0] - 1)[0];
    };
    return model;
}

inline elci::InputDataset random_dataset(elci::RandomStream& rs, int m, int n_lo, int n_hi) {
    elci::InputDataset d;
    for (int i = 0; i < m; ++i) {
        const int n = n_lo + static_cast<int>(rs.uniform_index(static_cast<std::uint32_t>(n_hi - n_lo + 1)));
        std::vector<elci::Observation> sample;
        for (int j = 0; j < n; ++j) sample.push_back({rs.normal(0.0, 1.0) + 0.5});
        d.models.push_back(std::move(sample));
    }
    return d;
}

inline std::vector<std::vector<double>> random_coeffs(elci::RandomStream& rs, int max_m = 3,
                                                      int max_n = 4) {
    const int m = 1 + static_cast<int>(rs.uniform_index(static_cast<std::uint32_t>(max_m)));
    std::vector<std::vector<double>> coeffs(static_cast<std::size_t>(m));
    for (auto& g : coeffs) {
        const int n = 2 + static_cast<int>(rs.uniform_index(static_cast<std::uint32_t>(max_n - 1)));
        g.resize(static_cast<std::size_t>(n));
        for (auto& v : g) v = 4.0 * rs.uniform() - 2.0;
    }
    return coeffs;
}

}  // namespace builders
