#pragma once

// Test-only oracles, kept independent of the library's solution paths:
//  - quantile oracles by plain bisection on the CDFs,
//  - a projected-gradient barrier solver for the weight program,
//  - a 1-D grid search for the two-point single-model case,
//  - exact influence values by full enumeration of index tuples.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "elci/core.hpp"
#include "elci/stats.hpp"

namespace oracles {

inline double chi2_df1_quantile_bisect(double p) {
    double lo = 0.0, hi = 200.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::erf(std::sqrt(0.5 * mid)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double normal_quantile_bisect(double p) {
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Euclidean projection of v onto the probability simplex (Duchi et al.).
inline std::vector<double> project_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    int rho = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        css += u[k];
        const double t = (css - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) {
            rho = static_cast<int>(k + 1);
            tau = t;
        }
    }
    (void)rho;
    for (auto& x : v) x = std::max(x - tau, 0.0);
    return v;
}

/// Minimizes sum c.w over the divergence ball by a log-barrier path with
/// projected-gradient descent inside each stage. Entirely independent of the
/// dual root-finding route used by the library.
inline double barrier_pgd_min(const std::vector<std::vector<double>>& coeffs, double chi2,
                              double* div_out = nullptr) {
    const std::size_t m = coeffs.size();
    std::vector<std::vector<double>> w(m);
    for (std::size_t i = 0; i < m; ++i)
        w[i].assign(coeffs[i].size(), 1.0 / static_cast<double>(coeffs[i].size()));

    auto div_of = [&](const std::vector<std::vector<double>>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double n = static_cast<double>(x[i].size());
            for (double v : x[i]) {
                if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
                s += std::log(n * v);
            }
        }
        return -2.0 * s;
    };
    auto lin_of = [&](const std::vector<std::vector<double>>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < x[i].size(); ++j) s += coeffs[i][j] * x[i][j];
        return s;
    };

    for (double mu : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
        auto value = [&](const std::vector<std::vector<double>>& x) {
            const double d = div_of(x);
            if (!(d < chi2)) return std::numeric_limits<double>::infinity();
            return lin_of(x) - mu * std::log(chi2 - d);
        };
        double f = value(w);
        double eta = 0.05;
        for (int it = 0; it < 20000; ++it) {
            const double d = div_of(w);
            const double gap = chi2 - d;
            std::vector<std::vector<double>> cand(m);
            for (std::size_t i = 0; i < m; ++i) {
                cand[i].resize(w[i].size());
                for (std::size_t j = 0; j < w[i].size(); ++j) {
                    const double grad = coeffs[i][j] - 2.0 * mu / (w[i][j] * gap);
                    cand[i][j] = w[i][j] - eta * grad;
                }
                cand[i] = project_simplex(cand[i]);
            }
            const double fc = value(cand);
            if (fc < f) {
                double move = 0.0;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < w[i].size(); ++j)
                        move = std::max(move, std::abs(cand[i][j] - w[i][j]));
                w = std::move(cand);
                f = fc;
                eta *= 1.25;
                if (move < 1e-14) break;
            } else {
                eta *= 0.5;
                if (eta < 1e-18) break;
            }
        }
    }
    if (div_out) *div_out = div_of(w);
    return lin_of(w);
}

inline double barrier_pgd_max(const std::vector<std::vector<double>>& coeffs, double chi2) {
    std::vector<std::vector<double>> neg(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        neg[i].resize(coeffs[i].size());
        for (std::size_t j = 0; j < coeffs[i].size(); ++j) neg[i][j] = -coeffs[i][j];
    }
    return -barrier_pgd_min(neg, chi2);
}

/// Grid search for one model with two support points: weights (w, 1-w).
inline std::pair<double, double> grid_min_max_two_point(double g0, double g1, double chi2,
                                                        double step = 1e-6) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double w = step; w < 1.0; w += step) {
        const double d = -2.0 * (std::log(2.0 * w) + std::log(2.0 * (1.0 - w)));
        if (d > chi2) continue;
        const double obj = g0 * w + g1 * (1.0 - w);
        lo = std::min(lo, obj);
        hi = std::max(hi, obj);
    }
    return {lo, hi};
}

/// Exact empirical influence values and plug-in mean by enumerating every
/// combination of data indices (viable only for tiny datasets/run lengths).
struct EnumeratedInfluence {
    std::vector<std::vector<double>> g;
    double z = 0.0;
};

inline EnumeratedInfluence enumerate_influence(const elci::PerformanceModel& model,
                                               const elci::InputDataset& dataset) {
    const int m = dataset.model_count();
    std::vector<int> sizes = dataset.sizes();
    // odometer over the flattened (model, t) slots
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < m; ++i)
        for (int t = 0; t < model.run_lengths[static_cast<std::size_t>(i)]; ++t)
            slots.emplace_back(i, t);

    std::vector<std::vector<std::uint32_t>> draw(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        draw[static_cast<std::size_t>(i)].assign(
            static_cast<std::size_t>(model.run_lengths[static_cast<std::size_t>(i)]), 0);

    std::vector<std::vector<double>> cond_sum(static_cast<std::size_t>(m));
    std::vector<std::vector<long long>> cond_cnt(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        cond_sum[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)]), 0.0);
        cond_cnt[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(sizes[static_cast<std::size_t>(i)]), 0);
    }

    double total = 0.0;
    long long count = 0;
    const std::size_t n_slots = slots.size();
    while (true) {
        const elci::ReplicationInputs inputs(dataset.models, &draw);
        const double h = model.evaluate(inputs);
        total += h;
        ++count;
        // accumulate h into each slot's conditional bucket
        for (const auto& [i, t] : slots) {
            const auto j = draw[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            cond_sum[static_cast<std::size_t>(i)][j] += h;
            cond_cnt[static_cast<std::size_t>(i)][j] += 1;
        }
        // advance the odometer
        std::size_t s = 0;
        for (; s < n_slots; ++s) {
            const auto [i, t] = slots[s];
            auto& v = draw[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            if (static_cast<int>(v) + 1 < sizes[static_cast<std::size_t>(i)]) {
                ++v;
                break;
            }
            v = 0;
        }
        if (s == n_slots) break;
    }

    EnumeratedInfluence out;
    out.z = total / static_cast<double>(count);
    out.g.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        out.g[iu].assign(static_cast<std::size_t>(sizes[iu]), 0.0);
        const int t_i = model.run_lengths[iu];
        for (int j = 0; j < sizes[iu]; ++j) {
            // The pooled bucket holds T_i slots with count/n_i combos each, so
            // T_i * pooled mean equals the sum over t of E[h | slot (i,t) = j].
            const double e_given = cond_sum[iu][static_cast<std::size_t>(j)] /
                                   static_cast<double>(cond_cnt[iu][static_cast<std::size_t>(j)]);
            out.g[iu][static_cast<std::size_t>(j)] =
                static_cast<double>(t_i) * e_given - static_cast<double>(t_i) * out.z;
        }
    }
    return out;
}

}  // namespace oracles
