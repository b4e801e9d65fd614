#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "elci/core.hpp"
#include "elci/stats.hpp"

namespace elci {

/// The averaged Burg-entropy divergence ball used by the weight optimization:
/// weights are feasible when -2 sum_{i,j} log(n_i w_{i,j}) <= chi2 with
/// chi2 the 1-alpha quantile of the chi-square distribution, df 1. Dividing
/// by 2N turns the constraint into a divergence ball of radius chi2/(2N).
struct UncertaintySetSpec {
    double alpha = 0.0;
    std::vector<int> sizes;
    double chi2 = 0.0;

    static UncertaintySetSpec make(double alpha, std::vector<int> sizes) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ValidationError("alpha must lie in (0,1)");
        UncertaintySetSpec s;
        s.alpha = alpha;
        s.sizes = std::move(sizes);
        s.chi2 = chi2_quantile(1.0 - alpha);
        return s;
    }

    int total_size() const {
        int n = 0;
        for (int v : sizes) n += v;
        return n;
    }

    double radius() const { return chi2 / (2.0 * total_size()); }

    /// The two roots l < 1 < u of x e^{1 - x} = e^{-chi2/2}. Every feasible
    /// weight satisfies l/n_i <= w_{i,j} <= u/n_i.
    std::pair<double, double> weight_envelope() const {
        const double target = -0.5 * chi2;  // solve log(x) + 1 - x = target
        auto bisect = [target](double lo, double hi) {
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double f = std::log(mid) + 1.0 - mid - target;
                // log(x)+1-x increases on (0,1), decreases on (1,inf)
                if ((mid < 1.0) == (f < 0.0)) lo = mid; else hi = mid;
            }
            return 0.5 * (lo + hi);
        };
        const double l = bisect(std::numeric_limits<double>::min(), 1.0);
        // upper root: expand bracket until f < 0
        double hi = 2.0;
        while (std::log(hi) + 1.0 - hi > target) hi *= 2.0;
        double lo = 1.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double f = std::log(mid) + 1.0 - mid - target;
            (f > 0.0 ? lo : hi) = mid;
        }
        return {l, 0.5 * (lo + hi)};
    }
};

struct SolverConfig {
    double newton_tol = 1e-12;  // residual of the lambda equation
    double bisect_tol = 1e-12;  // relative width on beta
    int max_newton = 200;
    int max_bisect = 200;
};

/// -2 sum_{i,j} log(n_i w_{i,j}); zero iff all weights are uniform. A zero or
/// negative weight yields +infinity (constraint violation, not an exception).
inline double divergence(const ProbabilityWeights& w) {
    double s = 0.0;
    for (const auto& row : w.rows) {
        const double n = static_cast<double>(row.size());
        for (double v : row) {
            if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
            s += std::log(n * v);
        }
    }
    return -2.0 * s;
}

namespace detail {

constexpr double kDegenerateTol = 1e-12;

/// Solves sum_j 2 beta / (g[j] + lambda) = 1 for lambda > 0, where g >= 0 with
/// min g = 0 (coefficients shifted per model). The left side is decreasing and
/// convex in lambda, so Newton converges from the left; steps leaving the
/// bracket fall back to bisection.
inline double solve_lambda_shifted(const std::vector<double>& g, double beta,
                                   const SolverConfig& cfg) {
    const double n = static_cast<double>(g.size());
    auto residual = [&](double lam, double& deriv) {
        double f = -1.0, d = 0.0;
        for (double gj : g) {
            const double denom = gj + lam;
            const double term = 2.0 * beta / denom;
            f += term;
            d -= term / denom;
        }
        deriv = d;
        return f;
    };

    double lo = 0.0;          // residual -> +inf as lambda -> 0+
    double hi = 2.0 * beta * n;  // residual <= 0 here unless all g equal 0
    {
        double d;
        int guard = 0;
        while (residual(hi, d) > 0.0 && guard++ < 128) hi *= 2.0;
    }
    double lam = std::min(2.0 * beta, 0.5 * hi);  // suggested start, kept in bracket
    if (lam <= lo) lam = 0.5 * hi;
    double deriv = 0.0;
    for (int it = 0; it < cfg.max_newton; ++it) {
        const double f = residual(lam, deriv);
        if (std::abs(f) <= cfg.newton_tol) return lam;
        (f > 0.0 ? lo : hi) = lam;
        double next = lam - f / deriv;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == lam) break;
        lam = next;
    }
    return lam;
}

struct OneSided {
    ProbabilityWeights w;
    double obj = 0.0;
    double beta = 0.0;
    std::vector<double> lambdas;
    bool degenerate = false;
};

/// Minimizes sum_{i,j} G[i][j] w_{i,j} over the divergence ball via the dual
/// characterization: each lambda_i(beta) solves the per-model equation above
/// and beta* is the root of
///   2 sum_{i,j} log(2 n_i beta / (G[i][j] + lambda_i(beta))) + chi2 = 0,
/// bisected over (0, D / (2 (1 - e^{-chi2/(2N)}) min_i n_i)).
inline OneSided solve_min(const std::vector<std::vector<double>>& coeffs, double chi2,
                          const SolverConfig& cfg) {
    const std::size_t m = coeffs.size();
    if (m == 0) throw ValidationError("solve_weights: no coefficient vectors");

    std::vector<std::vector<double>> shifted(m);
    std::vector<double> shift(m), spread(m);
    std::vector<bool> constant(m);
    int min_n = std::numeric_limits<int>::max();
    long long total_n = 0;
    double d_max = 0.0;
    bool any_varying = false;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& g = coeffs[i];
        if (g.size() < 2)
            throw ValidationError("solve_weights: model " + std::to_string(i + 1) +
                                  " needs at least 2 coefficients");
        double gmin = g[0], gmax = g[0];
        for (double v : g) {
            if (!std::isfinite(v))
                throw ValidationError("solve_weights: non-finite coefficient in model " +
                                      std::to_string(i + 1));
            gmin = std::min(gmin, v);
            gmax = std::max(gmax, v);
        }
        shift[i] = gmin;
        spread[i] = gmax - gmin;
        constant[i] = spread[i] <= kDegenerateTol * (1.0 + std::max(std::abs(gmin), std::abs(gmax)));
        if (!constant[i]) any_varying = true;
        d_max = std::max(d_max, spread[i]);
        min_n = std::min(min_n, static_cast<int>(g.size()));
        total_n += static_cast<long long>(g.size());
        shifted[i].resize(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) shifted[i][j] = g[j] - gmin;
    }

    OneSided out;
    out.lambdas.assign(m, 0.0);
    if (!any_varying) {
        out.degenerate = true;
        out.w.rows.resize(m);
        out.obj = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            out.w.rows[i].assign(coeffs[i].size(), 1.0 / static_cast<double>(coeffs[i].size()));
            out.obj += coeffs[i][0];
        }
        return out;
    }

    // Bracket upper bound for beta*, 1 - e^{-x} computed via expm1 so tiny
    // radii do not lose precision.
    const double radius = chi2 / (2.0 * static_cast<double>(total_n));
    const double beta_hi0 = d_max / (2.0 * (-std::expm1(-radius)) * static_cast<double>(min_n));

    std::vector<double> lam(m, 0.0);
    auto residual = [&](double beta) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double n_i = static_cast<double>(shifted[i].size());
            if (constant[i]) {
                lam[i] = 2.0 * beta * n_i;
                continue;  // weights uniform, log terms vanish
            }
            lam[i] = solve_lambda_shifted(shifted[i], beta, cfg);
            for (double gj : shifted[i]) s += std::log(2.0 * n_i * beta / (gj + lam[i]));
        }
        return 2.0 * s + chi2;
    };

    double lo = beta_hi0 * 1e-12;
    double r_lo = residual(lo);
    int guard = 0;
    while (r_lo > 0.0 && guard++ < 64 && lo > std::numeric_limits<double>::min() * 1e4) {
        lo *= 1e-4;
        r_lo = residual(lo);
    }
    double hi = beta_hi0;
    double r_hi = residual(hi);
    guard = 0;
    while ((r_hi > 0.0) == (r_lo > 0.0) && guard++ < 8) {
        hi *= 2.0;  // theoretical bound; widen defensively before giving up
        r_hi = residual(hi);
    }
    if ((r_hi > 0.0) == (r_lo > 0.0)) {
        std::ostringstream msg;
        msg << "solve_weights: bisection bracket failure on beta: residual(" << lo << ")=" << r_lo
            << ", residual(" << hi << ")=" << r_hi << ", D=" << d_max << ", chi2=" << chi2;
        throw SolverError(msg.str());
    }

    for (int it = 0; it < cfg.max_bisect && (hi - lo) > cfg.bisect_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r_mid = residual(mid);
        if ((r_mid > 0.0) == (r_lo > 0.0)) {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    const double beta = 0.5 * (lo + hi);
    residual(beta);  // refresh lam at the returned beta

    out.beta = beta;
    out.w.rows.resize(m);
    out.obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto n = coeffs[i].size();
        out.w.rows[i].resize(n);
        if (constant[i]) {
            std::fill(out.w.rows[i].begin(), out.w.rows[i].end(), 1.0 / static_cast<double>(n));
        } else {
            for (std::size_t j = 0; j < n; ++j)
                out.w.rows[i][j] = 2.0 * beta / (shifted[i][j] + lam[i]);
        }
        out.lambdas[i] = lam[i] - shift[i];  // unshift the reported multiplier
        for (std::size_t j = 0; j < n; ++j) out.obj += coeffs[i][j] * out.w.rows[i][j];
    }
    return out;
}

}  // namespace detail

/// Solves the paired min/max linear programs over the divergence ball. The
/// maximizer is the minimizer of the negated coefficients. Degenerate inputs
/// (all coefficients equal within each model) return uniform weights and a
/// constant objective.
inline ElSolution solve_weights(const std::vector<std::vector<double>>& coeffs, double alpha,
                                const SolverConfig& cfg = {}) {
    std::vector<int> sizes;
    sizes.reserve(coeffs.size());
    for (const auto& g : coeffs) sizes.push_back(static_cast<int>(g.size()));
    const auto spec = UncertaintySetSpec::make(alpha, sizes);

    detail::OneSided lo = detail::solve_min(coeffs, spec.chi2, cfg);

    ElSolution sol;
    sol.degenerate = lo.degenerate;
    sol.w_min = std::move(lo.w);
    sol.obj_min = lo.obj;
    sol.beta_min = lo.beta;
    sol.lambdas_min = std::move(lo.lambdas);

    if (sol.degenerate) {
        sol.w_max = sol.w_min;
        sol.obj_max = sol.obj_min;
        sol.beta_max = 0.0;
        sol.lambdas_max = sol.lambdas_min;
        return sol;
    }

    std::vector<std::vector<double>> negated(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        negated[i].resize(coeffs[i].size());
        for (std::size_t j = 0; j < coeffs[i].size(); ++j) negated[i][j] = -coeffs[i][j];
    }
    detail::OneSided hi = detail::solve_min(negated, spec.chi2, cfg);
    sol.w_max = std::move(hi.w);
    sol.obj_max = -hi.obj;
    sol.beta_max = hi.beta;
    sol.lambdas_max = std::move(hi.lambdas);

    // KKT residuals: weights sum to one and the divergence constraint is active.
    for (const auto* w : {&sol.w_min, &sol.w_max}) {
        for (const auto& row : w->rows) {
            double s = 0.0;
            for (double v : row) s += v;
            if (std::abs(s - 1.0) > 1e-9)
                throw SolverError("solve_weights: weight normalization residual " +
                                  std::to_string(std::abs(s - 1.0)));
        }
        const double gap = std::abs(divergence(*w) - spec.chi2);
        if (!(gap <= 1e-7))
            throw SolverError("solve_weights: divergence boundary residual " + std::to_string(gap));
    }
    return sol;
}

/// Empirical-likelihood confidence interval for a sum of means: the min and
/// max of sum_{i,j} Y_{i,j} w_{i,j} over the divergence ball. Always contains
/// the sum of the sample means, since uniform weights are feasible.
inline std::pair<double, double> sum_of_means_ci(const std::vector<std::vector<double>>& samples,
                                                 double alpha, const SolverConfig& cfg = {}) {
    const ElSolution sol = solve_weights(samples, alpha, cfg);
    return {sol.obj_min, sol.obj_max};
}

}  // namespace elci
