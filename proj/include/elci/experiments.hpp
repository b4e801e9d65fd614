#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "elci/ci_methods.hpp"
#include "elci/core.hpp"
#include "elci/models.hpp"
#include "elci/sampling.hpp"

namespace elci {

/// One method row of an experiment sweep.
struct MethodSpec {
    Method method = Method::FEL;
    BudgetPlan budgets;

    std::string params_label() const {
        switch (method) {
            case Method::BEL:
            case Method::EEL:
            case Method::FEL:
            case Method::LEL:
                return "R1=" + std::to_string(budgets.r1) + ";R2=" + std::to_string(budgets.r2);
            case Method::BOOT:
                return "B=" + std::to_string(budgets.b) + ";Rb=" + std::to_string(budgets.rb);
            case Method::DELTA:
                return "Rd=" + std::to_string(budgets.rd);
        }
        return "";
    }

    void validate(double alpha) const {
        switch (method) {
            case Method::BEL:
            case Method::EEL:
            case Method::FEL:
                if (budgets.r1 < 2) throw ValidationError("row: need r1 >= 2");
                if (budgets.r2 < 2) throw ValidationError("row: need r2 >= 2");
                break;
            case Method::LEL:
                if (budgets.r1 < 2) throw ValidationError("row: need r1 >= 2");
                if (budgets.r2 < 0) throw ValidationError("row: r2 must be >= 0");
                break;
            case Method::BOOT:
                if (budgets.b < 3) throw ValidationError("row: need b >= 3");
                if (budgets.rb < 1) throw ValidationError("row: need rb >= 1");
                if (budgets.b < min_bootstrap_size(alpha))
                    throw ValidationError("row: B too small for requested level; need b >= " +
                                          std::to_string(min_bootstrap_size(alpha)));
                break;
            case Method::DELTA:
                if (budgets.rd < 2) throw ValidationError("row: need rd >= 2");
                break;
        }
    }

    /// Total simulation runs the row consumes per constructed interval.
    long long total_budget() const {
        switch (method) {
            case Method::BEL:
            case Method::EEL:
            case Method::FEL:
                return budgets.r1 + 2LL * budgets.r2;
            case Method::LEL:
                return budgets.r1;
            case Method::BOOT:
                return static_cast<long long>(budgets.b) * budgets.rb;
            case Method::DELTA:
                return budgets.rd;
        }
        return 0;
    }
};

/// Full description of a coverage experiment.
struct ExperimentConfig {
    std::string model_name;  // preset name or dag:<path>[:tail=<thr>]
    PerformanceModel model;
    TrueInputSpec truth_spec;
    std::vector<int> sizes;

    double alpha = 0.05;
    int replications = 0;  // K datasets
    std::uint64_t seed = 0;
    std::vector<MethodSpec> rows;

    std::optional<double> truth_value;  // pinned truth; otherwise estimated
    std::optional<double> truth_se;
    long long truth_n = 1000000;
    std::uint64_t truth_seed = 0;

    std::optional<long long> declared_budget;  // when set, every row must sum to it

    bool benchmark = false;  // inflate r1/r2 to approximate simulation-free coverage
    int benchmark_r = 50000;

    // Coverage scoring treats the truth as known, so its own Monte Carlo error
    // must stay below one percent of the narrowest CI unless overridden.
    bool allow_noisy_truth = false;

    void validate() const {
        if (replications < 1) throw ValidationError("config key 'k': need K >= 1");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ValidationError("config key 'alpha': must lie in (0,1)");
        if (rows.empty()) throw ValidationError("config key 'row': need at least one method row");
        if (sizes.empty()) throw ValidationError("config key 'sizes': missing");
        for (int n : sizes)
            if (n < 2) throw ValidationError("config key 'sizes': every n_i must be >= 2");
        if (static_cast<int>(sizes.size()) != model.model_count())
            throw ValidationError("config key 'sizes': arity mismatch with model");
        if (truth_spec.model_count() != model.model_count())
            throw ValidationError("config key 'rates': arity mismatch with model");
        if (!truth_value && truth_n < 1000)
            throw ValidationError("config key 'truth_n': need at least 1000 oracle runs");
        for (const auto& row : rows) {
            row.validate(alpha);
            if (declared_budget && !benchmark && row.total_budget() != *declared_budget)
                throw ValidationError("config key 'budget': row '" + to_string(row.method) + " " +
                                      row.params_label() + "' totals " +
                                      std::to_string(row.total_budget()) + ", declared " +
                                      std::to_string(*declared_budget));
        }
    }
};

/// Aggregated outcome of one method row.
struct ResultRow {
    std::string method;
    std::string params;
    double coverage = 0.0;
    double coverage_se = 0.0;
    double mean_len = 0.0;
    double std_len = 0.0;
    double overshoot = 0.0;
    double secs_per_ci = 0.0;
    int failures = 0;
};

/// Monte Carlo estimate of the performance measure under the true parametric
/// inputs; the standard error comes with it. Used as the coverage target.
inline std::pair<double, double> estimate_truth(const PerformanceModel& model,
                                                const TrueInputSpec& truth, long long n,
                                                const StreamKey& key) {
    if (truth.model_count() != model.model_count())
        throw ValidationError("estimate_truth: spec/model arity mismatch");
    if (n < 1) throw ValidationError("estimate_truth: need N >= 1");

    const int m = model.model_count();
    std::vector<std::vector<Observation>> buffer(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        buffer[static_cast<std::size_t>(i)].assign(
            static_cast<std::size_t>(model.run_lengths[static_cast<std::size_t>(i)]),
            Observation(1, 0.0));

    const std::uint64_t base = key.hash();
    double sum = 0.0, sumsq = 0.0;
    for (long long rep = 0; rep < n; ++rep) {
        RandomStream rs(child_hash(base, "rep", static_cast<std::uint64_t>(rep)));
        for (int i = 0; i < m; ++i)
            for (auto& obs : buffer[static_cast<std::size_t>(i)]) obs[0] = truth.draw(i, rs);
        const ReplicationInputs inputs(buffer, nullptr);
        const double h = model.evaluate(inputs);
        if (!std::isfinite(h))
            throw SimulationError("truth oracle: non-finite output at replication " +
                                  std::to_string(rep + 1));
        sum += h;
        sumsq += h * h;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max((sumsq - static_cast<double>(n) * mean * mean) /
                                    static_cast<double>(n - 1), 0.0);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

inline std::pair<double, double> estimate_truth(const PerformanceModel& model,
                                                const TrueInputSpec& truth, long long n,
                                                std::uint64_t seed) {
    return estimate_truth(model, truth, n, StreamKey(seed));
}

/// Draws one synthetic dataset of the configured sizes from the true laws.
inline InputDataset draw_dataset(const TrueInputSpec& truth, const std::vector<int>& sizes,
                                 const StreamKey& key) {
    InputDataset d;
    d.models.resize(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        RandomStream rs(key.child("model", static_cast<std::uint64_t>(i)));
        auto& sample = d.models[i];
        sample.reserve(static_cast<std::size_t>(sizes[i]));
        for (int j = 0; j < sizes[i]; ++j)
            sample.push_back(Observation{truth.draw(static_cast<int>(i), rs)});
    }
    return d;
}

namespace detail {

struct RowOutcome {
    bool failed = false;
    bool covered = false;
    bool overshoot = false;
    double length = 0.0;
    double secs = 0.0;
};

struct ElBudgetKey {
    int r1 = 0, r2 = 0;
    bool operator<(const ElBudgetKey& o) const { return std::tie(r1, r2) < std::tie(o.r1, o.r2); }
};

inline bool is_el(Method m) {
    return m == Method::BEL || m == Method::EEL || m == Method::FEL || m == Method::LEL;
}

}  // namespace detail

/// The experiment protocol: K dataset replications, each scored by every
/// method row. EL rows sharing an (R1,R2) budget reuse one pipeline per
/// replication, which keeps their interval-nesting coupling exact sample-wise.
/// Output is a deterministic function of the config alone; worker count only
/// changes scheduling.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config_in, int workers = 1,
                                             std::pair<double, double>* truth_out = nullptr) {
    ExperimentConfig config = config_in;
    if (config.benchmark) {
        for (auto& row : config.rows) {
            if (detail::is_el(row.method)) {
                row.budgets.r1 = std::max(row.budgets.r1, config.benchmark_r);
                if (row.budgets.r2 > 0) row.budgets.r2 = std::max(row.budgets.r2, config.benchmark_r);
            }
        }
    }
    config.validate();

    const StreamKey base(config.seed);
    double truth = 0.0, truth_se = 0.0;
    if (config.truth_value) {
        truth = *config.truth_value;
        truth_se = config.truth_se.value_or(0.0);
    } else {
        std::tie(truth, truth_se) =
            estimate_truth(config.model, config.truth_spec, config.truth_n,
                           StreamKey(config.truth_seed ? config.truth_seed : config.seed)
                               .child("truth", 0));
    }
    if (truth_out) *truth_out = {truth, truth_se};

    // Distinct EL budgets, in row order, for pipeline sharing.
    std::vector<detail::ElBudgetKey> budgets;
    std::map<detail::ElBudgetKey, std::size_t> budget_index;
    std::vector<std::size_t> share_count;  // rows sharing each pipeline
    for (const auto& row : config.rows) {
        if (!detail::is_el(row.method)) continue;
        const detail::ElBudgetKey k{row.budgets.r1, row.budgets.r2};
        auto it = budget_index.find(k);
        if (it == budget_index.end()) {
            budget_index.emplace(k, budgets.size());
            budgets.push_back(k);
            share_count.push_back(1);
        } else {
            ++share_count[it->second];
        }
    }

    const auto n_rows = config.rows.size();
    const int k_total = config.replications;
    std::vector<std::vector<detail::RowOutcome>> outcomes(
        static_cast<std::size_t>(k_total), std::vector<detail::RowOutcome>(n_rows));

    const auto natural = config.model.natural_range;
    auto score = [&](const ConfidenceInterval& ci, detail::RowOutcome& out) {
        out.covered = ci.lower <= truth && truth <= ci.upper;
        out.length = ci.upper - ci.lower;
        out.overshoot = natural && (ci.lower < natural->first || ci.upper > natural->second);
    };

    auto run_one = [&](int k) {
        using clock = std::chrono::steady_clock;
        auto& row_out = outcomes[static_cast<std::size_t>(k)];
        const StreamKey dataset_key = base.child("dataset", static_cast<std::uint64_t>(k));
        const InputDataset dataset = draw_dataset(config.truth_spec, config.sizes, dataset_key);
        const StreamKey rep_key = base.child("k", static_cast<std::uint64_t>(k));

        std::vector<std::optional<ElPipelineState>> states(budgets.size());
        std::vector<double> pipeline_secs(budgets.size(), 0.0);
        for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
            const auto t0 = clock::now();
            try {
                if (budgets[bi].r2 >= 2)
                    states[bi] = run_pipeline(config.model, dataset, config.alpha, budgets[bi].r1,
                                              budgets[bi].r2, rep_key.child("el", bi));
                else
                    states[bi] = run_pipeline_linearized(config.model, dataset, config.alpha,
                                                         budgets[bi].r1, rep_key.child("el", bi));
            } catch (const std::exception&) {
                states[bi].reset();  // rows using this pipeline record a failure
            }
            pipeline_secs[bi] = std::chrono::duration<double>(clock::now() - t0).count() /
                                static_cast<double>(share_count[bi]);
        }

        for (std::size_t ri = 0; ri < n_rows; ++ri) {
            const auto& row = config.rows[ri];
            auto& out = row_out[ri];
            const auto t0 = clock::now();
            try {
                ConfidenceInterval ci;
                if (detail::is_el(row.method)) {
                    const auto bi = budget_index.at({row.budgets.r1, row.budgets.r2});
                    if (!states[bi]) throw SolverError("pipeline failed");
                    switch (row.method) {
                        case Method::BEL: ci = bel(*states[bi]); break;
                        case Method::EEL: ci = eel(*states[bi], config.alpha); break;
                        case Method::FEL: ci = fel(*states[bi], config.alpha); break;
                        default: ci = linearized_el(*states[bi]); break;
                    }
                    out.secs = pipeline_secs[bi];
                } else if (row.method == Method::BOOT) {
                    ci = percentile_bootstrap(config.model, dataset, config.alpha, row.budgets.b,
                                              row.budgets.rb, rep_key.child("boot", ri));
                } else {
                    ci = delta_method(config.model, dataset, config.alpha, row.budgets.rd,
                                      rep_key.child("delta", ri));
                }
                score(ci, out);
            } catch (const std::exception&) {
                out.failed = true;
            }
            out.secs += std::chrono::duration<double>(clock::now() - t0).count();
        }
    };

    if (workers <= 1) {
        for (int k = 0; k < k_total; ++k) run_one(k);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int k = next.fetch_add(1); k < k_total; k = next.fetch_add(1)) run_one(k);
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Indexed reduction in replication order; independent of scheduling.
    std::vector<ResultRow> rows(n_rows);
    for (std::size_t ri = 0; ri < n_rows; ++ri) {
        auto& r = rows[ri];
        r.method = to_string(config.rows[ri].method);
        r.params = config.rows[ri].params_label();
        long long ok = 0, covered = 0, over = 0;
        double len_sum = 0.0, len_sumsq = 0.0, secs_sum = 0.0;
        for (int k = 0; k < k_total; ++k) {
            const auto& out = outcomes[static_cast<std::size_t>(k)][ri];
            if (out.failed) {
                ++r.failures;
                continue;
            }
            ++ok;
            covered += out.covered ? 1 : 0;
            over += out.overshoot ? 1 : 0;
            len_sum += out.length;
            len_sumsq += out.length * out.length;
            secs_sum += out.secs;
        }
        if (ok > 0) {
            r.coverage = static_cast<double>(covered) / static_cast<double>(ok);
            r.coverage_se = std::sqrt(std::max(r.coverage * (1.0 - r.coverage), 0.0) /
                                      static_cast<double>(ok));
            r.overshoot = static_cast<double>(over) / static_cast<double>(ok);
            r.mean_len = len_sum / static_cast<double>(ok);
            r.std_len = ok > 1 ? std::sqrt(std::max(
                                     (len_sumsq - static_cast<double>(ok) * r.mean_len * r.mean_len) /
                                         static_cast<double>(ok - 1),
                                     0.0))
                               : 0.0;
            r.secs_per_ci = secs_sum / static_cast<double>(ok);
        }
    }

    if (!config.allow_noisy_truth && truth_se > 0.0) {
        double min_len = std::numeric_limits<double>::infinity();
        for (const auto& r : rows)
            if (r.failures < k_total) min_len = std::min(min_len, r.mean_len);
        if (std::isfinite(min_len) && truth_se > min_len / 100.0)
            throw ValidationError(
                "truth standard error " + std::to_string(truth_se) +
                " exceeds 1% of the narrowest mean CI length " + std::to_string(min_len) +
                "; raise truth_n or set allow_noisy_truth = true");
    }
    return rows;
}

/// CSV emission with the fixed header. Numbers carry six significant digits;
/// the timing column is zeroed when include_timing is false so that output
/// bytes depend only on config and seed.
inline void emit_table(const std::vector<ResultRow>& rows, std::ostream& os,
                       bool include_timing = true) {
    if (rows.empty()) throw ValidationError("emit_table: no rows");
    os << "method,params,coverage,mean_len,std_len,overshoot,secs_per_ci,failures\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        os << r.method << ',' << r.params << ',' << num(r.coverage) << ',' << num(r.mean_len)
           << ',' << num(r.std_len) << ',' << num(r.overshoot) << ','
           << num(include_timing ? r.secs_per_ci : 0.0) << ',' << r.failures << '\n';
    }
}

}  // namespace elci
