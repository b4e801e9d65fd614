#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "elci/core.hpp"
#include "elci/sampling.hpp"

namespace elci {

/// Parametric input laws used by experiments to draw synthetic datasets and
/// ground truth. Exponential only for now.
struct TrueInputSpec {
    struct Law {
        double rate = 1.0;  // exponential rate, > 0
    };
    std::vector<Law> laws;

    static TrueInputSpec exponential(const std::vector<double>& rates) {
        TrueInputSpec s;
        for (double r : rates) {
            if (!(r > 0.0)) throw ValidationError("TrueInputSpec: rates must be positive");
            s.laws.push_back({r});
        }
        return s;
    }

    int model_count() const { return static_cast<int>(laws.size()); }

    double draw(int model, RandomStream& rs) const {
        return rs.exponential(laws[static_cast<std::size_t>(model)].rate);
    }
};

/// Waiting time of the 10th customer in a single queue that starts empty,
/// computed by the Lindley recursion W_{t+1} = max{W_t + S_t - A_t, 0} over
/// t = 1..9. Model 1 holds the interarrival times, model 2 the service times.
inline PerformanceModel mm1_waiting_time() {
    PerformanceModel model;
    model.run_lengths = {9, 9};
    model.obs_dims = {1, 1};
    model.natural_range = {{0.0, std::numeric_limits<double>::infinity()}};
    model.evaluate = [](const ReplicationInputs& in) {
        double w = 0.0;
        for (int t = 0; t < 9; ++t) {
            const double a = in.at(0, t)[0];
            const double s = in.at(1, t)[0];
            if (a < 0.0 || s < 0.0)
                throw ValidationError("mm1: times must be >= 0");
            w = std::max(w + s - a, 0.0);
        }
        return w;
    };
    return model;
}

/// A project network: directed acyclic graph with one input model per edge
/// carrying that task's duration. Node ids and model indices are 1-based.
struct DagSpec {
    struct Edge {
        int from = 0, to = 0, model = 0;
    };
    int nodes = 0;
    int source = 0, sink = 0;
    std::vector<Edge> edges;

    int model_count() const {
        int m = 0;
        for (const auto& e : edges) m = std::max(m, e.model);
        return m;
    }

    /// Topological order of nodes; throws on cycles or malformed specs.
    std::vector<int> topological_order() const {
        if (nodes < 2) throw ValidationError("dag: need at least 2 nodes");
        if (source < 1 || source > nodes || sink < 1 || sink > nodes || source == sink)
            throw ValidationError("dag: bad source/sink");
        std::vector<bool> used(static_cast<std::size_t>(model_count()), false);
        std::vector<int> indeg(static_cast<std::size_t>(nodes) + 1, 0);
        for (const auto& e : edges) {
            if (e.from < 1 || e.from > nodes || e.to < 1 || e.to > nodes)
                throw ValidationError("dag: edge endpoint out of range");
            if (e.model < 1) throw ValidationError("dag: model indices are 1-based");
            used[static_cast<std::size_t>(e.model - 1)] = true;
            ++indeg[static_cast<std::size_t>(e.to)];
        }
        for (std::size_t i = 0; i < used.size(); ++i)
            if (!used[i])
                throw ValidationError("dag: model index " + std::to_string(i + 1) +
                                      " not assigned to any edge");
        std::vector<int> order;
        std::vector<int> queue;
        for (int v = 1; v <= nodes; ++v)
            if (indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
        while (!queue.empty()) {
            const int v = queue.back();
            queue.pop_back();
            order.push_back(v);
            for (const auto& e : edges)
                if (e.from == v && --indeg[static_cast<std::size_t>(e.to)] == 0)
                    queue.push_back(e.to);
        }
        if (static_cast<int>(order.size()) != nodes)
            throw ValidationError("dag: graph has a cycle");
        return order;
    }

    void validate() const {
        const auto order = topological_order();
        // sink must be reachable from source
        std::vector<bool> reach(static_cast<std::size_t>(nodes) + 1, false);
        reach[static_cast<std::size_t>(source)] = true;
        for (int v : order)
            if (reach[static_cast<std::size_t>(v)])
                for (const auto& e : edges)
                    if (e.from == v) reach[static_cast<std::size_t>(e.to)] = true;
        if (!reach[static_cast<std::size_t>(sink)])
            throw ValidationError("dag: sink unreachable from source");
    }

    /// Plain-text edge list: header `nodes=<k> source=<s> sink=<t>`, then one
    /// `<from> <to> <model_index>` line per edge. '#' starts a comment.
    static DagSpec from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("dag: cannot open file '" + path + "'");
        DagSpec dag;
        std::string line;
        bool have_header = false;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            if (!have_header) {
                std::string tok;
                while (ls >> tok) {
                    const auto eq = tok.find('=');
                    if (eq == std::string::npos)
                        throw ValidationError("dag: malformed header token '" + tok + "'");
                    const std::string k = tok.substr(0, eq);
                    const int v = std::stoi(tok.substr(eq + 1));
                    if (k == "nodes") dag.nodes = v;
                    else if (k == "source") dag.source = v;
                    else if (k == "sink") dag.sink = v;
                    else throw ValidationError("dag: unknown header key '" + k + "'");
                    have_header = true;
                }
            } else {
                Edge e;
                if (ls >> e.from >> e.to >> e.model) dag.edges.push_back(e);
            }
        }
        if (!have_header) throw ValidationError("dag: missing header in '" + path + "'");
        dag.validate();
        return dag;
    }
};

enum class SanMode { completion_time, tail_indicator };

/// Longest source-to-sink path length with edge lengths given by the inputs
/// (one observation per edge model, T_i = 1), or the indicator that the
/// length exceeds a threshold.
inline PerformanceModel san(const DagSpec& dag, SanMode mode, double threshold = 0.0) {
    dag.validate();
    const int m = dag.model_count();

    // Relaxing edges sorted by their source's topological position is a valid
    // longest-path sweep; precomputing the order keeps evaluate at O(E).
    const auto order = dag.topological_order();
    std::vector<int> position(static_cast<std::size_t>(dag.nodes) + 1, 0);
    for (std::size_t k = 0; k < order.size(); ++k)
        position[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
    std::vector<DagSpec::Edge> sweep = dag.edges;
    std::sort(sweep.begin(), sweep.end(), [&](const DagSpec::Edge& a, const DagSpec::Edge& b) {
        return position[static_cast<std::size_t>(a.from)] < position[static_cast<std::size_t>(b.from)];
    });

    PerformanceModel model;
    model.run_lengths.assign(static_cast<std::size_t>(m), 1);
    model.obs_dims.assign(static_cast<std::size_t>(m), 1);
    model.natural_range = mode == SanMode::tail_indicator
                              ? std::pair<double, double>{0.0, 1.0}
                              : std::pair<double, double>{0.0, std::numeric_limits<double>::infinity()};
    const int nodes = dag.nodes;
    const int source = dag.source;
    const int sink = dag.sink;
    model.evaluate = [sweep, nodes, source, sink, mode, threshold](const ReplicationInputs& in) {
        std::vector<double> dist(static_cast<std::size_t>(nodes) + 1,
                                 -std::numeric_limits<double>::infinity());
        dist[static_cast<std::size_t>(source)] = 0.0;
        for (const auto& e : sweep) {
            const double dv = dist[static_cast<std::size_t>(e.from)];
            if (!std::isfinite(dv)) continue;
            const double len = in.at(e.model - 1, 0)[0];
            auto& dt = dist[static_cast<std::size_t>(e.to)];
            dt = std::max(dt, dv + len);
        }
        const double total = dist[static_cast<std::size_t>(sink)];
        return mode == SanMode::tail_indicator ? (total > threshold ? 1.0 : 0.0) : total;
    };
    return model;
}

inline DagSpec san5_dag() {
    DagSpec d;
    d.nodes = 4;
    d.source = 1;
    d.sink = 4;
    d.edges = {{1, 2, 1}, {2, 3, 2}, {1, 3, 3}, {2, 4, 4}, {3, 4, 5}};
    return d;
}

inline DagSpec san14_dag() {
    DagSpec d;
    d.nodes = 10;
    d.source = 1;
    d.sink = 10;
    d.edges = {{1, 2, 1},  {1, 3, 2},  {1, 4, 3},  {2, 5, 4},  {2, 6, 5},
               {3, 5, 6},  {3, 6, 7},  {4, 7, 8},  {4, 8, 9},  {5, 9, 10},
               {6, 9, 11}, {7, 10, 12}, {8, 10, 13}, {9, 10, 14}};
    return d;
}

/// A named benchmark configuration: the model, its true input laws, the
/// standard data sizes, and the standard method/budget rows.
struct BuiltinSpec {
    std::string name;
    PerformanceModel model;
    TrueInputSpec truth;
    std::vector<int> sizes;
    double tail_threshold = 0.0;  // nonzero only for tail presets
    std::vector<std::string> budget_rows;  // config-file row syntax
};

inline const std::vector<std::string>& builtin_names() {
    static const std::vector<std::string> names = {"mm1", "san5", "san14", "san14_tail"};
    return names;
}

inline BuiltinSpec builtin_spec(const std::string& name) {
    auto el_rows = [](std::initializer_list<std::pair<int, int>> budgets) {
        std::vector<std::string> rows;
        for (const char* method : {"bel", "eel", "fel"})
            for (const auto& [r1, r2] : budgets)
                rows.push_back(std::string(method) + " r1=" + std::to_string(r1) +
                               " r2=" + std::to_string(r2));
        return rows;
    };
    auto append = [](std::vector<std::string>& rows, std::initializer_list<std::string> extra) {
        rows.insert(rows.end(), extra.begin(), extra.end());
    };

    if (name == "mm1") {
        BuiltinSpec s;
        s.name = name;
        s.model = mm1_waiting_time();
        s.truth = TrueInputSpec::exponential({0.95, 1.0});
        s.sizes = {30, 25};
        s.budget_rows = el_rows({{1000, 500}, {1500, 250}, {1800, 100}, {1900, 50}});
        append(s.budget_rows, {"boot b=1000 rb=2", "delta rd=2000"});
        return s;
    }
    if (name == "san5") {
        BuiltinSpec s;
        s.name = name;
        s.model = san(san5_dag(), SanMode::completion_time);
        s.truth = TrueInputSpec::exponential({10, 5, 12, 11, 5});
        s.sizes = {200, 200, 30, 30, 30};
        s.budget_rows = el_rows({{4000, 2000}, {7000, 500}, {7800, 100}, {7900, 50}});
        append(s.budget_rows, {"boot b=1000 rb=8", "delta rd=8000"});
        return s;
    }
    const std::vector<double> san14_rates = {10, 5, 12, 11, 5, 8, 4, 9, 13, 7, 6, 9, 10, 6};
    if (name == "san14") {
        BuiltinSpec s;
        s.name = name;
        s.model = san(san14_dag(), SanMode::completion_time);
        s.truth = TrueInputSpec::exponential(san14_rates);
        s.sizes = {30, 30, 30, 30, 30, 30, 30, 25, 25, 25, 25, 25, 25, 25};
        s.budget_rows = el_rows({{3000, 500}, {3500, 250}, {3800, 100}, {3900, 50}});
        append(s.budget_rows, {"boot b=1000 rb=4", "delta rd=2000"});
        return s;
    }
    if (name == "san14_tail") {
        BuiltinSpec s;
        s.name = name;
        s.model = san(san14_dag(), SanMode::tail_indicator, 1.5);
        s.truth = TrueInputSpec::exponential(san14_rates);
        s.sizes = {120, 120, 120, 120, 120, 120, 120, 100, 100, 100, 100, 100, 100, 100};
        s.tail_threshold = 1.5;
        s.budget_rows = el_rows({{15000, 500}, {15500, 250}, {15800, 100}, {15900, 50}});
        append(s.budget_rows, {"boot b=1000 rb=16", "delta rd=16000"});
        return s;
    }
    std::string valid;
    for (const auto& n : builtin_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + name + "' (valid presets: " + valid + ")");
}

}  // namespace elci
