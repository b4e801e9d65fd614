#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "elci/core.hpp"

namespace elci {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Extends a stream hash by one (tag, index) label. Defined so that hashing a
/// full StreamKey equals folding child_hash over its labels; hot loops can
/// derive per-replication streams without materializing keys.
inline std::uint64_t child_hash(std::uint64_t parent, std::string_view tag, std::uint64_t index) {
    std::uint64_t h = parent ^ 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
    h = detail::splitmix64(h);
    h = detail::splitmix64(h ^ index);
    return h;
}

/// Names one reproducible random stream: a master seed plus an ordered list of
/// (tag, index) labels. Distinct label paths give statistically independent
/// streams; the same key always reproduces the same stream.
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::uint64_t>> labels;

    StreamKey() = default;
    explicit StreamKey(std::uint64_t seed) : master_seed(seed) {}

    StreamKey child(std::string tag, std::uint64_t index) const {
        StreamKey k = *this;
        k.labels.emplace_back(std::move(tag), index);
        return k;
    }

    std::uint64_t hash() const {
        std::uint64_t h = detail::splitmix64(master_seed ^ 0x243f6a8885a308d3ULL);
        for (const auto& [tag, index] : labels) h = child_hash(h, tag, index);
        return h;
    }
};

/// xoshiro256++ seeded from a stream hash via a splitmix64 chain. Fully
/// specified bit-for-bit, cheap to construct per replication.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed_hash) {
        std::uint64_t x = seed_hash;
        for (auto& w : s_) w = (x = detail::splitmix64(x));
    }
    explicit RandomStream(const StreamKey& key) : RandomStream(key.hash()) {}

    std::uint64_t next() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    /// Uniform on [0,1), 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Integer uniform on {0,...,n-1}.
    std::uint32_t uniform_index(std::uint32_t n) {
        return static_cast<std::uint32_t>(uniform() * static_cast<double>(n));
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Box-Muller; consumes two uniforms per variate.
    double normal(double mu = 0.0, double sd = 1.0) {
        const double u1 = 1.0 - uniform();  // (0,1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sd * r * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t s_[4];
};

inline RandomStream derive_stream(const StreamKey& key) { return RandomStream(key); }

/// Inverse-CDF sampler over the cumulative weight vectors: one uniform and a
/// binary search per draw.
class WeightedSampler {
public:
    explicit WeightedSampler(const ProbabilityWeights& weights) {
        cum_.reserve(weights.rows.size());
        for (const auto& row : weights.rows) {
            std::vector<double> c(row.size());
            double s = 0.0;
            for (std::size_t j = 0; j < row.size(); ++j) {
                s += row[j];
                c[j] = s;
            }
            if (!(s > 0.0))
                throw ValidationError("weights: degenerate (all-zero) weight vector");
            cum_.push_back(std::move(c));
        }
    }

    std::uint32_t draw(int model, RandomStream& rs) const {
        const auto& c = cum_[static_cast<std::size_t>(model)];
        const double target = rs.uniform() * c.back();
        const auto it = std::upper_bound(c.begin(), c.end(), target);
        const auto idx = static_cast<std::size_t>(it - c.begin());
        return static_cast<std::uint32_t>(std::min(idx, c.size() - 1));
    }

    int model_count() const { return static_cast<int>(cum_.size()); }

private:
    std::vector<std::vector<double>> cum_;
};

/// For each model i, a T_i-tuple of data indices drawn i.i.d. from that
/// model's weight vector.
struct ReplicationDraw {
    std::vector<std::vector<std::uint32_t>> indices;
};

inline void draw_replication_into(ReplicationDraw& out, const WeightedSampler& sampler,
                                  const std::vector<int>& run_lengths, RandomStream& rs) {
    out.indices.resize(run_lengths.size());
    for (std::size_t i = 0; i < run_lengths.size(); ++i) {
        auto& row = out.indices[i];
        row.resize(static_cast<std::size_t>(run_lengths[i]));
        for (auto& idx : row) idx = sampler.draw(static_cast<int>(i), rs);
    }
}

inline ReplicationDraw draw_replication(const ProbabilityWeights& weights,
                                        const std::vector<int>& run_lengths, RandomStream& rs) {
    weights.validate();
    if (weights.rows.size() != run_lengths.size())
        throw ValidationError("draw_replication: run-length arity mismatch");
    WeightedSampler sampler(weights);
    ReplicationDraw d;
    draw_replication_into(d, sampler, run_lengths, rs);
    return d;
}

/// Runs R replications of the model with inputs resampled from the weighted
/// empirical distributions. Replication r draws from the ("rep", r) child
/// stream, so results do not depend on scheduling or worker counts.
inline std::vector<double> simulate(const PerformanceModel& model, const InputDataset& dataset,
                                    const ProbabilityWeights& weights, int r,
                                    const StreamKey& key) {
    validate(dataset, model);
    weights.validate();
    if (weights.model_count() != dataset.model_count())
        throw ValidationError("simulate: weights/dataset arity mismatch");
    for (int i = 0; i < dataset.model_count(); ++i)
        if (static_cast<int>(weights.rows[static_cast<std::size_t>(i)].size()) != dataset.sample_size(i))
            throw ValidationError("simulate: weight vector length mismatch for model " +
                                  std::to_string(i + 1));
    if (r < 1) throw ValidationError("simulate: need R >= 1");

    const WeightedSampler sampler(weights);
    const std::uint64_t base = key.hash();
    std::vector<double> out(static_cast<std::size_t>(r));
    ReplicationDraw draw;
    for (int rep = 0; rep < r; ++rep) {
        RandomStream rs(child_hash(base, "rep", static_cast<std::uint64_t>(rep)));
        draw_replication_into(draw, sampler, model.run_lengths, rs);
        const ReplicationInputs inputs(dataset.models, &draw.indices);
        const double h = model.evaluate(inputs);
        if (!std::isfinite(h))
            throw SimulationError("model returned non-finite value at replication " +
                                  std::to_string(rep + 1));
        out[static_cast<std::size_t>(rep)] = h;
    }
    return out;
}

}  // namespace elci
