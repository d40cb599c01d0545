#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "hybridkinetics/dsl.hpp"
#include "hybridkinetics/network.hpp"
#include "hybridkinetics/rng.hpp"
#include "hybridkinetics/trajectory.hpp"

namespace hybridkinetics {

struct SsaConfig {
    std::uint64_t max_jumps = 100'000'000;
    bool record_jumps = false;
};

struct SsaJump {
    double time = 0.0;
    std::size_t reaction = 0;
    SystemState state;
};

struct Absorbed {};

using SsaStepResult = std::variant<SsaJump, Absorbed>;

/// Gillespie direct method over a (possibly scaled) network. Owns a propensity buffer, so
/// one kernel per trajectory.
class SsaKernel {
public:
    explicit SsaKernel(const ScaledNetwork& kinetics) : kin_(&kinetics), props_(kinetics.reaction_count(), 0.0) {}

    /// Total propensity at `counts`; fills the per-reaction buffer.
    double refresh(std::span<const Count> counts) {
        double total = 0.0;
        for (std::size_t r = 0; r < props_.size(); ++r) {
            props_[r] = kin_->count_propensity(r, counts);
            total += props_[r];
        }
        return total;
    }

    std::span<const double> propensities() const noexcept { return props_; }

    /// Picks a reaction with probability props[r] / total by cumulative-sum inversion of one
    /// uniform. Only reactions with positive propensity can be selected.
    std::size_t select(double total, RngStream& rng) const {
        const double target = rng.uniform_open0() * total;
        double cum = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t r = 0; r < props_.size(); ++r) {
            if (props_[r] <= 0.0) continue;
            cum += props_[r];
            last_positive = r;
            if (cum >= target) return r;
        }
        return last_positive; // roundoff: target marginally above the accumulated sum
    }

    void apply(std::size_t r, std::span<Count> counts) const {
        for (const auto& [i, c] : kin_->entry(r).jump) {
            counts[i] += c;
            if (counts[i] < 0) {
                counts[i] -= c;
                throw InfeasibleJumpError("reaction '" + kin_->network().reactions()[r].name +
                                          "' fired with insufficient reactants");
            }
        }
    }

    const ScaledNetwork& kinetics() const noexcept { return *kin_; }

private:
    const ScaledNetwork* kin_;
    std::vector<double> props_;
};

/// One exact step from (state, t): exponential waiting time at the total propensity, then a
/// reaction chosen proportionally to its propensity.
inline SsaStepResult ssa_step(const ScaledNetwork& kinetics, const SystemState& state, double t, RngStream& rng) {
    SsaKernel k(kinetics);
    const double total = k.refresh(state.counts);
    if (total <= 0.0) return Absorbed{};
    const double tau = -std::log(rng.uniform_open0()) / total;
    const std::size_t r = k.select(total, rng);
    SsaJump out{t + tau, r, state};
    k.apply(r, out.state.counts);
    return out;
}

inline SsaStepResult ssa_step(const ReactionNetwork& net, const SystemState& state, double t, RngStream& rng) {
    const ScaledNetwork kin(net, Partition::all_discrete(net.species_count()));
    return ssa_step(kin, state, t, rng);
}

namespace ssa_detail {

inline Trajectory make_count_trajectory(const ReactionNetwork& net, std::uint64_t seed, double scale) {
    Trajectory tr;
    tr.columns = net.species_names();
    for (std::size_t i = 0; i < net.species_count(); ++i) tr.column_species.push_back(i);
    tr.units = TrajectoryUnits::counts;
    tr.rng_seed = seed;
    tr.scale = scale;
    return tr;
}

inline void push_sample(Trajectory& tr, double t, std::span<const Count> counts) {
    tr.sample_times.push_back(t);
    for (Count c : counts) tr.values.push_back(static_cast<double>(c));
}

} // namespace ssa_detail

/// Exact trajectory sampled by zero-order hold on `grid`: the sample at t is the state after
/// the last jump at or before t. Stops at t_max or absorption.
inline Trajectory simulate_ssa(const ScaledNetwork& kinetics, const SystemState& init, double t_max,
                               std::uint64_t seed, std::span<const double> grid, const SsaConfig& cfg = {}) {
    const auto& net = kinetics.network();
    if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
    if (init.counts.size() != net.species_count()) throw PreconditionError("initial state has wrong length");
    for (Count c : init.counts)
        if (c < 0) throw PreconditionError("initial counts must be nonnegative");
    check_grid(grid, t_max);

    Trajectory tr = ssa_detail::make_count_trajectory(net, seed, kinetics.scale());
    tr.sample_times.reserve(grid.size());
    tr.values.reserve(grid.size() * net.species_count());

    RngStream rng(seed);
    SsaKernel kernel(kinetics);
    std::vector<Count> x = init.counts;
    std::size_t g = 0;
    double t = 0.0;
    std::uint64_t jumps = 0;

    for (;;) {
        const double total = kernel.refresh(x);
        if (total <= 0.0) break;
        const double t_next = t - std::log(rng.uniform_open0()) / total;
        while (g < grid.size() && grid[g] < t_next) ssa_detail::push_sample(tr, grid[g++], x);
        if (t_next > t_max) break;
        const std::size_t r = kernel.select(total, rng);
        kernel.apply(r, x);
        t = t_next;
        if (++jumps > cfg.max_jumps)
            throw RunawayError("SSA exceeded " + std::to_string(cfg.max_jumps) + " jumps before t_max");
        if (cfg.record_jumps) tr.jumps.push_back({t, r, std::vector<double>(x.begin(), x.end())});
    }
    while (g < grid.size()) ssa_detail::push_sample(tr, grid[g++], x);
    tr.jump_count = jumps;
    return tr;
}

/// Plain jump process (no partition): propensities at unit scale.
inline Trajectory simulate_ssa(const ReactionNetwork& net, const SystemState& init, double t_max, std::uint64_t seed,
                               std::span<const double> grid, const SsaConfig& cfg = {}) {
    const ScaledNetwork kin(net, Partition::all_discrete(net.species_count()));
    return simulate_ssa(kin, init, t_max, seed, grid, cfg);
}

/// Jump process of a model document, at the document's partition scale when it declares one.
inline Trajectory simulate_ssa(const ModelDocument& doc, double t_max, std::uint64_t seed,
                               std::span<const double> grid, const SsaConfig& cfg = {}) {
    const auto& net = doc.network;
    const ScaledNetwork kin(net, doc.partition.value_or(Partition::all_discrete(net.species_count())));
    return simulate_ssa(kin, doc.initial, t_max, seed, grid, cfg);
}

struct GeneratorCheck {
    double estimate = 0.0;       // Monte Carlo (E[f(X_h)] - f(x)) / h
    double analytic = 0.0;       // A f(x)
    double standard_error = 0.0; // of the estimate
    double bias_bound = 0.0;     // Lambda(x)^2 h max|f(x + gamma_r) - f(x)|

    bool agrees(double n_se = 3.0) const { return std::abs(estimate - analytic) <= n_se * standard_error + 1e-12; }
};

/// Compares a short-horizon Monte Carlo estimate of the generator with its exact value.
/// The estimate is O(h)-biased; `bias_bound` reports the crude bound Lambda^2 h max|Delta f|.
inline GeneratorCheck generator_consistency_check(const ReactionNetwork& net, const StateFunction& f,
                                                  const SystemState& x, double h, std::uint64_t n_replicates,
                                                  std::uint64_t seed) {
    if (!(h > 0.0)) throw PreconditionError("h must be positive");
    if (n_replicates < 2) throw PreconditionError("need at least two replicates");
    const ScaledNetwork kin(net, Partition::all_discrete(net.species_count()));
    SsaKernel kernel(kin);
    RngStream rng(seed);

    GeneratorCheck out;
    out.analytic = apply_generator(net, f, x);
    const double f0 = f(x);
    const double lambda0 = kernel.refresh(x.counts);
    double max_df = 0.0;
    for (const auto& r : net.reactions()) {
        if (propensity(r, x, net.parameters()) > 0.0) max_df = std::max(max_df, std::abs(f(apply_jump(x, r)) - f0));
    }
    out.bias_bound = lambda0 * lambda0 * h * max_df;

    SystemState s;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::uint64_t i = 0; i < n_replicates; ++i) {
        s.counts = x.counts;
        double t = 0.0;
        for (;;) {
            const double total = kernel.refresh(s.counts);
            if (total <= 0.0) break;
            t -= std::log(rng.uniform_open0()) / total;
            if (t > h) break;
            kernel.apply(kernel.select(total, rng), s.counts);
        }
        const double d = f(s) - f0;
        sum += d;
        sum_sq += d * d;
    }
    const double n = static_cast<double>(n_replicates);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    out.estimate = mean / h;
    out.standard_error = std::sqrt(var / n) / h;
    return out;
}

} // namespace hybridkinetics
