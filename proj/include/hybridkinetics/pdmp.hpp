#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "hybridkinetics/dsl.hpp"
#include "hybridkinetics/network.hpp"
#include "hybridkinetics/ode.hpp"
#include "hybridkinetics/rng.hpp"
#include "hybridkinetics/trajectory.hpp"

namespace hybridkinetics {

struct PdmpConfig {
    IntegratorConfig ode;
    bool displacement = true; // apply gamma_r^C / N to x_C when a jump reaction fires
    std::uint64_t max_jumps = 100'000'000;
    bool record_jumps = false;
};

/// Splits a scaled network into flow reactions (jump leaves the discrete species untouched;
/// they drive dx_C/dt) and jump reactions (change X_D, optionally displacing x_C).
/// Borrows the network, which must outlive the model.
class HybridModel {
public:
    HybridModel(const ReactionNetwork& net, Partition partition) : kin_(net, std::move(partition)) {
        for (std::size_t r = 0; r < kin_.reaction_count(); ++r) {
            if (is_flow_reaction(kin_, r)) {
                flow_.push_back(r);
            } else {
                jump_.push_back(r);
                for (auto s : net.reactions()[r].rate_dependencies())
                    if (kin_.partition().is_continuous(s)) hazard_reads_continuous_ = true;
            }
        }
    }

    const ScaledNetwork& kinetics() const noexcept { return kin_; }
    const Partition& partition() const noexcept { return kin_.partition(); }
    const ReactionNetwork& network() const noexcept { return kin_.network(); }
    const std::vector<std::size_t>& flow_reactions() const noexcept { return flow_; }
    const std::vector<std::size_t>& jump_reactions() const noexcept { return jump_; }

    /// False when every jump rate is a function of X_D alone, so the hazard is constant
    /// between jumps.
    bool hazard_reads_continuous() const noexcept { return hazard_reads_continuous_; }

private:
    ScaledNetwork kin_;
    std::vector<std::size_t> flow_;
    std::vector<std::size_t> jump_;
    bool hazard_reads_continuous_ = false;
};

struct JumpIntensity {
    double total = 0.0;
    std::vector<double> rates; // aligned with HybridModel::jump_reactions()
};

inline JumpIntensity jump_intensity_mixed(const HybridModel& model, std::span<const double> mixed) {
    JumpIntensity out;
    out.rates.reserve(model.jump_reactions().size());
    for (auto r : model.jump_reactions()) {
        const double rate = model.kinetics().hybrid_rate(r, mixed);
        out.rates.push_back(rate);
        out.total += rate;
    }
    return out;
}

/// Total and per-reaction rates of the jump reactions at a hybrid state.
inline JumpIntensity jump_intensity(const HybridModel& model, const HybridState& x) {
    return jump_intensity_mixed(model, model.kinetics().to_mixed(x));
}

/// Applies jump reaction r: X_D += gamma^D and, in displacement mode, x_C += gamma^C / N.
/// Concentrations are clamped at zero; a negative count is an error.
inline HybridState apply_hybrid_jump(const HybridModel& model, const HybridState& x, std::size_t reaction,
                                     bool displacement = true) {
    const auto& p = model.partition();
    const auto& jump = model.network().reactions().at(reaction).jump;
    HybridState out = x;
    const auto& ci = p.continuous_species();
    const auto& di = p.discrete_species();
    for (std::size_t j = 0; j < di.size(); ++j) {
        out.x_d[j] += jump[di[j]];
        if (out.x_d[j] < 0)
            throw InfeasibleJumpError("reaction '" + model.network().reactions()[reaction].name +
                                      "' drives a discrete count negative");
    }
    if (displacement) {
        for (std::size_t j = 0; j < ci.size(); ++j) {
            if (jump[ci[j]] == 0) continue;
            out.x_c[j] = std::max(0.0, out.x_c[j] + static_cast<double>(jump[ci[j]]) / p.scale());
        }
    }
    return out;
}

struct NextJump {
    double time = 0.0;
    std::size_t reaction = 0;    // network reaction index
    std::vector<double> x_c;     // flow state just before the jump
    double hazard_residual = 0.0; // |H(t*) - E| / (1 + E)
};

struct NoJumpBefore {
    double t_max = 0.0;
    std::vector<double> x_c; // flow state at t_max
};

using NextJumpResult = std::variant<NextJump, NoJumpBefore>;

namespace pdmp_detail {

struct SegmentEnd {
    bool fired = false;
    double time = 0.0;
    std::vector<double> x_c;
    double residual = 0.0;
    std::size_t steps = 0;
};

/// Flows x_C from t while accumulating H(t) = int Lambda ds, until H reaches `threshold` or
/// t_max. Grid points in [t, t_end) (and t_max itself when no jump fires) are passed to `emit`.
template <class Emit>
SegmentEnd flow_segment(const HybridModel& model, FlowField& field, std::span<const double> x_c, double t,
                        double t_max, double threshold, const IntegratorConfig& cfg, std::span<const double> grid,
                        std::size_t& g, Emit&& emit) {
    SegmentEnd out;
    const std::size_t n = x_c.size();

    if (!model.hazard_reads_continuous()) {
        // Constant hazard between jumps: H(t) = Lambda (t - t0) inverts in closed form.
        const double lambda = jump_intensity_mixed(model, field.load(x_c)).total;
        const double t_star = lambda > 0.0 ? t + threshold / lambda : std::numeric_limits<double>::infinity();
        out.fired = t_star <= t_max;
        out.time = out.fired ? t_star : t_max;
        std::size_t g_end = g;
        while (g_end < grid.size() && (out.fired ? grid[g_end] < out.time : grid[g_end] <= out.time)) ++g_end;
        const auto res = n == 0 ? IntegrationResult{} : integrate(field, x_c, t, out.time, cfg, grid.subspan(g, g_end - g));
        if (n == 0) {
            for (std::size_t k = g; k < g_end; ++k) emit(grid[k], std::span<const double>{});
            out.x_c.clear();
        } else {
            for (std::size_t k = 0; k < res.sample_times.size(); ++k)
                emit(res.sample_times[k], std::span<const double>(res.values.data() + k * n, n));
            out.x_c = res.final_state;
        }
        g = g_end;
        out.residual = out.fired ? std::abs(lambda * (out.time - t) - threshold) / (1.0 + threshold) : 0.0;
        out.steps = res.accepted_steps;
        return out;
    }

    // General case: co-integrate (x_C, H) and localize the crossing by bisection.
    auto augmented = [&](double tt, std::span<const double> y, std::span<double> dy) {
        field(tt, y.first(n), dy.first(n));
        dy[n] = jump_intensity_mixed(model, field.load(y.first(n))).total;
    };
    std::vector<double> y0(x_c.begin(), x_c.end());
    y0.push_back(0.0);
    std::vector<double> buf(n + 1);

    while (g < grid.size() && grid[g] == t) emit(grid[g++], x_c);
    if (t >= t_max) {
        out.time = t_max;
        out.x_c.assign(x_c.begin(), x_c.end());
        return out;
    }
    DormandPrince45 stepper(n + 1, cfg);
    stepper.start(augmented, t, y0, t_max - t);
    const double tol = 1e-9 * (1.0 + threshold);
    while (stepper.t() < t_max) {
        stepper.step(augmented, t_max);
        ++out.steps;
        if (stepper.y()[n] >= threshold) {
            double lo = stepper.t_prev();
            double hi = stepper.t();
            double t_star = hi;
            double h_star = stepper.y()[n];
            for (int it = 0; it < 200; ++it) {
                if (std::abs(h_star - threshold) <= tol) break;
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                stepper.dense(mid, buf);
                if (buf[n] >= threshold) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                t_star = mid;
                h_star = buf[n];
            }
            while (g < grid.size() && grid[g] < t_star) {
                stepper.dense(grid[g], buf);
                if (cfg.nonnegative) ode_detail::clamp_sample(std::span<double>(buf).first(n), cfg.atol);
                emit(grid[g++], std::span<const double>(buf).first(n));
            }
            stepper.dense(t_star, buf);
            if (cfg.nonnegative) ode_detail::clamp_sample(std::span<double>(buf).first(n), cfg.atol);
            out.fired = true;
            out.time = t_star;
            out.x_c.assign(buf.begin(), buf.begin() + static_cast<long>(n));
            out.residual = std::abs(buf[n] - threshold) / (1.0 + threshold);
            return out;
        }
        while (g < grid.size() && grid[g] <= stepper.t()) {
            stepper.dense(grid[g], buf);
            if (cfg.nonnegative) ode_detail::clamp_sample(std::span<double>(buf).first(n), cfg.atol);
            emit(grid[g++], std::span<const double>(buf).first(n));
        }
    }
    out.time = t_max;
    out.x_c.assign(stepper.y().begin(), stepper.y().begin() + static_cast<long>(n));
    return out;
}

inline std::size_t choose_jump(const JumpIntensity& in, const HybridModel& model, RngStream& rng) {
    const double target = rng.uniform_open0() * in.total;
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < in.rates.size(); ++k) {
        if (in.rates[k] <= 0.0) continue;
        cum += in.rates[k];
        last = k;
        if (cum >= target) return model.jump_reactions()[k];
    }
    return model.jump_reactions()[last];
}

} // namespace pdmp_detail

/// Samples the next jump after (x, t): draws E ~ Exp(1), flows until the integrated hazard
/// reaches E, then picks a jump reaction proportionally to its rate at the crossing.
inline NextJumpResult next_jump(const HybridModel& model, const HybridState& x, double t, double t_max,
                                RngStream& rng, const IntegratorConfig& cfg) {
    if (!(t < t_max)) throw PreconditionError("next_jump needs t < t_max");
    FlowField field(model.kinetics(), x.x_d);
    const double e = rng.exponential();
    std::size_t g = 0;
    auto seg = pdmp_detail::flow_segment(model, field, x.x_c, t, t_max, e, cfg, {}, g, [](double, auto) {});
    if (!seg.fired) return NoJumpBefore{t_max, std::move(seg.x_c)};
    const auto intensity = jump_intensity_mixed(model, field.load(seg.x_c));
    if (!(intensity.total > 0.0)) return NoJumpBefore{t_max, std::move(seg.x_c)};
    return NextJump{seg.time, pdmp_detail::choose_jump(intensity, model, rng), std::move(seg.x_c), seg.residual};
}

/// Hybrid trajectory: deterministic flow of x_C between jumps of X_D. Columns are the
/// continuous species (concentrations) followed by the discrete species (counts).
inline Trajectory simulate_pdmp(const HybridModel& model, const SystemState& init, double t_max, std::uint64_t seed,
                                const PdmpConfig& cfg, std::span<const double> grid) {
    const auto& net = model.network();
    const auto& p = model.partition();
    if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
    if (init.counts.size() != net.species_count()) throw PreconditionError("initial state has wrong length");
    for (Count c : init.counts)
        if (c < 0) throw PreconditionError("initial counts must be nonnegative");
    check_grid(grid, t_max);
    cfg.ode.validate();

    Trajectory tr;
    for (auto i : p.continuous_species()) tr.column_species.push_back(i);
    for (auto i : p.discrete_species()) tr.column_species.push_back(i);
    for (auto i : tr.column_species) tr.columns.push_back(net.species()[i].name);
    tr.units = p.discrete_species().empty() ? TrajectoryUnits::concentration : TrajectoryUnits::hybrid;
    tr.scale = p.scale();
    tr.rng_seed = seed;
    tr.sample_times.reserve(grid.size());
    tr.values.reserve(grid.size() * tr.width());

    HybridState x = to_hybrid(init, p);
    auto emit = [&](double tt, std::span<const double> xc) {
        tr.sample_times.push_back(tt);
        tr.values.insert(tr.values.end(), xc.begin(), xc.end());
        for (Count c : x.x_d) tr.values.push_back(static_cast<double>(c));
    };

    if (model.jump_reactions().empty()) {
        // Pure flow: the same integration the ODE engine performs.
        FlowField field(model.kinetics(), x.x_d);
        const auto res = integrate(field, x.x_c, 0.0, t_max, cfg.ode, grid);
        for (std::size_t k = 0; k < res.sample_times.size(); ++k)
            emit(res.sample_times[k], std::span<const double>(res.values.data() + k * x.x_c.size(), x.x_c.size()));
        tr.integrator_steps = res.accepted_steps;
        return tr;
    }

    RngStream rng(seed);
    FlowField field(model.kinetics(), x.x_d);
    std::size_t g = 0;
    double t = 0.0;
    std::uint64_t jumps = 0;
    while (t < t_max || g < grid.size()) {
        const double e = rng.exponential();
        auto seg = pdmp_detail::flow_segment(model, field, x.x_c, t, t_max, e, cfg.ode, grid, g, emit);
        tr.integrator_steps += seg.steps;
        x.x_c = std::move(seg.x_c);
        t = seg.time;
        if (!seg.fired) break;
        tr.max_hazard_residual = std::max(tr.max_hazard_residual, seg.residual);
        const auto intensity = jump_intensity_mixed(model, field.load(x.x_c));
        if (!(intensity.total > 0.0)) continue; // hazard vanished exactly at the crossing; redraw
        const std::size_t r = pdmp_detail::choose_jump(intensity, model, rng);
        x = apply_hybrid_jump(model, x, r, cfg.displacement);
        field.set_discrete(x.x_d);
        if (++jumps > cfg.max_jumps)
            throw RunawayError("PDMP exceeded " + std::to_string(cfg.max_jumps) + " jumps before t_max");
        if (cfg.record_jumps) {
            JumpRecord rec{t, r, {}};
            rec.state.assign(x.x_c.begin(), x.x_c.end());
            for (Count c : x.x_d) rec.state.push_back(static_cast<double>(c));
            tr.jumps.push_back(std::move(rec));
        }
    }
    tr.jump_count = jumps;
    return tr;
}

inline Trajectory simulate_pdmp(const ReactionNetwork& net, const Partition& partition, const SystemState& init,
                                double t_max, std::uint64_t seed, const PdmpConfig& cfg,
                                std::span<const double> grid) {
    const HybridModel model(net, partition);
    return simulate_pdmp(model, init, t_max, seed, cfg, grid);
}

inline Trajectory simulate_pdmp(const ModelDocument& doc, double t_max, std::uint64_t seed, const PdmpConfig& cfg,
                                std::span<const double> grid) {
    if (!doc.partition) throw PreconditionError("partition required for pdmp");
    return simulate_pdmp(doc.network, *doc.partition, doc.initial, t_max, seed, cfg, grid);
}

} // namespace hybridkinetics
