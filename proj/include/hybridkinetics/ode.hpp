#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hybridkinetics/dsl.hpp"
#include "hybridkinetics/network.hpp"
#include "hybridkinetics/trajectory.hpp"

namespace hybridkinetics {

struct IntegratorConfig {
    double rtol = 1e-6;
    double atol = 1e-9;
    double max_step = std::numeric_limits<double>::infinity();
    bool nonnegative = true; // components starting >= 0 are kept >= 0 (clamped within atol)

    void validate() const {
        if (!(rtol > 0.0) || !(atol > 0.0)) throw PreconditionError("integrator tolerances must be positive");
        if (!(max_step > 0.0)) throw PreconditionError("max_step must be positive");
    }
};

/// dx/dt as a callable on (t, x, dxdt).
struct VectorField {
    std::size_t dimension = 0;
    std::function<void(double, std::span<const double>, std::span<double>)> eval;

    void operator()(double t, std::span<const double> x, std::span<double> dxdt) const { eval(t, x, dxdt); }
};

/// Embedded Dormand-Prince 5(4) stepper with local extrapolation, max-norm error control
/// (|err_i| <= atol + rtol * max(|y_i|, |y_new_i|)) and cubic Hermite dense output over the
/// last accepted step.
class DormandPrince45 {
public:
    DormandPrince45(std::size_t dim, IntegratorConfig cfg) : cfg_(cfg), n_(dim) {
        cfg_.validate();
        for (auto* v : {&y0_, &y1_, &f0_, &f1_, &k2_, &k3_, &k4_, &k5_, &k6_, &tmp_, &err_}) v->assign(n_, 0.0);
    }

    /// Begins integration at (t0, y0). `span` is the full horizon length; steps shorter than
    /// 1e-14 * span raise StiffnessError.
    template <class F>
    void start(F& f, double t0, std::span<const double> y0, double span) {
        t0_ = t1_ = t0;
        std::copy(y0.begin(), y0.end(), y1_.begin());
        f(t1_, y1_, f1_);
        ++evals_;
        min_step_ = 1e-14 * std::max(span, std::numeric_limits<double>::min());
        h_ = initial_step(f, span);
        rejected_last_ = false;
    }

    /// Takes one accepted step, never past t_end.
    template <class F>
    void step(F& f, double t_end) {
        y0_.swap(y1_);
        f0_.swap(f1_);
        t0_ = t1_;
        for (;;) {
            double h = std::min({h_, cfg_.max_step, t_end - t0_});
            const bool last = h >= t_end - t0_;
            if (last) h = t_end - t0_;
            attempt(f, h);
            double errn = error_norm();
            bool negative = false;
            if (cfg_.nonnegative)
                for (std::size_t i = 0; i < n_; ++i)
                    if (y1_[i] < -cfg_.atol && y0_[i] >= 0.0) negative = true;
            if (errn <= 1.0 && !negative) {
                t1_ = last ? t_end : t0_ + h;
                bool clamped = false;
                for (std::size_t i = 0; cfg_.nonnegative && i < n_; ++i) {
                    if (y1_[i] < 0.0 && y0_[i] >= 0.0) {
                        y1_[i] = 0.0;
                        clamped = true;
                    }
                }
                if (clamped) {
                    f(t1_, y1_, f1_);
                    ++evals_;
                    // A positivity-preserving field cannot point outward at a zero component.
                    for (std::size_t i = 0; i < n_; ++i)
                        if (y1_[i] == 0.0 && y0_[i] > 0.0 && f1_[i] < 0.0)
                            throw StiffnessError("component " + std::to_string(i) + " driven below zero at t = " +
                                                 std::to_string(t1_));
                }
                double grow = errn == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(errn, -0.2), 0.2, 5.0);
                if (rejected_last_) grow = std::min(grow, 1.0);
                if (!last || h >= h_) h_ = h * grow;
                rejected_last_ = false;
                ++accepted_;
                return;
            }
            ++rejected_;
            rejected_last_ = true;
            h_ = negative ? 0.5 * h : h * std::clamp(0.9 * std::pow(errn, -0.2), 0.2, 1.0);
            if (h_ < min_step_)
                throw StiffnessError("step size underflow at t = " + std::to_string(t0_) +
                                     (negative ? " (state driven negative)" : ""));
        }
    }

    /// Cubic Hermite interpolant on [t_prev, t].
    void dense(double t, std::span<double> out) const {
        const double h = t1_ - t0_;
        if (h <= 0.0 || t >= t1_) {
            std::copy(y1_.begin(), y1_.end(), out.begin());
            return;
        }
        if (t <= t0_) {
            std::copy(y0_.begin(), y0_.end(), out.begin());
            return;
        }
        const double s = (t - t0_) / h;
        const double s2 = s * s;
        const double s3 = s2 * s;
        const double h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2;
        const double h11 = s3 - s2;
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = y0_[i] + h01 * (y1_[i] - y0_[i]) + h * (h10 * f0_[i] + h11 * f1_[i]);
    }

    double t() const noexcept { return t1_; }
    double t_prev() const noexcept { return t0_; }
    std::span<const double> y() const noexcept { return y1_; }
    std::span<const double> y_prev() const noexcept { return y0_; }
    std::size_t dimension() const noexcept { return n_; }
    std::size_t accepted_steps() const noexcept { return accepted_; }
    std::size_t rejected_steps() const noexcept { return rejected_; }
    std::size_t evaluations() const noexcept { return evals_; }
    const IntegratorConfig& config() const noexcept { return cfg_; }

private:
    // Dormand & Prince (1980) tableau.
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    template <class F>
    void attempt(F& f, double h) {
        const auto& y = y0_;
        const auto& k1 = f0_;
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * a21 * k1[i];
        f(t0_ + c2 * h, tmp_, k2_);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a31 * k1[i] + a32 * k2_[i]);
        f(t0_ + c3 * h, tmp_, k3_);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a41 * k1[i] + a42 * k2_[i] + a43 * k3_[i]);
        f(t0_ + c4 * h, tmp_, k4_);
        for (std::size_t i = 0; i < n_; ++i)
            tmp_[i] = y[i] + h * (a51 * k1[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        f(t0_ + c5 * h, tmp_, k5_);
        for (std::size_t i = 0; i < n_; ++i)
            tmp_[i] = y[i] + h * (a61 * k1[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        f(t0_ + h, tmp_, k6_);
        for (std::size_t i = 0; i < n_; ++i)
            y1_[i] = y[i] + h * (b1 * k1[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        f(t0_ + h, y1_, f1_);
        evals_ += 6;
        for (std::size_t i = 0; i < n_; ++i)
            err_[i] = h * (e1 * k1[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * f1_[i]);
    }

    double error_norm() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double sc = cfg_.atol + cfg_.rtol * std::max(std::abs(y0_[i]), std::abs(y1_[i]));
            m = std::max(m, std::abs(err_[i]) / sc);
        }
        return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    }

    // Hairer, Norsett & Wanner starting step heuristic (max norm).
    template <class F>
    double initial_step(F& f, double span) {
        auto norm = [&](const std::vector<double>& v, const std::vector<double>& ref) {
            double m = 0.0;
            for (std::size_t i = 0; i < n_; ++i) m = std::max(m, std::abs(v[i]) / (cfg_.atol + cfg_.rtol * std::abs(ref[i])));
            return m;
        };
        const double d0 = norm(y1_, y1_);
        const double d1 = norm(f1_, y1_);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span > 0.0 ? span : h0);
        for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y1_[i] + h0 * f1_[i];
        f(t1_ + h0, tmp_, k2_);
        ++evals_;
        for (std::size_t i = 0; i < n_; ++i) err_[i] = (k2_[i] - f1_[i]) / h0;
        const double d2 = norm(err_, y1_);
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        return std::min(100.0 * h0, h1);
    }

    IntegratorConfig cfg_;
    std::size_t n_;
    double t0_ = 0.0, t1_ = 0.0, h_ = 0.0, min_step_ = 0.0;
    bool rejected_last_ = false;
    std::size_t accepted_ = 0, rejected_ = 0, evals_ = 0;
    std::vector<double> y0_, y1_, f0_, f1_, k2_, k3_, k4_, k5_, k6_, tmp_, err_;
};

struct IntegrationResult {
    std::vector<double> sample_times;
    std::vector<double> values; // row-major, one row per grid point in [t0, t1]
    std::vector<double> final_state;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

namespace ode_detail {

/// Dense values dip slightly below zero between nonnegative nodes; clamp within atol.
inline void clamp_sample(std::span<double> v, double atol) {
    for (auto& x : v)
        if (x < 0.0 && x >= -atol) x = 0.0;
}

} // namespace ode_detail

/// Integrates from (t0, x0) to t1, sampling every grid point in [t0, t1].
template <class F>
IntegrationResult integrate(F&& field, std::span<const double> x0, double t0, double t1, const IntegratorConfig& cfg,
                            std::span<const double> grid) {
    if (!(t1 >= t0)) throw PreconditionError("integrate needs t1 >= t0");
    const std::size_t n = x0.size();
    IntegrationResult out;
    std::vector<double> buf(n);
    std::size_t g = 0;
    while (g < grid.size() && grid[g] < t0) ++g;
    while (g < grid.size() && grid[g] == t0) {
        out.sample_times.push_back(grid[g++]);
        out.values.insert(out.values.end(), x0.begin(), x0.end());
    }
    if (t1 == t0) {
        out.final_state.assign(x0.begin(), x0.end());
        return out;
    }
    DormandPrince45 stepper(n, cfg);
    stepper.start(field, t0, x0, t1 - t0);
    while (stepper.t() < t1) {
        stepper.step(field, t1);
        while (g < grid.size() && grid[g] <= stepper.t()) {
            stepper.dense(grid[g], buf);
            if (cfg.nonnegative) ode_detail::clamp_sample(buf, cfg.atol);
            out.sample_times.push_back(grid[g++]);
            out.values.insert(out.values.end(), buf.begin(), buf.end());
        }
    }
    out.final_state.assign(stepper.y().begin(), stepper.y().end());
    out.accepted_steps = stepper.accepted_steps();
    out.rejected_steps = stepper.rejected_steps();
    return out;
}

// ---------------------------------------------------------------------------------------------
// Flow of the scaled network

/// A reaction drives the continuous flow when its jump leaves every discrete species unchanged.
inline bool is_flow_reaction(const ScaledNetwork& kin, std::size_t r) {
    for (const auto& [i, c] : kin.entry(r).jump)
        if (!kin.partition().is_continuous(i)) return false;
    return true;
}

/// dx_C/dt = sum over flow reactions of (gamma_r^C / N) * (rate at which r fires), with the
/// discrete counts frozen. For RC reactions this is gamma_r^C * lambda~_r(x_C).
class FlowField {
public:
    FlowField(const ScaledNetwork& kin, std::vector<Count> frozen_discrete) : kin_(&kin) {
        const auto& p = kin.partition();
        cont_ = p.continuous_species();
        mixed_.assign(p.species_count(), 0.0);
        set_discrete(frozen_discrete);
        std::vector<long> slot(p.species_count(), -1);
        for (std::size_t j = 0; j < cont_.size(); ++j) slot[cont_[j]] = static_cast<long>(j);
        for (std::size_t r = 0; r < kin.reaction_count(); ++r) {
            if (!is_flow_reaction(kin, r)) continue;
            Drift d;
            d.reaction = r;
            const double per = kin.reaction_class(r) == ReactionClass::RC ? 1.0 : 1.0 / kin.scale();
            for (const auto& [i, c] : kin.entry(r).jump) d.jump.emplace_back(slot[i], static_cast<double>(c) * per);
            drifts_.push_back(std::move(d));
        }
    }

    void set_discrete(std::span<const Count> x_d) {
        const auto& di = kin_->partition().discrete_species();
        if (x_d.size() != di.size()) throw PreconditionError("discrete state has wrong length");
        for (std::size_t j = 0; j < di.size(); ++j) mixed_[di[j]] = static_cast<double>(x_d[j]);
    }

    std::size_t dimension() const noexcept { return cont_.size(); }
    bool empty() const noexcept { return drifts_.empty(); }
    const std::vector<std::size_t>& continuous_species() const noexcept { return cont_; }

    /// Loads x_C into the mixed (full-length) vector used for rate evaluation.
    std::span<const double> load(std::span<const double> x_c) {
        for (std::size_t j = 0; j < cont_.size(); ++j) mixed_[cont_[j]] = x_c[j];
        return mixed_;
    }

    void operator()(double, std::span<const double> x_c, std::span<double> dxdt) {
        load(x_c);
        std::fill(dxdt.begin(), dxdt.begin() + static_cast<long>(cont_.size()), 0.0);
        for (const auto& d : drifts_) {
            const double rate = kin_->scaled_rate(d.reaction, mixed_);
            if (rate == 0.0) continue;
            for (const auto& [j, g] : d.jump) dxdt[static_cast<std::size_t>(j)] += g * rate;
        }
    }

    std::vector<double> evaluate(std::span<const double> x_c) {
        std::vector<double> out(cont_.size());
        (*this)(0.0, x_c, out);
        return out;
    }

private:
    struct Drift {
        std::size_t reaction;
        std::vector<std::pair<long, double>> jump;
    };

    const ScaledNetwork* kin_;
    std::vector<std::size_t> cont_;
    std::vector<double> mixed_;
    std::vector<Drift> drifts_;
};

/// Drift of the scaled network at a hybrid state (flow reactions only, discrete part frozen).
inline std::vector<double> vector_field(const ScaledNetwork& kin, const HybridState& x) {
    FlowField f(kin, x.x_d);
    return f.evaluate(x.x_c);
}

namespace ode_detail {

inline Trajectory flow_trajectory(const ScaledNetwork& kin, const IntegrationResult& res) {
    const auto& net = kin.network();
    Trajectory tr;
    for (auto i : kin.partition().continuous_species()) {
        tr.columns.push_back(net.species()[i].name);
        tr.column_species.push_back(i);
    }
    tr.units = TrajectoryUnits::concentration;
    tr.scale = kin.scale();
    tr.sample_times = res.sample_times;
    tr.values = res.values;
    tr.integrator_steps = res.accepted_steps;
    return tr;
}

} // namespace ode_detail

/// Deterministic limit: every species continuous, x = X / N, dx/dt = sum_r gamma_r lambda~_r(x).
inline Trajectory simulate_ode(const ReactionNetwork& net, const Partition& partition, const SystemState& init,
                               double t_max, const IntegratorConfig& cfg, std::span<const double> grid) {
    if (!partition.discrete_species().empty())
        throw PreconditionError("ODE engine needs every species continuous");
    if (!(t_max > 0.0)) throw PreconditionError("t_max must be positive");
    check_grid(grid, t_max);
    const ScaledNetwork kin(net, partition);
    const HybridState x0 = to_hybrid(init, partition);
    FlowField field(kin, {});
    const auto res = integrate(field, x0.x_c, 0.0, t_max, cfg, grid);
    return ode_detail::flow_trajectory(kin, res);
}

inline Trajectory simulate_ode(const ModelDocument& doc, double t_max, const IntegratorConfig& cfg,
                               std::span<const double> grid) {
    if (!doc.partition) throw PreconditionError("ODE engine needs a partition with every species continuous");
    return simulate_ode(doc.network, *doc.partition, doc.initial, t_max, cfg, grid);
}

} // namespace hybridkinetics
