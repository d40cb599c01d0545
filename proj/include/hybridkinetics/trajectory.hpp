#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hybridkinetics/error.hpp"

namespace hybridkinetics {

/// Units of the values in a trajectory.
enum class TrajectoryUnits {
    counts,        // every column is a molecule count (jump process)
    concentration, // every column is counts / N (deterministic limit)
    hybrid,        // continuous columns are concentrations, discrete columns are counts
};

struct JumpRecord {
    double time = 0.0;
    std::size_t reaction = 0;
    std::vector<double> state; // post-jump values, in the trajectory's column order
};

/// Time-stamped states on a sampling grid. Values are stored row-major in `columns` order;
/// `column_species[j]` is the network species index shown in column j.
struct Trajectory {
    std::vector<std::string> columns;
    std::vector<std::size_t> column_species;
    TrajectoryUnits units = TrajectoryUnits::counts;
    std::vector<double> sample_times;
    std::vector<double> values;
    std::vector<JumpRecord> jumps;
    std::uint64_t rng_seed = 0;
    std::uint64_t jump_count = 0;
    double scale = 1.0; // N; multiplies concentration columns back to counts
    std::uint64_t integrator_steps = 0;
    double max_hazard_residual = 0.0; // PDMP: worst |H(t*) - E| / (1 + E) over all jumps

    std::size_t width() const noexcept { return columns.size(); }
    std::size_t size() const noexcept { return sample_times.size(); }

    std::span<const double> row(std::size_t i) const { return {values.data() + i * width(), width()}; }

    std::size_t column_index(std::string_view name) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) return j;
        throw PreconditionError("trajectory has no column '" + std::string(name) + "'");
    }

    double at(std::size_t sample, std::string_view name) const { return row(sample)[column_index(name)]; }

    std::vector<double> column(std::string_view name) const {
        const auto j = column_index(name);
        std::vector<double> out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) out.push_back(values[i * width() + j]);
        return out;
    }

    /// Column in molecule units: concentration columns are multiplied by N.
    std::vector<double> column_counts(std::string_view name, const std::vector<bool>& continuous_mask) const {
        auto out = column(name);
        const bool scaled = units == TrajectoryUnits::concentration ||
                            (units == TrajectoryUnits::hybrid && continuous_mask.at(column_species[column_index(name)]));
        if (scaled)
            for (auto& v : out) v *= scale;
        return out;
    }

    friend bool operator==(const Trajectory& a, const Trajectory& b) {
        return a.columns == b.columns && a.units == b.units && a.sample_times == b.sample_times &&
               a.values == b.values;
    }
};

/// `n` evenly spaced points on [0, t_max], both ends included; n = 1 gives {0}.
inline std::vector<double> uniform_grid(double t_max, std::size_t n) {
    if (n == 0) throw PreconditionError("sample count must be >= 1");
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        g[i] = (i + 1 == n) ? t_max : t_max * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

inline void check_grid(std::span<const double> grid, double t_max) {
    double prev = -1.0;
    for (double t : grid) {
        if (!(t >= 0.0 && t <= t_max)) throw PreconditionError("sample grid must lie inside [0, t_max]");
        if (t < prev) throw PreconditionError("sample grid must be nondecreasing");
        prev = t;
    }
}

/// Locale-independent `%.9g`.
inline std::string format_sig9(double v) {
    char buf[48];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    return ec == std::errc{} ? std::string(buf, p) : std::string("nan");
}

/// Trajectory CSV: `t,<columns>` then one row per grid point. Concentration-only
/// trajectories carry `#units=concentration` at the end of the header.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "t";
    for (const auto& c : tr.columns) os << ',' << c;
    if (tr.units == TrajectoryUnits::concentration) os << "#units=concentration";
    os << '\n';
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << format_sig9(tr.sample_times[i]);
        for (double v : tr.row(i)) os << ',' << format_sig9(v);
        os << '\n';
    }
}

/// Jumps file: `t,reaction,<columns>` with the reaction name and post-jump state.
inline void write_jumps_csv(std::ostream& os, const Trajectory& tr, const std::vector<std::string>& reaction_names) {
    os << "t,reaction";
    for (const auto& c : tr.columns) os << ',' << c;
    os << '\n';
    for (const auto& j : tr.jumps) {
        os << format_sig9(j.time) << ',' << reaction_names.at(j.reaction);
        for (double v : j.state) os << ',' << format_sig9(v);
        os << '\n';
    }
}

} // namespace hybridkinetics
