#pragma once

#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "hybridkinetics/network.hpp"

namespace hybridkinetics {

using ConservationLaw = std::vector<Count>;

namespace detail {

inline Count gcd_of(const std::vector<Count>& v) {
    Count g = 0;
    for (Count x : v) g = std::gcd(g, x < 0 ? -x : x);
    return g;
}

inline void reduce_row(std::vector<Count>& row) {
    const Count g = gcd_of(row);
    if (g > 1)
        for (auto& x : row) x /= g;
}

} // namespace detail

/// Basis of the integer left null space of the stoichiometric matrix: every v with
/// v . gamma_r = 0 for all reactions. Computed by fraction-free row reduction of the
/// reaction-by-species matrix; each vector is scaled to coprime entries with a positive
/// leading entry, so the basis is deterministic.
inline std::vector<ConservationLaw> detect_conservation_laws(const ReactionNetwork& net) {
    const std::size_t m = net.species_count();
    std::vector<std::vector<Count>> rows;
    for (const auto& r : net.reactions()) rows.push_back(r.jump);

    std::vector<std::size_t> pivot_cols;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < m && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        while (piv < rows.size() && rows[piv][col] == 0) ++piv;
        if (piv == rows.size()) continue;
        std::swap(rows[rank], rows[piv]);
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if (j == rank || rows[j][col] == 0) continue;
            const Count a = rows[rank][col];
            const Count b = rows[j][col];
            for (std::size_t c = 0; c < m; ++c) rows[j][c] = rows[j][c] * a - rows[rank][c] * b;
            detail::reduce_row(rows[j]);
        }
        detail::reduce_row(rows[rank]);
        pivot_cols.push_back(col);
        ++rank;
    }

    std::vector<bool> is_pivot(m, false);
    for (auto c : pivot_cols) is_pivot[c] = true;

    Count common = 1;
    for (std::size_t p = 0; p < rank; ++p) {
        const Count a = std::abs(rows[p][pivot_cols[p]]);
        common = std::lcm(common, a);
    }

    std::vector<ConservationLaw> basis;
    for (std::size_t free = 0; free < m; ++free) {
        if (is_pivot[free]) continue;
        ConservationLaw v(m, 0);
        v[free] = common;
        for (std::size_t p = 0; p < rank; ++p) {
            const Count a = rows[p][pivot_cols[p]];
            v[pivot_cols[p]] = -rows[p][free] * (common / a);
        }
        detail::reduce_row(v);
        for (Count x : v) {
            if (x == 0) continue;
            if (x < 0)
                for (auto& y : v) y = -y;
            break;
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

inline Count dot(const ConservationLaw& v, const std::vector<Count>& x) {
    Count s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * x.at(i);
    return s;
}

/// Renders `D + D1 + D2 = 1`; coefficients other than +-1 are written as `2 X`.
inline std::string format_conservation_law(const ConservationLaw& v, const ReactionNetwork& net, Count value) {
    std::string out;
    bool first = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0) continue;
        const Count mag = v[i] < 0 ? -v[i] : v[i];
        if (first)
            out += v[i] < 0 ? "-" : "";
        else
            out += v[i] < 0 ? " - " : " + ";
        if (mag != 1) out += std::to_string(mag) + " ";
        out += net.species()[i].name;
        first = false;
    }
    return out + " = " + std::to_string(value);
}

} // namespace hybridkinetics
