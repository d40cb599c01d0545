#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "hybridkinetics/error.hpp"

namespace hybridkinetics {

using Count = std::int64_t;

struct Species {
    std::string name;
    std::size_t index = 0;
};

/// A rate constant: either a reference to a named parameter or a literal value.
struct RateConstant {
    std::string parameter; // empty for literals
    double literal = 0.0;

    static RateConstant named(std::string name) { return {std::move(name), 0.0}; }
    static RateConstant value(double v) { return {{}, v}; }
    bool is_literal() const noexcept { return parameter.empty(); }

    friend bool operator==(const RateConstant&, const RateConstant&) = default;
};

/// One side-term of a reaction: `multiplicity * species`. The multiplicity may come
/// from an integer-valued parameter (e.g. a burst size), in which case the symbol is kept
/// for serialization and `multiplicity` holds its resolved value.
struct Term {
    std::size_t species = 0;
    Count multiplicity = 1;
    std::string multiplicity_parameter;

    friend bool operator==(const Term&, const Term&) = default;
};

struct MassAction {
    RateConstant rate;

    friend bool operator==(const MassAction&, const MassAction&) = default;
};

/// Explicit rate table over a few (discrete) key species. States absent from the
/// table have rate zero.
struct TabulatedRate {
    std::vector<std::size_t> keys;
    std::map<std::vector<Count>, double> table;

    double lookup(std::span<const Count> key_values) const {
        auto it = table.find(std::vector<Count>(key_values.begin(), key_values.end()));
        return it == table.end() ? 0.0 : it->second;
    }

    friend bool operator==(const TabulatedRate&, const TabulatedRate&) = default;
};

using RateLaw = std::variant<MassAction, TabulatedRate>;

struct Reaction {
    std::string name;
    std::vector<Term> reactants; // rate-law multiset for mass action (catalysts included)
    std::vector<Term> products;
    std::vector<Count> jump;     // net stoichiometric change, one entry per species
    RateLaw rate_law;

    bool is_mass_action() const noexcept { return std::holds_alternative<MassAction>(rate_law); }

    /// Species whose counts the rate law reads.
    std::vector<std::size_t> rate_dependencies() const {
        std::vector<std::size_t> deps;
        if (is_mass_action()) {
            for (const auto& t : reactants) deps.push_back(t.species);
        } else {
            deps = std::get<TabulatedRate>(rate_law).keys;
        }
        std::sort(deps.begin(), deps.end());
        deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
        return deps;
    }

    /// Species the jump changes.
    std::vector<std::size_t> touched_species() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < jump.size(); ++i)
            if (jump[i] != 0) out.push_back(i);
        return out;
    }

    friend bool operator==(const Reaction&, const Reaction&) = default;
};

namespace detail {

/// Folds repeated species on one side into a single term (`A + A` is `2 A`).
inline std::vector<Term> merge_terms(std::vector<Term> terms) {
    std::vector<Term> out;
    for (auto& t : terms) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Term& o) { return o.species == t.species; });
        if (it == out.end()) {
            out.push_back(std::move(t));
        } else {
            it->multiplicity += t.multiplicity;
            it->multiplicity_parameter.clear();
        }
    }
    return out;
}

} // namespace detail

/// Builds a mass-action reaction, deriving the jump vector from both sides.
inline Reaction make_mass_action(std::string name, std::vector<Term> reactants, std::vector<Term> products,
                                 RateConstant rate, std::size_t species_count) {
    Reaction r;
    r.name = std::move(name);
    reactants = detail::merge_terms(std::move(reactants));
    products = detail::merge_terms(std::move(products));
    r.jump.assign(species_count, 0);
    for (const auto& t : reactants) {
        if (t.species >= species_count) throw ConfigurationError("reaction '" + r.name + "': species index out of range");
        r.jump[t.species] -= t.multiplicity;
    }
    for (const auto& t : products) {
        if (t.species >= species_count) throw ConfigurationError("reaction '" + r.name + "': species index out of range");
        r.jump[t.species] += t.multiplicity;
    }
    r.reactants = std::move(reactants);
    r.products = std::move(products);
    r.rate_law = MassAction{std::move(rate)};
    return r;
}

inline Reaction make_tabulated(std::string name, std::vector<Count> jump, TabulatedRate table) {
    Reaction r;
    r.name = std::move(name);
    r.jump = std::move(jump);
    r.rate_law = std::move(table);
    return r;
}

/// Named real constants, kept in declaration order.
class Parameters {
public:
    Parameters() = default;
    Parameters(std::initializer_list<std::pair<std::string, double>> init) {
        for (const auto& [k, v] : init) set(k, v);
    }

    void set(const std::string& name, double value) {
        for (auto& entry : entries_) {
            if (entry.first == name) {
                entry.second = value;
                return;
            }
        }
        entries_.emplace_back(name, value);
    }

    std::optional<double> find(std::string_view name) const {
        for (const auto& [k, v] : entries_)
            if (k == name) return v;
        return std::nullopt;
    }

    double at(std::string_view name) const {
        if (auto v = find(name)) return *v;
        throw ConfigurationError("undefined parameter '" + std::string(name) + "'");
    }

    bool contains(std::string_view name) const { return find(name).has_value(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }

    friend bool operator==(const Parameters&, const Parameters&) = default;

private:
    std::vector<std::pair<std::string, double>> entries_;
};

inline double resolve_rate(const RateConstant& rate, const Parameters& params) {
    return rate.is_literal() ? rate.literal : params.at(rate.parameter);
}

/// Species, reactions and parameters. Validated on construction and immutable afterwards,
/// so a single instance can be shared by concurrent simulation workers.
class ReactionNetwork {
public:
    ReactionNetwork() = default;

    ReactionNetwork(std::vector<std::string> species_names, std::vector<Reaction> reactions, Parameters parameters)
        : reactions_(std::move(reactions)), parameters_(std::move(parameters)) {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < species_names.size(); ++i) {
            if (!seen.insert(species_names[i]).second)
                throw ConfigurationError("duplicate species '" + species_names[i] + "'");
            species_.push_back({std::move(species_names[i]), i});
        }
        for (const auto& r : reactions_) validate(r);
    }

    const std::vector<Species>& species() const noexcept { return species_; }
    const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
    const Parameters& parameters() const noexcept { return parameters_; }
    std::size_t species_count() const noexcept { return species_.size(); }
    std::size_t reaction_count() const noexcept { return reactions_.size(); }

    std::optional<std::size_t> species_index(std::string_view name) const {
        for (const auto& s : species_)
            if (s.name == name) return s.index;
        return std::nullopt;
    }

    std::size_t require_species(std::string_view name) const {
        if (auto i = species_index(name)) return *i;
        throw ConfigurationError("unknown species '" + std::string(name) + "'");
    }

    std::vector<std::string> species_names() const {
        std::vector<std::string> out;
        for (const auto& s : species_) out.push_back(s.name);
        return out;
    }

    /// Resolved rate constant of a mass-action reaction.
    double rate_constant(const Reaction& r) const {
        return resolve_rate(std::get<MassAction>(r.rate_law).rate, parameters_);
    }

    friend bool operator==(const ReactionNetwork& a, const ReactionNetwork& b) {
        return a.species_names() == b.species_names() && a.reactions_ == b.reactions_ &&
               a.parameters_ == b.parameters_;
    }

private:
    void validate(const Reaction& r) const {
        const std::string where = "reaction '" + r.name + "': ";
        if (r.jump.size() != species_.size()) throw ConfigurationError(where + "jump length does not match species count");
        if (std::all_of(r.jump.begin(), r.jump.end(), [](Count c) { return c == 0; }))
            throw ConfigurationError(where + "jump vector is zero");
        for (const auto& side : {std::cref(r.reactants), std::cref(r.products)}) {
            for (const auto& t : side.get()) {
                if (t.species >= species_.size()) throw ConfigurationError(where + "species index out of range");
                if (t.multiplicity < 1) throw ConfigurationError(where + "stoichiometric coefficient < 1");
                if (!t.multiplicity_parameter.empty()) {
                    auto v = parameters_.find(t.multiplicity_parameter);
                    if (!v) throw ConfigurationError(where + "undefined parameter '" + t.multiplicity_parameter + "'");
                    if (*v != static_cast<double>(t.multiplicity))
                        throw ConfigurationError(where + "multiplicity does not match parameter '" +
                                                 t.multiplicity_parameter + "'");
                }
            }
        }
        if (const auto* ma = std::get_if<MassAction>(&r.rate_law)) {
            const double k = ma->rate.is_literal() ? ma->rate.literal : [&] {
                auto v = parameters_.find(ma->rate.parameter);
                if (!v) throw ConfigurationError(where + "undefined parameter '" + ma->rate.parameter + "'");
                return *v;
            }();
            if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigurationError(where + "negative rate constant");
        } else {
            const auto& tab = std::get<TabulatedRate>(r.rate_law);
            for (auto key : tab.keys)
                if (key >= species_.size()) throw ConfigurationError(where + "table key out of range");
            for (const auto& [state, rate] : tab.table) {
                if (state.size() != tab.keys.size()) throw ConfigurationError(where + "table row has wrong arity");
                if (!(rate >= 0.0)) throw ConfigurationError(where + "negative tabulated rate");
            }
        }
    }

    std::vector<Species> species_;
    std::vector<Reaction> reactions_;
    Parameters parameters_;
};

/// Molecule counts, one per species.
struct SystemState {
    std::vector<Count> counts;

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Split of species into abundant (continuous, scaled by N) and rare (discrete) sets.
class Partition {
public:
    Partition() = default;

    Partition(std::vector<bool> continuous_mask, double scale) : continuous_(std::move(continuous_mask)), scale_(scale) {
        if (!(scale_ >= 1.0) || !std::isfinite(scale_)) throw ConfigurationError("partition scale must be >= 1");
        for (std::size_t i = 0; i < continuous_.size(); ++i)
            (continuous_[i] ? cont_idx_ : disc_idx_).push_back(i);
    }

    /// Every species discrete at scale 1: scaled propensities reduce to plain counts.
    static Partition all_discrete(std::size_t species_count) { return {std::vector<bool>(species_count, false), 1.0}; }
    static Partition all_continuous(std::size_t species_count, double scale) {
        return {std::vector<bool>(species_count, true), scale};
    }

    static Partition from_names(const ReactionNetwork& net, const std::vector<std::string>& continuous,
                                const std::vector<std::string>& discrete, double scale) {
        std::vector<int> assigned(net.species_count(), 0);
        std::vector<bool> mask(net.species_count(), false);
        for (const auto& n : continuous) {
            auto i = net.require_species(n);
            mask[i] = true;
            ++assigned[i];
        }
        for (const auto& n : discrete) ++assigned[net.require_species(n)];
        for (std::size_t i = 0; i < assigned.size(); ++i) {
            if (assigned[i] != 1)
                throw ConfigurationError("partition must place species '" + net.species()[i].name +
                                         "' in exactly one set");
        }
        return {std::move(mask), scale};
    }

    bool is_continuous(std::size_t species) const { return continuous_.at(species); }
    double scale() const noexcept { return scale_; }
    std::size_t species_count() const noexcept { return continuous_.size(); }
    const std::vector<std::size_t>& continuous_species() const noexcept { return cont_idx_; }
    const std::vector<std::size_t>& discrete_species() const noexcept { return disc_idx_; }
    const std::vector<bool>& mask() const noexcept { return continuous_; }

    friend bool operator==(const Partition& a, const Partition& b) {
        return a.continuous_ == b.continuous_ && a.scale_ == b.scale_;
    }

private:
    std::vector<bool> continuous_;
    double scale_ = 1.0;
    std::vector<std::size_t> cont_idx_;
    std::vector<std::size_t> disc_idx_;
};

/// (x_C, X_D): concentrations over the continuous set and counts over the discrete set,
/// each in the partition's index order.
struct HybridState {
    std::vector<double> x_c;
    std::vector<Count> x_d;

    friend bool operator==(const HybridState&, const HybridState&) = default;
};

inline HybridState to_hybrid(const SystemState& state, const Partition& p) {
    HybridState h;
    for (auto i : p.continuous_species()) h.x_c.push_back(static_cast<double>(state.counts.at(i)) / p.scale());
    for (auto i : p.discrete_species()) h.x_d.push_back(state.counts.at(i));
    return h;
}

enum class ReactionClass { RC, RD, RDC };

inline const char* to_string(ReactionClass c) {
    switch (c) {
    case ReactionClass::RC: return "RC";
    case ReactionClass::RD: return "RD";
    case ReactionClass::RDC: return "RDC";
    }
    return "?";
}

// ---------------------------------------------------------------------------------------------
// Propensities

/// n(n-1)...(n-m+1); zero when n < m.
inline double falling_factorial(double n, Count m) noexcept {
    if (n < static_cast<double>(m)) return 0.0;
    double out = 1.0;
    for (Count j = 0; j < m; ++j) out *= n - static_cast<double>(j);
    return out;
}

inline double inverse_factorial(Count m) noexcept {
    double f = 1.0;
    for (Count j = 2; j <= m; ++j) f *= static_cast<double>(j);
    return 1.0 / f;
}

/// Jump-process propensity: k times the number of distinct reactant tuples.
inline double propensity(const Reaction& r, const SystemState& state, const Parameters& params) {
    if (const auto* ma = std::get_if<MassAction>(&r.rate_law)) {
        double rate = resolve_rate(ma->rate, params);
        for (const auto& t : r.reactants) {
            rate *= falling_factorial(static_cast<double>(state.counts.at(t.species)), t.multiplicity) *
                    inverse_factorial(t.multiplicity);
        }
        return rate;
    }
    const auto& tab = std::get<TabulatedRate>(r.rate_law);
    std::vector<Count> key;
    for (auto k : tab.keys) key.push_back(state.counts.at(k));
    return tab.lookup(key);
}

inline double propensity(const ReactionNetwork& net, const Reaction& r, const SystemState& state) {
    return propensity(r, state, net.parameters());
}

inline double total_propensity(const ReactionNetwork& net, const SystemState& state, const Parameters& params) {
    double total = 0.0;
    for (const auto& r : net.reactions()) total += propensity(r, state, params);
    return total;
}

inline double total_propensity(const ReactionNetwork& net, const SystemState& state) {
    return total_propensity(net, state, net.parameters());
}

inline SystemState apply_jump(const SystemState& state, const Reaction& r) {
    if (r.jump.size() != state.counts.size()) throw ConfigurationError("jump length does not match state");
    SystemState out = state;
    for (std::size_t i = 0; i < out.counts.size(); ++i) {
        out.counts[i] += r.jump[i];
        if (out.counts[i] < 0)
            throw InfeasibleJumpError("reaction '" + r.name + "' would make count " + std::to_string(i) + " negative");
    }
    return out;
}

using StateFunction = std::function<double(const SystemState&)>;

/// A f(X) = sum_r [f(X + gamma_r) - f(X)] lambda_r(X). Reactions with zero propensity are
/// skipped, so f is only evaluated on reachable states.
inline double apply_generator(const ReactionNetwork& net, const StateFunction& f, const SystemState& state,
                              const Parameters& params) {
    const double f0 = f(state);
    double acc = 0.0;
    for (const auto& r : net.reactions()) {
        const double rate = propensity(r, state, params);
        if (rate == 0.0) continue;
        acc += (f(apply_jump(state, r)) - f0) * rate;
    }
    return acc;
}

inline double apply_generator(const ReactionNetwork& net, const StateFunction& f, const SystemState& state) {
    return apply_generator(net, f, state, net.parameters());
}

// ---------------------------------------------------------------------------------------------
// Multiscale classification and scaling

inline ReactionClass classify_reaction(const Reaction& r, const Partition& p) {
    bool only_c = true;
    bool only_d = true;
    auto visit = [&](std::size_t i) {
        if (p.is_continuous(i))
            only_d = false;
        else
            only_c = false;
    };
    for (auto i : r.touched_species()) visit(i);
    for (auto i : r.rate_dependencies()) visit(i);
    if (only_c) return ReactionClass::RC;
    if (only_d) return ReactionClass::RD;
    return ReactionClass::RDC;
}

inline std::vector<ReactionClass> classify_reactions(const ReactionNetwork& net, const Partition& p) {
    if (p.species_count() != net.species_count()) throw PreconditionError("partition does not cover the network");
    std::vector<ReactionClass> out;
    out.reserve(net.reaction_count());
    for (const auto& r : net.reactions()) out.push_back(classify_reaction(r, p));
    return out;
}

/// Density-dependent view of a network under a partition.
///
/// With scale N, a mass-action constant k acts on continuous reactants through their
/// concentrations n/N, and RC reactions carry one extra factor N:
///
///   lambda_r^N(X) = k * N^[r in RC] * prod_C ff(n, m) / (m! N^m) * prod_D ff(n, m) / m!
///
/// The continuous relaxation replaces ff(n, m)/N^m by x^m for continuous species. The scaled
/// rate is lambda~_r = lambda_r / N for RC reactions and lambda_r itself otherwise; for
/// N = 1 with every species discrete, count propensities coincide with `propensity`.
class ScaledNetwork {
public:
    struct Factor {
        std::size_t species;
        Count multiplicity;
        double inv_factorial;
        bool continuous;
        double count_coeff = 0.0; // 1/m!, divided by N^m for continuous species
    };

    struct Entry {
        double k = 0.0;
        double k_count = 0.0; // k, times N for RC reactions
        ReactionClass cls = ReactionClass::RD;
        std::vector<Factor> factors;
        std::vector<std::pair<std::size_t, Count>> jump; // sparse net change
        const TabulatedRate* table = nullptr;
    };

    ScaledNetwork(const ReactionNetwork& net, Partition partition) : net_(&net), partition_(std::move(partition)) {
        if (partition_.species_count() != net.species_count())
            throw PreconditionError("partition does not cover the network");
        const double n = partition_.scale();
        for (const auto& r : net.reactions()) {
            Entry e;
            e.cls = classify_reaction(r, partition_);
            if (const auto* ma = std::get_if<MassAction>(&r.rate_law)) {
                e.k = resolve_rate(ma->rate, net.parameters());
                for (const auto& t : r.reactants) {
                    // Repeated terms of the same species merge into one factor.
                    auto it = std::find_if(e.factors.begin(), e.factors.end(),
                                           [&](const Factor& f) { return f.species == t.species; });
                    if (it != e.factors.end()) {
                        it->multiplicity += t.multiplicity;
                        it->inv_factorial = inverse_factorial(it->multiplicity);
                    } else {
                        e.factors.push_back({t.species, t.multiplicity, inverse_factorial(t.multiplicity),
                                             partition_.is_continuous(t.species), 0.0});
                    }
                }
            } else {
                e.table = &std::get<TabulatedRate>(r.rate_law);
            }
            for (auto& f : e.factors) {
                f.count_coeff = f.inv_factorial;
                if (f.continuous) f.count_coeff /= std::pow(n, static_cast<double>(f.multiplicity));
            }
            e.k_count = e.cls == ReactionClass::RC ? e.k * n : e.k;
            for (std::size_t i = 0; i < r.jump.size(); ++i)
                if (r.jump[i] != 0) e.jump.emplace_back(i, r.jump[i]);
            entries_.push_back(std::move(e));
        }
        scale_ = n;
    }

    const ReactionNetwork& network() const noexcept { return *net_; }
    const Partition& partition() const noexcept { return partition_; }
    double scale() const noexcept { return scale_; }
    std::size_t reaction_count() const noexcept { return entries_.size(); }
    const Entry& entry(std::size_t r) const { return entries_.at(r); }
    ReactionClass reaction_class(std::size_t r) const { return entries_.at(r).cls; }

    /// lambda_r^N at integer counts (jump-process propensity at scale N).
    double count_propensity(std::size_t r, std::span<const Count> counts) const {
        const Entry& e = entries_[r];
        if (e.table) return table_rate(*e.table, counts);
        double rate = e.k_count;
        for (const auto& f : e.factors)
            rate *= falling_factorial(static_cast<double>(counts[f.species]), f.multiplicity) * f.count_coeff;
        return rate;
    }

    /// Scaled rate on a mixed vector (concentrations for continuous species, counts for
    /// discrete ones, full species length): lambda~_r for RC, lambda_r otherwise.
    double scaled_rate(std::size_t r, std::span<const double> mixed) const {
        const Entry& e = entries_[r];
        if (e.table) {
            std::vector<Count> key;
            for (auto k : e.table->keys) key.push_back(static_cast<Count>(std::llround(mixed[k])));
            return e.table->lookup(key);
        }
        double rate = e.k;
        for (const auto& f : e.factors) {
            const double v = mixed[f.species];
            if (f.continuous) {
                double p = 1.0;
                for (Count j = 0; j < f.multiplicity; ++j) p *= v;
                rate *= (v > 0.0 ? p : 0.0) * f.inv_factorial;
            } else {
                rate *= falling_factorial(v, f.multiplicity) * f.inv_factorial;
            }
        }
        return rate;
    }

    /// Rate at which reaction r fires in the scaled process: N * lambda~ for RC, lambda otherwise.
    double hybrid_rate(std::size_t r, std::span<const double> mixed) const {
        const double s = scaled_rate(r, mixed);
        return entries_[r].cls == ReactionClass::RC ? s * scale_ : s;
    }

    /// Per-species concentration displacement gamma_r^C / N (zero on discrete species).
    std::vector<double> concentration_jump(std::size_t r) const {
        std::vector<double> out(partition_.species_count(), 0.0);
        for (const auto& [i, c] : entries_.at(r).jump)
            if (partition_.is_continuous(i)) out[i] = static_cast<double>(c) / scale_;
        return out;
    }

    /// Scaled rate evaluated at x_C for an RC reaction (discrete species irrelevant).
    double scaled_rate(std::size_t r, const HybridState& h) const { return scaled_rate(r, to_mixed(h)); }

    std::vector<double> to_mixed(const HybridState& h) const {
        std::vector<double> mixed(partition_.species_count(), 0.0);
        const auto& ci = partition_.continuous_species();
        const auto& di = partition_.discrete_species();
        for (std::size_t j = 0; j < ci.size(); ++j) mixed[ci[j]] = h.x_c.at(j);
        for (std::size_t j = 0; j < di.size(); ++j) mixed[di[j]] = static_cast<double>(h.x_d.at(j));
        return mixed;
    }

private:
    static double table_rate(const TabulatedRate& t, std::span<const Count> counts) {
        std::vector<Count> key;
        for (auto k : t.keys) key.push_back(counts[k]);
        return t.lookup(key);
    }

    const ReactionNetwork* net_;
    Partition partition_;
    double scale_ = 1.0;
    std::vector<Entry> entries_;
};

inline ScaledNetwork scale_network(const ReactionNetwork& net, const Partition& p) { return ScaledNetwork(net, p); }

} // namespace hybridkinetics
