#pragma once

// Line-oriented model format:
//
//   MODEL <name>
//   DESCRIPTION <free text>
//   SPECIES <name> [<name> ...]
//   PARAMS  <name>=<float> [...]
//   PARTITION CONTINUOUS <names...> DISCRETE <names...> SCALE <float>
//   INIT <species>=<int> [...]
//   RXN <name>: <m> <sp> [+ <m> <sp> ...] -> [<m> <sp> ...] @ <rate>
//   RXN <name>: <lhs> <-> <rhs> @ <rate>, <rate>
//
// `#` starts a comment. A multiplicity is an integer literal or the name of an
// integer-valued parameter and defaults to 1. An empty side is the empty complex. A rate is
// a parameter name or a non-negative literal. Reaction lines may omit the `RXN <name>:`
// prefix, in which case the reaction is named r<k> after its position. Reversible lines
// expand to <name>_fwd and <name>_rev.

#include <charconv>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hybridkinetics/network.hpp"

namespace hybridkinetics {

/// Where each construct came from in the source text (empty for documents built in code).
struct SourceLines {
    int model = 1;
    int partition = 1;
    std::vector<int> species;
    std::vector<int> reactions;

    int species_line(std::size_t i) const { return i < species.size() ? species[i] : model; }
    int reaction_line(std::size_t i) const { return i < reactions.size() ? reactions[i] : model; }
};

struct ModelDocument {
    std::string name;
    std::string description;
    ReactionNetwork network;
    SystemState initial;
    std::optional<Partition> partition;
    SourceLines lines;

    /// Structural equality; source positions are ignored.
    friend bool operator==(const ModelDocument& a, const ModelDocument& b) {
        return a.name == b.name && a.description == b.description && a.network == b.network &&
               a.initial == b.initial && a.partition == b.partition;
    }
};

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity = Severity::error;
    int line = 1; // 1-based
    std::string message;

    std::string to_string() const {
        return "line " + std::to_string(line) + ": " + (severity == Severity::error ? "error: " : "warning: ") +
               message;
    }
};

struct ParseResult {
    std::optional<ModelDocument> document;
    std::vector<Diagnostic> diagnostics;

    bool ok() const noexcept { return document.has_value(); }
};

namespace dsl_detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\v\f";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
    while (i < s.size()) {
        while (i < s.size() && is_ws(s[i])) ++i;
        const std::size_t b = i;
        while (i < s.size() && !is_ws(s[i])) ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t b = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(b, i - b));
            b = i + 1;
        }
    }
    return out;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    auto head = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
    if (!head(s[0])) return false;
    for (char c : s.substr(1))
        if (!(head(c) || (c >= '0' && c <= '9') || c == '*' || c == '\'')) return false;
    return true;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<Count> parse_int(std::string_view s) {
    Count v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, p) : std::string("nan");
}

inline constexpr Count kMaxMultiplicity = 1'000'000;

struct Line {
    int number;
    std::string_view text;
};

class Parser {
public:
    explicit Parser(std::string_view text) {
        int n = 0;
        for (auto raw : split_on(text, '\n')) {
            ++n;
            if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
            raw = trim(raw);
            if (!raw.empty()) lines_.push_back({n, raw});
        }
    }

    ParseResult run() {
        // Pass 1: header, species, parameters.
        for (const auto& ln : lines_) {
            const auto toks = split_ws(ln.text);
            const auto kw = toks.front();
            if (kw == "MODEL") {
                if (model_line_) {
                    error(ln.number, "duplicate MODEL block");
                } else if (toks.size() != 2 || !is_identifier(toks[1])) {
                    error(ln.number, "MODEL expects a single identifier");
                    model_line_ = ln.number;
                } else {
                    name_ = std::string(toks[1]);
                    model_line_ = ln.number;
                }
            } else if (kw == "DESCRIPTION") {
                description_ = std::string(trim(ln.text.substr(kw.size())));
            } else if (kw == "SPECIES") {
                species_block_ = true;
                for (std::size_t i = 1; i < toks.size(); ++i) declare_species(ln.number, toks[i]);
            } else if (kw == "PARAMS") {
                for (std::size_t i = 1; i < toks.size(); ++i) parse_param(ln.number, toks[i]);
            }
        }
        if (!model_line_) {
            error(lines_.empty() ? 1 : lines_.front().number, "no MODEL block");
            return finish();
        }
        // Pass 2: reactions, then partition and initial state (which may name auto-declared species).
        for (const auto& ln : lines_) {
            const auto kw = split_ws(ln.text).front();
            if (kw == "RXN" || (!is_keyword(kw) && ln.text.find("->") != std::string_view::npos))
                parse_reaction(ln);
            else if (!is_keyword(kw))
                error(ln.number, "unrecognized line '" + std::string(kw) + "'");
        }
        for (const auto& ln : lines_) {
            const auto toks = split_ws(ln.text);
            if (toks.front() == "PARTITION") parse_partition(ln.number, toks);
        }
        init_.assign(species_.size(), 0);
        for (const auto& ln : lines_) {
            const auto toks = split_ws(ln.text);
            if (toks.front() == "INIT")
                for (std::size_t i = 1; i < toks.size(); ++i) parse_init(ln.number, toks[i]);
        }
        return finish();
    }

private:
    static bool is_keyword(std::string_view kw) {
        return kw == "MODEL" || kw == "DESCRIPTION" || kw == "SPECIES" || kw == "PARAMS" || kw == "PARTITION" ||
               kw == "INIT" || kw == "RXN";
    }

    void error(int line, std::string msg) { diags_.push_back({Severity::error, line, std::move(msg)}); }

    std::optional<std::size_t> find_species(std::string_view n) const {
        for (std::size_t i = 0; i < species_.size(); ++i)
            if (species_[i] == n) return i;
        return std::nullopt;
    }

    void declare_species(int line, std::string_view n) {
        if (!is_identifier(n)) {
            error(line, "invalid species name '" + std::string(n) + "'");
            return;
        }
        if (find_species(n)) {
            error(line, "duplicate species '" + std::string(n) + "'");
            return;
        }
        species_.emplace_back(n);
        species_lines_.push_back(line);
    }

    void parse_param(int line, std::string_view tok) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) {
            error(line, "PARAMS entries must be name=value, got '" + std::string(tok) + "'");
            return;
        }
        const auto key = tok.substr(0, eq);
        const auto val = parse_double(tok.substr(eq + 1));
        if (!is_identifier(key)) {
            error(line, "invalid parameter name '" + std::string(key) + "'");
        } else if (!val) {
            error(line, "invalid value for parameter '" + std::string(key) + "'");
        } else if (params_.contains(key)) {
            error(line, "duplicate parameter '" + std::string(key) + "'");
        } else {
            params_.set(std::string(key), *val);
        }
    }

    std::optional<std::size_t> resolve_species(int line, std::string_view n) {
        if (!is_identifier(n)) {
            error(line, "invalid species name '" + std::string(n) + "'");
            return std::nullopt;
        }
        if (auto i = find_species(n)) return i;
        if (species_block_) {
            error(line, "unknown species '" + std::string(n) + "'");
            return std::nullopt;
        }
        species_.emplace_back(n);
        species_lines_.push_back(line);
        return species_.size() - 1;
    }

    std::optional<Term> parse_term(int line, std::string_view text) {
        const auto toks = split_ws(text);
        std::string_view coef;
        std::string_view sp;
        if (toks.size() == 1) {
            std::size_t d = 0;
            while (d < toks[0].size() && toks[0][d] >= '0' && toks[0][d] <= '9') ++d;
            coef = toks[0].substr(0, d);
            sp = toks[0].substr(d);
        } else if (toks.size() == 2) {
            coef = toks[0];
            sp = toks[1];
        } else {
            error(line, "malformed reaction term '" + std::string(trim(text)) + "'");
            return std::nullopt;
        }
        Term t;
        if (!coef.empty()) {
            if (auto iv = parse_int(coef)) {
                t.multiplicity = *iv;
            } else if (is_identifier(coef)) {
                auto pv = params_.find(coef);
                if (!pv) {
                    error(line, "undefined parameter '" + std::string(coef) + "'");
                    return std::nullopt;
                }
                if (*pv != std::floor(*pv) || std::abs(*pv) > static_cast<double>(kMaxMultiplicity)) {
                    error(line, "multiplicity parameter '" + std::string(coef) + "' is not an integer");
                    return std::nullopt;
                }
                t.multiplicity = static_cast<Count>(*pv);
                t.multiplicity_parameter = std::string(coef);
            } else {
                error(line, "invalid stoichiometric coefficient '" + std::string(coef) + "'");
                return std::nullopt;
            }
            if (t.multiplicity < 1) {
                error(line, "stoichiometric coefficient < 1");
                return std::nullopt;
            }
            if (t.multiplicity > kMaxMultiplicity) {
                error(line, "stoichiometric coefficient too large");
                return std::nullopt;
            }
        }
        auto idx = resolve_species(line, sp);
        if (!idx) return std::nullopt;
        t.species = *idx;
        return t;
    }

    std::optional<std::vector<Term>> parse_side(int line, std::string_view side) {
        std::vector<Term> terms;
        if (trim(side).empty()) return terms;
        bool ok = true;
        for (auto piece : split_on(side, '+')) {
            if (trim(piece).empty()) {
                error(line, "empty term in reaction side");
                ok = false;
                continue;
            }
            if (auto t = parse_term(line, piece))
                terms.push_back(std::move(*t));
            else
                ok = false;
        }
        if (!ok) return std::nullopt;
        return terms;
    }

    std::optional<RateConstant> parse_rate(int line, std::string_view tok) {
        tok = trim(tok);
        if (tok.empty()) {
            error(line, "missing rate constant");
            return std::nullopt;
        }
        if (auto v = parse_double(tok)) {
            if (*v < 0.0) {
                error(line, "negative rate constant");
                return std::nullopt;
            }
            return RateConstant::value(*v);
        }
        if (!is_identifier(tok)) {
            error(line, "invalid rate '" + std::string(tok) + "'");
            return std::nullopt;
        }
        auto pv = params_.find(tok);
        if (!pv) {
            error(line, "undefined parameter '" + std::string(tok) + "'");
            return std::nullopt;
        }
        if (*pv < 0.0) {
            error(line, "negative rate constant");
            return std::nullopt;
        }
        return RateConstant::named(std::string(tok));
    }

    void add_reaction(int line, std::string name, std::vector<Term> lhs, std::vector<Term> rhs, RateConstant rate) {
        for (const auto& [n, l] : reaction_names_) {
            if (n == name) {
                error(line, "duplicate reaction name '" + name + "'");
                return;
            }
        }
        reaction_names_.emplace_back(name, line);
        pending_.push_back({line, std::move(name), std::move(lhs), std::move(rhs), std::move(rate)});
    }

    void parse_reaction(const Line& ln) {
        std::string_view body = ln.text;
        std::string name;
        if (split_ws(body).front() == "RXN") {
            body = trim(body.substr(3));
            const auto colon = body.find(':');
            if (colon == std::string_view::npos) {
                error(ln.number, "RXN expects '<name>: <reaction>'");
                return;
            }
            const auto n = trim(body.substr(0, colon));
            if (!is_identifier(n)) {
                error(ln.number, "invalid reaction name '" + std::string(n) + "'");
                return;
            }
            name = std::string(n);
            body = body.substr(colon + 1);
        } else {
            name = "r" + std::to_string(reaction_names_.size() + 1);
        }

        const auto at = body.find('@');
        if (at == std::string_view::npos) {
            error(ln.number, "missing '@ <rate>' in reaction");
            return;
        }
        const auto eqn = body.substr(0, at);
        const auto rates = split_on(body.substr(at + 1), ',');

        const bool reversible = eqn.find("<->") != std::string_view::npos;
        const auto arrow = reversible ? eqn.find("<->") : eqn.find("->");
        if (arrow == std::string_view::npos) {
            error(ln.number, "missing '->' in reaction");
            return;
        }
        const auto lhs_text = eqn.substr(0, arrow);
        const auto rhs_text = eqn.substr(arrow + (reversible ? 3 : 2));
        if (lhs_text.find('>') != std::string_view::npos || rhs_text.find('>') != std::string_view::npos ||
            rhs_text.find('<') != std::string_view::npos || lhs_text.find('<') != std::string_view::npos) {
            error(ln.number, "more than one arrow in reaction");
            return;
        }
        if (rates.size() != (reversible ? 2u : 1u)) {
            error(ln.number, reversible ? "reversible reaction needs two rates '@ kf, kr'"
                                        : "irreversible reaction needs exactly one rate");
            return;
        }
        auto lhs = parse_side(ln.number, lhs_text);
        auto rhs = parse_side(ln.number, rhs_text);
        std::optional<RateConstant> kf = parse_rate(ln.number, rates[0]);
        std::optional<RateConstant> kr;
        if (reversible) kr = parse_rate(ln.number, rates[1]);
        if (!lhs || !rhs || !kf || (reversible && !kr)) return;
        if (reversible) {
            add_reaction(ln.number, name + "_fwd", *lhs, *rhs, *kf);
            add_reaction(ln.number, name + "_rev", *rhs, *lhs, *kr);
        } else {
            add_reaction(ln.number, name, std::move(*lhs), std::move(*rhs), std::move(*kf));
        }
    }

    void parse_partition(int line, const std::vector<std::string_view>& toks) {
        if (partition_line_) {
            error(line, "duplicate PARTITION block");
            return;
        }
        partition_line_ = line;
        enum class Mode { none, cont, disc, scale } mode = Mode::none;
        std::vector<int> assigned(species_.size(), 0);
        std::vector<bool> mask(species_.size(), false);
        std::optional<double> scale;
        bool ok = true;
        for (std::size_t i = 1; i < toks.size(); ++i) {
            const auto t = toks[i];
            if (t == "CONTINUOUS") {
                mode = Mode::cont;
            } else if (t == "DISCRETE") {
                mode = Mode::disc;
            } else if (t == "SCALE") {
                mode = Mode::scale;
            } else if (mode == Mode::scale) {
                if (scale) {
                    error(line, "SCALE given twice");
                    ok = false;
                }
                scale = parse_double(t);
                if (!scale) {
                    error(line, "invalid SCALE value '" + std::string(t) + "'");
                    ok = false;
                }
            } else if (mode == Mode::none) {
                error(line, "PARTITION expects CONTINUOUS/DISCRETE/SCALE sections");
                ok = false;
            } else if (auto idx = find_species(t)) {
                ++assigned[*idx];
                if (mode == Mode::cont) mask[*idx] = true;
            } else {
                error(line, "partition names unknown species '" + std::string(t) + "'");
                ok = false;
            }
        }
        if (!scale) {
            if (ok) error(line, "PARTITION requires SCALE");
            return;
        }
        if (!(*scale >= 1.0) || !std::isfinite(*scale)) {
            error(line, "partition SCALE must be a finite number >= 1");
            return;
        }
        for (std::size_t i = 0; i < species_.size(); ++i) {
            if (assigned[i] != 1) {
                error(line, "partition must place species '" + species_[i] + "' in exactly one set");
                ok = false;
            }
        }
        if (ok) partition_ = Partition(std::move(mask), *scale);
    }

    void parse_init(int line, std::string_view tok) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) {
            error(line, "INIT entries must be species=count, got '" + std::string(tok) + "'");
            return;
        }
        const auto sp = tok.substr(0, eq);
        const auto idx = find_species(sp);
        const auto val = parse_int(tok.substr(eq + 1));
        if (!idx) {
            error(line, "INIT names unknown species '" + std::string(sp) + "'");
        } else if (!val) {
            error(line, "invalid initial count for '" + std::string(sp) + "'");
        } else if (*val < 0) {
            error(line, "negative initial count for '" + std::string(sp) + "'");
        } else {
            init_[*idx] = *val;
        }
    }

    ParseResult finish() {
        ParseResult out;
        std::vector<Reaction> reactions;
        SourceLines src;
        src.model = model_line_.value_or(1);
        src.partition = partition_line_.value_or(src.model);
        src.species = species_lines_;
        for (auto& p : pending_) {
            Reaction r = make_mass_action(p.name, std::move(p.lhs), std::move(p.rhs), std::move(p.rate),
                                          species_.size());
            if (std::all_of(r.jump.begin(), r.jump.end(), [](Count c) { return c == 0; })) {
                error(p.line, "reaction '" + p.name + "' has no net effect");
                continue;
            }
            reactions.push_back(std::move(r));
            src.reactions.push_back(p.line);
        }
        const bool failed = std::any_of(diags_.begin(), diags_.end(),
                                        [](const Diagnostic& d) { return d.severity == Severity::error; });
        if (!failed) {
            try {
                ModelDocument doc;
                doc.name = name_;
                doc.description = description_;
                doc.network = ReactionNetwork(species_, std::move(reactions), params_);
                doc.initial.counts = init_;
                doc.partition = partition_;
                doc.lines = std::move(src);
                out.document = std::move(doc);
            } catch (const Error& e) {
                error(model_line_.value_or(1), e.what());
            }
        }
        std::stable_sort(diags_.begin(), diags_.end(),
                         [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
        out.diagnostics = std::move(diags_);
        return out;
    }

    struct PendingReaction {
        int line;
        std::string name;
        std::vector<Term> lhs;
        std::vector<Term> rhs;
        RateConstant rate;
    };

    std::vector<Line> lines_;
    std::vector<Diagnostic> diags_;
    std::optional<int> model_line_;
    std::optional<int> partition_line_;
    std::string name_;
    std::string description_;
    bool species_block_ = false;
    std::vector<std::string> species_;
    std::vector<int> species_lines_;
    Parameters params_;
    std::vector<std::pair<std::string, int>> reaction_names_;
    std::vector<PendingReaction> pending_;
    std::optional<Partition> partition_;
    std::vector<Count> init_;
};

} // namespace dsl_detail

/// Parses model text. Never throws on malformed input: failures come back as diagnostics.
inline ParseResult parse_model(std::string_view text) {
    try {
        return dsl_detail::Parser(text).run();
    } catch (const std::exception& e) {
        ParseResult r;
        r.diagnostics.push_back({Severity::error, 1, std::string("internal parser failure: ") + e.what()});
        return r;
    }
}

/// Parses text that is expected to be valid; throws ConfigurationError listing the diagnostics otherwise.
inline ModelDocument parse_model_or_throw(std::string_view text) {
    auto r = parse_model(text);
    if (!r.document) {
        std::string msg = "model failed to parse";
        for (const auto& d : r.diagnostics) msg += "\n  " + d.to_string();
        throw ConfigurationError(msg);
    }
    return std::move(*r.document);
}

namespace dsl_detail {

inline std::string format_side(const ReactionNetwork& net, const std::vector<Term>& terms) {
    std::string out;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (i) out += " + ";
        const auto& t = terms[i];
        if (!t.multiplicity_parameter.empty())
            out += t.multiplicity_parameter + " ";
        else if (t.multiplicity != 1)
            out += std::to_string(t.multiplicity) + " ";
        out += net.species()[t.species].name;
    }
    return out;
}

} // namespace dsl_detail

/// Canonical text form. Parameters are omitted when there are none; every species gets an
/// INIT entry; reversible pairs are written as their two irreversible halves.
inline std::string serialize_model(const ModelDocument& doc) {
    using dsl_detail::format_double;
    const auto& net = doc.network;
    std::string out = "MODEL " + doc.name + "\n";
    if (!doc.description.empty()) out += "DESCRIPTION " + doc.description + "\n";
    out += "SPECIES";
    for (const auto& s : net.species()) out += " " + s.name;
    out += "\n";
    if (!net.parameters().empty()) {
        out += "PARAMS";
        for (const auto& [k, v] : net.parameters().entries()) out += " " + k + "=" + format_double(v);
        out += "\n";
    }
    if (doc.partition) {
        out += "PARTITION CONTINUOUS";
        for (auto i : doc.partition->continuous_species()) out += " " + net.species()[i].name;
        out += " DISCRETE";
        for (auto i : doc.partition->discrete_species()) out += " " + net.species()[i].name;
        out += " SCALE " + format_double(doc.partition->scale()) + "\n";
    }
    out += "INIT";
    for (std::size_t i = 0; i < net.species_count(); ++i)
        out += " " + net.species()[i].name + "=" + std::to_string(doc.initial.counts.at(i));
    out += "\n";
    for (const auto& r : net.reactions()) {
        const auto* ma = std::get_if<MassAction>(&r.rate_law);
        if (!ma) throw ConfigurationError("reaction '" + r.name + "' has a tabulated rate law with no text form");
        const auto lhs = dsl_detail::format_side(net, r.reactants);
        const auto rhs = dsl_detail::format_side(net, r.products);
        out += "RXN " + r.name + ": " + lhs + (lhs.empty() ? "->" : " ->") + (rhs.empty() ? "" : " " + rhs) + " @ " +
               (ma->rate.is_literal() ? format_double(ma->rate.literal) : ma->rate.parameter) + "\n";
    }
    return out;
}

struct ValidationOptions {
    bool hybrid_requested = false;
};

/// Non-fatal checks on a constructed document.
inline std::vector<Diagnostic> validate_model(const ModelDocument& doc, ValidationOptions opts = {}) {
    std::vector<Diagnostic> out;
    const auto& net = doc.network;
    for (std::size_t i = 0; i < net.species_count(); ++i) {
        const bool changes = std::any_of(net.reactions().begin(), net.reactions().end(),
                                         [&](const Reaction& r) { return r.jump[i] != 0; });
        if (!changes)
            out.push_back({Severity::warning, doc.lines.species_line(i), "species '" + net.species()[i].name +
                                                     "' is never produced or consumed"});
    }
    if (opts.hybrid_requested && !doc.partition)
        out.push_back({Severity::warning, doc.lines.model, "partition required for pdmp"});
    if (doc.partition) {
        const auto classes = classify_reactions(net, *doc.partition);
        for (std::size_t r = 0; r < classes.size(); ++r) {
            if (classes[r] != ReactionClass::RC || !net.reactions()[r].is_mass_action()) continue;
            Count order = 0;
            for (const auto& t : net.reactions()[r].reactants) order += t.multiplicity;
            if (order >= 3)
                out.push_back({Severity::warning, doc.lines.reaction_line(r),
                               "RC reaction '" + net.reactions()[r].name + "' has mass-action order " +
                                   std::to_string(order) + "; scaled limit drops O(1/N) combinatorial terms"});
        }
    }
    return out;
}

} // namespace hybridkinetics
