#pragma once

#include <string>

#include "hybridkinetics/dsl.hpp"
#include "hybridkinetics/error.hpp"

namespace hybridkinetics {

enum class PhageVariant { a, b };

/// Lambda-phage promoter model. Variant a treats every species as abundant; variant b keeps
/// the single promoter site (D, D1, D2) discrete.
struct PhageParams {
    double k1f = 0.1, k1r = 0.1; // 2C <-> C2
    double k2f = 0.1, k2r = 0.1; // D + C2 <-> D1
    double k3f = 0.1, k3r = 0.1; // D1 + C2 <-> D2
    double k4 = 0.006;           // D1 -> D1 + n C
    double k5 = 0.01;            // C -> 0
    Count n_burst = 1;           // free parameter: not fixed by the reference figures
    PhageVariant variant = PhageVariant::a;
    double scale = 1000.0;
    Count init_c = 1000, init_c2 = 0, init_d = 1000;

    static PhageParams variant_a() { return {}; }

    /// k2 is not given for this regime; it defaults to the k1/k3 value.
    static PhageParams variant_b() {
        PhageParams p;
        p.k1f = p.k1r = p.k2f = p.k2r = p.k3f = p.k3r = 0.01;
        p.k4 = 0.3;
        p.k5 = 0.005;
        p.variant = PhageVariant::b;
        p.scale = 10.0;
        p.init_c = 100;
        p.init_c2 = 0;
        p.init_d = 1;
        return p;
    }

    void validate() const {
        for (double k : {k1f, k1r, k2f, k2r, k3f, k3r, k4, k5})
            if (!(k >= 0.0)) throw ConfigurationError("phage rate constants must be >= 0");
        if (n_burst < 1) throw ConfigurationError("n_burst must be >= 1");
        if (!(scale >= 1.0)) throw ConfigurationError("scale must be >= 1");
        if (init_c < 0 || init_c2 < 0 || init_d < 0) throw ConfigurationError("initial counts must be >= 0");
    }
};

/// Cook's haploinsufficiency model: a gene switching between G and G*, with G* producing P.
struct CookParams {
    double k1 = 20.0;   // G -> G*
    double km1 = 10.0;  // G* -> G
    double k2 = 4000.0; // G* -> G* + P
    double k3 = 1.0;    // P -> 0
    Count G0 = 1;
    double scale = 1000.0; // P is the abundant species; the model itself is scale-free

    void validate() const {
        for (double k : {k1, km1, k2, k3})
            if (!(k >= 0.0)) throw ConfigurationError("Cook rate constants must be >= 0");
        if (G0 < 1) throw ConfigurationError("G0 must be >= 1");
        if (!(scale >= 1.0)) throw ConfigurationError("scale must be >= 1");
    }
};

namespace models_detail {

inline std::string num(double v) { return dsl_detail::format_double(v); }

} // namespace models_detail

inline std::string lambda_phage_text(const PhageParams& p) {
    using models_detail::num;
    p.validate();
    const bool a = p.variant == PhageVariant::a;
    std::string s;
    s += a ? "MODEL lambda_phage_a\n" : "MODEL lambda_phage_b\n";
    s += a ? "DESCRIPTION lambda phage promoter, all species abundant\n"
           : "DESCRIPTION lambda phage promoter, single site kept discrete\n";
    s += "SPECIES C C2 D D1 D2\n";
    s += "PARAMS k1f=" + num(p.k1f) + " k1r=" + num(p.k1r) + " k2f=" + num(p.k2f) + " k2r=" + num(p.k2r) +
         " k3f=" + num(p.k3f) + " k3r=" + num(p.k3r) + " k4=" + num(p.k4) + " k5=" + num(p.k5) +
         " n=" + std::to_string(p.n_burst) + "\n";
    s += a ? "PARTITION CONTINUOUS C C2 D D1 D2 DISCRETE SCALE " + num(p.scale) + "\n"
           : "PARTITION CONTINUOUS C C2 DISCRETE D D1 D2 SCALE " + num(p.scale) + "\n";
    s += "INIT C=" + std::to_string(p.init_c) + " C2=" + std::to_string(p.init_c2) + " D=" + std::to_string(p.init_d) +
         " D1=0 D2=0\n";
    s += "RXN dimerize: 2 C -> C2 @ k1f\n"
         "RXN undimerize: C2 -> 2 C @ k1r\n"
         "RXN bind1: D + C2 -> D1 @ k2f\n"
         "RXN unbind1: D1 -> D + C2 @ k2r\n"
         "RXN bind2: D1 + C2 -> D2 @ k3f\n"
         "RXN unbind2: D2 -> D1 + C2 @ k3r\n"
         "RXN express: D1 -> D1 + n C @ k4\n"
         "RXN decay: C -> @ k5\n";
    return s;
}

inline ModelDocument lambda_phage_model(const PhageParams& p) { return parse_model_or_throw(lambda_phage_text(p)); }

inline std::string cook_text(const CookParams& p) {
    using models_detail::num;
    p.validate();
    std::string s = "MODEL cook\n"
                    "DESCRIPTION gene switching between G and G*, protein P made from G*\n"
                    "SPECIES G G* P\n";
    s += "PARAMS k1=" + num(p.k1) + " km1=" + num(p.km1) + " k2=" + num(p.k2) + " k3=" + num(p.k3) + "\n";
    s += "PARTITION CONTINUOUS P DISCRETE G G* SCALE " + num(p.scale) + "\n";
    s += "INIT G=" + std::to_string(p.G0) + " G*=0 P=0\n";
    s += "RXN activate: G -> G* @ k1\n"
         "RXN deactivate: G* -> G @ km1\n"
         "RXN produce: G* -> G* + P @ k2\n"
         "RXN degrade: P -> @ k3\n";
    return s;
}

inline ModelDocument cook_model(const CookParams& p = {}) { return parse_model_or_throw(cook_text(p)); }

/// Long-run mean of P: (k2/k3) times the stationary occupancy k1/(k1+km1) of G*, per gene copy.
inline double cook_stationary_mean(const CookParams& p) {
    if (!(p.k3 > 0.0)) throw PreconditionError("k3 = 0: P has no stationary mean");
    if (!(p.k1 + p.km1 > 0.0)) throw PreconditionError("k1 + km1 = 0: gene state never mixes");
    return static_cast<double>(p.G0) * (p.k2 / p.k3) * p.k1 / (p.k1 + p.km1);
}

/// Names accepted by the CLI's --builtin flag.
inline ModelDocument builtin_model(const std::string& name) {
    if (name == "cook") return cook_model();
    if (name == "lambda_phage_a") return lambda_phage_model(PhageParams::variant_a());
    if (name == "lambda_phage_b") return lambda_phage_model(PhageParams::variant_b());
    throw ConfigurationError("unknown builtin model '" + name + "' (expected cook, lambda_phage_a, lambda_phage_b)");
}

} // namespace hybridkinetics
