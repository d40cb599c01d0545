#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hybridkinetics/conservation.hpp"
#include "hybridkinetics/dsl.hpp"
#include "hybridkinetics/ensemble.hpp"
#include "hybridkinetics/models.hpp"
#include "hybridkinetics/ode.hpp"
#include "hybridkinetics/pdmp.hpp"
#include "hybridkinetics/ssa.hpp"

namespace hybridkinetics {

enum class Engine { ssa, pdmp, ode };

inline const char* to_string(Engine e) {
    switch (e) {
    case Engine::ssa: return "ssa";
    case Engine::pdmp: return "pdmp";
    case Engine::ode: return "ode";
    }
    return "?";
}

inline Engine parse_engine(std::string_view s) {
    if (s == "ssa") return Engine::ssa;
    if (s == "pdmp") return Engine::pdmp;
    if (s == "ode") return Engine::ode;
    throw ConfigurationError("unknown engine '" + std::string(s) + "' (expected ssa, pdmp or ode)");
}

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiagnostics = 1;
inline constexpr int kExitRuntime = 2;

struct RunConfig {
    std::string model_path;
    std::string builtin;
    Engine engine = Engine::ssa;
    Engine baseline = Engine::ssa; // bench: reference engine timed against `engine`
    double t_max = 10.0;
    std::uint64_t seed = 1;
    std::size_t samples = 1001;
    std::size_t runs = 100;
    std::size_t repeats = 5; // bench
    std::string out;
    bool record_jumps = false;
    bool displacement = true;
    double rtol = 1e-6;
    double atol = 1e-9;
    bool gnuplot = false;

    void validate() const {
        if (model_path.empty() == builtin.empty()) throw ConfigurationError("give exactly one of --model or --builtin");
        if (!(t_max > 0.0)) throw ConfigurationError("--tmax must be positive");
        if (samples < 1) throw ConfigurationError("--samples must be >= 1");
        if (runs < 1) throw ConfigurationError("--runs must be >= 1");
        if (repeats < 1) throw ConfigurationError("--repeats must be >= 1");
        if ((record_jumps || gnuplot) && out.empty())
            throw ConfigurationError("--record-jumps and --gnuplot write side files next to --out");
    }

    IntegratorConfig integrator() const {
        IntegratorConfig c;
        c.rtol = rtol;
        c.atol = atol;
        return c;
    }
};

struct LoadedModel {
    std::optional<ModelDocument> document;
    std::vector<Diagnostic> diagnostics;
};

inline LoadedModel load_model(const RunConfig& cfg) {
    if (!cfg.builtin.empty()) return {builtin_model(cfg.builtin), {}};
    std::ifstream in(cfg.model_path, std::ios::binary);
    if (!in) throw Error("cannot read model file '" + cfg.model_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto res = parse_model(ss.str());
    return {std::move(res.document), std::move(res.diagnostics)};
}

/// Engine dispatch. The ODE engine treats every species as continuous at the model's scale.
inline Trajectory run_engine(const ModelDocument& doc, Engine engine, double t_max, std::uint64_t seed,
                             std::span<const double> grid, const RunConfig& cfg) {
    switch (engine) {
    case Engine::ssa: {
        SsaConfig sc;
        sc.record_jumps = cfg.record_jumps;
        return simulate_ssa(doc, t_max, seed, grid, sc);
    }
    case Engine::pdmp: {
        PdmpConfig pc;
        pc.ode = cfg.integrator();
        pc.displacement = cfg.displacement;
        pc.record_jumps = cfg.record_jumps;
        return simulate_pdmp(doc, t_max, seed, pc, grid);
    }
    case Engine::ode: {
        const double scale = doc.partition ? doc.partition->scale() : 1.0;
        return simulate_ode(doc.network, Partition::all_continuous(doc.network.species_count(), scale), doc.initial,
                            t_max, cfg.integrator(), grid);
    }
    }
    throw ConfigurationError("unknown engine");
}

namespace commands_detail {

/// Prints diagnostics; returns true when any is an error.
inline bool report(const std::vector<Diagnostic>& diags, std::ostream& err) {
    bool failed = false;
    for (const auto& d : diags) {
        err << d.to_string() << '\n';
        failed |= d.severity == Severity::error;
    }
    return failed;
}

/// Loads and validates; returns nullopt (after printing) when the model has errors.
inline std::optional<ModelDocument> prepare(const RunConfig& cfg, std::ostream& err, bool hybrid) {
    auto loaded = load_model(cfg);
    bool failed = report(loaded.diagnostics, err);
    if (!loaded.document) return std::nullopt;
    failed |= report(validate_model(*loaded.document, {hybrid}), err);
    if (hybrid && !loaded.document->partition) failed = true;
    if (failed) return std::nullopt;
    return loaded.document;
}

template <class Write>
void emit(const std::string& path, std::ostream& fallback, Write&& write) {
    if (path.empty()) {
        write(fallback);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    write(f);
    if (!f) throw Error("write to '" + path + "' failed");
}

/// Gnuplot script next to a CSV: plots columns first, first + stride, ... against t.
inline void write_gnuplot(const std::string& csv_path, const std::vector<std::string>& titles, const std::string& title,
                          std::ostream& err, std::size_t first = 2, std::size_t stride = 1) {
    emit(csv_path + ".gp", err, [&](std::ostream& os) {
        os << "set datafile separator ','\n"
           << "set key outside right\n"
           << "set xlabel 't'\n"
           << "set title '" << title << "'\n"
           << "plot ";
        for (std::size_t j = 0; j < titles.size(); ++j)
            os << (j ? ", \\\n     " : "") << "'" << csv_path << "' using 1:" << first + j * stride
               << " every ::1 with lines title '" << titles[j] << "'";
        os << '\n';
    });
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace commands_detail

/// Single trajectory to CSV (and a jumps file / gnuplot script when requested).
inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return commands_detail::guarded(err, [&] {
        cfg.validate();
        auto doc = commands_detail::prepare(cfg, err, cfg.engine == Engine::pdmp);
        if (!doc) return kExitDiagnostics;
        const auto grid = uniform_grid(cfg.t_max, cfg.samples);
        const auto tr = run_engine(*doc, cfg.engine, cfg.t_max, cfg.seed, grid, cfg);
        commands_detail::emit(cfg.out, out, [&](std::ostream& os) { write_trajectory_csv(os, tr); });
        if (cfg.record_jumps) {
            std::vector<std::string> names;
            for (const auto& r : doc->network.reactions()) names.push_back(r.name);
            commands_detail::emit(cfg.out + ".jumps.csv", out,
                                  [&](std::ostream& os) { write_jumps_csv(os, tr, names); });
        }
        if (cfg.gnuplot)
            commands_detail::write_gnuplot(cfg.out, tr.columns, doc->name + " (" + to_string(cfg.engine) + ")", err);
        return kExitOk;
    });
}

/// Ensemble of `runs` trajectories with per-member seeds derived from --seed; writes the
/// per-grid-point summary.
inline EnsembleSummary run_ensemble_summary(const ModelDocument& doc, const RunConfig& cfg) {
    const auto grid = uniform_grid(cfg.t_max, cfg.samples);
    RunConfig member = cfg;
    member.record_jumps = false;
    auto runs = run_ensemble(cfg.runs, cfg.seed, [&](std::size_t, std::uint64_t seed) {
        return run_engine(doc, cfg.engine, cfg.t_max, seed, grid, member);
    });
    return summarize(runs);
}

inline int cmd_ensemble(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return commands_detail::guarded(err, [&] {
        cfg.validate();
        if (cfg.runs < 2) throw ConfigurationError("ensemble needs --runs >= 2");
        auto doc = commands_detail::prepare(cfg, err, cfg.engine == Engine::pdmp);
        if (!doc) return kExitDiagnostics;
        const auto summary = run_ensemble_summary(*doc, cfg);
        commands_detail::emit(cfg.out, out, [&](std::ostream& os) { write_summary_csv(os, summary); });
        if (cfg.gnuplot) {
            std::vector<std::string> means;
            for (const auto& c : summary.columns) means.push_back(c + "_mean");
            commands_detail::write_gnuplot(cfg.out, means, doc->name + " ensemble mean (" + to_string(cfg.engine) + ")",
                                           err, 2, 4);
        }
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------------------------
// Benchmark

struct EngineBench {
    Engine engine = Engine::ssa;
    std::vector<double> seconds; // one per timed repeat
    double mean_seconds = 0.0;
    double sd_seconds = 0.0;
    double mean_jumps = 0.0;
    std::vector<std::string> species;  // network order
    std::vector<double> endpoint_mean; // molecule units at t_max
    std::vector<double> endpoint_var;
};

struct BenchReport {
    EngineBench baseline;
    EngineBench candidate;
    double t_max = 0.0;
    std::size_t repeats = 0;

    /// Wall-time ratio baseline / candidate.
    double speedup() const { return baseline.mean_seconds / candidate.mean_seconds; }
    double jump_ratio() const {
        return candidate.mean_jumps > 0.0 ? baseline.mean_jumps / candidate.mean_jumps
                                          : std::numeric_limits<double>::infinity();
    }
};

namespace commands_detail {

inline EngineBench time_engine(const ModelDocument& doc, Engine engine, const RunConfig& cfg) {
    EngineBench b;
    b.engine = engine;
    b.species = doc.network.species_names();
    const std::vector<double> grid{cfg.t_max}; // endpoint only: sampling cost stays out of the timing
    RunConfig quiet = cfg;
    quiet.record_jumps = false;

    (void)run_engine(doc, engine, cfg.t_max, derive_stream_seed(cfg.seed, 0), grid, quiet); // warm-up

    const std::size_t n_sp = b.species.size();
    const std::vector<bool> mask = doc.partition ? doc.partition->mask() : std::vector<bool>(n_sp, false);
    std::vector<double> sum(n_sp, 0.0), sum_sq(n_sp, 0.0);
    double jumps = 0.0;
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
        const auto seed = derive_stream_seed(cfg.seed, rep);
        const auto t0 = std::chrono::steady_clock::now();
        const auto tr = run_engine(doc, engine, cfg.t_max, seed, grid, quiet);
        const auto t1 = std::chrono::steady_clock::now();
        b.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
        jumps += static_cast<double>(tr.jump_count);
        for (std::size_t s = 0; s < n_sp; ++s) {
            const double v = tr.column_counts(b.species[s], mask).back();
            sum[s] += v;
            sum_sq[s] += v * v;
        }
    }
    const double n = static_cast<double>(cfg.repeats);
    for (double s : b.seconds) b.mean_seconds += s / n;
    for (double s : b.seconds) b.sd_seconds += (s - b.mean_seconds) * (s - b.mean_seconds);
    b.sd_seconds = n > 1 ? std::sqrt(b.sd_seconds / (n - 1)) : 0.0;
    b.mean_jumps = jumps / n;
    for (std::size_t s = 0; s < n_sp; ++s) {
        const double m = sum[s] / n;
        b.endpoint_mean.push_back(m);
        b.endpoint_var.push_back(n > 1 ? std::max(0.0, (sum_sq[s] - n * m * m) / (n - 1)) : 0.0);
    }
    return b;
}

} // namespace commands_detail

/// Times `baseline` and `candidate` on the same model: one warm-up, then `repeats` timed runs
/// each, repeat i using the same derived seed on both engines. Only the simulation is timed.
inline BenchReport run_bench(const ModelDocument& doc, const RunConfig& cfg) {
    BenchReport r;
    r.t_max = cfg.t_max;
    r.repeats = cfg.repeats;
    r.baseline = commands_detail::time_engine(doc, cfg.baseline, cfg);
    r.candidate = commands_detail::time_engine(doc, cfg.engine, cfg);
    return r;
}

inline void write_bench_table(std::ostream& os, const BenchReport& r) {
    auto line = [&](const EngineBench& b) {
        os << std::left << std::setw(6) << to_string(b.engine) << std::right << std::fixed << std::setprecision(6)
           << std::setw(12) << b.mean_seconds << " +- " << std::setw(10) << b.sd_seconds << std::setprecision(1)
           << std::setw(14) << b.mean_jumps;
        for (std::size_t s = 0; s < b.species.size(); ++s)
            os << "  " << b.species[s] << "=" << format_sig9(b.endpoint_mean[s]) << " (var "
               << format_sig9(b.endpoint_var[s]) << ")";
        os << '\n';
    };
    os << "t_max=" << format_sig9(r.t_max) << " repeats=" << r.repeats << '\n';
    os << "engine   wall_s mean +- sd        jumps  endpoint mean (var)\n";
    line(r.baseline);
    line(r.candidate);
    os << "speedup " << to_string(r.baseline.engine) << "/" << to_string(r.candidate.engine) << " = "
       << format_sig9(r.speedup()) << ", jump ratio = " << format_sig9(r.jump_ratio()) << '\n';
    os.unsetf(std::ios::floatfield);
}

/// `engine,wall_mean_s,wall_sd_s,jumps_mean,<species>_mean,<species>_var,...`
inline void write_bench_csv(std::ostream& os, const BenchReport& r) {
    os << "engine,wall_mean_s,wall_sd_s,jumps_mean";
    for (const auto& s : r.baseline.species) os << ',' << s << "_mean," << s << "_var";
    os << '\n';
    for (const auto* b : {&r.baseline, &r.candidate}) {
        os << to_string(b->engine) << ',' << format_sig9(b->mean_seconds) << ',' << format_sig9(b->sd_seconds) << ','
           << format_sig9(b->mean_jumps);
        for (std::size_t s = 0; s < b->species.size(); ++s)
            os << ',' << format_sig9(b->endpoint_mean[s]) << ',' << format_sig9(b->endpoint_var[s]);
        os << '\n';
    }
}

inline int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return commands_detail::guarded(err, [&] {
        cfg.validate();
        const bool hybrid = cfg.engine == Engine::pdmp || cfg.baseline == Engine::pdmp;
        auto doc = commands_detail::prepare(cfg, err, hybrid);
        if (!doc) return kExitDiagnostics;
        const auto report = run_bench(*doc, cfg);
        write_bench_table(out, report);
        if (!cfg.out.empty()) commands_detail::emit(cfg.out, out, [&](std::ostream& os) { write_bench_csv(os, report); });
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------------------------
// Validation

inline std::string class_counts(const std::vector<ReactionClass>& classes) {
    std::size_t rc = 0, rd = 0, rdc = 0;
    for (auto c : classes) (c == ReactionClass::RC ? rc : c == ReactionClass::RD ? rd : rdc)++;
    return "{RC: " + std::to_string(rc) + ", RD: " + std::to_string(rd) + ", RDC: " + std::to_string(rdc) + "}";
}

/// Parsed summary, classification under the declared partition and a conservation-law basis.
inline void describe_model(std::ostream& os, const ModelDocument& doc) {
    const auto& net = doc.network;
    os << "model " << doc.name << ": " << net.species_count() << " species, " << net.reaction_count()
       << " reactions\n";
    const Partition p = doc.partition.value_or(Partition::all_discrete(net.species_count()));
    if (doc.partition) {
        os << "partition: continuous {";
        for (std::size_t j = 0; j < p.continuous_species().size(); ++j)
            os << (j ? ", " : "") << net.species()[p.continuous_species()[j]].name;
        os << "} discrete {";
        for (std::size_t j = 0; j < p.discrete_species().size(); ++j)
            os << (j ? ", " : "") << net.species()[p.discrete_species()[j]].name;
        os << "} scale " << format_sig9(p.scale()) << '\n';
    } else {
        os << "partition: none (all species discrete)\n";
    }
    const auto classes = classify_reactions(net, p);
    os << "reactions:\n";
    for (std::size_t r = 0; r < net.reaction_count(); ++r) {
        const auto& rx = net.reactions()[r];
        const auto lhs = dsl_detail::format_side(net, rx.reactants);
        const auto rhs = dsl_detail::format_side(net, rx.products);
        os << "  " << rx.name << ": " << (lhs.empty() ? "0" : lhs) << " -> " << (rhs.empty() ? "0" : rhs) << "  ["
           << to_string(classes[r]) << "]\n";
    }
    os << "classes: " << class_counts(classes) << '\n';
    const auto laws = detect_conservation_laws(net);
    os << "conservation laws:" << (laws.empty() ? " none" : "") << '\n';
    for (const auto& v : laws) os << "  " << format_conservation_law(v, net, dot(v, doc.initial.counts)) << '\n';
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return commands_detail::guarded(err, [&] {
        if (cfg.model_path.empty() == cfg.builtin.empty())
            throw ConfigurationError("give exactly one of --model or --builtin");
        auto loaded = load_model(cfg);
        bool failed = commands_detail::report(loaded.diagnostics, err);
        if (!loaded.document) return kExitDiagnostics;
        failed |= commands_detail::report(validate_model(*loaded.document), err);
        describe_model(out, *loaded.document);
        return failed ? kExitDiagnostics : kExitOk;
    });
}

} // namespace hybridkinetics
