#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hybridkinetics/rng.hpp"
#include "hybridkinetics/trajectory.hpp"

namespace hybridkinetics {

/// Worker count: hardware concurrency, capped by HYBRIDKINETICS_THREADS when set.
inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("HYBRIDKINETICS_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

/// Calls job(i, seed_i) for i in [0, runs) on a worker pool, with seed_i derived from the
/// master seed and the index only. Results come back in index order, so the output does not
/// depend on scheduling. The first exception (lowest index) is rethrown after all workers stop.
template <class Job>
auto run_ensemble(std::size_t runs, std::uint64_t master_seed, Job&& job, unsigned workers = 0)
    -> std::vector<decltype(job(std::size_t{}, std::uint64_t{}))> {
    using Result = decltype(job(std::size_t{}, std::uint64_t{}));
    std::vector<Result> out(runs);
    std::vector<std::exception_ptr> errors(runs);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto worker = [&] {
        for (std::size_t i; !failed.load(std::memory_order_relaxed) && (i = next.fetch_add(1)) < runs;) {
            try {
                out[i] = job(i, derive_stream_seed(master_seed, i));
            } catch (...) {
                errors[i] = std::current_exception();
                failed = true;
            }
        }
    };

    if (workers == 0) workers = worker_count();
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(runs, 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Per grid point and column: mean, sample variance, min and max over runs.
struct EnsembleSummary {
    std::vector<std::string> columns;
    std::vector<double> sample_times;
    std::size_t runs = 0;
    // row-major [sample][column]
    std::vector<double> mean, variance, min, max;

    std::size_t width() const noexcept { return columns.size(); }

    double mean_at(std::size_t sample, std::string_view col) const { return mean[sample * width() + index(col)]; }
    double variance_at(std::size_t sample, std::string_view col) const {
        return variance[sample * width() + index(col)];
    }

    std::size_t index(std::string_view col) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == col) return j;
        throw PreconditionError("summary has no column '" + std::string(col) + "'");
    }
};

/// Welford accumulation in trajectory-index order. Trajectories must share grid and columns.
inline EnsembleSummary summarize(const std::vector<Trajectory>& runs) {
    if (runs.empty()) throw PreconditionError("cannot summarize an empty ensemble");
    EnsembleSummary s;
    s.columns = runs.front().columns;
    s.sample_times = runs.front().sample_times;
    s.runs = runs.size();
    const std::size_t cells = s.sample_times.size() * s.width();
    s.mean.assign(cells, 0.0);
    s.variance.assign(cells, 0.0);
    s.min.assign(cells, std::numeric_limits<double>::infinity());
    s.max.assign(cells, -std::numeric_limits<double>::infinity());
    double k = 0.0;
    for (const auto& tr : runs) {
        if (tr.columns != s.columns || tr.sample_times != s.sample_times)
            throw PreconditionError("ensemble members disagree on grid or columns");
        k += 1.0;
        for (std::size_t c = 0; c < cells; ++c) {
            const double v = tr.values[c];
            const double d = v - s.mean[c];
            s.mean[c] += d / k;
            s.variance[c] += d * (v - s.mean[c]);
            s.min[c] = std::min(s.min[c], v);
            s.max[c] = std::max(s.max[c], v);
        }
    }
    for (auto& v : s.variance) v = k > 1.0 ? v / (k - 1.0) : 0.0;
    return s;
}

/// `t,<col>_mean,<col>_var,<col>_min,<col>_max,...`
inline void write_summary_csv(std::ostream& os, const EnsembleSummary& s) {
    os << "t";
    for (const auto& c : s.columns) os << ',' << c << "_mean," << c << "_var," << c << "_min," << c << "_max";
    os << '\n';
    for (std::size_t i = 0; i < s.sample_times.size(); ++i) {
        os << format_sig9(s.sample_times[i]);
        for (std::size_t j = 0; j < s.width(); ++j) {
            const std::size_t c = i * s.width() + j;
            os << ',' << format_sig9(s.mean[c]) << ',' << format_sig9(s.variance[c]) << ','
               << format_sig9(s.min[c]) << ',' << format_sig9(s.max[c]);
        }
        os << '\n';
    }
}

} // namespace hybridkinetics
