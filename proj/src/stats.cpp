#include "qjump/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "qjump/errors.hpp"

namespace qjump::stats {

std::vector<sme::TrajectoryRecord> run_trajectories(const EnsembleSpec& what, std::size_t M,
                                                    std::uint64_t base_seed, unsigned threads) {
    if (M < 1) throw InvalidArgument("run_trajectories: M must be >= 1");
    if (what.mode == sme::Mode::full && !what.spec) {
        throw InvalidArgument("run_trajectories: full mode needs a HilbertSpec");
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = unsigned(std::min<std::size_t>(threads, M));

    std::vector<sme::TrajectoryRecord> out(M);
    std::vector<std::size_t> failed;
    std::string first_error;
    std::mutex failed_mutex;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t k = next++; k < M; k = next++) {
            try {
                SimParams p = what.params;
                p.seed = base_seed;
                sme::SimulateOptions opts = what.options;
                opts.stream = k;
                switch (what.mode) {
                    case sme::Mode::full:
                        out[k] = sme::simulate_full(p, *what.spec, what.rho0, opts);
                        break;
                    case sme::Mode::pointer:
                        out[k] = sme::simulate_pointer(p, what.p0, opts);
                        break;
                    case sme::Mode::adiabatic:
                        out[k] = sme::simulate_adiabatic(p, what.p0, opts);
                        break;
                }
            } catch (const std::exception& e) {
                std::lock_guard lock(failed_mutex);
                failed.push_back(k);
                if (first_error.empty()) first_error = e.what();
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }

    if (!failed.empty()) {
        std::sort(failed.begin(), failed.end());
        throw PartialFailure(std::to_string(failed.size()) + " of " + std::to_string(M) +
                                 " trajectories failed; first error: " + first_error,
                             std::move(failed));
    }
    return out;
}

EnsembleSummary summarize(const std::vector<sme::TrajectoryRecord>& trajectories) {
    if (trajectories.empty()) throw InvalidArgument("summarize: no trajectories");
    const std::size_t rows = trajectories.front().size();
    for (const auto& t : trajectories) {
        if (t.size() != rows) throw DimensionMismatch("summarize: trajectories differ in length");
    }
    EnsembleSummary s;
    s.M = trajectories.size();
    s.times = trajectories.front().times;
    s.mean_of_mean_n.assign(rows, 0.0);
    s.stderr_mean_n.assign(rows, 0.0);
    const double M = double(s.M);
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0;
        for (const auto& t : trajectories) sum += t.mean_n[r];
        const double mean = sum / M;
        double ss = 0;
        for (const auto& t : trajectories) ss += (t.mean_n[r] - mean) * (t.mean_n[r] - mean);
        s.mean_of_mean_n[r] = mean;
        s.stderr_mean_n[r] = s.M > 1 ? std::sqrt(ss / (M - 1.0) / M) : 0.0;
    }
    return s;
}

EnsembleSummary run_ensemble(const EnsembleSpec& what, std::size_t M, std::uint64_t base_seed,
                             unsigned threads) {
    if (M < 2) throw InvalidArgument("run_ensemble: M must be >= 2");
    return summarize(run_trajectories(what, M, base_seed, threads));
}

FockHistogram fock_histogram(const sme::TrajectoryRecord& traj, double discard, int n_max) {
    std::vector<int> levels;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] >= discard) levels.push_back(std::max(0, int(std::lround(traj.mean_n[k]))));
    }
    if (levels.empty()) throw InvalidArgument("fock_histogram: no samples after the warm-up");
    const int top = n_max >= 0 ? n_max : *std::max_element(levels.begin(), levels.end());
    FockHistogram h;
    h.weights.assign(std::size_t(top) + 1, 0.0);
    h.total_samples = levels.size();
    std::vector<std::size_t> counts(h.weights.size(), 0);
    for (int l : levels) ++counts[std::size_t(std::min(l, top))];
    for (std::size_t n = 0; n < counts.size(); ++n) {
        h.weights[n] = double(counts[n]) / double(levels.size());
    }
    return h;
}

FockHistogram population_histogram(const sme::TrajectoryRecord& traj, double discard) {
    if (traj.populations.size() != traj.size()) {
        throw InvalidArgument("population_histogram: trajectory has no recorded populations");
    }
    FockHistogram h;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < discard) continue;
        const auto& p = traj.populations[k];
        if (h.weights.size() < p.size()) h.weights.resize(p.size(), 0.0);
        for (std::size_t n = 0; n < p.size(); ++n) h.weights[n] += p[n];
        ++h.total_samples;
    }
    if (h.total_samples == 0) throw InvalidArgument("population_histogram: no samples after the warm-up");
    double total = 0;
    for (double w : h.weights) total += w;
    for (double& w : h.weights) w /= total;
    return h;
}

sme::PhononDistribution thermal_distribution(double nbar, int n_max) {
    return sme::PhononDistribution::thermal(nbar, n_max);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionMismatch("total_variation: supports differ in length");
    double s = 0;
    for (std::size_t n = 0; n < p.size(); ++n) s += std::abs(p[n] - q[n]);
    return 0.5 * s;
}

double jump_resolution_score(const sme::TrajectoryRecord& traj, double warmup, double band) {
    std::size_t kept = 0, resolved = 0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < warmup) continue;
        ++kept;
        const double m = traj.mean_n[k];
        if (std::abs(m - std::round(m)) < band) ++resolved;
    }
    if (kept == 0) throw InvalidArgument("jump_resolution_score: no samples after the warm-up");
    return double(resolved) / double(kept);
}

double time_average_mean_n(const sme::TrajectoryRecord& traj, double warmup) {
    double sum = 0;
    std::size_t kept = 0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        if (traj.times[k] < warmup) continue;
        sum += traj.mean_n[k];
        ++kept;
    }
    if (kept == 0) throw InvalidArgument("time_average_mean_n: no samples after the warm-up");
    return sum / double(kept);
}

}  // namespace qjump::stats
