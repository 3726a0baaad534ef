#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qjump/sme.hpp"

namespace qjump::stats {

/// What each trajectory of an ensemble integrates.
struct EnsembleSpec {
    sme::Mode mode = sme::Mode::adiabatic;
    SimParams params;
    sme::SimulateOptions options;
    std::optional<HilbertSpec> spec;  // full mode
    DensityMatrix rho0;               // full mode
    sme::PhononDistribution p0;       // pointer and adiabatic modes
};

struct EnsembleSummary {
    std::vector<double> times;
    std::vector<double> mean_of_mean_n;
    std::vector<double> stderr_mean_n;
    std::size_t M = 0;
};

/// Runs trajectories 0..M-1 with seed base_seed and stream k. The output is
/// ordered by k and does not depend on the thread count. threads = 0 uses
/// the hardware concurrency. Failures are collected and reported together
/// in a PartialFailure.
std::vector<sme::TrajectoryRecord> run_trajectories(const EnsembleSpec& what, std::size_t M,
                                                    std::uint64_t base_seed, unsigned threads = 0);

/// Per-time mean and standard error of mean_n.
EnsembleSummary summarize(const std::vector<sme::TrajectoryRecord>& trajectories);

EnsembleSummary run_ensemble(const EnsembleSpec& what, std::size_t M, std::uint64_t base_seed,
                             unsigned threads = 0);

struct FockHistogram {
    std::vector<double> weights;
    std::size_t total_samples = 0;
};

/// Histogram of round(mean_n) over samples with t >= discard. `n_max`
/// below zero sizes the support to the largest level seen.
FockHistogram fock_histogram(const sme::TrajectoryRecord& traj, double discard, int n_max = -1);

/// Time average of the recorded populations over t >= discard.
FockHistogram population_histogram(const sme::TrajectoryRecord& traj, double discard);

sme::PhononDistribution thermal_distribution(double nbar, int n_max);

double total_variation(std::span<const double> p, std::span<const double> q);

/// Fraction of samples with t >= warmup whose mean_n lies within `band`
/// of an integer.
double jump_resolution_score(const sme::TrajectoryRecord& traj, double warmup, double band = 0.2);

/// Mean of mean_n over samples with t >= warmup.
double time_average_mean_n(const sme::TrajectoryRecord& traj, double warmup);

}  // namespace qjump::stats
