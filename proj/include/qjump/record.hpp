#pragma once

// Processing of the homodyne record: boxcar filtering, window integration,
// Gaussian likelihood with Bayes update, and level-change detection.

#include <span>
#include <vector>

#include "qjump/sme.hpp"

namespace qjump::record {

struct FilteredSeries {
    std::vector<double> times;
    std::vector<double> values;
    double window = 0.0;
    /// Leading samples whose average covers less than a full window.
    std::size_t warmup = 0;
};

struct JumpEvent {
    double t = 0.0;
    int from_n = 0;
    int to_n = 0;
    /// Set when one commit spans more than one level.
    bool multi_level = false;
};

/// Causal boxcar mean over the trailing `window`. Samples are assumed
/// uniformly spaced; the window must span at least two samples.
FilteredSeries sliding_average(std::span<const double> times, std::span<const double> raw,
                               double window);

/// Riemann sum of i_h dt over [t0, t0 + width). Sample k covers
/// [t_k, t_k + dt).
double integrate_window(std::span<const double> times, std::span<const double> raw, double t0,
                        double width);

/// P(x|n) = (2 pi kappa dt)^{-1/2} exp[-(x + 2 chi n dt)^2 / (2 kappa dt)]
double likelihood(double x, int n, double chi, double kappa, double width);

/// nbar = -x / (2 chi dt)
double estimate_number(double x, double chi, double width);

/// Delta = kappa / (8 chi^2 dt), the stated resolution of a window.
double number_resolution(double chi, double kappa, double width);

/// 8 Gamma dt; a window resolves single phonons when this is >> 1.
double sharpness(double meas_rate, double width);

/// Posterior p_n P(x|n) / P(x) on the prior's support.
sme::PhononDistribution bayes_update(const sme::PhononDistribution& prior, double x, double chi,
                                     double kappa, double width);

/// Maps the series to integer levels n = -value/gain and commits a change
/// only when the level signal passes the midpoint by more than `hysteresis`.
/// The event time is the last midpoint crossing before the commit, moved
/// back by half a window to undo the boxcar delay.
std::vector<JumpEvent> detect_jumps(const FilteredSeries& filtered, double gain,
                                    double hysteresis = 0.3);

/// Level changes of an already noise-free series such as the conditional
/// <n>(t); same hysteresis rule, no delay correction.
std::vector<JumpEvent> level_changes(std::span<const double> times,
                                     std::span<const double> mean_n, double hysteresis = 0.3);

struct JumpMatch {
    std::size_t truth = 0;
    std::size_t detected = 0;
    std::size_t matched = 0;
    double recall() const { return truth == 0 ? 1.0 : double(matched) / double(truth); }
};

/// Greedy one-to-one matching of events with the same direction whose
/// times differ by at most `tolerance`.
JumpMatch match_jumps(const std::vector<JumpEvent>& truth, const std::vector<JumpEvent>& detected,
                      double tolerance);

}  // namespace qjump::record
