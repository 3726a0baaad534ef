#include "qjump/record.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "qjump/errors.hpp"

namespace qjump::record {

namespace {

double spacing(std::span<const double> times) {
    if (times.size() < 2) throw RecordRangeError("record needs at least two samples");
    const double dt = times[1] - times[0];
    if (!(dt > 0)) throw RecordRangeError("record times must increase");
    return dt;
}

void require_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatch("times and values differ in length");
}

// log P(x|n)
double log_likelihood(double x, int n, double chi, double kappa, double width) {
    const double var = kappa * width;
    const double r = x + 2.0 * chi * n * width;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - r * r / (2.0 * var);
}

std::vector<JumpEvent> hysteresis_levels(std::span<const double> times,
                                         std::span<const double> level, std::size_t start,
                                         double hysteresis, double delay) {
    std::vector<JumpEvent> events;
    if (start >= level.size()) return events;
    int current = int(std::lround(level[start]));
    double up_cross = times[start], down_cross = times[start];
    double last_t = times.front();
    for (std::size_t k = start + 1; k < level.size(); ++k) {
        const double hi = current + 0.5, lo = current - 0.5;
        if (level[k - 1] <= hi && level[k] > hi) up_cross = times[k];
        if (level[k - 1] >= lo && level[k] < lo) down_cross = times[k];

        int next = current;
        double cross = 0;
        if (level[k] > hi + hysteresis) {
            next = std::max(current + 1, int(std::lround(level[k])));
            cross = up_cross;
        } else if (level[k] < lo - hysteresis) {
            next = std::min(current - 1, int(std::lround(level[k])));
            cross = down_cross;
        }
        if (next == current) continue;

        const double t = std::max({cross - delay, times.front(), last_t});
        events.push_back({t, current, next, std::abs(next - current) > 1});
        last_t = t;
        current = next;
        up_cross = down_cross = times[k];
    }
    return events;
}

}  // namespace

FilteredSeries sliding_average(std::span<const double> times, std::span<const double> raw,
                               double window) {
    require_same_length(times, raw);
    const double dt = spacing(times);
    const auto w = static_cast<std::size_t>(std::llround(window / dt));
    if (!(window > 0) || w < 2) {
        throw InvalidArgument("sliding_average: window must span at least two samples");
    }

    FilteredSeries out;
    out.times.assign(times.begin(), times.end());
    out.values.resize(raw.size());
    out.window = window;
    out.warmup = std::min(w, raw.size());

    long double sum = 0;
    for (std::size_t k = 0; k < raw.size(); ++k) {
        sum += raw[k];
        if (k >= w) sum -= raw[k - w];
        const std::size_t n = std::min(k + 1, w);
        out.values[k] = double(sum / n);
    }
    return out;
}

double integrate_window(std::span<const double> times, std::span<const double> raw, double t0,
                        double width) {
    require_same_length(times, raw);
    const double dt = spacing(times);
    if (!(width > 0)) throw InvalidArgument("integrate_window: width must be positive");
    const double eps = 1e-9 * dt;
    const double end = times.back() + dt;
    if (t0 < times.front() - eps || t0 + width > end + eps) {
        throw RecordRangeError("integrate_window: [" + std::to_string(t0) + ", " +
                               std::to_string(t0 + width) + ") outside the record");
    }
    const auto first = static_cast<std::size_t>(std::llround((t0 - times.front()) / dt));
    const auto count = static_cast<std::size_t>(std::llround(width / dt));
    if (count == 0) throw InvalidArgument("integrate_window: width shorter than one sample");
    double x = 0;
    for (std::size_t k = first; k < first + count && k < raw.size(); ++k) x += raw[k] * dt;
    return x;
}

double likelihood(double x, int n, double chi, double kappa, double width) {
    if (!(width > 0)) throw InvalidArgument("likelihood: width must be positive");
    if (!(kappa > 0)) throw InvalidRate("likelihood: kappa must be positive");
    return std::exp(log_likelihood(x, n, chi, kappa, width));
}

double estimate_number(double x, double chi, double width) {
    if (chi == 0 || !(width > 0)) throw InvalidArgument("estimate_number: need chi != 0, width > 0");
    return -x / (2.0 * chi * width);
}

double number_resolution(double chi, double kappa, double width) {
    if (chi == 0 || !(width > 0)) throw InvalidArgument("number_resolution: need chi != 0, width > 0");
    return kappa / (8.0 * chi * chi * width);
}

double sharpness(double meas_rate, double width) { return 8.0 * meas_rate * width; }

sme::PhononDistribution bayes_update(const sme::PhononDistribution& prior, double x, double chi,
                                     double kappa, double width) {
    if (!(width > 0)) throw InvalidArgument("bayes_update: width must be positive");
    if (!(kappa > 0)) throw InvalidRate("bayes_update: kappa must be positive");
    const auto& p = prior.p();
    std::vector<double> logw(p.size(), -std::numeric_limits<double>::infinity());
    double best = -std::numeric_limits<double>::infinity();
    double best_lik = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (p[n] <= 0) continue;
        const double ll = log_likelihood(x, int(n), chi, kappa, width);
        logw[n] = std::log(p[n]) + ll;
        best = std::max(best, logw[n]);
        best_lik = std::max(best_lik, ll);
    }
    // exp(-700) is the edge of double range
    if (best_lik < -700.0) {
        throw DegenerateEvidence("bayes_update: x = " + std::to_string(x) +
                                 " is inconsistent with every supported level");
    }
    std::vector<double> post(p.size(), 0.0);
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (std::isfinite(logw[n])) post[n] = std::exp(logw[n] - best);
    }
    return sme::PhononDistribution(std::move(post));
}

std::vector<JumpEvent> detect_jumps(const FilteredSeries& filtered, double gain, double hysteresis) {
    if (gain == 0) throw InvalidArgument("detect_jumps: gain must be nonzero");
    if (!(hysteresis > 0 && hysteresis < 0.5)) {
        throw InvalidArgument("detect_jumps: hysteresis must lie in (0, 0.5)");
    }
    require_same_length(filtered.times, filtered.values);
    std::vector<double> level(filtered.values.size());
    for (std::size_t k = 0; k < level.size(); ++k) level[k] = -filtered.values[k] / gain;
    return hysteresis_levels(filtered.times, level, filtered.warmup, hysteresis,
                             0.5 * filtered.window);
}

std::vector<JumpEvent> level_changes(std::span<const double> times, std::span<const double> mean_n,
                                     double hysteresis) {
    require_same_length(times, mean_n);
    if (!(hysteresis > 0 && hysteresis < 0.5)) {
        throw InvalidArgument("level_changes: hysteresis must lie in (0, 0.5)");
    }
    return hysteresis_levels(times, mean_n, 0, hysteresis, 0.0);
}

JumpMatch match_jumps(const std::vector<JumpEvent>& truth, const std::vector<JumpEvent>& detected,
                      double tolerance) {
    JumpMatch m;
    m.truth = truth.size();
    m.detected = detected.size();
    std::vector<bool> used(detected.size(), false);
    for (const auto& e : truth) {
        const int dir = e.to_n > e.from_n ? 1 : -1;
        std::size_t best = detected.size();
        double best_dt = tolerance;
        for (std::size_t j = 0; j < detected.size(); ++j) {
            if (used[j]) continue;
            const int ddir = detected[j].to_n > detected[j].from_n ? 1 : -1;
            const double gap = std::abs(detected[j].t - e.t);
            if (ddir == dir && gap <= best_dt) {
                best = j;
                best_dt = gap;
            }
        }
        if (best < detected.size()) {
            used[best] = true;
            ++m.matched;
        }
    }
    return m;
}

}  // namespace qjump::record
