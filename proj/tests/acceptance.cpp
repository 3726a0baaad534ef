// Acceptance suite: one PASS/FAIL line per criterion. With no arguments all
// ten criteria run; otherwise only the listed ones. Exit 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qjump/analytic.hpp"
#include "qjump/experiments.hpp"
#include "qjump/record.hpp"
#include "qjump/regimes.hpp"
#include "qjump/sme.hpp"
#include "qjump/stats.hpp"

using namespace qjump;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double thermal_window(const SimParams& p) { return regimes::level_lifetime(1, p.nbar, p.gamma) / 10.0; }

double warmup(const SimParams& p) { return 5.0 / p.kappa + thermal_window(p); }

std::vector<sme::TrajectoryRecord> panel_ensemble(const experiments::Panel& panel, std::size_t M,
                                                  int sample_every = 1) {
    stats::EnsembleSpec what;
    what.mode = panel.mode;
    what.params = panel.params;
    what.options.sample_every = sample_every;
    const int top = panel.mode == sme::Mode::pointer ? experiments::panel_space(panel).mech_dim() - 1
                                                      : panel.n_support;
    what.p0 = sme::PhononDistribution::fock(0, top);
    return stats::run_trajectories(what, M, panel.params.seed);
}

experiments::Panel panel_of(int figure, std::size_t index) { return experiments::figure_panels(figure).at(index); }

// Fraction of samples in [t0, t1) whose mean_n lies within 0.2 of an integer.
double score_between(const sme::TrajectoryRecord& rec, double t0, double t1) {
    std::size_t kept = 0, resolved = 0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
        if (rec.times[k] < t0 || rec.times[k] >= t1) continue;
        ++kept;
        if (std::abs(rec.mean_n[k] - std::round(rec.mean_n[k])) < 0.2) ++resolved;
    }
    return double(resolved) / double(kept);
}

Outcome criterion1() {
    Stopwatch clock;
    bool ok = true;
    std::string worst;
    for (double kt : {0.5, 2.0, 5.0}) {
        const auto r = experiments::check_walls_oracle(kt);
        ok = ok && r.passed;
        worst += fmt(" kt=%g:%.2e", kt, r.measured);
    }
    const double s = clock.seconds();
    return {ok && s < 60, "max-abs" + worst + fmt(" (tol 1e-6), %.1f s", s)};
}

Outcome criterion2() {
    Stopwatch clock;
    const auto r = experiments::check_moment_oracle();
    const double s = clock.seconds();
    return {r.passed && s < 60, fmt("max relative error %.2e (tol 1e-4), %.1f s", r.measured, s)};
}

Outcome criterion3() {
    Stopwatch clock;
    constexpr std::size_t kTrajectories = 500;
    constexpr int kTimes = 20;
    const double horizon = 2.0;
    const int support = experiments::sre_support(0.5);

    stats::EnsembleSpec what;
    what.mode = sme::Mode::adiabatic;
    what.params = SimParams::from_reduced_units(0.5, 100, 225, horizon);
    const double spacing = horizon / kTimes;
    const double dt_max = experiments::sre_step(what.params, support);
    what.options.sample_every = int(std::ceil(spacing / dt_max));
    what.params.dt = spacing / what.options.sample_every;
    what.params.t_final = horizon + spacing;
    what.params.seed = 3003;
    what.p0 = sme::PhononDistribution::fock(0, support);

    const auto sum = stats::run_ensemble(what, kTrajectories, what.params.seed);
    double worst = 0;
    bool ok = true;
    for (int k = 1; k <= kTimes; ++k) {
        const double t = sum.times.at(std::size_t(k));
        const double exact = analytic::mean_phonon_unconditional(0.0, what.params.nbar, what.params.gamma, t);
        const double z = std::abs(sum.mean_of_mean_n[std::size_t(k)] - exact) / sum.stderr_mean_n[std::size_t(k)];
        worst = std::max(worst, z);
        ok = ok && z <= 3.0;
    }
    const double s = clock.seconds();
    return {ok && s < 600, fmt("%zu SRE trajectories, max |mean - exact|/SE = %.2f over %d times, %.1f s",
                               kTrajectories, worst, kTimes, s)};
}

Outcome criterion4() {
    constexpr std::size_t kTrajectories = 200;
    constexpr std::size_t kSteps = 100000;
    constexpr std::size_t kCheckpoints = 10;
    const std::vector<double> initial = {0.5, 0.3, 0.2};

    stats::EnsembleSpec what;
    what.mode = sme::Mode::adiabatic;
    what.params.kappa = 100;
    what.params.chi = 150;
    what.params.gamma = 0;
    what.params.nbar = 0;
    what.params.seed = 4004;
    const int top = int(initial.size()) - 1;
    what.params.dt = experiments::sre_step(what.params, top);
    what.params.t_final = double(kSteps) * what.params.dt;
    what.options.sample_every = int(kSteps / kCheckpoints);
    what.options.record_populations = true;
    what.p0 = sme::PhononDistribution(initial);

    const auto runs = stats::run_trajectories(what, kTrajectories, what.params.seed);
    const double M = double(kTrajectories);
    double worst = 0;
    bool ok = true;
    for (std::size_t row = 1; row < runs.front().size(); ++row) {
        for (std::size_t n = 0; n < initial.size(); ++n) {
            double sum = 0, sq = 0;
            for (const auto& r : runs) sum += r.populations[row][n];
            const double mean = sum / M;
            for (const auto& r : runs) sq += (r.populations[row][n] - mean) * (r.populations[row][n] - mean);
            const double se = std::sqrt(sq / (M - 1) / M);
            const double z = se > 0 ? std::abs(mean - initial[n]) / se : 0.0;
            worst = std::max(worst, z);
            ok = ok && z <= 3.0;
        }
    }
    std::vector<double> freq(initial.size(), 0.0);
    std::size_t undecided = 0;
    for (const auto& r : runs) {
        const auto& last = r.populations.back();
        const auto it = std::max_element(last.begin(), last.end());
        if (*it < 0.99) ++undecided;
        freq[std::size_t(it - last.begin())] += 1.0 / M;
    }
    double worst_born = 0;
    for (std::size_t n = 0; n < initial.size(); ++n) {
        const double sigma = std::sqrt(initial[n] * (1 - initial[n]) / M);
        worst_born = std::max(worst_born, std::abs(freq[n] - initial[n]) / sigma);
    }
    ok = ok && worst_born <= 3.0 && undecided == 0;
    return {ok, fmt("martingale max z = %.2f over %zu checkpoints; collapse frequencies %.3f/%.3f/%.3f, "
                    "max z = %.2f, undecided %zu",
                    worst, kCheckpoints, freq[0], freq[1], freq[2], worst_born, undecided)};
}

Outcome criterion5() {
    constexpr std::size_t kSeeds = 5;
    const auto panel = panel_of(1, 0);
    const auto& p = panel.params;
    const double gain = p.chi / p.kappa;
    const double limit = 0.1 * 2 * gain;
    const auto runs = panel_ensemble(panel, kSeeds);
    std::size_t kept = 0, sharp = 0;
    double lowest = 1, worst_rms = 0;
    for (const auto& r : runs) {
        std::size_t seed_kept = 0, seed_sharp = 0;
        double ss = 0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (r.times[k] < warmup(p)) continue;
            ++seed_kept;
            if (r.var_n[k] < 0.1) ++seed_sharp;
            const double d = r.quad_phase[k] + 2 * gain * r.mean_n[k];
            ss += d * d;
        }
        kept += seed_kept;
        sharp += seed_sharp;
        lowest = std::min(lowest, double(seed_sharp) / double(seed_kept));
        worst_rms = std::max(worst_rms, std::sqrt(ss / double(seed_kept)));
    }
    const double fraction = double(sharp) / double(kept);
    return {fraction >= 0.7 && worst_rms <= limit,
            fmt("%zu seeds: var_n < 0.1 in %.3f of samples (>= 0.7; lowest seed %.3f), max quadrature RMS = %.3f "
                "(<= %.2f)",
                kSeeds, fraction, lowest, worst_rms, limit)};
}

// Ensemble-mean scores of a figure: per panel over the whole post-warm-up
// record and over its two halves.
struct PanelScores {
    std::vector<double> whole, first, second;
};

PanelScores figure_scores(int figure, std::size_t streams, std::vector<std::vector<sme::TrajectoryRecord>>* keep) {
    PanelScores out;
    for (const auto& panel : experiments::figure_panels(figure)) {
        const auto runs = panel_ensemble(panel, streams);
        const double t0 = warmup(panel.params), t1 = panel.params.t_final;
        const double mid = 0.5 * (t0 + t1);
        double w = 0, a = 0, b = 0;
        for (const auto& r : runs) {
            w += score_between(r, t0, t1) / double(streams);
            a += score_between(r, t0, mid) / double(streams);
            b += score_between(r, mid, t1) / double(streams);
        }
        out.whole.push_back(w);
        out.first.push_back(a);
        out.second.push_back(b);
        if (keep) keep->push_back(runs);
    }
    return out;
}

Outcome criterion6() {
    constexpr std::size_t kStreams = 8;
    constexpr std::size_t kThermalStreams = 32;
    constexpr double kThermalHorizon = 30.0;
    bool ok = true;
    std::string text;
    for (int figure : {2, 3}) {
        const auto s = figure_scores(figure, kStreams, nullptr);
        const bool mono = s.whole[0] < s.whole[1] && s.whole[1] < s.whole[2];
        const bool none = s.first[0] < 0.5 && s.second[0] < 0.5;
        ok = ok && mono && none;
        text += fmt("fig%d scores %.3f < %.3f < %.3f %s, (a) halves %.3f/%.3f; ", figure, s.whole[0], s.whole[1],
                    s.whole[2], mono ? "yes" : "no", s.first[0], s.second[0]);
    }
    auto panel = panel_of(2, 0);
    panel.params.t_final = kThermalHorizon;
    const auto runs = panel_ensemble(panel, kThermalStreams);
    double mean = 0;
    for (const auto& r : runs) mean += stats::time_average_mean_n(r, warmup(panel.params)) / double(kThermalStreams);
    const double nbar = panel.params.nbar;
    const bool thermal = std::abs(mean - nbar) <= 0.1 * nbar;
    ok = ok && thermal;
    text += fmt("fig2a <n> = %.3f (Nbar %.2f +- 10%%, %zu x T=%g)", mean, nbar, kThermalStreams, kThermalHorizon);
    return {ok, text};
}

Outcome criterion7() {
    constexpr std::size_t kWindows = 10000;
    constexpr int kSamples = 1000;
    SimParams p;
    p.kappa = 1.0;
    p.chi = 1.0;
    p.eta = 1.0;
    const double width = 10.0;  // Gamma * width = 10
    const double dt = width / kSamples;
    const double nbar = 0.5;
    const int top = experiments::sre_support(nbar);
    const auto law = sme::PhononDistribution::thermal(nbar, top);
    const auto prior = sme::PhononDistribution(std::vector<double>(std::size_t(top) + 1, 1.0 / (top + 1)));

    std::mt19937_64 pick(7007);
    std::discrete_distribution<int> level(law.p().begin(), law.p().end());
    sme::WienerSource noise(7007, 1);
    std::vector<double> times(kSamples), raw(kSamples);
    for (int k = 0; k < kSamples; ++k) times[std::size_t(k)] = k * dt;

    double sum = 0, sq = 0;
    std::size_t correct = 0;
    for (std::size_t w = 0; w < kWindows; ++w) {
        const int n = level(pick);
        const auto pinned = sme::PhononDistribution::fock(n, top);
        for (auto& v : raw) v = sme::photocurrent_sample(pinned, p, noise.next(dt), dt);
        const double x = record::integrate_window(times, raw, 0.0, width);
        sum += x;
        sq += x * x;
        const double estimate = record::bayes_update(prior, x, p.chi, p.kappa, width).mean();
        if (std::lround(estimate) == n) ++correct;
    }
    const double mean = sum / kWindows;
    const double var = (sq - kWindows * mean * mean) / (kWindows - 1);
    const double mean_exact = -2 * p.chi * law.mean() * width;
    const double var_exact = 4 * p.chi * p.chi * width * width * law.variance() + p.kappa * width;
    const double mean_err = std::abs(mean / mean_exact - 1);
    const double var_err = std::abs(var / var_exact - 1);
    const double hit = double(correct) / kWindows;
    const double delta = record::number_resolution(p.chi, p.kappa, width);
    return {mean_err <= 0.05 && var_err <= 0.05 && hit >= 0.99,
            fmt("mean %.3f vs %.3f (%.1f%%), variance %.2f vs %.2f (%.1f%%), Bayes hit rate %.4f, Delta = %.4f",
                mean, mean_exact, 100 * mean_err, var, var_exact, 100 * var_err, hit, delta)};
}

Outcome criterion8() {
    constexpr std::size_t kSeeds = 5;
    const auto panel = panel_of(1, 0);
    const auto& p = panel.params;
    const double window = thermal_window(p);
    const auto runs = panel_ensemble(panel, kSeeds);
    record::JumpMatch total;
    for (const auto& r : runs) {
        const auto filtered = record::sliding_average(r.times, r.photocurrent, window);
        const auto detected = record::detect_jumps(filtered, 2 * p.eta * p.chi);
        std::vector<record::JumpEvent> truth;
        for (const auto& e : record::level_changes(r.times, r.mean_n)) {
            if (e.t >= window && e.t <= p.t_final - window) truth.push_back(e);
        }
        const auto m = record::match_jumps(truth, detected, window);
        total.truth += m.truth;
        total.detected += m.detected;
        total.matched += m.matched;
    }
    const double precision = total.detected ? double(total.matched) / double(total.detected) : 1.0;
    return {total.recall() >= 0.9, fmt("%zu seeds: recall %.3f (%zu of %zu, >= 0.9), precision %.3f", kSeeds,
                                       total.recall(), total.matched, total.truth, precision)};
}

Outcome criterion9() {
    Stopwatch clock;
    constexpr std::size_t kStreams = 50;
    bool ok = true;
    std::string text = fmt("%zu pooled trajectories per panel:", kStreams);
    for (const auto& panel : experiments::figure_panels(4)) {
        const auto runs = panel_ensemble(panel, kStreams, 10);
        std::vector<double> pooled(std::size_t(panel.n_support) + 1, 0.0);
        for (const auto& r : runs) {
            const auto h = stats::fock_histogram(r, warmup(panel.params), panel.n_support);
            for (std::size_t n = 0; n < pooled.size(); ++n) pooled[n] += h.weights[n] / double(kStreams);
        }
        double total = 0;
        for (double w : pooled) total += w;
        bool mono = true;
        for (std::size_t n = 1; n < pooled.size(); ++n) mono = mono && pooled[n] <= pooled[n - 1];
        const auto law = stats::thermal_distribution(panel.params.nbar, panel.n_support);
        const double tv = stats::total_variation(pooled, law.p());
        const bool normalized = std::abs(total - 1) < 1e-12;
        ok = ok && normalized && mono && tv <= 0.15;
        text += fmt(" Nbar=%g TV %.4f %s%s;", panel.params.nbar, tv, mono ? "monotone" : "not monotone",
                    normalized ? "" : " unnormalized");
    }
    const double s = clock.seconds();
    ok = ok && s < 900;
    return {ok, text + fmt(" %.1f s", s)};
}

Outcome criterion10() {
    const auto checks = experiments::check_feasibility_numbers();
    std::size_t passed = 0;
    for (const auto& r : checks) passed += r.passed ? 1 : 0;
    const auto f = regimes::feasibility(0.3, 1.2e7, 0.3e6, 10.0);
    return {passed == checks.size(),
            fmt("k_B T/(Q hbar) = %.1f 1/s, adiabatic %s, fast measurement %s, %zu of %zu flags as expected",
                f.thermal_rate, f.adiabatic_ok ? "passes" : "fails", f.fast_ok ? "passes" : "fails", passed,
                checks.size())};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> selected;
    app.add_option("criteria", selected, "criterion numbers (default: all)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    if (selected.empty()) {
        for (int k = 1; k <= 10; ++k) selected.push_back(k);
    }

    const std::vector<std::function<Outcome()>> checks = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
    bool all = true;
    for (int k : selected) {
        Outcome o;
        try {
            o = checks[std::size_t(k - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
