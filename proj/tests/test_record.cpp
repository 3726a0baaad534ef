#include <cmath>
#include <vector>

#include "doctest.h"

#include "qjump/errors.hpp"
#include "qjump/record.hpp"

using namespace qjump;
using namespace qjump::record;

namespace {

std::vector<double> grid(std::size_t n, double dt) {
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = double(k) * dt;
    return t;
}

sme::PhononDistribution flat(int n_max) {
    return sme::PhononDistribution(std::vector<double>(std::size_t(n_max) + 1, 1.0));
}

}  // namespace

TEST_CASE("sliding average") {
    const auto t = grid(100, 0.01);
    const std::vector<double> c(100, 2.5);
    const auto f = sliding_average(t, c, 0.1);
    CHECK(f.warmup == 10);
    for (double v : f.values) CHECK(v == doctest::Approx(2.5));

    const double dt = 1e-3, window = 0.05, ek = 4.0;
    const std::size_t n = 200000;
    sme::WienerSource rng(17);
    std::vector<double> raw(n);
    for (auto& v : raw) v = std::sqrt(ek) * rng.next(dt) / dt;
    const auto g = sliding_average(grid(n, dt), raw, window);
    double sum = 0, sq = 0;
    std::size_t kept = 0;
    for (std::size_t k = g.warmup; k < n; ++k) {
        sum += g.values[k];
        sq += g.values[k] * g.values[k];
        ++kept;
    }
    const double mean = sum / kept;
    CHECK((sq / kept - mean * mean) / (ek / window) == doctest::Approx(1.0).epsilon(0.05));

    CHECK_THROWS_AS(sliding_average(t, c, 0.01), InvalidArgument);
    CHECK_THROWS_AS(sliding_average(t, std::vector<double>(99, 0.0), 0.1), DimensionMismatch);
}

TEST_CASE("window integration") {
    const double chi = 1.2, width = 2.0, dt = 0.01;
    const auto t = grid(400, dt);
    const std::vector<double> pinned(400, -2 * chi * 3);
    CHECK(integrate_window(t, pinned, 0.5, width) == doctest::Approx(-2 * chi * 3 * width));
    CHECK(estimate_number(integrate_window(t, pinned, 1.0, width), chi, width) == doctest::Approx(3.0));
    CHECK_THROWS_AS(integrate_window(t, pinned, 3.0, width), RecordRangeError);
    CHECK_THROWS_AS(integrate_window(t, pinned, 0.0, -1.0), InvalidArgument);
}

TEST_CASE("windowed moments follow the generative model") {
    SimParams p;
    p.kappa = 2.0;
    p.chi = 0.5;
    const double width = 1.0, dt = 0.01;
    const int samples = 100, windows = 20000;
    const auto t = grid(samples, dt);
    const auto law = sme::PhononDistribution::thermal(0.5, 12);
    std::vector<double> raw(samples);
    sme::WienerSource rng(23);
    std::mt19937_64 pick(23);
    std::discrete_distribution<int> level(law.p().begin(), law.p().end());
    double sum = 0, sq = 0;
    for (int w = 0; w < windows; ++w) {
        const auto pinned = sme::PhononDistribution::fock(level(pick), 12);
        for (auto& v : raw) v = sme::photocurrent_sample(pinned, p, rng.next(dt), dt);
        const double x = integrate_window(t, raw, 0.0, width);
        sum += x;
        sq += x * x;
    }
    const double mean = sum / windows, var = sq / windows - mean * mean;
    CHECK(mean == doctest::Approx(-2 * p.chi * law.mean() * width).epsilon(0.05));
    CHECK(var == doctest::Approx(4 * p.chi * p.chi * width * width * law.variance() + p.kappa * width).epsilon(0.05));
}

TEST_CASE("likelihood") {
    const double chi = 1.0, kappa = 2.0, width = 0.5;
    const double peak = likelihood(-2 * chi * 2 * width, 2, chi, kappa, width);
    CHECK(likelihood(-2 * chi * 2 * width + 0.1, 2, chi, kappa, width) < peak);
    CHECK(likelihood(-2 * chi * 2 * width - 0.1, 2, chi, kappa, width) < peak);
    CHECK(peak == doctest::Approx(1 / std::sqrt(2 * M_PI * kappa * width)));

    double area = 0;
    const double h = 1e-3;
    for (double x = -30; x < 30; x += h) area += likelihood(x, 1, chi, kappa, width) * h;
    CHECK(std::abs(area - 1) < 1e-8);
    CHECK_THROWS_AS(likelihood(0, 0, chi, 0.0, width), InvalidRate);
}

TEST_CASE("resolution and Bayes update") {
    CHECK(number_resolution(1.0, 1.0, 10.0) == doctest::Approx(0.0125));
    CHECK(sharpness(1.0, 10.0) == doctest::Approx(80.0));

    const double chi = 1.0, kappa = 1.0;
    const double width = kappa / (8 * chi * chi * 0.01);
    CHECK(number_resolution(chi, kappa, width) == doctest::Approx(0.01));
    const auto post = bayes_update(flat(6), -2 * chi * 3 * width, chi, kappa, width);
    CHECK(post[3] > 0.99);

    const auto point = sme::PhononDistribution::fock(2, 5);
    for (double x : {-40.0, 0.0, 3.0}) CHECK(bayes_update(point, x, chi, kappa, 1.0).p() == point.p());
    CHECK_THROWS_AS(bayes_update(flat(3), 1e6, chi, kappa, 1.0), DegenerateEvidence);
}

TEST_CASE("posterior averages back to the prior") {
    const double chi = 1.0, kappa = 1.0, width = 0.3;
    const auto prior = sme::PhononDistribution(std::vector<double>{0.5, 0.3, 0.2});
    std::mt19937_64 gen(31);
    std::discrete_distribution<int> level(prior.p().begin(), prior.p().end());
    std::normal_distribution<double> noise(0.0, std::sqrt(kappa * width));
    const int draws = 40000;
    std::vector<double> sum(3, 0.0), sq(3, 0.0);
    for (int k = 0; k < draws; ++k) {
        const double x = -2 * chi * level(gen) * width + noise(gen);
        const auto post = bayes_update(prior, x, chi, kappa, width);
        for (std::size_t n = 0; n < 3; ++n) {
            sum[n] += post[n];
            sq[n] += post[n] * post[n];
        }
    }
    for (std::size_t n = 0; n < 3; ++n) {
        const double mean = sum[n] / draws;
        const double se = std::sqrt((sq[n] / draws - mean * mean) / draws);
        CHECK(std::abs(mean - prior[n]) <= 3 * se);
    }
}

TEST_CASE("jump detection") {
    const double dt = 0.001, gain = 2.0, t_star = 0.5;
    const auto t = grid(1000, dt);
    std::vector<double> step(1000);
    for (std::size_t k = 0; k < step.size(); ++k) step[k] = t[k] < t_star ? -gain : -2 * gain;
    const auto f = sliding_average(t, step, 0.02);
    const auto events = detect_jumps(f, gain);
    REQUIRE(events.size() == 1);
    CHECK(events[0].from_n == 1);
    CHECK(events[0].to_n == 2);
    CHECK(events[0].t == doctest::Approx(t_star).epsilon(0.01));
    CHECK_FALSE(events[0].multi_level);

    CHECK(detect_jumps(sliding_average(t, std::vector<double>(1000, -gain), 0.02), gain).empty());
    CHECK_THROWS_AS(detect_jumps(f, 0.0), InvalidArgument);
    CHECK_THROWS_AS(detect_jumps(f, gain, 0.7), InvalidArgument);

    std::vector<double> mean_n(1000, 0.0);
    for (std::size_t k = 300; k < 1000; ++k) mean_n[k] = k < 600 ? 1.0 : 3.0;
    const auto changes = level_changes(t, mean_n);
    REQUIRE(changes.size() == 2);
    CHECK(changes[1].multi_level);
    CHECK(changes[1].to_n == 3);
}

TEST_CASE("jump matching") {
    const std::vector<JumpEvent> truth = {{1.0, 0, 1, false}, {2.0, 1, 0, false}, {3.0, 0, 1, false}};
    const std::vector<JumpEvent> found = {{1.01, 0, 1, false}, {2.01, 0, 1, false}, {3.5, 0, 1, false}};
    const auto m = match_jumps(truth, found, 0.05);
    CHECK(m.truth == 3);
    CHECK(m.detected == 3);
    CHECK(m.matched == 1);
    CHECK(m.recall() == doctest::Approx(1.0 / 3.0));
    CHECK(match_jumps({}, found, 0.1).recall() == 1.0);
}
