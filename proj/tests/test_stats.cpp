#include <cmath>
#include <vector>

#include "doctest.h"

#include "qjump/analytic.hpp"
#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"
#include "qjump/stats.hpp"

using namespace qjump;
using namespace qjump::stats;

namespace {

sme::TrajectoryRecord series(std::vector<double> mean_n) {
    sme::TrajectoryRecord r;
    r.mean_n = std::move(mean_n);
    for (std::size_t k = 0; k < r.mean_n.size(); ++k) r.times.push_back(0.1 * double(k));
    return r;
}

EnsembleSpec sre(double gamma, double chi) {
    EnsembleSpec what;
    what.mode = sme::Mode::adiabatic;
    what.params.kappa = 100;
    what.params.gamma = gamma;
    what.params.nbar = 0.5;
    what.params.chi = chi;
    what.params.dt = 1e-4;
    what.params.t_final = 0.5;
    what.options.sample_every = 100;
    what.p0 = sme::PhononDistribution::fock(0, 10);
    return what;
}

}  // namespace

TEST_CASE("ensemble statistics") {
    const auto one = sme::simulate_adiabatic(sre(2.0, 20.0).params, sre(2.0, 20.0).p0);
    const auto s = summarize({one, one});
    for (double e : s.stderr_mean_n) CHECK(e == 0.0);
    CHECK(s.M == 2);

    const auto quiet = run_ensemble(sre(2.0, 0.0), 4, 5);
    for (std::size_t k = 0; k < quiet.times.size(); ++k) {
        CHECK(quiet.stderr_mean_n[k] == 0.0);
        CHECK(quiet.mean_of_mean_n[k] ==
              doctest::Approx(analytic::mean_phonon_unconditional(0.0, 0.5, 2.0, quiet.times[k])).epsilon(1e-3));
    }
    CHECK_THROWS_AS(run_ensemble(sre(2.0, 0.0), 1, 5), InvalidArgument);
    CHECK_THROWS_AS(summarize({}), InvalidArgument);
}

TEST_CASE("ensembles do not depend on the thread count") {
    const auto what = sre(2.0, 20.0);
    const auto a = run_ensemble(what, 6, 77, 1);
    const auto b = run_ensemble(what, 6, 77, 3);
    CHECK(a.mean_of_mean_n == b.mean_of_mean_n);
    CHECK(a.stderr_mean_n == b.stderr_mean_n);
    const auto runs = run_trajectories(what, 3, 77, 2);
    for (std::size_t k = 0; k < runs.size(); ++k) CHECK(runs[k].stream == k);
}

TEST_CASE("failures are collected") {
    auto what = sre(2.0, 20.0);
    what.params.dt = 0.1;
    try {
        run_trajectories(what, 3, 1);
        FAIL("expected PartialFailure");
    } catch (const PartialFailure& e) {
        CHECK(e.failed_indices() == std::vector<std::size_t>{0, 1, 2});
    }
}

TEST_CASE("Fock histogram") {
    const auto flat = fock_histogram(series(std::vector<double>(10, 1.2)), 0.0);
    REQUIRE(flat.weights.size() == 2);
    CHECK(flat.weights[1] == 1.0);

    std::vector<double> alt;
    for (int k = 0; k < 10; ++k) alt.push_back(k % 2 ? 0.6 : 0.4);
    const auto h = fock_histogram(series(alt), 0.0, 3);
    CHECK(h.weights == std::vector<double>{0.5, 0.5, 0.0, 0.0});
    CHECK(h.total_samples == 10);
    CHECK(fock_histogram(series(alt), 0.5).total_samples == 5);
    CHECK_THROWS_AS(fock_histogram(series(alt), 5.0), InvalidArgument);

    auto r = series({0.0, 1.0});
    r.populations = {{1.0, 0.0}, {0.0, 1.0}};
    CHECK(population_histogram(r, 0.0).weights == std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(population_histogram(series({0.0}), 0.0), InvalidArgument);
}

TEST_CASE("thermal law and total variation") {
    CHECK(thermal_distribution(0.0, 5)[0] == 1.0);
    const auto half = thermal_distribution(0.5, 20);
    CHECK(half[1] / half[0] == doctest::Approx(1.0 / 3.0));
    const auto one = thermal_distribution(1.0, 20);
    CHECK(one[1] / one[0] == doctest::Approx(0.5));

    const std::vector<double> p = {0.6, 0.4}, q = {0.5, 0.5};
    CHECK(total_variation(p, p) == 0.0);
    CHECK(total_variation(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0);
    CHECK(total_variation(p, q) == doctest::Approx(0.1));
    CHECK_THROWS_AS(total_variation(p, std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("resolution score and time average") {
    const auto r = series({0.0, 0.1, 0.5, 1.05, 1.5, 2.0});
    CHECK(jump_resolution_score(r, 0.0) == doctest::Approx(4.0 / 6.0));
    CHECK(jump_resolution_score(r, 0.25) == doctest::Approx(2.0 / 3.0));
    CHECK(time_average_mean_n(r, 0.35) == doctest::Approx((1.5 + 2.0) / 2));
    CHECK_THROWS_AS(time_average_mean_n(r, 10.0), InvalidArgument);
}

TEST_CASE("SRE sizing") {
    CHECK(experiments::sre_support(0.5) == 13);
    CHECK(experiments::sre_support(1.0) == 19);
    CHECK(experiments::sre_support(0.0) == 1);
    const auto p = SimParams::from_reduced_units(0.5, 100, 400, 1.0);
    CHECK(experiments::sre_step(p, 13) * p.measurement_rate() <= experiments::kSreMeasurementStep * (1 + 1e-12));
}
