#include <cmath>

#include "doctest.h"

#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"
#include "qjump/regimes.hpp"

using namespace qjump;
using namespace qjump::regimes;

TEST_CASE("thermalization rate") {
    CHECK(thermalization_rate(0, 0.5, 2.0) == doctest::Approx(1.0));
    CHECK(thermalization_rate(1, 0.5, 1.0) == doctest::Approx(2.5));
    CHECK(thermalization_rate(4, 0.0, 3.0) == doctest::Approx(12.0));
    for (double nbar : {0.0, 0.5, 1.0, 7.3})
        for (int n = 1; n < 10; ++n)
            CHECK(thermalization_rate(n, nbar, 1.7) - thermalization_rate(n - 1, nbar, 1.7) ==
                  doctest::Approx(1.7 * (2 * nbar + 1)));
    CHECK(level_lifetime(1, 0.5, 2.0) == doctest::Approx(0.2));
}

TEST_CASE("measurement rate") {
    CHECK(measurement_rate(3.0, 3.0) == doctest::Approx(3.0));
    const auto p = SimParams::from_reduced_units(0.5, 100, 225, 1.0);
    CHECK(p.chi / p.kappa == doctest::Approx(1.5));
    CHECK(measurement_rate(p.chi, p.kappa) / (p.gamma * p.nbar) == doctest::Approx(225.0));
    const auto weak = SimParams::from_reduced_units(0.5, 1e4, 100, 1.0);
    CHECK(weak.chi / weak.kappa == doctest::Approx(0.1));
    CHECK_THROWS_AS(measurement_rate(1.0, 0.0), InvalidRate);
}

TEST_CASE("condition checks") {
    const auto a = check_conditions(SimParams::from_reduced_units(0.5, 1, 100, 1.0), 1);
    CHECK(a.adiabatic_ratio == doctest::Approx(0.2));
    CHECK_FALSE(a.adiabatic_ok);

    const auto fig1 = check_conditions(SimParams::from_reduced_units(0.5, 100, 225, 1.0), 1);
    CHECK(fig1.adiabatic_ratio == doctest::Approx(20.0));
    CHECK(fig1.fast_meas_ratio == doctest::Approx(45.0));
    CHECK(fig1.adiabatic_ok);
    CHECK(fig1.fast_ok);

    SimParams cold;
    cold.kappa = 1.0;
    cold.chi = 1.0;
    const auto c = check_conditions(cold, 1);
    CHECK(std::isinf(c.adiabatic_ratio));
    CHECK(c.adiabatic_ok);
    CHECK(c.fast_ok);

    CHECK(classify(0.5) == Verdict::fails);
    CHECK(classify(5.0) == Verdict::borderline);
    CHECK(classify(10.0) == Verdict::passes);
    for (const auto& r : experiments::check_figure_conditions()) CHECK_MESSAGE(r.passed, r.name);
}

TEST_CASE("drive conversions") {
    const double kappa = 2.0;
    CHECK(steady_cavity_amplitude(cplx(3.0, 0), kappa, 0.0).magnitude == doctest::Approx(2 * 3.0 / kappa));
    CHECK(steady_cavity_amplitude(cplx(3.0, 0), kappa, kappa / 2).magnitude ==
          doctest::Approx(3.0 * std::sqrt(2.0) / kappa));
    CHECK(steady_cavity_amplitude(0.0, kappa, 0.3).magnitude == 0.0);
    CHECK(chi_from_drive(5.0, 0.0) == 0.0);
    CHECK(chi_from_drive(2 * 3e-4, 1e4) == doctest::Approx(2 * chi_from_drive(3e-4, 1e4)));
    const double chi = chi_from_drive(3e-4, 1.7e4);
    CHECK(chi > 1.0);
    CHECK(chi < 100.0);
}

TEST_CASE("feasibility") {
    const auto f = feasibility(0.3, 1.2e7, 0.3e6, 10.0);
    CHECK(f.thermal_rate == doctest::Approx(3273.0084801801604).epsilon(1e-12));
    CHECK(std::abs(f.thermal_rate / 3e3 - 1) < 0.1);
    CHECK(f.adiabatic_margin == doctest::Approx(91.66).epsilon(1e-3));
    CHECK(f.adiabatic_ok);
    CHECK_FALSE(f.fast_ok);
    CHECK(feasibility(0.15, 1.2e7, 0.3e6, 10.0).thermal_rate == doctest::Approx(f.thermal_rate / 2));
    CHECK(feasibility(0.3, 2.4e7, 0.3e6, 10.0).thermal_rate == doctest::Approx(f.thermal_rate / 2));
    CHECK_THROWS_AS(feasibility(-1.0, 1.2e7, 0.3e6, 10.0), InvalidArgument);
}
