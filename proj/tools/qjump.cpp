// qjump: figure reproduction, verification suites, feasibility estimates and
// config-file runs.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"
#include "qjump/io.hpp"
#include "qjump/regimes.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

int cmd_verify(const std::string& suite) {
    const auto results = qjump::experiments::verify_suite(suite);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << qjump::io::to_json_line(r) << '\n';
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_feasibility(double T, double Q, double kappa, std::optional<double> chi,
                    std::optional<double> G, std::optional<double> alpha0) {
    using namespace qjump::regimes;
    double c = 0;
    if (chi) {
        c = *chi;
    } else {
        c = chi_from_drive(*G, *alpha0);
    }
    const auto f = feasibility(T, Q, kappa, c);
    std::cout << "k_B T/(Q hbar) = " << f.thermal_rate << " 1/s\n"
              << "chi = " << c << " 1/s, Gamma = chi^2/kappa = " << measurement_rate(c, kappa) << " 1/s\n"
              << "adiabatic:        kappa / rate = " << f.adiabatic_margin << "  "
              << (f.adiabatic_ok ? "pass" : "fail") << " (" << to_string(classify(f.adiabatic_margin)) << ")\n"
              << "fast measurement: Gamma / rate = " << f.fast_meas_margin << "  "
              << (f.fast_ok ? "pass" : "fail") << " (" << to_string(classify(f.fast_meas_margin)) << ")\n";
    return kExitOk;
}

int cmd_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qjump::InvalidArgument("cannot open config '" + path + "'");
    const auto cfg = qjump::experiments::parse_experiment(qjump::io::parse_config(in));
    qjump::experiments::run_experiment(cfg, std::cout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phonon-number quantum jumps: trajectory simulation and record analysis"};
    app.require_subcommand(1);

    int figure = 0;
    qjump::experiments::FigureOptions fig;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt, t_final, window;
    auto* figure_cmd = app.add_subcommand("figure", "Reproduce the regime of figure 1, 2, 3 or 4");
    figure_cmd->add_option("k", figure, "figure number")->required()->check(CLI::Range(1, 4));
    figure_cmd->add_option("--seed", seed, "base seed (default fixed per figure)");
    figure_cmd->add_option("--dt", dt, "integration step in units of 1/(gamma Nbar)")
        ->check(CLI::PositiveNumber);
    figure_cmd->add_option("--T", t_final, "horizon in units of 1/(gamma Nbar)")->check(CLI::PositiveNumber);
    figure_cmd->add_option("--window", window, "filter window (default tau_1/10)")
        ->check(CLI::PositiveNumber);
    figure_cmd->add_option("--out", fig.out_dir, "output directory");

    std::string suite;
    auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite; prints JSON lines");
    verify_cmd->add_option("suite", suite, "oracles | conditions | record")
        ->required()
        ->check(CLI::IsMember({"oracles", "conditions", "record"}));

    double T = 0.3, Q = 1.2e7, kappa = 0.3e6;
    std::optional<double> chi, G, alpha0;
    auto* feas_cmd = app.add_subcommand("feasibility", "Adiabatic and fast-measurement margins of a device");
    feas_cmd->add_option("--T", T, "bath temperature in kelvin")->capture_default_str();
    feas_cmd->add_option("--Q", Q, "mechanical quality factor")->capture_default_str();
    feas_cmd->add_option("--kappa", kappa, "cavity damping in 1/s")->capture_default_str();
    auto* chi_opt = feas_cmd->add_option("--chi", chi, "effective coupling in 1/s");
    auto* g_opt = feas_cmd->add_option("--G", G, "quadratic coupling in 1/s");
    auto* a_opt = feas_cmd->add_option("--alpha0", alpha0, "steady cavity amplitude");
    chi_opt->excludes(g_opt)->excludes(a_opt);
    g_opt->needs(a_opt);
    a_opt->needs(g_opt);

    std::string config;
    auto* run_cmd = app.add_subcommand("run", "Run a key = value experiment config");
    run_cmd->add_option("config", config, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*figure_cmd) {
            fig.seed = seed;
            fig.dt = dt;
            fig.t_final = t_final;
            fig.window = window;
            qjump::experiments::run_figure(figure, fig, std::cout);
            return kExitOk;
        }
        if (*verify_cmd) return cmd_verify(suite);
        if (*feas_cmd) {
            if (!chi && !G) chi = 10.0;
            return cmd_feasibility(T, Q, kappa, chi, G, alpha0);
        }
        if (*run_cmd) return cmd_run(config);
    } catch (const qjump::InvalidArgument& e) {
        std::cerr << "qjump: " << e.what() << '\n';
        return kExitUsage;
    } catch (const qjump::InvalidRate& e) {
        std::cerr << "qjump: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "qjump: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}
