#pragma once

// Figure regimes, verification suites and config-file runs behind the CLI.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qjump/io.hpp"
#include "qjump/record.hpp"
#include "qjump/regimes.hpp"
#include "qjump/sme.hpp"
#include "qjump/stats.hpp"

namespace qjump::experiments {

/// One parameter set of a figure. Rates are absolute here; the figures
/// quote them in units of gamma*Nbar, which from_reduced_units sets to 1.
struct Panel {
    std::string label;
    std::string caption;
    sme::Mode mode = sme::Mode::pointer;
    SimParams params;
    int n_resolve = 1;  // level used for the conditions and the filter window
    int n_support = 3;  // n_max of the sizing rule (full, pointer) or top SRE level
};

/// Largest Gamma*dt used for the Euler SRE; the default step alone lets
/// the measurement term clamp more than 1e-3 per step at Gamma = 400.
inline constexpr double kSreMeasurementStep = 2.5e-3;

/// Smallest n_max whose thermal occupation is below top_tol.
int sre_support(double nbar, double top_tol = 1e-6);

/// default_dt capped at kSreMeasurementStep / Gamma.
double sre_step(const SimParams& p, int n_max);

const char* mode_name(sme::Mode mode);

std::uint64_t default_seed(int figure);

/// Panels of figure k, in panel order (a), (b), ...
std::vector<Panel> figure_panels(int figure);

/// Sizing of full and pointer panels. Every panel starts with the cavity in
/// vacuum and the mechanics in |0>.
HilbertSpec panel_space(const Panel& panel);

struct PanelRun {
    Panel panel;
    regimes::RegimeReport report;
    sme::TrajectoryRecord record;
    record::FilteredSeries filtered;
    int sample_every = 1;
};

/// Recorded rows are thinned to about `max_rows` (the state is still
/// integrated at params.dt) and the photocurrent is filtered with a window
/// of tau_1/10 unless `window` is given.
PanelRun run_panel(const Panel& panel, std::uint64_t stream = 0, std::size_t max_rows = 50000,
                   std::optional<double> window = std::nullopt);

struct FigureOptions {
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> t_final;  // in units of 1/(gamma Nbar)
    std::optional<double> window;
    std::string out_dir = ".";
};

/// Runs every panel of figure k, writes CSV and SVG files into out_dir and
/// prints a regime report per panel. Returns the written file names.
std::vector<std::string> run_figure(int figure, const FigureOptions& opts, std::ostream& log);

/// Metadata written above every CSV produced from a panel.
io::Metadata panel_metadata(const PanelRun& run);

/// Suites: "oracles", "conditions", "record".
std::vector<io::CheckResult> verify_suite(const std::string& suite);

// Individual checks, shared with the acceptance binary.
io::CheckResult check_walls_oracle(double kappa_t);
io::CheckResult check_moment_oracle();
std::vector<io::CheckResult> check_figure_conditions();
std::vector<io::CheckResult> check_feasibility_numbers();
std::vector<io::CheckResult> check_record_formulas();

/// Parsed `qjump run` configuration.
struct ExperimentConfig {
    std::string mode = "adiabatic";  // full | pointer | adiabatic | lindblad
    SimParams params;
    int n_max = 3;
    std::optional<int> cavity_dim;
    std::optional<int> mech_dim;
    std::string initial = "ground";  // ground | fock:n | thermal:Nbar
    std::optional<double> window;
    std::size_t M = 1;
    std::size_t max_rows = 50000;
    std::string out = "qjump_run";
};

ExperimentConfig parse_experiment(const io::Config& cfg);

/// Runs the configuration and writes its CSV output; returns the file names.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace qjump::experiments
