#include "qjump/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "qjump/analytic.hpp"
#include "qjump/errors.hpp"
#include "qjump/lindblad.hpp"

namespace qjump::experiments {

namespace {

constexpr double kNbarFigures = 0.5;

// Horizons in units of 1/(gamma Nbar).
constexpr double kHorizonFig1 = 5.0;
constexpr double kHorizonFig2 = 10.0;
constexpr double kHorizonFig3 = 10.0;
constexpr double kHorizonFig4 = 30.0;

Panel make_panel(std::string label, std::string caption, sme::Mode mode, double nbar,
                 double kappa_gn, double meas_gn, double horizon, int n_support) {
    Panel p;
    p.label = std::move(label);
    p.caption = std::move(caption);
    p.mode = mode;
    p.params = SimParams::from_reduced_units(nbar, kappa_gn, meas_gn, horizon);
    p.n_support = n_support;
    p.params.dt = mode == sme::Mode::adiabatic ? sre_step(p.params, n_support)
                                               : default_dt(p.params, n_support);
    return p;
}

std::string num(double v) { return io::format_double(v); }

io::CheckResult make_check(std::string suite, std::string name, bool passed, double measured,
                           double expected, std::string detail = {}) {
    return {std::move(suite), std::move(name), passed, measured, expected, std::move(detail)};
}

void write_file(const std::filesystem::path& path, const std::string& text,
                std::vector<std::string>& written) {
    io::write_text_file(path.string(), text);
    written.push_back(path.string());
}

std::string trajectory_csv(const PanelRun& run) {
    std::ostringstream os;
    io::write_trajectory_csv(os, io::make_table(run.record, run.filtered), panel_metadata(run));
    return os.str();
}

std::string trajectory_svg(const PanelRun& run) {
    const auto& rec = run.record;
    const auto& p = run.panel.params;
    std::vector<io::SvgSeries> series;
    series.push_back({"<n>", rec.times, rec.mean_n});
    if (!rec.quad_phase.empty()) {
        io::SvgSeries q{"-(kappa/2chi) quad", rec.times, {}};
        for (double v : rec.quad_phase) q.y.push_back(-v * p.kappa / (2.0 * p.chi));
        series.push_back(std::move(q));
    }
    io::SvgSeries f{"-(1/2 eta chi) filtered i_h", {}, {}};
    for (std::size_t k = run.filtered.warmup; k < run.filtered.values.size(); ++k) {
        f.x.push_back(run.filtered.times[k]);
        f.y.push_back(-run.filtered.values[k] / (2.0 * p.eta * p.chi));
    }
    series.push_back(std::move(f));
    std::ostringstream os;
    io::write_svg(os, run.panel.label + ": " + run.panel.caption, series, "t (1/gamma Nbar)",
                  "phonon number");
    return os.str();
}

void print_report(std::ostream& log, const PanelRun& run) {
    const auto& r = run.report;
    const auto& p = run.panel.params;
    log << run.panel.label << "  " << run.panel.caption << '\n'
        << "  kappa=" << p.kappa << " chi=" << p.chi << " Gamma=" << p.measurement_rate()
        << " gamma=" << p.gamma << " Nbar=" << p.nbar << " dt=" << p.dt << " T=" << p.t_final
        << " seed=" << p.seed << '\n'
        << "  thermalization(n=" << run.panel.n_resolve << ")=" << r.thermalization_rate
        << "  adiabatic ratio=" << r.adiabatic_ratio << " ("
        << regimes::to_string(regimes::classify(r.adiabatic_ratio)) << ")"
        << "  fast-measurement ratio=" << r.fast_meas_ratio << " ("
        << regimes::to_string(regimes::classify(r.fast_meas_ratio)) << ")"
        << "  gain chi/kappa=" << r.gain << '\n';
    const double warm = std::min(0.25 * p.t_final, 5.0 / p.kappa + run.filtered.window);
    log << "  <n> time average=" << stats::time_average_mean_n(run.record, warm)
        << "  jump-resolution score=" << stats::jump_resolution_score(run.record, warm) << '\n';
}

sme::PhononDistribution initial_distribution(const std::string& initial, int n_max) {
    if (initial == "ground") return sme::PhononDistribution::fock(0, n_max);
    if (initial.rfind("fock:", 0) == 0) {
        return sme::PhononDistribution::fock(std::stoi(initial.substr(5)), n_max);
    }
    if (initial.rfind("thermal:", 0) == 0) {
        return sme::PhononDistribution::thermal(std::stod(initial.substr(8)), n_max);
    }
    throw InvalidArgument("unknown initial state '" + initial + "' (ground | fock:n | thermal:N)");
}

DensityMatrix initial_mechanics(const std::string& initial, int dim) {
    if (initial == "ground") return fock_state(0, dim);
    if (initial.rfind("fock:", 0) == 0) return fock_state(std::stoi(initial.substr(5)), dim);
    if (initial.rfind("thermal:", 0) == 0) return thermal_state(std::stod(initial.substr(8)), dim);
    throw InvalidArgument("unknown initial state '" + initial + "' (ground | fock:n | thermal:N)");
}

}  // namespace

int sre_support(double nbar, double top_tol) {
    if (!(nbar >= 0)) throw InvalidArgument("sre_support: Nbar must be >= 0");
    if (!(top_tol > 0 && top_tol < 1)) throw InvalidArgument("sre_support: tolerance must lie in (0, 1)");
    const double q = nbar / (nbar + 1.0);
    int n = 0;
    for (double p = 1.0 - q; p >= top_tol; p *= q) ++n;
    return n;
}

double sre_step(const SimParams& p, int n_max) {
    const double meas = p.measurement_rate();
    const double dt = default_dt(p, n_max);
    return meas > 0 ? std::min(dt, kSreMeasurementStep / meas) : dt;
}

const char* mode_name(sme::Mode mode) {
    switch (mode) {
        case sme::Mode::full: return "full";
        case sme::Mode::pointer: return "pointer";
        case sme::Mode::adiabatic: return "adiabatic";
    }
    return "?";
}

std::uint64_t default_seed(int figure) {
    if (figure < 1 || figure > 4) throw InvalidArgument("figure must be 1, 2, 3 or 4");
    return 1000 + std::uint64_t(figure);
}

std::vector<Panel> figure_panels(int figure) {
    const auto pointer = sme::Mode::pointer;
    const auto sre = sme::Mode::adiabatic;
    const int support = sre_support(kNbarFigures);
    std::vector<Panel> out;
    switch (figure) {
        case 1:
            out.push_back(make_panel("fig1", "Nbar=0.5, chi/kappa=1.5, kappa=100, Gamma=225", pointer,
                                     kNbarFigures, 100, 225, kHorizonFig1, 3));
            break;
        case 2: {
            const double kappas[] = {1, 10, 100};
            const char* names[] = {"fig2a", "fig2b", "fig2c"};
            for (int i = 0; i < 3; ++i) {
                out.push_back(make_panel(names[i], "Nbar=0.5, Gamma=100, kappa=" + num(kappas[i]), pointer,
                                         kNbarFigures, kappas[i], 100, kHorizonFig2, 3));
            }
            break;
        }
        case 3: {
            const double rates[] = {1, 10, 100};
            const char* names[] = {"fig3a", "fig3b", "fig3c"};
            for (int i = 0; i < 3; ++i) {
                out.push_back(make_panel(names[i], "Nbar=0.5, kappa=1e4, Gamma=" + num(rates[i]), sre,
                                         kNbarFigures, 1e4, rates[i], kHorizonFig3, support));
            }
            break;
        }
        case 4:
            out.push_back(make_panel("fig4a", "Nbar=0.5, kappa=100, Gamma=400", sre, 0.5, 100, 400,
                                     kHorizonFig4, sre_support(0.5)));
            out.push_back(make_panel("fig4b", "Nbar=1, kappa=100, Gamma=400", sre, 1.0, 100, 400,
                                     kHorizonFig4, sre_support(1.0)));
            break;
        default:
            throw InvalidArgument("figure must be 1, 2, 3 or 4");
    }
    for (auto& p : out) p.params.seed = default_seed(figure);
    return out;
}

HilbertSpec panel_space(const Panel& panel) {
    return auto_size(panel.params.chi, panel.params.kappa, panel.n_support);
}

PanelRun run_panel(const Panel& panel, std::uint64_t stream, std::size_t max_rows,
                   std::optional<double> window) {
    if (max_rows < 2) throw InvalidArgument("run_panel: max_rows must be >= 2");
    PanelRun run;
    run.panel = panel;
    const auto& p = panel.params;
    run.report = regimes::check_conditions(p, panel.n_resolve);
    run.sample_every = int(std::max<std::size_t>(1, p.steps() / max_rows));

    sme::SimulateOptions opts;
    opts.sample_every = run.sample_every;
    opts.stream = stream;
    if (panel.mode == sme::Mode::full) {
        const HilbertSpec spec = panel_space(panel);
        const DensityMatrix rho0 =
            tensor(fock_state(0, spec.cavity_dim()), fock_state(0, spec.mech_dim()));
        run.record = sme::simulate_full(p, spec, rho0, opts);
    } else if (panel.mode == sme::Mode::pointer) {
        const int top = panel_space(panel).mech_dim() - 1;
        run.record = sme::simulate_pointer(p, sme::PhononDistribution::fock(0, top), opts);
    } else {
        run.record = sme::simulate_adiabatic(p, sme::PhononDistribution::fock(0, panel.n_support), opts);
    }
    const double w = window.value_or(regimes::level_lifetime(1, p.nbar, p.gamma) / 10.0);
    run.filtered = record::sliding_average(run.record.times, run.record.photocurrent, w);
    return run;
}

io::Metadata panel_metadata(const PanelRun& run) {
    const auto& p = run.panel.params;
    const auto& rec = run.record;
    io::Metadata m = {
        {"panel", run.panel.label},
        {"caption", run.panel.caption},
        {"mode", mode_name(rec.mode)},
        {"units", "rates in units of gamma*Nbar"},
        {"kappa", num(p.kappa)},
        {"chi", num(p.chi)},
        {"Gamma", num(p.measurement_rate())},
        {"gamma", num(p.gamma)},
        {"Nbar", num(p.nbar)},
        {"eta", num(p.eta)},
        {"dt", num(p.dt)},
        {"t_final", num(p.t_final)},
        {"sample_dt", num(rec.sample_dt)},
        {"seed", std::to_string(rec.seed)},
        {"stream", std::to_string(rec.stream)},
        {"trajectories", "1"},
        {"window", num(run.filtered.window)},
        {"n_support", std::to_string(run.panel.n_support)},
    };
    if (rec.mode == sme::Mode::full) {
        const HilbertSpec spec = panel_space(run.panel);
        m.emplace_back("cavity_dim", std::to_string(spec.cavity_dim()));
        m.emplace_back("mech_dim", std::to_string(spec.mech_dim()));
        m.emplace_back("max_cavity_top", num(rec.max_cavity_top));
        m.emplace_back("min_eigenvalue", num(rec.min_eigenvalue));
    } else if (rec.mode == sme::Mode::pointer) {
        m.emplace_back("mech_dim", std::to_string(panel_space(run.panel).mech_dim()));
        m.emplace_back("nodes_per_level", std::to_string(sme::PointerState::kDefaultNodesPerLevel));
        m.emplace_back("truncated_flux", num(rec.truncated_flux));
    } else {
        m.emplace_back("clamped_mass", num(rec.clamped_mass));
        m.emplace_back("truncated_flux", num(rec.truncated_flux));
    }
    return m;
}

std::vector<std::string> run_figure(int figure, const FigureOptions& opts, std::ostream& log) {
    std::vector<Panel> panels = figure_panels(figure);
    for (auto& panel : panels) {
        if (opts.seed) panel.params.seed = *opts.seed;
        if (opts.t_final) panel.params.t_final = *opts.t_final / (panel.params.gamma * panel.params.nbar);
        if (opts.dt) panel.params.dt = *opts.dt;
        for (const auto& w : panel.params.validate()) log << "warning: " << w << '\n';
    }
    const std::filesystem::path dir(opts.out_dir);
    std::filesystem::create_directories(dir);

    std::vector<std::string> written;
    for (const auto& panel : panels) {
        const PanelRun run = run_panel(panel, 0, 50000, opts.window);
        print_report(log, run);
        write_file(dir / (panel.label + ".csv"), trajectory_csv(run), written);
        write_file(dir / (panel.label + ".svg"), trajectory_svg(run), written);

        if (figure == 4) {
            const auto& p = panel.params;
            const double warm = 5.0 / p.kappa + run.filtered.window;
            const auto h = stats::fock_histogram(run.record, warm, panel.n_support);
            const auto thermal = stats::thermal_distribution(p.nbar, panel.n_support);
            io::HistogramTable table{h.weights, thermal.p()};
            io::Metadata meta = panel_metadata(run);
            meta.emplace_back("discard", num(warm));
            meta.emplace_back("samples", std::to_string(h.total_samples));
            const double tv = stats::total_variation(table.weight, table.thermal);
            meta.emplace_back("total_variation", num(tv));
            std::ostringstream csv, svg;
            io::write_histogram_csv(csv, table, meta);
            io::write_histogram_svg(svg, panel.label + ": histogram of round(<n>)", table);
            write_file(dir / (panel.label + "_hist.csv"), csv.str(), written);
            write_file(dir / (panel.label + "_hist.svg"), svg.str(), written);
            log << "  histogram:";
            for (double w : h.weights) log << ' ' << w;
            log << "\n  thermal:  ";
            for (double w : thermal.p()) log << ' ' << w;
            log << "\n  total variation=" << tv << '\n';
        }
    }
    for (const auto& f : written) log << "wrote " << f << '\n';
    return written;
}

// ---------------------------------------------------------------------------

io::CheckResult check_walls_oracle(double kappa_t) {
    const double kappa = 1.0, chi = 1.0;
    const cplx alpha{0.3, 0.0};
    const HilbertSpec spec(auto_size(chi, kappa, 1).cavity_dim(), 2);
    const double s = 1.0 / std::numbers::sqrt2;
    const auto init = analytic::InitialWeights::pure({s, s}, alpha);
    const DensityMatrix rho0 = analytic::walls_state(init, chi, kappa, 0.0, spec);

    SimParams p;
    p.kappa = kappa;
    p.chi = chi;
    p.dt = 0.005 / kappa;
    p.t_final = kappa_t / kappa;
    lindblad::EvolveOptions opts;
    opts.sample_every = int(p.steps());
    const auto ev = lindblad::evolve(rho0, p, spec, opts);
    const DensityMatrix exact = analytic::walls_state(init, chi, kappa, p.t_final, spec);
    const double err = (ev.samples.back().rho.matrix() - exact.matrix()).cwiseAbs().maxCoeff();
    return make_check("oracles", "walls_state kappa*t=" + num(kappa_t), err <= 1e-6, err, 1e-6,
                      "max-abs difference, cavity " + std::to_string(spec.cavity_dim()) + " x mech 2");
}

io::CheckResult check_moment_oracle() {
    SimParams p;
    p.kappa = 1.0;
    p.gamma = 0.01;
    p.nbar = 0.5;
    p.chi = 0.5;
    p.dt = 0.005;
    p.t_final = 10.0;
    const cplx a0{0.5, 0.0};
    const double n0 = 1.0;
    const HilbertSpec spec = auto_size(p.chi, p.kappa, 3);
    const DensityMatrix rho0 =
        tensor(coherent_state(a0, spec.cavity_dim()), fock_state(int(n0), spec.mech_dim()));
    lindblad::EvolveOptions opts;
    opts.sample_every = int(std::llround(0.5 / p.dt));
    const auto ev = lindblad::evolve(rho0, p, spec, opts);

    const Operator a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
    const Operator nb = lift(number(spec.mech_dim()), Subsystem::mechanics, spec);
    double worst = 0;
    for (const auto& s : ev.samples) {
        const double n_num = expectation(nb, s.rho).real();
        const cplx a_num = expectation(a, s.rho);
        const double n_ref = analytic::mean_phonon_unconditional(n0, p.nbar, p.gamma, s.t);
        const cplx a_ref = analytic::mean_field_unconditional(a0, n0, p.nbar, p.chi, p.gamma, p.kappa, s.t);
        worst = std::max({worst, std::abs(n_num - n_ref) / std::abs(n_ref),
                          std::abs(a_num - a_ref) / std::abs(a_ref)});
    }
    return make_check("oracles", "moments <b^dag b>, <a> over kappa*t in [0,10]", worst <= 1e-4, worst,
                      1e-4, "max relative error");
}

std::vector<io::CheckResult> check_figure_conditions() {
    std::vector<io::CheckResult> out;
    const regimes::Verdict expected[] = {regimes::Verdict::fails, regimes::Verdict::borderline,
                                         regimes::Verdict::passes};
    const auto fig2 = figure_panels(2);
    const auto fig3 = figure_panels(3);
    for (int i = 0; i < 3; ++i) {
        const auto r2 = regimes::check_conditions(fig2[std::size_t(i)].params, 1);
        const auto v2 = regimes::classify(r2.adiabatic_ratio);
        out.push_back(make_check("conditions", fig2[std::size_t(i)].label + " adiabatic condition",
                                 v2 == expected[i], r2.adiabatic_ratio, double(i),
                                 std::string("verdict ") + regimes::to_string(v2) + ", expected " +
                                     regimes::to_string(expected[i])));
        const auto r3 = regimes::check_conditions(fig3[std::size_t(i)].params, 1);
        const auto v3 = regimes::classify(r3.fast_meas_ratio);
        out.push_back(make_check("conditions", fig3[std::size_t(i)].label + " fast-measurement condition",
                                 v3 == expected[i], r3.fast_meas_ratio, double(i),
                                 std::string("verdict ") + regimes::to_string(v3) + ", expected " +
                                     regimes::to_string(expected[i])));
    }
    const auto r1 = regimes::check_conditions(figure_panels(1).front().params, 1);
    out.push_back(make_check("conditions", "fig1 good-measurement limit", r1.adiabatic_ok && r1.fast_ok,
                             std::min(r1.adiabatic_ratio, r1.fast_meas_ratio), regimes::kConditionThreshold,
                             "adiabatic ratio " + num(r1.adiabatic_ratio) + ", fast ratio " +
                                 num(r1.fast_meas_ratio)));
    return out;
}

std::vector<io::CheckResult> check_feasibility_numbers() {
    std::vector<io::CheckResult> out;
    const double kappa = 0.3e6, chi = 10.0;
    const auto f = regimes::feasibility(0.3, 1.2e7, kappa, chi);
    out.push_back(make_check("conditions", "k_B T/(Q hbar) at T=300 mK, Q=1.2e7",
                             std::abs(f.thermal_rate - 3e3) <= 0.1 * 3e3, f.thermal_rate, 3e3,
                             "within 10%"));
    out.push_back(make_check("conditions", "kappa=0.3e6 /s satisfies the adiabatic condition",
                             f.adiabatic_ok, f.adiabatic_margin, regimes::kConditionThreshold));
    out.push_back(make_check("conditions", "chi=10 /s fails the fast-measurement condition", !f.fast_ok,
                             f.fast_meas_margin, regimes::kConditionThreshold));
    return out;
}

std::vector<io::CheckResult> check_record_formulas() {
    std::vector<io::CheckResult> out;
    {
        // chi^2 dt / kappa = 10
        const double chi = 1.0, kappa = 1.0, width = 10.0;
        const double d = record::number_resolution(chi, kappa, width);
        out.push_back(make_check("record", "Delta at chi^2 dt/kappa = 10", std::abs(d - 0.0125) < 1e-15,
                                 d, 0.0125));
    }
    {
        double worst = 0;
        for (double chi : {0.1, 1.0, 7.0})
            for (double kappa : {0.5, 10.0, 1e4})
                for (double width : {1e-3, 0.1, 2.0}) {
                    const double s = record::sharpness(regimes::measurement_rate(chi, kappa), width);
                    worst = std::max(worst, std::abs(s * record::number_resolution(chi, kappa, width) - 1.0));
                }
        out.push_back(make_check("record", "8 Gamma dt = 1/Delta", worst < 1e-12, worst, 0.0,
                                 "max |8 Gamma dt * Delta - 1| over sampled parameters"));
    }
    {
        // dt = tau/10 turns 8 Gamma dt >> 1 into Gamma >> rate up to the factor 0.8
        double worst = 0;
        for (double nbar : {0.5, 1.0, 3.0})
            for (int n_max : {1, 2, 5}) {
                const double gamma = 1.0 / nbar, meas = 40.0;
                const double rate = regimes::thermalization_rate(n_max, nbar, gamma);
                const double s = record::sharpness(meas, regimes::level_lifetime(n_max, nbar, gamma) / 10.0);
                worst = std::max(worst, std::abs(s - 0.8 * meas / rate));
            }
        out.push_back(make_check("record", "8 Gamma tau/10 = 0.8 Gamma/rate", worst < 1e-12, worst, 0.0));
    }
    {
        const double chi = 2.0, kappa = 3.0, width = 0.05;
        const double sigma = std::sqrt(kappa * width), mu = -2.0 * chi * 1 * width;
        const int N = 20000;
        const double lo = mu - 12 * sigma, h = 24 * sigma / N;
        double sum = 0;
        for (int i = 0; i <= N; ++i) {
            const double w = (i == 0 || i == N) ? 0.5 : 1.0;
            sum += w * record::likelihood(lo + i * h, 1, chi, kappa, width);
        }
        sum *= h;
        out.push_back(make_check("record", "integral of P(x|n)", std::abs(sum - 1) < 1e-8, sum, 1.0,
                                 "trapezoid over +-12 sigma"));
    }
    return out;
}

std::vector<io::CheckResult> verify_suite(const std::string& suite) {
    if (suite == "oracles") {
        std::vector<io::CheckResult> out;
        for (double kt : {0.5, 2.0, 5.0}) out.push_back(check_walls_oracle(kt));
        out.push_back(check_moment_oracle());
        return out;
    }
    if (suite == "conditions") {
        auto out = check_figure_conditions();
        for (auto& c : check_feasibility_numbers()) out.push_back(std::move(c));
        return out;
    }
    if (suite == "record") return check_record_formulas();
    throw InvalidArgument("unknown suite '" + suite + "' (oracles | conditions | record)");
}

// ---------------------------------------------------------------------------

ExperimentConfig parse_experiment(const io::Config& cfg) {
    ExperimentConfig e;
    io::Config rest = cfg;
    auto take = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = rest.find(key);
        if (it == rest.end()) return std::nullopt;
        std::string v = it->second;
        rest.erase(it);
        return v;
    };
    auto number = [&](const std::string& key) -> std::optional<double> {
        const auto v = take(key);
        if (!v) return std::nullopt;
        try {
            std::size_t used = 0;
            const double d = std::stod(*v, &used);
            if (used != v->size()) throw std::invalid_argument(key);
            return d;
        } catch (const std::logic_error&) {
            throw InvalidArgument("config: '" + key + "' is not a number: " + *v);
        }
    };

    if (auto m = take("mode")) e.mode = *m;
    if (e.mode != "full" && e.mode != "pointer" && e.mode != "adiabatic" && e.mode != "lindblad") {
        throw InvalidArgument("config: mode must be full, pointer, adiabatic or lindblad");
    }
    const std::string units = take("units").value_or("reduced");
    if (units != "reduced" && units != "absolute") {
        throw InvalidArgument("config: units must be reduced or absolute");
    }
    const auto nbar = number("nbar");
    const auto kappa = number("kappa");
    const auto meas = number("meas_rate");
    const auto chi = number("chi");
    const auto gamma = number("gamma");
    const auto t_final = number("t_final");
    if (!nbar || !kappa) throw InvalidArgument("config: nbar and kappa are required");
    if (bool(meas) == bool(chi)) throw InvalidArgument("config: give exactly one of meas_rate and chi");

    SimParams& p = e.params;
    if (units == "reduced") {
        if (gamma) throw InvalidArgument("config: gamma is fixed by nbar in reduced units");
        const double G = meas ? *meas : (*chi) * (*chi) / *kappa;
        p = SimParams::from_reduced_units(*nbar, *kappa, G, t_final.value_or(1.0));
        if (chi) p.chi = *chi;
    } else {
        if (!gamma) throw InvalidArgument("config: absolute units need gamma");
        p.nbar = *nbar;
        p.kappa = *kappa;
        p.gamma = *gamma;
        p.chi = chi ? *chi : std::sqrt(*meas * *kappa);
        p.t_final = t_final.value_or(1.0);
    }
    if (auto v = number("eta")) p.eta = *v;
    if (auto v = number("n_max")) e.n_max = int(*v);
    if (auto v = number("cavity_dim")) e.cavity_dim = int(*v);
    if (auto v = number("mech_dim")) e.mech_dim = int(*v);
    if (auto v = take("initial")) e.initial = *v;
    if (auto v = number("window")) e.window = *v;
    if (auto v = number("M")) e.M = std::size_t(*v);
    if (auto v = number("max_rows")) e.max_rows = std::size_t(*v);
    if (auto v = take("out")) e.out = *v;
    if (auto v = number("seed")) p.seed = std::uint64_t(*v);
    p.dt = default_dt(p, e.n_max);
    if (auto v = number("dt")) p.dt = *v;
    if (!rest.empty()) throw InvalidArgument("config: unknown key '" + rest.begin()->first + "'");
    if (e.M < 1) throw InvalidArgument("config: M must be >= 1");
    p.validate();
    return e;
}

std::vector<std::string> run_experiment(const ExperimentConfig& e, std::ostream& log) {
    const SimParams& p = e.params;
    for (const auto& w : p.validate()) log << "warning: " << w << '\n';
    const std::filesystem::path dir(e.out);
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;

    HilbertSpec spec = auto_size(p.chi, p.kappa, e.n_max);
    if (e.cavity_dim || e.mech_dim) {
        spec = HilbertSpec(e.cavity_dim.value_or(spec.cavity_dim()), e.mech_dim.value_or(spec.mech_dim()));
    }
    io::Metadata base = {
        {"mode", e.mode},         {"kappa", num(p.kappa)},     {"chi", num(p.chi)},
        {"Gamma", num(p.measurement_rate())}, {"gamma", num(p.gamma)}, {"Nbar", num(p.nbar)},
        {"eta", num(p.eta)},      {"dt", num(p.dt)},           {"t_final", num(p.t_final)},
        {"seed", std::to_string(p.seed)}, {"initial", e.initial}, {"trajectories", std::to_string(e.M)},
    };

    if (e.mode == "lindblad") {
        const DensityMatrix rho0 =
            tensor(fock_state(0, spec.cavity_dim()), initial_mechanics(e.initial, spec.mech_dim()));
        lindblad::EvolveOptions opts;
        opts.sample_every = int(std::max<std::size_t>(1, p.steps() / e.max_rows));
        const auto ev = lindblad::evolve(rho0, p, spec, opts);
        const Operator a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
        const Operator quad = a * cplx(0, -1) + a.adjoint() * cplx(0, 1);
        io::TrajectoryTable t;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (const auto& s : ev.samples) {
            const auto pops = sme::PhononDistribution::from_density(trace_out_cavity(s.rho, spec));
            t.time.push_back(s.t);
            t.mean_n.push_back(pops.mean());
            t.var_n.push_back(pops.variance());
            t.quad_phase.push_back(expectation(quad, s.rho).real());
            t.i_h_raw.push_back(nan);
            t.i_h_filtered.push_back(nan);
        }
        io::Metadata meta = base;
        meta.emplace_back("cavity_dim", std::to_string(spec.cavity_dim()));
        meta.emplace_back("mech_dim", std::to_string(spec.mech_dim()));
        std::ostringstream os;
        io::write_trajectory_csv(os, t, meta);
        write_file(dir / "lindblad.csv", os.str(), written);
    } else {
        stats::EnsembleSpec what;
        what.params = p;
        what.options.sample_every = int(std::max<std::size_t>(1, p.steps() / e.max_rows));
        if (e.mode == "full") {
            what.mode = sme::Mode::full;
            what.spec = spec;
            what.rho0 = tensor(fock_state(0, spec.cavity_dim()), initial_mechanics(e.initial, spec.mech_dim()));
        } else if (e.mode == "pointer") {
            what.mode = sme::Mode::pointer;
            what.p0 = initial_distribution(e.initial, spec.mech_dim() - 1);
        } else {
            what.mode = sme::Mode::adiabatic;
            what.p0 = initial_distribution(e.initial, e.n_max);
        }
        const auto trajectories = stats::run_trajectories(what, e.M, p.seed);
        const double w = e.window.value_or(regimes::level_lifetime(1, p.nbar, p.gamma) / 10.0);
        for (std::size_t k = 0; k < trajectories.size(); ++k) {
            const auto& rec = trajectories[k];
            const auto filtered = record::sliding_average(rec.times, rec.photocurrent, w);
            io::Metadata meta = base;
            meta.emplace_back("stream", std::to_string(rec.stream));
            meta.emplace_back("sample_dt", num(rec.sample_dt));
            meta.emplace_back("window", num(w));
            if (e.mode == "full") {
                meta.emplace_back("cavity_dim", std::to_string(spec.cavity_dim()));
                meta.emplace_back("mech_dim", std::to_string(spec.mech_dim()));
                meta.emplace_back("max_cavity_top", num(rec.max_cavity_top));
            } else if (e.mode == "pointer") {
                meta.emplace_back("mech_dim", std::to_string(spec.mech_dim()));
                meta.emplace_back("truncated_flux", num(rec.truncated_flux));
            } else {
                meta.emplace_back("clamped_mass", num(rec.clamped_mass));
                meta.emplace_back("truncated_flux", num(rec.truncated_flux));
            }
            std::ostringstream os;
            io::write_trajectory_csv(os, io::make_table(rec, filtered), meta);
            write_file(dir / ("trajectory_" + std::to_string(k) + ".csv"), os.str(), written);
        }
        if (e.M > 1) {
            const auto s = stats::summarize(trajectories);
            std::ostringstream os;
            for (const auto& [k, v] : base) os << "# " << k << '=' << v << '\n';
            os << "time,mean_of_mean_n,stderr_mean_n\n";
            for (std::size_t r = 0; r < s.times.size(); ++r) {
                os << num(s.times[r]) << ',' << num(s.mean_of_mean_n[r]) << ',' << num(s.stderr_mean_n[r])
                   << '\n';
            }
            write_file(dir / "ensemble.csv", os.str(), written);
        }
    }
    for (const auto& f : written) log << "wrote " << f << '\n';
    return written;
}

}  // namespace qjump::experiments
