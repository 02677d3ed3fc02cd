// Batch front door for the spin-locking spectroscopy toolkit.
//
// Subcommands: simulate, scan, rates, identify, selftest.
// Exit codes: 0 success, 1 config error, 2 numerical failure,
//             3 partial success (per-cell failures recorded in outputs).

#include "sls/sls.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitPartial = 3;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int workers = -1;          // <0: use config value
    std::string pulse_mode;    // empty: use config value
    std::string format = "csv";
};

void apply_overrides(sls::RunConfig& cfg, const CommonFlags& flags) {
    if (flags.workers >= 0) cfg.workers = flags.workers;
    if (!flags.pulse_mode.empty())
        cfg.pulse_mode =
            flags.pulse_mode == "finite" ? sls::PulseMode::FiniteRect : sls::PulseMode::Ideal;
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    if (cfg.output_dir.empty()) cfg.output_dir = "out";
}

ordered_json config_json(const sls::RunConfig& cfg) {
    ordered_json j;
    j["qubit"] = {{"freq_hz", cfg.qubit_freq_hz},
                  {"gamma1", cfg.qubit_gamma1},
                  {"gamma2", cfg.qubit_gamma2}};
    j["defects"] = ordered_json::array();
    for (const auto& d : cfg.defects)
        j["defects"].push_back({{"delta_hz", d.delta_hz},
                                {"gamma1", d.gamma1},
                                {"gamma2", d.gamma2},
                                {"coupling_hz", d.coupling_hz}});
    if (cfg.drive_rabi_hz) j["drive"] = {{"rabi_hz", *cfg.drive_rabi_hz}};
    j["pulse_mode"] = cfg.pulse_mode == sls::PulseMode::Ideal ? "ideal" : "finite";
    if (cfg.pulse_mode == sls::PulseMode::FiniteRect)
        j["pi_half_duration_s"] = cfg.pi_half_duration_s;
    j["workers"] = cfg.workers;
    j["seed"] = cfg.seed;
    return j;
}

ordered_json trace_json(const sls::DecayTrace& t) {
    return {{"tau_s", t.durations}, {"population", t.populations}};
}

ordered_json fit_json(const sls::ExpFit& f) {
    ordered_json j;
    j["status"] = f.status == sls::FitStatus::Ok
                      ? "ok"
                      : (f.status == sls::FitStatus::NonDecaying ? "non_decaying"
                                                                 : "not_converged");
    j["converged"] = f.converged;
    j["gamma_1rho"] = f.gamma;
    if (f.converged) j["t1rho_s"] = 1.0 / f.gamma;
    j["amplitude"] = f.amplitude;
    j["offset"] = f.offset;
    j["residual_rms"] = f.residual_rms;
    return j;
}

ordered_json invariants_json(const sls::DecayTrace& t) {
    double lo = 0.0, hi = 1.0;
    for (double v : t.populations) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    ordered_json j;
    j["population_min"] = lo;
    j["population_max"] = hi;
    j["populations_in_bounds"] = lo >= -1e-6 && hi <= 1.0 + 1e-6;
    j["max_trace_drift"] = t.max_trace_drift;
    j["max_hermiticity_error"] = t.max_hermiticity_error;
    j["min_state_eigenvalue"] = t.min_state_eigenvalue;
    j["state_invariants_ok"] = t.max_trace_drift <= 1e-9 &&
                               t.max_hermiticity_error <= 1e-9 &&
                               t.min_state_eigenvalue >= -1e-8;
    return j;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sls::config_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ordered_json features_json(double qubit_freq_hz,
                           const std::vector<sls::FeatureReport>& features) {
    ordered_json j;
    j["qubit_freq_hz"] = qubit_freq_hz;
    j["features"] = ordered_json::array();
    for (const auto& f : features) {
        ordered_json e;
        e["rabi_hz"] = f.rabi_at_feature / sls::two_pi;
        e["polarity"] = sls::to_string(f.polarity);
        if (f.inferred_tls_frequency)
            e["tls_freq_hz"] = *f.inferred_tls_frequency / sls::two_pi;
        e["t1rho_s"] = f.t1rho_at_feature;
        j["features"].push_back(e);
    }
    return j;
}

int cmd_simulate(const CommonFlags& flags) {
    sls::RunConfig cfg = sls::load_config(flags.config_path);
    apply_overrides(cfg, flags);
    if (!cfg.drive_rabi_hz)
        throw sls::config_error("simulate needs [drive] rabi_hz");
    if (!cfg.duration_grid_s)
        throw sls::config_error("simulate needs [grid] duration_start_s/stop/count");

    const sls::SystemModel model = sls::to_system_model(cfg);
    std::vector<sls::DefectParams> defects;
    for (const auto& d : cfg.defects) defects.push_back(sls::to_defect_params(d));
    const std::vector<double> durations = cfg.duration_grid_s->points();
    const double rabi = sls::two_pi * *cfg.drive_rabi_hz;

    sls::PulseSequence seq{sls::SequenceKind::S1, rabi, durations, cfg.pulse_mode,
                           cfg.pi_half_duration_s};
    const sls::DecayTrace up = sls::run_composed(model, defects, seq);
    seq.kind = sls::SequenceKind::S2;
    const sls::DecayTrace down = sls::run_composed(model, defects, seq);
    const sls::DecayTrace p = sls::phase_cycle(up, down);
    const sls::ExpFit fit = sls::fit_exponential(p);

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    if (flags.format == "csv") {
        sls::write_trace_csv(out / "d_up.csv", up);
        sls::write_trace_csv(out / "d_down.csv", down);
        sls::write_trace_csv(out / "p.csv", p);
    } else {
        ordered_json traces;
        traces["d_up"] = trace_json(up);
        traces["d_down"] = trace_json(down);
        traces["p"] = trace_json(p);
        write_json(out / "traces.json", traces);
    }

    ordered_json sidecar;
    sidecar["config"] = config_json(cfg);
    sidecar["rabi_hz"] = *cfg.drive_rabi_hz;
    sidecar["fit_of_p"] = fit_json(fit);
    const double up_steady = sls::steady_level(up);
    const double down_steady = sls::steady_level(down);
    sidecar["steady_d_up"] = up_steady;
    sidecar["steady_d_down"] = down_steady;
    sidecar["polarity"] = sls::to_string(sls::classify_polarity(
        std::clamp(up_steady, 0.0, 1.0), std::clamp(down_steady, 0.0, 1.0)));
    sidecar["invariants"] = invariants_json(p);
    write_json(out / "simulate.json", sidecar);
    return kExitOk;
}

int cmd_scan(const CommonFlags& flags) {
    sls::RunConfig cfg = sls::load_config(flags.config_path);
    apply_overrides(cfg, flags);
    if (!cfg.rabi_grid_hz)
        throw sls::config_error("scan needs [grid] rabi_start_hz/stop/count");
    if (!cfg.duration_grid_s)
        throw sls::config_error("scan needs [grid] duration_start_s/stop/count");

    const sls::SystemModel model = sls::to_system_model(cfg);
    std::vector<sls::DefectParams> defects;
    for (const auto& d : cfg.defects) defects.push_back(sls::to_defect_params(d));
    const std::vector<double> rabi_hz = cfg.rabi_grid_hz->points();
    const std::vector<double> durations = cfg.duration_grid_s->points();
    std::vector<double> rabi_grid;
    for (double f : rabi_hz) rabi_grid.push_back(sls::two_pi * f);

    const sls::ScanResult result =
        sls::scan(model, defects, rabi_grid, durations, cfg.pulse_mode,
                  cfg.pi_half_duration_s, cfg.workers);
    const std::vector<sls::FeatureReport> features = sls::find_features(result);

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    if (flags.format == "csv") {
        sls::write_map_csv(out / "d_up.csv", rabi_hz, durations, result.d_up);
        sls::write_map_csv(out / "d_down.csv", rabi_hz, durations, result.d_down);
        sls::write_map_csv(out / "p.csv", rabi_hz, durations, result.p);
        sls::write_fits_csv(out / "fits.csv", rabi_hz, result.fits);
    } else {
        ordered_json maps;
        maps["rabi_hz"] = rabi_hz;
        maps["tau_s"] = durations;
        maps["d_up"] = result.d_up;
        maps["d_down"] = result.d_down;
        maps["p"] = result.p;
        ordered_json fits = ordered_json::array();
        for (std::size_t i = 0; i < result.fits.size(); ++i) {
            ordered_json f = fit_json(result.fits[i].fit);
            f["rabi_hz"] = rabi_hz[i];
            fits.push_back(f);
        }
        maps["fits"] = fits;
        write_json(out / "maps.json", maps);
    }
    write_json(out / "features.json", features_json(cfg.qubit_freq_hz, features));

    ordered_json sidecar;
    sidecar["config"] = config_json(cfg);
    sidecar["rabi_grid_hz"] = rabi_hz;
    sidecar["failures"] = result.failures;
    sidecar["n_features"] = features.size();
    write_json(out / "scan.json", sidecar);

    return result.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_rates(const CommonFlags& flags) {
    sls::RunConfig cfg = sls::load_config(flags.config_path);
    apply_overrides(cfg, flags);
    if (!cfg.rates)
        throw sls::config_error("rates needs a [rates] section");

    fs::path table_path = cfg.rates->table_path;
    if (table_path.is_relative())
        table_path = fs::path(flags.config_path).parent_path() / table_path;
    const sls::T1Table table = sls::load_t1_table(table_path);
    const sls::RelaxationSpectrum spectrum = sls::to_spectrum(table);
    const double omega_q = sls::two_pi * cfg.qubit_freq_hz;
    const std::vector<double> rabi_hz = cfg.rates->rabi_hz.points();

    std::vector<double> kept_rabi_hz, gamma_prime;
    std::vector<std::string> skipped;
    for (double f : rabi_hz) {
        try {
            const double gp = sls::gamma_prime_one_sided(spectrum, omega_q, sls::two_pi * f);
            kept_rabi_hz.push_back(f);
            gamma_prime.push_back(gp);
        } catch (const sls::out_of_domain_error&) {
            skipped.push_back("rabi_hz " + sls::format_double(f) +
                              ": sideband outside the T1 table domain");
        }
    }

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    {
        std::ofstream file(out / "rates.csv", std::ios::binary);
        if (!file) throw sls::config_error("cannot write rates.csv");
        file << "rabi_hz,gamma_prime,gamma_prime_half_inverse_s\n";
        for (std::size_t i = 0; i < kept_rabi_hz.size(); ++i)
            file << sls::format_double(kept_rabi_hz[i]) << ','
                 << sls::format_double(gamma_prime[i]) << ','
                 << sls::format_double(2.0 / gamma_prime[i]) << '\n';
    }
    ordered_json sidecar;
    sidecar["qubit_freq_hz"] = cfg.qubit_freq_hz;
    sidecar["table"] = table_path.string();
    sidecar["rows_kept"] = kept_rabi_hz.size();
    sidecar["skipped"] = skipped;
    write_json(out / "rates.json", sidecar);
    return skipped.empty() ? kExitOk : kExitPartial;
}

struct IdentifyFlags {
    std::string features_path;
    std::string detuned_features_path;
    double delta_freq_hz = 0.0;
    double qubit_freq_hz = 0.0;  // 0: take from the features file
    double match_tol_hz = 1e6;
    std::string out_dir = "out";
};

struct ParsedFeature {
    double rabi_hz = 0.0;
    sls::Polarity polarity = sls::Polarity::Undetermined;
    double t1rho_s = 0.0;
};

std::pair<double, std::vector<ParsedFeature>> load_features(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw sls::config_error("cannot open features file: " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw sls::config_error(path.string() + ": " + e.what());
    }
    std::vector<ParsedFeature> features;
    for (const auto& e : j.at("features")) {
        ParsedFeature f;
        f.rabi_hz = e.at("rabi_hz").get<double>();
        const std::string pol = e.at("polarity").get<std::string>();
        f.polarity = pol == "positive"   ? sls::Polarity::Positive
                     : pol == "negative" ? sls::Polarity::Negative
                                         : sls::Polarity::Undetermined;
        if (e.contains("t1rho_s")) f.t1rho_s = e.at("t1rho_s").get<double>();
        features.push_back(f);
    }
    return {j.at("qubit_freq_hz").get<double>(), features};
}

int cmd_identify(const IdentifyFlags& flags) {
    const auto [file_freq_hz, base] = load_features(flags.features_path);
    const double qubit_freq_hz =
        flags.qubit_freq_hz > 0.0 ? flags.qubit_freq_hz : file_freq_hz;

    std::vector<ParsedFeature> detuned;
    double detuned_freq_hz = 0.0;
    const bool have_detuned = !flags.detuned_features_path.empty();
    if (have_detuned) {
        auto [freq, feats] = load_features(flags.detuned_features_path);
        detuned = std::move(feats);
        detuned_freq_hz = qubit_freq_hz + flags.delta_freq_hz;
        (void)freq;
    }

    auto infer_hz = [](double freq_hz, const ParsedFeature& f) {
        return freq_hz + (f.polarity == sls::Polarity::Positive ? f.rabi_hz : -f.rabi_hz);
    };

    ordered_json report;
    report["qubit_freq_hz"] = qubit_freq_hz;
    if (have_detuned) report["delta_freq_hz"] = flags.delta_freq_hz;
    report["defects"] = ordered_json::array();
    for (const auto& f : base) {
        ordered_json e;
        e["rabi_hz"] = f.rabi_hz;
        e["polarity"] = sls::to_string(f.polarity);
        if (f.t1rho_s > 0.0) e["t1rho_s"] = f.t1rho_s;
        if (f.polarity != sls::Polarity::Undetermined) {
            const double tls_hz = infer_hz(qubit_freq_hz, f);
            e["tls_freq_hz"] = tls_hz;
            if (have_detuned) {
                bool consistent = false;
                double matched_rabi = 0.0;
                for (const auto& d : detuned) {
                    if (d.polarity != f.polarity) continue;
                    const double d_tls_hz = infer_hz(detuned_freq_hz, d);
                    if (std::abs(d_tls_hz - tls_hz) <= flags.match_tol_hz) {
                        consistent = true;
                        matched_rabi = d.rabi_hz;
                        break;
                    }
                }
                e["consistent_at_detuned_bias"] = consistent;
                if (consistent) e["matched_detuned_rabi_hz"] = matched_rabi;
            }
        }
        report["defects"].push_back(e);
    }

    fs::create_directories(flags.out_dir);
    write_json(fs::path(flags.out_dir) / "identify.json", report);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// selftest: quick end-to-end invariant suite

struct SelfTest {
    int failures = 0;

    void check(bool ok, const std::string& name, const std::string& detail = {}) {
        std::cout << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << '\n';
        if (!ok) ++failures;
    }
};

sls::SystemModel random_model(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> freq(0.0, 100e6);
    std::uniform_real_distribution<double> sdelta(-100e6, 100e6);
    std::uniform_real_distribution<double> coupling(0.0, 1e6);
    std::uniform_real_distribution<double> rate(0.0, 1e7);
    sls::SystemModel m;
    m.qubit.omega_q = sls::two_pi * 4.33e9;
    m.qubit.gamma1 = rate(rng);
    m.qubit.gamma2 = rate(rng);
    m.drive.rabi = sls::two_pi * freq(rng);
    sls::DefectParams d;
    d.delta_tls = sls::two_pi * sdelta(rng);
    d.gamma1 = rate(rng);
    d.gamma2 = rate(rng);
    d.coupling_g = sls::two_pi * coupling(rng);
    m.defect = d;
    return m;
}

int cmd_selftest(int workers, std::uint64_t seed) {
    SelfTest t;
    std::mt19937_64 rng(seed);

    {
        bool hermitian = true, traceless = true;
        for (int i = 0; i < 200; ++i) {
            const sls::SystemModel m = random_model(rng);
            const sls::Matrix h = sls::build_rotating_hamiltonian(m);
            hermitian = hermitian && (h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0;
            traceless = traceless && std::abs(h.trace()) < 1e-6;
        }
        t.check(hermitian, "rotating-frame Hamiltonian is Hermitian");
        t.check(traceless, "rotating-frame Hamiltonian is traceless");
    }
    {
        bool ok = true;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 10; ++i) {
            sls::Matrix a(3, 3), b(2, 2);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) a(r, c) = sls::Complex(u(rng), u(rng));
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) b(r, c) = sls::Complex(u(rng), u(rng));
            const sls::Complex lhs = sls::kron(a, b).trace();
            const sls::Complex rhs = a.trace() * b.trace();
            ok = ok && std::abs(lhs - rhs) < 1e-12;
        }
        t.check(ok, "trace(kron(a,b)) = trace(a) trace(b)");
    }
    {
        bool ok = true;
        std::uniform_real_distribution<double> u(-0.35, 0.35);
        for (int i = 0; i < 5; ++i) {
            sls::Matrix a(4, 4);
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) a(r, c) = sls::Complex(u(rng), u(rng));
            const sls::Matrix residual =
                sls::expm(a) * sls::expm(-a) - sls::identity(4);
            ok = ok && residual.cwiseAbs().maxCoeff() < 1e-10;
        }
        t.check(ok, "expm(A) expm(-A) = I");
    }
    {
        bool ok = true;
        for (int i = 0; i < 100; ++i) {
            const sls::SystemModel m = random_model(rng);
            const sls::Matrix h = sls::build_rotating_hamiltonian(m);
            const auto cs = sls::build_collapse_operators(m);
            const sls::Matrix rho = sls::initial_state(sls::SequenceKind::S1, 4);
            ok = ok && std::abs(sls::lindblad_rhs(rho, h, cs).trace()) < 1e-6;
        }
        t.check(ok, "lindblad_rhs is traceless");
    }
    {
        double worst = 0.0;
        sls::IntegratorOptions opt;
        opt.steps_per_period = 2000.0;
        for (int i = 0; i < 3; ++i) {
            const sls::SystemModel m = random_model(rng);
            const sls::Matrix h = sls::build_rotating_hamiltonian(m);
            const auto cs = sls::build_collapse_operators(m);
            const sls::Matrix rho0 = sls::initial_state(sls::SequenceKind::S1, 4);
            const double tf = 0.5e-6;
            sls::IntegratorOptions run = opt;
            run.keep_states = true;
            const sls::Trajectory traj = sls::evolve(rho0, h, cs, tf, {tf}, run);
            const sls::Matrix exact = sls::propagator_oracle(rho0, h, cs, tf);
            worst = std::max(worst,
                             (traj.states.back() - exact).cwiseAbs().maxCoeff());
        }
        t.check(worst < 1e-8, "RK4 evolution matches superoperator propagator",
                "max |diff| = " + sls::format_double(worst));
    }
    {
        std::vector<double> tau, y;
        for (int i = 0; i < 40; ++i) {
            const double ti = 2.5e-6 * i;
            tau.push_back(ti);
            y.push_back(0.45 + 0.52 * std::exp(-3.7e4 * ti));
        }
        const sls::ExpFit fit = sls::fit_exponential(tau, y);
        const bool ok = fit.converged && std::abs(fit.gamma / 3.7e4 - 1.0) < 1e-6;
        t.check(ok, "exponential fit recovers synthetic rate",
                "gamma = " + sls::format_double(fit.gamma));
    }
    {
        sls::SystemModel m;
        m.qubit.omega_q = sls::two_pi * 4.33e9;
        m.qubit.gamma1 = 1.5e4;
        sls::DefectParams d;
        d.delta_tls = sls::two_pi * 20e6;
        d.gamma1 = 1e6;
        d.coupling_g = sls::two_pi * 28e3;
        std::vector<double> durations;
        for (int i = 0; i <= 8; ++i) durations.push_back(2.5e-6 * i);
        std::vector<double> grid;
        for (int i = 0; i < 4; ++i) grid.push_back(sls::two_pi * (16e6 + 2e6 * i));
        const sls::ScanResult one = sls::scan(m, {d}, grid, durations,
                                              sls::PulseMode::Ideal, 0.0, 1);
        const sls::ScanResult many = sls::scan(m, {d}, grid, durations,
                                               sls::PulseMode::Ideal, 0.0,
                                               workers > 0 ? workers : 2);
        bool identical = true;
        for (std::size_t i = 0; i < grid.size(); ++i)
            identical = identical && one.p[i] == many.p[i] &&
                        one.d_up[i] == many.d_up[i] && one.d_down[i] == many.d_down[i];
        t.check(identical, "scan output is independent of worker count");
    }

    std::cout << (t.failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
    return t.failures == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-locking noise-spectroscopy simulator and analysis toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    IdentifyFlags identify_flags;
    int selftest_workers = 0;
    std::uint64_t selftest_seed = 12345;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", flags.config_path, "run configuration file");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", flags.out_dir, "output directory");
        cmd->add_option("--workers", flags.workers, "worker threads (0 = hardware)");
        cmd->add_option("--pulse-mode", flags.pulse_mode, "ideal | finite")
            ->check(CLI::IsMember({"ideal", "finite"}));
        cmd->add_option("--format", flags.format, "csv | json")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* simulate = app.add_subcommand("simulate", "single-Rabi decay traces");
    add_common(simulate, true);
    CLI::App* scan = app.add_subcommand("scan", "2-D (Rabi x duration) scan");
    add_common(scan, true);
    CLI::App* rates = app.add_subcommand("rates", "sideband rate estimates from a T1 table");
    add_common(rates, true);

    CLI::App* identify = app.add_subcommand("identify", "defect frequencies from features");
    identify->add_option("--features", identify_flags.features_path, "features.json from scan")
        ->required()
        ->check(CLI::ExistingFile);
    identify->add_option("--detuned-features", identify_flags.detuned_features_path,
                         "features.json from a detuned-bias scan")
        ->check(CLI::ExistingFile);
    identify->add_option("--delta-freq-hz", identify_flags.delta_freq_hz,
                         "qubit frequency detuning of the second scan (Hz)");
    identify->add_option("--qubit-freq-hz", identify_flags.qubit_freq_hz,
                         "override the qubit frequency (Hz)");
    identify->add_option("--match-tol-hz", identify_flags.match_tol_hz,
                         "defect frequency matching tolerance (Hz)");
    identify->add_option("--out", identify_flags.out_dir, "output directory");

    CLI::App* selftest = app.add_subcommand("selftest", "run the invariant suite");
    selftest->add_option("--workers", selftest_workers, "worker threads");
    selftest->add_option("--seed", selftest_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(flags);
        if (scan->parsed()) return cmd_scan(flags);
        if (rates->parsed()) return cmd_rates(flags);
        if (identify->parsed()) return cmd_identify(identify_flags);
        if (selftest->parsed()) return cmd_selftest(selftest_workers, selftest_seed);
    } catch (const sls::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const sls::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
