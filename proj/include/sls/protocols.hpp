#pragma once

// Executable spin-locking protocols: S1/S2 sequences with ideal or finite
// rectangular pi/2 pulses, phase cycling, and the 2-D scan engine over
// (Rabi frequency x spin-lock duration).

#include "sls/analysis.hpp"
#include "sls/dynamics.hpp"
#include "sls/model.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace sls {

enum class PulseMode { Ideal, FiniteRect };

struct PulseSequence {
    SequenceKind kind = SequenceKind::S1;
    double rabi = 0.0;               // rad/s, overrides the model's drive
    std::vector<double> durations;   // spin-lock lengths (s), sorted
    PulseMode pulse_mode = PulseMode::Ideal;
    double pi_half_duration = 0.0;   // s, required > 0 for FiniteRect
};

inline void validate(const PulseSequence& seq) {
    if (seq.rabi < 0.0)
        throw std::invalid_argument("sequence: Rabi frequency must be nonnegative");
    if (seq.durations.empty())
        throw std::invalid_argument("sequence: no spin-lock durations");
    if (!std::is_sorted(seq.durations.begin(), seq.durations.end()) ||
        seq.durations.front() < 0.0)
        throw std::invalid_argument("sequence: durations must be sorted and nonnegative");
    if (seq.pulse_mode == PulseMode::FiniteRect && !(seq.pi_half_duration > 0.0))
        throw std::invalid_argument("sequence: FiniteRect needs pi_half_duration > 0");
}

enum class TraceChannel { DUp, DDown, PhaseCycled };

struct DecayTrace {
    double rabi = 0.0;               // rad/s
    std::vector<double> durations;   // s
    std::vector<double> populations; // excited-state probability
    TraceChannel channel = TraceChannel::DUp;
    // Integrator invariant diagnostics, aggregated over all segments.
    double max_trace_drift = 0.0;
    double max_hermiticity_error = 0.0;
    double min_state_eigenvalue = 1.0;
};

namespace detail {

inline void absorb_diagnostics(DecayTrace& trace, const Trajectory& traj) {
    trace.max_trace_drift = std::max(trace.max_trace_drift, traj.max_trace_drift);
    trace.max_hermiticity_error =
        std::max(trace.max_hermiticity_error, traj.max_hermiticity_error);
    trace.min_state_eigenvalue =
        std::min(trace.min_state_eigenvalue, traj.min_eigenvalue);
}

}  // namespace detail

namespace detail {

// Spec step rule: omega_fast = max(Omega_R, |Delta_TLS|, 2g).
inline double model_scale_hint(const SystemModel& m) {
    double hint = m.drive.rabi;
    if (m.defect) {
        hint = std::max(hint, std::abs(m.defect->delta_tls));
        hint = std::max(hint, 2.0 * m.defect->coupling_g);
    }
    return hint;
}

// Rotating-frame Hamiltonian during a y-phase rectangular pulse: the drive
// term swaps to +/-(Omega_p/2) sigma_y^(1); defect and coupling terms stay.
inline Matrix pulse_hamiltonian(const SystemModel& m, SequenceKind kind,
                                double omega_pulse) {
    const double sign = kind == SequenceKind::S1 ? -1.0 : 1.0;
    if (!m.defect)
        return sign * 0.5 * omega_pulse * sigma_y();
    const Matrix i2 = identity(2);
    return sign * 0.5 * omega_pulse * kron(sigma_y(), i2) +
           0.5 * m.defect->delta_tls * kron(i2, sigma_z()) +
           m.defect->coupling_g *
               (kron(sigma_plus(), sigma_minus()) + kron(sigma_minus(), sigma_plus()));
}

inline Matrix ground_product_state(int dim) {
    Matrix q = Matrix::Zero(2, 2);
    q(1, 1) = 1.0;  // qubit ground |1>
    return dim == 2 ? q : kron(q, defect_ground_state());
}

}  // namespace detail

// Runs one S1/S2 sequence over the duration grid. Ideal mode absorbs the
// pi/2 rotations into state preparation and the (1 +/- <sigma_x>)/2 readout
// mapping; FiniteRect mode evolves the first and last segments under the
// y-drive pulse Hamiltonian with dissipation active and reads out the
// excited-state probability directly.
inline DecayTrace run_sequence(SystemModel m, const PulseSequence& seq,
                               const IntegratorOptions& base_opt = {}) {
    validate(seq);
    m.drive.rabi = seq.rabi;
    validate(m);

    const int dim = dimension(m);
    const Matrix h_sl = build_rotating_hamiltonian(m);
    const std::vector<Matrix> collapses = build_collapse_operators(m);

    IntegratorOptions opt = base_opt;
    opt.scale_hint = std::max(opt.scale_hint, detail::model_scale_hint(m));

    DecayTrace trace;
    trace.rabi = seq.rabi;
    trace.durations = seq.durations;
    trace.channel = seq.kind == SequenceKind::S1 ? TraceChannel::DUp : TraceChannel::DDown;
    const double tau_max = seq.durations.back();

    if (seq.pulse_mode == PulseMode::Ideal) {
        Trajectory traj =
            evolve(initial_state(seq.kind, dim), h_sl, collapses, tau_max, seq.durations, opt);
        const double sign = seq.kind == SequenceKind::S1 ? 1.0 : -1.0;
        for (double sx : traj.sigma_x_qubit)
            trace.populations.push_back(0.5 * (1.0 + sign * sx));
        detail::absorb_diagnostics(trace, traj);
        return trace;
    }

    const double t_pulse = seq.pi_half_duration;
    const double omega_pulse = 0.5 * std::numbers::pi / t_pulse;
    const Matrix h_pulse = detail::pulse_hamiltonian(m, seq.kind, omega_pulse);
    IntegratorOptions pulse_opt = opt;
    pulse_opt.scale_hint = std::max(opt.scale_hint, omega_pulse);
    pulse_opt.keep_states = true;

    Trajectory prep = evolve(detail::ground_product_state(dim), h_pulse, collapses,
                             t_pulse, {t_pulse}, pulse_opt);
    detail::absorb_diagnostics(trace, prep);

    IntegratorOptions sl_opt = opt;
    sl_opt.keep_states = true;
    Trajectory locked =
        evolve(prep.states.back(), h_sl, collapses, tau_max, seq.durations, sl_opt);
    detail::absorb_diagnostics(trace, locked);

    const Matrix excited_proj = dim == 2
                                    ? Matrix(0.5 * (identity(2) + sigma_z()))
                                    : Matrix(kron(0.5 * (identity(2) + sigma_z()), identity(2)));
    for (const Matrix& state : locked.states) {
        Trajectory readout =
            evolve(state, h_pulse, collapses, t_pulse, {t_pulse}, pulse_opt);
        detail::absorb_diagnostics(trace, readout);
        trace.populations.push_back(
            (excited_proj * readout.states.back()).trace().real());
    }
    return trace;
}

// P = (D_up + D_down)/2 on identical grids.
inline DecayTrace phase_cycle(const DecayTrace& up, const DecayTrace& down) {
    if (up.rabi != down.rabi || up.durations != down.durations)
        throw std::invalid_argument("phase_cycle: grid mismatch");
    if (up.populations.size() != down.populations.size())
        throw std::invalid_argument("phase_cycle: trace length mismatch");
    DecayTrace p;
    p.rabi = up.rabi;
    p.durations = up.durations;
    p.channel = TraceChannel::PhaseCycled;
    p.populations.resize(up.populations.size());
    for (std::size_t i = 0; i < p.populations.size(); ++i)
        p.populations[i] = 0.5 * (up.populations[i] + down.populations[i]);
    p.max_trace_drift = std::max(up.max_trace_drift, down.max_trace_drift);
    p.max_hermiticity_error =
        std::max(up.max_hermiticity_error, down.max_hermiticity_error);
    p.min_state_eigenvalue =
        std::min(up.min_state_eigenvalue, down.min_state_eigenvalue);
    return p;
}

inline ExpFit fit_exponential(const DecayTrace& trace, FitForm form = FitForm::FreeOffset) {
    return fit_exponential(trace.durations, trace.populations, form);
}

// Long-tau steady level: mean over the final 20% of the duration grid.
inline double steady_level(const std::vector<double>& populations) {
    if (populations.empty())
        throw std::invalid_argument("steady_level: empty trace");
    const std::size_t n = populations.size();
    const std::size_t n_tail = std::max<std::size_t>(1, n / 5);
    double s = 0.0;
    for (std::size_t i = n - n_tail; i < n; ++i) s += populations[i];
    return s / static_cast<double>(n_tail);
}

inline double steady_level(const DecayTrace& trace) {
    return steady_level(trace.populations);
}

// Composes the response of several independently simulated qubit-defect
// pairs: per-pair deviations of the populations from the defect-free
// baseline are summed onto the baseline and clipped to [0, 1]. With a
// single defect this reduces exactly to the pair simulation; defects are
// assumed spectrally isolated.
inline DecayTrace run_composed(const SystemModel& tmpl,
                               const std::vector<DefectParams>& defects,
                               const PulseSequence& seq,
                               const IntegratorOptions& opt = {}) {
    SystemModel base = tmpl;
    base.defect.reset();
    DecayTrace baseline = run_sequence(base, seq, opt);
    if (defects.empty()) return baseline;

    DecayTrace combined = baseline;
    for (const DefectParams& d : defects) {
        SystemModel pair = tmpl;
        pair.defect = d;
        DecayTrace t = run_sequence(pair, seq, opt);
        for (std::size_t k = 0; k < combined.populations.size(); ++k)
            combined.populations[k] += t.populations[k] - baseline.populations[k];
        combined.max_trace_drift = std::max(combined.max_trace_drift, t.max_trace_drift);
        combined.max_hermiticity_error =
            std::max(combined.max_hermiticity_error, t.max_hermiticity_error);
        combined.min_state_eigenvalue =
            std::min(combined.min_state_eigenvalue, t.min_state_eigenvalue);
    }
    for (double& v : combined.populations) v = std::clamp(v, 0.0, 1.0);
    return combined;
}

struct ColumnFit {
    double rabi = 0.0;  // rad/s
    ExpFit fit;
};

struct ScanResult {
    double omega_q = 0.0;              // rad/s, carried for feature inference
    std::vector<double> rabi_grid;     // rad/s
    std::vector<double> duration_grid; // s
    // Population maps indexed [rabi][duration].
    std::vector<std::vector<double>> d_up, d_down, p;
    std::vector<ColumnFit> fits;       // per-column fit of the phase-cycled P
    std::vector<std::string> failures; // per-column notes, non-fatal
};

// 2-D scan over (Rabi frequency x duration). Each qubit-defect pair is
// simulated independently; with several defects the per-pair deviations of
// the populations from the defect-free baseline are summed onto the
// baseline and clipped to [0, 1] (defects are assumed spectrally
// isolated). Columns fan out across workers; results are keyed by grid
// index so the output is identical for any worker count.
inline ScanResult scan(const SystemModel& tmpl, const std::vector<DefectParams>& defects,
                       const std::vector<double>& rabi_grid,
                       const std::vector<double>& duration_grid,
                       PulseMode mode = PulseMode::Ideal, double pi_half_duration = 0.0,
                       int workers = 0, const IntegratorOptions& opt = {}) {
    if (rabi_grid.empty() || duration_grid.empty())
        throw std::invalid_argument("scan: empty grid");

    ScanResult result;
    result.omega_q = tmpl.qubit.omega_q;
    result.rabi_grid = rabi_grid;
    result.duration_grid = duration_grid;
    const std::size_t n_rabi = rabi_grid.size();
    result.d_up.assign(n_rabi, {});
    result.d_down.assign(n_rabi, {});
    result.p.assign(n_rabi, {});
    result.fits.assign(n_rabi, {});
    std::vector<std::string> column_failures(n_rabi);

    auto compute_column = [&](std::size_t i) {
        try {
            const double rabi = rabi_grid[i];
            result.d_up[i] =
                run_composed(tmpl, defects,
                             {SequenceKind::S1, rabi, duration_grid, mode, pi_half_duration},
                             opt)
                    .populations;
            result.d_down[i] =
                run_composed(tmpl, defects,
                             {SequenceKind::S2, rabi, duration_grid, mode, pi_half_duration},
                             opt)
                    .populations;
            std::vector<double> p(duration_grid.size());
            for (std::size_t k = 0; k < p.size(); ++k)
                p[k] = 0.5 * (result.d_up[i][k] + result.d_down[i][k]);
            result.p[i] = p;
            result.fits[i].rabi = rabi;
            result.fits[i].fit = fit_exponential(duration_grid, p, FitForm::FreeOffset);
            if (result.fits[i].fit.status != FitStatus::Ok) {
                column_failures[i] =
                    "column " + std::to_string(i) + ": fit " +
                    (result.fits[i].fit.status == FitStatus::NonDecaying ? "non-decaying"
                                                                         : "not converged");
            }
        } catch (const numerical_error& e) {
            const auto nan = std::numeric_limits<double>::quiet_NaN();
            result.d_up[i].assign(duration_grid.size(), nan);
            result.d_down[i].assign(duration_grid.size(), nan);
            result.p[i].assign(duration_grid.size(), nan);
            result.fits[i].rabi = rabi_grid[i];
            column_failures[i] = "column " + std::to_string(i) + ": " + e.what();
        }
    };

    int n_workers = workers > 0 ? workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(n_rabi)));
    if (n_workers == 1) {
        for (std::size_t i = 0; i < n_rabi; ++i) compute_column(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_rabi) return;
                try {
                    compute_column(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    for (std::string& note : column_failures)
        if (!note.empty()) result.failures.push_back(std::move(note));
    return result;
}

inline std::vector<FeatureReport> find_features(const ScanResult& scan_result,
                                                const FeatureSearchParams& params = {}) {
    const std::size_t n = scan_result.rabi_grid.size();
    std::vector<double> t1rho(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> up(n, 0.0), down(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (scan_result.fits[i].fit.converged)
            t1rho[i] = 1.0 / scan_result.fits[i].fit.gamma;
        if (!scan_result.d_up[i].empty() && std::isfinite(scan_result.d_up[i].back())) {
            up[i] = steady_level(scan_result.d_up[i]);
            down[i] = steady_level(scan_result.d_down[i]);
        }
    }
    return find_features(scan_result.omega_q, scan_result.rabi_grid, t1rho, up, down,
                         params);
}

}  // namespace sls
