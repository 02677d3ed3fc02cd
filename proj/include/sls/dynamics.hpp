#pragma once

// Lindblad master-equation time evolution. Two independent routes are
// provided: a fixed-step classical RK4 integrator (evolve) built on the
// commutator-form right-hand side, and an exact superoperator-exponential
// propagator (propagator_oracle) built by vectorization. They share no
// code beyond the matrix substrate and are tested against each other.

#include "sls/linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace sls {

class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Trajectory {
    std::vector<double> times;          // s, strictly increasing
    std::vector<double> sigma_x_qubit;  // <sigma_x^(1)> at each time
    std::vector<Matrix> states;         // filled when keep_states is set
    double max_trace_drift = 0.0;       // |tr(rho)-1| seen at samples
    double max_hermiticity_error = 0.0; // max-norm of rho - rho^dag at samples
    double min_eigenvalue = 0.0;        // smallest state eigenvalue at samples
};

struct IntegratorOptions {
    double steps_per_period = 50.0;   // RK4 steps per fastest Hamiltonian period
    double rate_step_fraction = 0.01; // h <= fraction / (largest collapse rate)
    double scale_hint = 0.0;          // extra lower bound on omega_fast (rad/s)
    std::int64_t max_steps = 50'000'000;
    double trace_tolerance = 1e-6;
    bool keep_states = false;
};

inline void check_density_matrix(const Matrix& rho, double herm_tol = 1e-9,
                                 double trace_tol = 1e-9) {
    if (rho.rows() != rho.cols())
        throw std::invalid_argument("density matrix must be square");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > herm_tol)
        throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > trace_tol || std::abs(rho.trace().imag()) > trace_tol)
        throw std::invalid_argument("density matrix trace is not 1");
}

// dRho/dt = -i[H, rho] + sum_k (c rho c^dag - 1/2 {c^dag c, rho}).
inline Matrix lindblad_rhs(const Matrix& rho, const Matrix& h,
                           const std::vector<Matrix>& collapses) {
    if (h.rows() != h.cols() || h.rows() != rho.rows() || rho.rows() != rho.cols())
        throw std::invalid_argument("lindblad_rhs: dimension mismatch");
    const Complex i(0.0, 1.0);
    Matrix out = -i * (h * rho - rho * h);
    for (const Matrix& c : collapses) {
        if (c.rows() != rho.rows() || c.cols() != rho.cols())
            throw std::invalid_argument("lindblad_rhs: collapse dimension mismatch");
        const Matrix g = c.adjoint() * c;
        out += c * rho * c.adjoint() - 0.5 * (g * rho + rho * g);
    }
    return out;
}

namespace detail {

inline double spectral_norm_hermitian(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double max_collapse_rate(const std::vector<Matrix>& collapses) {
    double rate = 0.0;
    for (const Matrix& c : collapses) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(c.adjoint() * c),
                                                 Eigen::EigenvaluesOnly);
        rate = std::max(rate, es.eigenvalues().maxCoeff());
    }
    return rate;
}

// Fixed-size RK4 kernel. Collapse products c^dag c are precomputed; the
// state is re-hermitized after every step to kill round-off drift.
template <int N>
class Rk4Kernel {
    using Mat = Eigen::Matrix<Complex, N, N>;

public:
    Rk4Kernel(const Matrix& h, const std::vector<Matrix>& collapses) : h_(h) {
        for (const Matrix& c : collapses) {
            c_.push_back(c);
            g_.push_back(c.adjoint() * c);
        }
    }

    void rhs(const Mat& rho, Mat& out) const {
        const Complex i(0.0, 1.0);
        tmp_.noalias() = h_ * rho;
        tmp_.noalias() -= rho * h_;
        out = -i * tmp_;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            tmp_.noalias() = c_[k] * rho;
            out.noalias() += tmp_ * c_[k].adjoint();
            tmp_.noalias() = g_[k] * rho;
            tmp_.noalias() += rho * g_[k];
            out -= 0.5 * tmp_;
        }
    }

    void step(Mat& rho, double h_step) const {
        rhs(rho, k1_);
        stage_ = rho + (0.5 * h_step) * k1_;
        rhs(stage_, k2_);
        stage_ = rho + (0.5 * h_step) * k2_;
        rhs(stage_, k3_);
        stage_ = rho + h_step * k3_;
        rhs(stage_, k4_);
        rho += (h_step / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
        rho = 0.5 * (rho + rho.adjoint()).eval();
    }

private:
    Mat h_;
    std::vector<Mat> c_;
    std::vector<Mat> g_;
    mutable Mat tmp_, stage_, k1_, k2_, k3_, k4_;
};

template <int N>
Trajectory evolve_fixed(const Matrix& rho0, const Matrix& h,
                        const std::vector<Matrix>& collapses,
                        const std::vector<double>& sample_times,
                        double h_bound, const IntegratorOptions& opt) {
    using Mat = Eigen::Matrix<Complex, N, N>;
    Rk4Kernel<N> kernel(h, collapses);
    const Matrix sx1 = N == 2 ? sigma_x() : kron(sigma_x(), identity(2));

    std::int64_t total_steps = 0;
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        const double dt = sample_times[i] - (i == 0 ? 0.0 : sample_times[i - 1]);
        total_steps += static_cast<std::int64_t>(std::ceil(dt / h_bound));
    }
    if (total_steps > opt.max_steps) {
        std::ostringstream msg;
        msg << "evolve: step underflow, " << total_steps << " RK4 steps needed (cap "
            << opt.max_steps << "); duration " << sample_times.back() << " s, step bound "
            << h_bound << " s";
        throw numerical_error(msg.str());
    }

    Trajectory traj;
    traj.min_eigenvalue = 1.0;
    Mat rho = rho0;
    double t = 0.0;
    for (double ts : sample_times) {
        const double dt = ts - t;
        if (dt > 0.0) {
            const auto n = static_cast<std::int64_t>(std::ceil(dt / h_bound));
            const double h_step = dt / static_cast<double>(n);
            for (std::int64_t k = 0; k < n; ++k) {
                kernel.step(rho, h_step);
                const double drift = std::abs(rho.trace().real() - 1.0) +
                                     std::abs(rho.trace().imag());
                if (drift > opt.trace_tolerance) {
                    std::ostringstream msg;
                    msg << "evolve: trace drift " << drift << " exceeds "
                        << opt.trace_tolerance << " at t = " << t + (k + 1) * h_step << " s";
                    throw numerical_error(msg.str());
                }
            }
            t = ts;
        }
        traj.times.push_back(ts);
        traj.sigma_x_qubit.push_back((sx1 * Matrix(rho)).trace().real());
        traj.max_trace_drift =
            std::max(traj.max_trace_drift, std::abs(rho.trace().real() - 1.0));
        traj.max_hermiticity_error = std::max(
            traj.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
        traj.min_eigenvalue = std::min(traj.min_eigenvalue, es.eigenvalues().minCoeff());
        if (opt.keep_states) traj.states.push_back(Matrix(rho));
    }
    return traj;
}

}  // namespace detail

// Integrates the Lindblad equation with classical fixed-step RK4. Sample
// times must be sorted and lie in [0, duration]; the state is advanced
// segment-by-segment so every requested time is hit exactly, with the step
// in each segment at most min(2*pi/omega_fast/steps_per_period,
// rate_step_fraction/Gamma_max). omega_fast is twice the spectral norm of
// H (an upper bound on its largest eigen-gap) or scale_hint if larger.
inline Trajectory evolve(const Matrix& rho0, const Matrix& h,
                         const std::vector<Matrix>& collapses, double duration,
                         std::vector<double> sample_times,
                         const IntegratorOptions& opt = {}) {
    check_density_matrix(rho0);
    if (h.rows() != rho0.rows() || h.cols() != rho0.cols())
        throw std::invalid_argument("evolve: Hamiltonian dimension mismatch");
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("evolve: Hamiltonian must be Hermitian");
    if (duration < 0.0)
        throw std::invalid_argument("evolve: negative duration");
    if (sample_times.empty()) sample_times.push_back(duration);
    if (!std::is_sorted(sample_times.begin(), sample_times.end()))
        throw std::invalid_argument("evolve: sample times must be sorted");
    if (sample_times.front() < 0.0 || sample_times.back() > duration * (1.0 + 1e-12) + 1e-30)
        throw std::invalid_argument("evolve: sample times outside [0, duration]");

    const double omega_fast =
        std::max(2.0 * detail::spectral_norm_hermitian(h), opt.scale_hint);
    const double gamma_max = detail::max_collapse_rate(collapses);
    double h_bound = std::numeric_limits<double>::infinity();
    if (omega_fast > 0.0)
        h_bound = std::min(h_bound, 2.0 * std::numbers::pi / omega_fast / opt.steps_per_period);
    if (gamma_max > 0.0)
        h_bound = std::min(h_bound, opt.rate_step_fraction / gamma_max);
    if (!std::isfinite(h_bound))
        h_bound = std::max(duration, 1.0);  // free evolution under H = 0

    if (rho0.rows() == 2)
        return detail::evolve_fixed<2>(rho0, h, collapses, sample_times, h_bound, opt);
    if (rho0.rows() == 4)
        return detail::evolve_fixed<4>(rho0, h, collapses, sample_times, h_bound, opt);
    throw std::invalid_argument("evolve: only dimensions 2 and 4 are supported");
}

// Column-stacking vectorization: vec(A B C) = (C^T kron A) vec(B).
inline Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Eigen::Index dim) {
    if (v.size() != dim * dim)
        throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

// L = -i(I(x)H - H^T(x)I) + sum_k [conj(c)(x)c - 1/2(I(x)c^dag c + (c^dag c)^T(x)I)].
inline Matrix liouvillian(const Matrix& h, const std::vector<Matrix>& collapses) {
    if (h.rows() != h.cols())
        throw std::invalid_argument("liouvillian: Hamiltonian must be square");
    const Eigen::Index n = h.rows();
    const Matrix eye = identity(n);
    const Complex i(0.0, 1.0);
    Matrix l = -i * (kron(eye, h) - kron(h.transpose(), eye));
    for (const Matrix& c : collapses) {
        const Matrix g = c.adjoint() * c;
        l += kron(c.conjugate(), c) -
             0.5 * (kron(eye, g) + kron(g.transpose(), eye));
    }
    return l;
}

// Exact propagator rho(t) = unvec(expm(L t) vec(rho0)); the independent
// verification oracle for evolve. Dimensions above 4 are rejected (the
// superoperator would exceed 16x16).
inline Matrix propagator_oracle(const Matrix& rho0, const Matrix& h,
                                const std::vector<Matrix>& collapses, double t) {
    check_density_matrix(rho0);
    if (rho0.rows() > 4)
        throw std::invalid_argument("propagator_oracle: dimension too large");
    if (h.rows() != rho0.rows())
        throw std::invalid_argument("propagator_oracle: dimension mismatch");
    const Matrix l = liouvillian(h, collapses);
    return unvec(expm(l * t) * vec(rho0), rho0.rows());
}

}  // namespace sls
