#pragma once

// Physical model construction: rotating-frame Hamiltonian, collapse
// operators and initial states of a resonantly driven qubit, optionally
// coupled to one two-level defect.
//
// Composite basis is qubit-major: index = 2*q + d with q,d in {0,1}, where
// state 0 is |0> (sigma_z = +1, excited) and state 1 is |1> (sigma_z = -1,
// ground). The defect ground state is therefore |1>_d.

#include "sls/linalg.hpp"

#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sls {

// All angular frequencies in rad/s, all rates in 1/s.
struct QubitParams {
    double omega_q = 0.0;  // qubit transition frequency (rad/s)
    double gamma1 = 0.0;   // energy relaxation rate (1/s)
    double gamma2 = 0.0;   // pure dephasing rate (1/s)
};

struct DefectParams {
    double delta_tls = 0.0;   // omega_TLS - omega_q, signed (rad/s)
    double gamma1 = 0.0;      // defect relaxation rate (1/s)
    double gamma2 = 0.0;      // defect pure dephasing rate (1/s)
    double coupling_g = 0.0;  // transverse coupling strength (rad/s)
};

struct DriveParams {
    double rabi = 0.0;            // Rabi frequency (rad/s)
    double drive_detuning = 0.0;  // omega_q - omega_MW; only 0 supported
};

struct SystemModel {
    QubitParams qubit;
    std::optional<DefectParams> defect;  // absent = isolated qubit
    DriveParams drive;
};

inline void validate(const SystemModel& m) {
    if (!(m.qubit.omega_q > 0.0))
        throw std::invalid_argument("model: omega_q must be positive");
    if (m.qubit.gamma1 < 0.0 || m.qubit.gamma2 < 0.0)
        throw std::invalid_argument("model: qubit rates must be nonnegative");
    if (m.drive.rabi < 0.0)
        throw std::invalid_argument("model: Rabi frequency must be nonnegative");
    if (m.drive.drive_detuning != 0.0)
        throw std::invalid_argument("model: only resonant driving is supported");
    if (m.defect) {
        if (m.defect->gamma1 < 0.0 || m.defect->gamma2 < 0.0)
            throw std::invalid_argument("model: defect rates must be nonnegative");
        if (m.defect->coupling_g < 0.0)
            throw std::invalid_argument("model: coupling must be nonnegative");
    }
}

inline int dimension(const SystemModel& m) { return m.defect ? 4 : 2; }

// H_R/hbar = (Omega_R/2) sx(1) + (Delta_TLS/2) sz(2) + g (s+(1)s-(2) + s-(1)s+(2)).
// Returns 2x2 (Omega_R/2) sx for an isolated qubit.
inline Matrix build_rotating_hamiltonian(const SystemModel& m) {
    validate(m);
    const double rabi = m.drive.rabi;
    if (!m.defect)
        return 0.5 * rabi * sigma_x();
    const Matrix i2 = identity(2);
    return 0.5 * rabi * kron(sigma_x(), i2) +
           0.5 * m.defect->delta_tls * kron(i2, sigma_z()) +
           m.defect->coupling_g *
               (kron(sigma_plus(), sigma_minus()) + kron(sigma_minus(), sigma_plus()));
}

// Collapse operators with strictly positive prefactors, embedded in the
// full product space: sqrt(G1) s-, sqrt(G2/2) sz per subsystem.
inline std::vector<Matrix> build_collapse_operators(const SystemModel& m) {
    validate(m);
    std::vector<Matrix> ops;
    if (!m.defect) {
        if (m.qubit.gamma1 > 0.0) ops.push_back(std::sqrt(m.qubit.gamma1) * sigma_minus());
        if (m.qubit.gamma2 > 0.0) ops.push_back(std::sqrt(0.5 * m.qubit.gamma2) * sigma_z());
        return ops;
    }
    const Matrix i2 = identity(2);
    if (m.qubit.gamma1 > 0.0)
        ops.push_back(std::sqrt(m.qubit.gamma1) * kron(sigma_minus(), i2));
    if (m.defect->gamma1 > 0.0)
        ops.push_back(std::sqrt(m.defect->gamma1) * kron(i2, sigma_minus()));
    if (m.qubit.gamma2 > 0.0)
        ops.push_back(std::sqrt(0.5 * m.qubit.gamma2) * kron(sigma_z(), i2));
    if (m.defect->gamma2 > 0.0)
        ops.push_back(std::sqrt(0.5 * m.defect->gamma2) * kron(i2, sigma_z()));
    return ops;
}

enum class SequenceKind { S1, S2 };

// Qubit state after the first pi/2 pulse: |0>_x for S1, |1>_x for S2.
inline Matrix qubit_prepared_state(SequenceKind kind) {
    Vector v(2);
    v << 1.0 / std::numbers::sqrt2,
        (kind == SequenceKind::S1 ? 1.0 : -1.0) / std::numbers::sqrt2;
    return v * v.adjoint();
}

// Defect ground state |1>_d (the sigma_z = -1 eigenstate).
inline Matrix defect_ground_state() {
    Matrix rho = Matrix::Zero(2, 2);
    rho(1, 1) = 1.0;
    return rho;
}

// Product initial state for a spin-locking run: (qubit |0/1>_x) x (defect
// ground). dim selects 2 (isolated qubit) or 4 (qubit + defect).
inline Matrix initial_state(SequenceKind kind, int dim = 4) {
    if (dim == 2) return qubit_prepared_state(kind);
    if (dim == 4) return kron(qubit_prepared_state(kind), defect_ground_state());
    throw std::invalid_argument("initial_state: dim must be 2 or 4");
}

// sigma_x on the qubit subsystem, sized to the model dimension.
inline Matrix observable_sigma_x1(int dim) {
    if (dim == 2) return sigma_x();
    if (dim == 4) return kron(sigma_x(), identity(2));
    throw std::invalid_argument("observable_sigma_x1: dim must be 2 or 4");
}

}  // namespace sls
