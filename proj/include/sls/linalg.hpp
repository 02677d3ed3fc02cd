#pragma once

// Dense complex linear-algebra substrate: Pauli operators, Kronecker
// products, Hermitian symmetrization and a matrix exponential. Everything
// here is sized for 2x2/4x4 system matrices and the 16x16 superoperator.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace sls {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline bool all_finite(const Matrix& a) {
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag()))
                return false;
    return true;
}

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

// Basis convention: e0 = |0> (sigma_z = +1, excited), e1 = |1> (sigma_z = -1,
// ground). sigma_minus lowers |0> -> |1>.
inline Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Matrix sigma_y() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix sigma_plus() {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 1) = 1;
    return m;
}

inline Matrix sigma_minus() {
    Matrix m = Matrix::Zero(2, 2);
    m(1, 0) = 1;
    return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    if (!all_finite(a) || !all_finite(b))
        throw std::invalid_argument("kron: non-finite input");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix hermitize(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("hermitize: matrix must be square");
    return 0.5 * (a + a.adjoint());
}

// Matrix exponential by scaling-and-squaring around a fixed Pade(13,13)
// core. Robust for the non-normal Liouvillians this library produces;
// relative accuracy ~1e-13 for scaled norms below the theta_13 threshold.
inline Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("expm: matrix must be square");
    if (!all_finite(a))
        throw std::invalid_argument("expm: non-finite input");

    const Eigen::Index n = a.rows();
    const double theta13 = 5.371920351148152;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    const Matrix as = a / std::pow(2.0, squarings);

    static const double b[14] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};

    const Matrix eye = Matrix::Identity(n, n);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;

    const Matrix u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                           b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                     b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k)
        r = r * r;
    return r;
}

}  // namespace sls
