#include "sls/linalg.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace sls;

namespace {

// Independent Kronecker oracle: brute-force index expansion.
Matrix kron_by_index(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            out(i, j) = a(i / b.rows(), j / b.cols()) * b(i % b.rows(), j % b.cols());
    return out;
}

Matrix random_matrix(std::mt19937_64& rng, int n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = Complex(u(rng), u(rng));
    return m;
}

}  // namespace

TEST_CASE("pauli matrices have the declared basis convention", "[linalg]") {
    // e0 = |0> is the sigma_z = +1 (excited) state; sigma_minus lowers it.
    REQUIRE(sigma_z()(0, 0) == Complex(1, 0));
    REQUIRE(sigma_z()(1, 1) == Complex(-1, 0));
    REQUIRE(sigma_minus()(1, 0) == Complex(1, 0));
    REQUIRE(sigma_minus()(0, 1) == Complex(0, 0));
    REQUIRE((sigma_plus() - 0.5 * (sigma_x() + Complex(0, 1) * sigma_y()))
                .cwiseAbs()
                .maxCoeff() == 0.0);
}

TEST_CASE("kron identity and sigma_z embeddings", "[linalg]") {
    REQUIRE((kron(identity(2), identity(2)) - identity(4)).cwiseAbs().maxCoeff() == 0.0);

    const Matrix sz1 = kron(sigma_z(), identity(2));
    Matrix expected = Matrix::Zero(4, 4);
    expected.diagonal() << 1, 1, -1, -1;
    REQUIRE((sz1 - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kron(sigma_plus, sigma_minus) exchanges |1>|0> -> |0>|1>", "[linalg]") {
    const Matrix m = kron(sigma_plus(), sigma_minus());
    Vector in = Vector::Zero(4);
    in(2) = 1.0;  // |1>_q |0>_d, qubit-major index 2*1+0
    Vector expected = Vector::Zero(4);
    expected(1) = 1.0;  // |0>_q |1>_d
    REQUIRE((m * in - expected).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(7);
    const Matrix a = random_matrix(rng, 2, 1.0);
    const Matrix b = random_matrix(rng, 3, 1.0);
    REQUIRE((kron(a, b) - kron_by_index(a, b)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kron is associative on Pauli inputs", "[linalg]") {
    const Matrix paulis[3] = {sigma_x(), sigma_y(), sigma_z()};
    for (const Matrix& a : paulis)
        for (const Matrix& b : paulis)
            for (const Matrix& c : paulis)
                REQUIRE((kron(kron(a, b), c) - kron(a, kron(b, c))).cwiseAbs().maxCoeff() ==
                        0.0);
}

TEST_CASE("trace of kron factorizes", "[linalg]") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 3, 2.0);
        const Matrix b = random_matrix(rng, 2, 2.0);
        REQUIRE(std::abs(kron(a, b).trace() - a.trace() * b.trace()) < 1e-12);
    }
}

TEST_CASE("kron rejects non-finite input", "[linalg]") {
    Matrix bad = identity(2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(kron(bad, identity(2)), std::invalid_argument);
}

TEST_CASE("expm of zero is the identity", "[linalg]") {
    REQUIRE((expm(Matrix::Zero(3, 3)) - identity(3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("expm reproduces the Pauli rotation identity", "[linalg]") {
    // exp(-i (pi/2) sigma_x) = -i sigma_x
    const Complex i(0, 1);
    const Matrix lhs = expm(-i * (std::numbers::pi / 2.0) * sigma_x());
    const Matrix rhs = -i * sigma_x();
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("expm inverse-product oracle on random matrices", "[linalg]") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 4, 0.35);  // norm <= ~1
        const Matrix residual = expm(a) * expm(-a) - identity(4);
        REQUIRE(residual.cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("expm is multiplicative on commuting diagonal pairs", "[linalg]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix a = Matrix::Zero(4, 4);
        Matrix b = Matrix::Zero(4, 4);
        for (int k = 0; k < 4; ++k) {
            a(k, k) = Complex(u(rng), u(rng));
            b(k, k) = Complex(u(rng), u(rng));
        }
        const Matrix lhs = expm(a + b);
        const Matrix rhs = expm(a) * expm(b);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("expm handles norms up to 10", "[linalg]") {
    // exp(i theta sigma_y) has the closed form cos(theta) I + i sin(theta) sigma_y.
    const Complex i(0, 1);
    const double theta = 9.7;
    const Matrix lhs = expm(i * theta * sigma_y());
    const Matrix rhs = std::cos(theta) * identity(2) + i * std::sin(theta) * sigma_y();
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("expm rejects non-square input", "[linalg]") {
    REQUIRE_THROWS_AS(expm(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("hermitize fixed points and annihilation", "[linalg]") {
    std::mt19937_64 rng(41);
    const Matrix r = random_matrix(rng, 3, 1.0);
    const Matrix h = r + r.adjoint();
    REQUIRE((hermitize(h) - h).cwiseAbs().maxCoeff() < 1e-15);

    const Matrix anti = r - r.adjoint();
    REQUIRE(hermitize(anti).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("hermitize moves the input by half its off-Hermitian defect", "[linalg]") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = random_matrix(rng, 4, 1.0);
        const double eps = (a - a.adjoint()).cwiseAbs().maxCoeff();
        const double moved = (hermitize(a) - a).cwiseAbs().maxCoeff();
        REQUIRE(moved <= 0.5 * eps * (1.0 + 1e-12));
        REQUIRE(moved >= 0.5 * eps * (1.0 - 1e-12));
    }
}

TEST_CASE("hermitize rejects non-square input", "[linalg]") {
    REQUIRE_THROWS_AS(hermitize(Matrix::Zero(2, 3)), std::invalid_argument);
}
