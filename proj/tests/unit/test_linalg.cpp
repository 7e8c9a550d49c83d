#include "doctest.h"
#include "oracles.hpp"

#include "bilinreg/errors.hpp"
#include "bilinreg/linalg.hpp"

using namespace bilinreg;

TEST_CASE("lyapunov: closed forms") {
    Matrix F = -Matrix::Identity(3, 3);
    CHECK((solve_lyapunov(F, Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

    Matrix F2(2, 2);
    F2 << -1, 0, 0, -2;
    const Matrix P = solve_lyapunov(F2, Matrix::Identity(2, 2));
    CHECK(P(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(P(1, 1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(P(0, 1)) < 1e-15);
}

TEST_CASE("lyapunov: random Hurwitz matrices agree with the vectorised solve") {
    oracle::Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + trial % 7;
        const Matrix F = rng.hurwitz(n, 0.3);
        const Matrix U = rng.spd(n);
        const Matrix P = solve_lyapunov(F, U);
        const Matrix Pk = oracle::kron_lyapunov(F, U);
        CHECK((P - Pk).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + Pk.cwiseAbs().maxCoeff()));
        const Matrix res = F.transpose() * P + P * F + 2.0 * U;
        CHECK(res.cwiseAbs().maxCoeff() <= 1e-8 * U.norm());
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("lyapunov: rejects non-Hurwitz") {
    Matrix F(2, 2);
    F << 0.1, 0, 0, -1;
    CHECK_THROWS_AS(solve_lyapunov(F, Matrix::Identity(2, 2)), NotHurwitz);
    Matrix G = Matrix::Zero(2, 2);
    G(1, 1) = -1;
    CHECK_THROWS_AS(solve_lyapunov(G, Matrix::Identity(2, 2)), NotHurwitz);
}

TEST_CASE("observability by the eigenvector test") {
    Matrix A = Matrix::Zero(2, 2);
    Matrix D(1, 2);
    D << 1, 0;
    CHECK_FALSE(is_observable(A, D));
    Matrix A2(2, 2);
    A2 << 0, 1, 0, 0;
    CHECK(is_observable(A2, D));
    Matrix D2(1, 2);
    D2 << 0, 1;
    CHECK_FALSE(is_observable(A2, D2));
}

TEST_CASE("kleinman gain from a stable start") {
    oracle::Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 3 + trial % 4;
        // L = 0 must already stabilise, so A is Hurwitz; the gain should add margin
        const Matrix A = rng.hurwitz(n, 0.1);
        Matrix D = rng.mat(1, n, -1, 1);
        if (!is_observable(A, D)) continue;
        const Matrix L = riccati_observer_gain(A, D, Matrix::Identity(n, n), Matrix::Identity(1, 1));
        CHECK(max_real_eigenvalue(A - L * D) < 0.0);
        const Matrix X = solve_lyapunov((A - L * D).transpose(), 0.5 * (Matrix::Identity(n, n) + L * L.transpose()));
        // fixed point of the iteration: L = X D^T
        CHECK((L - X * D.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * (1 + L.norm()));
    }
}

TEST_CASE("norms and helpers") {
    Matrix m(2, 2);
    m << 3, 0, 0, -4;
    CHECK(spectral_norm(m) == doctest::Approx(4.0));
    CHECK(condition_number(m) == doctest::Approx(4.0 / 3.0));
    CHECK(max_sym_eigenvalue(m) == doctest::Approx(3.0));
    CHECK(min_sym_eigenvalue(m) == doctest::Approx(-4.0));
}
