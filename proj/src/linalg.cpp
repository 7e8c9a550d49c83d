#include "bilinreg/linalg.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "bilinreg/errors.hpp"

namespace bilinreg {

double max_real_eigenvalue(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

double max_sym_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double min_sym_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

double condition_number(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

Matrix solve_lyapunov(const Matrix& F, const Matrix& Upsilon) {
    const Index n = F.rows();
    if (F.cols() != n || Upsilon.rows() != n || Upsilon.cols() != n)
        throw InvalidArgument("solve_lyapunov: dimension mismatch");

    using CMatrix = Eigen::MatrixXcd;
    Eigen::ComplexSchur<Matrix> schur(F);
    const CMatrix& T = schur.matrixT();
    const CMatrix& U = schur.matrixU();

    double worst = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) worst = std::max(worst, T(i, i).real());
    if (worst >= -1e-12) throw NotHurwitz("solve_lyapunov: F is not Hurwitz", worst);

    // F real => F^T = U T^H U^H, so the equation becomes T^H Y + Y T = U^H (-2 Ups) U.
    const CMatrix rhs = U.adjoint() * (-2.0 * Upsilon).cast<std::complex<double>>() * U;
    const CMatrix TH = T.adjoint();
    CMatrix Y = CMatrix::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        Eigen::VectorXcd col = rhs.col(j);
        for (Index k = 0; k < j; ++k) col -= Y.col(k) * T(k, j);
        CMatrix lhs = TH;
        lhs.diagonal().array() += T(j, j);
        Y.col(j) = lhs.triangularView<Eigen::Lower>().solve(col);
    }
    const Matrix P = (U * Y * U.adjoint()).real();
    return symmetrize(P);
}

bool is_observable(const Matrix& A, const Matrix& D) {
    const Index n = A.rows();
    if (A.cols() != n || D.cols() != n) throw InvalidArgument("is_observable: dimension mismatch");
    if (D.rows() == 0) return n == 0;
    const double scale = spectral_norm(A) + spectral_norm(D);
    Eigen::EigenSolver<Matrix> es(A, false);
    for (Index i = 0; i < n; ++i) {
        const std::complex<double> lambda = es.eigenvalues()(i);
        Eigen::MatrixXcd pbh(n + D.rows(), n);
        pbh.topRows(n) = A.cast<std::complex<double>>();
        pbh.topRows(n).diagonal().array() -= lambda;
        pbh.bottomRows(D.rows()) = D.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
        if (svd.singularValues()(n - 1) <= 1e-10 * scale) return false;
    }
    return true;
}

Matrix riccati_observer_gain(const Matrix& A, const Matrix& D, const Matrix& W, const Matrix& R,
                             int max_iterations) {
    const Index n = A.rows();
    const Matrix Rinv = R.inverse();
    Matrix L = Matrix::Zero(n, D.rows());
    for (int it = 0; it < max_iterations; ++it) {
        const Matrix Acl = A - L * D;
        // Acl X + X Acl^T = -(W + L R L^T)
        const Matrix X = solve_lyapunov(Acl.transpose(), 0.5 * (W + L * R * L.transpose()));
        const Matrix next = X * D.transpose() * Rinv;
        const double change = (next - L).norm();
        L = next;
        if (change <= 1e-12 * (1.0 + L.norm())) break;
    }
    return L;
}

}  // namespace bilinreg
