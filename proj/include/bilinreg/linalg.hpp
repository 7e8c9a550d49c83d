#pragma once

#include <Eigen/Dense>

namespace bilinreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Largest real part over the spectrum of a general square matrix.
double max_real_eigenvalue(const Matrix& m);

double max_sym_eigenvalue(const Matrix& m);
double min_sym_eigenvalue(const Matrix& m);

double spectral_norm(const Matrix& m);

/// 2-norm condition number from the singular values (infinity when singular).
double condition_number(const Matrix& m);

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Solves F^T P + P F = -2 Upsilon for symmetric P.
///
/// Bartels-Stewart on the complex Schur form of F. Throws NotHurwitz when an
/// eigenvalue of F has real part >= -1e-12; the equation is then either
/// singular or P is not positive definite.
Matrix solve_lyapunov(const Matrix& F, const Matrix& Upsilon);

/// PBH test: rank [A - lambda I; D] = n for every eigenvalue lambda of A.
bool is_observable(const Matrix& A, const Matrix& D);

/// Steady-state Kalman-type observer gain L = X D^T R^-1 for a Hurwitz A,
/// computed by Kleinman iteration from L = 0.
Matrix riccati_observer_gain(const Matrix& A, const Matrix& D, const Matrix& W, const Matrix& R,
                             int max_iterations = 50);

}  // namespace bilinreg
