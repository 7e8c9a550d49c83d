#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bilinreg/errors.hpp"
#include "bilinreg/model.hpp"
#include "bilinreg/steady_state.hpp"

namespace bilinreg {

/// Luenberger gain together with the LMI certificate (Q, Y, nu, eps).
struct ObserverDesign {
    Matrix L;
    Matrix Q;
    Matrix Y;
    double nu = 0.0;
    double eps = 0.0;
    double mu = 0.0;
    double lmi_residual = 0.0;  // largest eigenvalue of the LMI block; <= 0 when certified
    bool certified = false;
    int iterations = 0;
};

/// Thrown when the observer LMI has no feasible point within the solver
/// budget. Carries the best (uncertified) iterate.
struct Infeasible : Error {
    ObserverDesign best;
    Infeasible(const std::string& what, ObserverDesign b) : Error(what), best(std::move(b)) {}
};

/// Certificate for the robust-stability LMI at a single F:
/// [[P F + F^T P + (nu mu^2 + 2 eps) I, P], [P, -nu I]] <= 0.
struct RobustCertificate {
    double nu = 0.0;
    double eps = 0.0;       // half of the best attainable margin; > 0 iff feasible
    double eps_max = 0.0;   // best attainable eps (may be negative)
    double residual = 0.0;  // block eigenvalue at (nu, eps)
    bool feasible = false;
};

/// Quantities behind the pure-integral gain bound ki* = eps / (3 c0 pibar sqrt(p_min p_max)).
struct IntegralBound {
    double ki_star = 0.0;
    double pi_bar = 0.0;
    double v_at_sup = 0.0;
    double c0 = 0.0;
    double p_min = 0.0;
    double p_max = 0.0;
    double eps = 0.0;

    /// gamma = 2 k_i pibar sqrt(p_max), weight of |z| in the singular-perturbation W.
    double gamma(double k_i) const;
};

struct DesignArtifacts {
    double reference = 0.0;
    double u_ss = 0.0;
    Vector x_ss;
    Vector g;          // B x_ss + b
    Matrix P;
    Matrix Upsilon;
    RowVector M;       // C F^-1
    double k_p = 0.0;
    double k_i = 0.0;
    double dc_gain = 0.0;  // C F^-1 g
    int dc_sign = 0;
    std::optional<ObserverDesign> observer;
    std::optional<RobustCertificate> robust;
    std::optional<IntegralBound> bound;
    std::vector<std::string> warnings;

    std::optional<double> ki_star() const {
        if (bound) return bound->ki_star;
        return std::nullopt;
    }
};

struct LmiSolverOptions {
    int max_iterations = 5000;
    double delta = 1e-6;        // lower bound on Q's eigenvalues, nu and eps
    double feasibility_tol = 1e-9;
    double step = 0.5;          // c in the c / sqrt(k) step rule
};

/// g_u = B pi(u) + b.
Vector g_of(const BilinearSystem& sys, double u);

/// mu = ||B||_2 max(|u_min|, |u_max|).
double mu_bound(const BilinearSystem& sys);

/// diag(I_n, (V_cold / V_hot) I_n): symmetrises the exchange coupling of F_u.
Matrix hex_analytic_P(const HexParams& p);

DesignArtifacts forwarding_design(const BilinearSystem& sys, const Equilibrium& eq, double k_p, double k_i,
                                  const Matrix& Upsilon);
inline DesignArtifacts forwarding_design(const BilinearSystem& sys, const Equilibrium& eq, double k_p,
                                         double k_i) {
    return forwarding_design(sys, eq, k_p, k_i, Matrix::Identity(sys.n_states(), sys.n_states()));
}

/// The observer LMI block evaluated at (Q, Y, nu, eps).
Matrix observer_lmi_block(const Matrix& A, const Matrix& D, double mu, const Matrix& Q, const Matrix& Y,
                          double nu, double eps);

/// Q(A-LD) + (A-LD)^T Q + QQ/nu + nu mu^2 I, the Schur-expanded left side
/// that must be <= -2 eps I.
Matrix observer_schur_form(const Matrix& A, const Matrix& D, double mu, const ObserverDesign& od);

/// Feasibility search for the observer LMI using the measured-output matrix D.
/// Throws NotObservable or Infeasible (with the best iterate).
ObserverDesign observer_design(const BilinearSystem& sys, const LmiSolverOptions& opts = {});

/// Best (nu, eps) for the robust-stability LMI with a given P.
RobustCertificate fit_robust_certificate(const Matrix& F, const Matrix& P, double mu);

Matrix robust_lmi_block(const Matrix& F, const Matrix& P, double mu, double nu, double eps);

/// Evaluates ki* with pibar taken as a grid supremum over v in [u_min-u_max, u_max-u_min].
IntegralBound integral_gain_bound(const BilinearSystem& sys, const Equilibrium& eq, const Matrix& P, double eps,
                                  int grid_points = 512);

/// sgn(C F^-1 g) at u_ss. Throws ZeroDCGain when it vanishes.
int sign_dc_gain(const BilinearSystem& sys, const Equilibrium& eq);

/// Pure-integral design: Lyapunov P at u_ss, the robust certificate, and ki*
/// when the certificate exists. k_i >= ki* (or no certificate) is a warning.
DesignArtifacts integral_only_design(const BilinearSystem& sys, const Equilibrium& eq, double k_i,
                                     const Matrix& Upsilon);
inline DesignArtifacts integral_only_design(const BilinearSystem& sys, const Equilibrium& eq, double k_i) {
    return integral_only_design(sys, eq, k_i, Matrix::Identity(sys.n_states(), sys.n_states()));
}

}  // namespace bilinreg
