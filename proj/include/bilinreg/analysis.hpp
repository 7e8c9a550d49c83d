#pragma once

#include <optional>

#include "bilinreg/controllers.hpp"

namespace bilinreg {

struct Assumption1Report {
    int grid = 0;
    double hurwitz_margin = 0.0;   // max over the grid of the largest real eigenvalue part of F_u
    double hurwitz_worst_u = 0.0;
    double dc_gain_min_abs = 0.0;  // min over the grid of |C F_u^-1 g_u|
    double dc_gain_worst_u = 0.0;
    bool dc_sign_constant = false;
    int dc_sign = 0;

    bool hurwitz() const { return hurwitz_margin < 0.0; }
    bool dc_gain_nonzero() const { return dc_gain_min_abs > 0.0; }
    bool holds() const { return hurwitz() && dc_gain_nonzero() && dc_sign_constant; }
};

struct Assumption3Report {
    int grid_u = 0;
    int grid_v = 0;
    double nu = 0.0;
    double eps = 0.0;
    double mu = 0.0;
    double a3a_worst_residual = 0.0;  // largest block eigenvalue over the u grid
    double a3a_worst_u = 0.0;
    double a3b_min_abs = 0.0;         // min over the (u, v) grid of |C (F_u + B v)^-1 g_u|
    double a3b_worst_u = 0.0;
    double a3b_worst_v = 0.0;
    bool a3b_nonsingular = true;
    bool a3b_sign_constant = false;

    bool a3a_feasible() const { return a3a_worst_residual <= 0.0; }
    bool a3b_holds() const { return a3b_nonsingular && a3b_min_abs > 0.0 && a3b_sign_constant; }
    bool holds() const { return a3a_feasible() && a3b_holds(); }
};

Assumption1Report check_assumption1(const BilinearSystem& sys, int grid = 64);

Assumption3Report check_assumption3(const BilinearSystem& sys, const Matrix& P, double nu, double eps,
                                    int grid_u = 64, int grid_v = 129);

/// Constants of the composite monitors: a and c of W = sqrt(V) + c sqrt(U) for
/// output feedback, gamma of W = sqrt(V') + gamma |z| for the pure-integral law.
struct MonitorConstants {
    double a = 0.0;
    double c = 0.0;
    double q_max = 0.0;
    double gamma = 0.0;
};

MonitorConstants monitor_constants(const BilinearSystem& sys, const DesignArtifacts& art, Law law);

struct Monitors {
    double V = 0.0;
    double U = 0.0;
    double W = 0.0;
};

/// V = k_p xt^T P xt + k_i (z - M xt)^2 (xt from the estimate under output
/// feedback), U = err^T Q err with err = x_hat - x, and the law's W.
Monitors lyapunov_monitors(const BilinearSystem& sys, const DesignArtifacts& art, Law law, const Vector& x,
                           const Vector* x_hat, double z, const MonitorConstants& mc);

/// Linearisation of the pure-integral loop: [[F, s k_i g], [C, 0]], s = sgn(C F^-1 g).
Matrix linearization_matrix(const BilinearSystem& sys, const DesignArtifacts& art, double k_i);

/// Smallest k_i > 0 at which the linearisation stops being Hurwitz (doubling then bisection).
/// Returns +inf when no crossing is found below k_max.
double linear_stability_limit(const BilinearSystem& sys, const DesignArtifacts& art, double k_max = 1e12);

}  // namespace bilinreg
