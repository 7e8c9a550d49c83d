#pragma once

#include <optional>

#include "bilinreg/linalg.hpp"

namespace bilinreg {

/// Physical parameters of the counter-current heat exchanger. The stream
/// driven by the manipulated flow u occupies the first n_cells states
/// (T_1..T_n, inlet T_in); the counter stream with fixed flow q_bar occupies
/// the last n_cells states (Tbar_1..Tbar_n, inlet Tbar_in at cell n).
struct HexParams {
    int n_cells = 8;
    double lambda = 35.0;      // J/K/s
    double rho = 1000.0;       // kg/m^3
    double cp = 4186.0;        // J/(kg K)
    double V_hot = 5.03e-5;    // m^3
    double V_cold = 7.07e-4;   // m^3
    double q_bar = 0.02;       // kg/s
    double T_in_hot = 286.0;   // K
    double T_in_cold = 307.0;  // K
    double u_min = 0.0;        // kg/s
    double u_max = 0.05;       // kg/s

    void validate() const;
};

/// xdot = A x + (B x + b) sat(u) + E,  e = C x - r,  y = D x.
struct BilinearSystem {
    Matrix A;
    Matrix B;
    Vector b;
    Vector E;
    RowVector C;
    Matrix D;
    double u_min = 0.0;
    double u_max = 1.0;
    std::optional<HexParams> hex;  // provenance when built by build_hex

    Index n_states() const { return A.rows(); }
    Index n_outputs() const { return D.rows(); }

    /// F_u = A + B u.
    Matrix F(double u) const { return A + u * B; }

    void validate() const;
};

double saturate(double u, double u_min, double u_max);
inline double saturate(double u, const BilinearSystem& sys) { return saturate(u, sys.u_min, sys.u_max); }

/// Lower-bidiagonal transport matrix: -1 on the diagonal, +1 below it.
Matrix transport_matrix(int n);

BilinearSystem build_hex(const HexParams& p);

/// A x + (B x + b) sat(u_raw) + E.
Vector dynamics(const BilinearSystem& sys, const Vector& x, double u_raw);

/// Five consecutive averaging groups over the stacked state, sized like the
/// {1-3, 4-6, 7-9, 10-12, 13-16} layout of a 16-state exchanger: groups of
/// floor(n/5) with the remainder absorbed by the last group.
Matrix averaged_sensor_selector(Index n_states, int groups = 5);

}  // namespace bilinreg
