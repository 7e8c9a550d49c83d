#include "bilinreg/model.hpp"

#include <algorithm>
#include <string>

#include "bilinreg/errors.hpp"

namespace bilinreg {

void HexParams::validate() const {
    if (n_cells <= 0) throw InvalidArgument("HexParams: n_cells must be positive");
    const auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw InvalidArgument(std::string("HexParams: ") + name + " must be > 0");
    };
    positive(lambda, "lambda");
    positive(rho, "rho");
    positive(cp, "cp");
    positive(V_hot, "V_hot");
    positive(V_cold, "V_cold");
    positive(q_bar, "q_bar");
    positive(T_in_hot, "T_in_hot");
    positive(T_in_cold, "T_in_cold");
    if (!(u_min >= 0.0)) throw InvalidArgument("HexParams: u_min must be >= 0");
    if (!(u_min < u_max)) throw InvalidArgument("HexParams: u_min must be < u_max");
}

void BilinearSystem::validate() const {
    const Index n = A.rows();
    if (n == 0 || A.cols() != n) throw InvalidArgument("BilinearSystem: A must be square and non-empty");
    if (B.rows() != n || B.cols() != n) throw InvalidArgument("BilinearSystem: B must be n x n");
    if (b.size() != n) throw InvalidArgument("BilinearSystem: b must have n entries");
    if (E.size() != n) throw InvalidArgument("BilinearSystem: E must have n entries");
    if (C.size() != n) throw InvalidArgument("BilinearSystem: C must be 1 x n");
    if (D.cols() != n) throw InvalidArgument("BilinearSystem: D must have n columns");
    if (!(u_min <= u_max)) throw InvalidArgument("BilinearSystem: u_min must not exceed u_max");
}

double saturate(double u, double u_min, double u_max) {
    return std::clamp(u, u_min, u_max);
}

Matrix transport_matrix(int n) {
    Matrix S = -Matrix::Identity(n, n);
    for (int i = 1; i < n; ++i) S(i, i - 1) = 1.0;
    return S;
}

BilinearSystem build_hex(const HexParams& p) {
    p.validate();
    const int n = p.n_cells;
    const double k = p.lambda / (p.rho * p.cp);
    const double ex_hot = k / p.V_hot;
    const double ex_cold = k / p.V_cold;
    const Matrix S = transport_matrix(n);
    const Matrix I = Matrix::Identity(n, n);

    BilinearSystem sys;
    sys.A = Matrix::Zero(2 * n, 2 * n);
    sys.A.topLeftCorner(n, n) = -ex_hot * I;
    sys.A.topRightCorner(n, n) = ex_hot * I;
    sys.A.bottomLeftCorner(n, n) = ex_cold * I;
    // Counter stream enters at cell n and travels towards cell 1.
    sys.A.bottomRightCorner(n, n) = -ex_cold * I + (p.q_bar / (p.rho * p.V_cold)) * S.transpose();

    sys.B = Matrix::Zero(2 * n, 2 * n);
    sys.B.topLeftCorner(n, n) = S / (p.rho * p.V_hot);

    sys.b = Vector::Zero(2 * n);
    sys.b(0) = p.T_in_hot / (p.rho * p.V_hot);

    sys.E = Vector::Zero(2 * n);
    sys.E(2 * n - 1) = p.q_bar * p.T_in_cold / (p.rho * p.V_cold);

    // Outlet of the counter stream, Tbar_1, is both measured and regulated.
    sys.D = Matrix::Zero(1, 2 * n);
    sys.D(0, n) = 1.0;
    sys.C = sys.D.row(0);

    sys.u_min = p.u_min;
    sys.u_max = p.u_max;
    sys.hex = p;
    return sys;
}

Vector dynamics(const BilinearSystem& sys, const Vector& x, double u_raw) {
    if (x.size() != sys.n_states()) throw InvalidArgument("dynamics: state dimension mismatch");
    const double u = saturate(u_raw, sys);
    return sys.A * x + (sys.B * x + sys.b) * u + sys.E;
}

Matrix averaged_sensor_selector(Index n_states, int groups) {
    if (groups <= 0 || n_states < groups) throw InvalidArgument("averaged_sensor_selector: too few states");
    const Index width = n_states / groups;
    Matrix D = Matrix::Zero(groups, n_states);
    for (int g = 0; g < groups; ++g) {
        const Index first = g * width;
        const Index last = (g == groups - 1) ? n_states : first + width;
        D.row(g).segment(first, last - first).setConstant(1.0 / static_cast<double>(last - first));
    }
    return D;
}

}  // namespace bilinreg
