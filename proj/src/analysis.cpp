#include "bilinreg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace bilinreg {

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return out;
}

// Golden-section maximiser on [lo, hi].
template <class Fn>
std::pair<double, double> golden_max(Fn f, double lo, double hi, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d; d = c; fd = fc;
            c = b - r * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + r * (b - a); fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

double dc_gain_at(const BilinearSystem& sys, double u) {
    const Vector g = g_of(sys, u);
    return sys.C.dot(sys.F(u).partialPivLu().solve(g));
}

}  // namespace

Assumption1Report check_assumption1(const BilinearSystem& sys, int grid) {
    if (grid < 2) throw InvalidArgument("check_assumption1: grid must have at least 2 points");
    Assumption1Report rep;
    rep.grid = grid;
    const auto us = linspace(sys.u_min, sys.u_max, grid);
    std::vector<double> margin(grid), dc(grid);
    for (int i = 0; i < grid; ++i) {
        margin[i] = max_real_eigenvalue(sys.F(us[i]));
        dc[i] = dc_gain_at(sys, us[i]);
    }
    const int im = static_cast<int>(std::max_element(margin.begin(), margin.end()) - margin.begin());
    rep.hurwitz_margin = margin[im];
    rep.hurwitz_worst_u = us[im];
    int id = 0;
    for (int i = 1; i < grid; ++i)
        if (std::abs(dc[i]) < std::abs(dc[id])) id = i;
    rep.dc_gain_min_abs = std::abs(dc[id]);
    rep.dc_gain_worst_u = us[id];

    const double tol = 1e-12 * (1.0 + std::abs(sys.u_max - sys.u_min));
    if (sys.u_max > sys.u_min) {
        auto [u1, m1] = golden_max([&](double u) { return max_real_eigenvalue(sys.F(u)); },
                                   us[std::max(im - 1, 0)], us[std::min(im + 1, grid - 1)], tol);
        if (m1 > rep.hurwitz_margin) {
            rep.hurwitz_margin = m1;
            rep.hurwitz_worst_u = u1;
        }
        auto [u2, m2] = golden_max([&](double u) { return -std::abs(dc_gain_at(sys, u)); },
                                   us[std::max(id - 1, 0)], us[std::min(id + 1, grid - 1)], tol);
        if (-m2 < rep.dc_gain_min_abs) {
            rep.dc_gain_min_abs = -m2;
            rep.dc_gain_worst_u = u2;
        }
    }
    const bool pos = std::all_of(dc.begin(), dc.end(), [](double v) { return v > 0.0; });
    const bool neg = std::all_of(dc.begin(), dc.end(), [](double v) { return v < 0.0; });
    rep.dc_sign_constant = pos || neg;
    rep.dc_sign = pos ? 1 : (neg ? -1 : 0);
    return rep;
}

Assumption3Report check_assumption3(const BilinearSystem& sys, const Matrix& P, double nu, double eps, int grid_u,
                                    int grid_v) {
    if (grid_u < 2 || grid_v < 2) throw InvalidArgument("check_assumption3: grids must have at least 2 points");
    if (min_sym_eigenvalue(P) <= 0.0) throw InvalidArgument("check_assumption3: P must be positive definite");
    Assumption3Report rep;
    rep.grid_u = grid_u;
    rep.grid_v = grid_v;
    rep.nu = nu;
    rep.eps = eps;
    rep.mu = mu_bound(sys);

    const auto us = linspace(sys.u_min, sys.u_max, grid_u);
    const double w = sys.u_max - sys.u_min;
    auto vs = linspace(-w, w, grid_v);

    rep.a3a_worst_residual = -std::numeric_limits<double>::infinity();
    rep.a3b_min_abs = std::numeric_limits<double>::infinity();
    bool pos = true, neg = true;
    for (double u : us) {
        const Matrix F = sys.F(u);
        const double res = max_sym_eigenvalue(robust_lmi_block(F, P, rep.mu, nu, eps));
        if (res > rep.a3a_worst_residual) {
            rep.a3a_worst_residual = res;
            rep.a3a_worst_u = u;
        }
        const Vector g = g_of(sys, u);
        for (double v : vs) {
            Eigen::PartialPivLU<Matrix> lu(F + v * sys.B);
            double val = 0.0;
            if (!(lu.rcond() > 1.0 / kSingularCondition)) {
                rep.a3b_nonsingular = false;
            } else {
                val = sys.C.dot(lu.solve(g));
            }
            if (std::abs(val) < rep.a3b_min_abs) {
                rep.a3b_min_abs = std::abs(val);
                rep.a3b_worst_u = u;
                rep.a3b_worst_v = v;
            }
            pos = pos && val > 0.0;
            neg = neg && val < 0.0;
        }
    }
    rep.a3b_sign_constant = pos || neg;
    return rep;
}

MonitorConstants monitor_constants(const BilinearSystem& sys, const DesignArtifacts& art, Law law) {
    MonitorConstants mc;
    const Index n = sys.n_states();
    if (law == Law::OutputFeedback && art.observer) {
        const ObserverDesign& od = *art.observer;
        Matrix G(n + 1, n);
        G.topRows(n) = -art.k_p * art.P * od.L * sys.D;
        G.row(n) = art.k_i * (art.M * od.L * sys.D - sys.C);
        // H = diag(k_p P, k_i); a = || H^{-1/2} G ||
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(art.P));
        const Matrix Pinvhalf =
            es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
        Matrix HG(n + 1, n);
        HG.topRows(n) = Pinvhalf * G.topRows(n) / std::sqrt(art.k_p);
        HG.row(n) = G.row(n) / std::sqrt(art.k_i);
        mc.a = spectral_norm(HG);
        mc.q_max = max_sym_eigenvalue(od.Q);
        mc.c = od.eps > 0.0 ? 2.0 * mc.a * std::sqrt(mc.q_max) / od.eps : 0.0;
    }
    if (law == Law::IntegralOnly) {
        double pibar = 0.0;
        if (art.bound) {
            pibar = art.bound->pi_bar;
        } else {
            try {
                pibar = integral_gain_bound(sys, Equilibrium{art.u_ss, art.x_ss, art.reference}, art.P, 1.0).pi_bar;
            } catch (const SingularMatrix&) {
                pibar = 0.0;
            }
        }
        mc.gamma = 2.0 * art.k_i * pibar * std::sqrt(max_sym_eigenvalue(art.P));
    }
    return mc;
}

Monitors lyapunov_monitors(const BilinearSystem& sys, const DesignArtifacts& art, Law law, const Vector& x,
                           const Vector* x_hat, double z, const MonitorConstants& mc) {
    Monitors m;
    switch (law) {
        case Law::Forwarding:
        case Law::OutputFeedback: {
            const Vector& xs = (law == Law::OutputFeedback && x_hat) ? *x_hat : x;
            const Vector xt = xs - art.x_ss;
            const double zt = z - art.M.dot(xt);
            m.V = art.k_p * xt.dot(art.P * xt) + art.k_i * zt * zt;
            if (law == Law::OutputFeedback && x_hat && art.observer) {
                const Vector err = *x_hat - x;
                m.U = err.dot(art.observer->Q * err);
                m.W = std::sqrt(std::max(m.V, 0.0)) + mc.c * std::sqrt(std::max(m.U, 0.0));
            }
            break;
        }
        case Law::IntegralOnly: {
            const double phi = art.dc_sign * art.k_i * z;
            const double v = saturate(art.u_ss + phi, sys) - art.u_ss;
            const Vector g = art.g;
            const Matrix Fv = sys.F(art.u_ss + v);
            const Vector Pi = -Fv.partialPivLu().solve(g);
            const Vector xi = (x - art.x_ss) - Pi * v;
            m.V = xi.dot(art.P * xi);
            m.W = std::sqrt(std::max(m.V, 0.0)) + mc.gamma * std::abs(z);
            break;
        }
        case Law::PiBaseline: break;
    }
    return m;
}

Matrix linearization_matrix(const BilinearSystem& sys, const DesignArtifacts& art, double k_i) {
    if (art.dc_sign == 0) throw ZeroDCGain("linearization_matrix: DC gain sign unknown", art.dc_gain);
    const Index n = sys.n_states();
    Matrix Acal = Matrix::Zero(n + 1, n + 1);
    Acal.topLeftCorner(n, n) = sys.F(art.u_ss);
    Acal.topRightCorner(n, 1) = art.dc_sign * k_i * art.g;
    Acal.bottomLeftCorner(1, n) = sys.C;
    return Acal;
}

double linear_stability_limit(const BilinearSystem& sys, const DesignArtifacts& art, double k_max) {
    auto stable = [&](double k) { return max_real_eigenvalue(linearization_matrix(sys, art, k)) < 0.0; };
    double lo = 1e-15;
    if (!stable(lo)) return 0.0;
    double hi = lo;
    while (stable(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > k_max) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (stable(mid)) lo = mid;
        else hi = mid;
    }
    return hi;
}

}  // namespace bilinreg
