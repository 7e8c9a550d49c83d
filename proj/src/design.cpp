#include "bilinreg/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace bilinreg {

namespace {

// Solve F^T m^T = C^T with one refinement step.
RowVector forwarding_row(const Matrix& F, const RowVector& C) {
    Eigen::PartialPivLU<Matrix> lu(F.transpose());
    Vector m = lu.solve(C.transpose());
    m += lu.solve(C.transpose() - F.transpose() * m);
    return m.transpose();
}

void require_spd(const Matrix& S, const char* what) {
    if (S.rows() != S.cols()) throw InvalidArgument(std::string(what) + " must be square");
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + S.cwiseAbs().maxCoeff()))
        throw InvalidArgument(std::string(what) + " must be symmetric");
    if (min_sym_eigenvalue(S) <= 0.0) throw InvalidArgument(std::string(what) + " must be positive definite");
}

template <class Fn>
double golden_max(Fn f, double lo, double hi, double tol, double* arg) {
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
    if (arg) *arg = x;
    return f(x);
}

// Euclidean projection of the spectrum onto {lambda_i >= delta, sum lambda_i = target}.
Matrix project_trace_box(const Matrix& Q, double delta, double target) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Q));
    const Vector lam = es.eigenvalues();
    auto mass = [&](double tau) { return (lam.array() - tau).max(delta).sum(); };
    double lo = lam.minCoeff() - target, hi = lam.maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(mid) > target) lo = mid;
        else hi = mid;
    }
    const Vector proj = (lam.array() - 0.5 * (lo + hi)).max(delta).matrix();
    return symmetrize(es.eigenvectors() * proj.asDiagonal() * es.eigenvectors().transpose());
}

struct TopEig {
    double value;
    Vector vec;
};

TopEig top_eigen(const Matrix& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
    const Index k = S.rows() - 1;
    return {es.eigenvalues()(k), es.eigenvectors().col(k)};
}

}  // namespace

double IntegralBound::gamma(double k_i) const { return 2.0 * k_i * pi_bar * std::sqrt(p_max); }

Vector g_of(const BilinearSystem& sys, double u) { return sys.B * pi_map(sys, u) + sys.b; }

double mu_bound(const BilinearSystem& sys) {
    return spectral_norm(sys.B) * std::max(std::abs(sys.u_min), std::abs(sys.u_max));
}

Matrix hex_analytic_P(const HexParams& p) {
    p.validate();
    const Index n = p.n_cells;
    Vector d(2 * n);
    d.head(n).setOnes();
    d.tail(n).setConstant(p.V_cold / p.V_hot);
    return d.asDiagonal();
}

DesignArtifacts forwarding_design(const BilinearSystem& sys, const Equilibrium& eq, double k_p, double k_i,
                                  const Matrix& Upsilon) {
    if (!(k_p > 0.0) || !std::isfinite(k_p)) throw InvalidArgument("k_p must be positive");
    if (!(k_i > 0.0) || !std::isfinite(k_i)) throw InvalidArgument("k_i must be positive");
    const Index n = sys.n_states();
    if (Upsilon.rows() != n) throw InvalidArgument("Upsilon has the wrong dimension");
    require_spd(Upsilon, "Upsilon");

    DesignArtifacts art;
    art.u_ss = eq.u_ss;
    art.x_ss = eq.x_ss;
    art.reference = eq.y_ss;
    art.k_p = k_p;
    art.k_i = k_i;
    art.Upsilon = Upsilon;

    const Matrix F = sys.F(eq.u_ss);
    art.P = solve_lyapunov(F, Upsilon);
    art.M = forwarding_row(F, sys.C);
    art.g = sys.B * eq.x_ss + sys.b;
    art.dc_gain = art.M.dot(art.g);
    const double scale = 1.0 + art.M.norm() * art.g.norm();
    if (std::abs(art.dc_gain) <= 1e-12 * scale)
        throw ZeroDCGain("forwarding_design: M g vanishes at u_ss", art.dc_gain);
    art.dc_sign = art.dc_gain > 0.0 ? 1 : -1;
    return art;
}

Matrix observer_lmi_block(const Matrix& A, const Matrix& D, double mu, const Matrix& Q, const Matrix& Y,
                          double nu, double eps) {
    const Index n = A.rows();
    Matrix blk(2 * n, 2 * n);
    Matrix tl = Q * A + A.transpose() * Q - Y * D - D.transpose() * Y.transpose();
    tl.diagonal().array() += nu * mu * mu + 2.0 * eps;
    blk.topLeftCorner(n, n) = tl;
    blk.topRightCorner(n, n) = Q;
    blk.bottomLeftCorner(n, n) = Q;
    blk.bottomRightCorner(n, n) = -nu * Matrix::Identity(n, n);
    return symmetrize(blk);
}

Matrix observer_schur_form(const Matrix& A, const Matrix& D, double mu, const ObserverDesign& od) {
    const Matrix Acl = A - od.L * D;
    Matrix S = od.Q * Acl + Acl.transpose() * od.Q + od.Q * od.Q / od.nu;
    S.diagonal().array() += od.nu * mu * mu;
    return symmetrize(S);
}

ObserverDesign observer_design(const BilinearSystem& sys, const LmiSolverOptions& opts) {
    const Matrix& A = sys.A;
    const Matrix& D = sys.D;
    const Index n = A.rows();
    const Index p = D.rows();
    if (p == 0 || D.cols() != n) throw InvalidArgument("observer_design: D has the wrong shape");
    if (!is_observable(A, D)) throw NotObservable("observer_design: (A, D) is not observable");

    const double mu = mu_bound(sys);
    const double delta = opts.delta;
    const Matrix In = Matrix::Identity(n, n);

    Matrix Q = In;
    Matrix Y = riccati_observer_gain(A, D, In, Matrix::Identity(p, p) / (1.0 + 4.0 * mu * mu));
    double log_nu = -std::log(std::max(mu, 1e-3));

    auto objective = [&](const Matrix& q, const Matrix& y, double lnu) {
        return top_eigen(observer_lmi_block(A, D, mu, q, y, std::exp(lnu), delta));
    };

    ObserverDesign best;
    best.mu = mu;
    double best_t = std::numeric_limits<double>::infinity();
    const double radius = std::sqrt(static_cast<double>(n));

    int k = 0;
    for (; k <= opts.max_iterations; ++k) {
        const TopEig te = objective(Q, Y, log_nu);
        if (te.value < best_t) {
            best_t = te.value;
            best.Q = Q;
            best.Y = Y;
            best.nu = std::exp(log_nu);
            best.iterations = k;
        }
        if (best_t < -opts.feasibility_tol || k == opts.max_iterations) break;

        const Vector v1 = te.vec.head(n);
        const Vector v2 = te.vec.tail(n);
        const Vector Av1 = A * v1;
        const Matrix GQ = Av1 * v1.transpose() + v1 * Av1.transpose() + v1 * v2.transpose() + v2 * v1.transpose();
        const Matrix GY = -2.0 * v1 * (D * v1).transpose();
        const double nu = std::exp(log_nu);
        const double Gl = nu * (mu * mu * v1.squaredNorm() - v2.squaredNorm());
        const double gnorm = std::sqrt(GQ.squaredNorm() + GY.squaredNorm() + Gl * Gl);
        if (gnorm == 0.0) break;

        const double alpha = opts.step * radius / std::sqrt(static_cast<double>(k + 1)) / gnorm;
        Q = project_trace_box(Q - alpha * GQ, delta, static_cast<double>(n));
        Y -= alpha * GY;
        log_nu = std::max(log_nu - alpha * Gl, std::log(delta));
    }

    best.L = best.Q.partialPivLu().solve(best.Y);
    if (best_t < -opts.feasibility_tol) {
        best.eps = delta - best_t / 4.0;
        best.lmi_residual = max_sym_eigenvalue(observer_lmi_block(A, D, mu, best.Q, best.Y, best.nu, best.eps));
        best.certified = best.lmi_residual <= 0.0;
        if (best.certified) return best;
    } else {
        best.eps = delta;
        best.lmi_residual = best_t;
    }
    best.certified = false;
    throw Infeasible("observer_design: no feasible LMI certificate found (best residual " +
                         std::to_string(best.lmi_residual) + ")",
                     best);
}

Matrix robust_lmi_block(const Matrix& F, const Matrix& P, double mu, double nu, double eps) {
    const Index n = F.rows();
    Matrix blk(2 * n, 2 * n);
    Matrix tl = P * F + F.transpose() * P;
    tl.diagonal().array() += nu * mu * mu + 2.0 * eps;
    blk.topLeftCorner(n, n) = tl;
    blk.topRightCorner(n, n) = P;
    blk.bottomLeftCorner(n, n) = P;
    blk.bottomRightCorner(n, n) = -nu * Matrix::Identity(n, n);
    return symmetrize(blk);
}

RobustCertificate fit_robust_certificate(const Matrix& F, const Matrix& P, double mu) {
    const Matrix sym = symmetrize(P * F + F.transpose() * P);
    const Matrix P2 = symmetrize(P * P);
    auto eps_of = [&](double lnu) {
        const double nu = std::exp(lnu);
        Matrix S = sym + P2 / nu;
        S.diagonal().array() += nu * mu * mu;
        return -0.5 * max_sym_eigenvalue(S);
    };
    // the margin is concave in nu, hence unimodal in log nu
    const double nu0 = spectral_norm(P) / std::max(mu, 1e-8 * (1.0 + spectral_norm(F)));
    double lnu = 0.0;
    RobustCertificate rc;
    rc.eps_max = golden_max(eps_of, std::log(nu0) - 40.0, std::log(nu0) + 40.0, 1e-9, &lnu);
    rc.nu = std::exp(lnu);
    rc.feasible = rc.eps_max > 0.0;
    rc.eps = rc.feasible ? 0.5 * rc.eps_max : rc.eps_max;
    rc.residual = max_sym_eigenvalue(robust_lmi_block(F, P, mu, rc.nu, rc.eps));
    return rc;
}

IntegralBound integral_gain_bound(const BilinearSystem& sys, const Equilibrium& eq, const Matrix& P, double eps,
                                  int grid_points) {
    if (!(eps > 0.0)) throw InvalidArgument("integral_gain_bound: eps must be positive");
    if (grid_points < 2) throw InvalidArgument("integral_gain_bound: grid must have at least 2 points");
    require_spd(P, "P");

    const Matrix F = sys.F(eq.u_ss);
    const Vector g = sys.B * eq.x_ss + sys.b;
    const Index n = F.rows();
    auto pi_norm = [&](double v) {
        const Matrix Fv = F + v * sys.B;
        Eigen::PartialPivLU<Matrix> lu(Fv);
        const double rc = lu.rcond();
        if (!(rc > 1.0 / kSingularCondition))
            throw SingularMatrix("integral_gain_bound: F + B v is singular on the deviation set",
                                 rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity());
        const Vector w = lu.solve(g);
        const Vector r = lu.solve(v * (sys.B * w)) - w;
        return r.norm();
    };

    const double w = sys.u_max - sys.u_min;
    IntegralBound ib;
    int arg = 0;
    double best = -1.0;
    std::vector<double> vs(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        vs[i] = grid_points == 1 ? 0.0 : -w + 2.0 * w * i / (grid_points - 1);
        const double val = pi_norm(vs[i]);
        if (val > best) {
            best = val;
            arg = i;
        }
    }
    ib.v_at_sup = vs[arg];
    if (w > 0.0) {
        const double lo = vs[std::max(arg - 1, 0)];
        const double hi = vs[std::min(arg + 1, grid_points - 1)];
        double v = 0.0;
        const double refined = golden_max(pi_norm, lo, hi, 1e-12 * (1.0 + w), &v);
        if (refined > best) {
            best = refined;
            ib.v_at_sup = v;
        }
    }
    ib.pi_bar = best;
    ib.c0 = sys.C.norm();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(P), Eigen::EigenvaluesOnly);
    ib.p_min = es.eigenvalues()(0);
    ib.p_max = es.eigenvalues()(n - 1);
    ib.eps = eps;
    ib.ki_star = eps / (3.0 * ib.c0 * ib.pi_bar * std::sqrt(ib.p_min * ib.p_max));
    return ib;
}

int sign_dc_gain(const BilinearSystem& sys, const Equilibrium& eq) {
    const Matrix F = sys.F(eq.u_ss);
    const Vector g = sys.B * eq.x_ss + sys.b;
    const Vector w = F.partialPivLu().solve(g);
    const double h = sys.C.dot(w);
    if (std::abs(h) <= 1e-12 * (1.0 + sys.C.norm() * w.norm()))
        throw ZeroDCGain("sign_dc_gain: C F^-1 g vanishes", h);
    return h > 0.0 ? 1 : -1;
}

DesignArtifacts integral_only_design(const BilinearSystem& sys, const Equilibrium& eq, double k_i,
                                     const Matrix& Upsilon) {
    if (!(k_i >= 0.0) || !std::isfinite(k_i)) throw InvalidArgument("k_i must be nonnegative");
    const Index n = sys.n_states();
    if (Upsilon.rows() != n) throw InvalidArgument("Upsilon has the wrong dimension");
    require_spd(Upsilon, "Upsilon");

    DesignArtifacts art;
    art.u_ss = eq.u_ss;
    art.x_ss = eq.x_ss;
    art.reference = eq.y_ss;
    art.k_i = k_i;
    art.Upsilon = Upsilon;
    const Matrix F = sys.F(eq.u_ss);
    art.P = solve_lyapunov(F, Upsilon);
    art.M = forwarding_row(F, sys.C);
    art.g = sys.B * eq.x_ss + sys.b;
    art.dc_sign = sign_dc_gain(sys, eq);
    art.dc_gain = art.M.dot(art.g);

    const RobustCertificate rc = fit_robust_certificate(F, art.P, mu_bound(sys));
    art.robust = rc;
    if (!rc.feasible) {
        art.warnings.push_back("robust-stability LMI has no certificate at u_ss (best eps " +
                               std::to_string(rc.eps_max) + "); k_i* is undefined");
        return art;
    }
    try {
        art.bound = integral_gain_bound(sys, eq, art.P, rc.eps);
    } catch (const SingularMatrix& e) {
        art.warnings.push_back(std::string("k_i* undefined: ") + e.what());
        return art;
    }
    if (k_i > 0.0 && k_i >= art.bound->ki_star)
        art.warnings.push_back("k_i = " + std::to_string(k_i) + " is not below k_i* = " +
                               std::to_string(art.bound->ki_star));
    return art;
}

}  // namespace bilinreg
