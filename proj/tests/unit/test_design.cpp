#include "doctest.h"
#include "oracles.hpp"
#include "toy_systems.hpp"

#include "bilinreg/design.hpp"

using namespace bilinreg;

namespace {

double lam_max(const Matrix& S) { return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (S + S.transpose())).eigenvalues().maxCoeff(); }

// Independent re-check of an observer certificate.
void check_certificate(const Matrix& A, const Matrix& D, const ObserverDesign& od) {
    const Index n = A.rows();
    Matrix blk(2 * n, 2 * n);
    Matrix tl = od.Q * A + A.transpose() * od.Q - od.Y * D - D.transpose() * od.Y.transpose();
    tl += (od.nu * od.mu * od.mu + 2 * od.eps) * Matrix::Identity(n, n);
    blk << tl, od.Q, od.Q, -od.nu * Matrix::Identity(n, n);
    CHECK(lam_max(blk) <= 1e-9);
    const Matrix Acl = A - od.L * D;
    Matrix S = od.Q * Acl + Acl.transpose() * od.Q + od.Q * od.Q / od.nu + od.nu * od.mu * od.mu * Matrix::Identity(n, n);
    CHECK(lam_max(S + 2 * od.eps * Matrix::Identity(n, n)) <= 1e-8);
    CHECK((od.Q * od.L - od.Y).cwiseAbs().maxCoeff() <= 1e-8 * (1 + od.Y.cwiseAbs().maxCoeff()));
    CHECK(-lam_max(-od.Q) >= 1e-9);
    CHECK(od.nu > 0);
    CHECK(od.eps > 0);
}

}  // namespace

TEST_CASE("analytic exchanger P") {
    HexParams p;
    p.V_cold = p.V_hot;
    CHECK(hex_analytic_P(p) == Matrix::Identity(16, 16));

    HexParams t;
    const BilinearSystem h = build_hex(t);
    const Matrix P = hex_analytic_P(t);
    CHECK(P(8, 8) == doctest::Approx(t.V_cold / t.V_hot));
    for (int i = 0; i < 64; ++i) {
        const double u = 0.05 * i / 63;
        const Matrix F = h.F(u);
        CHECK(lam_max(P * F + F.transpose() * P) < 0.0);
    }
}

TEST_CASE("analytic P: single cell closed form") {
    HexParams p;
    p.n_cells = 1;
    const BilinearSystem h = build_hex(p);
    const Matrix P = hex_analytic_P(p);
    const double k = p.lambda / (p.rho * p.cp), alpha = p.V_cold / p.V_hot;
    for (double u : {0.0, 0.01, 0.05}) {
        const double a = k / p.V_hot + u / (p.rho * p.V_hot);
        const double c = k / p.V_cold + p.q_bar / (p.rho * p.V_cold);
        // S = [[-2a, 2k/V], [2k/V, -2 alpha c]]
        const double s11 = -2 * a, s12 = 2 * k / p.V_hot, s22 = -2 * alpha * c;
        const bool neg = s11 < 0 && s11 * s22 - s12 * s12 > 0;
        const Matrix F = h.F(u);
        const Matrix S = P * F + F.transpose() * P;
        CHECK(S(0, 1) == doctest::Approx(s12));
        CHECK(S(1, 1) == doctest::Approx(s22));
        CHECK(neg == (lam_max(S) < 0));
        CHECK(neg);
    }
}

TEST_CASE("forwarding design: exchanger at u = 0.02 with the experiment gains") {
    const BilinearSystem h = build_hex(HexParams{});
    const Equilibrium eq = equilibrium_at(h, 0.02);
    const DesignArtifacts a = forwarding_design(h, eq, 1e-6, 2.6e-5);
    const Matrix F = h.F(0.02);
    const Matrix Pk = oracle::kron_lyapunov(F, Matrix::Identity(16, 16));
    CHECK((a.P - Pk).cwiseAbs().maxCoeff() <= 1e-8 * (1 + Pk.cwiseAbs().maxCoeff()));
    CHECK((F.transpose() * a.P + a.P * F + 2 * a.Upsilon).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.M * F - h.C).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(a.M.dot(a.g)) > 1.0);
    CHECK(a.dc_sign == 1);
    CHECK(-lam_max(-a.P) > 0.0);
}

TEST_CASE("forwarding design: scalar closed form and validation") {
    const BilinearSystem s = toy::scalar();
    const Equilibrium eq = equilibrium_at(s, 1.0);
    const Matrix U = 3.0 * Matrix::Identity(1, 1);
    const DesignArtifacts a = forwarding_design(s, eq, 1.0, 1.0, U);
    CHECK(a.M(0) == doctest::Approx(-1.0));
    CHECK(a.P(0, 0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(forwarding_design(s, eq, 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(forwarding_design(s, eq, 1.0, -1.0), InvalidArgument);
    CHECK_THROWS_AS(forwarding_design(s, eq, 1.0, 1.0, -U), InvalidArgument);
}

TEST_CASE("forwarding design: zero DC gain") {
    BilinearSystem s;
    s.A = -Matrix::Identity(2, 2);
    s.B = Matrix::Zero(2, 2);
    s.b = Vector::Unit(2, 0);
    s.E = Vector::Zero(2);
    s.C = RowVector::Unit(2, 1);
    s.D = s.C;
    s.u_min = 0;
    s.u_max = 1;
    const Equilibrium eq = equilibrium_at(s, 0.5);
    CHECK_THROWS_AS(forwarding_design(s, eq, 1, 1), ZeroDCGain);
    CHECK_THROWS_AS(sign_dc_gain(s, eq), ZeroDCGain);
}

TEST_CASE("forwarding design: not Hurwitz") {
    BilinearSystem s = toy::scalar();
    s.A(0, 0) = 1.0;
    s.u_min = -1;
    s.u_max = 0.5;
    const Equilibrium eq = equilibrium_at(s, 0.5);
    CHECK_THROWS_AS(forwarding_design(s, eq, 1, 1), NotHurwitz);
}

TEST_CASE("observer LMI: trivial full-state case") {
    BilinearSystem s;
    s.A = -Matrix::Identity(3, 3);
    s.B = Matrix::Zero(3, 3);
    s.b = Vector::Zero(3);
    s.E = Vector::Zero(3);
    s.C = RowVector::Unit(3, 0);
    s.D = Matrix::Identity(3, 3);
    s.u_min = 0;
    s.u_max = 1;
    const ObserverDesign od = observer_design(s);
    CHECK(od.certified);
    CHECK(od.mu == 0.0);
    check_certificate(s.A, s.D, od);
    // the hand-checkable point Q = I, Y = 0, eps = 1/2, nu = 1
    ObserverDesign h;
    h.Q = Matrix::Identity(3, 3);
    h.Y = Matrix::Zero(3, 3);
    CHECK(lam_max(observer_lmi_block(s.A, s.D, 0.0, h.Q, h.Y, 1.0, 0.5)) <= 1e-12);
}

TEST_CASE("observer LMI: partial measurement on a damped plant") {
    const BilinearSystem s = toy::damped2();
    const ObserverDesign od = observer_design(s);
    CHECK(od.certified);
    check_certificate(s.A, s.D, od);
    CHECK(od.mu == doctest::Approx(spectral_norm(s.B)));
}

TEST_CASE("observer LMI: full-state exchanger is certified") {
    BilinearSystem h = build_hex(HexParams{});
    h.D = Matrix::Identity(16, 16);
    const ObserverDesign od = observer_design(h);
    CHECK(od.certified);
    check_certificate(h.A, h.D, od);
}

TEST_CASE("observer LMI: exchanger with averaged sensors has no certificate") {
    BilinearSystem h = build_hex(HexParams{});
    h.D = averaged_sensor_selector(16);
    // Necessary condition: |A w| > mu |w| on ker D. It fails, so no (Q, Y, nu, eps) exists.
    Eigen::FullPivLU<Matrix> lu(h.D);
    const Matrix K = lu.kernel();
    Eigen::HouseholderQR<Matrix> qr(K);
    const Matrix N = qr.householderQ() * Matrix::Identity(16, K.cols());
    const double smin = Eigen::JacobiSVD<Matrix>(h.A * N).singularValues().minCoeff();
    CHECK(smin < mu_bound(h));
    try {
        LmiSolverOptions o;
        o.max_iterations = 300;
        observer_design(h, o);
        FAIL("expected Infeasible");
    } catch (const Infeasible& e) {
        CHECK_FALSE(e.best.certified);
        CHECK(lam_max(observer_lmi_block(h.A, h.D, e.best.mu, e.best.Q, e.best.Y, e.best.nu, e.best.eps)) > 0.0);
        CHECK((e.best.Q * e.best.L - e.best.Y).cwiseAbs().maxCoeff() <= 1e-8 * (1 + e.best.Y.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("observer LMI: unobservable pair") {
    BilinearSystem s;
    s.A = Matrix::Zero(2, 2);
    s.B = Matrix::Zero(2, 2);
    s.b = Vector::Zero(2);
    s.E = Vector::Zero(2);
    s.C = RowVector::Unit(2, 0);
    s.D = Matrix(1, 2);
    s.D << 1, 0;
    s.u_min = 0;
    s.u_max = 1;
    CHECK_THROWS_AS(observer_design(s), NotObservable);
}

TEST_CASE("integral gain bound: closed forms") {
    const BilinearSystem s = toy::scalar();
    const Equilibrium eq = equilibrium_at(s, 1.0);
    const IntegralBound ib = integral_gain_bound(s, eq, Matrix::Identity(1, 1), 1.0);
    CHECK(ib.ki_star == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(ib.gamma(0.5) == doctest::Approx(1.0));

    // B = 0: pibar = |F^-1 g| for any P
    BilinearSystem t = toy::damped2();
    t.B.setZero();
    const Equilibrium et = equilibrium_at(t, 0.3);
    oracle::Rng rng(1);
    const Matrix P = rng.spd(2);
    const IntegralBound b2 = integral_gain_bound(t, et, P, 0.7);
    const double pn = t.F(0.3).inverse().operator*(t.b).norm();
    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    const double expect = 0.7 / (3 * t.C.norm() * pn * std::sqrt(es.eigenvalues()(0) * es.eigenvalues()(1)));
    CHECK(b2.ki_star == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("integral gain bound: monotone in eps, inverse in pibar") {
    const BilinearSystem s = toy::damped2();
    const Equilibrium eq = equilibrium_at(s, 0.5);
    const Matrix P = solve_lyapunov(s.F(0.5), Matrix::Identity(2, 2));
    const IntegralBound a = integral_gain_bound(s, eq, P, 0.1);
    const IntegralBound b = integral_gain_bound(s, eq, P, 0.2);
    CHECK(b.ki_star > a.ki_star);
    CHECK(b.ki_star == doctest::Approx(2 * a.ki_star));
    CHECK(a.ki_star * a.pi_bar == doctest::Approx(0.1 / (3 * a.c0 * std::sqrt(a.p_min * a.p_max))));
    CHECK_THROWS_AS(integral_gain_bound(s, eq, P, 0.0), InvalidArgument);
}

TEST_CASE("integral gain bound: exchanger regression against a dense-grid supremum") {
    const BilinearSystem h = build_hex(HexParams{});
    const Equilibrium eq = invert_reference(h, 26.5 + 273.15);
    const Matrix F = h.F(eq.u_ss);
    const Matrix P = oracle::kron_lyapunov(F, Matrix::Identity(16, 16));
    const Vector g = h.B * eq.x_ss + h.b;
    double sup = 0;
    for (int i = 0; i <= 8000; ++i) {
        const double v = -0.05 + 0.1 * i / 8000;
        const Matrix Fv = F + v * h.B;
        const Vector w = Fv.colPivHouseholderQr().solve(g);
        sup = std::max(sup, (Fv.colPivHouseholderQr().solve(v * h.B * w) - w).norm());
    }
    const IntegralBound ib = integral_gain_bound(h, eq, P, 1.0);
    CHECK(ib.pi_bar >= sup * (1 - 1e-9));
    CHECK(ib.pi_bar <= sup * (1 + 1e-3));
    CHECK(ib.ki_star > 0);
    CHECK(ib.ki_star == doctest::Approx(6.4911e-8).epsilon(2e-3));
}

TEST_CASE("dc gain sign") {
    const BilinearSystem s = toy::scalar();
    const Equilibrium eq = equilibrium_at(s, 1.0);
    CHECK(sign_dc_gain(s, eq) == -1);
    BilinearSystem n = s;
    n.C = -s.C;
    CHECK(sign_dc_gain(n, eq) == 1);

    const BilinearSystem h = build_hex(HexParams{});
    const int s0 = sign_dc_gain(h, equilibrium_at(h, 0.02));
    for (int i = 0; i < 64; ++i) CHECK(sign_dc_gain(h, equilibrium_at(h, 0.05 * i / 63)) == s0);
}

TEST_CASE("robust certificate and pure-integral design") {
    const BilinearSystem s = toy::damped2();
    const Equilibrium eq = equilibrium_at(s, 0.5);
    const DesignArtifacts a = integral_only_design(s, eq, 1e-3);
    REQUIRE(a.robust);
    CHECK(a.robust->feasible);
    CHECK(a.robust->residual <= 0.0);
    REQUIRE(a.bound);
    CHECK(a.bound->ki_star > 1e-3);
    CHECK(a.warnings.empty());
    const DesignArtifacts big = integral_only_design(s, eq, 10 * a.bound->ki_star);
    CHECK(big.warnings.size() == 1);

    // the exchanger: sigma_min(F) is far below mu, so no certificate
    const BilinearSystem h = build_hex(HexParams{});
    const DesignArtifacts ah = integral_only_design(h, invert_reference(h, 299.65), 1e-6);
    REQUIRE(ah.robust);
    CHECK_FALSE(ah.robust->feasible);
    CHECK_FALSE(ah.bound);
    CHECK(ah.warnings.size() == 1);
}
