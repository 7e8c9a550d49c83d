#include "bilinreg/steady_state.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/LU>

#include "bilinreg/errors.hpp"

namespace bilinreg {
namespace {

constexpr double kInvPhi = 0.6180339887498949;

// Golden-section search for the minimiser of f on [lo, hi].
template <class Fn>
double golden_min(Fn&& f, double lo, double hi, double tol) {
    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

Vector pi_map(const BilinearSystem& sys, double u) {
    const double slack = 1e-12 * (1.0 + std::abs(sys.u_min) + std::abs(sys.u_max));
    if (u < sys.u_min - slack || u > sys.u_max + slack) {
        std::ostringstream os;
        os << "pi_map: u = " << u << " outside [" << sys.u_min << ", " << sys.u_max << "]";
        throw InvalidArgument(os.str());
    }
    const Matrix F = sys.F(u);
    Eigen::PartialPivLU<Matrix> lu(F);
    const double rcond = lu.rcond();
    if (!(rcond > 1.0 / kSingularCondition)) {
        throw SingularMatrix("pi_map: A + B u is numerically singular", rcond > 0 ? 1.0 / rcond : INFINITY);
    }
    const Vector rhs = -(sys.b * u + sys.E);
    Vector x = lu.solve(rhs);
    // One refinement step keeps the residual at round-off level for badly scaled F.
    x += lu.solve(rhs - F * x);
    return x;
}

double output_map(const BilinearSystem& sys, double u) { return sys.C.dot(pi_map(sys, u)); }

double regulator_residual(const BilinearSystem& sys, double u, const Vector& x) {
    return (sys.F(u) * x + sys.b * u + sys.E).norm();
}

Equilibrium equilibrium_at(const BilinearSystem& sys, double u) {
    Equilibrium eq;
    eq.u_ss = u;
    eq.x_ss = pi_map(sys, u);
    eq.y_ss = sys.C.dot(eq.x_ss);
    return eq;
}

ReachableSet reachable_set(const BilinearSystem& sys, int grid_points) {
    if (grid_points < 2) throw InvalidArgument("reachable_set: grid_points must be >= 2");
    ReachableSet rs;
    const double lo = sys.u_min, hi = sys.u_max;
    if (hi == lo) {
        const double y = output_map(sys, lo);
        rs.samples = {{lo, y}};
        rs.r_min = rs.r_max = y;
        rs.u_at_min = rs.u_at_max = lo;
        return rs;
    }
    rs.samples.reserve(static_cast<std::size_t>(grid_points) + 2);
    for (int i = 0; i < grid_points; ++i) {
        const double u = (i == grid_points - 1) ? hi : lo + (hi - lo) * i / (grid_points - 1);
        rs.samples.emplace_back(u, output_map(sys, u));
    }

    const auto refine = [&](bool minimise) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < rs.samples.size(); ++i) {
            const bool better = minimise ? rs.samples[i].second < rs.samples[best].second
                                         : rs.samples[i].second > rs.samples[best].second;
            if (better) best = i;
        }
        const double a = rs.samples[best == 0 ? 0 : best - 1].first;
        const double b = rs.samples[std::min(best + 1, rs.samples.size() - 1)].first;
        const double sgn = minimise ? 1.0 : -1.0;
        const double u_star = golden_min([&](double u) { return sgn * output_map(sys, u); }, a, b, 1e-10);
        const double y_star = output_map(sys, u_star);
        // Interior refinement may only improve on the grid value.
        if (sgn * y_star < sgn * rs.samples[best].second) return std::make_pair(u_star, y_star);
        return rs.samples[best];
    };
    const auto mn = refine(true);
    const auto mx = refine(false);
    rs.u_at_min = mn.first;
    rs.r_min = mn.second;
    rs.u_at_max = mx.first;
    rs.r_max = mx.second;
    for (const auto& extra : {mn, mx}) {
        const bool present = std::any_of(rs.samples.begin(), rs.samples.end(),
                                         [&](const auto& s) { return s.first == extra.first; });
        if (!present) rs.samples.push_back(extra);
    }
    std::sort(rs.samples.begin(), rs.samples.end());
    return rs;
}

Equilibrium invert_reference(const BilinearSystem& sys, double r, int grid_points) {
    const ReachableSet rs = reachable_set(sys, grid_points);
    const double tol = 1e-12 * (1.0 + std::abs(r));
    if (r < rs.r_min - tol || r > rs.r_max + tol) {
        std::ostringstream os;
        os << "reference " << r << " outside reachable set [" << rs.r_min << ", " << rs.r_max << "]";
        throw ReferenceUnreachable(os.str(), r, rs.r_min, rs.r_max);
    }
    const double accept = 1e-8 * (1.0 + std::abs(r));
    const auto& s = rs.samples;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double fi = s[i].second - r;
        if (std::abs(fi) <= 1e-14 * (1.0 + std::abs(r))) return equilibrium_at(sys, s[i].first);
        if (i + 1 == s.size()) break;
        const double fj = s[i + 1].second - r;
        if ((fi < 0.0) == (fj < 0.0)) continue;
        // Bracketed bisection on the first sign change in increasing u.
        double a = s[i].first, b = s[i + 1].first, fa = fi;
        double mid = 0.5 * (a + b);
        for (int it = 0; it < 200; ++it) {
            mid = 0.5 * (a + b);
            const double fm = output_map(sys, mid) - r;
            if (fm == 0.0 || b - a <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(mid))) break;
            if ((fm < 0.0) == (fa < 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        Equilibrium eq = equilibrium_at(sys, mid);
        if (std::abs(eq.y_ss - r) <= accept) return eq;
    }
    // Reachable up to tolerance but no bracket: r sits at a refined extremum.
    for (const auto& [u, y] : s) {
        if (std::abs(y - r) <= accept) return equilibrium_at(sys, u);
    }
    throw ReferenceUnreachable("invert_reference: no root found within tolerance", r, rs.r_min, rs.r_max);
}

}  // namespace bilinreg
