#pragma once

#include <utility>
#include <vector>

#include "bilinreg/model.hpp"

namespace bilinreg {

struct Equilibrium {
    double u_ss = 0.0;
    Vector x_ss;
    double y_ss = 0.0;  // C x_ss
};

/// Endpoints of the reachable reference interval C pi([u_min, u_max]).
struct ReachableSet {
    double r_min = 0.0;
    double r_max = 0.0;
    double u_at_min = 0.0;
    double u_at_max = 0.0;
    std::vector<std::pair<double, double>> samples;  // (u, C pi(u)), sorted by u
};

inline constexpr int kDefaultGrid = 256;
inline constexpr double kSingularCondition = 1e14;

/// pi(u) = -(A + B u)^-1 (b u + E). Throws SingularMatrix when the condition
/// estimate of A + B u exceeds 1e14.
Vector pi_map(const BilinearSystem& sys, double u);

/// C pi(u).
double output_map(const BilinearSystem& sys, double u);

/// Euclidean norm of (A + B u) x + b u + E.
double regulator_residual(const BilinearSystem& sys, double u, const Vector& x);

Equilibrium equilibrium_at(const BilinearSystem& sys, double u);

ReachableSet reachable_set(const BilinearSystem& sys, int grid_points = kDefaultGrid);

/// Smallest u_ss in [u_min, u_max] with C pi(u_ss) = r. Throws
/// ReferenceUnreachable when r lies outside the reachable set.
Equilibrium invert_reference(const BilinearSystem& sys, double r, int grid_points = kDefaultGrid);

}  // namespace bilinreg
