#pragma once

#include <optional>

#include "bilinreg/design.hpp"

namespace bilinreg {

enum class Law { Forwarding, OutputFeedback, IntegralOnly, PiBaseline };

const char* law_name(Law law);
Law law_from_name(const std::string& name);

/// Baseline PI without anti-windup: u = u_bias + sgn(C F^-1 g) (kp e + ki z).
struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
    double u_bias = 0.0;
};

struct ControllerRuntime {
    Law law = Law::Forwarding;
    double z = 0.0;
    std::optional<Vector> x_hat;
    DesignArtifacts artifacts;
    std::optional<PiGains> pi_gains;

    void validate() const;
};

/// phi(x, z) = -k_p w^T P xt + k_i (z - M xt) (M w), with xt = x - x_ss, w = B xt + g.
double forwarding_phi(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& x);

/// The forwarding law evaluated at the observer estimate.
double output_feedback_phi(const BilinearSystem& sys, const ControllerRuntime& rt);

/// A xh + (B xh + b) u + L (y - D xh) + E, with u already saturated.
Vector observer_rhs(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& y, double u_applied);

/// sgn(C F^-1 g) k_i z. Positive DC gain means a positive integrated error
/// must raise u to pull the output back down.
double integral_only_phi(const ControllerRuntime& rt);

double pi_phi(const ControllerRuntime& rt, double e);

inline double integrator_rhs(double e) { return e; }

/// Raw (unsaturated) command for the runtime's law given the true state and error.
double command(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& x, double e);

/// Slope of the command with respect to z at the current state (every law is affine in z).
double command_z_slope(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& x);

}  // namespace bilinreg
