#include "bilinreg/controllers.hpp"

#include <string>

namespace bilinreg {

const char* law_name(Law law) {
    switch (law) {
        case Law::Forwarding: return "forwarding";
        case Law::OutputFeedback: return "output_feedback";
        case Law::IntegralOnly: return "integral_only";
        case Law::PiBaseline: return "pi";
    }
    return "?";
}

Law law_from_name(const std::string& name) {
    if (name == "forwarding") return Law::Forwarding;
    if (name == "output_feedback") return Law::OutputFeedback;
    if (name == "integral_only") return Law::IntegralOnly;
    if (name == "pi") return Law::PiBaseline;
    throw InvalidArgument("unknown law '" + name + "'");
}

void ControllerRuntime::validate() const {
    if (x_hat.has_value() != (law == Law::OutputFeedback))
        throw InvalidArgument("x_hat must be present exactly for the output-feedback law");
    if (pi_gains.has_value() != (law == Law::PiBaseline))
        throw InvalidArgument("pi gains must be present exactly for the PI law");
    if (law == Law::OutputFeedback && !artifacts.observer)
        throw InvalidArgument("output-feedback law needs an observer design");
}

namespace {

double forwarding_at(const BilinearSystem& sys, const DesignArtifacts& a, const Vector& x, double z) {
    const Vector xt = x - a.x_ss;
    const Vector w = sys.B * xt + a.g;
    const double zt = z - a.M.dot(xt);
    return -a.k_p * w.dot(a.P * xt) + a.k_i * zt * a.M.dot(w);
}

}  // namespace

double forwarding_phi(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& x) {
    return forwarding_at(sys, rt.artifacts, x, rt.z);
}

double output_feedback_phi(const BilinearSystem& sys, const ControllerRuntime& rt) {
    if (!rt.x_hat) throw MissingObserverState("output_feedback_phi: no observer estimate");
    return forwarding_at(sys, rt.artifacts, *rt.x_hat, rt.z);
}

Vector observer_rhs(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& y, double u_applied) {
    if (!rt.x_hat) throw MissingObserverState("observer_rhs: no observer estimate");
    if (!rt.artifacts.observer) throw InvalidArgument("observer_rhs: no observer gain");
    const Vector& xh = *rt.x_hat;
    return sys.A * xh + (sys.B * xh + sys.b) * u_applied + rt.artifacts.observer->L * (y - sys.D * xh) + sys.E;
}

double integral_only_phi(const ControllerRuntime& rt) {
    return rt.artifacts.dc_sign * rt.artifacts.k_i * rt.z;
}

double pi_phi(const ControllerRuntime& rt, double e) {
    if (!rt.pi_gains) throw InvalidArgument("pi_phi: no PI gains");
    return rt.artifacts.dc_sign * (rt.pi_gains->kp * e + rt.pi_gains->ki * rt.z);
}

double command(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& x, double e) {
    switch (rt.law) {
        case Law::Forwarding: return rt.artifacts.u_ss + forwarding_phi(sys, rt, x);
        case Law::OutputFeedback: return rt.artifacts.u_ss + output_feedback_phi(sys, rt);
        case Law::IntegralOnly: return rt.artifacts.u_ss + integral_only_phi(rt);
        case Law::PiBaseline: return rt.pi_gains->u_bias + pi_phi(rt, e);
    }
    return rt.artifacts.u_ss;
}

double command_z_slope(const BilinearSystem& sys, const ControllerRuntime& rt, const Vector& x) {
    const DesignArtifacts& a = rt.artifacts;
    switch (rt.law) {
        case Law::Forwarding: return a.k_i * a.M.dot(sys.B * (x - a.x_ss) + a.g);
        case Law::OutputFeedback: {
            if (!rt.x_hat) throw MissingObserverState("command_z_slope: no observer estimate");
            return a.k_i * a.M.dot(sys.B * (*rt.x_hat - a.x_ss) + a.g);
        }
        case Law::IntegralOnly: return a.dc_sign * a.k_i;
        case Law::PiBaseline: return a.dc_sign * rt.pi_gains->ki;
    }
    return 0.0;
}

}  // namespace bilinreg
