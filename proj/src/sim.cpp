#include "bilinreg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace bilinreg {

void SimScenario::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("scenario: dt must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("scenario: t_end must be positive");
    if (references.empty()) throw InvalidArgument("scenario: the reference schedule is empty");
    if (references.front().t != 0.0) throw InvalidArgument("scenario: the first reference must start at t = 0");
    auto check = [&](const std::vector<ScheduleEntry>& s, const char* what) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i].t < 0.0 || s[i].t > t_end)
                throw InvalidArgument(std::string("scenario: ") + what + " time outside [0, t_end]");
            if (i > 0 && !(s[i].t > s[i - 1].t))
                throw InvalidArgument(std::string("scenario: ") + what + " times must be strictly increasing");
        }
    };
    check(references, "reference");
    check(disturbances, "disturbance");
    if (law == Law::PiBaseline && !pi) throw InvalidArgument("scenario: the PI law needs pi gains");
    if (law != Law::PiBaseline && law != Law::IntegralOnly && !(k_p > 0.0))
        throw InvalidArgument("scenario: k_p must be positive");
    if (!ki_fraction_of_bound && law != Law::PiBaseline) {
        // k_i = 0 is allowed for the pure-integral law: it is the open loop at u_ss
        if (law == Law::IntegralOnly ? !(k_i >= 0.0) : !(k_i > 0.0))
            throw InvalidArgument("scenario: k_i must be positive");
    }
    if (log_every < 1) throw InvalidArgument("scenario: log_every must be at least 1");
}

std::size_t DesignBundle::index_of(double r) const {
    for (std::size_t i = 0; i < references.size(); ++i)
        if (references[i] == r) return i;
    throw InvalidArgument("design bundle has no design for reference " + std::to_string(r));
}

BilinearSystem scenario_system(const BilinearSystem& sys, const SimScenario& scn) {
    BilinearSystem out = sys;
    switch (scn.sensors) {
        case Sensors::Model: break;
        case Sensors::Outlet: out.D = sys.C; break;
        case Sensors::FiveAverage: out.D = averaged_sensor_selector(sys.n_states()); break;
    }
    return out;
}

DesignBundle design_for_scenario(const BilinearSystem& sys_in, const SimScenario& scn) {
    scn.validate();
    const BilinearSystem sys = scenario_system(sys_in, scn);
    const Index n = sys.n_states();
    const Matrix Ups = scn.upsilon_scale * Matrix::Identity(n, n);

    DesignBundle bundle;
    std::optional<ObserverDesign> observer;
    if (scn.law == Law::OutputFeedback) {
        try {
            observer = observer_design(sys);
        } catch (const Infeasible& inf) {
            if (!scn.allow_uncertified) throw;
            observer = inf.best;
            bundle.warnings.push_back(std::string("uncertified observer gain in use: ") + inf.what());
        }
    }

    for (const auto& ref : scn.references) {
        if (std::find(bundle.references.begin(), bundle.references.end(), ref.value) != bundle.references.end())
            continue;
        const Equilibrium eq = invert_reference(sys, ref.value);
        DesignArtifacts art;
        switch (scn.law) {
            case Law::Forwarding:
            case Law::OutputFeedback:
                art = forwarding_design(sys, eq, scn.k_p, scn.k_i, Ups);
                art.observer = observer;
                break;
            case Law::IntegralOnly: {
                art = integral_only_design(sys, eq, scn.ki_fraction_of_bound ? 1.0 : scn.k_i, Ups);
                if (scn.ki_fraction_of_bound) {
                    if (!art.bound)
                        throw Error("k_i is requested as a fraction of k_i*, but no k_i* exists at r = " +
                                    std::to_string(ref.value));
                    art.k_i = *scn.ki_fraction_of_bound * art.bound->ki_star;
                    art.warnings.erase(std::remove_if(art.warnings.begin(), art.warnings.end(),
                                                      [](const std::string& w) { return w.rfind("k_i = ", 0) == 0; }),
                                       art.warnings.end());
                }
                break;
            }
            case Law::PiBaseline:
                art.reference = eq.y_ss;
                art.u_ss = eq.u_ss;
                art.x_ss = eq.x_ss;
                art.g = sys.B * eq.x_ss + sys.b;
                art.dc_sign = sign_dc_gain(sys, eq);
                art.P = Matrix::Identity(n, n);
                art.Upsilon = Ups;
                art.M = RowVector::Zero(n);
                break;
        }
        for (const auto& w : art.warnings) bundle.warnings.push_back(w);
        bundle.monitors.push_back(monitor_constants(sys, art, scn.law));
        bundle.references.push_back(ref.value);
        bundle.designs.push_back(std::move(art));
    }
    return bundle;
}

namespace {

double schedule_value(const std::vector<ScheduleEntry>& s, double t, double dflt) {
    double v = dflt;
    for (const auto& e : s) {
        if (e.t <= t) v = e.value;
        else break;
    }
    return v;
}

}  // namespace

SimResult run(const BilinearSystem& sys_in, const SimScenario& scn, const DesignBundle& bundle) {
    scn.validate();
    const BilinearSystem sys = scenario_system(sys_in, scn);
    const Index n = sys.n_states();
    const bool observer = scn.law == Law::OutputFeedback;

    std::size_t idx = bundle.index_of(scn.references.front().value);
    ControllerRuntime rt;
    rt.law = scn.law;
    rt.artifacts = bundle.designs[idx];
    if (scn.law == Law::PiBaseline) {
        PiGains pg = *scn.pi;
        pg.u_bias = scn.pi_u_bias ? *scn.pi_u_bias : bundle.designs[idx].u_ss;
        rt.pi_gains = pg;
    }

    Vector x = scn.x0 ? *scn.x0 : bundle.designs[idx].x_ss;
    if (x.size() != n) throw InvalidArgument("scenario: x0 has the wrong dimension");
    Vector xh;
    if (observer) {
        if (!bundle.designs[idx].observer) throw InvalidArgument("output-feedback run without observer design");
        xh = scn.x_hat0 ? *scn.x_hat0 : Vector(x.array() + scn.x_hat0_offset);
        if (xh.size() != n) throw InvalidArgument("scenario: x_hat0 has the wrong dimension");
        rt.x_hat = xh;
    }
    double z = 0.0;

    const long steps = std::lround(scn.t_end / scn.dt);
    const Index dim = n + 1 + (observer ? n : 0);

    SimResult res;
    res.u_min = sys.u_min;
    res.u_max = sys.u_max;
    res.has_V = scn.law != Law::PiBaseline;
    res.has_U = observer;
    res.has_W = observer || scn.law == Law::IntegralOnly;

    double r = 0.0, d = 0.0;
    auto unpack = [&](const Vector& s) {
        rt.z = s(n);
        if (observer) rt.x_hat = s.tail(n);
    };
    auto rhs = [&](const Vector& s) {
        unpack(s);
        const Vector xs = s.head(n);
        const double e = sys.C.dot(xs) - r + d;
        const double u = saturate(command(sys, rt, xs, e), sys);
        Vector ds(dim);
        ds.head(n) = dynamics(sys, xs, u);
        ds(n) = integrator_rhs(e);
        if (observer) ds.tail(n) = observer_rhs(sys, rt, sys.D * xs, u);
        return ds;
    };
    auto log_sample = [&](double t, const Vector& s) {
        unpack(s);
        const Vector xs = s.head(n);
        const double e = sys.C.dot(xs) - r + d;
        const double ur = command(sys, rt, xs, e);
        res.times.push_back(t);
        res.x.push_back(xs);
        if (observer) res.x_hat.push_back(s.tail(n));
        res.u_raw.push_back(ur);
        res.u_sat.push_back(saturate(ur, sys));
        res.e.push_back(e);
        res.z.push_back(s(n));
        res.r.push_back(r);
        res.y.push_back(sys.D * xs);
        const Vector xhv = observer ? Vector(s.tail(n)) : Vector();
        const Monitors m = lyapunov_monitors(sys, rt.artifacts, scn.law, xs, observer ? &xhv : nullptr, s(n),
                                             bundle.monitors[idx]);
        res.V.push_back(m.V);
        res.U.push_back(m.U);
        res.W.push_back(m.W);
    };

    Vector s(dim);
    s.head(n) = x;
    s(n) = z;
    if (observer) s.tail(n) = xh;

    r = scn.references.front().value;
    d = schedule_value(scn.disturbances, 0.0, 0.0);
    for (long k = 0; k <= steps; ++k) {
        const double t = k * scn.dt;
        const double r_new = schedule_value(scn.references, t + 1e-9 * scn.dt, r);
        if (r_new != r) {
            unpack(s);
            const Vector xs = s.head(n);
            const double u_prev = command(sys, rt, xs, sys.C.dot(xs) - r + d);
            r = r_new;
            idx = bundle.index_of(r);
            rt.artifacts = bundle.designs[idx];
            if (scn.switching == Switching::Bumpless && scn.law != Law::PiBaseline) {
                // re-seed z so the raw command is continuous across the switch
                rt.z = 0.0;
                const double a = command(sys, rt, xs, sys.C.dot(xs) - r + d);
                const double slope = command_z_slope(sys, rt, xs);
                if (slope != 0.0) s(n) = (u_prev - a) / slope;
            }
        }
        d = schedule_value(scn.disturbances, t + 1e-9 * scn.dt, 0.0);
        if (k % scn.log_every == 0 || k == steps) log_sample(t, s);
        if (k == steps) break;

        const double h = scn.dt;
        const Vector k1 = rhs(s);
        const Vector k2 = rhs(s + 0.5 * h * k1);
        const Vector k3 = rhs(s + 0.5 * h * k2);
        const Vector k4 = rhs(s + h * k3);
        s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!s.allFinite()) throw NonFinite("simulation produced a non-finite state", k + 1, (k + 1) * h);
    }
    return res;
}

SimResult run(const BilinearSystem& sys, const SimScenario& scn) {
    return run(sys, scn, design_for_scenario(sys, scn));
}

std::optional<double> settling_time(const SimResult& res, double t_from, double t_to, double band) {
    std::optional<double> last_out;
    bool any = false;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const double t = res.times[i];
        if (t < t_from || t >= t_to) continue;
        any = true;
        if (std::abs(res.e[i]) > band) last_out = t;
    }
    if (!any) return std::nullopt;
    if (!last_out) return 0.0;
    // still outside the band at the end of the window
    std::size_t last = 0;
    for (std::size_t i = 0; i < res.size(); ++i)
        if (res.times[i] >= t_from && res.times[i] < t_to) last = i;
    if (std::abs(res.e[last]) > band) return std::nullopt;
    std::size_t j = 0;
    while (j < res.size() && res.times[j] <= *last_out) ++j;
    return res.times[j] - t_from;
}

SimMetrics compute_metrics(const SimResult& res, const SimScenario& scn) {
    SimMetrics m;
    const std::size_t N = res.size();
    if (N == 0) return m;
    std::vector<double> events;
    for (const auto& e : scn.references) events.push_back(e.t);
    for (const auto& e : scn.disturbances) events.push_back(e.t);
    std::sort(events.begin(), events.end());
    auto next_event = [&](double t) {
        for (double te : events)
            if (te > t) return te;
        return scn.t_end + scn.dt;
    };

    for (std::size_t i = 1; i < scn.references.size(); ++i) {
        StepMetric sm;
        sm.t = scn.references[i].t;
        sm.from = scn.references[i - 1].value;
        sm.to = scn.references[i].value;
        sm.settling_time = settling_time(res, sm.t, next_event(sm.t), 0.02 * std::abs(sm.to - sm.from));
        m.steps.push_back(sm);
    }

    const double t_last = scn.references.back().t;
    std::size_t sat = 0, sat_after = 0, after = 0;
    for (std::size_t i = 0; i < N; ++i) {
        m.max_abs_u_raw = std::max(m.max_abs_u_raw, std::abs(res.u_raw[i]));
        const bool out = res.u_raw[i] < res.u_min || res.u_raw[i] > res.u_max;
        sat += out;
        if (res.times[i] >= t_last) {
            ++after;
            sat_after += out;
        }
        if (i > 0) m.iae += 0.5 * (std::abs(res.e[i]) + std::abs(res.e[i - 1])) * (res.times[i] - res.times[i - 1]);
    }
    m.duty_cycle = static_cast<double>(sat) / N;
    m.duty_cycle_after_last_step = after ? static_cast<double>(sat_after) / after : 0.0;
    if (scn.references.size() > 1)
        m.settle_01_after_last_step = settling_time(res, t_last, scn.t_end + scn.dt, 0.1);
    m.final_abs_error = std::abs(res.e.back());
    return m;
}

ComparisonReport compare_pi(const BilinearSystem& sys, const SimScenario& ours, const SimScenario& pi, int jobs) {
    auto same = [](const std::vector<ScheduleEntry>& a, const std::vector<ScheduleEntry>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].t != b[i].t || a[i].value != b[i].value) return false;
        return true;
    };
    const bool x0_same = ours.x0.has_value() == pi.x0.has_value() && (!ours.x0 || *ours.x0 == *pi.x0);
    if (!same(ours.references, pi.references) || !same(ours.disturbances, pi.disturbances) ||
        ours.t_end != pi.t_end || ours.dt != pi.dt || !x0_same || ours.sensors != pi.sensors)
        throw SchedulesDiffer("compare_pi: scenarios differ in schedule, horizon, step or initial state");

    auto job = [&sys](const SimScenario& s) { return compute_metrics(run(sys, s), s); };
    ComparisonReport rep;
    if (jobs > 1) {
        auto fut = std::async(std::launch::async, job, std::cref(pi));
        rep.ours = job(ours);
        rep.pi = fut.get();
    } else {
        rep.ours = job(ours);
        rep.pi = job(pi);
    }
    return rep;
}

}  // namespace bilinreg
