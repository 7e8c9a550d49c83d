#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bilinreg/analysis.hpp"

namespace bilinreg {

struct ScheduleEntry {
    double t = 0.0;
    double value = 0.0;
};

enum class Switching { Bumpless, Hold };
enum class Sensors { Model, Outlet, FiveAverage };

struct SimScenario {
    Law law = Law::Forwarding;
    double k_p = 1e-6;
    double k_i = 2.6e-5;
    double upsilon_scale = 1.0;
    std::optional<PiGains> pi;                     // u_bias defaults to u_ss of the first reference
    std::optional<double> pi_u_bias;
    std::optional<Vector> x0;                      // default pi(u_ss) of the first reference
    std::optional<Vector> x_hat0;                  // default x0 + x_hat0_offset
    double x_hat0_offset = 0.0;
    std::vector<ScheduleEntry> references;         // absolute, K
    std::vector<ScheduleEntry> disturbances;       // output offsets, K
    double t_end = 0.0;
    double dt = 0.05;
    Switching switching = Switching::Bumpless;
    Sensors sensors = Sensors::Model;
    bool allow_uncertified = false;
    std::optional<double> ki_fraction_of_bound;    // integral-only: k_i = fraction * k_i*
    int log_every = 1;

    void validate() const;
};

/// Per-reference designs plus monitor constants, in order of first appearance.
struct DesignBundle {
    std::vector<double> references;
    std::vector<DesignArtifacts> designs;
    std::vector<MonitorConstants> monitors;
    std::vector<std::string> warnings;

    std::size_t index_of(double r) const;
};

struct SimResult {
    std::vector<double> times;
    std::vector<Vector> x;
    std::vector<Vector> x_hat;  // empty unless an observer runs
    std::vector<double> u_raw;
    std::vector<double> u_sat;
    std::vector<double> e;
    std::vector<double> z;
    std::vector<double> r;
    std::vector<Vector> y;
    std::vector<double> V, U, W;
    bool has_V = false, has_U = false, has_W = false;
    double u_min = 0.0, u_max = 0.0;

    std::size_t size() const { return times.size(); }
};

struct StepMetric {
    double t = 0.0;
    double from = 0.0;
    double to = 0.0;
    std::optional<double> settling_time;  // 2 % band of the step size, empty if not settled
};

struct SimMetrics {
    std::vector<StepMetric> steps;
    double max_abs_u_raw = 0.0;
    double duty_cycle = 0.0;
    double duty_cycle_after_last_step = 0.0;
    double iae = 0.0;
    std::optional<double> settle_01_after_last_step;  // time for |e| to stay within 0.1 K
    double final_abs_error = 0.0;
};

struct ComparisonReport {
    SimMetrics ours;
    SimMetrics pi;
};

/// System with D replaced according to the scenario's sensor model.
BilinearSystem scenario_system(const BilinearSystem& sys, const SimScenario& scn);

DesignBundle design_for_scenario(const BilinearSystem& sys, const SimScenario& scn);

SimResult run(const BilinearSystem& sys, const SimScenario& scn, const DesignBundle& bundle);
SimResult run(const BilinearSystem& sys, const SimScenario& scn);

SimMetrics compute_metrics(const SimResult& res, const SimScenario& scn);

/// Time from t_from after which |e| stays within band up to t_to; empty if it never does.
std::optional<double> settling_time(const SimResult& res, double t_from, double t_to, double band);

ComparisonReport compare_pi(const BilinearSystem& sys, const SimScenario& ours, const SimScenario& pi,
                            int jobs = 1);

}  // namespace bilinreg
