#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bilinreg/io.hpp"

using namespace bilinreg;
namespace fs = std::filesystem;
using io::json;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3 };

void emit(const json& j, const std::string& out) {
    if (out.empty() || out == "-") std::cout << io::dump(j);
    else io::save_json(j, out);
}

double unit_offset(const std::string& units) {
    if (units == "K") return 0.0;
    if (units == "C") return io::kCelsiusOffset;
    throw InvalidArgument("--units must be K or C");
}

struct Common {
    std::string units = "K";
    std::string out;
    int grid = kDefaultGrid;
    int jobs = 1;
    std::optional<double> dt;
    bool allow_uncertified = false;
};

int cmd_build(const std::string& params, const Common& c) {
    const HexParams p = io::hex_params_from_json(io::load_json(params));
    emit(io::to_json(build_hex(p)), c.out);
    return kOk;
}

int cmd_steady_state(const std::string& system, const std::optional<double>& ref, const std::optional<double>& u,
                     const Common& c) {
    const BilinearSystem sys = io::system_from_json(io::load_json(system));
    const double off = unit_offset(c.units);
    const ReachableSet rs = reachable_set(sys, c.grid);
    json j{{"units", c.units},
           {"r_min", rs.r_min - off},
           {"r_max", rs.r_max - off},
           {"u_at_min", rs.u_at_min},
           {"u_at_max", rs.u_at_max}};
    std::optional<Equilibrium> eq;
    if (ref) eq = invert_reference(sys, *ref + off, c.grid);
    else if (u) eq = equilibrium_at(sys, *u);
    if (eq) {
        j["equilibrium"] = {{"u_ss", eq->u_ss},
                            {"y_ss", eq->y_ss - off},
                            {"x_ss", io::vector_to_json(Vector(eq->x_ss.array() - off))},
                            {"residual", regulator_residual(sys, eq->u_ss, eq->x_ss)}};
    }
    emit(j, c.out);
    return kOk;
}

SimScenario load_scenario(const std::string& path, const Common& c) {
    SimScenario s = io::scenario_from_json(io::load_json(path));
    if (c.dt) s.dt = *c.dt;
    if (c.allow_uncertified) s.allow_uncertified = true;
    s.validate();
    return s;
}

int cmd_design(const std::string& system, const std::string& scenario, const std::vector<double>& refs,
               const std::optional<std::string>& law, const std::optional<double>& kp,
               const std::optional<double>& ki, const Common& c) {
    const BilinearSystem sys = io::system_from_json(io::load_json(system));
    SimScenario s;
    if (!scenario.empty()) {
        s = load_scenario(scenario, c);
    } else {
        if (refs.empty()) throw InvalidArgument("design needs --scenario or at least one --reference");
        const double off = unit_offset(c.units);
        for (std::size_t i = 0; i < refs.size(); ++i) s.references.push_back({double(i), refs[i] + off});
        s.t_end = double(refs.size());
        s.allow_uncertified = c.allow_uncertified;
        s.pi = PiGains{};
    }
    if (law) s.law = law_from_name(*law);
    if (kp) s.k_p = *kp;
    if (ki) s.k_i = *ki;
    const DesignBundle b = design_for_scenario(sys, s);
    for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
    emit(io::to_json(b, s.law), c.out);
    return kOk;
}

int cmd_simulate(const std::string& system, const std::vector<std::string>& scenarios, const std::string& artifacts,
                 const Common& c) {
    const BilinearSystem sys = io::system_from_json(io::load_json(system));
    const fs::path outdir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(outdir);
    std::vector<SimScenario> scns;
    for (const auto& p : scenarios) scns.push_back(load_scenario(p, c));
    std::optional<DesignBundle> given;
    if (!artifacts.empty()) {
        Law law;
        given = io::bundle_from_json(io::load_json(artifacts), &law);
        for (const auto& s : scns)
            if (s.law != law) throw InvalidArgument("artifact law does not match the scenario law");
    }

    auto one = [&](std::size_t i) {
        const SimScenario& s = scns[i];
        const DesignBundle b = given ? *given : design_for_scenario(sys, s);
        const SimResult res = run(sys, s, b);
        const std::string stem = fs::path(scenarios[i]).stem().string();
        io::write_csv(res, (outdir / (stem + ".csv")).string());
        json meta = io::to_json(compute_metrics(res, s));
        meta["warnings"] = b.warnings;
        io::save_json(meta, (outdir / (stem + ".metrics.json")).string());
        return b.warnings;
    };

    std::vector<std::vector<std::string>> warns(scns.size());
    if (c.jobs > 1 && scns.size() > 1) {
        std::size_t next = 0;
        while (next < scns.size()) {
            std::vector<std::future<std::vector<std::string>>> batch;
            const std::size_t first = next;
            for (int j = 0; j < c.jobs && next < scns.size(); ++j, ++next)
                batch.push_back(std::async(std::launch::async, one, next));
            for (std::size_t k = 0; k < batch.size(); ++k) warns[first + k] = batch[k].get();
        }
    } else {
        for (std::size_t i = 0; i < scns.size(); ++i) warns[i] = one(i);
    }
    for (std::size_t i = 0; i < scns.size(); ++i)
        for (const auto& w : warns[i]) std::cerr << scenarios[i] << ": warning: " << w << "\n";
    return kOk;
}

int cmd_verify(const std::string& system, const std::string& law_name_s, const std::optional<double>& ref,
               const std::string& sensors, const Common& c) {
    BilinearSystem sys = io::system_from_json(io::load_json(system));
    if (sensors == "five_average") sys.D = averaged_sensor_selector(sys.n_states());
    else if (sensors == "outlet") sys.D = sys.C;
    else if (sensors != "model") throw InvalidArgument("--sensors must be model, outlet or five_average");

    const int grid = c.grid == kDefaultGrid ? 64 : c.grid;
    const Law law = law_from_name(law_name_s);
    json j;
    const Assumption1Report a1 = check_assumption1(sys, grid);
    j["assumption1"] = io::to_json(a1);
    bool ok = a1.holds();

    if (law == Law::OutputFeedback) {
        const bool obs = is_observable(sys.A, sys.D);
        j["observable"] = obs;
        ok = ok && obs;
        if (obs) {
            try {
                const ObserverDesign od = observer_design(sys);
                j["observer"] = io::to_json(od);
            } catch (const Infeasible& inf) {
                j["observer"] = io::to_json(inf.best);
                ok = false;
            }
        }
    }
    if (law == Law::IntegralOnly) {
        if (!ref) throw InvalidArgument("verify --law integral_only needs --reference");
        const Equilibrium eq = invert_reference(sys, *ref + unit_offset(c.units));
        const Matrix P = solve_lyapunov(sys.F(eq.u_ss), Matrix::Identity(sys.n_states(), sys.n_states()));
        const RobustCertificate rc = fit_robust_certificate(sys.F(eq.u_ss), P, mu_bound(sys));
        const Assumption3Report a3 = check_assumption3(sys, P, rc.nu, rc.eps, grid, 2 * grid + 1);
        j["assumption3"] = io::to_json(a3);
        j["assumption3"]["certificate_eps_max"] = rc.eps_max;
        ok = ok && rc.feasible && a3.holds();
    }
    j["holds"] = ok;
    emit(j, c.out);
    return ok ? kOk : kVerifyFailed;
}

int cmd_compare(const std::string& system, const std::string& ours, const std::string& pi, const Common& c) {
    const BilinearSystem sys = io::system_from_json(io::load_json(system));
    const ComparisonReport rep = compare_pi(sys, load_scenario(ours, c), load_scenario(pi, c), c.jobs);
    emit(io::to_json(rep), c.out);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saturated integral control of bilinear systems: model, design, verification and simulation"};
    app.require_subcommand(1);
    Common c;
    app.add_option("--out", c.out, "Output file (or directory for simulate)");
    app.add_option("--grid", c.grid, "Grid size for u-sweeps")->check(CLI::Range(2, 1 << 20));
    app.add_option("--dt", c.dt, "Override the integration step")->check(CLI::PositiveNumber);
    app.add_option("--units", c.units, "Units for references on the command line and printed temperatures")
        ->check(CLI::IsMember({"K", "C"}));
    app.add_option("--jobs", c.jobs, "Parallel scenario runs")->check(CLI::Range(1, 256));
    app.add_flag("--allow-uncertified", c.allow_uncertified, "Use the best observer gain when the LMI is infeasible");

    std::string params, system, scenario, artifacts, ours, pi;
    std::vector<std::string> scenarios;
    std::vector<double> refs;
    std::optional<double> ref, u, kp, ki;
    std::optional<std::string> law;
    std::string verify_law = "forwarding", sensors = "model";

    auto* build = app.add_subcommand("build-model", "Assemble the exchanger model from parameters");
    build->add_option("params", params, "Parameter JSON")->required();

    auto* ss = app.add_subcommand("steady-state", "Reachable set and equilibrium");
    ss->add_option("system", system, "System JSON")->required();
    ss->add_option("--reference", ref, "Reference to invert");
    ss->add_option("--u", u, "Constant input to evaluate");

    auto* des = app.add_subcommand("design", "Controller design for every reference of a scenario");
    des->add_option("system", system, "System JSON")->required();
    des->add_option("--scenario", scenario, "Scenario JSON");
    des->add_option("--reference", refs, "Reference(s), used without --scenario");
    des->add_option("--law", law, "forwarding | output_feedback | integral_only | pi");
    des->add_option("--kp", kp, "Proportional gain");
    des->add_option("--ki", ki, "Integral gain");

    auto* sim = app.add_subcommand("simulate", "Closed-loop simulation; writes CSV and metrics JSON");
    sim->add_option("system", system, "System JSON")->required();
    sim->add_option("scenarios", scenarios, "Scenario JSON file(s)")->required();
    sim->add_option("--artifacts", artifacts, "Design bundle from the design subcommand");

    auto* ver = app.add_subcommand("verify", "Check the standing assumptions");
    ver->add_option("system", system, "System JSON")->required();
    ver->add_option("--law", verify_law, "Law whose assumptions are checked");
    ver->add_option("--reference", ref, "Operating reference (integral_only)");
    ver->add_option("--sensors", sensors, "model | outlet | five_average");

    auto* cmp = app.add_subcommand("compare-pi", "Compare a scenario against a PI baseline");
    cmp->add_option("system", system, "System JSON")->required();
    cmp->add_option("ours", ours, "Proposed-law scenario")->required();
    cmp->add_option("pi", pi, "PI scenario")->required();

    for (auto* sub : {build, ss, des, sim, ver, cmp}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*build) return cmd_build(params, c);
        if (*ss) return cmd_steady_state(system, ref, u, c);
        if (*des) return cmd_design(system, scenario, refs, law, kp, ki, c);
        if (*sim) return cmd_simulate(system, scenarios, artifacts, c);
        if (*ver) return cmd_verify(system, verify_law, ref, sensors, c);
        if (*cmp) return cmd_compare(system, ours, pi, c);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ReferenceUnreachable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Infeasible& e) {
        std::cerr << "error: " << e.what() << " (use --allow-uncertified to run with the best iterate)\n";
        return kNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
