#include "bilinreg/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace bilinreg::io {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object()) throw ParseError(what + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ParseError(what + ": unknown key '" + it.key() + "'");
}

double num(const json& j, const std::string& key, const std::string& what) {
    if (!j.contains(key)) throw ParseError(what + ": missing key '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ParseError(what + ": '" + key + "' must be a number");
    return v.get<double>();
}

double num_or(const json& j, const std::string& key, double dflt, const std::string& what) {
    return j.contains(key) ? num(j, key, what) : dflt;
}

std::string str_or(const json& j, const std::string& key, const std::string& dflt, const std::string& what) {
    if (!j.contains(key)) return dflt;
    if (!j.at(key).is_string()) throw ParseError(what + ": '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

std::vector<ScheduleEntry> schedule_from_json(const json& j, const std::string& what, double offset) {
    if (!j.is_array()) throw ParseError(what + ": expected an array of [t, value] pairs");
    std::vector<ScheduleEntry> out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            throw ParseError(what + ": each entry must be [t, value]");
        out.push_back({e[0].get<double>(), e[1].get<double>() + offset});
    }
    return out;
}

json schedule_to_json(const std::vector<ScheduleEntry>& s) {
    json a = json::array();
    for (const auto& e : s) a.push_back(json::array({e.t, e.value}));
    return a;
}

}  // namespace

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 1, col = 1;
        const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what(), line,
                         col);
    }
}

json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str(), path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void save_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << dump(j);
}

json matrix_to_json(const Matrix& m) {
    json a = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        a.push_back(row);
    }
    return a;
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + ": expected an array of rows");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Index>(j[i].size()) != cols)
            throw ParseError(what + ": rows must be arrays of equal length");
        for (Index k = 0; k < cols; ++k) {
            if (!j[i][k].is_number()) throw ParseError(what + ": entries must be numbers");
            m(i, k) = j[i][k].get<double>();
        }
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + ": expected an array");
    Vector v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(what + ": entries must be numbers");
        v(i) = j[i].get<double>();
    }
    return v;
}

json to_json(const HexParams& p) {
    return json{{"n_cells", p.n_cells},   {"lambda", p.lambda},       {"rho", p.rho},
                {"cp", p.cp},             {"V_hot", p.V_hot},         {"V_cold", p.V_cold},
                {"q_bar", p.q_bar},       {"T_in_hot", p.T_in_hot},   {"T_in_cold", p.T_in_cold},
                {"u_min", p.u_min},       {"u_max", p.u_max}};
}

HexParams hex_params_from_json(const json& j) {
    const std::string w = "hex params";
    check_keys(j, {"n_cells", "lambda", "rho", "cp", "V_hot", "V_cold", "q_bar", "T_in_hot", "T_in_cold", "u_min",
                   "u_max"},
               w);
    HexParams p;
    if (j.contains("n_cells")) {
        if (!j.at("n_cells").is_number_integer()) throw ParseError(w + ": 'n_cells' must be an integer");
        p.n_cells = j.at("n_cells").get<int>();
    }
    p.lambda = num_or(j, "lambda", p.lambda, w);
    p.rho = num_or(j, "rho", p.rho, w);
    p.cp = num_or(j, "cp", p.cp, w);
    p.V_hot = num_or(j, "V_hot", p.V_hot, w);
    p.V_cold = num_or(j, "V_cold", p.V_cold, w);
    p.q_bar = num_or(j, "q_bar", p.q_bar, w);
    p.T_in_hot = num_or(j, "T_in_hot", p.T_in_hot, w);
    p.T_in_cold = num_or(j, "T_in_cold", p.T_in_cold, w);
    p.u_min = num_or(j, "u_min", p.u_min, w);
    p.u_max = num_or(j, "u_max", p.u_max, w);
    p.validate();
    return p;
}

json to_json(const BilinearSystem& sys) {
    json j{{"n_states", sys.n_states()},
           {"A", matrix_to_json(sys.A)},
           {"B", matrix_to_json(sys.B)},
           {"b", vector_to_json(sys.b)},
           {"E", vector_to_json(sys.E)},
           {"C", vector_to_json(sys.C.transpose())},
           {"D", matrix_to_json(sys.D)},
           {"u_min", sys.u_min},
           {"u_max", sys.u_max}};
    if (sys.hex) j["hex_params"] = to_json(*sys.hex);
    return j;
}

BilinearSystem system_from_json(const json& j) {
    const std::string w = "system";
    check_keys(j, {"n_states", "A", "B", "b", "E", "C", "D", "u_min", "u_max", "hex_params"}, w);
    for (const char* k : {"A", "B", "b", "E", "C", "D"})
        if (!j.contains(k)) throw ParseError(w + ": missing key '" + std::string(k) + "'");
    BilinearSystem sys;
    sys.A = matrix_from_json(j.at("A"), "system.A");
    sys.B = matrix_from_json(j.at("B"), "system.B");
    sys.b = vector_from_json(j.at("b"), "system.b");
    sys.E = vector_from_json(j.at("E"), "system.E");
    sys.C = vector_from_json(j.at("C"), "system.C").transpose();
    sys.D = matrix_from_json(j.at("D"), "system.D");
    sys.u_min = num(j, "u_min", w);
    sys.u_max = num(j, "u_max", w);
    if (j.contains("n_states") && j.at("n_states").get<Index>() != sys.A.rows())
        throw ParseError(w + ": n_states does not match A");
    if (j.contains("hex_params")) sys.hex = hex_params_from_json(j.at("hex_params"));
    try {
        sys.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(w + ": " + e.what());
    }
    return sys;
}

SimScenario scenario_from_json(const json& j) {
    const std::string w = "scenario";
    check_keys(j, {"law", "gains", "pi", "units", "references", "disturbances", "t_end", "dt", "sensors",
                   "switching", "x0", "x_hat0", "x_hat0_offset", "allow_uncertified", "ki_fraction_of_bound",
                   "log_every", "description"},
               w);
    SimScenario s;
    s.law = law_from_name(str_or(j, "law", "forwarding", w));
    const std::string units = str_or(j, "units", "K", w);
    if (units != "K" && units != "C") throw ParseError(w + ": units must be \"K\" or \"C\"");
    const double off = units == "C" ? kCelsiusOffset : 0.0;

    if (j.contains("gains")) {
        const json& g = j.at("gains");
        check_keys(g, {"k_p", "k_i", "upsilon_scale"}, "scenario.gains");
        s.k_p = num_or(g, "k_p", s.k_p, "scenario.gains");
        s.k_i = num_or(g, "k_i", s.k_i, "scenario.gains");
        s.upsilon_scale = num_or(g, "upsilon_scale", s.upsilon_scale, "scenario.gains");
    }
    if (j.contains("pi")) {
        const json& p = j.at("pi");
        check_keys(p, {"kp", "ki", "u_bias"}, "scenario.pi");
        PiGains pg;
        pg.kp = num(p, "kp", "scenario.pi");
        pg.ki = num(p, "ki", "scenario.pi");
        s.pi = pg;
        if (p.contains("u_bias")) s.pi_u_bias = num(p, "u_bias", "scenario.pi");
    }
    if (!j.contains("references")) throw ParseError(w + ": missing key 'references'");
    s.references = schedule_from_json(j.at("references"), "scenario.references", off);
    if (j.contains("disturbances")) s.disturbances = schedule_from_json(j.at("disturbances"), "scenario.disturbances", 0.0);
    s.t_end = num(j, "t_end", w);
    s.dt = num_or(j, "dt", s.dt, w);
    const std::string sensors = str_or(j, "sensors", "model", w);
    if (sensors == "model") s.sensors = Sensors::Model;
    else if (sensors == "outlet") s.sensors = Sensors::Outlet;
    else if (sensors == "five_average") s.sensors = Sensors::FiveAverage;
    else throw ParseError(w + ": sensors must be \"model\", \"outlet\" or \"five_average\"");
    const std::string sw = str_or(j, "switching", "bumpless", w);
    if (sw == "bumpless") s.switching = Switching::Bumpless;
    else if (sw == "hold") s.switching = Switching::Hold;
    else throw ParseError(w + ": switching must be \"bumpless\" or \"hold\"");
    if (j.contains("x0")) s.x0 = Vector(vector_from_json(j.at("x0"), "scenario.x0").array() + off);
    if (j.contains("x_hat0")) s.x_hat0 = Vector(vector_from_json(j.at("x_hat0"), "scenario.x_hat0").array() + off);
    s.x_hat0_offset = num_or(j, "x_hat0_offset", 0.0, w);
    if (j.contains("allow_uncertified")) {
        if (!j.at("allow_uncertified").is_boolean()) throw ParseError(w + ": 'allow_uncertified' must be a boolean");
        s.allow_uncertified = j.at("allow_uncertified").get<bool>();
    }
    if (j.contains("ki_fraction_of_bound")) s.ki_fraction_of_bound = num(j, "ki_fraction_of_bound", w);
    if (j.contains("log_every")) {
        if (!j.at("log_every").is_number_integer()) throw ParseError(w + ": 'log_every' must be an integer");
        s.log_every = j.at("log_every").get<int>();
    }
    try {
        s.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what());
    }
    return s;
}

json to_json(const SimScenario& s) {
    json j{{"law", law_name(s.law)},
           {"gains", {{"k_p", s.k_p}, {"k_i", s.k_i}, {"upsilon_scale", s.upsilon_scale}}},
           {"units", "K"},
           {"references", schedule_to_json(s.references)},
           {"disturbances", schedule_to_json(s.disturbances)},
           {"t_end", s.t_end},
           {"dt", s.dt},
           {"sensors", s.sensors == Sensors::Model ? "model" : (s.sensors == Sensors::Outlet ? "outlet" : "five_average")},
           {"switching", s.switching == Switching::Bumpless ? "bumpless" : "hold"},
           {"x_hat0_offset", s.x_hat0_offset},
           {"allow_uncertified", s.allow_uncertified},
           {"log_every", s.log_every}};
    if (s.pi) {
        j["pi"] = {{"kp", s.pi->kp}, {"ki", s.pi->ki}};
        if (s.pi_u_bias) j["pi"]["u_bias"] = *s.pi_u_bias;
    }
    if (s.x0) j["x0"] = vector_to_json(*s.x0);
    if (s.x_hat0) j["x_hat0"] = vector_to_json(*s.x_hat0);
    if (s.ki_fraction_of_bound) j["ki_fraction_of_bound"] = *s.ki_fraction_of_bound;
    return j;
}

json to_json(const ObserverDesign& od) {
    return json{{"L", matrix_to_json(od.L)},   {"Q", matrix_to_json(od.Q)},
                {"Y", matrix_to_json(od.Y)},   {"nu", od.nu},
                {"eps", od.eps},               {"mu", od.mu},
                {"lmi_residual", od.lmi_residual}, {"certified", od.certified},
                {"iterations", od.iterations}};
}

ObserverDesign observer_from_json(const json& j) {
    const std::string w = "observer";
    check_keys(j, {"L", "Q", "Y", "nu", "eps", "mu", "lmi_residual", "certified", "iterations"}, w);
    ObserverDesign od;
    od.L = matrix_from_json(j.at("L"), "observer.L");
    od.Q = matrix_from_json(j.at("Q"), "observer.Q");
    od.Y = matrix_from_json(j.at("Y"), "observer.Y");
    od.nu = num(j, "nu", w);
    od.eps = num(j, "eps", w);
    od.mu = num(j, "mu", w);
    od.lmi_residual = num(j, "lmi_residual", w);
    od.certified = j.value("certified", false);
    od.iterations = j.value("iterations", 0);
    return od;
}

json to_json(const DesignArtifacts& a) {
    json j{{"reference", a.reference}, {"u_ss", a.u_ss},          {"x_ss", vector_to_json(a.x_ss)},
           {"g", vector_to_json(a.g)}, {"P", matrix_to_json(a.P)}, {"Upsilon", matrix_to_json(a.Upsilon)},
           {"M", vector_to_json(a.M.transpose())},
           {"k_p", a.k_p},             {"k_i", a.k_i},            {"dc_gain", a.dc_gain},
           {"dc_sign", a.dc_sign}};
    if (a.observer) j["observer"] = to_json(*a.observer);
    if (a.robust)
        j["robust"] = {{"nu", a.robust->nu},
                       {"eps", a.robust->eps},
                       {"eps_max", a.robust->eps_max},
                       {"residual", a.robust->residual},
                       {"feasible", a.robust->feasible}};
    if (a.bound)
        j["bound"] = {{"ki_star", a.bound->ki_star}, {"pi_bar", a.bound->pi_bar}, {"v_at_sup", a.bound->v_at_sup},
                      {"c0", a.bound->c0},           {"p_min", a.bound->p_min},   {"p_max", a.bound->p_max},
                      {"eps", a.bound->eps}};
    j["ki_star"] = a.bound ? json(a.bound->ki_star) : json(nullptr);
    j["warnings"] = a.warnings;
    return j;
}

DesignArtifacts artifacts_from_json(const json& j) {
    const std::string w = "artifacts";
    check_keys(j, {"reference", "u_ss", "x_ss", "g", "P", "Upsilon", "M", "k_p", "k_i", "dc_gain", "dc_sign",
                   "observer", "robust", "bound", "ki_star", "warnings"},
               w);
    DesignArtifacts a;
    a.reference = num(j, "reference", w);
    a.u_ss = num(j, "u_ss", w);
    a.x_ss = vector_from_json(j.at("x_ss"), "artifacts.x_ss");
    a.g = vector_from_json(j.at("g"), "artifacts.g");
    a.P = matrix_from_json(j.at("P"), "artifacts.P");
    a.Upsilon = matrix_from_json(j.at("Upsilon"), "artifacts.Upsilon");
    a.M = vector_from_json(j.at("M"), "artifacts.M").transpose();
    a.k_p = num(j, "k_p", w);
    a.k_i = num(j, "k_i", w);
    a.dc_gain = num(j, "dc_gain", w);
    a.dc_sign = j.at("dc_sign").get<int>();
    if (j.contains("observer")) a.observer = observer_from_json(j.at("observer"));
    if (j.contains("robust")) {
        const json& r = j.at("robust");
        RobustCertificate rc;
        rc.nu = num(r, "nu", "robust");
        rc.eps = num(r, "eps", "robust");
        rc.eps_max = num(r, "eps_max", "robust");
        rc.residual = num(r, "residual", "robust");
        rc.feasible = r.value("feasible", false);
        a.robust = rc;
    }
    if (j.contains("bound")) {
        const json& b = j.at("bound");
        IntegralBound ib;
        ib.ki_star = num(b, "ki_star", "bound");
        ib.pi_bar = num(b, "pi_bar", "bound");
        ib.v_at_sup = num(b, "v_at_sup", "bound");
        ib.c0 = num(b, "c0", "bound");
        ib.p_min = num(b, "p_min", "bound");
        ib.p_max = num(b, "p_max", "bound");
        ib.eps = num(b, "eps", "bound");
        a.bound = ib;
    }
    if (j.contains("warnings")) a.warnings = j.at("warnings").get<std::vector<std::string>>();
    return a;
}

json to_json(const DesignBundle& b, Law law) {
    json designs = json::array();
    for (const auto& d : b.designs) designs.push_back(to_json(d));
    json mons = json::array();
    for (const auto& m : b.monitors) mons.push_back({{"a", m.a}, {"c", m.c}, {"q_max", m.q_max}, {"gamma", m.gamma}});
    return json{{"law", law_name(law)},
                {"references", vector_to_json(Eigen::Map<const Vector>(b.references.data(), Index(b.references.size())))},
                {"designs", designs},
                {"monitors", mons},
                {"warnings", b.warnings}};
}

DesignBundle bundle_from_json(const json& j, Law* law) {
    check_keys(j, {"law", "references", "designs", "monitors", "warnings"}, "design bundle");
    if (law) *law = law_from_name(j.at("law").get<std::string>());
    DesignBundle b;
    for (const auto& d : j.at("designs")) {
        b.designs.push_back(artifacts_from_json(d));
        b.references.push_back(b.designs.back().reference);
    }
    // requested values, which can differ from C x_ss in the last bit
    if (j.contains("references")) {
        const Vector r = vector_from_json(j.at("references"), "design bundle.references");
        if (Index(b.designs.size()) != r.size()) throw ParseError("design bundle: references and designs differ in length");
        b.references.assign(r.data(), r.data() + r.size());
    }
    for (const auto& m : j.at("monitors")) {
        MonitorConstants mc;
        mc.a = num(m, "a", "monitors");
        mc.c = num(m, "c", "monitors");
        mc.q_max = num(m, "q_max", "monitors");
        mc.gamma = num(m, "gamma", "monitors");
        b.monitors.push_back(mc);
    }
    if (b.monitors.size() != b.designs.size()) throw ParseError("design bundle: monitors and designs differ in length");
    if (j.contains("warnings")) b.warnings = j.at("warnings").get<std::vector<std::string>>();
    return b;
}

json to_json(const Assumption1Report& r) {
    return json{{"grid", r.grid},
                {"hurwitz_margin", r.hurwitz_margin},
                {"hurwitz_worst_u", r.hurwitz_worst_u},
                {"dc_gain_min_abs", r.dc_gain_min_abs},
                {"dc_gain_worst_u", r.dc_gain_worst_u},
                {"dc_sign_constant", r.dc_sign_constant},
                {"dc_sign", r.dc_sign},
                {"holds", r.holds()}};
}

json to_json(const Assumption3Report& r) {
    return json{{"grid_u", r.grid_u},
                {"grid_v", r.grid_v},
                {"nu", r.nu},
                {"eps", r.eps},
                {"mu", r.mu},
                {"a3a_worst_residual", r.a3a_worst_residual},
                {"a3a_worst_u", r.a3a_worst_u},
                {"a3a_feasible", r.a3a_feasible()},
                {"a3b_min_abs", r.a3b_min_abs},
                {"a3b_worst_u", r.a3b_worst_u},
                {"a3b_worst_v", r.a3b_worst_v},
                {"a3b_nonsingular", r.a3b_nonsingular},
                {"a3b_sign_constant", r.a3b_sign_constant},
                {"holds", r.holds()}};
}

json to_json(const SimMetrics& m) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json steps = json::array();
    for (const auto& s : m.steps)
        steps.push_back({{"t", s.t}, {"from", s.from}, {"to", s.to}, {"settling_time", opt(s.settling_time)}});
    return json{{"steps", steps},
                {"max_abs_u_raw", m.max_abs_u_raw},
                {"duty_cycle", m.duty_cycle},
                {"duty_cycle_after_last_step", m.duty_cycle_after_last_step},
                {"iae", m.iae},
                {"settle_01_after_last_step", opt(m.settle_01_after_last_step)},
                {"final_abs_error", m.final_abs_error}};
}

json to_json(const ComparisonReport& r) { return json{{"proposed", to_json(r.ours)}, {"pi", to_json(r.pi)}}; }

void write_csv(const SimResult& res, std::ostream& os) {
    const Index n = res.x.empty() ? 0 : res.x.front().size();
    const Index p = res.y.empty() ? 0 : res.y.front().size();
    const bool obs = !res.x_hat.empty();
    os << "t";
    for (Index i = 1; i <= n; ++i) os << ",x_" << i;
    if (obs)
        for (Index i = 1; i <= n; ++i) os << ",xhat_" << i;
    os << ",u_raw,u_sat,e";
    for (Index i = 1; i <= p; ++i) os << ",y_" << i;
    if (res.has_V) os << ",V";
    if (res.has_U) os << ",U";
    if (res.has_W) os << ",W";
    os << "\n";

    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < res.size(); ++k) {
        put(res.times[k]);
        for (Index i = 0; i < n; ++i) { os << ','; put(res.x[k](i)); }
        if (obs)
            for (Index i = 0; i < n; ++i) { os << ','; put(res.x_hat[k](i)); }
        os << ','; put(res.u_raw[k]);
        os << ','; put(res.u_sat[k]);
        os << ','; put(res.e[k]);
        for (Index i = 0; i < p; ++i) { os << ','; put(res.y[k](i)); }
        if (res.has_V) { os << ','; put(res.V[k]); }
        if (res.has_U) { os << ','; put(res.U[k]); }
        if (res.has_W) { os << ','; put(res.W[k]); }
        os << '\n';
    }
}

void write_csv(const SimResult& res, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    write_csv(res, out);
}

}  // namespace bilinreg::io
