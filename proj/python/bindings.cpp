// Thin Python layer: matrices go through pybind11/eigen, structured data through JSON text.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bilinreg/io.hpp"

namespace py = pybind11;
using namespace bilinreg;

namespace {

Matrix stack(const std::vector<Vector>& rows) {
    if (rows.empty()) return Matrix();
    Matrix m(Index(rows.size()), rows.front().size());
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(Index(k)) = rows[k].transpose();
    return m;
}

py::dict result_to_dict(const SimResult& r) {
    py::dict d;
    d["t"] = r.times;
    d["x"] = stack(r.x);
    if (!r.x_hat.empty()) d["x_hat"] = stack(r.x_hat);
    d["y"] = stack(r.y);
    d["u_raw"] = r.u_raw;
    d["u_sat"] = r.u_sat;
    d["e"] = r.e;
    d["z"] = r.z;
    d["r"] = r.r;
    if (r.has_V) d["V"] = r.V;
    if (r.has_U) d["U"] = r.U;
    if (r.has_W) d["W"] = r.W;
    return d;
}

}  // namespace

PYBIND11_MODULE(_bilinreg, m) {
    auto base = py::register_exception<Error>(m, "BilinregError");
    py::register_exception<InvalidArgument>(m, "InvalidArgument", base);
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ReferenceUnreachable>(m, "ReferenceUnreachable", base);
    py::register_exception<NotHurwitz>(m, "NotHurwitz", base);
    py::register_exception<Infeasible>(m, "Infeasible", base);

    py::class_<BilinearSystem>(m, "System")
        .def_readwrite("A", &BilinearSystem::A)
        .def_readwrite("B", &BilinearSystem::B)
        .def_readwrite("b", &BilinearSystem::b)
        .def_readwrite("E", &BilinearSystem::E)
        .def_readwrite("C", &BilinearSystem::C)
        .def_readwrite("D", &BilinearSystem::D)
        .def_readwrite("u_min", &BilinearSystem::u_min)
        .def_readwrite("u_max", &BilinearSystem::u_max)
        .def_property_readonly("n", [](const BilinearSystem& s) { return s.A.rows(); })
        .def("F", &BilinearSystem::F)
        .def("to_json", [](const BilinearSystem& s) { return io::dump(io::to_json(s)); })
        .def_static("from_json", [](const std::string& t) { return io::system_from_json(io::parse_json(t)); });

    m.def("build_hex_json", [](const std::string& params) {
        return build_hex(io::hex_params_from_json(io::parse_json(params, "params")));
    });
    m.def("saturate", py::overload_cast<double, double, double>(&saturate), py::arg("u"), py::arg("u_min"),
          py::arg("u_max"));
    m.def("pi_map", &pi_map);
    m.def("output_map", &output_map);
    m.def("reachable_set", [](const BilinearSystem& s, int grid) {
        const ReachableSet rs = reachable_set(s, grid);
        return py::make_tuple(rs.r_min, rs.r_max);
    }, py::arg("system"), py::arg("grid") = kDefaultGrid);
    m.def("invert_reference", [](const BilinearSystem& s, double r) {
        const Equilibrium eq = invert_reference(s, r);
        return py::make_tuple(eq.u_ss, eq.x_ss);
    });
    m.def("check_assumption1_json", [](const BilinearSystem& s, int grid) {
        return io::dump(io::to_json(check_assumption1(s, grid)));
    }, py::arg("system"), py::arg("grid") = 64);
    m.def("design_json", [](const BilinearSystem& s, const std::string& scenario) {
        const SimScenario scn = io::scenario_from_json(io::parse_json(scenario, "scenario"));
        return io::dump(io::to_json(design_for_scenario(s, scn), scn.law));
    });
    m.def("simulate_json", [](const BilinearSystem& s, const std::string& scenario) {
        const SimScenario scn = io::scenario_from_json(io::parse_json(scenario, "scenario"));
        SimResult r;
        {
            py::gil_scoped_release nogil;
            r = run(s, scn);
        }
        return py::make_tuple(result_to_dict(r), io::dump(io::to_json(compute_metrics(r, scn))));
    });
}
