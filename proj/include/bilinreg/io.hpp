#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "bilinreg/analysis.hpp"
#include "bilinreg/sim.hpp"

namespace bilinreg::io {

using json = nlohmann::ordered_json;

inline constexpr double kCelsiusOffset = 273.15;

/// Parses JSON text; errors carry line and column.
json parse_json(const std::string& text, const std::string& origin = "<input>");
json load_json(const std::string& path);
void save_json(const json& j, const std::string& path);
std::string dump(const json& j);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j, const std::string& what);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j, const std::string& what);

json to_json(const HexParams& p);
HexParams hex_params_from_json(const json& j);

json to_json(const BilinearSystem& sys);
BilinearSystem system_from_json(const json& j);

/// Scenario with units converted to K at load. Unknown keys are rejected.
SimScenario scenario_from_json(const json& j);
json to_json(const SimScenario& scn);

json to_json(const ObserverDesign& od);
ObserverDesign observer_from_json(const json& j);

json to_json(const DesignArtifacts& art);
DesignArtifacts artifacts_from_json(const json& j);

json to_json(const DesignBundle& b, Law law);
DesignBundle bundle_from_json(const json& j, Law* law = nullptr);

json to_json(const Assumption1Report& r);
json to_json(const Assumption3Report& r);
json to_json(const SimMetrics& m);
json to_json(const ComparisonReport& r);

/// t, x_1..x_n, xhat_1..xhat_n, u_raw, u_sat, e, y_1..y_p, V, U, W (absent columns omitted).
void write_csv(const SimResult& res, std::ostream& os);
void write_csv(const SimResult& res, const std::string& path);

}  // namespace bilinreg::io
