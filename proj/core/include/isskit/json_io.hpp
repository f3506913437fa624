#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "isskit/gains.hpp"
#include "isskit/lyapunov.hpp"
#include "isskit/system.hpp"

namespace isskit {

/// Comparison-function encoding:
///   {"kind":"power","coeff":k,"expo":p}
///   {"kind":"table","points":[[r,v],...]}
///   {"kind":"piecewise_power","segments":[{"r_lo":r,"coeff":k,"expo":p},...]}
nlohmann::json kfun_to_json(const KFun& f);
KFun kfun_from_json(const nlohmann::json& j);

/// Gain-matrix encoding with 1-based subsystem indices:
///   {"n":2,"edges":[{"from":2,"to":1,"gain":{...}}],"input_gains":[{...},null]}
nlohmann::json gain_matrix_to_json(const GainMatrix& g);
GainMatrix gain_matrix_from_json(const nlohmann::json& j);

/// System encoding (1-based species/channel indices in reactions/inputs):
///   {"grid":{"d":..,"n_interior":..},"species":2,"diffusion":[..],
///    "bc":["dirichlet","neumann"],"linear_coupling":[[..],[..]],
///    "reactions":[{"target":1,"source":2,"map":{"id":"square"},"coeff":1}],
///    "inputs":[{"target":1,"channel":1,"map":{"id":"power_m","param":1},"coeff":1}],
///    "channels":1}
nlohmann::json system_spec_to_json(const SystemSpec& spec);
SystemSpec system_spec_from_json(const nlohmann::json& j);

/// Separable input channels; callback-backed signals are not serializable.
nlohmann::json input_signal_to_json(const InputSignal& u);
InputSignal input_signal_from_json(const nlohmann::json& j);

/// Lyapunov candidate description for the CLI:
///   {"kind":"energy","reaction":{"id":"cubic_odd"},"species":1,...}
///   {"kind":"norm_power","norm":"L2","power":2,"coeff":1,"species":1,...}
///   {"kind":"quadratic","source":"solve"}   (solve the operator equation on
///                                            the spec's linear part)
/// plus optional "gain" and "alpha" comparison functions.
LyapunovFn lyapunov_from_json(const SystemSpec& spec, const nlohmann::json& j);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace isskit
