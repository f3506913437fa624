#include "isskit/registry.hpp"

#include <cmath>

namespace isskit {

namespace {

int map_code(const std::string& id) {
  if (id == "cubic_odd") return 0;
  if (id == "sqrt_abs") return 1;
  if (id == "square") return 2;
  if (id == "power_m") return 3;
  if (id == "none") return 4;
  return -1;
}

}  // namespace

void registry_validate(const NonlinMap& map) {
  const int code = map_code(map.id);
  if (code < 0) throw RegistryUnknown("unknown nonlinearity '" + map.id + "'");
  if (code == 3 && !(map.param > 0.0)) {
    throw RegistryUnknown("power_m needs a positive exponent parameter");
  }
}

double registry_eval(const NonlinMap& map, double s) {
  switch (map_code(map.id)) {
    case 0:
      return s * s * s;
    case 1:
      return std::sqrt(std::abs(s));
    case 2:
      return s * s;
    case 3:
      return std::copysign(std::pow(std::abs(s), map.param), s);
    case 4:
      return 0.0;
    default:
      throw RegistryUnknown("unknown nonlinearity '" + map.id + "'");
  }
}

double registry_antiderivative(const NonlinMap& map, double s) {
  switch (map_code(map.id)) {
    case 0:
      return 0.25 * s * s * s * s;
    case 1:
      return std::copysign((2.0 / 3.0) * std::pow(std::abs(s), 1.5), s);
    case 2:
      return s * s * s / 3.0;
    case 3:
      return std::pow(std::abs(s), map.param + 1.0) / (map.param + 1.0);
    case 4:
      return 0.0;
    default:
      throw RegistryUnknown("unknown nonlinearity '" + map.id + "'");
  }
}

bool registry_is_odd_monotone(const NonlinMap& map) {
  switch (map_code(map.id)) {
    case 0:
      return true;
    case 3:
      return map.param > 0.0;
    default:
      return false;
  }
}

}  // namespace isskit
