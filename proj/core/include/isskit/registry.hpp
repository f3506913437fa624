#pragma once

#include <string>

#include "isskit/errors.hpp"

namespace isskit {

/// A named scalar nonlinearity from the fixed registry:
///
///   cubic_odd   s -> s^3
///   sqrt_abs    s -> sqrt(|s|)
///   square      s -> s^2
///   power_m     s -> sign(s) |s|^param  (odd extension of s^m, param > 0)
///   none        s -> 0
///
/// power_m uses the odd extension so it remains a monotone map on all of R;
/// on nonnegative arguments it agrees with s^m.
struct NonlinMap {
  std::string id = "none";
  double param = 1.0;
};

double registry_eval(const NonlinMap& map, double s);
/// Antiderivative from 0: returns F(s) with F' = f, F(0) = 0.
double registry_antiderivative(const NonlinMap& map, double s);
/// Strictly increasing and odd (f(-s) = -f(s)); the hypothesis the energy
/// Lyapunov construction needs.
bool registry_is_odd_monotone(const NonlinMap& map);
/// Throws RegistryUnknown for ids outside the registry.
void registry_validate(const NonlinMap& map);

}  // namespace isskit
