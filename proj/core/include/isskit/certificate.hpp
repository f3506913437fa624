#pragma once

#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace isskit {

/// Machine-readable outcome of a numerical check. Margins follow a single
/// convention: the slack by which the tested inequality holds, so negative
/// margins are violations and the verdict is
///
///   verdict == (worst_margin >= -tolerance)
///
/// A check whose premise never fired is marked vacuous (verdict stays true,
/// samples_applicable == 0).
struct Certificate {
  std::string check;
  nlohmann::json parameters = nlohmann::json::object();
  long samples_tested = 0;
  long samples_applicable = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
  bool verdict = false;
  bool vacuous = false;
  nlohmann::json details = nlohmann::json::object();
  std::vector<std::string> witness_files;

  /// Folds one sample's slack into the certificate.
  void record(double margin) {
    ++samples_applicable;
    if (margin < worst_margin) worst_margin = margin;
  }

  /// Sets verdict and vacuous flags from the recorded margins.
  void finalize() {
    vacuous = samples_applicable == 0;
    verdict = vacuous || worst_margin >= -tolerance;
  }

  nlohmann::json to_json() const;
  static Certificate from_json(const nlohmann::json& j);
};

}  // namespace isskit
