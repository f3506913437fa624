#include "isskit/certificate.hpp"

namespace isskit {

nlohmann::json Certificate::to_json() const {
  nlohmann::json j;
  j["check"] = check;
  j["parameters"] = parameters;
  j["samples"] = samples_tested;
  j["samples_applicable"] = samples_applicable;
  // Infinite margins (vacuous checks) serialize as null.
  j["worst_margin"] = worst_margin;
  j["tolerance"] = tolerance;
  j["verdict"] = verdict;
  j["vacuous"] = vacuous;
  j["details"] = details;
  j["witness_files"] = witness_files;
  return j;
}

Certificate Certificate::from_json(const nlohmann::json& j) {
  Certificate c;
  c.check = j.at("check").get<std::string>();
  c.parameters = j.value("parameters", nlohmann::json::object());
  c.samples_tested = j.value("samples", 0L);
  c.samples_applicable = j.value("samples_applicable", 0L);
  if (j.contains("worst_margin") && j["worst_margin"].is_number()) {
    c.worst_margin = j["worst_margin"].get<double>();
  }
  c.tolerance = j.value("tolerance", 0.0);
  c.verdict = j.at("verdict").get<bool>();
  c.vacuous = j.value("vacuous", false);
  c.details = j.value("details", nlohmann::json::object());
  c.witness_files = j.value("witness_files", std::vector<std::string>{});
  return c;
}

}  // namespace isskit
