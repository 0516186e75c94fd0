#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace hjhom {

/// Outcome of a sampled property check. `worst_margin` is the smallest observed
/// slack (negative means violated); witnesses keep the first few failing samples.
struct CheckReport {
  std::string name;
  bool passed = true;
  std::size_t samples = 0;
  std::size_t violation_count = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<nlohmann::json> witnesses;
  nlohmann::json details = nlohmann::json::object();

  static constexpr std::size_t kMaxWitnesses = 10;

  /// Record one sample with slack `margin` against tolerance `-tolerance`.
  void record(double margin, double tolerance, const nlohmann::json& witness) {
    ++samples;
    if (margin < worst_margin) worst_margin = margin;
    if (margin < -tolerance) {
      passed = false;
      ++violation_count;
      if (witnesses.size() < kMaxWitnesses) witnesses.push_back(witness);
    }
  }

  void fail(const nlohmann::json& witness) {
    passed = false;
    ++violation_count;
    if (witnesses.size() < kMaxWitnesses) witnesses.push_back(witness);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["passed"] = passed;
    j["samples"] = samples;
    j["violations"] = violation_count;
    if (worst_margin == std::numeric_limits<double>::infinity()) {
      j["worst_margin"] = nullptr;
    } else {
      j["worst_margin"] = worst_margin;
    }
    j["witnesses"] = witnesses;
    if (!details.empty()) j["details"] = details;
    return j;
  }
};

}  // namespace hjhom
