#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace gspplan::verify {

struct PropertyResult {
  std::string name;
  int instances = 0;
  double max_residual = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_residual <= tolerance; }
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<PropertyResult> properties;

  bool passed() const;
  nlohmann::json to_json() const;
};

struct AlgebraOptions {
  int max_states = 20;
  int max_phases = 5;
  // Negative control: scales the first composite weight before mixing.
  bool inject_fault = false;
};

// Composite measure vs augmented-chain oracle, weight normalization,
// two-timescale identity on exact measures, loss-coefficient sums and Bellman
// residuals, each over `trials` random tabular instances.
SuiteReport algebra_suite(std::uint64_t seed, int trials, const AlgebraOptions& opt = {});

// Analytic loss gradients of random double-precision flow nets against central
// differences, `coordinates` per instance.
SuiteReport gradient_suite(std::uint64_t seed, int trials, int coordinates = 100);

}  // namespace gspplan::verify
