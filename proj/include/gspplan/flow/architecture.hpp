#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace gspplan::flow {

// Network parameters. Aligned storage keeps Eigen's vectorized summation
// order independent of where the buffer lands.
using ParamVector = std::vector<float, Eigen::aligned_allocator<float>>;

enum class Mixing { kAdditive, kFilm };

// Shape of the conditional vector field v_t(x | s, a, z, gamma). Any of the
// conditioning inputs can be disabled by setting its dimension to zero (or
// use_gamma = false); the one-step model and the GC-BC policy use that.
struct Architecture {
  int x_dim = 4;
  int state_dim = 4;
  int action_dim = 2;
  int z_dim = 4;
  bool use_gamma = true;
  int hidden = 256;
  int embed_dim = 64;  // sinusoidal features, split evenly between sin and cos
  double time_scale = 30.0;    // highest sinusoid frequency for the flow time
  double gamma_scale = 100.0;  // highest sinusoid frequency for the discount
  int blocks = 3;
  Mixing mixing = Mixing::kAdditive;

  // [state, action-or-token, z-or-token, z-mask flag, action-mask flag]
  int cond_dim() const;
  std::size_t param_count() const;
  void validate() const;

  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);
  bool operator==(const Architecture&) const = default;
};

// A dense layer's slice of the flat parameter vector: W (out x in, column-major) then b.
struct LinearSlot {
  std::size_t offset = 0;
  int out = 0;
  int in = 0;
  std::size_t size() const { return static_cast<std::size_t>(out) * (in + 1); }
};

// Offsets of every parameter group within the flat vector.
struct ParamLayout {
  LinearSlot time1, time2;
  LinearSlot gamma1, gamma2;  // empty when !use_gamma
  LinearSlot cond1, cond2;    // empty when cond_dim() == 0
  std::size_t action_token = 0;
  std::size_t z_token = 0;
  LinearSlot input;
  std::vector<LinearSlot> block;
  std::vector<LinearSlot> film;  // empty for additive mixing
  LinearSlot output;
  std::size_t total = 0;

  explicit ParamLayout(const Architecture& arch);
};

}  // namespace gspplan::flow
