#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gspplan/common/rng.hpp"
#include "gspplan/flow/vector_field.hpp"

namespace gspplan::ghm {

enum class Term : std::uint8_t { kOneStep = 0, kBootstrap = 1, kGammaBootstrap = 2 };

// One training transition in normalized coordinates together with its
// sampled policy embedding, next action and discounts.
struct TdRow {
  Eigen::Vector4f state = Eigen::Vector4f::Zero();
  Eigen::Vector2f action = Eigen::Vector2f::Zero();
  Eigen::Vector4f next_state = Eigen::Vector4f::Zero();
  Eigen::Vector2f next_action = Eigen::Vector2f::Zero();
  Eigen::Vector4f z = Eigen::Vector4f::Zero();
  bool mask_z = false;
  bool mask_action = false;
  float gamma = 0.0f;
  float beta = 0.0f;  // horizon-consistency rows only
  bool consistency = false;
};

// Regression entries plus bookkeeping. Entries of row r are contiguous and
// their weights sum to 1; every target is a constant computed from the target
// parameters.
struct LossSpec {
  flow::RegressionBatch<float> batch;
  std::vector<Term> term;
  std::vector<int> row;
};

// Action taken at a generated state S+ (normalized) by the row's policy.
using NextActionFn = std::function<Eigen::Vector2f(const Eigen::Vector4f& s_plus, const TdRow& row, Rng& rng)>;

// Mixed batch: rows with consistency = false get the TD-Flow pair
//   (1 - g) |v(x_t) - (S' - x_0)|^2 with x_t on the straight path to S',
//   g |v(x_t) - v_bar(x_t | S', A', g)|^2 with x_t = psi_bar_t(x_0 | S', A', g);
// rows with consistency = true get the TD-HC triple with coefficients
// (1-g, g(1-g)/(1-b), g(g-b)/(1-b)): one-step, the beta-bootstrap above with
// discount b, and the gamma-bootstrap conditioned on S+ = psi_bar_1(x_0'' | S', A', b)
// and A+ = next_action(S+). dt is the Euler step used for the target rollouts.
LossSpec build_loss_spec(const flow::VectorField<float>& field, std::span<const float> theta_bar,
                         const std::vector<TdRow>& rows, double gamma_max, const NextActionFn& next_action, double dt,
                         Rng& rng);

LossSpec td_flow_terms(const flow::VectorField<float>& field, std::span<const float> theta_bar,
                       std::vector<TdRow> rows, double gamma_max, double dt, Rng& rng);

LossSpec td_hc_terms(const flow::VectorField<float>& field, std::span<const float> theta_bar,
                     std::vector<TdRow> rows, double gamma_max, const NextActionFn& next_action, double dt, Rng& rng);

// Plain conditional flow matching on (S, A) -> S' for the one-step world model.
LossSpec one_step_terms(const flow::Architecture& arch, const std::vector<TdRow>& rows, Rng& rng);

}  // namespace gspplan::ghm
