#include "gspplan/flow/architecture.hpp"

#include <stdexcept>

namespace gspplan::flow {

int Architecture::cond_dim() const {
  return state_dim + action_dim + z_dim + (z_dim > 0 ? 1 : 0) + (action_dim > 0 ? 1 : 0);
}

std::size_t Architecture::param_count() const { return ParamLayout(*this).total; }

void Architecture::validate() const {
  if (x_dim < 1 || hidden < 1 || blocks < 0 || state_dim < 0 || action_dim < 0 || z_dim < 0) {
    throw std::invalid_argument("Architecture: invalid dimensions");
  }
  if (!(time_scale > 0.0) || !(gamma_scale > 0.0)) throw std::invalid_argument("Architecture: embedding scales must be positive");
  if (embed_dim < 2 || embed_dim % 2 != 0) throw std::invalid_argument("Architecture: embed_dim must be even");
}

nlohmann::json Architecture::to_json() const {
  return {{"x_dim", x_dim},         {"state_dim", state_dim}, {"action_dim", action_dim},
          {"z_dim", z_dim},         {"use_gamma", use_gamma}, {"hidden", hidden},
          {"embed_dim", embed_dim}, {"time_scale", time_scale}, {"gamma_scale", gamma_scale}, {"blocks", blocks},       {"mixing", mixing == Mixing::kFilm ? "film" : "additive"}};
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  Architecture a;
  a.x_dim = j.at("x_dim").get<int>();
  a.state_dim = j.at("state_dim").get<int>();
  a.action_dim = j.at("action_dim").get<int>();
  a.z_dim = j.at("z_dim").get<int>();
  a.use_gamma = j.at("use_gamma").get<bool>();
  a.hidden = j.at("hidden").get<int>();
  a.embed_dim = j.at("embed_dim").get<int>();
  a.time_scale = j.at("time_scale").get<double>();
  a.gamma_scale = j.at("gamma_scale").get<double>();
  a.blocks = j.at("blocks").get<int>();
  const auto mixing = j.at("mixing").get<std::string>();
  if (mixing == "film") {
    a.mixing = Mixing::kFilm;
  } else if (mixing == "additive") {
    a.mixing = Mixing::kAdditive;
  } else {
    throw std::invalid_argument("Architecture: unknown mixing '" + mixing + "'");
  }
  a.validate();
  return a;
}

ParamLayout::ParamLayout(const Architecture& arch) {
  arch.validate();
  std::size_t cursor = 0;
  auto linear = [&](int out, int in) {
    LinearSlot s{cursor, out, in};
    cursor += s.size();
    return s;
  };
  const int H = arch.hidden;
  time1 = linear(H, arch.embed_dim);
  time2 = linear(H, H);
  if (arch.use_gamma) {
    gamma1 = linear(H, arch.embed_dim + 3);
    gamma2 = linear(H, H);
  }
  if (arch.cond_dim() > 0) {
    cond1 = linear(H, arch.cond_dim());
    cond2 = linear(H, H);
  }
  action_token = cursor;
  cursor += static_cast<std::size_t>(arch.action_dim);
  z_token = cursor;
  cursor += static_cast<std::size_t>(arch.z_dim);
  input = linear(H, arch.x_dim);
  for (int l = 0; l < arch.blocks; ++l) {
    block.push_back(linear(H, H));
    if (arch.mixing == Mixing::kFilm) film.push_back(linear(2 * H, H));
  }
  output = linear(arch.x_dim, H);
  total = cursor;
}

}  // namespace gspplan::flow
