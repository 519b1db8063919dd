#include "gspplan/common/rng.hpp"

#include <sstream>
#include <stdexcept>

namespace gspplan {

int sample_discrete(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_discrete: empty distribution");
  const double u = uniform01(rng);
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  if (last_positive < 0) throw std::invalid_argument("sample_discrete: distribution has no mass");
  return last_positive;
}

std::string rng_state_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_state_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw std::invalid_argument("rng_from_state_string: malformed state");
  return rng;
}

}  // namespace gspplan
