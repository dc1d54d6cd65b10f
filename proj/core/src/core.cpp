#include "vab/core.hpp"

#include <stdexcept>
#include <string>

#include "vab/errors.hpp"

namespace vab {

ClipLadder ClipLadder::for_bandit(int rounds) {
  if (rounds < 1) throw PreconditionError("ClipLadder: rounds must be >= 1");
  const int l2 = static_cast<int>(std::ceil(std::log2(static_cast<double>(rounds))));
  return ClipLadder({0, 0}, {1, 1}, {1, l2 + 1});
}

ClipLadder ClipLadder::for_mixture(int horizon, int episodes) {
  if (horizon < 1 || episodes < 1)
    throw PreconditionError("ClipLadder: horizon and episodes must be >= 1");
  const double hk = static_cast<double>(horizon) * episodes;
  const int l0 = static_cast<int>(std::ceil(std::log2(static_cast<double>(horizon))));
  const int l12 = static_cast<int>(std::ceil(5.0 * std::log2(hk) + 3.0));
  return ClipLadder({0, l0}, {1, l12}, {1, l12});
}

int ClipLadder::assign_layer(double eta) const {
  if (!(eta >= 0.0)) throw PreconditionError("assign_layer: eta must be >= 0");
  if (eta > level(1))
    throw std::out_of_range("assign_layer: eta " + std::to_string(eta) +
                            " exceeds the top level");
  if (eta == 0.0) return overflow_layer();
  // eta = f * 2^e with f in [0.5, 1); exact powers of two sit on the closed
  // upper end of their interval.
  int e = 0;
  const double f = std::frexp(eta, &e);
  const int i = (f == 0.5) ? 3 - e : 2 - e;
  return i > variance_layers_.last ? overflow_layer() : i;
}

double iota_bandit(int d, int rounds, double delta, double scale) {
  if (d < 1) throw PreconditionError("iota_bandit: d must be >= 1");
  if (rounds < 4) throw PreconditionError("iota_bandit: K must be >= 4");
  if (!(delta > 0.0 && delta < 1.0))
    throw PreconditionError("iota_bandit: delta must lie in (0, 1)");
  const double loglog = std::log2(std::log2(static_cast<double>(rounds)));
  return scale * 60.0 * d * std::log(static_cast<double>(d) * rounds / delta) *
         loglog * loglog;
}

double iota_mdp(int d, int horizon, int episodes, double scale) {
  if (d < 1 || horizon < 1 || episodes < 1)
    throw PreconditionError("iota_mdp: d, H, K must be >= 1");
  const double hk = static_cast<double>(horizon) * episodes;
  if (hk < 2.0) throw PreconditionError("iota_mdp: HK must be >= 2");
  return scale * 5.0 * d * std::log(hk);
}

}  // namespace vab
