#include "mfg/probes.hpp"

namespace mfg {

hreal unit_coordinate(const DiscreteOperators& ops, int i) { return hreal(i) / hreal(ops.grid.n); }

HVec density_probe(const DiscreteOperators& ops, Rng& rng, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double c[4];
  for (double& v : c) v = u(rng);
  const hreal pi = hp::pi();
  HVec out(static_cast<std::size_t>(ops.nodes()));
  for (int i = 0; i < ops.nodes(); ++i) {
    const hreal t = unit_coordinate(ops, i);
    hreal s = c[0];
    for (int j = 1; j <= 3; ++j) s += hreal(c[j]) * hp::sin(hreal(j) * pi * t);
    out[i] = hreal(amplitude) * s * s;
  }
  return out;
}

HVec boundary_bump(const DiscreteOperators& ops, Rng& rng, double amplitude) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double d[3];
  for (double& v : d) v = u(rng);
  const hreal pi = hp::pi();
  HVec out(static_cast<std::size_t>(ops.nodes()));
  for (int i = 0; i < ops.nodes(); ++i) {
    const hreal t = unit_coordinate(ops, i);
    const hreal s1 = hp::sin(pi * t);
    hreal env = 1;
    for (int p = 0; p < 2 * ops.k; ++p) env *= s1;
    hreal s = 0;
    for (int j = 1; j <= 3; ++j) s += hreal(d[j - 1]) * hp::sin(hreal(j) * pi * t);
    out[i] = hreal(amplitude) * env * s;
  }
  out.front() = 0;
  out.back() = 0;
  return out;
}

}  // namespace mfg
