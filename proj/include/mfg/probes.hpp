#pragma once

// Seeded smooth test fields used by the certification and VI checks.

#include "mfg/discretization.hpp"
#include "mfg/precision.hpp"

#include <random>

namespace mfg {

using Rng = std::mt19937_64;

/// (sum_{j=1..3} c_j sin(j pi x~) + c_0)^2 with c_j ~ U[-1, 1]; nonnegative.
HVec density_probe(const DiscreteOperators& ops, Rng& rng, double amplitude = 1.0);

/// sin(pi x~)^{2k} sum_{j=1..3} d_j sin(j pi x~) with d_j ~ U[-1, 1]. Vanishes
/// at both endpoints together with its first 2k - 1 derivatives.
HVec boundary_bump(const DiscreteOperators& ops, Rng& rng, double amplitude = 1.0);

/// x~ in [0, 1] at node i.
hreal unit_coordinate(const DiscreteOperators& ops, int i);

}  // namespace mfg
