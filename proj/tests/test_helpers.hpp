#pragma once

#include <doctest.h>

#include "magflow/liealg.hpp"
#include "magflow/orbit.hpp"
#include "magflow/rng.hpp"

namespace magflow::testing {

inline AlgebraVector random_vec(GaussianStream& g, int d) { return g.vector(d); }

inline ComplexAlgebraVector random_cvec(GaussianStream& g, int d) {
  return {g.vector(d), g.vector(d)};
}

/// su(3) coordinates of i * diag(d1, d2, -(d1+d2)).
inline AlgebraVector su3_diag(const LieAlgebraSpec& su3, double d1, double d2) {
  const Complex I(0, 1);
  CMat m = CMat::Zero(3, 3);
  m(0, 0) = I * d1;
  m(1, 1) = I * d2;
  m(2, 2) = -I * (d1 + d2);
  return su3.coords_of(m);
}

/// Phase sample with |p| = 1, for tolerance checks phrased at unit scale.
inline PhasePoint sample_unit_phase_point(const OrbitContext& ctx,
                                          std::uint64_t seed) {
  PhasePoint pt = ctx.sample_phase_point(seed);
  pt.p /= ctx.algebra().norm(pt.p);
  return pt;
}

} // namespace magflow::testing
