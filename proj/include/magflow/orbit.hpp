#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "magflow/liealg.hpp"

namespace magflow {

/// Orthonormal basis of a subspace plus the diagnostics of the kernel
/// detection that produced it.
struct SubspaceBasis {
  std::vector<AlgebraVector> vectors;  // orthonormal w.r.t. the invariant inner product
  double singular_gap = std::numeric_limits<double>::infinity();
  bool ambiguous = false;              // gap below 10x the detection threshold

  int dim() const { return static_cast<int>(vectors.size()); }
};

/// A point of the embedded cotangent bundle T*O(a) in g x g. The sampler
/// keeps the log of the group element used to reach x, so the closed-form
/// geodesic is available; deserialized points carry no witness.
struct PhasePoint {
  AlgebraVector x;
  AlgebraVector p;
  std::optional<AlgebraVector> witness_log;  // x = Ad_{exp(w)} a
};

/// Orthonormal basis of the annihilator ann(x) = ker ad_x, detected through
/// singular values below tol x largest.
SubspaceBasis ann_basis(const LieAlgebraSpec& spec, const AlgebraVector& x,
                        double tol = 1e-9);

/// Orthogonal projection of y onto span(basis) or its complement, w.r.t.
/// the invariant inner product. Basis must be orthonormal in that product.
AlgebraVector project(const LieAlgebraSpec& spec, const AlgebraVector& y,
                      const std::vector<AlgebraVector>& basis,
                      bool onto_complement = false);

/// Geometry of one adjoint orbit O(a): seed, annihilator, sampling and
/// constraint maintenance. Immutable after construction.
class OrbitContext {
public:
  OrbitContext(std::shared_ptr<const LieAlgebraSpec> algebra, AlgebraVector seed,
               double kernel_tol = 1e-9);

  const LieAlgebraSpec& algebra() const { return *algebra_; }
  std::shared_ptr<const LieAlgebraSpec> algebra_ptr() const { return algebra_; }
  const AlgebraVector& seed() const { return seed_; }
  const SubspaceBasis& seed_ann_basis() const { return ann_a_; }
  int orbit_dim() const { return orbit_dim_; }
  double kernel_tol() const { return kernel_tol_; }
  const Eigen::VectorXcd& seed_invariants() const { return seed_invariants_; }

  /// x = Ad_{exp(xi)} a with xi standard normal; deterministic in the seed.
  AlgebraVector random_orbit_point(std::uint64_t rng_seed) const;

  /// Same draw, but keeping the log witness.
  PhasePoint random_orbit_point_with_witness(std::uint64_t rng_seed) const;

  /// Gaussian covector projected onto ann(x)^perp.
  AlgebraVector cotangent_sample(const AlgebraVector& x,
                                 std::uint64_t rng_seed) const;

  /// Deterministic raw -> ann(x)^perp projection (the sampling kernel).
  AlgebraVector cotangent_project(const AlgebraVector& x,
                                  const AlgebraVector& raw) const;

  /// Full phase-space sample with witness; p-draw uses rng_seed + 1.
  PhasePoint sample_phase_point(std::uint64_t rng_seed) const;

  /// The unique p in ann(x)^perp with [x,p] = m. Throws NumericError when m
  /// has an ann(x) component above tol (relative to |m|).
  AlgebraVector recover_p(const AlgebraVector& x, const AlgebraVector& m,
                          double tol = 1e-8) const;

  /// Orbit-membership residual: invariant match, normalized.
  double membership_residual(const AlgebraVector& x) const;

  /// Cotangent residual |pr_{ann(x)} p| / (1 + |p|).
  double cotangent_residual(const AlgebraVector& x, const AlgebraVector& p) const;

  /// One Newton step on the invariant residuals (correction in the span of
  /// ann(x), where the invariant differentials live), then re-projection of
  /// p onto ann(x)^perp.
  void project_to_bundle(AlgebraVector& x, AlgebraVector& p) const;

private:
  std::shared_ptr<const LieAlgebraSpec> algebra_;
  AlgebraVector seed_;
  SubspaceBasis ann_a_;
  int orbit_dim_ = 0;
  double kernel_tol_ = 1e-9;
  Eigen::VectorXcd seed_invariants_;
};

} // namespace magflow
