#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "magflow/dynamics.hpp"
#include "magflow/orbit.hpp"

namespace magflow {

// --- momentum maps and energies ----------------------------------------------------

/// Phi_eps(x,p) = [x,p] + eps x.
AlgebraVector momentum_map(const LieAlgebraSpec& spec, const PhasePoint& pt,
                           double epsilon);

/// H_0 = 1/2 <[x,p],[x,p]>.
double normal_hamiltonian(const LieAlgebraSpec& spec, const PhasePoint& pt);

/// H = 1/2 <[x,p],[x,p]> - <kappa b, x>.
double pendulum_hamiltonian(const LieAlgebraSpec& spec, const PhasePoint& pt,
                            const MagneticSetup& setup);

/// Theta_eps(x,p) = Phi_eps(x,p) + i x.
ComplexAlgebraVector theta_map(const LieAlgebraSpec& spec, const PhasePoint& pt,
                               double epsilon);

// --- integral families ----------------------------------------------------------------

enum class FamilyKind {
  ShiftAc,
  SemidirectB,
  MomentumComponents,
  Hamiltonian,
  S2Linear,
  InvariantCatalog,  // G-invariant functions p_j(p + mu x)
};

/// One scalar function on phase space, carried in the Theta_eps chart
/// (xi, eta) = (Phi_eps, x) together with the metadata to recompute it.
struct Member {
  std::string label;
  FamilyKind kind = FamilyKind::Hamiltonian;
  int invariant_index = 0;          // j, 1-based; 0 when not applicable
  double lambda = 0.0;              // shift parameter; 0 when not applicable
  InvariantPart part = InvariantPart::Re;
  bool exact_gradient = false;

  std::function<double(const ComplexAlgebraVector&)> value;
  std::function<ComplexAlgebraVector(const ComplexAlgebraVector&)> gradient;
};

struct IntegralFamily {
  std::shared_ptr<const LieAlgebraSpec> algebra;
  FamilyKind kind = FamilyKind::Hamiltonian;
  double epsilon = 0.0;
  std::vector<double> lambda_grid;
  AlgebraVector direction;  // the c or b vector the members close over
  std::vector<Member> members;

  double eval_at_phase(const Member& m, const PhasePoint& pt) const {
    return m.value(theta_map(*algebra, pt, epsilon));
  }
  IntegralFamily truncated(std::size_t keep_members) const {
    IntegralFamily f = *this;
    if (keep_members < f.members.size()) f.members.resize(keep_members);
    return f;
  }
};

/// Chebyshev-spaced default shift grid: r + 2 points in [0.2, 2.0].
std::vector<double> default_lambda_grid(int rank);

/// Argument-shift family A_c pulled back through Phi_eps:
/// members pt -> p_j(Phi_eps(pt) + lambda c), real slot per invariant.
IntegralFamily family_shift(std::shared_ptr<const LieAlgebraSpec> spec,
                            const AlgebraVector& c,
                            const std::vector<double>& lambda_grid,
                            double epsilon);

/// Semidirect family B through Theta_eps:
/// Re/Im p_j(lambda Phi_eps + i (x + lambda^2 b)) per j and lambda.
IntegralFamily family_semidirect(std::shared_ptr<const LieAlgebraSpec> spec,
                                 const AlgebraVector& b,
                                 const std::vector<double>& lambda_grid,
                                 double epsilon);

/// Coordinate functions of Phi_eps (the linear family on g, pulled back).
IntegralFamily momentum_components(std::shared_ptr<const LieAlgebraSpec> spec,
                                   double epsilon);

/// Pendulum Hamiltonian as a one-member family.
IntegralFamily hamiltonian_family(std::shared_ptr<const LieAlgebraSpec> spec,
                                  const MagneticSetup& setup);

/// The S^2 linear integral f = <b, Phi_eps>; so(3) only.
IntegralFamily s2_linear_integral(std::shared_ptr<const LieAlgebraSpec> spec,
                                  const AlgebraVector& b, double epsilon);

/// G-invariant functions (x,p) -> p_j(p + mu x) over a grid of mu values.
/// In the Theta chart these go through the momentum inversion, so their
/// gradients fall back to finite differences.
IntegralFamily invariant_catalog(std::shared_ptr<const LieAlgebraSpec> spec,
                                 const std::vector<double>& mu_grid,
                                 double epsilon);

/// Members of two families over the same algebra and epsilon, joined.
IntegralFamily merge_families(const IntegralFamily& a, const IntegralFamily& b);

/// Gradient of a member at a Theta_eps image, in the convention
/// grad f = grad_xi f - i grad_eta f. Exact when the member supports it,
/// otherwise central differences (step 1e-6) with one Richardson pass.
ComplexAlgebraVector gradient(const Member& member, const ComplexAlgebraVector& mu);

/// Finite-difference fallback, exposed for cross-checks.
ComplexAlgebraVector fd_gradient(const LieAlgebraSpec& spec,
                                 const std::function<double(const ComplexAlgebraVector&)>& f,
                                 const ComplexAlgebraVector& mu, double step = 1e-6);

// --- Lax pair ------------------------------------------------------------------------

/// L(lambda) = lambda Phi_eps + i (x + lambda^2 b),
/// A(lambda) = Phi_eps + i lambda b, in the defining representation.
struct LaxPair {
  CMat L;
  CMat A;
};

LaxPair lax_pair(const LieAlgebraSpec& spec, const PhasePoint& pt, double epsilon,
                 const AlgebraVector& b, double lambda);

LaxPair lax_pair_at(const LieAlgebraSpec& spec, const ComplexAlgebraVector& mu,
                    const AlgebraVector& b, double lambda);

/// Eigenvalues of L(lambda), sorted lexicographically by (re, im).
Eigen::VectorXcd lax_spectrum(const LieAlgebraSpec& spec, const PhasePoint& pt,
                              double epsilon, const AlgebraVector& b, double lambda);

Eigen::VectorXcd lax_spectrum_at(const LieAlgebraSpec& spec,
                                 const ComplexAlgebraVector& mu,
                                 const AlgebraVector& b, double lambda);

/// Sorted-multiset distance between two spectra.
double spectrum_distance(const Eigen::VectorXcd& s1, const Eigen::VectorXcd& s2);

/// Max over interior trajectory samples of || dL/dt - [A, L] ||_F, the
/// isospectral-evolution identity. dL/dt uses a fourth-order central stencil
/// so the reported number reflects the identity, not stencil truncation.
/// With the stated L and A and the flow equations, the commutator enters in
/// the [A, L] order.
double lax_derivative_residual(const LieAlgebraSpec& spec, const Trajectory& traj,
                               bool states_are_theta, double epsilon,
                               const AlgebraVector& b, double lambda,
                               std::size_t stride = 25);

// --- drift measurement -----------------------------------------------------------------

struct MemberDrift {
  std::string label;
  FamilyKind kind;
  int invariant_index;
  double lambda;
  InvariantPart part;
  double value_t0 = 0.0;
  double max_drift_abs = 0.0;
  double max_drift_rel = 0.0;
};

/// Drift of every member along a trajectory (phase or semidirect states).
/// Relative drift is measured against max(|value_t0|, 1e-8).
std::vector<MemberDrift> family_drift(const IntegralFamily& family,
                                      const Trajectory& traj, bool states_are_theta);

} // namespace magflow
