#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "magflow/orbit.hpp"

namespace magflow {

/// Magnetic strength and potential direction. kappa is the classical
/// pendulum multiplier; the fields and energies use kappa * b throughout.
struct MagneticSetup {
  double epsilon = 0.0;
  AlgebraVector b;       // zero vector = pure magnetic geodesic flow
  double kappa = 1.0;

  AlgebraVector effective_b() const { return kappa * b; }
  static MagneticSetup geodesic(double eps, int dim) {
    return {eps, AlgebraVector::Zero(dim), 1.0};
  }
};

struct StepDiagnostics {
  double energy = 0.0;
  double res_orbit = 0.0;
  double res_cotangent = 0.0;
};

/// Sampled flow: strictly increasing times, one flat state per time.
/// Phase states are stacked (x; p), semidirect states are (xi; eta).
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<StepDiagnostics> diagnostics;

  std::size_t size() const { return times.size(); }
  const Eigen::VectorXd& terminal() const { return states.back(); }
};

inline Eigen::VectorXd pack_phase(const AlgebraVector& x, const AlgebraVector& p) {
  Eigen::VectorXd v(x.size() + p.size());
  v << x, p;
  return v;
}
inline std::pair<AlgebraVector, AlgebraVector> unpack_phase(const Eigen::VectorXd& v) {
  const Eigen::Index d = v.size() / 2;
  return {v.head(d), v.tail(d)};
}

// --- vector fields -------------------------------------------------------------

/// Geodesic flow of the normal metric: dx = [x,[p,x]], dp = [p,[p,x]].
std::pair<AlgebraVector, AlgebraVector> geodesic_field(const LieAlgebraSpec& spec,
                                                       const PhasePoint& pt);

/// Magnetic pendulum: dx = [x,[p,x]],
/// dp = [p,[p,x]] + eps [x,p] + b - pr_{ann(x)} b.
std::pair<AlgebraVector, AlgebraVector> pendulum_field(const LieAlgebraSpec& spec,
                                                       const PhasePoint& pt,
                                                       const MagneticSetup& setup);

/// Semidirect form: d/dt (xi + i eta) = [eta, b] + i [xi, eta].
ComplexAlgebraVector semidirect_field(const LieAlgebraSpec& spec,
                                      const ComplexAlgebraVector& z,
                                      const AlgebraVector& b);

// --- integration -----------------------------------------------------------------

/// Classical fixed-step RK4 with optional periodic projection.
/// rhs and project operate on the flat state; diag fills diagnostics.
/// Throws NumericError (with step index) if the post-projection constraint
/// residual reported by diag exceeds 1e-4.
Trajectory integrate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& rhs,
                     const std::function<void(Eigen::VectorXd&)>& project,
                     const std::function<StepDiagnostics(const Eigen::VectorXd&)>& diag,
                     const Eigen::VectorXd& state0, double t_end, double h,
                     int project_every);

/// Pendulum run on the embedded bundle; records the pendulum energy and both
/// constraint residuals each step. project_every = 0 disables projection.
Trajectory integrate_pendulum(const OrbitContext& ctx, const PhasePoint& start,
                              const MagneticSetup& setup, double t_end, double h,
                              int project_every);

/// Semidirect run from a g_theta point; records h(xi+i eta) and the image
/// constraint residuals.
Trajectory integrate_semidirect(const OrbitContext& ctx,
                                const ComplexAlgebraVector& start,
                                const MagneticSetup& setup, double t_end,
                                double h, int project_every);

// --- closed-form oracle and the circle fit -----------------------------------------

/// Magnetic geodesic through (x0, p0) via the one-parameter subgroup curve;
/// requires the sampler witness. b must be zero (pure magnetic flow).
PhasePoint exact_magnetic_geodesic(const OrbitContext& ctx, const PhasePoint& start,
                                   double epsilon, double t);

/// Max residual of the centered difference of Theta_eps along an embedded
/// pendulum trajectory against the semidirect field; O((stride h)^2).
double pushforward_field_residual(const OrbitContext& ctx, const Trajectory& traj,
                                  const MagneticSetup& setup, std::size_t stride = 1,
                                  std::size_t subsample = 50);

/// Max residual of d/dt Phi_eps = [x, b] measured the same way.
double momentum_law_residual(const OrbitContext& ctx, const Trajectory& traj,
                             const MagneticSetup& setup, std::size_t stride = 1,
                             std::size_t subsample = 50);

struct CircleFit {
  double radius = 0.0;        // intrinsic (great-circle) radius
  double fit_residual = 0.0;  // worst plane/sphere deviation
};

/// Intrinsic radius of the best-fit circle of the x-part of an so(3)
/// unit-orbit trajectory. Throws NumericError when the fit residual
/// exceeds 1e-4 (trajectory not circular).
CircleFit measure_circle_radius(const Trajectory& traj);

} // namespace magflow
