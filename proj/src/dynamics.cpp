#include "magflow/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "magflow/integrals.hpp"

namespace magflow {

std::pair<AlgebraVector, AlgebraVector> geodesic_field(const LieAlgebraSpec& spec,
                                                       const PhasePoint& pt) {
  const AlgebraVector px = spec.bracket(pt.p, pt.x);
  return {spec.bracket(pt.x, px), spec.bracket(pt.p, px)};
}

std::pair<AlgebraVector, AlgebraVector> pendulum_field(const LieAlgebraSpec& spec,
                                                       const PhasePoint& pt,
                                                       const MagneticSetup& setup) {
  const AlgebraVector px = spec.bracket(pt.p, pt.x);
  AlgebraVector dx = spec.bracket(pt.x, px);
  AlgebraVector dp = spec.bracket(pt.p, px);
  if (setup.epsilon != 0.0)
    dp += setup.epsilon * spec.bracket(pt.x, pt.p);
  const AlgebraVector b = setup.effective_b();
  if (b.squaredNorm() != 0.0) {
    const SubspaceBasis ann = ann_basis(spec, pt.x);
    dp += b - project(spec, b, ann.vectors);
  }
  return {dx, dp};
}

ComplexAlgebraVector semidirect_field(const LieAlgebraSpec& spec,
                                      const ComplexAlgebraVector& z,
                                      const AlgebraVector& b) {
  return {spec.bracket(z.im, b), spec.bracket(z.re, z.im)};
}

Trajectory integrate(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& rhs,
    const std::function<void(Eigen::VectorXd&)>& project,
    const std::function<StepDiagnostics(const Eigen::VectorXd&)>& diag,
    const Eigen::VectorXd& state0, double t_end, double h, int project_every) {
  if (h <= 0.0) throw InputError("integrate: h must be positive");
  if (t_end <= 0.0) throw InputError("integrate: t_end must be positive");

  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / h));
  Trajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.diagnostics.reserve(n_steps + 1);

  Eigen::VectorXd y = state0;
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  traj.diagnostics.push_back(diag(y));

  for (std::size_t step = 1; step <= n_steps; ++step) {
    const Eigen::VectorXd k1 = rhs(y);
    const Eigen::VectorXd k2 = rhs(y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (project_every > 0 && step % static_cast<std::size_t>(project_every) == 0)
      project(y);

    const StepDiagnostics d = diag(y);
    if (std::max(d.res_orbit, d.res_cotangent) > 1e-4) {
      std::ostringstream os;
      os << "integrate: constraint residual "
         << std::max(d.res_orbit, d.res_cotangent) << " at step " << step
         << " (t = " << step * h << ")";
      throw NumericError(os.str());
    }
    traj.times.push_back(step * h);
    traj.states.push_back(y);
    traj.diagnostics.push_back(d);
  }
  return traj;
}

Trajectory integrate_pendulum(const OrbitContext& ctx, const PhasePoint& start,
                              const MagneticSetup& setup, double t_end, double h,
                              int project_every) {
  const auto& spec = ctx.algebra();
  auto rhs = [&](const Eigen::VectorXd& y) {
    auto [x, p] = unpack_phase(y);
    PhasePoint pt{std::move(x), std::move(p), std::nullopt};
    auto [dx, dp] = pendulum_field(spec, pt, setup);
    return pack_phase(dx, dp);
  };
  auto project = [&](Eigen::VectorXd& y) {
    auto [x, p] = unpack_phase(y);
    ctx.project_to_bundle(x, p);
    y = pack_phase(x, p);
  };
  auto diag = [&](const Eigen::VectorXd& y) {
    auto [x, p] = unpack_phase(y);
    StepDiagnostics d;
    PhasePoint pt{x, p, std::nullopt};
    d.energy = pendulum_hamiltonian(spec, pt, setup);
    d.res_orbit = ctx.membership_residual(x);
    d.res_cotangent = ctx.cotangent_residual(x, p);
    return d;
  };
  return integrate(rhs, project, diag, pack_phase(start.x, start.p), t_end, h,
                   project_every);
}

Trajectory integrate_semidirect(const OrbitContext& ctx,
                                const ComplexAlgebraVector& start,
                                const MagneticSetup& setup, double t_end,
                                double h, int project_every) {
  const auto& spec = ctx.algebra();
  const AlgebraVector b = setup.effective_b();
  const double eps = setup.epsilon;

  auto rhs = [&](const Eigen::VectorXd& y) {
    const ComplexAlgebraVector z = ComplexAlgebraVector::from_flat(y);
    return semidirect_field(spec, z, b).flat();
  };
  // under Theta_eps the image satisfies: eta on the orbit,
  // xi - eps*eta in ann(eta)^perp; project back accordingly
  auto project = [&](Eigen::VectorXd& y) {
    ComplexAlgebraVector z = ComplexAlgebraVector::from_flat(y);
    AlgebraVector m = z.re - eps * z.im;
    ctx.project_to_bundle(z.im, m);
    z.re = m + eps * z.im;
    y = z.flat();
  };
  auto diag = [&](const Eigen::VectorXd& y) {
    const ComplexAlgebraVector z = ComplexAlgebraVector::from_flat(y);
    StepDiagnostics d;
    d.energy = 0.5 * spec.inner(z.re, z.re) - spec.inner(b, z.im);
    d.res_orbit = ctx.membership_residual(z.im);
    d.res_cotangent = ctx.cotangent_residual(z.im, z.re - eps * z.im);
    return d;
  };
  return integrate(rhs, project, diag, start.flat(), t_end, h, project_every);
}

PhasePoint exact_magnetic_geodesic(const OrbitContext& ctx, const PhasePoint& start,
                                   double epsilon, double t) {
  if (!start.witness_log)
    throw InputError("exact_magnetic_geodesic: phase point carries no group witness");
  const auto& spec = ctx.algebra();
  const AlgebraVector& a = ctx.seed();

  const Mat adj0 = spec.adjoint_matrix(*start.witness_log);
  if ((adj0 * a - start.x).norm() > 1e-8 * std::max(1.0, start.x.norm()))
    throw InputError("exact_magnetic_geodesic: witness does not reproduce x0");

  // body-frame velocity representative
  const Mat adj0_inv = spec.adjoint_matrix(AlgebraVector(-*start.witness_log));
  const AlgebraVector q = adj0_inv * start.p;
  const AlgebraVector xi = spec.bracket(a, q);
  const AlgebraVector zeta = xi + epsilon * a;

  const AlgebraVector x_t =
      adj0 * spec.group_adjoint(zeta, t, a);
  const AlgebraVector m = momentum_map(spec, start, epsilon);
  PhasePoint out;
  out.x = x_t;
  out.p = ctx.recover_p(x_t, AlgebraVector(m - epsilon * x_t));
  return out;
}

namespace {

template <class Map>
double centered_residual(const Trajectory& traj, std::size_t stride,
                         std::size_t subsample, const Map& map_state,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                                             std::size_t)>& rhs) {
  if (traj.size() < 2 * stride + 1)
    throw InputError("centered_residual: trajectory too short for the stride");
  const double h = traj.times[1] - traj.times[0];
  double worst = 0.0;
  for (std::size_t s = stride; s + stride < traj.size(); s += subsample) {
    const Eigen::VectorXd fd =
        (map_state(traj.states[s + stride]) - map_state(traj.states[s - stride])) /
        (2.0 * stride * h);
    worst = std::max(worst, (fd - rhs(map_state(traj.states[s]), s)).norm());
  }
  return worst;
}

} // namespace

double pushforward_field_residual(const OrbitContext& ctx, const Trajectory& traj,
                                  const MagneticSetup& setup, std::size_t stride,
                                  std::size_t subsample) {
  const auto& spec = ctx.algebra();
  const AlgebraVector beff = setup.effective_b();
  auto to_theta = [&](const Eigen::VectorXd& y) {
    auto [x, p] = unpack_phase(y);
    return theta_map(spec, PhasePoint{std::move(x), std::move(p), std::nullopt},
                     setup.epsilon)
        .flat();
  };
  auto rhs = [&](const Eigen::VectorXd& mu_flat, std::size_t) {
    return semidirect_field(spec, ComplexAlgebraVector::from_flat(mu_flat), beff)
        .flat();
  };
  return centered_residual(traj, stride, subsample, to_theta, rhs);
}

double momentum_law_residual(const OrbitContext& ctx, const Trajectory& traj,
                             const MagneticSetup& setup, std::size_t stride,
                             std::size_t subsample) {
  const auto& spec = ctx.algebra();
  const AlgebraVector beff = setup.effective_b();
  auto to_phi = [&](const Eigen::VectorXd& y) {
    auto [x, p] = unpack_phase(y);
    return AlgebraVector(
        momentum_map(spec, PhasePoint{std::move(x), std::move(p), std::nullopt},
                     setup.epsilon));
  };
  auto rhs = [&](const Eigen::VectorXd&, std::size_t s) {
    auto [x, p] = unpack_phase(traj.states[s]);
    (void)p;
    return AlgebraVector(spec.bracket(x, beff));
  };
  return centered_residual(traj, stride, subsample, to_phi, rhs);
}

CircleFit measure_circle_radius(const Trajectory& traj) {
  if (traj.states.empty() || traj.states[0].size() != 6)
    throw InputError("measure_circle_radius: expects an so(3) phase trajectory");

  const std::size_t n = traj.size();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& s : traj.states) centroid += s.head<3>();
  centroid /= static_cast<double>(n);

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& s : traj.states) {
    const Eigen::Vector3d y = s.head<3>() - centroid;
    scatter += y * y.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  Eigen::Vector3d normal = es.eigenvectors().col(0);  // total least squares plane

  double offset = 0.0;
  for (const auto& s : traj.states) offset += normal.dot(s.head<3>());
  offset /= static_cast<double>(n);
  if (offset < 0) {
    normal = -normal;
    offset = -offset;
  }

  double radius_acc = 0.0;
  double worst = 0.0;
  for (const auto& s : traj.states) {
    const Eigen::Vector3d y = s.head<3>();
    const double along = normal.dot(y);
    const double inplane = (y - along * normal).norm();
    radius_acc += std::atan2(inplane, along);
    worst = std::max(worst, std::abs(along - offset));
    worst = std::max(worst, std::abs(y.norm() - 1.0));
  }

  CircleFit fit;
  fit.radius = radius_acc / static_cast<double>(n);
  fit.fit_residual = worst;
  if (fit.fit_residual > 1e-4) {
    std::ostringstream os;
    os << "measure_circle_radius: trajectory is not a circle on the unit sphere "
          "(fit residual " << fit.fit_residual << ")";
    throw NumericError(os.str());
  }
  return fit;
}

} // namespace magflow
