#include <doctest.h>

#include <cmath>

#include "magflow/kernels.hpp"
#include "magflow/poisson.hpp"
#include "test_helpers.hpp"

using namespace magflow;
using namespace magflow::testing;

namespace {

OrbitContext so3_unit_orbit() {
  auto so3 = LieAlgebraSpec::so(3);
  AlgebraVector a(3);
  a << 0, 0, 1;
  return OrbitContext(so3, a);
}
OrbitContext su3_regular_orbit() {
  auto su3 = LieAlgebraSpec::su(3);
  return OrbitContext(su3, su3_diag(*su3, 1.0, 0.3));
}

double max_drift(const std::vector<MemberDrift>& drifts) {
  double worst = 0.0;
  for (const auto& d : drifts) worst = std::max(worst, d.max_drift_rel);
  return worst;
}

} // namespace

TEST_CASE("momentum map") {
  const OrbitContext ctx = so3_unit_orbit();
  const auto& so3 = ctx.algebra();

  PhasePoint rest = ctx.sample_phase_point(1);
  rest.p.setZero();
  CHECK(momentum_map(so3, rest, 0.0).norm() == 0.0);

  // so(3): Phi_0 is the vector product
  const PhasePoint pt = ctx.sample_phase_point(2);
  const Eigen::Vector3d x = pt.x, p = pt.p;
  CHECK((momentum_map(so3, pt, 0.0) - AlgebraVector(x.cross(p))).norm() < 1e-13);

  // conserved along the magnetic geodesic flow
  const MagneticSetup setup{0.9, AlgebraVector::Zero(3), 1.0};
  const Trajectory traj = integrate_pendulum(ctx, pt, setup, 5.0, 1e-3, 10);
  const AlgebraVector m0 = momentum_map(so3, pt, setup.epsilon);
  double worst = 0.0;
  for (const auto& s : traj.states) {
    auto [xs, ps] = unpack_phase(s);
    worst = std::max(worst,
                     (momentum_map(so3, PhasePoint{xs, ps, std::nullopt}, setup.epsilon) - m0).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("hamiltonians") {
  const OrbitContext ctx = su3_regular_orbit();
  const auto& su3 = ctx.algebra();
  GaussianStream g(83);

  PhasePoint rest = ctx.sample_phase_point(3);
  rest.p.setZero();
  CHECK(normal_hamiltonian(su3, rest) == 0.0);

  SUBCASE("H_eps - H_0 = eps^2/2 <a,a> pointwise") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(10 + s);
      const double eps = 0.6;
      const AlgebraVector phi = momentum_map(su3, pt, eps);
      const double h_eps = 0.5 * su3.inner(phi, phi);
      const double expect = normal_hamiltonian(su3, pt) +
                            eps * eps * 0.5 * su3.inner(ctx.seed(), ctx.seed());
      CHECK(h_eps == doctest::Approx(expect).epsilon(1e-11));
    }
  }

  SUBCASE("so(3): kinetic plus potential energy") {
    const OrbitContext s2 = so3_unit_orbit();
    const auto& so3 = s2.algebra();
    const MagneticSetup setup{0.0, g.vector(3), 1.7};
    const PhasePoint pt = s2.sample_phase_point(4);
    const double expect = 0.5 * so3.inner(pt.p, pt.p) -
                          setup.kappa * so3.inner(setup.b, pt.x);
    CHECK(pendulum_hamiltonian(so3, pt, setup) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(pendulum_hamiltonian(so3, pt, MagneticSetup::geodesic(0.3, 3)) ==
          doctest::Approx(normal_hamiltonian(so3, pt)).epsilon(1e-14));
  }

  SUBCASE("pendulum energy is conserved") {
    const MagneticSetup setup{0.7, g.vector(8), 1.0};
    const PhasePoint pt = ctx.sample_phase_point(5);
    const Trajectory traj = integrate_pendulum(ctx, pt, setup, 3.0, 1e-3, 10);
    const double e0 = traj.diagnostics.front().energy;
    double worst = 0.0;
    for (const auto& d : traj.diagnostics)
      worst = std::max(worst, std::abs(d.energy - e0));
    CHECK(worst / std::max(1.0, std::abs(e0)) < 1e-8);
  }
}

TEST_CASE("theta map") {
  const OrbitContext ctx = su3_regular_orbit();
  const auto& su3 = ctx.algebra();
  const double eps = 0.8;

  // the seed with p = 0 maps to the distinguished point eps a + i a
  PhasePoint seed_pt{ctx.seed(), AlgebraVector::Zero(8), std::nullopt};
  const ComplexAlgebraVector mu0 = theta_map(su3, seed_pt, eps);
  CHECK((mu0.re - eps * ctx.seed()).norm() < 1e-14);
  CHECK((mu0.im - ctx.seed()).norm() == 0.0);

  // injectivity probe over distinct samples
  std::vector<ComplexAlgebraVector> images;
  for (std::uint64_t s = 0; s < 100; ++s)
    images.push_back(theta_map(su3, ctx.sample_phase_point(200 + s), eps));
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = i + 1; j < images.size(); ++j)
      min_dist = std::min(min_dist, (images[i] - images[j]).norm());
  CHECK(min_dist > 1e-6);
}

TEST_CASE("argument-shift family A_c") {
  const OrbitContext ctx = su3_regular_orbit();
  auto su3 = ctx.algebra_ptr();
  GaussianStream g(89);
  const AlgebraVector c = g.vector(8);
  const double eps = 0.5;
  const auto grid = default_lambda_grid(su3->rank());
  CHECK(grid.size() == 4);
  const IntegralFamily fam = family_shift(su3, c, grid, eps);
  CHECK(fam.members.size() == 8);  // 2 invariants x 4 shifts

  SUBCASE("all members conserved along the magnetic geodesic flow") {
    const PhasePoint pt = ctx.sample_phase_point(31);
    const MagneticSetup setup = MagneticSetup::geodesic(eps, 8);
    const Trajectory traj = integrate_pendulum(ctx, pt, setup, 3.0, 1e-3, 10);
    CHECK(max_drift(family_drift(fam, traj, false)) < 1e-9);
  }

  SUBCASE("so(3): quadratic polynomial in the shift") {
    const OrbitContext s2 = so3_unit_orbit();
    auto so3 = s2.algebra_ptr();
    const AlgebraVector c3 = g.vector(3);
    const PhasePoint pt = s2.sample_phase_point(7);
    const AlgebraVector phi = momentum_map(*so3, pt, eps);
    // p_1(Phi + lambda c) = <Phi,Phi> + 2 lambda <Phi,c> + lambda^2 <c,c>
    for (double lam : {0.3, 0.9, 1.4}) {
      const IntegralFamily f1 = family_shift(so3, c3, {lam}, eps);
      const double v = f1.eval_at_phase(f1.members[0], pt);
      const double expect = so3->inner(phi, phi) + 2 * lam * so3->inner(phi, c3) +
                            lam * lam * so3->inner(c3, c3);
      CHECK(v == doctest::Approx(expect).epsilon(1e-11));
    }
  }

  SUBCASE("members are in involution w.r.t. the g_theta bracket") {
    GaussianStream gg(97);
    for (int trial = 0; trial < 5; ++trial) {
      const ComplexAlgebraVector mu = random_cvec(gg, 8);
      const Mat bm = pairwise_bracket_matrix(fam, mu, Exec::Serial);
      CHECK(bm.cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("noether: shift members commute with invariant functions") {
    const MagneticSetup setup{eps, AlgebraVector::Zero(8), 1.0};
    const IntegralFamily ham = hamiltonian_family(su3, setup);
    const IntegralFamily ba = family_semidirect(su3, AlgebraVector::Zero(8), grid, eps);
    for (std::uint64_t s = 0; s < 20; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(400 + s);
      const ComplexAlgebraVector mu = theta_map(*su3, pt, eps);
      for (const auto& mf : fam.members) {
        const ComplexAlgebraVector gf = gradient(mf, mu);
        for (const auto* other : {&ham, &ba})
          for (const auto& mg : other->members) {
            const ComplexAlgebraVector gh = gradient(mg, mu);
            CHECK(std::abs(su3->lie_poisson(PoissonKind::GTheta, mu, gf, gh)) < 1e-10);
          }
      }
    }
  }
}

TEST_CASE("semidirect family B") {
  const OrbitContext ctx = su3_regular_orbit();
  auto su3 = ctx.algebra_ptr();
  GaussianStream g(101);
  const double eps = 0.7;
  const AlgebraVector b = g.vector(8);
  const auto grid = default_lambda_grid(su3->rank());
  const IntegralFamily fam = family_semidirect(su3, b, grid, eps);
  CHECK(fam.members.size() == 16);  // 2 invariants x 4 shifts x re/im

  SUBCASE("conserved along the pendulum flow with the same b") {
    MagneticSetup setup{eps, b, 1.0};
    const PhasePoint pt = ctx.sample_phase_point(41);
    const Trajectory traj = integrate_pendulum(ctx, pt, setup, 3.0, 1e-3, 10);
    CHECK(max_drift(family_drift(fam, traj, false)) < 1e-8);
  }

  SUBCASE("lambda = 0 members are constant on the orbit") {
    const IntegralFamily f0 = family_semidirect(su3, b, {0.0}, eps);
    std::vector<double> v0;
    for (const auto& m : f0.members)
      v0.push_back(f0.eval_at_phase(m, ctx.sample_phase_point(600)));
    for (std::uint64_t s = 1; s < 10; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(600 + s);
      for (std::size_t k = 0; k < f0.members.size(); ++k)
        CHECK(f0.eval_at_phase(f0.members[k], pt) ==
              doctest::Approx(v0[k]).epsilon(1e-9));
    }
  }

  SUBCASE("b = 0 realizes the shifted Casimirs: G-invariant and conserved") {
    const IntegralFamily ba = family_semidirect(su3, AlgebraVector::Zero(8), grid, eps);
    GaussianStream gg(103);
    // G-invariance: simultaneous adjoint motion of (x, p) fixes the values
    for (std::uint64_t s = 0; s < 5; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(700 + s);
      const AlgebraVector xi = gg.vector(8);
      PhasePoint moved;
      moved.x = su3->group_adjoint(xi, 1.0, pt.x);
      moved.p = su3->group_adjoint(xi, 1.0, pt.p);
      for (const auto& m : ba.members)
        CHECK(ba.eval_at_phase(m, moved) ==
              doctest::Approx(ba.eval_at_phase(m, pt)).epsilon(1e-9));
    }
    // conserved along the magnetic geodesic flow (no potential)
    const PhasePoint pt = ctx.sample_phase_point(47);
    const Trajectory traj =
        integrate_pendulum(ctx, pt, MagneticSetup::geodesic(eps, 8), 3.0, 1e-3, 10);
    CHECK(max_drift(family_drift(ba, traj, false)) < 1e-8);
  }
}

TEST_CASE("s2 linear integral") {
  const OrbitContext ctx = so3_unit_orbit();
  auto so3 = ctx.algebra_ptr();
  GaussianStream g(107);
  const AlgebraVector b = g.vector(3);
  const double eps = 0.9;

  const IntegralFamily lin = s2_linear_integral(so3, b, eps);

  SUBCASE("conserved along the so(3) pendulum flow") {
    MagneticSetup setup{eps, b, 1.0};
    const PhasePoint pt = ctx.sample_phase_point(51);
    const Trajectory traj = integrate_pendulum(ctx, pt, setup, 5.0, 1e-3, 10);
    const Mat vals = evaluate_family_over_trajectory(lin, traj, false, Exec::Serial);
    double worst = 0.0;
    for (Eigen::Index s = 0; s < vals.cols(); ++s)
      worst = std::max(worst, std::abs(vals(0, s) - vals(0, 0)));
    CHECK(worst < 1e-10);
  }

  SUBCASE("eps = 0, b = e3: the classical angular momentum component") {
    AlgebraVector e3 = AlgebraVector::Zero(3);
    e3[2] = 1.0;
    const IntegralFamily f = s2_linear_integral(so3, e3, 0.0);
    const PhasePoint pt = ctx.sample_phase_point(53);
    const Eigen::Vector3d x = pt.x, p = pt.p;
    CHECK(f.eval_at_phase(f.members[0], pt) ==
          doctest::Approx(x.cross(p)[2]).epsilon(1e-12));
  }

  SUBCASE("commutes with the pendulum hamiltonian") {
    MagneticSetup setup{eps, b, 1.0};
    const IntegralFamily ham = hamiltonian_family(so3, setup);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(60 + s);
      const ComplexAlgebraVector mu = theta_map(*so3, pt, eps);
      const double v = so3->lie_poisson(PoissonKind::GTheta, mu,
                                        gradient(lin.members[0], mu),
                                        gradient(ham.members[0], mu));
      CHECK(std::abs(v) < 1e-12);
    }
  }

  CHECK_THROWS_AS(s2_linear_integral(LieAlgebraSpec::su(3), AlgebraVector::Zero(8), 0.0),
                  InputError);
}

TEST_CASE("gradients") {
  const OrbitContext ctx = su3_regular_orbit();
  auto su3 = ctx.algebra_ptr();
  GaussianStream g(109);

  SUBCASE("gradient of the kinetic term is xi itself") {
    const MagneticSetup setup{0.0, AlgebraVector::Zero(8), 1.0};
    const IntegralFamily ham = hamiltonian_family(su3, setup);
    const ComplexAlgebraVector mu = random_cvec(g, 8);
    const ComplexAlgebraVector grad = gradient(ham.members[0], mu);
    CHECK((grad.re - mu.re).norm() < 1e-13);
    CHECK(grad.im.norm() < 1e-13);
  }

  SUBCASE("gradient of <b, eta> sits at -b in the im slot") {
    const AlgebraVector b = g.vector(8);
    auto f = [&](const ComplexAlgebraVector& mu) { return su3->inner(b, mu.im); };
    const ComplexAlgebraVector mu = random_cvec(g, 8);
    const ComplexAlgebraVector grad = fd_gradient(*su3, f, mu);
    CHECK((grad.im + b).norm() < 1e-8 * (1 + b.norm()));
    CHECK(grad.re.norm() < 1e-8);

    // directional-derivative probe fixing the sign convention
    const ComplexAlgebraVector delta = random_cvec(g, 8);
    const double t = 1e-6;
    const double fd = (f(mu + delta * t) - f(mu - delta * t)) / (2 * t);
    const double pairing = su3->inner(grad.re, delta.re) - su3->inner(grad.im, delta.im);
    CHECK(fd == doctest::Approx(pairing).epsilon(1e-9));
  }

  SUBCASE("exact gradients match finite differences on family members") {
    const AlgebraVector b = g.vector(8);
    const IntegralFamily fam = family_semidirect(su3, b, {0.4, 1.3}, 0.6);
    for (int trial = 0; trial < 3; ++trial) {
      const ComplexAlgebraVector mu = random_cvec(g, 8);
      for (const auto& m : fam.members) {
        REQUIRE(m.exact_gradient);
        const ComplexAlgebraVector ge = gradient(m, mu);
        const ComplexAlgebraVector gf = fd_gradient(*su3, m.value, mu);
        CHECK((ge - gf).norm() < 1e-7 * (1 + ge.norm()));
      }
    }
  }
}

TEST_CASE("lax pair") {
  const OrbitContext ctx = su3_regular_orbit();
  auto su3 = ctx.algebra_ptr();
  GaussianStream g(113);
  const double eps = 0.7;
  const AlgebraVector b = g.vector(8);
  const MagneticSetup setup{eps, b, 1.0};
  const PhasePoint pt0 = ctx.sample_phase_point(71);

  SUBCASE("lambda = 0: the spectrum of i x is constant on the orbit") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const PhasePoint pt = ctx.sample_phase_point(900 + s);
      const Eigen::VectorXcd sp = lax_spectrum(*su3, pt, eps, b, 0.0);
      const Eigen::VectorXcd sp0 = lax_spectrum(*su3, pt0, eps, b, 0.0);
      CHECK(spectrum_distance(sp, sp0) < 1e-9);
    }
  }

  SUBCASE("isospectral drift along the flow") {
    const Trajectory traj = integrate_pendulum(ctx, pt0, setup, 3.0, 1e-3, 10);
    for (double lam : {0.3, 1.0, 2.5}) {
      const auto spectra =
          lax_spectra_over_trajectory(*su3, traj, false, eps, b, lam, Exec::Serial);
      double worst = 0.0;
      for (const auto& sp : spectra)
        worst = std::max(worst, spectrum_distance(sp, spectra.front()));
      CHECK(worst < 1e-8);
    }
  }

  SUBCASE("derivative identity dL/dt = [A, L]") {
    // unit-scale data keeps the finite-difference truncation term small
    const AlgebraVector a1 = ctx.seed() / su3->norm(ctx.seed());
    const OrbitContext ctx1(su3, a1);
    PhasePoint pt = ctx1.sample_phase_point(71);
    pt.p /= su3->norm(pt.p);
    const AlgebraVector b1 = b / su3->norm(b);
    const MagneticSetup setup1{eps, b1, 1.0};

    const double h = 1e-3;
    const Trajectory traj = integrate_pendulum(ctx1, pt, setup1, 0.5, h, 0);
    for (double lam : {0.3, 1.1, 2.5})
      CHECK(lax_derivative_residual(*su3, traj, false, eps, b1, lam) < 1e-6);

    // second-order stencil for comparison: truncation-limited but still small
    double worst = 0.0;
    for (std::size_t s = 1; s + 1 < traj.size(); s += 50) {
      auto lax_at = [&](std::size_t k) {
        auto [x, p] = unpack_phase(traj.states[k]);
        return lax_pair(*su3, PhasePoint{x, p, std::nullopt}, eps, b1, 1.1);
      };
      const CMat ld = (lax_at(s + 1).L - lax_at(s - 1).L) / (2 * h);
      const LaxPair lp = lax_at(s);
      const CMat comm = lp.A * lp.L - lp.L * lp.A;
      worst = std::max(worst, (ld - comm).norm());
    }
    CHECK(worst < 1e-4);
  }
}
