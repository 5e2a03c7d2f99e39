#include "magflow/integrals.hpp"

#include <algorithm>
#include <cmath>

#include "magflow/kernels.hpp"

namespace magflow {

AlgebraVector momentum_map(const LieAlgebraSpec& spec, const PhasePoint& pt,
                           double epsilon) {
  return spec.bracket(pt.x, pt.p) + epsilon * pt.x;
}

double normal_hamiltonian(const LieAlgebraSpec& spec, const PhasePoint& pt) {
  const AlgebraVector m = spec.bracket(pt.x, pt.p);
  return 0.5 * spec.inner(m, m);
}

double pendulum_hamiltonian(const LieAlgebraSpec& spec, const PhasePoint& pt,
                            const MagneticSetup& setup) {
  double h = normal_hamiltonian(spec, pt);
  if (setup.b.size() > 0 && setup.b.squaredNorm() != 0.0)
    h -= spec.inner(setup.effective_b(), pt.x);
  return h;
}

ComplexAlgebraVector theta_map(const LieAlgebraSpec& spec, const PhasePoint& pt,
                               double epsilon) {
  return {momentum_map(spec, pt, epsilon), pt.x};
}

std::vector<double> default_lambda_grid(int rank) {
  const int n = rank + 2;
  std::vector<double> grid(n);
  const double lo = 0.2, hi = 2.0;
  for (int k = 0; k < n; ++k) {
    const double c = std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * n));
    grid[k] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * c;
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

namespace {

double take_part(Complex v, InvariantPart part) {
  return part == InvariantPart::Re ? v.real() : v.imag();
}

/// Member whose value is part(p_j(alpha mat(xi) + beta mat(eta) + shift)).
/// The differentials of the char-poly coefficients give the exact gradient.
Member matrix_invariant_member(std::shared_ptr<const LieAlgebraSpec> spec,
                               int j, Complex alpha, Complex beta, CMat shift,
                               InvariantPart part) {
  Member m;
  m.invariant_index = j;
  m.part = part;
  m.exact_gradient = true;

  auto arg = [spec, alpha, beta, shift](const ComplexAlgebraVector& mu) {
    CMat a = shift;
    if (alpha != Complex(0, 0)) a += alpha * spec->matrix_of(mu.re);
    if (beta != Complex(0, 0)) a += beta * spec->matrix_of(mu.im);
    return a;
  };

  m.value = [spec, arg, j, part](const ComplexAlgebraVector& mu) {
    return take_part(spec->invariant_values(arg(mu))[j - 1], part);
  };
  m.gradient = [spec, arg, j, alpha, beta, part](const ComplexAlgebraVector& mu) {
    Eigen::VectorXcd values;
    std::vector<CMat> grads;
    spec->invariant_values_and_gradients(arg(mu), values, grads);
    const CMat& dmat = grads[j - 1];
    const int d = spec->dim();
    AlgebraVector dxi(d), deta(d);
    for (int a = 0; a < d; ++a) {
      const Complex tr = (dmat * spec->basis()[a]).trace();
      dxi[a] = take_part(alpha * tr, part);
      deta[a] = take_part(beta * tr, part);
    }
    return ComplexAlgebraVector{spec->metric_gradient(dxi),
                                AlgebraVector(-spec->metric_gradient(deta))};
  };
  return m;
}

std::string part_tag(InvariantPart p) {
  return p == InvariantPart::Re ? "re" : "im";
}

} // namespace

IntegralFamily family_shift(std::shared_ptr<const LieAlgebraSpec> spec,
                            const AlgebraVector& c,
                            const std::vector<double>& lambda_grid,
                            double epsilon) {
  if (c.size() != spec->dim()) throw InputError("family_shift: c dimension mismatch");
  if (c.norm() == 0.0) throw InputError("family_shift: c must be nonzero");
  IntegralFamily fam;
  fam.algebra = spec;
  fam.kind = FamilyKind::ShiftAc;
  fam.epsilon = epsilon;
  fam.lambda_grid = lambda_grid;
  fam.direction = c;
  const CMat cmat = spec->matrix_of(c);
  for (const auto& inv : spec->invariants()) {
    for (double lam : lambda_grid) {
      Member m = matrix_invariant_member(spec, inv.index, Complex(1, 0),
                                         Complex(0, 0), lam * cmat, inv.real_part);
      m.kind = FamilyKind::ShiftAc;
      m.lambda = lam;
      m.label = "A_c[j=" + std::to_string(inv.index) + ",lambda=" +
                std::to_string(lam) + "," + part_tag(inv.real_part) + "]";
      fam.members.push_back(std::move(m));
    }
  }
  return fam;
}

IntegralFamily family_semidirect(std::shared_ptr<const LieAlgebraSpec> spec,
                                 const AlgebraVector& b,
                                 const std::vector<double>& lambda_grid,
                                 double epsilon) {
  if (lambda_grid.empty())
    throw InputError("family_semidirect: empty lambda grid");
  if (b.size() != spec->dim())
    throw InputError("family_semidirect: b dimension mismatch");
  IntegralFamily fam;
  fam.algebra = spec;
  fam.kind = FamilyKind::SemidirectB;
  fam.epsilon = epsilon;
  fam.lambda_grid = lambda_grid;
  fam.direction = b;
  const Complex I(0, 1);
  const CMat bmat = spec->matrix_of(b);
  for (const auto& inv : spec->invariants()) {
    for (double lam : lambda_grid) {
      for (InvariantPart part : {InvariantPart::Re, InvariantPart::Im}) {
        Member m = matrix_invariant_member(spec, inv.index, Complex(lam, 0), I,
                                           CMat(I * lam * lam * bmat), part);
        m.kind = FamilyKind::SemidirectB;
        m.lambda = lam;
        m.label = "B[j=" + std::to_string(inv.index) + ",lambda=" +
                  std::to_string(lam) + "," + part_tag(part) + "]";
        fam.members.push_back(std::move(m));
      }
    }
  }
  return fam;
}

IntegralFamily momentum_components(std::shared_ptr<const LieAlgebraSpec> spec,
                                   double epsilon) {
  IntegralFamily fam;
  fam.algebra = spec;
  fam.kind = FamilyKind::MomentumComponents;
  fam.epsilon = epsilon;
  const int d = spec->dim();
  for (int a = 0; a < d; ++a) {
    Member m;
    m.kind = FamilyKind::MomentumComponents;
    m.label = "Phi[" + std::to_string(a) + "]";
    m.exact_gradient = true;
    m.value = [a](const ComplexAlgebraVector& mu) { return mu.re[a]; };
    m.gradient = [spec, a, d](const ComplexAlgebraVector&) {
      AlgebraVector partial = AlgebraVector::Zero(d);
      partial[a] = 1.0;
      return ComplexAlgebraVector{spec->metric_gradient(partial),
                                  AlgebraVector::Zero(d)};
    };
    fam.members.push_back(std::move(m));
  }
  return fam;
}

IntegralFamily hamiltonian_family(std::shared_ptr<const LieAlgebraSpec> spec,
                                  const MagneticSetup& setup) {
  IntegralFamily fam;
  fam.algebra = spec;
  fam.kind = FamilyKind::Hamiltonian;
  fam.epsilon = setup.epsilon;
  fam.direction = setup.effective_b();
  const double eps = setup.epsilon;
  const AlgebraVector beff = setup.effective_b();
  Member m;
  m.kind = FamilyKind::Hamiltonian;
  m.label = "H";
  m.exact_gradient = true;
  // in the Theta chart: H = 1/2 <xi - eps eta, xi - eps eta> - <b, eta>
  m.value = [spec, eps, beff](const ComplexAlgebraVector& mu) {
    const AlgebraVector m0 = mu.re - eps * mu.im;
    return 0.5 * spec->inner(m0, m0) - spec->inner(beff, mu.im);
  };
  m.gradient = [spec, eps, beff](const ComplexAlgebraVector& mu) {
    const AlgebraVector m0 = mu.re - eps * mu.im;
    return ComplexAlgebraVector{m0, AlgebraVector(-(-eps * m0 - beff))};
  };
  fam.members.push_back(std::move(m));
  return fam;
}

IntegralFamily s2_linear_integral(std::shared_ptr<const LieAlgebraSpec> spec,
                                  const AlgebraVector& b, double epsilon) {
  if (spec->name() != "so(3)")
    throw InputError("s2_linear_integral: only available on so(3), got " + spec->name());
  if (b.size() != spec->dim())
    throw InputError("s2_linear_integral: b dimension mismatch");
  IntegralFamily fam;
  fam.algebra = spec;
  fam.kind = FamilyKind::S2Linear;
  fam.epsilon = epsilon;
  fam.direction = b;
  Member m;
  m.kind = FamilyKind::S2Linear;
  m.label = "f=<b,Phi_eps>";
  m.exact_gradient = true;
  m.value = [spec, b](const ComplexAlgebraVector& mu) { return spec->inner(b, mu.re); };
  m.gradient = [spec, b](const ComplexAlgebraVector&) {
    return ComplexAlgebraVector{b, AlgebraVector::Zero(b.size())};
  };
  fam.members.push_back(std::move(m));
  return fam;
}

IntegralFamily invariant_catalog(std::shared_ptr<const LieAlgebraSpec> spec,
                                 const std::vector<double>& mu_grid,
                                 double epsilon) {
  IntegralFamily fam;
  fam.algebra = spec;
  fam.kind = FamilyKind::InvariantCatalog;
  fam.epsilon = epsilon;
  fam.lambda_grid = mu_grid;
  for (const auto& inv : spec->invariants()) {
    for (double mu : mu_grid) {
      Member m;
      m.kind = FamilyKind::InvariantCatalog;
      m.invariant_index = inv.index;
      m.lambda = mu;
      m.part = inv.real_part;
      m.exact_gradient = false;
      m.label = "inv[j=" + std::to_string(inv.index) + ",mu=" + std::to_string(mu) +
                "," + part_tag(inv.real_part) + "]";
      const int j = inv.index;
      const InvariantPart part = inv.real_part;
      // recover p from (xi, eta) = (Phi_eps, x), then evaluate p_j(p + mu x)
      m.value = [spec, j, mu, part, epsilon](const ComplexAlgebraVector& z) {
        const AlgebraVector& eta = z.im;
        AlgebraVector rhs = z.re - epsilon * eta;
        const SubspaceBasis ann = ann_basis(*spec, eta);
        rhs = project(*spec, rhs, ann.vectors, /*onto_complement=*/true);
        Eigen::CompleteOrthogonalDecomposition<Mat> cod(spec->ad_operator(eta));
        AlgebraVector p = cod.solve(rhs);
        p = project(*spec, p, ann.vectors, /*onto_complement=*/true);
        const Complex v = spec->invariant_values(spec->matrix_of(
            AlgebraVector(p + mu * eta)))[j - 1];
        return take_part(v, part);
      };
      auto value_copy = m.value;
      m.gradient = [spec, value_copy](const ComplexAlgebraVector& z) {
        return fd_gradient(*spec, value_copy, z);
      };
      fam.members.push_back(std::move(m));
    }
  }
  return fam;
}

IntegralFamily merge_families(const IntegralFamily& a, const IntegralFamily& b) {
  if (a.algebra != b.algebra)
    throw InputError("merge_families: different algebras");
  if (a.epsilon != b.epsilon)
    throw InputError("merge_families: different epsilon");
  IntegralFamily out = a;
  out.members.insert(out.members.end(), b.members.begin(), b.members.end());
  return out;
}

ComplexAlgebraVector fd_gradient(
    const LieAlgebraSpec& spec,
    const std::function<double(const ComplexAlgebraVector&)>& f,
    const ComplexAlgebraVector& mu, double step) {
  const int d = spec.dim();
  auto central = [&](double h) {
    Eigen::VectorXd g(2 * d);
    ComplexAlgebraVector plus = mu, minus = mu;
    for (int a = 0; a < 2 * d; ++a) {
      double& pref = a < d ? plus.re[a] : plus.im[a - d];
      double& mref = a < d ? minus.re[a] : minus.im[a - d];
      const double keep_p = pref, keep_m = mref;
      pref += h;
      mref -= h;
      g[a] = (f(plus) - f(minus)) / (2.0 * h);
      pref = keep_p;
      mref = keep_m;
    }
    return g;
  };
  const Eigen::VectorXd g = (4.0 * central(step / 2) - central(step)) / 3.0;
  return {spec.metric_gradient(g.head(d)),
          AlgebraVector(-spec.metric_gradient(g.tail(d)))};
}

ComplexAlgebraVector gradient(const Member& member, const ComplexAlgebraVector& mu) {
  return member.gradient(mu);
}

// --- Lax pair -------------------------------------------------------------------

LaxPair lax_pair_at(const LieAlgebraSpec& spec, const ComplexAlgebraVector& mu,
                    const AlgebraVector& b, double lambda) {
  const Complex I(0, 1);
  LaxPair lp;
  const CMat phi = spec.matrix_of(mu.re);
  const CMat xmat = spec.matrix_of(mu.im);
  const CMat bmat = spec.matrix_of(b);
  lp.L = lambda * phi + I * (xmat + lambda * lambda * bmat);
  lp.A = phi + I * lambda * bmat;
  return lp;
}

LaxPair lax_pair(const LieAlgebraSpec& spec, const PhasePoint& pt, double epsilon,
                 const AlgebraVector& b, double lambda) {
  return lax_pair_at(spec, theta_map(spec, pt, epsilon), b, lambda);
}

Eigen::VectorXcd lax_spectrum_at(const LieAlgebraSpec& spec,
                                 const ComplexAlgebraVector& mu,
                                 const AlgebraVector& b, double lambda) {
  const LaxPair lp = lax_pair_at(spec, mu, b, lambda);
  Eigen::ComplexEigenSolver<CMat> es(lp.L, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericError("lax_spectrum: eigenvalue solver did not converge");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<Complex> v(ev.data(), ev.data() + ev.size());
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = v[i];
  return ev;
}

Eigen::VectorXcd lax_spectrum(const LieAlgebraSpec& spec, const PhasePoint& pt,
                              double epsilon, const AlgebraVector& b,
                              double lambda) {
  return lax_spectrum_at(spec, theta_map(spec, pt, epsilon), b, lambda);
}

double spectrum_distance(const Eigen::VectorXcd& s1, const Eigen::VectorXcd& s2) {
  if (s1.size() != s2.size())
    throw InputError("spectrum_distance: size mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s1.size(); ++i)
    worst = std::max(worst, std::abs(s1[i] - s2[i]));
  return worst;
}

double lax_derivative_residual(const LieAlgebraSpec& spec, const Trajectory& traj,
                               bool states_are_theta, double epsilon,
                               const AlgebraVector& b, double lambda,
                               std::size_t stride) {
  if (traj.size() < 5)
    throw InputError("lax_derivative_residual: trajectory too short");
  const double h = traj.times[1] - traj.times[0];
  auto lax_at = [&](std::size_t k) {
    ComplexAlgebraVector mu;
    if (states_are_theta) {
      mu = ComplexAlgebraVector::from_flat(traj.states[k]);
    } else {
      auto [x, p] = unpack_phase(traj.states[k]);
      mu = theta_map(spec, PhasePoint{std::move(x), std::move(p), std::nullopt},
                     epsilon);
    }
    return lax_pair_at(spec, mu, b, lambda);
  };
  double worst = 0.0;
  for (std::size_t s = 2; s + 2 < traj.size(); s += stride) {
    const CMat ld = (-lax_at(s + 2).L + 8.0 * lax_at(s + 1).L -
                     8.0 * lax_at(s - 1).L + lax_at(s - 2).L) /
                    (12.0 * h);
    const LaxPair lp = lax_at(s);
    const CMat comm = lp.A * lp.L - lp.L * lp.A;
    worst = std::max(worst, (ld - comm).norm());
  }
  return worst;
}

std::vector<MemberDrift> family_drift(const IntegralFamily& family,
                                      const Trajectory& traj,
                                      bool states_are_theta) {
  const Mat values = evaluate_family_over_trajectory(family, traj, states_are_theta,
                                                     default_exec());
  std::vector<MemberDrift> out;
  out.reserve(family.members.size());
  for (std::size_t m = 0; m < family.members.size(); ++m) {
    const Member& mem = family.members[m];
    MemberDrift d;
    d.label = mem.label;
    d.kind = mem.kind;
    d.invariant_index = mem.invariant_index;
    d.lambda = mem.lambda;
    d.part = mem.part;
    d.value_t0 = values(m, 0);
    for (Eigen::Index s = 0; s < values.cols(); ++s)
      d.max_drift_abs = std::max(d.max_drift_abs,
                                 std::abs(values(m, s) - d.value_t0));
    d.max_drift_rel = d.max_drift_abs / std::max(std::abs(d.value_t0), 1e-8);
    out.push_back(std::move(d));
  }
  return out;
}

} // namespace magflow
