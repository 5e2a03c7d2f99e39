#include "magflow/kernels.hpp"

#include <atomic>
#include <cmath>

#include <omp.h>

namespace magflow {

namespace {
Exec g_default_exec = Exec::OpenMP;
}

Exec default_exec() { return g_default_exec; }
void set_default_exec(Exec e) { g_default_exec = e; }

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

namespace {

/// Runs body(i) for i in [0, n), serially or under OpenMP. The body is the
/// same callable either way, which keeps the two paths bit-identical.
template <class Body>
void for_each_index(std::size_t n, Exec exec, const Body& body) {
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
      body(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

ComplexAlgebraVector state_to_mu(const LieAlgebraSpec& spec,
                                 const Eigen::VectorXd& state,
                                 bool states_are_theta, double epsilon) {
  if (states_are_theta) return ComplexAlgebraVector::from_flat(state);
  auto [x, p] = unpack_phase(state);
  PhasePoint pt{std::move(x), std::move(p), std::nullopt};
  return theta_map(spec, pt, epsilon);
}

} // namespace

std::vector<ComplexAlgebraVector> theta_images(const LieAlgebraSpec& spec,
                                               const Trajectory& traj,
                                               bool states_are_theta,
                                               double epsilon, Exec exec) {
  std::vector<ComplexAlgebraVector> mus(traj.size());
  for_each_index(traj.size(), exec, [&](std::size_t s) {
    mus[s] = state_to_mu(spec, traj.states[s], states_are_theta, epsilon);
  });
  return mus;
}

Mat evaluate_family_over_mus(const IntegralFamily& family,
                             const std::vector<ComplexAlgebraVector>& mus,
                             Exec exec) {
  const std::size_t nm = family.members.size();
  const std::size_t ns = mus.size();
  Mat values(nm, ns);
  for_each_index(ns, exec, [&](std::size_t s) {
    for (std::size_t m = 0; m < nm; ++m)
      values(m, s) = family.members[m].value(mus[s]);
  });
  return values;
}

Mat evaluate_family_over_trajectory(const IntegralFamily& family,
                                    const Trajectory& traj,
                                    bool states_are_theta, Exec exec) {
  const std::size_t nm = family.members.size();
  const std::size_t ns = traj.size();
  const LieAlgebraSpec& spec = *family.algebra;
  Mat values(nm, ns);
  for_each_index(ns, exec, [&](std::size_t s) {
    const ComplexAlgebraVector mu =
        state_to_mu(spec, traj.states[s], states_are_theta, family.epsilon);
    for (std::size_t m = 0; m < nm; ++m)
      values(m, s) = family.members[m].value(mu);
  });
  return values;
}

Mat pairwise_bracket_matrix(const IntegralFamily& family,
                            const ComplexAlgebraVector& mu, Exec exec) {
  const std::size_t nm = family.members.size();
  const LieAlgebraSpec& spec = *family.algebra;

  std::vector<ComplexAlgebraVector> grads(nm);
  for_each_index(nm, exec, [&](std::size_t m) {
    grads[m] = family.members[m].gradient(mu);
  });

  // flatten the strict upper triangle into one index space
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(nm * (nm - 1) / 2);
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = i + 1; j < nm; ++j) pairs.emplace_back(i, j);

  Mat bm = Mat::Zero(nm, nm);
  for_each_index(pairs.size(), exec, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const double v = spec.lie_poisson(PoissonKind::GTheta, mu, grads[i], grads[j]);
    bm(i, j) = v;
    bm(j, i) = -v;
  });
  return bm;
}

double max_pairwise_bracket(const IntegralFamily& family,
                            const std::vector<ComplexAlgebraVector>& mus,
                            Exec exec) {
  std::vector<double> per_point(mus.size(), 0.0);
  for_each_index(mus.size(), exec, [&](std::size_t s) {
    const Mat bm = pairwise_bracket_matrix(family, mus[s], Exec::Serial);
    per_point[s] = bm.cwiseAbs().maxCoeff();
  });
  double worst = 0.0;
  for (double v : per_point) worst = std::max(worst, v);
  return worst;
}

std::vector<Eigen::VectorXcd> lax_spectra_over_trajectory(
    const LieAlgebraSpec& spec, const Trajectory& traj, bool states_are_theta,
    double epsilon, const AlgebraVector& b, double lambda, Exec exec) {
  std::vector<Eigen::VectorXcd> spectra(traj.size());
  for_each_index(traj.size(), exec, [&](std::size_t s) {
    const ComplexAlgebraVector mu =
        state_to_mu(spec, traj.states[s], states_are_theta, epsilon);
    spectra[s] = lax_spectrum_at(spec, mu, b, lambda);
  });
  return spectra;
}

} // namespace magflow
