#include "magflow/orbit.hpp"

#include <sstream>

#include "magflow/rng.hpp"

namespace magflow {

SubspaceBasis ann_basis(const LieAlgebraSpec& spec, const AlgebraVector& x,
                        double tol) {
  if (x.size() != spec.dim()) throw InputError("ann_basis: dimension mismatch");
  if (x.norm() == 0.0) throw InputError("ann_basis: x must be nonzero");

  const Mat ad = spec.ad_operator(x);
  Eigen::JacobiSVD<Mat> svd(ad, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = tol * sv[0];

  int kernel_dim = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] <= cut) ++kernel_dim;

  SubspaceBasis out;
  const int first = static_cast<int>(sv.size()) - kernel_dim;
  if (first > 0 && kernel_dim > 0 && sv[first] > 0)
    out.singular_gap = sv[first - 1] / sv[first];
  else if (kernel_dim == 0)
    out.singular_gap = std::numeric_limits<double>::infinity();
  else if (first > 0)
    out.singular_gap = std::numeric_limits<double>::infinity();
  // a singular value within a decade of the cut makes the dimension fragile
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cut / 10.0 && sv[i] < cut * 10.0) out.ambiguous = true;
  if (out.singular_gap < 10.0) out.ambiguous = true;

  // kernel vectors, re-orthonormalized in the invariant inner product
  std::vector<AlgebraVector> raw;
  for (int i = first; i < sv.size(); ++i) raw.push_back(svd.matrixV().col(i));
  for (auto& v : raw) {
    for (const auto& u : out.vectors) v -= spec.inner(u, v) * u;
    const double n = spec.norm(v);
    if (n > 1e-12) out.vectors.push_back(v / n);
  }
  return out;
}

AlgebraVector project(const LieAlgebraSpec& spec, const AlgebraVector& y,
                      const std::vector<AlgebraVector>& basis,
                      bool onto_complement) {
  AlgebraVector span = AlgebraVector::Zero(y.size());
  for (const auto& u : basis) span += spec.inner(u, y) * u;
  return onto_complement ? AlgebraVector(y - span) : span;
}

OrbitContext::OrbitContext(std::shared_ptr<const LieAlgebraSpec> algebra,
                           AlgebraVector seed, double kernel_tol)
    : algebra_(std::move(algebra)), seed_(std::move(seed)),
      kernel_tol_(kernel_tol) {
  if (!algebra_) throw InputError("OrbitContext: null algebra");
  if (seed_.size() != algebra_->dim())
    throw InputError("OrbitContext: seed dimension mismatch");
  if (seed_.norm() == 0.0) throw InputError("OrbitContext: seed must be nonzero");
  ann_a_ = ann_basis(*algebra_, seed_, kernel_tol_);
  orbit_dim_ = algebra_->dim() - ann_a_.dim();
  if (orbit_dim_ % 2 != 0)
    throw NumericError("OrbitContext: odd orbit dimension, kernel detection is off");
  seed_invariants_ = algebra_->invariant_values(algebra_->matrix_of(seed_));
}

AlgebraVector OrbitContext::random_orbit_point(std::uint64_t rng_seed) const {
  GaussianStream g(rng_seed);
  const AlgebraVector xi = g.vector(algebra_->dim());
  return algebra_->group_adjoint(xi, 1.0, seed_);
}

PhasePoint OrbitContext::random_orbit_point_with_witness(
    std::uint64_t rng_seed) const {
  GaussianStream g(rng_seed);
  const AlgebraVector xi = g.vector(algebra_->dim());
  PhasePoint pt;
  pt.x = algebra_->group_adjoint(xi, 1.0, seed_);
  pt.p = AlgebraVector::Zero(algebra_->dim());
  pt.witness_log = xi;
  return pt;
}

AlgebraVector OrbitContext::cotangent_project(const AlgebraVector& x,
                                              const AlgebraVector& raw) const {
  const SubspaceBasis ann = ann_basis(*algebra_, x, kernel_tol_);
  return project(*algebra_, raw, ann.vectors, /*onto_complement=*/true);
}

AlgebraVector OrbitContext::cotangent_sample(const AlgebraVector& x,
                                             std::uint64_t rng_seed) const {
  GaussianStream g(rng_seed);
  return cotangent_project(x, g.vector(algebra_->dim()));
}

PhasePoint OrbitContext::sample_phase_point(std::uint64_t rng_seed) const {
  PhasePoint pt = random_orbit_point_with_witness(rng_seed);
  pt.p = cotangent_sample(pt.x, rng_seed + 1);
  return pt;
}

AlgebraVector OrbitContext::recover_p(const AlgebraVector& x,
                                      const AlgebraVector& m,
                                      double tol) const {
  const SubspaceBasis ann = ann_basis(*algebra_, x, kernel_tol_);
  const AlgebraVector stray = project(*algebra_, m, ann.vectors);
  const double mnorm = algebra_->norm(m);
  if (algebra_->norm(stray) > tol * std::max(1.0, mnorm)) {
    std::ostringstream os;
    os << "recover_p: momentum has an ann(x) component of size "
       << algebra_->norm(stray) << " (|m| = " << mnorm << ")";
    throw NumericError(os.str());
  }
  const Mat ad = algebra_->ad_operator(x);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(ad);
  AlgebraVector p = cod.solve(m);
  // strip any kernel component so p lands in ann(x)^perp
  p = project(*algebra_, p, ann.vectors, /*onto_complement=*/true);
  return p;
}

double OrbitContext::membership_residual(const AlgebraVector& x) const {
  return algebra_->invariant_residual(x, seed_invariants_);
}

double OrbitContext::cotangent_residual(const AlgebraVector& x,
                                        const AlgebraVector& p) const {
  const SubspaceBasis ann = ann_basis(*algebra_, x, kernel_tol_);
  const AlgebraVector stray = project(*algebra_, p, ann.vectors);
  return algebra_->norm(stray) / (1.0 + algebra_->norm(p));
}

void OrbitContext::project_to_bundle(AlgebraVector& x, AlgebraVector& p) const {
  const auto& invs = algebra_->invariants();
  const int r = static_cast<int>(invs.size());

  // Newton correction along ann(x): the invariant differentials vanish on
  // the orbit tangent ann(x)^perp, so that is where they have leverage.
  SubspaceBasis ann = ann_basis(*algebra_, x, kernel_tol_);
  const int k = ann.dim();
  Eigen::VectorXcd values;
  std::vector<CMat> grads;
  algebra_->invariant_values_and_gradients(algebra_->matrix_of(x), values, grads);

  Eigen::VectorXd res(2 * r);
  Mat jac(2 * r, k);
  for (int j = 0; j < r; ++j) {
    const Complex diff = values[j] - seed_invariants_[j];
    res[2 * j] = diff.real();
    res[2 * j + 1] = diff.imag();
    for (int c = 0; c < k; ++c) {
      const Complex dp = (grads[j] * algebra_->matrix_of(ann.vectors[c])).trace();
      jac(2 * j, c) = dp.real();
      jac(2 * j + 1, c) = dp.imag();
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(jac);
  const Eigen::VectorXd coeff = cod.solve(res);
  for (int c = 0; c < k; ++c) x -= coeff[c] * ann.vectors[c];

  // cotangent condition at the corrected base point
  ann = ann_basis(*algebra_, x, kernel_tol_);
  p = project(*algebra_, p, ann.vectors, /*onto_complement=*/true);
}

} // namespace magflow
