#include "magflow/poisson.hpp"

#include <algorithm>
#include <map>

#include "magflow/kernels.hpp"

namespace magflow {

RankResult rank_of(const Mat& m, double tol, double scale_floor) {
  RankResult out;
  if (m.rows() == 0 || m.cols() == 0) return out;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  const double scale = std::max(sv[0], scale_floor);
  if (scale == 0.0) return out;
  const double cut = tol * scale;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cut) ++rank;
  out.rank = rank;
  if (rank == 0)
    out.gap = scale / std::max(sv[0], 1e-300);
  else if (rank < sv.size())
    out.gap = sv[rank - 1] / std::max(sv[rank], 1e-300);
  out.gap = std::min(out.gap, 1e300);  // keep JSON-representable
  out.ambiguous = out.gap < 10.0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > cut / 10.0 && sv[i] < cut * 10.0) out.ambiguous = true;
  return out;
}

PencilForm pencil_form(const LieAlgebraSpec& spec, const ComplexAlgebraVector& mu,
                       double lambda1, double lambda2, const AlgebraVector& b) {
  const int d = spec.dim();
  if (mu.dim() != d) throw InputError("pencil_form: mu dimension mismatch");
  if (b.size() != d) throw InputError("pencil_form: b dimension mismatch");

  // gradients of the 2d coordinate functions, in the grad_xi - i grad_eta
  // convention; slot a < d is the xi_a coordinate, slot d + a the eta_a one
  std::vector<ComplexAlgebraVector> slots(2 * d);
  for (int a = 0; a < d; ++a) {
    AlgebraVector unit = AlgebraVector::Zero(d);
    unit[a] = 1.0;
    const AlgebraVector g = spec.metric_gradient(unit);
    slots[a] = {g, AlgebraVector::Zero(d)};
    slots[d + a] = {AlgebraVector::Zero(d), AlgebraVector(-g)};
  }

  PencilForm form;
  form.mu = mu;
  form.lambda1 = lambda1;
  form.lambda2 = lambda2;
  form.b = b;
  form.matrix = Mat::Zero(2 * d, 2 * d);
  for (int r = 0; r < 2 * d; ++r) {
    for (int c = r + 1; c < 2 * d; ++c) {
      double v = 0.0;
      if (lambda1 != 0.0)
        v += lambda1 * spec.lie_poisson(PoissonKind::GTheta, mu, slots[r], slots[c]);
      if (lambda2 != 0.0)
        v += lambda2 * (spec.lie_poisson(PoissonKind::G0, mu, slots[r], slots[c]) +
                        spec.lie_poisson(PoissonKind::IB, mu, slots[r], slots[c], &b));
      form.matrix(r, c) = v;
      form.matrix(c, r) = -v;
    }
  }
  return form;
}

RankResult form_rank(const PencilForm& form, double tol) {
  return rank_of(form.matrix, tol);
}

Mat form_kernel(const PencilForm& form, double tol) {
  Eigen::JacobiSVD<Mat> svd(form.matrix, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = tol * sv[0];
  int rank = 0;
  while (rank < sv.size() && sv[rank] > cut) ++rank;
  return svd.matrixV().rightCols(sv.size() - rank);
}

A1Scan condition_A1(const LieAlgebraSpec& spec, const AlgebraVector& a,
                    const AlgebraVector& b, double epsilon,
                    const std::vector<double>& lambda_grid) {
  A1Scan scan;
  scan.expected_rank = 2 * spec.dim() - 2 * spec.rank();
  const ComplexAlgebraVector mu{epsilon * a, a};

  std::vector<std::pair<double, double>> pairs = {{-1.0, 1.0}, {0.0, 1.0}};
  for (double lam : lambda_grid) pairs.emplace_back(1.0, lam);

  for (auto [l1, l2] : pairs) {
    const PencilForm form = pencil_form(spec, mu, l1, l2, b);
    const RankResult r = form_rank(form);
    scan.samples.push_back({l1, l2, static_cast<double>(r.rank)});
    scan.min_gap = std::min(scan.min_gap, r.gap);
    if (r.rank != scan.expected_rank) scan.ok = false;
  }
  return scan;
}

A2Result condition_A2(const LieAlgebraSpec& spec, const AlgebraVector& a,
                      const AlgebraVector& b, double epsilon) {
  A2Result out;
  out.expected = 2 * spec.rank();
  const ComplexAlgebraVector mu{epsilon * a, a};

  const PencilForm l10 = pencil_form(spec, mu, 1.0, 0.0, b);
  const RankResult r10 = rank_of(l10.matrix);
  out.gap_kernel = r10.gap;
  const Mat kernel = form_kernel(l10);
  out.dim_kernel = static_cast<int>(kernel.cols());

  const PencilForm l01 = pencil_form(spec, mu, 0.0, 1.0, b);
  const Mat restricted = kernel.transpose() * l01.matrix * kernel;
  // classify near-zero restrictions against the ambient form's scale
  const double ambient = l01.matrix.norm();
  const RankResult rr = rank_of(restricted, kRankTol, ambient);
  out.gap_restricted = rr.gap;
  out.dim_K = out.dim_kernel - rr.rank;
  out.ok = (out.dim_K == out.expected);
  return out;
}

double v_pencil_bracket(const LieAlgebraSpec& spec, const AlgebraVector& eta,
                        double epsilon, const AlgebraVector& a,
                        const AlgebraVector& gf, const AlgebraVector& gg) {
  return -spec.inner(eta + epsilon * a, spec.bracket(gf, gg));
}

AlgebraVector member_v_gradient(const IntegralFamily& family, const Member& member,
                                const OrbitContext& ctx, const AlgebraVector& eta) {
  const LieAlgebraSpec& spec = ctx.algebra();
  const AlgebraVector& a = ctx.seed();
  // The fiber over the seed is parametrized by the momentum eta = [a, p],
  // under which the Theta_eps chart reads (eta + eps a, a). The restricted
  // gradient is then the xi-slot gradient, projected onto ann(a)^perp.
  const ComplexAlgebraVector mu{eta + family.epsilon * a, a};
  const ComplexAlgebraVector grad = member.gradient(mu);
  return project(spec, grad.re, ctx.seed_ann_basis().vectors,
                 /*onto_complement=*/true);
}

// --- ddim / dind --------------------------------------------------------------------

DdimDind ddim_dind_at(const IntegralFamily& family, const ComplexAlgebraVector& mu) {
  const LieAlgebraSpec& spec = *family.algebra;
  const int d = spec.dim();
  const std::size_t nm = family.members.size();

  // tangent space of the coadjoint g_theta orbit through mu: directions
  // ([xi,z] - [eta,t]) + i [eta,z] over generators z + i t
  Mat tangent(2 * d, 2 * d);
  AlgebraVector unit = AlgebraVector::Zero(d);
  for (int i = 0; i < d; ++i) {
    unit.setZero();
    unit[i] = 1.0;
    const AlgebraVector xz = spec.bracket(mu.re, unit);
    const AlgebraVector ez = spec.bracket(mu.im, unit);
    tangent.col(i) << xz, ez;
    tangent.col(d + i) << AlgebraVector(-ez), AlgebraVector::Zero(d);
  }
  Eigen::JacobiSVD<Mat> tsvd(tangent, Eigen::ComputeFullU);
  const auto& tsv = tsvd.singularValues();
  int tdim = 0;
  while (tdim < tsv.size() && tsv[tdim] > kRankTol * tsv[0]) ++tdim;
  const Mat tbasis = tsvd.matrixU().leftCols(tdim);

  // member differentials as coordinate partials
  Mat diff(nm, 2 * d);
  double grad_scale = 0.0;
  std::vector<ComplexAlgebraVector> grads(nm);
  for (std::size_t m = 0; m < nm; ++m) {
    grads[m] = family.members[m].gradient(mu);
    const AlgebraVector pxi = spec.gram() * grads[m].re;
    const AlgebraVector peta = spec.gram() * AlgebraVector(-grads[m].im);
    diff.row(m) << pxi.transpose(), peta.transpose();
    grad_scale = std::max(grad_scale, grads[m].norm());
  }

  DdimDind out;
  out.tangent_dim = tdim;
  const RankResult rd = rank_of(Mat(diff * tbasis));
  out.ddim = rd.rank;
  out.gap_ddim = rd.gap;

  Mat bm(nm, nm);
  bm.setZero();
  for (std::size_t i = 0; i < nm; ++i)
    for (std::size_t j = i + 1; j < nm; ++j) {
      const double v = spec.lie_poisson(PoissonKind::GTheta, mu, grads[i], grads[j]);
      bm(i, j) = v;
      bm(j, i) = -v;
    }
  // a commuting family gives a numerically-zero matrix; classify its rank
  // against the natural bracket magnitude, not against its own noise
  const double bracket_scale = (1.0 + grad_scale * grad_scale) * (1.0 + mu.norm());
  const RankResult rb = rank_of(bm, kRankTol, bracket_scale);
  out.dind = out.ddim - rb.rank;
  out.gap_bracket = rb.gap;
  out.ambiguous = rd.ambiguous || rb.ambiguous;
  return out;
}

DdimDind ddim_dind(const IntegralFamily& family, const PhasePoint& pt) {
  return ddim_dind_at(family, theta_map(*family.algebra, pt, family.epsilon));
}

CompletenessReport completeness_report(const IntegralFamily& family,
                                       const OrbitContext& ctx, int samples,
                                       std::uint64_t seed0) {
  if (samples < 1) throw InputError("completeness_report: samples must be >= 1");
  CompletenessReport rep;
  rep.samples = samples;
  rep.phase_dim = 2 * ctx.orbit_dim();
  rep.corank = 0;

  rep.per_sample.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const PhasePoint pt = ctx.sample_phase_point(seed0 + 17 * s);
    rep.per_sample[s] = ddim_dind(family, pt);
  }

  std::map<std::pair<int, int>, int> votes;
  for (const auto& r : rep.per_sample) ++votes[{r.ddim, r.dind}];
  auto modal = std::max_element(votes.begin(), votes.end(),
                                [](const auto& a, const auto& b) {
                                  return a.second < b.second;
                                });
  rep.ddim = modal->first.first;
  rep.dind = modal->first.second;
  for (int s = 0; s < samples; ++s) {
    const auto& r = rep.per_sample[s];
    if (r.ddim != rep.ddim || r.dind != rep.dind) rep.outlier_samples.push_back(s);
    rep.min_gap = std::min(rep.min_gap, std::min(r.gap_ddim, r.gap_bracket));
  }
  rep.verdict = (rep.ddim + rep.dind == rep.phase_dim + rep.corank);
  if (!rep.outlier_samples.empty())
    rep.note = "non-constant ranks across samples; listed points excluded from the vote";
  return rep;
}

int tori_dimension_at(const OrbitContext& ctx, const AlgebraVector& eta) {
  const LieAlgebraSpec& spec = ctx.algebra();
  const SubspaceBasis ann_eta = ann_basis(spec, eta, ctx.kernel_tol());
  const auto& ann_a = ctx.seed_ann_basis();

  Mat stacked(spec.dim(), ann_a.dim() + ann_eta.dim());
  for (int i = 0; i < ann_a.dim(); ++i) stacked.col(i) = ann_a.vectors[i];
  for (int i = 0; i < ann_eta.dim(); ++i)
    stacked.col(ann_a.dim() + i) = ann_eta.vectors[i];
  const RankResult r = rank_of(stacked);
  const int intersection = ann_a.dim() + ann_eta.dim() - r.rank;
  return ann_eta.dim() - intersection;
}

ToriReport tori_dimension(const OrbitContext& ctx, int samples,
                          std::uint64_t seed0) {
  if (samples < 1) throw InputError("tori_dimension: samples must be >= 1");
  ToriReport rep;
  rep.samples = samples;
  rep.per_sample.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const AlgebraVector eta = ctx.cotangent_sample(ctx.seed(), seed0 + 23 * s);
    rep.per_sample[s] = tori_dimension_at(ctx, eta);
  }
  std::map<int, int> votes;
  for (int v : rep.per_sample) ++votes[v];
  auto modal = std::max_element(votes.begin(), votes.end(),
                                [](const auto& a, const auto& b) {
                                  return a.second < b.second;
                                });
  rep.dimension = modal->first;
  for (int s = 0; s < samples; ++s)
    if (rep.per_sample[s] != rep.dimension) rep.outlier_samples.push_back(s);
  return rep;
}

} // namespace magflow
