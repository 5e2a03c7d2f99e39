#pragma once

#include <array>
#include <string>
#include <vector>

#include "magflow/integrals.hpp"
#include "magflow/orbit.hpp"

namespace magflow {

/// Relative singular-value threshold shared by every rank decision here.
inline constexpr double kRankTol = 1e-8;

struct RankResult {
  int rank = 0;
  double gap = std::numeric_limits<double>::infinity();  // sv[rank-1]/sv[rank]
  bool ambiguous = false;  // gap below 10
};

/// Rank by singular values >= tol x scale, where scale is the larger of the
/// top singular value and an external floor (pass the ambient matrix norm to
/// classify near-zero restrictions against it).
RankResult rank_of(const Mat& m, double tol = kRankTol, double scale_floor = 0.0);

/// The pencil Lambda_{l1,l2} = l1 {.,.}_gtheta + l2 ({.,.}_g0 + {.,.}_ib)
/// at mu, assembled as an antisymmetric 2d x 2d matrix on the coordinate
/// gradients (xi slots first, then eta slots).
struct PencilForm {
  ComplexAlgebraVector mu;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  AlgebraVector b;
  Mat matrix;
};

PencilForm pencil_form(const LieAlgebraSpec& spec, const ComplexAlgebraVector& mu,
                       double lambda1, double lambda2, const AlgebraVector& b);

RankResult form_rank(const PencilForm& form, double tol = kRankTol);

/// Orthonormal kernel basis of an antisymmetric form (columns).
Mat form_kernel(const PencilForm& form, double tol = kRankTol);

/// Condition (A1): rank Lambda_{l1,l2} = 2 dim g - 2r at the distinguished
/// point eps*a + i*a, sampled over (-1,1), (0,1) and (1, lambda) pairs.
struct A1Scan {
  int expected_rank = 0;
  bool ok = true;
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<std::array<double, 3>> samples;  // (l1, l2, rank)
};

A1Scan condition_A1(const LieAlgebraSpec& spec, const AlgebraVector& a,
                    const AlgebraVector& b, double epsilon,
                    const std::vector<double>& lambda_grid);

/// Condition (A2): dimension of the kernel-within-kernel
/// K = { z in ker Lambda_{1,0} : Lambda_{0,1}(z, ker Lambda_{1,0}) = 0 }.
struct A2Result {
  int dim_kernel = 0;   // dim ker Lambda_{1,0}
  int dim_K = 0;
  int expected = 0;     // 2r
  bool ok = false;
  double gap_kernel = 0.0;
  double gap_restricted = 0.0;
};

A2Result condition_A2(const LieAlgebraSpec& spec, const AlgebraVector& a,
                      const AlgebraVector& b, double epsilon);

/// The orbit-level bracket {f,g}_v^eps(eta) = -<eta + eps a, [grad f, grad g]>
/// on invariant functions of eta in ann(a)^perp.
double v_pencil_bracket(const LieAlgebraSpec& spec, const AlgebraVector& eta,
                        double epsilon, const AlgebraVector& a,
                        const AlgebraVector& gf, const AlgebraVector& gg);

/// Gradient (over ann(a)^perp) of a family member restricted to the fiber
/// x = a, p = eta: the G-invariant-function picture of the member.
AlgebraVector member_v_gradient(const IntegralFamily& family, const Member& member,
                                const OrbitContext& ctx, const AlgebraVector& eta);

// --- completeness arithmetic -------------------------------------------------------

struct DdimDind {
  int ddim = 0;
  int dind = 0;
  int tangent_dim = 0;
  double gap_ddim = std::numeric_limits<double>::infinity();
  double gap_bracket = std::numeric_limits<double>::infinity();
  bool ambiguous = false;
};

/// ddim = rank of the member differentials restricted to the tangent space
/// of the g_theta coadjoint orbit through Theta_eps(pt); dind = ddim minus
/// the rank of the pairwise g_theta bracket matrix.
DdimDind ddim_dind(const IntegralFamily& family, const PhasePoint& pt);

DdimDind ddim_dind_at(const IntegralFamily& family, const ComplexAlgebraVector& mu);

struct CompletenessReport {
  int ddim = 0;             // modal over samples
  int dind = 0;
  int phase_dim = 0;        // 2 x orbit dim
  int corank = 0;           // 0: symplectic phase space
  bool verdict = false;     // ddim + dind == phase_dim + corank
  double tolerance = kRankTol;
  double min_gap = std::numeric_limits<double>::infinity();
  int samples = 0;
  std::vector<int> outlier_samples;  // indices with non-modal (ddim, dind)
  std::vector<DdimDind> per_sample;
  std::string note;
};

CompletenessReport completeness_report(const IntegralFamily& family,
                                       const OrbitContext& ctx, int samples,
                                       std::uint64_t seed0 = 1000);

// --- invariant tori ---------------------------------------------------------------

/// dim ann(eta) - dim(ann(a) cap ann(eta)) for one eta in ann(a)^perp.
int tori_dimension_at(const OrbitContext& ctx, const AlgebraVector& eta);

struct ToriReport {
  int dimension = 0;           // modal over samples
  int samples = 0;
  std::vector<int> per_sample;
  std::vector<int> outlier_samples;
};

/// Predicted invariant-torus dimension by modal vote over sampled generic
/// eta in ann(a)^perp.
ToriReport tori_dimension(const OrbitContext& ctx, int samples,
                          std::uint64_t seed0 = 5000);

} // namespace magflow
