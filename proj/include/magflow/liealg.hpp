#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magflow/errors.hpp"

namespace magflow {

using AlgebraVector = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Element of g_0 = g (+) i g, stored as coordinate vectors of the two
/// real slots. Also the carrier of the contraction g_theta.
struct ComplexAlgebraVector {
  AlgebraVector re;
  AlgebraVector im;

  ComplexAlgebraVector() = default;
  ComplexAlgebraVector(AlgebraVector r, AlgebraVector i)
      : re(std::move(r)), im(std::move(i)) {}

  Eigen::Index dim() const { return re.size(); }

  ComplexAlgebraVector operator+(const ComplexAlgebraVector& o) const {
    return {re + o.re, im + o.im};
  }
  ComplexAlgebraVector operator-(const ComplexAlgebraVector& o) const {
    return {re - o.re, im - o.im};
  }
  ComplexAlgebraVector operator*(double s) const { return {re * s, im * s}; }

  double norm() const { return std::sqrt(re.squaredNorm() + im.squaredNorm()); }

  /// Flat (re; im) coordinate vector of length 2d.
  Eigen::VectorXd flat() const {
    Eigen::VectorXd v(2 * re.size());
    v << re, im;
    return v;
  }
  static ComplexAlgebraVector from_flat(const Eigen::VectorXd& v) {
    const Eigen::Index d = v.size() / 2;
    return {v.head(d), v.tail(d)};
  }
};

/// Which real slot of a complex invariant survives on the compact real form.
enum class InvariantPart { Re, Im };

/// A basic Ad-invariant polynomial of the defining representation,
/// evaluable (with exact differential) on matrices with complex entries.
struct InvariantPolynomial {
  int index = 0;   // 1-based position within the basic set
  int degree = 0;  // polynomial degree = which char-poly coefficient
  InvariantPart real_part = InvariantPart::Re;  // nonzero slot on g itself
};

/// User hook for algebras outside the shipped so/su families.
struct InvariantEvaluator {
  int degree = 0;
  std::function<Complex(const CMat&)> value;
  // returns (value, D) with d p = tr(D dM)
  std::function<std::pair<Complex, CMat>(const CMat&)> value_and_gradient;
};

enum class PoissonKind { G0, GTheta, IB };

/// A compact matrix Lie algebra given by a basis of the defining
/// representation: structure constants, invariant inner product, rank and
/// basic invariant polynomials. Immutable after construction.
class LieAlgebraSpec {
public:
  /// so(n) in the antisymmetric-generator basis. For n = 3 the basis is the
  /// rotation-generator triple with [e1,e2] = e3 (vector-product structure).
  static std::shared_ptr<const LieAlgebraSpec> so(int n);

  /// su(n) in the standard anti-Hermitian basis (off-diagonal pairs plus
  /// traceless diagonals).
  static std::shared_ptr<const LieAlgebraSpec> su(int n);

  /// Custom algebra from explicit basis matrices. Invariant-polynomial
  /// operations require `custom_invariants` unless the basis happens to be
  /// one of the shipped families.
  static std::shared_ptr<const LieAlgebraSpec> from_basis(
      std::string name, std::vector<CMat> basis, int rank,
      std::vector<InvariantEvaluator> custom_invariants = {});

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  int rank() const { return rank_; }
  int rep_size() const { return static_cast<int>(basis_[0].rows()); }
  const std::vector<CMat>& basis() const { return basis_; }
  const Mat& gram() const { return gram_; }

  /// C[i][j][k] with [e_i, e_j] = sum_k C[i][j][k] e_k, stored as
  /// structure(k)(i,j).
  const Mat& structure(int k) const { return structure_[k]; }

  // --- algebra arithmetic -------------------------------------------------

  AlgebraVector bracket(const AlgebraVector& x, const AlgebraVector& y) const;
  double inner(const AlgebraVector& x, const AlgebraVector& y) const;
  double norm(const AlgebraVector& x) const { return std::sqrt(inner(x, x)); }

  /// Matrix of ad_x = [x, .] in the basis coordinates.
  Mat ad_operator(const AlgebraVector& x) const;

  /// Ad_{exp(t xi)} y, computed through the exponential of t ad_xi.
  AlgebraVector group_adjoint(const AlgebraVector& xi, double t,
                              const AlgebraVector& y) const;

  /// Matrix of the adjoint group element exp(ad_xi).
  Mat adjoint_matrix(const AlgebraVector& xi) const;

  /// Defining-representation matrix of an algebra element.
  CMat matrix_of(const AlgebraVector& x) const;
  CMat matrix_of(const ComplexAlgebraVector& z) const;

  /// Coordinates of a matrix known to lie in the span of the basis.
  /// Throws NumericError if the least-squares residual exceeds tol.
  AlgebraVector coords_of(const CMat& m, double tol = 1e-9) const;

  /// Solve gram * g = v: turns coordinate partials into metric gradients.
  AlgebraVector metric_gradient(const AlgebraVector& partials) const;

  // --- contraction and Lie-Poisson brackets --------------------------------

  /// [z1, z2]_theta = [xi1,xi2] + i([eta1,xi2] + [xi1,eta2]).
  ComplexAlgebraVector theta_bracket(const ComplexAlgebraVector& z1,
                                     const ComplexAlgebraVector& z2) const;

  /// Lie-Poisson bilinear forms on g_0 / g_theta / the ib shift, evaluated
  /// at mu on gradients gf, gg given in the convention
  /// grad f = grad_xi f - i grad_eta f.
  double lie_poisson(PoissonKind kind, const ComplexAlgebraVector& mu,
                     const ComplexAlgebraVector& gf,
                     const ComplexAlgebraVector& gg,
                     const AlgebraVector* b = nullptr) const;

  // --- invariant polynomials ------------------------------------------------

  /// The r basic invariants. Throws ConfigError when the algebra was built
  /// from a custom basis without evaluators.
  const std::vector<InvariantPolynomial>& invariants() const;

  /// Values of all basic invariants on a complex matrix argument.
  Eigen::VectorXcd invariant_values(const CMat& m) const;

  /// Values plus exact differentials: d p_j = tr(D_j dM).
  void invariant_values_and_gradients(const CMat& m, Eigen::VectorXcd& values,
                                      std::vector<CMat>& grads) const;

  /// Real-valued basic invariants restricted to g (the nonzero Re/Im slot).
  double real_invariant(int j, const AlgebraVector& x) const;

  /// Largest normalized residual |p_j(x) - ref_j| / (1 + |ref_j|).
  double invariant_residual(const AlgebraVector& x,
                            const Eigen::VectorXcd& ref) const;

  // --- self checks ----------------------------------------------------------

  /// Largest Jacobi-identity residual over all basis triples.
  double jacobi_residual() const;
  /// Largest ad-invariance residual of the inner product over basis triples.
  double ad_invariance_residual() const;

private:
  LieAlgebraSpec() = default;
  void finalize();  // structure constants, gram, validation

  std::string name_;
  int rank_ = 0;
  std::vector<CMat> basis_;
  std::vector<Mat> structure_;   // structure_[k](i,j) = C[i][j][k]
  std::vector<Mat> ad_basis_;    // ad_basis_[i](k,j) = C[i][j][k]
  Mat gram_;
  Eigen::LLT<Mat> gram_llt_;
  Mat basis_gram_;               // Re tr(e_a^H e_b), for coords_of
  std::vector<InvariantPolynomial> invariants_;
  std::vector<InvariantEvaluator> custom_invariants_;
  std::vector<int> invariant_degrees_;
};

} // namespace magflow
