#include "magflow/liealg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

namespace magflow {

namespace {

void check_dim(const LieAlgebraSpec& spec, const AlgebraVector& v,
               const char* what) {
  if (v.size() != spec.dim()) {
    std::ostringstream os;
    os << what << ": coordinate length " << v.size() << " does not match dim "
       << spec.dim() << " of " << spec.name();
    throw InputError(os.str());
  }
}

} // namespace

// --- factories ---------------------------------------------------------------

std::shared_ptr<const LieAlgebraSpec> LieAlgebraSpec::so(int n) {
  if (n < 3) throw InputError("so(n) requires n >= 3");
  auto spec = std::shared_ptr<LieAlgebraSpec>(new LieAlgebraSpec());
  spec->name_ = "so(" + std::to_string(n) + ")";
  spec->rank_ = n / 2;

  auto gen = [n](int i, int j) {
    CMat m = CMat::Zero(n, n);
    m(i, j) = Complex(1, 0);
    m(j, i) = Complex(-1, 0);
    return m;
  };
  if (n == 3) {
    // rotation generators: [e1,e2] = e3 cyclically (vector product)
    spec->basis_.push_back(gen(2, 1));  // e1
    spec->basis_.push_back(gen(0, 2));  // e2
    spec->basis_.push_back(gen(1, 0));  // e3
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) spec->basis_.push_back(gen(i, j));
  }

  // char-poly coefficients of even degree; for even n the top one is det
  // (the Pfaffian squared), which is still independent at generic points
  for (int k = 1; k <= spec->rank_; ++k) spec->invariant_degrees_.push_back(2 * k);

  spec->finalize();
  return spec;
}

std::shared_ptr<const LieAlgebraSpec> LieAlgebraSpec::su(int n) {
  if (n < 2) throw InputError("su(n) requires n >= 2");
  auto spec = std::shared_ptr<LieAlgebraSpec>(new LieAlgebraSpec());
  spec->name_ = "su(" + std::to_string(n) + ")";
  spec->rank_ = n - 1;

  const Complex I(0, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      CMat m = CMat::Zero(n, n);
      m(i, j) = Complex(1, 0);
      m(j, i) = Complex(-1, 0);
      spec->basis_.push_back(m);
      CMat s = CMat::Zero(n, n);
      s(i, j) = I;
      s(j, i) = I;
      spec->basis_.push_back(s);
    }
  }
  for (int k = 0; k + 1 < n; ++k) {
    CMat dmat = CMat::Zero(n, n);
    dmat(k, k) = I;
    dmat(k + 1, k + 1) = -I;
    spec->basis_.push_back(dmat);
  }

  for (int k = 2; k <= n; ++k) spec->invariant_degrees_.push_back(k);

  spec->finalize();
  return spec;
}

std::shared_ptr<const LieAlgebraSpec> LieAlgebraSpec::from_basis(
    std::string name, std::vector<CMat> basis, int rank,
    std::vector<InvariantEvaluator> custom_invariants) {
  if (basis.empty()) throw InputError("from_basis: empty basis");
  const Eigen::Index nrep = basis[0].rows();
  for (const auto& m : basis) {
    if (m.rows() != nrep || m.cols() != nrep)
      throw InputError("from_basis: basis matrices must be square and equally sized");
  }
  if (rank <= 0) throw InputError("from_basis: rank must be positive");
  auto spec = std::shared_ptr<LieAlgebraSpec>(new LieAlgebraSpec());
  spec->name_ = std::move(name);
  spec->rank_ = rank;
  spec->basis_ = std::move(basis);
  spec->custom_invariants_ = std::move(custom_invariants);
  for (const auto& ev : spec->custom_invariants_)
    spec->invariant_degrees_.push_back(ev.degree);
  spec->finalize();
  return spec;
}

// --- construction ------------------------------------------------------------

void LieAlgebraSpec::finalize() {
  const int d = dim();

  // Gram matrix of the matrix basis under Re tr(A^H B); used to project
  // commutators back onto coordinates.
  basis_gram_ = Mat(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b)
      basis_gram_(a, b) = basis_gram_(b, a) =
          (basis_[a].adjoint() * basis_[b]).trace().real();
  Eigen::LDLT<Mat> basis_ldlt(basis_gram_);
  if (basis_ldlt.info() != Eigen::Success)
    throw NumericError(name_ + ": basis Gram matrix is singular");

  // Structure constants by least-squares projection of matrix commutators.
  structure_.assign(d, Mat::Zero(d, d));
  double worst = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const CMat comm = basis_[i] * basis_[j] - basis_[j] * basis_[i];
      AlgebraVector rhs(d);
      for (int a = 0; a < d; ++a)
        rhs[a] = (basis_[a].adjoint() * comm).trace().real();
      const AlgebraVector c = basis_ldlt.solve(rhs);
      CMat recon = CMat::Zero(comm.rows(), comm.cols());
      for (int a = 0; a < d; ++a) recon += c[a] * basis_[a];
      worst = std::max(worst, (recon - comm).norm());
      for (int k = 0; k < d; ++k) {
        structure_[k](i, j) = c[k];
        structure_[k](j, i) = -c[k];
      }
    }
  }
  if (worst > 1e-10) {
    std::ostringstream os;
    os << name_ << ": commutators leave the basis span (residual " << worst << ")";
    throw NumericError(os.str());
  }

  ad_basis_.assign(d, Mat::Zero(d, d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) ad_basis_[i](k, j) = structure_[k](i, j);

  // Invariant inner product: negative Killing form, scaled so that the
  // smallest diagonal entry equals 1.
  Mat killing(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      killing(i, j) = killing(j, i) = (ad_basis_[i] * ad_basis_[j]).trace();
  gram_ = -killing;
  double min_diag = gram_(0, 0);
  for (int i = 1; i < d; ++i) min_diag = std::min(min_diag, gram_(i, i));
  if (min_diag <= 0)
    throw NumericError(name_ + ": negative Killing form is not positive on the diagonal (non-semisimple or non-compact basis?)");
  gram_ /= min_diag;
  gram_llt_.compute(gram_);
  if (gram_llt_.info() != Eigen::Success)
    throw NumericError(name_ + ": invariant inner product is not positive definite");

  const double jres = jacobi_residual();
  if (jres > 1e-12) {
    std::ostringstream os;
    os << name_ << ": Jacobi identity residual " << jres << " exceeds 1e-12";
    throw NumericError(os.str());
  }
  const double ares = ad_invariance_residual();
  if (ares > 1e-10) {
    std::ostringstream os;
    os << name_ << ": inner product is not ad-invariant (residual " << ares << ")";
    throw NumericError(os.str());
  }

  // Re/Im slot of each char-poly coefficient on anti-Hermitian matrices:
  // eigenvalues are purely imaginary, so e_k picks up a factor i^k.
  invariants_.clear();
  for (std::size_t idx = 0; idx < invariant_degrees_.size(); ++idx) {
    InvariantPolynomial p;
    p.index = static_cast<int>(idx) + 1;
    p.degree = invariant_degrees_[idx];
    p.real_part = (p.degree % 2 == 0) ? InvariantPart::Re : InvariantPart::Im;
    invariants_.push_back(p);
  }
}

// --- arithmetic ----------------------------------------------------------------

AlgebraVector LieAlgebraSpec::bracket(const AlgebraVector& x,
                                      const AlgebraVector& y) const {
  check_dim(*this, x, "bracket");
  check_dim(*this, y, "bracket");
  const int d = dim();
  // antisymmetrized pairing: each term negates exactly under (x,y) swap,
  // so bracket(x,y) == -bracket(y,x) holds bit for bit
  AlgebraVector out = AlgebraVector::Zero(d);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double w = x[i] * y[j] - x[j] * y[i];
      if (w == 0.0) continue;
      for (int k = 0; k < d; ++k) out[k] += structure_[k](i, j) * w;
    }
  }
  return out;
}

double LieAlgebraSpec::inner(const AlgebraVector& x,
                             const AlgebraVector& y) const {
  check_dim(*this, x, "inner");
  check_dim(*this, y, "inner");
  return x.dot(gram_ * y);
}

Mat LieAlgebraSpec::ad_operator(const AlgebraVector& x) const {
  check_dim(*this, x, "ad_operator");
  Mat ad = Mat::Zero(dim(), dim());
  for (int i = 0; i < dim(); ++i) ad += x[i] * ad_basis_[i];
  return ad;
}

Mat LieAlgebraSpec::adjoint_matrix(const AlgebraVector& xi) const {
  return ad_operator(xi).exp();
}

AlgebraVector LieAlgebraSpec::group_adjoint(const AlgebraVector& xi, double t,
                                            const AlgebraVector& y) const {
  check_dim(*this, y, "group_adjoint");
  return Mat((t * ad_operator(xi)).exp()) * y;
}

CMat LieAlgebraSpec::matrix_of(const AlgebraVector& x) const {
  check_dim(*this, x, "matrix_of");
  CMat m = CMat::Zero(rep_size(), rep_size());
  for (int i = 0; i < dim(); ++i) m += x[i] * basis_[i];
  return m;
}

CMat LieAlgebraSpec::matrix_of(const ComplexAlgebraVector& z) const {
  const Complex I(0, 1);
  return matrix_of(z.re) + I * matrix_of(z.im);
}

AlgebraVector LieAlgebraSpec::coords_of(const CMat& m, double tol) const {
  const int d = dim();
  AlgebraVector rhs(d);
  for (int a = 0; a < d; ++a)
    rhs[a] = (basis_[a].adjoint() * m).trace().real();
  Eigen::LDLT<Mat> ldlt(basis_gram_);
  const AlgebraVector c = ldlt.solve(rhs);
  CMat recon = CMat::Zero(m.rows(), m.cols());
  for (int a = 0; a < d; ++a) recon += c[a] * basis_[a];
  const double res = (recon - m).norm();
  if (res > tol * std::max(1.0, m.norm())) {
    std::ostringstream os;
    os << name_ << ": matrix is not in the basis span (residual " << res << ")";
    throw NumericError(os.str());
  }
  return c;
}

AlgebraVector LieAlgebraSpec::metric_gradient(const AlgebraVector& partials) const {
  check_dim(*this, partials, "metric_gradient");
  return gram_llt_.solve(partials);
}

ComplexAlgebraVector LieAlgebraSpec::theta_bracket(
    const ComplexAlgebraVector& z1, const ComplexAlgebraVector& z2) const {
  return {bracket(z1.re, z2.re),
          bracket(z1.im, z2.re) + bracket(z1.re, z2.im)};
}

double LieAlgebraSpec::lie_poisson(PoissonKind kind,
                                   const ComplexAlgebraVector& mu,
                                   const ComplexAlgebraVector& gf,
                                   const ComplexAlgebraVector& gg,
                                   const AlgebraVector* b) const {
  // gradients arrive as grad_xi f - i grad_eta f
  const AlgebraVector& fxi = gf.re;
  const AlgebraVector feta = -gf.im;
  const AlgebraVector& gxi = gg.re;
  const AlgebraVector geta = -gg.im;

  const AlgebraVector cross = bracket(fxi, geta) + bracket(feta, gxi);
  switch (kind) {
    case PoissonKind::GTheta:
      return inner(mu.re, bracket(fxi, gxi)) + inner(mu.im, cross);
    case PoissonKind::G0:
      return inner(mu.re, bracket(fxi, gxi) - bracket(feta, geta)) +
             inner(mu.im, cross);
    case PoissonKind::IB:
      if (b == nullptr)
        throw InputError("lie_poisson: kind ib requires the vector b");
      return inner(*b, cross);
  }
  throw InputError("lie_poisson: unknown kind");
}

// --- invariants ------------------------------------------------------------------

const std::vector<InvariantPolynomial>& LieAlgebraSpec::invariants() const {
  if (invariants_.empty())
    throw ConfigError(name_ + ": no invariant polynomials available (custom basis without evaluators)");
  return invariants_;
}

namespace {

// Elementary symmetric functions of the eigenvalues through power traces
// (Newton's identities), with exact holomorphic differentials.
void elementary_symmetric(const CMat& m, int kmax,
                          Eigen::VectorXcd& e, std::vector<CMat>* de) {
  const Eigen::Index n = m.rows();
  std::vector<CMat> powers(kmax + 1);  // powers[i] = m^i
  powers[0] = CMat::Identity(n, n);
  for (int i = 1; i <= kmax; ++i) powers[i] = powers[i - 1] * m;

  Eigen::VectorXcd t(kmax + 1);  // power traces
  t[0] = Complex(static_cast<double>(n), 0);
  for (int i = 1; i <= kmax; ++i) t[i] = powers[i].trace();

  e = Eigen::VectorXcd::Zero(kmax + 1);
  e[0] = Complex(1, 0);
  std::vector<CMat> deriv;
  if (de) deriv.assign(kmax + 1, CMat::Zero(n, n));

  for (int k = 1; k <= kmax; ++k) {
    Complex acc(0, 0);
    CMat dacc;
    if (de) dacc = CMat::Zero(n, n);
    for (int i = 1; i <= k; ++i) {
      const double sign = (i % 2 == 1) ? 1.0 : -1.0;
      acc += sign * e[k - i] * t[i];
      if (de) {
        // d t_i = i tr(m^{i-1} dM)
        dacc += sign * (deriv[k - i] * t[i] +
                        e[k - i] * static_cast<double>(i) * powers[i - 1]);
      }
    }
    e[k] = acc / static_cast<double>(k);
    if (de) deriv[k] = dacc / static_cast<double>(k);
  }
  if (de) *de = std::move(deriv);
}

} // namespace

Eigen::VectorXcd LieAlgebraSpec::invariant_values(const CMat& m) const {
  const auto& invs = invariants();
  if (!custom_invariants_.empty()) {
    Eigen::VectorXcd v(invs.size());
    for (std::size_t j = 0; j < custom_invariants_.size(); ++j)
      v[j] = custom_invariants_[j].value(m);
    return v;
  }
  int kmax = 0;
  for (const auto& p : invs) kmax = std::max(kmax, p.degree);
  Eigen::VectorXcd e;
  elementary_symmetric(m, kmax, e, nullptr);
  Eigen::VectorXcd v(invs.size());
  for (std::size_t j = 0; j < invs.size(); ++j) v[j] = e[invs[j].degree];
  return v;
}

void LieAlgebraSpec::invariant_values_and_gradients(
    const CMat& m, Eigen::VectorXcd& values, std::vector<CMat>& grads) const {
  const auto& invs = invariants();
  values.resize(invs.size());
  grads.resize(invs.size());
  if (!custom_invariants_.empty()) {
    for (std::size_t j = 0; j < custom_invariants_.size(); ++j) {
      auto [v, g] = custom_invariants_[j].value_and_gradient(m);
      values[j] = v;
      grads[j] = g;
    }
    return;
  }
  int kmax = 0;
  for (const auto& p : invs) kmax = std::max(kmax, p.degree);
  Eigen::VectorXcd e;
  std::vector<CMat> de;
  elementary_symmetric(m, kmax, e, &de);
  for (std::size_t j = 0; j < invs.size(); ++j) {
    values[j] = e[invs[j].degree];
    grads[j] = de[invs[j].degree];
  }
}

double LieAlgebraSpec::real_invariant(int j, const AlgebraVector& x) const {
  const auto& invs = invariants();
  if (j < 1 || j > static_cast<int>(invs.size()))
    throw InputError("real_invariant: index out of range");
  const Eigen::VectorXcd v = invariant_values(matrix_of(x));
  const Complex val = v[j - 1];
  return invs[j - 1].real_part == InvariantPart::Re ? val.real() : val.imag();
}

double LieAlgebraSpec::invariant_residual(const AlgebraVector& x,
                                          const Eigen::VectorXcd& ref) const {
  const Eigen::VectorXcd v = invariant_values(matrix_of(x));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    worst = std::max(worst, std::abs(v[j] - ref[j]) / (1.0 + std::abs(ref[j])));
  return worst;
}

// --- self checks -------------------------------------------------------------------

double LieAlgebraSpec::jacobi_residual() const {
  const int d = dim();
  double worst = 0.0;
  AlgebraVector ei = AlgebraVector::Zero(d), ej = AlgebraVector::Zero(d),
                ek = AlgebraVector::Zero(d);
  for (int i = 0; i < d; ++i) {
    ei.setZero(); ei[i] = 1;
    for (int j = i + 1; j < d; ++j) {
      ej.setZero(); ej[j] = 1;
      for (int k = j + 1; k < d; ++k) {
        ek.setZero(); ek[k] = 1;
        const AlgebraVector r = bracket(ei, bracket(ej, ek)) +
                                bracket(ej, bracket(ek, ei)) +
                                bracket(ek, bracket(ei, ej));
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

double LieAlgebraSpec::ad_invariance_residual() const {
  const int d = dim();
  double worst = 0.0;
  AlgebraVector ez = AlgebraVector::Zero(d), ex = AlgebraVector::Zero(d),
                ey = AlgebraVector::Zero(d);
  for (int z = 0; z < d; ++z) {
    ez.setZero(); ez[z] = 1;
    for (int x = 0; x < d; ++x) {
      ex.setZero(); ex[x] = 1;
      for (int y = x; y < d; ++y) {
        ey.setZero(); ey[y] = 1;
        const double r = inner(bracket(ez, ex), ey) + inner(ex, bracket(ez, ey));
        worst = std::max(worst, std::abs(r));
      }
    }
  }
  return worst;
}

} // namespace magflow
