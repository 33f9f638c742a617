#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <complex>
#include <random>
#include <stdexcept>
#include <string>

namespace spinsteady {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using SpMatrix = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

inline constexpr const char* kVersion = "spinsteady 1.0.0";

inline constexpr double kPi = 3.14159265358979323846;

// Hilbert dimension above which superoperators switch to sparse storage (d^2 > 4096).
inline constexpr int kDenseSuperopMax = 64;

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// runtime (as opposed to usage) failures: non-convergence, lost positivity, ...
inline void check(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

}  // namespace detail

// ---- vectorization ----
// Column-stacking convention: vec(A rho B) = (B^T (x) A) vec(rho).

inline Vector vec(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

inline Matrix unvec(const Vector& x, int dim) {
  detail::require(x.size() == static_cast<long>(dim) * dim, "unvec: size mismatch");
  return Eigen::Map<const Matrix>(x.data(), dim, dim);
}

// ---- small linear-algebra helpers ----

inline Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

inline SpMatrix skron(const SpMatrix& a, const SpMatrix& b) {
  SpMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros()) * b.nonZeros());
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SpMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SpMatrix::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                         ia.value() * ib.value());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

inline SpMatrix speye(int n) {
  SpMatrix id(n, n);
  id.setIdentity();
  return id;
}

inline bool is_hermitian(const Matrix& a, double tol = 1e-12) {
  return a.rows() == a.cols() && (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

inline cplx hs_inner(const Matrix& a, const Matrix& b) {  // <a,b> = Tr(a† b)
  return (a.adjoint() * b).trace();
}

inline double hs_norm(const Matrix& a) { return a.norm(); }

// ---- random test/probe states ----

inline Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) g(i, j) = cplx(gauss(rng), gauss(rng));
  return ((g + g.adjoint()) / 2.0).eval();
}

inline Matrix random_state(int dim, std::mt19937_64& rng) {  // Wishart-normalized
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) g(i, j) = cplx(gauss(rng), gauss(rng));
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

}  // namespace spinsteady
