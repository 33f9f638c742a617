#pragma once

#include <optional>
#include <vector>

#include "common.hpp"
#include "groups.hpp"
#include "spin_core.hpp"

namespace spinsteady {

// Metrological and structural diagnostics of spin-space density matrices.
// All functions take states on the (N+1)-dimensional maximal-spin subspace.

namespace detail {

inline void require_state(const Matrix& rho, const char* where) {
  require(rho.rows() == rho.cols(), std::string(where) + ": rho not square");
  require(is_hermitian(rho, 1e-10), std::string(where) + ": rho not Hermitian");
  require(std::abs(rho.trace() - cplx(1, 0)) <= 1e-8,
          std::string(where) + ": rho not unit trace");
}

}  // namespace detail

inline double purity(const Matrix& rho) {
  detail::require_state(rho, "purity");
  return rho.squaredNorm();  // Tr rho^2 = |rho|_HS^2 for Hermitian rho
}

inline double hs_distance_mms(const Matrix& rho) {
  detail::require_state(rho, "hs_distance_mms");
  const int d = static_cast<int>(rho.rows());
  return hs_norm(Matrix(rho - Matrix::Identity(d, d) / static_cast<double>(d)));
}

// ---- quantum Fisher information ----

// F(rho, A) = 2 sum_{k,l} (lam_k - lam_l)^2 / (lam_k + lam_l) |<k|A|l>|^2,
// pairs with lam_k + lam_l <= 1e-12 excluded.
inline double qfi(const Matrix& rho, const Matrix& generator) {
  detail::require_state(rho, "qfi");
  detail::require(generator.rows() == rho.rows() && generator.cols() == rho.cols(),
                  "qfi: generator dimension mismatch");
  detail::require(is_hermitian(generator, 1e-12), "qfi: generator not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  const RealVector& lam = es.eigenvalues();
  const Matrix b = es.eigenvectors().adjoint() * generator * es.eigenvectors();
  const int d = static_cast<int>(rho.rows());
  double f = 0;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      const double s = lam(k) + lam(l);
      if (s <= 1e-12) continue;
      const double diff = lam(k) - lam(l);
      f += 2.0 * diff * diff / s * std::norm(b(k, l));
    }
  return f;
}

struct QfiProfile {
  RealVector values;
  double mean = 0, min = 0, max = 0, spread = 0;  // spread = max - min
};

namespace detail {

// eigenbasis workspace so that many directions share one diagonalization
struct QfiWorkspace {
  RealVector lam;
  Matrix bx, by, bz;
};

inline QfiWorkspace qfi_workspace(const Matrix& rho, const SpinOps& ops) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  QfiWorkspace ws;
  ws.lam = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  ws.bx = v.adjoint() * ops.sx * v;
  ws.by = v.adjoint() * ops.sy * v;
  ws.bz = v.adjoint() * ops.sz * v;
  return ws;
}

inline double qfi_direction(const QfiWorkspace& ws, const Vec3& n) {
  const Matrix b = n.x() * ws.bx + n.y() * ws.by + n.z() * ws.bz;
  const int d = static_cast<int>(b.rows());
  double f = 0;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      const double s = ws.lam(k) + ws.lam(l);
      if (s <= 1e-12) continue;
      const double diff = ws.lam(k) - ws.lam(l);
      f += 2.0 * diff * diff / s * std::norm(b(k, l));
    }
  return f;
}

inline QfiProfile profile_from_values(RealVector v) {
  QfiProfile p;
  p.values = std::move(v);
  p.mean = p.values.mean();
  p.min = p.values.minCoeff();
  p.max = p.values.maxCoeff();
  p.spread = p.max - p.min;
  return p;
}

}  // namespace detail

// QFI over equally spaced equatorial directions (cos phi, sin phi, 0)
inline QfiProfile equatorial_qfi(const Matrix& rho, const SpinSystem& sys,
                                 int n_angles = 8) {
  detail::require_state(rho, "equatorial_qfi");
  detail::require(n_angles >= 4, "equatorial_qfi: need n_angles >= 4");
  const detail::QfiWorkspace ws = detail::qfi_workspace(rho, collective_spin_ops(sys));
  RealVector vals(n_angles);
  for (int k = 0; k < n_angles; ++k) {
    const double phi = 2.0 * kPi * k / n_angles;
    vals(k) = detail::qfi_direction(ws, Vec3(std::cos(phi), std::sin(phi), 0));
  }
  return detail::profile_from_values(std::move(vals));
}

// deterministic Fibonacci-lattice directions covering the sphere
inline std::vector<Vec3> fibonacci_directions(int n) {
  detail::require(n >= 1, "fibonacci_directions: need n >= 1");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

// QFI over a Fibonacci lattice of directions; spread/mean near zero certifies
// an isotropic QFI form
inline QfiProfile isotropic_qfi_check(const Matrix& rho, const SpinSystem& sys,
                                      int n_directions = 30) {
  detail::require_state(rho, "isotropic_qfi_check");
  detail::require(n_directions >= 10, "isotropic_qfi_check: need n_directions >= 10");
  const detail::QfiWorkspace ws = detail::qfi_workspace(rho, collective_spin_ops(sys));
  const std::vector<Vec3> dirs = fibonacci_directions(n_directions);
  RealVector vals(n_directions);
  for (int k = 0; k < n_directions; ++k)
    vals(k) = detail::qfi_direction(ws, dirs[k]);
  return detail::profile_from_values(std::move(vals));
}

// ---- entanglement across a qubit bipartition ----

// Negativity (|rho^{T_A}|_1 - 1)/2 of the symmetric state embedded in the
// N-qubit space, partial transpose over the first `cut` qubits.
inline double negativity(const Matrix& rho, const SpinSystem& sys, int cut) {
  detail::require_state(rho, "negativity");
  detail::require(rho.rows() == sys.dim, "negativity: dimension mismatch");
  detail::require(cut >= 1 && cut < sys.n_spins,
                  "negativity: cut must satisfy 1 <= cut < n_spins");
  const DickeIsometry iso = dicke_isometry(sys.n_spins);
  const Matrix rho_q = iso.map * rho * iso.map.adjoint();
  const long da = 1L << cut, db = 1L << (sys.n_spins - cut);
  Matrix pt(rho_q.rows(), rho_q.cols());
  for (long a = 0; a < da; ++a)
    for (long ap = 0; ap < da; ++ap)
      for (long b = 0; b < db; ++b)
        for (long bp = 0; bp < db; ++bp)
          pt(ap * db + b, a * db + bp) = rho_q(a * db + b, ap * db + bp);
  Eigen::SelfAdjointEigenSolver<Matrix> es(pt);
  double neg = 0;
  for (int k = 0; k < es.eigenvalues().size(); ++k)
    neg += std::max(0.0, -es.eigenvalues()(k));
  return neg;
}

// ---- multipole structure ----

// A_L = sum_M |Tr(rho T_LM†)|^2 for L = 1..2j (index L-1)
inline RealVector multipole_norms(const Matrix& rho, const SpinSystem& sys) {
  detail::require_state(rho, "multipole_norms");
  detail::require(rho.rows() == sys.dim, "multipole_norms: dimension mismatch");
  const int lmax = sys.dim - 1;  // 2j
  RealVector a = RealVector::Zero(lmax);
  for (int l = 1; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m)
      a(l - 1) += std::norm(hs_inner(tensor_op(sys, l, m), rho));
  return a;
}

// largest t >= 1 with A_L < tol for all L <= t (0 if A_1 >= tol)
inline int anticoherence_order(const Matrix& rho, const SpinSystem& sys,
                               double tol = 1e-8) {
  const RealVector a = multipole_norms(rho, sys);
  int order = 0;
  while (order < a.size() && a(order) < tol) ++order;
  return order;
}

// Delta_G = 1 - Tr(rho rho_G) / Tr(rho^2); zero iff rho is group-invariant
inline double symmetry_deviation(const Matrix& rho, const SymmetryGroup& group) {
  const Matrix avg = group_average_state(rho, group);
  return 1.0 - hs_inner(rho, avg).real() / rho.squaredNorm();
}

// ---- Wigner function on the sphere ----

struct WignerField {
  RealVector theta;   // n_theta nodes in [0, pi]
  RealVector phi;     // n_phi nodes in [0, 2 pi)
  RealMatrix values;  // n_theta x n_phi
  double max_imag = 0;
};

namespace detail {

// fully normalized associated Legendre values P~_l^m(x) for all l <= lmax,
// 0 <= m <= l, with the Condon-Shortley phase; Y_lm = P~_l^m(cos th) e^{i m phi}
inline std::vector<std::vector<double>> normalized_legendre_table(int lmax,
                                                                  double x) {
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  std::vector<std::vector<double>> p(lmax + 1);
  for (int l = 0; l <= lmax; ++l) p[l].assign(l + 1, 0.0);
  p[0][0] = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 1; m <= lmax; ++m)
    p[m][m] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p[m - 1][m - 1];
  for (int m = 0; m < lmax; ++m)
    p[m + 1][m] = std::sqrt(2.0 * m + 3.0) * x * p[m][m];
  for (int m = 0; m <= lmax; ++m)
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) /
                                 (static_cast<double>(l) * l - m * m));
      const double b = std::sqrt(
          ((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p[l][m] = a * (x * p[l - 1][m] - b * p[l - 2][m]);
    }
  return p;
}

}  // namespace detail

// W(theta, phi) = sum_{L=0}^{2j} sum_M Tr(rho T_LM†) Y_LM(theta, phi)
inline WignerField wigner_sphere(const Matrix& rho, const SpinSystem& sys,
                                 int n_theta = 32, int n_phi = 64) {
  detail::require_state(rho, "wigner_sphere");
  detail::require(rho.rows() == sys.dim, "wigner_sphere: dimension mismatch");
  detail::require(n_theta >= 16 && n_phi >= 32,
                  "wigner_sphere: grid must be at least 16 x 32");
  const int lmax = sys.dim - 1;

  // multipole components rho_LM = Tr(rho T_LM†), M = -L..L stored at index M+L
  std::vector<std::vector<cplx>> comp(lmax + 1);
  for (int l = 0; l <= lmax; ++l) {
    comp[l].assign(2 * l + 1, cplx(0, 0));
    for (int m = -l; m <= l; ++m)
      comp[l][m + l] = hs_inner(tensor_op(sys, l, m), rho);
  }

  WignerField field;
  field.theta.resize(n_theta);
  field.phi.resize(n_phi);
  field.values.resize(n_theta, n_phi);
  for (int i = 0; i < n_theta; ++i)
    field.theta(i) = kPi * i / (n_theta - 1.0);
  for (int k = 0; k < n_phi; ++k) field.phi(k) = 2.0 * kPi * k / n_phi;

  for (int i = 0; i < n_theta; ++i) {
    const auto leg = detail::normalized_legendre_table(lmax, std::cos(field.theta(i)));
    for (int k = 0; k < n_phi; ++k) {
      cplx w(0, 0);
      for (int l = 0; l <= lmax; ++l)
        for (int m = -l; m <= l; ++m) {
          const int am = std::abs(m);
          // Y_{l,-m} = (-1)^m conj(Y_{l,m})
          const double sign = (m < 0 && (am % 2)) ? -1.0 : 1.0;
          const cplx ylm =
              sign * leg[l][am] * std::exp(cplx(0, m * field.phi(k)));
          w += comp[l][m + l] * ylm;
        }
      field.values(i, k) = w.real();
      field.max_imag = std::max(field.max_imag, std::abs(w.imag()));
    }
  }
  detail::check(field.max_imag <= 1e-10,
                "wigner_sphere: field has a non-negligible imaginary part");
  return field;
}

// ---- Dicke-basis structure ----

struct DickePopulations {
  RealVector p;            // populations, basis order m = +j .. -j
  double offdiag_mass = 0; // HS norm of the off-diagonal part
};

inline DickePopulations dicke_populations(const Matrix& rho, const SpinSystem& sys) {
  detail::require_state(rho, "dicke_populations");
  detail::require(rho.rows() == sys.dim, "dicke_populations: dimension mismatch");
  DickePopulations out;
  out.p = rho.diagonal().real();
  Matrix off = rho;
  off.diagonal().setZero();
  out.offdiag_mass = hs_norm(off);
  return out;
}

// ---- bundled report ----

struct MetricBundle {
  double purity = 0;
  double hs_dist_mms = 0;
  RealVector dicke_p;
  double dicke_offdiag = 0;
  double qfi_z = 0;
  QfiProfile qfi_equatorial;
  QfiProfile qfi_isotropy;
  RealVector multipoles;
  int anticoherence = 0;
  std::optional<double> neg;           // set when a cut is requested
  std::optional<double> symmetry_dev;  // set when a group is provided
};

inline MetricBundle compute_metric_bundle(const Matrix& rho, const SpinSystem& sys,
                                          const SymmetryGroup* group = nullptr,
                                          int negativity_cut = 0,
                                          int n_equatorial = 8,
                                          int n_isotropy = 30) {
  detail::require_state(rho, "compute_metric_bundle");
  MetricBundle b;
  b.purity = purity(rho);
  b.hs_dist_mms = hs_distance_mms(rho);
  const DickePopulations dp = dicke_populations(rho, sys);
  b.dicke_p = dp.p;
  b.dicke_offdiag = dp.offdiag_mass;
  b.qfi_z = qfi(rho, collective_spin_ops(sys).sz);
  b.qfi_equatorial = equatorial_qfi(rho, sys, n_equatorial);
  b.qfi_isotropy = isotropic_qfi_check(rho, sys, n_isotropy);
  b.multipoles = multipole_norms(rho, sys);
  b.anticoherence = anticoherence_order(rho, sys);
  if (negativity_cut >= 1) b.neg = negativity(rho, sys, negativity_cut);
  if (group) b.symmetry_dev = symmetry_deviation(rho, *group);
  return b;
}

}  // namespace spinsteady
