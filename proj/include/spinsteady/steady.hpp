#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "common.hpp"
#include "liouville.hpp"

namespace spinsteady {

// Steady-state solvers. Dense path: full eigendecomposition of the superoperator,
// kernel extraction, projection of the identity when the kernel is degenerate.
// Sparse path: time-propagation burn-in alternated with restarted Krylov
// minimal-residual polishing (matrix-free; direct factorization of these
// Liouvillians is not memory-feasible at the sizes we need).

enum class SteadyMethod { dense_eig, sparse_shift_solve };

struct SteadyStateReport {
  Matrix rho_ss;
  int nullity = 1;
  double residual = 0;  // |L vec(rho_ss)|_2 after post-processing
  SteadyMethod method = SteadyMethod::dense_eig;
  std::vector<int> truncation_used;  // filled by the adaptive embedding driver
};

struct SteadyOpts {
  double residual_tol = 1e-9;
  double negativity_tol = 1e-9;   // eigenvalue floor; loosen for Redfield generators
  double null_rel_tol = 1e-10;    // dense kernel cut, relative to the spectral scale
  std::uint64_t seed = 0x73746561ULL;
  long max_matvecs = 4'000'000;   // sparse-path budget
  int krylov_dim = 40;
  bool force_sparse = false;      // run the iterative path regardless of size
};

namespace detail {

// ---- dense eigendecomposition (LAPACK zgeev) ----

struct DenseEig {
  Vector w;
  Matrix vr;
};

inline DenseEig dense_eigendecomposition(Matrix a) {
  const int n = static_cast<int>(a.rows());
  DenseEig out;
  out.w.resize(n);
  out.vr.resize(n, n);
  Vector vl(1);
  const int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n,
                                 out.w.data(), vl.data(), 1, out.vr.data(), n);
  check(info == 0, "dense eigendecomposition failed (zgeev info = " +
                       std::to_string(info) + ")");
  return out;
}

// ---- adaptive RK45 (Dormand-Prince) on x' = L x ----

struct Rk45Opts {
  double rtol = 1e-8;
  double atol = 1e-13;
  double dt_max = std::numeric_limits<double>::infinity();
  long max_evals = 50'000'000;
};

template <class Apply>
inline void integrate_rk45(const Apply& f, Vector& y, double t_final,
                           const Rk45Opts& opt, long& evals) {
  if (t_final <= 0) return;
  static const double A[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  // difference between 5th- and 4th-order weights
  static const double E[7] = {71.0 / 57600,      0.0,         -71.0 / 16695,
                              71.0 / 1920,       -17253.0 / 339200,
                              22.0 / 525,        -1.0 / 40};

  const long n = y.size();
  std::vector<Vector> k(7, Vector(n));
  k[0] = f(y);
  ++evals;
  double dt = opt.dt_max;
  {
    const double d0 = y.norm(), d1 = k[0].norm();
    if (d1 > 1e-300) dt = std::min(dt, 0.01 * std::max(d0, 1e-300) / d1);
    dt = std::min(dt, t_final);
  }
  double t = 0;
  Vector ytmp(n), ynew(n), err(n);
  while (t < t_final * (1.0 - 1e-14)) {
    dt = std::min(dt, t_final - t);
    check(dt > 1e-12 * std::max(t_final, 1.0),
          "integrate_rk45: step size underflow (stiff system?)");
    for (int s = 1; s < 7; ++s) {
      ytmp = y;
      for (int j = 0; j < s; ++j) ytmp += (dt * A[s][j]) * k[j];
      if (s == 6) ynew = ytmp;  // 5th-order solution uses row 6 of A
      k[s] = f(ytmp);
      ++evals;
    }
    check(evals <= opt.max_evals, "integrate_rk45: evaluation budget exhausted");
    err.setZero();
    for (int s = 0; s < 7; ++s)
      if (E[s] != 0.0) err += (dt * E[s]) * k[s];
    const double scale =
        opt.atol + opt.rtol * std::max(y.norm(), ynew.norm());
    const double ratio = err.norm() / scale;
    if (ratio <= 1.0) {
      t += dt;
      y.swap(ynew);
      k[0] = k[6];  // FSAL: stage 7 is f at the accepted point
    }
    const double grow = ratio > 0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
    dt *= std::clamp(grow, 0.2, 5.0);
    dt = std::min(dt, opt.dt_max);
  }
}

// ---- sparse-path building blocks ----

inline double spectral_radius_estimate(const SuperOperator& lv, std::uint64_t seed,
                                       long& matvecs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Vector x(lv.size());
  for (long i = 0; i < x.size(); ++i) x(i) = cplx(dist(rng), dist(rng));
  x.normalize();
  double rho = 1.0;
  for (int it = 0; it < 12; ++it) {
    Vector y = lv.apply(x);
    ++matvecs;
    rho = y.norm();
    if (rho < 1e-300) return 1.0;
    x = y / rho;
  }
  return 1.15 * rho;
}

// fixed-step RK4 burn-in: cheap contraction toward the slow subspace
inline void rk4_burn(const SuperOperator& lv, Vector& x, long steps, double h,
                     long& matvecs, long max_matvecs) {
  for (long s = 0; s < steps; ++s) {
    const Vector k1 = lv.apply(x);
    const Vector k2 = lv.apply(x + (0.5 * h) * k1);
    const Vector k3 = lv.apply(x + (0.5 * h) * k2);
    const Vector k4 = lv.apply(x + h * k3);
    matvecs += 4;
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    x.normalize();
    check(matvecs <= max_matvecs,
          "steady_state: matvec budget exhausted during burn-in");
  }
}

// one round of restarted Krylov minimal-residual polish; returns |L x| / |x|
inline double krylov_polish(const SuperOperator& lv, Vector& x, int m,
                            long& matvecs) {
  const long n = lv.size();
  m = static_cast<int>(std::min<long>(m, n));
  Matrix v(n, m), w(n, m);
  x.normalize();
  v.col(0) = x;
  for (int kcol = 0; kcol < m; ++kcol) {
    Vector t = lv.apply(v.col(kcol));
    ++matvecs;
    w.col(kcol) = t;
    if (kcol + 1 == m) break;
    for (int rep = 0; rep < 2; ++rep)  // two passes of modified Gram-Schmidt
      for (int j = 0; j <= kcol; ++j) t -= v.col(j).dot(t) * v.col(j);
    const double tn = t.norm();
    if (tn < 1e-14) {  // Krylov space closed early; shrink the basis
      v.conservativeResize(Eigen::NoChange, kcol + 1);
      w.conservativeResize(Eigen::NoChange, kcol + 1);
      m = kcol + 1;
      break;
    }
    v.col(kcol + 1) = t / tn;
  }
  // minimize |W y| over unit y via QR + SVD of the small triangle; the normal
  // equations W†W would square the conditioning and bottom out near eps·|L|²,
  // far above the residuals we need to resolve
  Eigen::HouseholderQR<Matrix> qr(w);
  const Matrix r = qr.matrixQR()
                       .topRows(m)
                       .template triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeFullV);
  x = v * svd.matrixV().col(m - 1);  // singular values sorted descending
  x.normalize();
  const double resid = lv.apply(x).norm();  // honest residual, not an estimate
  ++matvecs;
  return resid;
}

}  // namespace detail

// ---- post-processing shared by both paths ----

namespace detail {

inline SteadyStateReport finalize_steady_state(const SuperOperator& lv, Vector x,
                                               int nullity, SteadyMethod method,
                                               const SteadyOpts& opt) {
  Matrix rho = unvec(x, lv.dim);
  const cplx tr = rho.trace();
  check(std::abs(tr) > 1e-12 * std::max(1.0, hs_norm(rho)),
        "steady_state: stationary vector is traceless; cannot normalize");
  // solvers return the kernel ray with an arbitrary global phase; rotating it
  // onto the positive-trace representative keeps the hermitization lossless
  rho *= std::conj(tr) / std::abs(tr);
  rho = 0.5 * (rho + rho.adjoint().eval());
  rho /= rho.trace();

  // Roundoff-scale negative eigenvalues are left in place: clipping them moves
  // the state off the kernel by |L| * (clip size), wrecking the residual bound.
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  const RealVector& ev = es.eigenvalues();
  double neg_sum = 0;
  for (int k = 0; k < ev.size(); ++k) neg_sum += std::min(0.0, ev(k));
  check(ev.minCoeff() >= -opt.negativity_tol && -neg_sum <= opt.negativity_tol,
        "steady_state: result has non-negligible negative eigenvalues (min " +
            std::to_string(ev.minCoeff()) + ")");

  SteadyStateReport rep;
  rep.rho_ss = std::move(rho);
  rep.nullity = nullity;
  rep.method = method;
  rep.residual = lv.apply(vec(rep.rho_ss)).norm();
  return rep;
}

}  // namespace detail

inline SteadyStateReport steady_state(const SuperOperator& lv,
                                      const SteadyOpts& opt = {}) {
  detail::require(lv.dim >= 2, "steady_state: dimension must be >= 2");
  const long n = lv.size();

  if (!lv.is_sparse && !opt.force_sparse) {
    // ---- dense path ----
    detail::DenseEig eig = detail::dense_eigendecomposition(lv.dense);
    const double scale = eig.w.cwiseAbs().maxCoeff();
    std::vector<int> kernel;
    for (long k = 0; k < n; ++k)
      if (std::abs(eig.w(k)) < opt.null_rel_tol * std::max(scale, 1e-300))
        kernel.push_back(static_cast<int>(k));
    detail::check(!kernel.empty(),
                  "steady_state: no stationary state found (nullity 0)");
    const int nullity = static_cast<int>(kernel.size());

    Vector x;
    if (nullity == 1) {
      x = eig.vr.col(kernel[0]);
    } else {
      // orthonormalize the kernel block, project vec(identity) onto it
      Matrix k(n, nullity);
      for (int c = 0; c < nullity; ++c) k.col(c) = eig.vr.col(kernel[c]);
      Eigen::HouseholderQR<Matrix> qr(k);
      Matrix q = qr.householderQ() * Matrix::Identity(n, nullity);
      const Vector id_vec = vec(Matrix::Identity(lv.dim, lv.dim));
      x = q * (q.adjoint() * id_vec);
      detail::check(x.norm() > 1e-12,
                    "steady_state: stationary subspace orthogonal to the identity");
    }

    SteadyStateReport rep = detail::finalize_steady_state(
        lv, x, nullity, SteadyMethod::dense_eig, opt);
    if (rep.residual > opt.residual_tol) {
      // a couple of rounds of inverse iteration through a tiny-shift LU
      const double sigma = 1e-12 * std::max(scale, 1.0);
      Matrix shifted = lv.dense;
      shifted.diagonal().array() += cplx(sigma, 0);
      Eigen::PartialPivLU<Matrix> lu(shifted);
      Vector y = vec(rep.rho_ss);
      for (int it = 0; it < 3 && rep.residual > opt.residual_tol; ++it) {
        y = lu.solve(y);
        y /= y.norm();
        rep = detail::finalize_steady_state(lv, y, nullity,
                                            SteadyMethod::dense_eig, opt);
      }
    }
    detail::check(rep.residual <= opt.residual_tol,
                  "steady_state: dense path residual " +
                      std::to_string(rep.residual) + " exceeds tolerance");
    return rep;
  }

  // ---- sparse path: burn-in + Krylov polish, growing horizons ----
  long matvecs = 0;
  double rho_est =
      detail::spectral_radius_estimate(lv, opt.seed ^ 0x9e3779b97f4a7c15ULL, matvecs);
  const double dt = 2.0 / rho_est;

  Vector x = vec(Matrix::Identity(lv.dim, lv.dim));
  x.normalize();
  // target a relative residual; |tr| >= |x| for unit-HS-norm states makes the
  // absolute residual after trace normalization at least as good
  const double target = 0.5 * opt.residual_tol;
  // Short burns only damp the fast (aux-decay) modes; the restarted polish does
  // the actual convergence work and restarts keep helping even when the slow
  // subspace exceeds the Krylov dimension. Burns grow geometrically on stall.
  long burn_steps = 50;
  double resid = std::numeric_limits<double>::infinity();
  while (true) {
    detail::rk4_burn(lv, x, burn_steps, dt, matvecs, opt.max_matvecs);
    for (int round = 0; round < 60; ++round) {
      const double before = resid;
      resid = detail::krylov_polish(lv, x, opt.krylov_dim, matvecs);
      detail::check(matvecs <= opt.max_matvecs,
                    "steady_state: matvec budget exhausted during polish");
      if (resid < target || resid > 0.9 * before) break;  // converged or stalled
    }
    if (resid < target) break;
    detail::check(matvecs <= opt.max_matvecs,
                  "steady_state: iterative solver did not converge within the "
                  "matvec budget (relative residual " +
                      std::to_string(resid) + ")");
    burn_steps = std::min(burn_steps * 4, 4000L);
  }
  SteadyStateReport rep = detail::finalize_steady_state(
      lv, x, 1, SteadyMethod::sparse_shift_solve, opt);
  detail::check(rep.residual <= opt.residual_tol,
                "steady_state: sparse path residual " +
                    std::to_string(rep.residual) + " exceeds tolerance");
  return rep;
}

// ---- independent time-evolution oracle ----

// Adaptive RK45 propagation of rho0 to t_final. Deliberately shares no code with
// the steady-state kernel extraction: used to cross-check it.
inline Matrix evolve_oracle(const SuperOperator& lv, const Matrix& rho0,
                            double t_final, double dt_max) {
  detail::require(rho0.rows() == lv.dim && rho0.cols() == lv.dim,
                  "evolve_oracle: state dimension mismatch");
  detail::require(is_hermitian(rho0, 1e-10), "evolve_oracle: rho0 not Hermitian");
  detail::require(std::abs(rho0.trace() - cplx(1, 0)) <= 1e-8,
                  "evolve_oracle: rho0 not unit trace");
  detail::require(t_final >= 0, "evolve_oracle: t_final < 0");
  detail::require(dt_max > 0, "evolve_oracle: dt_max <= 0");

  Vector y = vec(rho0);
  detail::Rk45Opts ro;
  ro.rtol = 1e-10;
  ro.atol = 1e-13;
  ro.dt_max = dt_max;
  long evals = 0;
  detail::integrate_rk45([&lv](const Vector& v) { return lv.apply(v); }, y, t_final,
                         ro, evals);
  return unvec(y, lv.dim);
}

// ---- uniqueness certificate ----

// Dense: exact kernel dimension from the full spectrum. Sparse: converge from two
// seeded random states; distinct limits witness a degenerate stationary subspace.
inline std::pair<bool, int> uniqueness_certificate(const SuperOperator& lv,
                                                   const SteadyOpts& opt = {}) {
  if (!lv.is_sparse && !opt.force_sparse) {
    detail::DenseEig eig = detail::dense_eigendecomposition(lv.dense);
    const double scale = eig.w.cwiseAbs().maxCoeff();
    int nullity = 0;
    for (long k = 0; k < lv.size(); ++k)
      if (std::abs(eig.w(k)) < opt.null_rel_tol * std::max(scale, 1e-300)) ++nullity;
    return {nullity == 1, nullity};
  }

  std::mt19937_64 rng(opt.seed);
  Matrix limits[2];
  for (int trial = 0; trial < 2; ++trial) {
    long matvecs = 0;
    double rho_est = detail::spectral_radius_estimate(
        lv, opt.seed + 17 * (trial + 1), matvecs);
    Vector x = vec(random_state(lv.dim, rng));
    x.normalize();
    const double dt = 2.0 / rho_est;
    long burn_steps = 50;
    double resid = std::numeric_limits<double>::infinity();
    while (resid >= opt.residual_tol) {
      detail::rk4_burn(lv, x, burn_steps, dt, matvecs, opt.max_matvecs);
      for (int round = 0; round < 60; ++round) {
        const double before = resid;
        resid = detail::krylov_polish(lv, x, opt.krylov_dim, matvecs);
        if (resid < opt.residual_tol || resid > 0.9 * before) break;
      }
      detail::check(matvecs <= opt.max_matvecs,
                    "uniqueness_certificate: matvec budget exhausted");
      burn_steps = std::min(burn_steps * 4, 4000L);
    }
    Matrix rho = unvec(x, lv.dim);
    const cplx tr = rho.trace();
    if (std::abs(tr) < 1e-12 * std::max(1.0, hs_norm(rho)))
      return {false, 2};  // a traceless stationary direction: kernel not simple
    rho *= std::conj(tr) / std::abs(tr);
    rho = 0.5 * (rho + rho.adjoint().eval());
    limits[trial] = rho / rho.trace();
  }
  const bool unique = hs_norm(Matrix(limits[0] - limits[1])) < 1e-7;
  return {unique, unique ? 1 : 2};
}

}  // namespace spinsteady
