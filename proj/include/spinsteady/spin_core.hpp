#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>

#include "common.hpp"

namespace spinsteady {

// Collective-spin algebra on the maximal-spin (Dicke) subspace.
// Basis ordering: m runs from +j down to -j, i.e. row/column 0 is the stretched
// state |j, j>. This makes S+ strictly upper triangular.

struct SpinSystem {
  int n_spins;  // N
  double j;     // N / 2
  int dim;      // N + 1

  static SpinSystem of(int n_spins) {
    detail::require(n_spins >= 1, "SpinSystem: n_spins must be >= 1");
    return {n_spins, n_spins / 2.0, n_spins + 1};
  }

  int index_of_m(double m) const { return static_cast<int>(std::lround(j - m)); }
  double m_of_index(int k) const { return j - k; }
};

struct SpinOps {
  Matrix sx, sy, sz;
};

inline SpinOps collective_spin_ops(const SpinSystem& sys) {
  const int d = sys.dim;
  const double j = sys.j;
  Matrix sp = Matrix::Zero(d, d), sz = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) sz(k, k) = sys.m_of_index(k);
  for (int k = 1; k < d; ++k) {
    const double m = sys.m_of_index(k);  // <m+1|S+|m>
    sp(k - 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  const Matrix sm = sp.adjoint();
  return {(sp + sm) / 2.0, (sp - sm) / cplx(0.0, 2.0), sz};
}

// ---- Clebsch-Gordan (Racah sum, exact integer factorial ratios) ----

namespace detail {

using bigint = boost::multiprecision::cpp_int;
using bigrat = boost::multiprecision::cpp_rational;

inline bigint factorial(long n) {
  bigint f = 1;
  for (long k = 2; k <= n; ++k) f *= k;
  return f;
}

// doubled half-integer; throws if x is not a half-integer on a 1e-9 grid
inline long twice(double x, const char* name) {
  const double t = 2.0 * x;
  const long r = std::lround(t);
  require(std::abs(t - r) < 1e-9, std::string("clebsch_gordan: ") + name +
                                      " is not a half-integer");
  return r;
}

}  // namespace detail

// Condon-Shortley convention (highest-weight coefficient positive). Selection-rule
// violations return exactly 0; inconsistent half-integers throw.
inline double clebsch_gordan(double j1, double m1, double j2, double m2, double J,
                             double M) {
  using detail::bigint;
  using detail::bigrat;
  const long tj1 = detail::twice(j1, "j1"), tm1 = detail::twice(m1, "m1");
  const long tj2 = detail::twice(j2, "j2"), tm2 = detail::twice(m2, "m2");
  const long tJ = detail::twice(J, "J"), tM = detail::twice(M, "M");
  detail::require(tj1 >= 0 && tj2 >= 0 && tJ >= 0, "clebsch_gordan: negative j");
  detail::require(tj1 <= 40 && tj2 <= 40 && tJ <= 80,
                  "clebsch_gordan: j beyond the exact-factorial guard (j <= 20)");
  detail::require((tj1 + tm1) % 2 == 0 && (tj2 + tm2) % 2 == 0 && (tJ + tM) % 2 == 0,
                  "clebsch_gordan: m inconsistent with j (parity)");

  // selection rules
  if (tm1 + tm2 != tM) return 0.0;
  if (std::labs(tm1) > tj1 || std::labs(tm2) > tj2 || std::labs(tM) > tJ) return 0.0;
  if (tJ < std::labs(tj1 - tj2) || tJ > tj1 + tj2) return 0.0;
  if ((tj1 + tj2 + tJ) % 2 != 0) return 0.0;  // coupling parity

  const auto f = [](long twice_val) { return detail::factorial(twice_val / 2); };

  // prefactor (2J+1) * Delta(j1 j2 J) * product of m-dependent factorials
  bigrat pref = bigrat(tJ + 1) * f(tj1 + tj2 - tJ) * f(tj1 - tj2 + tJ) *
                f(-tj1 + tj2 + tJ) / bigrat(detail::factorial((tj1 + tj2 + tJ) / 2 + 1));
  pref *= bigrat(f(tJ + tM)) * f(tJ - tM) * f(tj1 - tm1) * f(tj1 + tm1) * f(tj2 - tm2) *
          f(tj2 + tm2);

  const long kmin =
      std::max({0L, (tj2 - tJ - tm1) / 2, (tj1 - tJ + tm2) / 2});
  const long kmax =
      std::min({(tj1 + tj2 - tJ) / 2, (tj1 - tm1) / 2, (tj2 + tm2) / 2});
  bigrat sum = 0;
  for (long k = kmin; k <= kmax; ++k) {
    bigint den = detail::factorial(k) * detail::factorial((tj1 + tj2 - tJ) / 2 - k) *
                 detail::factorial((tj1 - tm1) / 2 - k) *
                 detail::factorial((tj2 + tm2) / 2 - k) *
                 detail::factorial((tJ - tj2 + tm1) / 2 + k) *
                 detail::factorial((tJ - tj1 - tm2) / 2 + k);
    sum += (k % 2 == 0 ? bigrat(1) : bigrat(-1)) / bigrat(den);
  }
  return std::sqrt(pref.convert_to<double>()) * sum.convert_to<double>();
}

// ---- irreducible tensor operators ----

// T_LM = sqrt((2L+1)/(2j+1)) sum_m C(j,m; L,M | j,m+M) |j,m+M><j,m|.
// Orthonormal under the Hilbert-Schmidt inner product.
inline Matrix tensor_op(const SpinSystem& sys, int L, int M) {
  detail::require(L >= 0 && L <= sys.n_spins, "tensor_op: L out of range [0, 2j]");
  detail::require(std::abs(M) <= L, "tensor_op: |M| > L");
  const int d = sys.dim;
  const double j = sys.j;
  const double scale = std::sqrt((2.0 * L + 1) / d);
  Matrix t = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = sys.m_of_index(k);
    const double mp = m + M;
    if (mp > j + 0.1 || mp < -j - 0.1) continue;
    t(sys.index_of_m(mp), k) = scale * clebsch_gordan(j, m, L, M, j, mp);
  }
  return t;
}

// ---- Dicke isometry ----

struct DickeIsometry {
  int n_spins;
  Matrix map;  // 2^N x (N+1); column k is |j, j-k> in the computational qubit basis
};

// Qubit convention: |0> = spin-up, so |0...0> is the stretched state |j,j>;
// column k spreads over the binomial(N,k) bitstrings of popcount k.
inline DickeIsometry dicke_isometry(int n_spins) {
  detail::require(n_spins >= 1 && n_spins <= 12,
                  "dicke_isometry: n_spins outside [1, 12] memory guard");
  const int nq = 1 << n_spins;
  Matrix v = Matrix::Zero(nq, n_spins + 1);
  std::vector<double> binom(n_spins + 1, 1.0);
  for (int k = 1; k <= n_spins; ++k)
    binom[k] = binom[k - 1] * (n_spins - k + 1) / static_cast<double>(k);
  for (int b = 0; b < nq; ++b) {
    const int k = __builtin_popcount(static_cast<unsigned>(b));
    v(b, k) = 1.0 / std::sqrt(binom[k]);
  }
  return {n_spins, v};
}

}  // namespace spinsteady
