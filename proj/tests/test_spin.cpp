#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <spinsteady/spin_core.hpp>

using namespace spinsteady;

namespace {

// independent Clebsch-Gordan oracle: couple j1 x j2 by lowering from the
// stretched state; each new top |J,J> is the unit vector in the M=J subspace
// orthogonal to all higher-J tops, with the m1 = j1 component taken positive
// (Condon-Shortley)
std::map<std::pair<int, int>, Eigen::VectorXd> coupled_basis(double j1, double j2) {
  const int d1 = static_cast<int>(std::lround(2 * j1)) + 1;
  const int d2 = static_cast<int>(std::lround(2 * j2)) + 1;
  const auto idx = [&](double m1, double m2) {
    return static_cast<int>(std::lround(j1 - m1)) * d2 +
           static_cast<int>(std::lround(j2 - m2));
  };
  // J- on the product space, real matrix elements
  Eigen::MatrixXd jminus = Eigen::MatrixXd::Zero(d1 * d2, d1 * d2);
  for (int a = 0; a < d1; ++a) {
    for (int b = 0; b < d2; ++b) {
      const double m1 = j1 - a, m2 = j2 - b;
      if (m1 > -j1 + 0.5)
        jminus(idx(m1 - 1, m2), idx(m1, m2)) +=
            std::sqrt(j1 * (j1 + 1) - m1 * (m1 - 1));
      if (m2 > -j2 + 0.5)
        jminus(idx(m1, m2 - 1), idx(m1, m2)) +=
            std::sqrt(j2 * (j2 + 1) - m2 * (m2 - 1));
    }
  }
  std::map<std::pair<int, int>, Eigen::VectorXd> out;  // key: (2J, 2M)
  const auto key = [](double jj, double mm) {
    return std::make_pair(static_cast<int>(std::lround(2 * jj)),
                          static_cast<int>(std::lround(2 * mm)));
  };
  for (double jtot = j1 + j2; jtot >= std::abs(j1 - j2) - 0.25; jtot -= 1.0) {
    Eigen::VectorXd top = Eigen::VectorXd::Zero(d1 * d2);
    if (std::abs(jtot - (j1 + j2)) < 0.25) {
      top(idx(j1, j2)) = 1.0;
    } else {
      // basis of the M = jtot subspace minus the span of higher-J tops
      for (int a = 0; a < d1; ++a) {
        const double m1 = j1 - a, m2 = jtot - m1;
        if (m2 < -j2 - 0.25 || m2 > j2 + 0.25) continue;
        Eigen::VectorXd cand = Eigen::VectorXd::Zero(d1 * d2);
        cand(idx(m1, m2)) = 1.0;
        for (double jhi = j1 + j2; jhi > jtot + 0.25; jhi -= 1.0)
          cand -= out[key(jhi, jtot)].dot(cand) * out[key(jhi, jtot)];
        if (cand.norm() > 1e-8) {
          top = cand.normalized();
          break;
        }
      }
      if (top(idx(j1, jtot - j1)) < 0) top = -top;
    }
    out[key(jtot, jtot)] = top;
    Eigen::VectorXd cur = top;
    for (double m = jtot - 1; m >= -jtot - 0.25; m -= 1.0) {
      cur = (jminus * cur).normalized();
      out[key(jtot, m)] = cur;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("spin system indexing", "[spin]") {
  const SpinSystem sys = SpinSystem::of(5);
  REQUIRE(sys.dim == 6);
  REQUIRE(sys.j == Catch::Approx(2.5));
  REQUIRE(sys.m_of_index(0) == Catch::Approx(2.5));   // row 0 holds m = +j
  REQUIRE(sys.m_of_index(5) == Catch::Approx(-2.5));
  for (int k = 0; k < sys.dim; ++k)
    REQUIRE(sys.index_of_m(sys.m_of_index(k)) == k);
  REQUIRE_THROWS_AS(SpinSystem::of(0), std::invalid_argument);
}

TEST_CASE("collective spin operators", "[spin]") {
  for (int n : {1, 2, 5, 8}) {
    const SpinSystem sys = SpinSystem::of(n);
    const SpinOps ops = collective_spin_ops(sys);
    const double j = sys.j;
    const Matrix id = Matrix::Identity(sys.dim, sys.dim);
    const cplx i1(0, 1);

    REQUIRE(hs_norm(Matrix(ops.sx * ops.sy - ops.sy * ops.sx - i1 * ops.sz)) < 1e-12);
    REQUIRE(hs_norm(Matrix(ops.sy * ops.sz - ops.sz * ops.sy - i1 * ops.sx)) < 1e-12);
    REQUIRE(hs_norm(Matrix(ops.sz * ops.sx - ops.sx * ops.sz - i1 * ops.sy)) < 1e-12);
    const Matrix casimir =
        ops.sx * ops.sx + ops.sy * ops.sy + ops.sz * ops.sz - j * (j + 1) * id;
    REQUIRE(hs_norm(casimir) < 1e-12);
    REQUIRE(is_hermitian(ops.sx));
    REQUIRE(is_hermitian(ops.sy));
    REQUIRE(is_hermitian(ops.sz));

    // Sz diagonal descending from +j; S+ strictly upper with ladder elements
    for (int k = 0; k < sys.dim; ++k)
      REQUIRE(std::abs(ops.sz(k, k) - cplx(j - k, 0)) < 1e-14);
    const Matrix sp = ops.sx + i1 * ops.sy;
    for (int r = 0; r < sys.dim; ++r)
      for (int c = 0; c < sys.dim; ++c)
        if (r >= c) REQUIRE(std::abs(sp(r, c)) < 1e-14);
    for (int c = 1; c < sys.dim; ++c) {
      const double m = sys.m_of_index(c);
      REQUIRE(std::abs(sp(c - 1, c) - std::sqrt(j * (j + 1) - m * (m + 1))) < 1e-13);
    }
  }
}

TEST_CASE("clebsch-gordan against ladder-construction oracle", "[spin]") {
  for (auto [j1, j2] : {std::pair<double, double>{0.5, 0.5},
                        {1.0, 0.5},
                        {1.5, 1.0},
                        {2.0, 2.0},
                        {2.5, 1.5}}) {
    const auto basis = coupled_basis(j1, j2);
    const int d2 = static_cast<int>(std::lround(2 * j2)) + 1;
    for (const auto& [jm, vec] : basis) {
      const double jtot = jm.first / 2.0, mtot = jm.second / 2.0;
      for (double m1 = -j1; m1 <= j1 + 0.25; m1 += 1.0) {
        const double m2 = mtot - m1;
        if (m2 < -j2 - 0.25 || m2 > j2 + 0.25) continue;
        const int row = static_cast<int>(std::lround(j1 - m1)) * d2 +
                        static_cast<int>(std::lround(j2 - m2));
        const double got = clebsch_gordan(j1, m1, j2, m2, jtot, mtot);
        REQUIRE(std::abs(got - vec(row)) < 1e-13);
      }
    }
  }
}

TEST_CASE("clebsch-gordan special values and selection rules", "[spin]") {
  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE(clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) == Catch::Approx(s));
  REQUIRE(clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0, 0) == Catch::Approx(-s));
  REQUIRE(clebsch_gordan(0.5, 0.5, 0.5, -0.5, 1, 0) == Catch::Approx(s));
  REQUIRE(clebsch_gordan(0.5, 0.5, 0.5, 0.5, 1, 1) == Catch::Approx(1.0));
  REQUIRE(clebsch_gordan(1, 1, 1, -1, 0, 0) == Catch::Approx(1.0 / std::sqrt(3.0)));
  REQUIRE(clebsch_gordan(1, 0, 1, 0, 0, 0) == Catch::Approx(-1.0 / std::sqrt(3.0)));
  REQUIRE(clebsch_gordan(1, 0, 1, 0, 2, 0) == Catch::Approx(std::sqrt(2.0 / 3.0)));

  REQUIRE(clebsch_gordan(1, 1, 1, 1, 2, 1) == 0.0);      // M != m1 + m2
  REQUIRE(clebsch_gordan(1, 1, 1, 1, 3, 2) == 0.0);      // J > j1 + j2
  REQUIRE(clebsch_gordan(2, 0, 0.5, 0.5, 0.5, 0.5) == 0.0);  // J < |j1 - j2|
  REQUIRE_THROWS_AS(clebsch_gordan(30, 0, 30, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("irreducible tensor operators", "[spin]") {
  const SpinSystem sys = SpinSystem::of(4);
  const SpinOps ops = collective_spin_ops(sys);

  // orthonormal basis of operator space
  std::vector<Matrix> basis;
  for (int l = 0; l <= 2 * 2; ++l)
    for (int m = -l; m <= l; ++m) basis.push_back(tensor_op(sys, l, m));
  REQUIRE(basis.size() == 25);
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b) {
      const cplx o = hs_inner(basis[a], basis[b]);
      REQUIRE(std::abs(o - (a == b ? cplx(1, 0) : cplx(0, 0))) < 1e-12);
    }

  // T00 is the normalized identity, T10 is aligned with Sz
  REQUIRE(hs_norm(Matrix(basis[0] - Matrix::Identity(5, 5) / std::sqrt(5.0))) <
          1e-13);
  const Matrix t10 = tensor_op(sys, 1, 0);
  REQUIRE(std::abs(std::abs(hs_inner(t10, ops.sz)) - hs_norm(ops.sz)) < 1e-12);

  // adjoint symmetry T_LM† = (-1)^M T_{L,-M}
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) {
      const Matrix lhs = tensor_op(sys, l, m).adjoint();
      const Matrix rhs = ((m % 2 == 0) ? 1.0 : -1.0) * tensor_op(sys, l, -m);
      REQUIRE(hs_norm(Matrix(lhs - rhs)) < 1e-12);
    }
}

TEST_CASE("dicke isometry", "[spin]") {
  for (int n : {2, 3, 4}) {
    const SpinSystem sys = SpinSystem::of(n);
    const DickeIsometry iso = dicke_isometry(n);
    const long full = 1L << n;
    REQUIRE(iso.map.rows() == full);
    REQUIRE(iso.map.cols() == sys.dim);
    REQUIRE(hs_norm(Matrix(iso.map.adjoint() * iso.map -
                           Matrix::Identity(sys.dim, sys.dim))) < 1e-13);

    // columns live on fixed-excitation-number bitstrings with flat amplitudes
    for (int c = 0; c < sys.dim; ++c) {
      const int k = static_cast<int>(std::lround(sys.j - sys.m_of_index(c)));
      long support = 0;
      double choose = 1;
      for (int t = 0; t < k; ++t) choose = choose * (n - t) / (t + 1);
      for (long b = 0; b < full; ++b) {
        const double a = std::abs(iso.map(b, c));
        if (a > 1e-14) {
          ++support;
          REQUIRE(std::abs(a - 1.0 / std::sqrt(choose)) < 1e-13);
        }
      }
      REQUIRE(support == static_cast<long>(std::lround(choose)));
    }

    // intertwines the collective spin with the sum of local Paulis
    Matrix half[3] = {Matrix(2, 2), Matrix(2, 2), Matrix(2, 2)};
    half[0] << 0, 0.5, 0.5, 0;
    half[1] << 0, cplx(0, -0.5), cplx(0, 0.5), 0;
    half[2] << 0.5, 0, 0, -0.5;
    const SpinOps ops = collective_spin_ops(sys);
    const Matrix coll[3] = {ops.sx, ops.sy, ops.sz};
    for (int i = 0; i < 3; ++i) {
      Matrix big = Matrix::Zero(full, full);
      for (int site = 0; site < n; ++site) {
        Matrix term = Matrix::Identity(1, 1);
        for (int s2 = 0; s2 < n; ++s2)
          term = kron(term, s2 == site ? half[i] : Matrix::Identity(2, 2));
        big += term;
      }
      REQUIRE(hs_norm(Matrix(big * iso.map - iso.map * coll[i])) < 1e-12);
    }
  }
  REQUIRE_THROWS_AS(dicke_isometry(13), std::invalid_argument);
  REQUIRE_THROWS_AS(dicke_isometry(0), std::invalid_argument);
}
