#include <boost/math/quadrature/exp_sinh.hpp>
#include <catch2/catch_amalgamated.hpp>
#include <random>
#include <spinsteady/liouville.hpp>
#include <spinsteady/spin_core.hpp>

using namespace spinsteady;

namespace {

Matrix random_matrix(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = cplx(g(rng), g(rng));
  return m;
}

// direct right-hand side of the master equation, no vectorization involved
Matrix me_rhs(const Matrix& h, const std::vector<std::pair<Matrix, double>>& diss,
              const Matrix& rho) {
  Matrix out = cplx(0, -1) * (h * rho - rho * h);
  for (const auto& [k, rate] : diss) {
    const Matrix kdk = k.adjoint() * k;
    out += rate * (2.0 * k * rho * k.adjoint() - kdk * rho - rho * kdk);
  }
  return out;
}

}  // namespace

TEST_CASE("vectorization identities", "[liouville]") {
  std::mt19937_64 rng(11);
  const int d = 6;
  const Matrix a = random_matrix(d, rng), b = random_matrix(d, rng),
               rho = random_matrix(d, rng);
  REQUIRE(hs_norm(Matrix(unvec(vec(rho), d) - rho)) < 1e-15);
  // column-stacking: vec(A rho B) = (B^T (x) A) vec(rho)
  const Vector lhs = vec(Matrix(a * rho * b));
  const Vector rhs = kron(b.transpose(), a) * vec(rho);
  REQUIRE((lhs - rhs).norm() < 1e-12);
  REQUIRE(hs_norm(Matrix(Matrix(skron(a.sparseView(), b.sparseView())) - kron(a, b))) <
          1e-12);
}

TEST_CASE("lindblad superoperator against direct master equation", "[liouville]") {
  std::mt19937_64 rng(12);
  const int d = 7;
  const Matrix h = random_hermitian(d, rng);
  std::vector<std::pair<Matrix, double>> diss;
  diss.emplace_back(random_matrix(d, rng), 0.7);
  diss.emplace_back(random_matrix(d, rng), 1.3);

  const SuperOperator lv = lindblad_superop(h, diss);
  REQUIRE_FALSE(lv.is_sparse);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix rho = random_matrix(d, rng);
    const Matrix got = lv.apply_matrix(rho);
    const Matrix want = me_rhs(h, diss, rho);
    REQUIRE(hs_norm(Matrix(got - want)) < 1e-11 * std::max(1.0, hs_norm(want)));
    REQUIRE(std::abs(got.trace()) < 1e-11);  // trace preservation
  }
  REQUIRE_THROWS_AS(lindblad_superop(random_matrix(d, rng), diss),
                    std::invalid_argument);  // non-Hermitian h
  diss[0].second = -1;
  REQUIRE_THROWS_AS(lindblad_superop(h, diss), std::invalid_argument);
}

TEST_CASE("auxiliary lowering operators", "[liouville]") {
  SECTION("truncated boson") {
    const int t = 5;
    const auto ops = aux_lowering_ops({AuxSpec::boson(t, 1, 0.5, 0.1)});
    const Matrix& a = ops[0];
    REQUIRE(a.rows() == t);
    const Matrix n = a.adjoint() * a;
    for (int k = 0; k < t; ++k) REQUIRE(std::abs(n(k, k) - cplx(k, 0)) < 1e-14);
    // truncation leaves [a, a†] = I - t |t-1><t-1|
    Matrix comm_expect = Matrix::Identity(t, t);
    comm_expect(t - 1, t - 1) = 1.0 - t;
    REQUIRE(hs_norm(Matrix(a * a.adjoint() - n - comm_expect)) < 1e-13);
  }

  SECTION("two-level") {
    const auto ops = aux_lowering_ops({AuxSpec::twolevel(1, 0.5, 0.1)});
    const Matrix& s = ops[0];
    REQUIRE(s.rows() == 2);
    REQUIRE(hs_norm(Matrix(s * s)) == 0.0);
    REQUIRE(hs_norm(Matrix(s * s.adjoint() + s.adjoint() * s -
                           Matrix::Identity(2, 2))) < 1e-14);
  }

  SECTION("fermions anticommute across modes") {
    const std::vector<AuxSpec> aux = {AuxSpec::fermion(1, 0.5, 0.1),
                                      AuxSpec::fermion(1.5, 0.5, 0.1),
                                      AuxSpec::fermion(2, 0.5, 0.1)};
    const auto ops = aux_lowering_ops(aux);
    const Matrix id = Matrix::Identity(8, 8);
    for (std::size_t i = 0; i < ops.size(); ++i)
      for (std::size_t j = 0; j < ops.size(); ++j) {
        const Matrix acom = ops[i] * ops[j].adjoint() + ops[j].adjoint() * ops[i];
        REQUIRE(hs_norm(Matrix(acom - (i == j ? id : Matrix(Matrix::Zero(8, 8))))) <
                1e-13);
        REQUIRE(hs_norm(Matrix(ops[i] * ops[j] + ops[j] * ops[i])) < 1e-13);
      }
  }

  SECTION("bosons commute across modes") {
    const std::vector<AuxSpec> aux = {AuxSpec::boson(3, 1, 0.5, 0.1),
                                      AuxSpec::boson(3, 1, 0.5, 0.1)};
    const auto ops = aux_lowering_ops(aux);
    REQUIRE(hs_norm(Matrix(ops[0] * ops[1] - ops[1] * ops[0])) == 0.0);
    REQUIRE(hs_norm(Matrix(ops[0] * ops[1].adjoint() - ops[1].adjoint() * ops[0])) ==
            0.0);
  }
}

TEST_CASE("embedding generator against direct master equation", "[liouville]") {
  std::mt19937_64 rng(13);
  const SpinSystem sys = SpinSystem::of(2);
  const SpinOps s = collective_spin_ops(sys);
  const std::vector<AuxSpec> aux = {AuxSpec::boson(3, 1.0, 0.4, 0.25),
                                    AuxSpec::twolevel(1.3, 0.6, 0.3)};
  const Matrix h_s = Matrix(0.8 * s.sz * s.sz);
  const EmbeddingModel model = EmbeddingModel::of(sys, h_s, {s.sx, s.sy}, aux);
  const SuperOperator lv = build_embedding(model);
  REQUIRE(lv.dim == 3 * 3 * 2);
  REQUIRE_FALSE(lv.is_sparse);

  // assemble H and the damped jumps in the test, straight from the definition
  const auto a_ops = aux_lowering_ops(aux);
  const Matrix id_a = Matrix::Identity(6, 6), id_s = Matrix::Identity(3, 3);
  Matrix h = kron(h_s, id_a);
  std::vector<std::pair<Matrix, double>> diss;
  const Matrix couplings[2] = {s.sx, s.sy};
  for (int mu = 0; mu < 2; ++mu) {
    h += aux[mu].omega * kron(id_s, Matrix(a_ops[mu].adjoint() * a_ops[mu]));
    h += aux[mu].g * (kron(couplings[mu], Matrix(a_ops[mu].adjoint())) +
                      kron(Matrix(couplings[mu].adjoint()), a_ops[mu]));
    diss.emplace_back(kron(id_s, a_ops[mu]), aux[mu].kappa);
  }
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix rho = random_state(lv.dim, rng);
    REQUIRE(hs_norm(Matrix(lv.apply_matrix(rho) - me_rhs(h, diss, rho))) < 1e-11);
  }
}

TEST_CASE("sparse embedding path matches the direct master equation", "[liouville]") {
  std::mt19937_64 rng(14);
  const SpinSystem sys = SpinSystem::of(2);
  const SpinOps s = collective_spin_ops(sys);
  const std::vector<AuxSpec> aux = {AuxSpec::boson(5, 1.0, 0.4, 0.2),
                                    AuxSpec::boson(5, 1.0, 0.7, 0.2)};
  const EmbeddingModel model =
      EmbeddingModel::of(sys, Matrix(0.3 * s.sz), {s.sx, s.sz}, aux);
  const SuperOperator lv = build_embedding(model);
  REQUIRE(lv.dim == 75);
  REQUIRE(lv.is_sparse);  // 75 > 64 forces the sparse representation

  const auto a_ops = aux_lowering_ops(aux);
  const Matrix id_a = Matrix::Identity(25, 25), id_s = Matrix::Identity(3, 3);
  Matrix h = kron(Matrix(0.3 * s.sz), id_a);
  std::vector<std::pair<Matrix, double>> diss;
  const Matrix couplings[2] = {s.sx, s.sz};
  for (int mu = 0; mu < 2; ++mu) {
    h += aux[mu].omega * kron(id_s, Matrix(a_ops[mu].adjoint() * a_ops[mu]));
    h += aux[mu].g * (kron(couplings[mu], Matrix(a_ops[mu].adjoint())) +
                      kron(Matrix(couplings[mu].adjoint()), a_ops[mu]));
    diss.emplace_back(kron(id_s, a_ops[mu]), aux[mu].kappa);
  }
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix rho = random_state(75, rng);
    const Matrix got = lv.apply_matrix(rho);
    REQUIRE(hs_norm(Matrix(got - me_rhs(h, diss, rho))) < 1e-10);
    REQUIRE(std::abs(got.trace()) < 1e-10);
  }
}

TEST_CASE("embedding dimension cap", "[liouville]") {
  const SpinSystem sys = SpinSystem::of(6);
  const SpinOps s = collective_spin_ops(sys);
  const std::vector<AuxSpec> aux = {AuxSpec::boson(9, 1, 0.5, 0.1),
                                    AuxSpec::boson(9, 1, 0.5, 0.1),
                                    AuxSpec::boson(9, 1, 0.5, 0.1)};
  const EmbeddingModel model =
      EmbeddingModel::of(sys, Matrix(s.sz), {s.sx, s.sy, s.sz}, aux);
  REQUIRE(model.total_dim() == 7 * 729);
  REQUIRE_THROWS_AS(build_embedding(model), std::invalid_argument);
}

TEST_CASE("partial trace over the auxiliaries", "[liouville]") {
  std::mt19937_64 rng(15);
  const SpinSystem sys = SpinSystem::of(3);
  const SpinOps s = collective_spin_ops(sys);
  const std::vector<AuxSpec> aux = {AuxSpec::boson(3, 1, 0.5, 0.1),
                                    AuxSpec::twolevel(1, 0.5, 0.1)};
  const EmbeddingModel model = EmbeddingModel::of(sys, Matrix(s.sz), {s.sx, s.sy}, aux);
  const Matrix rho_s = random_state(4, rng), rho_a = random_state(6, rng);
  REQUIRE(hs_norm(Matrix(partial_trace_aux(kron(rho_s, rho_a), model) - rho_s)) <
          1e-13);
  const Matrix rho = random_state(24, rng);
  REQUIRE(std::abs(partial_trace_aux(rho, model).trace() - cplx(1, 0)) < 1e-13);
}

TEST_CASE("bath correlation function", "[liouville]") {
  const AuxSpec aux = AuxSpec::boson(3, 1.7, 0.45, 0.31);
  REQUIRE(std::abs(correlation_function(aux, 0.0) - cplx(0.31 * 0.31, 0)) < 1e-15);

  // half-line integral against adaptive quadrature of the definition
  boost::math::quadrature::exp_sinh<double> integrator;
  const auto re = [&](double t) { return correlation_function(aux, t).real(); };
  const auto im = [&](double t) { return correlation_function(aux, t).imag(); };
  const cplx quad(integrator.integrate(re, 1e-13), integrator.integrate(im, 1e-13));
  REQUIRE(std::abs(quad - correlation_integral(aux)) < 1e-11);
  REQUIRE(std::abs(correlation_integral(aux) -
                   cplx(0.31 * 0.31, 0) / cplx(0.45, 1.7)) < 1e-15);
}
