#pragma once

#include <utility>
#include <vector>

#include "common.hpp"
#include "spin_core.hpp"

namespace spinsteady {

// Lindblad superoperators with two rate conventions kept explicit: the spin-only
// generator carries gamma_mu/2 per dissipator, the embedding carries kappa_mu
// (no 1/2). Dissipator throughout: D_K[rho] = 2 K rho K† - {K†K, rho}.

// ---- auxiliary systems ----

enum class AuxKind { boson, fermion, twolevel };

inline const char* to_string(AuxKind k) {
  switch (k) {
    case AuxKind::boson: return "boson";
    case AuxKind::fermion: return "fermion";
    default: return "twolevel";
  }
}

struct AuxSpec {
  AuxKind kind;
  int truncation;  // boson ladder levels; ignored for fermion/twolevel
  double omega;
  double kappa;
  double g;

  static AuxSpec boson(int truncation, double omega, double kappa, double g) {
    detail::require(truncation >= 2, "AuxSpec: boson truncation must be >= 2");
    detail::require(kappa > 0, "AuxSpec: kappa must be > 0");
    return {AuxKind::boson, truncation, omega, kappa, g};
  }
  static AuxSpec fermion(double omega, double kappa, double g) {
    detail::require(kappa > 0, "AuxSpec: kappa must be > 0");
    return {AuxKind::fermion, 2, omega, kappa, g};
  }
  static AuxSpec twolevel(double omega, double kappa, double g) {
    detail::require(kappa > 0, "AuxSpec: kappa must be > 0");
    return {AuxKind::twolevel, 2, omega, kappa, g};
  }

  int dim() const { return kind == AuxKind::boson ? truncation : 2; }

  bool identical_to(const AuxSpec& o) const {
    return kind == o.kind && dim() == o.dim() && std::abs(omega - o.omega) <= 1e-12 &&
           std::abs(kappa - o.kappa) <= 1e-12 && std::abs(g - o.g) <= 1e-12;
  }
};

struct EmbeddingModel {
  SpinSystem sys;
  Matrix h_s;
  std::vector<Matrix> couplings;  // L_mu on the spin space
  std::vector<AuxSpec> aux;       // same length

  static EmbeddingModel of(SpinSystem sys, Matrix h_s, std::vector<Matrix> couplings,
                           std::vector<AuxSpec> aux) {
    detail::require(!couplings.empty() && couplings.size() == aux.size(),
                    "EmbeddingModel: need |couplings| = |aux| >= 1");
    detail::require(h_s.rows() == sys.dim && h_s.cols() == sys.dim,
                    "EmbeddingModel: h_s dimension mismatch");
    detail::require(is_hermitian(h_s, 1e-12), "EmbeddingModel: h_s not Hermitian");
    for (const auto& l : couplings)
      detail::require(l.rows() == sys.dim && l.cols() == sys.dim,
                      "EmbeddingModel: coupling dimension mismatch");
    return {sys, std::move(h_s), std::move(couplings), std::move(aux)};
  }

  int n_aux() const { return static_cast<int>(aux.size()); }
  int aux_dim() const {
    int d = 1;
    for (const auto& a : aux) d *= a.dim();
    return d;
  }
  int total_dim() const { return sys.dim * aux_dim(); }
};

// ---- superoperator ----

struct SuperOperator {
  int dim = 0;  // Hilbert dimension d; the map acts on vectors of length d^2
  bool is_sparse = false;
  Matrix dense;
  SpMatrix sparse;

  long size() const { return static_cast<long>(dim) * dim; }

  Vector apply(const Vector& x) const {
    return is_sparse ? Vector(sparse * x) : Vector(dense * x);
  }
  Matrix apply_matrix(const Matrix& rho) const { return unvec(apply(vec(rho)), dim); }
};

namespace detail {

// core assembler; h and jumps already on the full space, sparse
inline SuperOperator lindblad_superop_core(
    int dim, const SpMatrix& h,
    const std::vector<std::pair<SpMatrix, double>>& dissipators) {
  const SpMatrix id = speye(dim);
  SpMatrix lv = cplx(0, -1) * (skron(id, h) - skron(SpMatrix(h.transpose()), id));
  for (const auto& [k, rate] : dissipators) {
    const SpMatrix kdk = SpMatrix(k.adjoint() * k);
    lv = lv + rate * (2.0 * skron(SpMatrix(k.conjugate()), k) - skron(id, kdk) -
                      skron(SpMatrix(kdk.transpose()), id));
  }
  SuperOperator out;
  out.dim = dim;
  out.is_sparse = dim > kDenseSuperopMax;
  if (out.is_sparse) {
    lv.makeCompressed();
    out.sparse = std::move(lv);
  } else {
    out.dense = Matrix(lv);
  }
  return out;
}

}  // namespace detail

// L[rho] = -i[h, rho] + sum_mu prefactor_mu D_{K_mu}[rho].
inline SuperOperator lindblad_superop(
    const Matrix& h, const std::vector<std::pair<Matrix, double>>& dissipators) {
  detail::require(h.rows() == h.cols(), "lindblad_superop: h not square");
  detail::require(is_hermitian(h, 1e-12), "lindblad_superop: h not Hermitian");
  const int d = static_cast<int>(h.rows());
  std::vector<std::pair<SpMatrix, double>> sp;
  sp.reserve(dissipators.size());
  for (const auto& [k, rate] : dissipators) {
    detail::require(k.rows() == d && k.cols() == d,
                    "lindblad_superop: jump dimension mismatch");
    detail::require(rate >= 0, "lindblad_superop: negative prefactor");
    sp.emplace_back(k.sparseView(1e-300, 1.0), rate);
  }
  return detail::lindblad_superop_core(d, h.sparseView(1e-300, 1.0), sp);
}

// ---- auxiliary lowering operators on the full aux product space ----

// Fermionic operators carry Jordan-Wigner parity strings over the preceding
// fermionic factors, so {A_mu, A_nu†} = delta exactly; bosons are truncated ladders.
inline std::vector<Matrix> aux_lowering_ops(const std::vector<AuxSpec>& aux) {
  detail::require(!aux.empty(), "aux_lowering_ops: empty list");
  const auto local_lowering = [](const AuxSpec& a) {
    Matrix m = Matrix::Zero(a.dim(), a.dim());
    if (a.kind == AuxKind::boson) {
      for (int k = 1; k < a.dim(); ++k) m(k - 1, k) = std::sqrt(static_cast<double>(k));
    } else {
      m(0, 1) = 1.0;  // sigma-; index 0 is the vacuum
    }
    return m;
  };
  Matrix parity2(2, 2);  // JW string factor
  parity2 << 1, 0, 0, -1;

  std::vector<Matrix> out;
  for (std::size_t mu = 0; mu < aux.size(); ++mu) {
    Matrix op = Matrix::Identity(1, 1);
    for (std::size_t nu = 0; nu < aux.size(); ++nu) {
      if (nu < mu && aux[mu].kind == AuxKind::fermion &&
          aux[nu].kind == AuxKind::fermion)
        op = kron(op, parity2);
      else if (nu == mu)
        op = kron(op, local_lowering(aux[mu]));
      else
        op = kron(op, Matrix::Identity(aux[nu].dim(), aux[nu].dim()));
    }
    out.push_back(std::move(op));
  }
  return out;
}

// ---- Markovian embedding ----

inline constexpr int kEmbeddingDimCap = 4096;

// H = H_S + sum omega_mu A_mu†A_mu + sum g_mu (L_mu A_mu† + L_mu† A_mu),
// dissipators kappa_mu D_{A_mu} (prefactor kappa, no 1/2). Spin factor first,
// auxiliaries in list order.
inline SuperOperator build_embedding(const EmbeddingModel& model) {
  const int d = model.total_dim();
  detail::require(
      d <= kEmbeddingDimCap,
      "build_embedding: total dimension " + std::to_string(d) + " exceeds the cap " +
          std::to_string(kEmbeddingDimCap) + "; lower the boson truncation");
  const int ds = model.sys.dim;
  const int da = model.aux_dim();
  const SpMatrix id_s = speye(ds), id_a = speye(da);
  const std::vector<Matrix> a_ops = aux_lowering_ops(model.aux);

  SpMatrix h = skron(model.h_s.sparseView(1e-300, 1.0), id_a);
  std::vector<std::pair<SpMatrix, double>> dissipators;
  for (int mu = 0; mu < model.n_aux(); ++mu) {
    const SpMatrix a = a_ops[mu].sparseView(1e-300, 1.0);
    const SpMatrix l = model.couplings[mu].sparseView(1e-300, 1.0);
    h = h + model.aux[mu].omega * skron(id_s, SpMatrix(a.adjoint() * a));
    h = h + model.aux[mu].g * (skron(l, SpMatrix(a.adjoint())) +
                               skron(SpMatrix(l.adjoint()), a));
    dissipators.emplace_back(skron(id_s, a), model.aux[mu].kappa);
  }
  return detail::lindblad_superop_core(d, h, dissipators);
}

inline Matrix partial_trace_aux(const Matrix& rho_total, const EmbeddingModel& model) {
  const int ds = model.sys.dim, da = model.aux_dim();
  detail::require(rho_total.rows() == ds * da && rho_total.cols() == ds * da,
                  "partial_trace_aux: dimension mismatch");
  Matrix rho_s = Matrix::Zero(ds, ds);
  for (int a = 0; a < ds; ++a)
    for (int b = 0; b < ds; ++b)
      for (int k = 0; k < da; ++k) rho_s(a, b) += rho_total(a * da + k, b * da + k);
  return rho_s;
}

// ---- bath correlation function ----

// alpha(t) = |g|^2 e^{-i omega t - kappa t}, t >= 0.
inline cplx correlation_function(const AuxSpec& aux, double t) {
  detail::require(t >= 0, "correlation_function: t < 0");
  return aux.g * aux.g * std::exp(cplx(-aux.kappa * t, -aux.omega * t));
}

// closed form of the half-line integral of alpha
inline cplx correlation_integral(const AuxSpec& aux) {
  return aux.g * aux.g / cplx(aux.kappa, aux.omega);
}

}  // namespace spinsteady
