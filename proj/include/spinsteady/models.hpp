#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "common.hpp"
#include "groups.hpp"
#include "liouville.hpp"
#include "spin_core.hpp"
#include "steady.hpp"

namespace spinsteady {

// Named model presets, the Markovian (kappa -> infinity) and Redfield reductions,
// and the randomized no-go verification harness.

// ---- presets ----

enum class ClosureKind { phased_permutation, linear_mixing };

struct PresetOptions {
  int n_spins = 0;                       // 0 -> preset default
  int truncation = 0;                    // 0 -> preset default; >= 2 pins bosons
  std::optional<AuxKind> aux_kind;       // override the default AS kind
  std::map<std::string, double> params;  // omega, h, gamma, kappa, kappa1..kappaK
};

struct PresetModel {
  std::string id;
  EmbeddingModel model;
  SymmetryGroup group;
  ClosureReport closure;
  SpanClosureReport span;  // filled for linear_mixing presets
  ClosureKind closure_kind = ClosureKind::phased_permutation;
  double omega = 1, h = 1, gamma = 1;
  int truncation = 0;
};

inline const std::vector<std::string>& preset_ids() {
  static const std::vector<std::string> ids = {"d2_minimal", "u1z2",  "tetra",
                                               "tetra_axes", "octa", "icosa"};
  return ids;
}

namespace detail {

inline double take_param(std::map<std::string, double> params,  // by value: consumed
                         const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace detail

// Build one of the named models. Jump frames follow the closure conventions of the
// symmetry machinery: tetra uses the C2-axis frame {Sz, (Sx+Sy)/sqrt2, (Sx-Sy)/sqrt2}
// (the same dissipator as the coordinate frame at equal rates, and a beam-splitter
// rotation of the same embedding), icosa uses {Sx,Sy,Sz} with linear-mixing closure.
inline PresetModel preset(const std::string& id, const PresetOptions& opt = {}) {
  int n_def = 0, trunc_def = 3;
  GroupName gname = GroupName::D2;
  AuxKind kind_def = AuxKind::boson;
  double h_ratio = 1, gamma_ratio = 0.5, kappa_ratio = 0.5;
  if (id == "d2_minimal") {
    n_def = 5;
    gname = GroupName::D2;
    kind_def = AuxKind::twolevel;
    h_ratio = 10;
    gamma_ratio = 2.5;
    kappa_ratio = 1;
  } else if (id == "u1z2") {
    n_def = 6;
    gname = GroupName::U1sampled;
    trunc_def = 5;
    // h = N*omega puts the m=1 -> 0 lowering transition of (h/N)Sz^2 on
    // resonance with the filters, which concentrates population at m=0 and
    // maximizes the equatorial QFI gain; the gain needs kappa < omega.
    h_ratio = 6;
    gamma_ratio = 1;
    kappa_ratio = 0.5;
  } else if (id == "tetra") {
    n_def = 4;
    gname = GroupName::T;
  } else if (id == "tetra_axes") {
    n_def = 4;
    gname = GroupName::T;
    trunc_def = 2;
  } else if (id == "octa") {
    n_def = 6;
    gname = GroupName::O;
  } else if (id == "icosa") {
    n_def = 6;
    gname = GroupName::I;
    h_ratio = 1.0 / 6.0;
  } else {
    throw std::invalid_argument("unknown preset: " + id);
  }

  const int n = opt.n_spins > 0 ? opt.n_spins : n_def;
  const AuxKind kind = opt.aux_kind.value_or(kind_def);
  int trunc = opt.truncation > 0 ? opt.truncation : trunc_def;
  if (kind != AuxKind::boson) trunc = 2;
  detail::require(opt.truncation == 0 || opt.truncation >= 2,
                  "preset: truncation must be >= 2");

  const double omega = detail::take_param(opt.params, "omega", 1.0);
  detail::require(omega > 0, "preset: omega must be > 0");
  const double h = detail::take_param(opt.params, "h", h_ratio * omega);
  const double gamma = detail::take_param(opt.params, "gamma", gamma_ratio * omega);
  const double kappa = detail::take_param(opt.params, "kappa", kappa_ratio * omega);
  detail::require(gamma > 0 && kappa > 0, "preset: gamma and kappa must be > 0");

  const SpinSystem sys = SpinSystem::of(n);
  const SpinOps ops = collective_spin_ops(sys);
  const Matrix sp = ops.sx + cplx(0, 1) * ops.sy;
  const Matrix sm = ops.sx - cplx(0, 1) * ops.sy;
  const double j = sys.j;

  Matrix h_s;
  std::vector<Matrix> jumps;
  ClosureKind ck = ClosureKind::phased_permutation;
  if (id == "d2_minimal") {
    h_s = (h / n) * ops.sz * ops.sz;
    jumps = {ops.sx, ops.sy};
  } else if (id == "u1z2") {
    h_s = (h / n) * ops.sz * ops.sz;
    jumps = {sm, sp};
  } else if (id == "tetra") {
    const Matrix quad = sp * sp + sm * sm;
    h_s = (h / (n * n)) * (quad * ops.sz + ops.sz * quad);
    jumps = {ops.sz, (ops.sx + ops.sy) / std::sqrt(2.0),
             (ops.sx - ops.sy) / std::sqrt(2.0)};
  } else if (id == "tetra_axes") {
    h_s = Matrix::Zero(sys.dim, sys.dim);
    for (const Vec3& ax : detail::tetrahedron_axes()) {
      const Matrix sn = ax.x() * ops.sx + ax.y() * ops.sy + ax.z() * ops.sz;
      h_s += (h / (n * n)) * sn * sn * sn;
      jumps.push_back(sn);
    }
  } else if (id == "octa") {
    const Matrix x2 = ops.sx * ops.sx, y2 = ops.sy * ops.sy, z2 = ops.sz * ops.sz;
    h_s = (h / (j * j * j)) * (x2 * x2 + y2 * y2 + z2 * z2);
    jumps = {ops.sx, ops.sy, ops.sz};
  } else {  // icosa
    h_s = Matrix::Zero(sys.dim, sys.dim);
    for (const Vec3& ax : detail::icosahedron_axes()) {
      const Matrix sn = ax.x() * ops.sx + ax.y() * ops.sy + ax.z() * ops.sz;
      const Matrix sn2 = sn * sn;
      h_s += (h / std::pow(j, 5)) * sn2 * sn2 * sn2;
    }
    jumps = {ops.sx, ops.sy, ops.sz};
    ck = ClosureKind::linear_mixing;
  }
  h_s = 0.5 * (h_s + h_s.adjoint().eval());  // kill roundoff asymmetry

  // per-mode rates: kappa_k overridable, g_k = sqrt(gamma kappa_k / 2N)
  const int n_jumps = static_cast<int>(jumps.size());
  std::set<std::string> allowed = {"omega", "h", "gamma", "kappa"};
  for (int k = 1; k <= n_jumps; ++k) allowed.insert("kappa" + std::to_string(k));
  for (const auto& [key, value] : opt.params)
    detail::require(allowed.count(key) > 0, "preset: unknown parameter " + key);

  std::vector<AuxSpec> aux;
  for (int k = 0; k < n_jumps; ++k) {
    const double kap =
        detail::take_param(opt.params, "kappa" + std::to_string(k + 1), kappa);
    detail::require(kap > 0, "preset: kappa must be > 0");
    const double g = std::sqrt(gamma * kap / (2.0 * n));
    switch (kind) {
      case AuxKind::boson: aux.push_back(AuxSpec::boson(trunc, omega, kap, g)); break;
      case AuxKind::fermion: aux.push_back(AuxSpec::fermion(omega, kap, g)); break;
      default: aux.push_back(AuxSpec::twolevel(omega, kap, g));
    }
  }

  PresetModel pm;
  pm.id = id;
  pm.model = EmbeddingModel::of(sys, h_s, jumps, aux);
  pm.group = generate_group(sys, gname);
  pm.closure = check_closure(pm.group, jumps);
  pm.closure_kind = ck;
  pm.omega = omega;
  pm.h = h;
  pm.gamma = gamma;
  pm.truncation = trunc;

  // structural validation of the declared symmetry
  const double hnorm = std::max(hs_norm(h_s), 1e-300);
  for (const auto& el : pm.group.elements)
    detail::check(hs_norm(Matrix(el.u * h_s * el.u.adjoint() - h_s)) <= 1e-9 * hnorm,
                  "preset " + id + ": h_s is not invariant under the group");
  if (ck == ClosureKind::phased_permutation) {
    detail::check(pm.closure.ok,
                  "preset " + id + ": jump set failed phased-permutation closure");
    detail::check(!pm.group.exact_closure || pm.closure.action_ok,
                  "preset " + id + ": closure permutations are not a group action");
  } else {
    pm.span = span_closure(pm.group, jumps);
    detail::check(pm.span.ok, "preset " + id + ": jump set failed span closure");
  }
  return pm;
}

// ---- kappa -> infinity spin-only generator ----

// Each coupling contributes a dissipator with prefactor g^2/kappa (= gamma/2N under
// the standard parametrization), acting on the spin space alone.
inline SuperOperator lindblad_limit_generator(const PresetModel& p) {
  std::vector<std::pair<Matrix, double>> diss;
  for (int mu = 0; mu < p.model.n_aux(); ++mu) {
    const AuxSpec& a = p.model.aux[mu];
    diss.emplace_back(p.model.couplings[mu], a.g * a.g / a.kappa);
  }
  return lindblad_superop(p.model.h_s, diss);
}

// ---- Redfield generator (second order in g) ----

// Half-line filter of the coupling in the h_s eigenbasis:
// (Lbar)_ab = L_ab * g^2 / (kappa + i(omega + E_a - E_b)).
inline Matrix redfield_filtered_coupling(const Matrix& h_s, const Matrix& l,
                                         const AuxSpec& aux) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h_s);
  const RealVector& e = es.eigenvalues();
  const Matrix& v = es.eigenvectors();
  Matrix lt = v.adjoint() * l * v;
  for (int a = 0; a < lt.rows(); ++a)
    for (int b = 0; b < lt.cols(); ++b)
      lt(a, b) *= aux.g * aux.g / cplx(aux.kappa, aux.omega + e(a) - e(b));
  return v * lt * v.adjoint();
}

// L[rho] = -i[h_s, rho] + sum_mu ([Lbar_mu rho, L_mu†] + [L_mu, rho Lbar_mu†]).
// Not completely positive in general: pair with a loosened negativity tolerance.
inline SuperOperator redfield_generator(const PresetModel& p) {
  const int d = p.model.sys.dim;
  const Matrix id = Matrix::Identity(d, d);
  Matrix lv = cplx(0, -1) * (kron(id, p.model.h_s) -
                             kron(p.model.h_s.transpose(), id));
  for (int mu = 0; mu < p.model.n_aux(); ++mu) {
    const Matrix& l = p.model.couplings[mu];
    const Matrix lbar =
        redfield_filtered_coupling(p.model.h_s, l, p.model.aux[mu]);
    lv += kron(l.conjugate(), lbar);                           // Lbar rho L†
    lv -= kron(id, Matrix(l.adjoint() * lbar));                // -L† Lbar rho
    lv += kron(lbar.conjugate(), l);                           // L rho Lbar†
    lv -= kron(Matrix((lbar.adjoint() * l).transpose()), id);  // -rho Lbar† L
  }
  SuperOperator out;
  out.dim = d;
  out.is_sparse = false;
  out.dense = std::move(lv);
  return out;
}

// ---- adaptive boson truncation ----

struct AdaptiveSteadyResult {
  SteadyStateReport report;  // state on the final embedding space
  Matrix rho_spin;
  EmbeddingModel model;      // model actually solved (final truncations)
};

// Solve, raise every boson truncation by one, re-solve; accept once the reduced
// spin state moves by less than trunc_tol in HS norm.
inline AdaptiveSteadyResult steady_state_adaptive(const EmbeddingModel& base,
                                                  const SteadyOpts& opts = {},
                                                  double trunc_tol = 1e-8) {
  const auto solve = [&opts](const EmbeddingModel& m) {
    AdaptiveSteadyResult r;
    r.model = m;
    r.report = steady_state(build_embedding(m), opts);
    r.rho_spin = partial_trace_aux(r.report.rho_ss, m);
    for (const auto& a : m.aux) r.report.truncation_used.push_back(a.dim());
    return r;
  };
  AdaptiveSteadyResult cur = solve(base);
  bool has_boson = false;
  for (const auto& a : base.aux) has_boson |= a.kind == AuxKind::boson;
  if (!has_boson) return cur;

  while (true) {
    EmbeddingModel next = cur.model;
    for (auto& a : next.aux)
      if (a.kind == AuxKind::boson) ++a.truncation;
    detail::check(next.total_dim() <= kEmbeddingDimCap,
                  "steady_state_adaptive: dimension cap reached before the "
                  "truncation converged");
    AdaptiveSteadyResult fine = solve(next);
    const double moved = hs_norm(Matrix(fine.rho_spin - cur.rho_spin));
    if (moved < trunc_tol) return fine;
    cur = std::move(fine);
  }
}

// ---- no-go verification ----

struct NogoInstance {
  std::string family;
  int n_spins = 0;
  Matrix h;
  std::vector<std::pair<Matrix, double>> dissipators;  // (L_mu, gamma_mu/2)
  bool independent = false;  // two linearly independent jumps present
  std::string label;
};

// Random instances of every jump-operator family allowed by the D2 weak symmetry:
// single Hermitian; two Hermitian; the equal-rate pair S±(n1,n2) = c1 Sn1 ± c2 Sn2;
// its degenerate c2 = 0 limit; three Hermitian; Hermitian + pair.
inline std::vector<NogoInstance> nogo_instances(int n_spins, int count,
                                                std::mt19937_64& rng) {
  const SpinSystem sys = SpinSystem::of(n_spins);
  const SpinOps ops = collective_spin_ops(sys);
  const Matrix s[3] = {ops.sx, ops.sy, ops.sz};
  const char* axis_name = "xyz";
  std::uniform_real_distribution<double> rate(0.2, 2.0);
  std::uniform_real_distribution<double> coeff(0.4, 1.5);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> hcoef(-2.0, 2.0);
  std::uniform_int_distribution<int> axis(0, 2);

  const auto random_pair = [&](int& a, int& b) {
    a = axis(rng);
    do { b = axis(rng); } while (b == a);
  };
  const auto polar = [&]() { return std::polar(coeff(rng), angle(rng)); };

  std::vector<NogoInstance> out;
  for (int k = 0; k < count; ++k) {
    NogoInstance inst;
    inst.n_spins = n_spins;
    inst.h = hcoef(rng) * s[0] * s[0] + hcoef(rng) * s[1] * s[1] +
             hcoef(rng) * s[2] * s[2];
    const int family = k % 6;
    int a = 0, b = 0;
    switch (family) {
      case 0: {  // one Hermitian jump
        inst.family = "K1-hermitian";
        a = axis(rng);
        inst.dissipators = {{s[a], rate(rng) / 2}};
        inst.independent = false;
        inst.label = std::string("L = S") + axis_name[a];
        break;
      }
      case 1: {  // two Hermitian jumps
        inst.family = "K2-hermitian";
        random_pair(a, b);
        inst.dissipators = {{s[a], rate(rng) / 2}, {s[b], rate(rng) / 2}};
        inst.independent = true;
        inst.label = std::string("L = {S") + axis_name[a] + ", S" + axis_name[b] + "}";
        break;
      }
      case 2: {  // equal-rate raising/lowering pair
        inst.family = "K2-pair";
        random_pair(a, b);
        const cplx c1 = polar(), c2 = polar();
        const double g = rate(rng);
        inst.dissipators = {{c1 * s[a] + c2 * s[b], g / 2},
                            {c1 * s[a] - c2 * s[b], g / 2}};
        inst.independent = true;
        inst.label = std::string("L = c1 S") + axis_name[a] + " ± c2 S" + axis_name[b];
        break;
      }
      case 3: {  // degenerate pair: c2 = 0 collapses to a single jump
        inst.family = "K2-degenerate";
        a = axis(rng);
        const cplx c1 = polar();
        const double g = rate(rng);
        inst.dissipators = {{c1 * s[a], g / 2}, {c1 * s[a], g / 2}};
        inst.independent = false;
        inst.label = std::string("L = {c1 S") + axis_name[a] + "} x 2";
        break;
      }
      case 4: {  // three Hermitian jumps
        inst.family = "K3-hermitian";
        inst.dissipators = {{s[0], rate(rng) / 2},
                            {s[1], rate(rng) / 2},
                            {s[2], rate(rng) / 2}};
        inst.independent = true;
        inst.label = "L = {Sx, Sy, Sz}";
        break;
      }
      default: {  // Hermitian + pair
        inst.family = "K3-mixed";
        random_pair(a, b);
        const cplx c1 = polar(), c2 = polar();
        const double g = rate(rng);
        const int c = axis(rng);
        inst.dissipators = {{s[c], rate(rng) / 2},
                            {c1 * s[a] + c2 * s[b], g / 2},
                            {c1 * s[a] - c2 * s[b], g / 2}};
        inst.independent = true;
        inst.label = std::string("L = {S") + axis_name[c] + ", pair(" +
                     axis_name[a] + "," + axis_name[b] + ")}";
        break;
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

struct NogoReport {
  int n_pass = 0;
  int n_fail = 0;
  std::vector<std::string> failures;
};

// For every instance the MMS must be stationary; with two linearly independent
// jumps it must also be the unique steady state (nullity 1, distance < 1e-10).
inline NogoReport verify_nogo(const std::vector<int>& n_spins_list,
                              int instances_per_n, std::uint64_t seed) {
  NogoReport rep;
  for (const int n : n_spins_list) {
    std::mt19937_64 rng(seed + 0x9e3779b9u * static_cast<std::uint64_t>(n));
    const int d = n + 1;
    const Matrix mms = Matrix::Identity(d, d) / static_cast<double>(d);
    for (const NogoInstance& inst : nogo_instances(n, instances_per_n, rng)) {
      std::string why;
      const SuperOperator lv = lindblad_superop(inst.h, inst.dissipators);
      const double mms_resid = lv.apply(vec(mms)).norm();
      if (mms_resid > 1e-10)
        why = "MMS not stationary (residual " + std::to_string(mms_resid) + ")";
      if (why.empty() && inst.independent) {
        const SteadyStateReport ss = steady_state(lv);
        if (ss.nullity != 1)
          why = "nullity " + std::to_string(ss.nullity) + ", expected 1";
        else if (hs_norm(Matrix(ss.rho_ss - mms)) >= 1e-10)
          why = "unique steady state differs from the MMS";
      }
      if (why.empty() && !inst.independent) {
        const auto [unique, nullity] = uniqueness_certificate(lv);
        if (unique)
          why = "dependent jump set unexpectedly has a unique steady state";
      }
      if (why.empty()) {
        ++rep.n_pass;
      } else {
        ++rep.n_fail;
        rep.failures.push_back("N=" + std::to_string(n) + " " + inst.family + " (" +
                               inst.label + "): " + why);
      }
    }
  }
  return rep;
}

}  // namespace spinsteady
