#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "liouville.hpp"
#include "spin_core.hpp"

namespace spinsteady {

// Finite rotation groups acting on a spin-j space, closure of jump-operator sets
// under conjugation, and lifts of spin rotations to the embedding space.

// ---- rotation unitaries ----

// U = exp(-i theta n.S) via eigendecomposition of n.S
inline Matrix rotation_unitary(const SpinSystem& sys, const Vec3& axis, double angle) {
  detail::require(std::abs(axis.norm() - 1.0) <= 1e-12,
                  "rotation_unitary: axis must be unit length");
  const SpinOps ops = collective_spin_ops(sys);
  const Matrix h = axis.x() * ops.sx + axis.y() * ops.sy + axis.z() * ops.sz;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Matrix& v = es.eigenvectors();
  Vector phases(sys.dim);
  for (int k = 0; k < sys.dim; ++k)
    phases(k) = std::exp(cplx(0, -angle * es.eigenvalues()(k)));
  return v * phases.asDiagonal() * v.adjoint();
}

// SO(3) image of a spin-space unitary: R_ij = Re Tr(u† S_i u S_j) / (j(j+1)(2j+1)/3).
// For u = exp(-i theta n.S) this is the active rotation by theta about n.
inline Mat3 so3_of_unitary(const SpinSystem& sys, const SpinOps& ops, const Matrix& u) {
  const Matrix s[3] = {ops.sx, ops.sy, ops.sz};
  const double norm = sys.j * (sys.j + 1.0) * (2.0 * sys.j + 1.0) / 3.0;
  Mat3 r;
  for (int i = 0; i < 3; ++i) {
    const Matrix rot = u.adjoint() * s[i] * u;
    for (int j = 0; j < 3; ++j) r(i, j) = hs_inner(rot.adjoint(), s[j]).real() / norm;
  }
  return r;
}

// ---- groups ----

struct GroupElement {
  Mat3 so3;  // rotation fingerprint; the group label (projective +/- sign quotiented)
  Matrix u;  // spin-space unitary
};

enum class GroupName { D2, T, O, I, U1sampled };

inline const char* to_string(GroupName g) {
  switch (g) {
    case GroupName::D2: return "D2";
    case GroupName::T: return "T";
    case GroupName::O: return "O";
    case GroupName::I: return "I";
    default: return "U1sampled";
  }
}

inline GroupName group_name_from_string(const std::string& s) {
  if (s == "D2") return GroupName::D2;
  if (s == "T") return GroupName::T;
  if (s == "O") return GroupName::O;
  if (s == "I") return GroupName::I;
  if (s == "U1sampled" || s == "U1") return GroupName::U1sampled;
  throw std::invalid_argument("unknown group name: " + s);
}

struct SymmetryGroup {
  GroupName name;
  std::vector<GroupElement> elements;
  bool exact_closure;  // false for the sampled U(1) x Z2 stand-in
};

namespace detail {

inline int find_so3(const std::vector<GroupElement>& els, const Mat3& r,
                    double tol = 1e-8) {
  for (std::size_t k = 0; k < els.size(); ++k)
    if ((els[k].so3 - r).norm() < tol) return static_cast<int>(k);
  return -1;
}

// high-symmetry axes of the tetrahedron used throughout (unit vectors)
inline std::array<Vec3, 4> tetrahedron_axes() {
  const double a = std::sqrt(2.0 / 3.0), b = 1.0 / std::sqrt(3.0);
  return {Vec3(a, 0, b), Vec3(-a, 0, b), Vec3(0, a, -b), Vec3(0, -a, -b)};
}

// icosahedral C5 axes (vertices of the icosahedron, one per antipodal pair)
inline std::array<Vec3, 6> icosahedron_axes() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const double s = 1.0 / std::sqrt(1.0 + phi * phi);
  return {Vec3(0, 1, phi) * s,  Vec3(0, 1, -phi) * s, Vec3(1, phi, 0) * s,
          Vec3(1, -phi, 0) * s, Vec3(phi, 0, 1) * s,  Vec3(-phi, 0, 1) * s};
}

}  // namespace detail

// Close the generator set under multiplication (BFS over the SO(3) fingerprints,
// which quotients the projective +/- sign for half-integer j). U1sampled is not a
// closed group: it is 24 sampled elements {Rz(phi)} u {Rx(pi) Rz(phi)} with 8 equally
// spaced and 4 seeded-random angles, and carries exact_closure = false.
inline SymmetryGroup generate_group(const SpinSystem& sys, GroupName name) {
  const SpinOps ops = collective_spin_ops(sys);
  const auto element = [&](const Vec3& axis, double angle) {
    GroupElement e;
    e.u = rotation_unitary(sys, axis, angle);
    e.so3 = so3_of_unitary(sys, ops, e.u);
    return e;
  };

  if (name == GroupName::U1sampled) {
    std::vector<double> angles;
    for (int k = 0; k < 8; ++k) angles.push_back(2.0 * kPi * k / 8.0);
    std::mt19937_64 rng(0x75317a32ULL);  // fixed seed: sampled set is deterministic
    std::uniform_real_distribution<double> dist(0.0, 2.0 * kPi);
    for (int k = 0; k < 4; ++k) angles.push_back(dist(rng));
    SymmetryGroup g{name, {}, false};
    const GroupElement flip = element(Vec3::UnitX(), kPi);
    for (double a : angles) {
      GroupElement rz = element(Vec3::UnitZ(), a);
      GroupElement both{flip.so3 * rz.so3, flip.u * rz.u};
      g.elements.push_back(std::move(rz));
      g.elements.push_back(std::move(both));
    }
    return g;
  }

  std::vector<GroupElement> gens;
  std::size_t expected = 0;
  switch (name) {
    case GroupName::D2:
      gens = {element(Vec3::UnitX(), kPi), element(Vec3::UnitZ(), kPi)};
      expected = 4;
      break;
    case GroupName::T:
      gens = {element(Vec3::UnitZ(), kPi),
              element(detail::tetrahedron_axes()[0], 2.0 * kPi / 3.0)};
      expected = 12;
      break;
    case GroupName::O:
      gens = {element(Vec3::UnitZ(), kPi / 2.0),
              element(Vec3(1, 1, 1).normalized(), 2.0 * kPi / 3.0)};
      expected = 24;
      break;
    case GroupName::I:
      // C2(z) is not perpendicular to the first 5-fold axis, so the pair
      // generates the full order-60 group rather than a dihedral subgroup.
      gens = {element(detail::icosahedron_axes()[0], 2.0 * kPi / 5.0),
              element(Vec3::UnitZ(), kPi)};
      expected = 60;
      break;
    default:
      break;
  }

  SymmetryGroup g{name, {element(Vec3::UnitZ(), 0.0)}, true};
  std::vector<std::size_t> frontier = {0};
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t idx : frontier) {
      for (const auto& gen : gens) {
        GroupElement prod{gen.so3 * g.elements[idx].so3, gen.u * g.elements[idx].u};
        if (detail::find_so3(g.elements, prod.so3) < 0) {
          g.elements.push_back(std::move(prod));
          next.push_back(g.elements.size() - 1);
          detail::require(
              g.elements.size() <= 10 * expected,
              std::string("generate_group: closure of ") + to_string(name) +
                  " fails to stabilize (bad generators?)");
        }
      }
    }
    frontier = std::move(next);
  }
  detail::require(g.elements.size() == expected,
                  std::string("generate_group: ") + to_string(name) + " closed at " +
                      std::to_string(g.elements.size()) + " elements, expected " +
                      std::to_string(expected));
  return g;
}

// ---- closure of a jump set under conjugation ----

struct ClosureEntry {
  int target = -1;    // nu with u L_mu u† ~ e^{i theta} L_nu
  double phase = 0;   // theta
  double error = 1;   // 1 - |overlap|
};

struct ClosureReport {
  bool ok = false;          // every entry matched a single target within 1e-9
  bool action_ok = false;   // element -> permutation is a group action on resolvable pairs
  std::vector<std::vector<ClosureEntry>> table;  // [element][mu]
  double max_error = 0;     // worst 1 - |overlap|
};

// For each group element and jump L_mu, find the best single-target match
// u L_mu u† ~ e^{i theta} L_nu. ok requires |overlap| >= 1 - 1e-9 for all pairs
// and consistency of the induced permutations with the group product (checked on
// element pairs whose product is present; sampled sets may skip pairs).
inline ClosureReport check_closure(const SymmetryGroup& group,
                                   const std::vector<Matrix>& jumps) {
  detail::require(!jumps.empty(), "check_closure: no jump operators");
  std::vector<double> norms;
  for (const auto& l : jumps) {
    norms.push_back(hs_norm(l));
    detail::require(norms.back() > 1e-14, "check_closure: zero jump operator");
  }
  const int nj = static_cast<int>(jumps.size());
  constexpr double kTol = 1e-9;

  ClosureReport rep;
  rep.ok = true;
  for (const auto& el : group.elements) {
    std::vector<ClosureEntry> row(nj);
    for (int mu = 0; mu < nj; ++mu) {
      const Matrix m = el.u * jumps[mu] * el.u.adjoint();
      const double mn = hs_norm(m);
      for (int nu = 0; nu < nj; ++nu) {
        const cplx o = hs_inner(jumps[nu], m) / (norms[nu] * mn);
        if (1.0 - std::abs(o) < row[mu].error) {
          row[mu] = {nu, std::arg(o), 1.0 - std::abs(o)};
        }
      }
      rep.max_error = std::max(rep.max_error, row[mu].error);
      if (row[mu].error > kTol) rep.ok = false;
    }
    rep.table.push_back(std::move(row));
  }

  // group-action consistency of the induced permutations
  rep.action_ok = true;
  if (rep.ok) {
    const std::size_t ne = group.elements.size();
    for (std::size_t a = 0; a < ne && rep.action_ok; ++a) {
      for (std::size_t b = 0; b < ne && rep.action_ok; ++b) {
        const Mat3 prod = group.elements[a].so3 * group.elements[b].so3;
        const int c = detail::find_so3(group.elements, prod);
        if (c < 0) {
          detail::require(!group.exact_closure,
                          "check_closure: product of elements missing from group");
          continue;  // sampled set: product not represented, skip the pair
        }
        for (int mu = 0; mu < nj; ++mu)
          if (rep.table[c][mu].target != rep.table[a][rep.table[b][mu].target].target)
            rep.action_ok = false;
      }
    }
  }
  return rep;
}

// ---- span-level closure ----

struct SpanClosureRow {
  Matrix mixing;                // m(nu, mu): coefficient of L_nu in u L_mu u†
  double span_error = 0;        // worst relative residual off span{L_mu}
  double unitarity_error = 0;   // |M M† - I|
};

struct SpanClosureReport {
  bool ok = false;
  std::vector<SpanClosureRow> rows;  // one per group element
  double max_error = 0;
};

// Dissipator-level closure: each element maps span{L_mu} onto itself with a
// unitary coefficient matrix, which leaves the equal-rate dissipator sum
// invariant even when no jump goes to a single phased target (e.g. a 5-fold
// rotation acting on {Sx, Sy, Sz}).
inline SpanClosureReport span_closure(const SymmetryGroup& group,
                                      const std::vector<Matrix>& jumps) {
  detail::require(!jumps.empty(), "span_closure: no jump operators");
  const int nj = static_cast<int>(jumps.size());
  Matrix gram(nj, nj);
  for (int a = 0; a < nj; ++a)
    for (int b = 0; b < nj; ++b) gram(a, b) = hs_inner(jumps[a], jumps[b]);
  Eigen::SelfAdjointEigenSolver<Matrix> ges(gram);
  detail::require(ges.eigenvalues()(0) > 1e-10 * ges.eigenvalues()(nj - 1),
                  "span_closure: jump operators are linearly dependent");
  const Matrix gram_inv = ges.eigenvectors() *
                          ges.eigenvalues().cwiseInverse().cast<cplx>().asDiagonal() *
                          ges.eigenvectors().adjoint();

  constexpr double kTol = 1e-9;
  SpanClosureReport rep;
  rep.ok = true;
  for (const auto& el : group.elements) {
    SpanClosureRow row;
    row.mixing.resize(nj, nj);
    for (int mu = 0; mu < nj; ++mu) {
      const Matrix rot = el.u * jumps[mu] * el.u.adjoint();
      Vector b(nj);
      for (int nu = 0; nu < nj; ++nu) b(nu) = hs_inner(jumps[nu], rot);
      row.mixing.col(mu) = gram_inv * b;
      Matrix resid = rot;
      for (int nu = 0; nu < nj; ++nu) resid -= row.mixing(nu, mu) * jumps[nu];
      row.span_error = std::max(row.span_error, hs_norm(resid) / hs_norm(rot));
    }
    row.unitarity_error =
        (row.mixing * row.mixing.adjoint() - Matrix::Identity(nj, nj)).norm();
    rep.max_error = std::max({rep.max_error, row.span_error, row.unitarity_error});
    if (row.span_error > kTol || row.unitarity_error > kTol) rep.ok = false;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---- symmetry checks on states and generators ----

// (1/|G|) sum_g u_g rho u_g†
inline Matrix group_average_state(const Matrix& rho, const SymmetryGroup& group) {
  detail::require(is_hermitian(rho, 1e-10), "group_average_state: rho not Hermitian");
  detail::require(std::abs(rho.trace() - cplx(1, 0)) <= 1e-10,
                  "group_average_state: rho not unit trace");
  Matrix avg = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& el : group.elements) avg += el.u * rho * el.u.adjoint();
  return avg / static_cast<double>(group.elements.size());
}

// max over seeded random Hermitian probes of |L[U rho U†] - U L[rho] U†| / |rho|
inline double check_weak_symmetry(const SuperOperator& superop, const Matrix& u,
                                  int n_probes = 20) {
  detail::require(u.rows() == superop.dim && u.cols() == superop.dim,
                  "check_weak_symmetry: unitary dimension mismatch");
  std::mt19937_64 rng(0x77656b73ULL);  // fixed: the check is deterministic
  double worst = 0;
  for (int k = 0; k < n_probes; ++k) {
    const Matrix rho = random_hermitian(superop.dim, rng);
    const Matrix a = superop.apply_matrix(u * rho * u.adjoint());
    const Matrix b = u * superop.apply_matrix(rho) * u.adjoint();
    worst = std::max(worst, hs_norm(Matrix(a - b)) / hs_norm(rho));
  }
  return worst;
}

// ---- lifting spin rotations to the embedding ----

namespace detail {

// permutation + phase lift: U_AS = Phi . P with P A_mu P† = A_{nu(mu)} and
// Phi = prod_mu exp(-i theta_mu N_{nu(mu)})
inline Matrix aux_permutation_phase_unitary(const EmbeddingModel& model,
                                            const std::vector<ClosureEntry>& row) {
  const int na = model.n_aux();
  const int da = model.aux_dim();
  std::vector<int> dims, strides(na);
  for (const auto& a : model.aux) dims.push_back(a.dim());
  int acc = 1;
  for (int k = na - 1; k >= 0; --k) {
    strides[k] = acc;
    acc *= dims[k];
  }

  bool trivial = true;
  int n_fermions_moved = 0;
  for (int mu = 0; mu < na; ++mu) {
    const int nu = row[mu].target;
    if (nu != mu) {
      trivial = false;
      require(model.aux[mu].identical_to(model.aux[nu]),
              "embedding_symmetry_unitary: permuted auxiliaries are not identical");
      if (model.aux[mu].kind == AuxKind::fermion) ++n_fermions_moved;
    }
  }

  Matrix p = Matrix::Identity(da, da);
  if (!trivial) {
    p.setZero();
    std::vector<int> digits(na);
    for (int idx = 0; idx < da; ++idx) {
      int rem = idx;
      for (int k = 0; k < na; ++k) {
        digits[k] = rem / strides[k];
        rem %= strides[k];
      }
      int tgt = 0;
      for (int k = 0; k < na; ++k) tgt += digits[k] * strides[row[k].target];
      double sign = 1.0;
      if (n_fermions_moved > 0) {
        // fermionic swap picks up a sign when both occupations are 1;
        // only pairwise exchanges are supported (all the models need)
        require(n_fermions_moved == 2,
                "embedding_symmetry_unitary: fermionic permutations beyond a pairwise "
                "swap are not supported");
        int occ_prod = 1;
        for (int k = 0; k < na; ++k)
          if (row[k].target != k && model.aux[k].kind == AuxKind::fermion)
            occ_prod *= digits[k];
        if (occ_prod == 1) sign = -1.0;
      }
      p(tgt, idx) = sign;
    }
  }

  // phases: number operators are diagonal in the product basis for every kind
  Vector phase_diag = Vector::Ones(da);
  for (int idx = 0; idx < da; ++idx) {
    int rem = idx;
    double tot = 0;
    for (int k = 0; k < na; ++k) {
      const int digit = rem / strides[k];
      rem %= strides[k];
      // idx digit k is the occupation of slot k; slot nu(mu) carries theta_mu
      for (int mu = 0; mu < na; ++mu)
        if (row[mu].target == k) tot += row[mu].phase * digit;
    }
    phase_diag(idx) = std::exp(cplx(0, -tot));
  }
  return phase_diag.asDiagonal() * p;
}

}  // namespace detail

// Lift a spin-space symmetry element to the full embedding space. The element must
// send each jump to a single phased target (an exact closure row); the lift is then
// U_S ⊗ (Phi ∘ P). Elements that genuinely mix the jumps admit no exact lift on
// truncated auxiliaries: conjugation preserves the nilpotency index of a lowering
// operator, while a linear mix of lowering operators on distinct modes raises it.
inline Matrix embedding_symmetry_unitary(const EmbeddingModel& model,
                                         const GroupElement& element,
                                         const SymmetryGroup& group,
                                         const ClosureReport& closure) {
  const int idx = detail::find_so3(group.elements, element.so3);
  detail::require(idx >= 0 && idx < static_cast<int>(closure.table.size()),
                  "embedding_symmetry_unitary: element not found in closure report");
  const auto& row = closure.table[idx];
  detail::require(static_cast<int>(row.size()) == model.n_aux(),
                  "embedding_symmetry_unitary: closure report does not match model");
  for (const auto& e : row)
    detail::require(e.error <= 1e-9,
                    "embedding_symmetry_unitary: element mixes the jump operators; "
                    "only phased-permutation rows can be lifted");
  return kron(element.u, detail::aux_permutation_phase_unitary(model, row));
}

}  // namespace spinsteady
