// Copyright 2026 The ncfactor Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Effective linearization: from a formula f produce a linear pencil L and
// unit matrices P (upper unitriangular), Q (lower unitriangular) with ABP
// entries such that f ⊕ I_s = P L Q, together with P^-1 and Q^-1.
//
// One elementary step removes one multiplication: an entry f0 + g*h of the
// working matrix is rewritten, after adjoining one fresh row and column, to
//   [ f0   g ]
//   [ -h   1 ],
// realized by a row operation (adds g times the fresh row) and a column
// operation (subtracts the fresh column times h), both unitriangular.
// Entries are kept as small sum/product trees so that products of sums are
// never expanded; the step count equals the number of multiplications left.

#ifndef NCFACTOR_HIGMAN_HPP
#define NCFACTOR_HIGMAN_HPP

#include <vector>

#include "ncfactor/linmat.hpp"

namespace ncfactor {

namespace detail {

/// Entry expression: an affine form, a sum, or a product. Sums hold at most
/// one affine argument (kept first) and are not nested; products hold no
/// constant factors and are not nested.
struct Hx {
  enum class K { Affine, Sum, Prod };
  K kind = K::Affine;
  AffForm aff;
  std::vector<Hx> args;
};

inline Hx hx_affine(AffForm a) {
  Hx h;
  h.kind = Hx::K::Affine;
  h.aff = std::move(a);
  return h;
}

inline bool hx_is_const(const Hx& h) {
  return h.kind == Hx::K::Affine && h.aff.lin.empty();
}

inline Hx hx_scale(const FieldCtx& F, Hx x, const Fe& c) {
  if (F.is_zero(c)) return hx_affine(aff_const(F, F.zero()));
  switch (x.kind) {
    case Hx::K::Affine:
      x.aff = aff_scale(F, x.aff, c);
      return x;
    case Hx::K::Sum:
      for (auto& a : x.args) a = hx_scale(F, a, c);
      return x;
    case Hx::K::Prod:
      x.args[0] = hx_scale(F, x.args[0], c);
      return x;
  }
  return x;
}

inline Hx hx_add(const FieldCtx& F, const Hx& a, const Hx& b) {
  AffForm acc = aff_const(F, F.zero());
  std::vector<Hx> parts;
  auto absorb = [&](const Hx& x) {
    if (x.kind == Hx::K::Affine) {
      acc = aff_add(F, acc, x.aff);
    } else if (x.kind == Hx::K::Sum) {
      for (const Hx& arg : x.args) {
        if (arg.kind == Hx::K::Affine)
          acc = aff_add(F, acc, arg.aff);
        else
          parts.push_back(arg);
      }
    } else {
      parts.push_back(x);
    }
  };
  absorb(a);
  absorb(b);
  if (parts.empty()) return hx_affine(acc);
  if (parts.size() == 1 && aff_is_zero(F, acc)) return parts[0];
  Hx out;
  out.kind = Hx::K::Sum;
  if (!aff_is_zero(F, acc)) out.args.push_back(hx_affine(acc));
  for (auto& p : parts) out.args.push_back(std::move(p));
  return out;
}

inline Hx hx_mul(const FieldCtx& F, const Hx& a, const Hx& b) {
  if (hx_is_const(a)) return hx_scale(F, b, a.aff.c0);
  if (hx_is_const(b)) return hx_scale(F, a, b.aff.c0);
  Hx out;
  out.kind = Hx::K::Prod;
  auto absorb = [&](const Hx& x) {
    if (x.kind == Hx::K::Prod)
      for (const Hx& arg : x.args) out.args.push_back(arg);
    else
      out.args.push_back(x);
  };
  absorb(a);
  absorb(b);
  return out;
}

inline Hx hx_norm(const FieldCtx& F, const Formula& f) {
  std::vector<Hx> v(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& node = f.nodes[i];
    switch (node.op) {
      case Formula::Op::Const:
        v[i] = hx_affine(aff_const(F, node.value));
        break;
      case Formula::Op::Var:
        v[i] = hx_affine(aff_var(F, node.var));
        break;
      case Formula::Op::Add:
        v[i] = hx_add(F, v[node.lhs], v[node.rhs]);
        break;
      case Formula::Op::Mul:
        v[i] = hx_mul(F, v[node.lhs], v[node.rhs]);
        break;
    }
  }
  NCF_ASSERT(!v.empty(), "empty formula");
  return v.back();
}

inline Abp hx_to_abp(const FieldCtx& F, uint32_t n, const Hx& x) {
  switch (x.kind) {
    case Hx::K::Affine:
      return abp_affine(F, n, x.aff);
    case Hx::K::Sum: {
      Abp acc = hx_to_abp(F, n, x.args[0]);
      for (size_t i = 1; i < x.args.size(); ++i)
        acc = abp_sum(F, acc, hx_to_abp(F, n, x.args[i]));
      return acc;
    }
    case Hx::K::Prod: {
      Abp acc = hx_to_abp(F, n, x.args[0]);
      for (size_t i = 1; i < x.args.size(); ++i)
        acc = abp_product(F, acc, hx_to_abp(F, n, x.args[i]));
      return acc;
    }
  }
  return abp_const(F, n, F.zero());
}

}  // namespace detail

/// Linearization certificate: f ⊕ I_s = P L Q with P upper unitriangular,
/// Q lower unitriangular, both units with tracked inverses.
struct HigmanCert {
  LinearMatrix L;
  PolyMatrix P, Pinv, Q, Qinv;
  size_t s = 0;
};

/// Deterministic linearization of a formula. Constants yield the 1x1
/// certificate L = [c] with trivial P, Q.
inline HigmanCert linearize(const FieldCtx& F, const Formula& f) {
  using detail::Hx;
  const uint32_t n = f.nvars;
  std::vector<std::vector<Hx>> M = {{detail::hx_norm(F, f)}};
  PolyMatrix P = pm_identity(F, 1, n, PmShape::UpperUni);
  PolyMatrix Pinv = pm_identity(F, 1, n, PmShape::UpperUni);
  PolyMatrix Q = pm_identity(F, 1, n, PmShape::LowerUni);
  PolyMatrix Qinv = pm_identity(F, 1, n, PmShape::LowerUni);
  size_t guard = 0;
  for (;;) {
    NCF_ASSERT(++guard <= 4 * f.size() + 8, "linearization failed to terminate");
    // Find the first non-affine entry in row-major order.
    size_t m = M.size();
    size_t ei = m, ej = m;
    for (size_t i = 0; i < m && ei == m; ++i)
      for (size_t j = 0; j < m && ei == m; ++j)
        if (M[i][j].kind != Hx::K::Affine) {
          ei = i;
          ej = j;
        }
    if (ei == m) break;
    // Decompose the entry as f0 + g*h, g the first factor of the first
    // product term.
    Hx entry = M[ei][ej];
    Hx f0 = detail::hx_affine(aff_const(F, F.zero()));
    Hx prod;
    if (entry.kind == Hx::K::Prod) {
      prod = entry;
    } else {  // Sum: pick the first product argument
      size_t pick = entry.args.size();
      for (size_t a = 0; a < entry.args.size(); ++a)
        if (entry.args[a].kind == Hx::K::Prod) {
          pick = a;
          break;
        }
      NCF_ASSERT(pick < entry.args.size(),
                 "non-affine sum without a product term");
      prod = entry.args[pick];
      std::vector<Hx> rest;
      for (size_t a = 0; a < entry.args.size(); ++a)
        if (a != pick) rest.push_back(entry.args[a]);
      if (rest.empty()) {
        // keep f0 = 0
      } else if (rest.size() == 1) {
        f0 = rest[0];
      } else {
        f0.kind = Hx::K::Sum;
        f0.aff = AffForm{};
        f0.args = std::move(rest);
      }
    }
    NCF_ASSERT(prod.args.size() >= 2, "degenerate product");
    Hx g = prod.args[0];
    Hx h;
    if (prod.args.size() == 2) {
      h = prod.args[1];
    } else {
      h.kind = Hx::K::Prod;
      h.args.assign(prod.args.begin() + 1, prod.args.end());
    }
    // Expand the working matrix by one fresh row/column and place the step.
    for (auto& row : M) row.push_back(detail::hx_affine(aff_const(F, F.zero())));
    M.emplace_back(m + 1, detail::hx_affine(aff_const(F, F.zero())));
    M[m][m] = detail::hx_affine(aff_const(F, F.one()));
    M[ei][ej] = f0;
    M[ei][m] = g;
    M[m][ej] = detail::hx_scale(F, h, F.from_int(-1));
    // Track the unit transformations.
    Abp gab = detail::hx_to_abp(F, n, g);
    Abp hab = detail::hx_to_abp(F, n, h);
    PolyMatrix Einv = pm_identity(F, m + 1, n, PmShape::UpperUni);
    Einv.at(ei, m) = abp_scale(F, gab, F.from_int(-1));
    PolyMatrix E = pm_identity(F, m + 1, n, PmShape::UpperUni);
    E.at(ei, m) = gab;
    PolyMatrix Cinv = pm_identity(F, m + 1, n, PmShape::LowerUni);
    Cinv.at(m, ej) = hab;
    PolyMatrix C = pm_identity(F, m + 1, n, PmShape::LowerUni);
    C.at(m, ej) = abp_scale(F, hab, F.from_int(-1));
    PolyMatrix pad1 = pm_identity(F, 1, n);
    P = pm_mul(F, pm_dsum(F, P, pad1), Einv);
    Pinv = pm_mul(F, E, pm_dsum(F, Pinv, pad1));
    Q = pm_mul(F, Cinv, pm_dsum(F, Q, pad1));
    Qinv = pm_mul(F, pm_dsum(F, Qinv, pad1), C);
    P.shape = Pinv.shape = PmShape::UpperUni;
    Q.shape = Qinv.shape = PmShape::LowerUni;
  }
  HigmanCert cert;
  size_t ell = M.size();
  cert.s = ell - 1;
  cert.L = LinearMatrix(F, ell, n);
  for (size_t i = 0; i < ell; ++i)
    for (size_t j = 0; j < ell; ++j) {
      const AffForm& a = M[i][j].aff;
      F.copy(cert.L.A[0].at(i, j), a.c0.data());
      for (const auto& [v, c] : a.lin) F.copy(cert.L.A[v + 1].at(i, j), c.data());
    }
  cert.P = std::move(P);
  cert.Pinv = std::move(Pinv);
  cert.Q = std::move(Q);
  cert.Qinv = std::move(Qinv);
  return cert;
}

/// Randomized audit of the certificate: f ⊕ I_s = P L Q at random matrix
/// points (each comparison exact).
inline bool unlinearize_check(const FieldCtx& F, const HigmanCert& cert,
                              const Formula& f, size_t trials, uint64_t seed) {
  Rng rng(seed);
  FieldEmbedding emb = grow_field_to(F, 1u << 20, rng.next());
  const FieldCtx& E = emb.big;
  for (size_t t = 0; t < trials; ++t) {
    size_t m = 2;
    std::vector<ScalarMatrix> pt;
    for (uint32_t i = 0; i < f.nvars; ++i) pt.push_back(sm_rand(E, m, m, rng));
    ScalarMatrix fev = eval_matrix(E, f, pt, &emb);
    ScalarMatrix lhs(E, (cert.s + 1) * m, (cert.s + 1) * m);
    sm_set_block(E, lhs, 0, 0, fev);
    for (size_t i = 0; i < cert.s * m; ++i) E.set_one(lhs.at(m + i, m + i));
    ScalarMatrix rhs = sm_mul(
        E, sm_mul(E, pm_eval(E, cert.P, pt, &emb),
                  eval_linmat(E, cert.L, pt, &emb)),
        pm_eval(E, cert.Q, pt, &emb));
    if (!(lhs == rhs)) return false;
  }
  return true;
}

/// Exact audit via polynomial identity testing on the ABP entries.
inline bool unlinearize_check_exact(const FieldCtx& F, const HigmanCert& cert,
                                    const Formula& f) {
  PolyMatrix plq =
      pm_mul(F, pm_mul(F, cert.P, pm_from_linear(F, cert.L)), cert.Q);
  PolyMatrix expect = pm_identity(F, cert.s + 1, f.nvars);
  expect.at(0, 0) = from_formula(F, f);
  if (!pm_eq(F, plq, expect)) return false;
  PolyMatrix pp = pm_mul(F, cert.P, cert.Pinv);
  if (!pm_eq(F, pp, pm_identity(F, pp.rows, pp.nvars))) return false;
  PolyMatrix qq = pm_mul(F, cert.Q, cert.Qinv);
  if (!pm_eq(F, qq, pm_identity(F, qq.rows, qq.nvars))) return false;
  return pm_shape_ok(F, cert.P) && pm_shape_ok(F, cert.Q) &&
         pm_shape_ok(F, cert.Pinv) && pm_shape_ok(F, cert.Qinv);
}

inline nlohmann::json higman_to_json(const FieldCtx& F,
                                     const HigmanCert& cert) {
  nlohmann::json j;
  j["field"] = F.spec_string();
  j["s"] = cert.s;
  j["L"] = linmat_to_json(F, cert.L);
  j["P"] = pm_to_json(F, cert.P);
  j["Pinv"] = pm_to_json(F, cert.Pinv);
  j["Q"] = pm_to_json(F, cert.Q);
  j["Qinv"] = pm_to_json(F, cert.Qinv);
  return j;
}

}  // namespace ncfactor

#endif  // NCFACTOR_HIGMAN_HPP
