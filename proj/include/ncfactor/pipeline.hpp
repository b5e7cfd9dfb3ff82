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
// End-to-end factorization of noncommutative polynomials over finite fields
// into irreducible factors, emitted as algebraic branching programs.
//
// The chain:  a formula f is linearized (f ⊕ I_s = P L Q with unitriangular
// units P, Q), the pencil L is left-monicized (S L U = L' ⊕ I_t), and the
// word-reversal image of L' — which is right monic — is brought to an atomic
// block-lower form by the pencil factorizer.  Reversing back writes L' as
// scalar · F_1 ··· F_k · scalar with each linear F_i an atom, so
//
//   f ⊕ I_s  =  P · Sp · pad(F_1) ··· pad(F_k) · Vp,
//
// Sp scalar, Vp a polynomial unit.  Products of *leading* factors
// F_1 ··· F_j stay linear (they are reversals of trailing telescope
// products, which only fill in rows of the block form), so each stage of
// the extraction loop sees a LINEAR left part C and an atomic right part D
// with C·D = (g, u; 0, unit).  Trivializing the zero product
// (bottom rows of C)·(first column of D) = 0 and permuting one nonzero row
// to the front splits one irreducible right factor off g exactly; the loop
// peels factors right to left and the final residual is itself an atom
// associate, giving f = f_1 f_2 ··· f_k with every factor irreducible.
//
// Every stage is anchored by exact checks: the zero-product precondition,
// the trivializer's zero pattern, the vanishing of the residual column, and
// the per-stage identity g_j = g_{j-1} · f_j are all verified by
// deterministic ABP identity tests before the stage is accepted.

#ifndef NCFACTOR_PIPELINE_HPP
#define NCFACTOR_PIPELINE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ncfactor/abp.hpp"
#include "ncfactor/common.hpp"
#include "ncfactor/expr.hpp"
#include "ncfactor/field.hpp"
#include "ncfactor/higman.hpp"
#include "ncfactor/linfact.hpp"
#include "ncfactor/linmat.hpp"
#include "ncfactor/matrix.hpp"

namespace ncfactor {

// ---------------------------------------------------------------------------
// Trivialization of a zero product  C · v = 0  (C affine, v polynomial).
// ---------------------------------------------------------------------------

/// Which side of the certified zero pattern vanishes at an index: the column
/// of C·N, or the row of N⁻¹·v.
enum class TrivSide : uint8_t { Column, Row };

/// An invertible polynomial matrix N (with tracked inverse) such that for
/// every index i either column i of C·N or row i of N⁻¹·v is identically
/// zero; `pattern[i]` records which.  C·N keeps affine entries.
struct TrivializeCert {
  PolyMatrix N;
  PolyMatrix Ninv;
  std::vector<TrivSide> pattern;
};

namespace detail {

/// Affine u×d matrix as n+1 scalar coefficient matrices (constant first).
struct AffMat {
  size_t rows = 0, cols = 0;
  uint32_t n = 0;
  std::vector<ScalarMatrix> A;  // n+1 matrices, u×d each

  AffMat() = default;
  AffMat(const FieldCtx& F, size_t u, size_t d, uint32_t nvars)
      : rows(u), cols(d), n(nvars), A(nvars + 1, sm_zero(F, u, d)) {}
};

inline bool affmat_is_zero(const FieldCtx& F, const AffMat& C) {
  for (const auto& M : C.A)
    if (!sm_is_zero(F, M)) return false;
  return true;
}

/// One affine entry of an AffMat as a single-edge program.
inline Abp affmat_entry(const FieldCtx& F, const AffMat& C, size_t i,
                        size_t j) {
  AffForm a;
  a.c0 = Fe(F.ew());
  F.copy(a.c0.data(), C.A[0].at(i, j));
  for (uint32_t v = 0; v < C.n; ++v) {
    Fe c(F.ew());
    F.copy(c.data(), C.A[v + 1].at(i, j));
    if (!F.is_zero(c)) a.lin.emplace_back(v, c);
  }
  return abp_affine(F, C.n, a);
}

/// F-linear combination  sum_j coeffs[j] · v[j]  of programs.
inline Abp abp_lincomb(const FieldCtx& F, const ScalarMatrix& coeffs,
                       size_t row, const std::vector<Abp>& v, uint32_t n) {
  Abp acc = abp_const(F, n, F.zero());
  for (size_t j = 0; j < v.size(); ++j) {
    Fe c(F.ew());
    F.copy(c.data(), coeffs.at(row, j));
    if (F.is_zero(c)) continue;
    acc = abp_sum(F, acc, abp_scale(F, v[j], c));
  }
  return acc;
}

struct TrivRec {
  PolyMatrix N;
  PolyMatrix Ninv;
  std::vector<TrivSide> pattern;
};

/// The recursive trivializer.  Invariants on entry: C·v = 0 exactly.  At
/// every level the column used for elimination is the *constant* vector
/// C·v(m) (the variable parts annihilate the leading coefficient vector of
/// v), which is why C·N keeps affine entries all the way down.
inline TrivRec trivialize_rec(const FieldCtx& F, const AffMat& C,
                              const std::vector<Abp>& v) {
  const size_t d = C.cols;
  const uint32_t n = C.n;
  NCF_ASSERT(v.size() == d, "trivializer shape drift");

  bool v_zero = true;
  for (const auto& a : v)
    if (!abp_is_zero(F, a)) {
      v_zero = false;
      break;
    }
  if (v_zero) {
    TrivRec out{pm_identity(F, d, n), pm_identity(F, d, n), {}};
    out.pattern.assign(d, TrivSide::Row);
    return out;
  }
  if (affmat_is_zero(F, C)) {
    TrivRec out{pm_identity(F, d, n), pm_identity(F, d, n), {}};
    out.pattern.assign(d, TrivSide::Column);
    return out;
  }
  // v ≠ 0 and C ≠ 0: in the free algebra (a domain) this forces d ≥ 2.
  NCF_ASSERT(d >= 2,
             "C·v = 0 with both C and v nonzero is impossible for d = 1");

  auto lead = vector_leading_word(F, v);
  NCF_ASSERT(lead.has_value(), "nonzero vector must have a leading word");
  const std::vector<Fe>& vm = lead->second;

  // T0: basis completion with first column the leading coefficient vector.
  ScalarMatrix vmcol(F, d, 1);
  for (size_t i = 0; i < d; ++i) F.copy(vmcol.at(i, 0), vm[i].data());
  ScalarMatrix T0 = sm_complete_basis(F, vmcol);
  ScalarMatrix T0inv = sm_invert(F, T0);

  AffMat CT(F, C.rows, d, n);
  for (size_t i = 0; i <= n; ++i) CT.A[i] = sm_mul(F, C.A[i], T0);
  // The variable coefficients of C kill v(m): the coefficient of any word
  // x·m in C·v is exactly C_x · v(m), and C·v = 0.
  for (uint32_t x = 1; x <= n; ++x)
    for (size_t i = 0; i < C.rows; ++i)
      NCF_ASSERT(F.is_zero(CT.A[x].at(i, 0)),
                 "leading coefficient vector must be annihilated by the "
                 "variable parts");

  std::vector<Abp> w(d);
  for (size_t j = 0; j < d; ++j) w[j] = abp_lincomb(F, T0inv, j, v, n);

  bool const_col_zero = true;
  size_t piv = d;
  for (size_t i = 0; i < C.rows; ++i)
    if (!F.is_zero(CT.A[0].at(i, 0))) {
      const_col_zero = false;
      piv = i;
      break;
    }

  PolyMatrix level_N, level_Ninv;
  if (const_col_zero) {
    // Case (a): the first column of C·T0 is identically zero already.
    level_N = pm_from_scalar(F, T0, n);
    level_Ninv = pm_from_scalar(F, T0inv, n);
  } else {
    // Case (b): the first column of C·T0 is a nonzero constant vector; use
    // it to clear row `piv` by affine column operations.  The multiplier
    // entries live in row 0 of T1.
    Fe alpha(F.ew());
    F.copy(alpha.data(), CT.A[0].at(piv, 0));
    Fe ainv = F.inv(alpha);
    PolyMatrix T1 = pm_identity(F, d, n);
    PolyMatrix T1inv = pm_identity(F, d, n);
    std::vector<AffForm> mu(d);
    for (size_t j = 1; j < d; ++j) {
      AffForm m;  // -(C·T0)_{piv,j} / alpha
      Fe c(F.ew());
      F.copy(c.data(), CT.A[0].at(piv, j));
      m.c0 = F.neg(F.mul(c, ainv));
      for (uint32_t x = 1; x <= n; ++x) {
        F.copy(c.data(), CT.A[x].at(piv, j));
        Fe coeff = F.neg(F.mul(c, ainv));
        if (!F.is_zero(coeff)) m.lin.emplace_back(x - 1, coeff);
      }
      mu[j] = m;
      T1.at(0, j) = abp_affine(F, n, m);
      AffForm mneg;
      mneg.c0 = F.neg(m.c0);
      for (const auto& [var, coeff] : m.lin)
        mneg.lin.emplace_back(var, F.neg(coeff));
      T1inv.at(0, j) = abp_affine(F, n, mneg);
    }
    T1.shape = T1inv.shape = PmShape::Unit;
    // Column operations on the coefficients: col_j += col_0 · mu_j. The
    // pivot column is constant, so the product stays affine exactly.
    for (size_t j = 1; j < d; ++j) {
      Fe c0(F.ew());
      for (size_t i = 0; i < C.rows; ++i) {
        F.copy(c0.data(), CT.A[0].at(i, 0));
        // constant part
        F.add(CT.A[0].at(i, j), CT.A[0].at(i, j),
              F.mul(c0, mu[j].c0).data());
        // variable parts
        for (const auto& [var, coeff] : mu[j].lin)
          F.add(CT.A[var + 1].at(i, j), CT.A[var + 1].at(i, j),
                F.mul(c0, coeff).data());
      }
    }
    for (size_t j = 1; j < d; ++j)
      for (uint32_t x = 0; x <= n; ++x)
        NCF_ASSERT(F.is_zero(CT.A[x].at(piv, j)),
                   "column operations must clear the pivot row");
    // First entry of T1^{-1} T0^{-1} v vanishes: it equals (1/alpha) times
    // row `piv` of (C·T0) applied to T0^{-1}v, i.e. (1/alpha)(C·v)_piv = 0.
    Abp w0 = w[0];
    for (size_t j = 1; j < d; ++j) {
      AffForm mneg;
      mneg.c0 = F.neg(mu[j].c0);
      for (const auto& [var, coeff] : mu[j].lin)
        mneg.lin.emplace_back(var, F.neg(coeff));
      w0 = abp_sum(F, w0, abp_product(F, abp_affine(F, n, mneg), w[j]));
    }
    NCF_ASSERT(abp_is_zero(F, w0),
               "first entry must vanish after the pivot row is used");
    w[0] = abp_const(F, n, F.zero());
    level_N = pm_mul(F, pm_from_scalar(F, T0, n), T1);
    level_Ninv = pm_mul(F, T1inv, pm_from_scalar(F, T0inv, n));
  }

  // Drop the first column of C and the first entry of v; recurse.
  AffMat Csub(F, C.rows, d - 1, n);
  for (uint32_t x = 0; x <= n; ++x)
    Csub.A[x] = sm_block(F, CT.A[x], 0, 1, C.rows, d - 1);
  std::vector<Abp> vsub(w.begin() + 1, w.end());
  TrivRec sub = trivialize_rec(F, Csub, vsub);

  PolyMatrix one = pm_identity(F, 1, n);
  TrivRec out;
  out.N = pm_mul(F, level_N, pm_dsum(F, one, sub.N));
  out.Ninv = pm_mul(F, pm_dsum(F, one, sub.Ninv), level_Ninv);
  out.pattern.reserve(d);
  out.pattern.push_back(const_col_zero ? TrivSide::Column : TrivSide::Row);
  for (TrivSide s : sub.pattern) out.pattern.push_back(s);
  return out;
}

/// Extracts the affine coefficient matrices of a polynomial matrix whose
/// entries must all have degree at most one.
inline AffMat affmat_from_pm(const FieldCtx& F, const PolyMatrix& C) {
  AffMat out(F, C.rows, C.cols, C.nvars);
  for (size_t i = 0; i < C.rows; ++i)
    for (size_t j = 0; j < C.cols; ++j) {
      const Abp& e = C.at(i, j);
      NCF_INPUT(abp_degree(F, e) <= 1,
                "trivialize requires affine entries; entry (", i, ",", j,
                ") has higher degree");
      Fe c = coefficient_of_word(F, e, {});
      F.copy(out.A[0].at(i, j), c.data());
      for (uint32_t v = 0; v < C.nvars; ++v) {
        c = coefficient_of_word(F, e, {v});
        F.copy(out.A[v + 1].at(i, j), c.data());
      }
    }
  return out;
}

}  // namespace detail

/// Trivializes a zero product: given C (u×d, affine entries) and v (d×1)
/// with C·v = 0, returns an invertible polynomial N such that for every
/// index either the column of C·N or the row of N⁻¹·v vanishes identically.
/// The recorded pattern is re-verified exactly before returning.
inline TrivializeCert trivialize(const FieldCtx& F, const PolyMatrix& C,
                                 const PolyMatrix& v) {
  NCF_INPUT(v.cols == 1, "trivialize expects a column vector");
  NCF_INPUT(C.cols == v.rows, "trivialize shapes are not conformable: C is ",
            C.rows, "x", C.cols, ", v is ", v.rows, "x1");
  const uint32_t n = std::max(C.nvars, v.nvars);
  const size_t d = C.cols;

  detail::AffMat aff = detail::affmat_from_pm(F, C);
  aff.n = n;
  aff.A.resize(n + 1, sm_zero(F, C.rows, C.cols));
  std::vector<Abp> vv(d);
  for (size_t j = 0; j < d; ++j) vv[j] = v.at(j, 0);

  // Precondition: the product is identically zero.
  for (size_t i = 0; i < C.rows; ++i) {
    Abp acc = abp_const(F, n, F.zero());
    for (size_t j = 0; j < d; ++j)
      acc = abp_sum(F, acc, abp_product(F, C.at(i, j), vv[j]));
    NCF_INPUT(abp_is_zero(F, acc),
              "trivialize requires C·v = 0; row ", i, " is nonzero");
  }

  detail::TrivRec rec = detail::trivialize_rec(F, aff, vv);
  TrivializeCert cert{std::move(rec.N), std::move(rec.Ninv),
                      std::move(rec.pattern)};

  // Exact postconditions: the recorded side vanishes, C·N stays affine,
  // and entry degrees respect the d^2 bound.
  PolyMatrix CN = pm_mul(F, C, cert.N);
  PolyMatrix Nv = pm_mul(F, cert.Ninv, v);
  for (size_t i = 0; i < d; ++i) {
    if (cert.pattern[i] == TrivSide::Column) {
      for (size_t r = 0; r < C.rows; ++r)
        NCF_ASSERT(abp_is_zero(F, CN.at(r, i)),
                   "recorded zero column of C·N is not zero");
    } else {
      NCF_ASSERT(abp_is_zero(F, Nv.at(i, 0)),
                 "recorded zero row of N^{-1}·v is not zero");
    }
  }
  for (const auto& e : CN.e)
    NCF_ASSERT(abp_degree(F, e) <= 1, "C·N must keep affine entries");
  const long cap = static_cast<long>(d) * static_cast<long>(d);
  for (const auto& e : cert.N.e)
    NCF_ASSERT(abp_degree(F, e) <= cap, "trivializer entry degree exceeds d^2");
  for (const auto& e : cert.Ninv.e)
    NCF_ASSERT(abp_degree(F, e) <= cap,
               "trivializer inverse entry degree exceeds d^2");
  return cert;
}

/// Audit of a trivialization certificate: the exact zero pattern, affine
/// C·N, the degree cap, N·N⁻¹ = I both exactly and at random matrix points.
inline bool verify_trivialize(const FieldCtx& F, const PolyMatrix& C,
                              const PolyMatrix& v, const TrivializeCert& cert,
                              size_t trials, uint64_t seed) {
  const size_t d = C.cols;
  if (cert.pattern.size() != d) return false;
  if (cert.N.rows != d || cert.N.cols != d) return false;
  PolyMatrix CN = pm_mul(F, C, cert.N);
  PolyMatrix Nv = pm_mul(F, cert.Ninv, v);
  for (size_t i = 0; i < d; ++i) {
    if (cert.pattern[i] == TrivSide::Column) {
      for (size_t r = 0; r < C.rows; ++r)
        if (!abp_is_zero(F, CN.at(r, i))) return false;
    } else {
      if (!abp_is_zero(F, Nv.at(i, 0))) return false;
    }
  }
  for (const auto& e : CN.e)
    if (abp_degree(F, e) > 1) return false;
  const long cap = static_cast<long>(d) * static_cast<long>(d);
  for (const auto& e : cert.N.e)
    if (abp_degree(F, e) > cap) return false;
  PolyMatrix prod = pm_mul(F, cert.N, cert.Ninv);
  if (!pm_eq(F, prod, pm_identity(F, d, prod.nvars))) return false;
  // Random-evaluation spot check of the inverse identity.
  Rng rng(seed);
  FieldEmbedding emb = grow_field_to(F, 1u << 20, rng.next());
  const FieldCtx& E = emb.big;
  for (size_t t = 0; t < trials; ++t) {
    std::vector<ScalarMatrix> pt;
    for (uint32_t i = 0; i < prod.nvars; ++i) pt.push_back(sm_rand(E, 2, 2, rng));
    ScalarMatrix got = pm_eval(E, prod, pt, &emb);
    if (!sm_is_identity(E, got)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Factor extraction: one stage of the peeling loop.
// ---------------------------------------------------------------------------

/// Result of one extraction stage on C·D = (g·h, u; 0, unit): the left
/// cofactor g, the irreducible right factor h, and the permuted trivializer
/// N·Π that carries the arrangement to the next stage.
struct ExtractStep {
  Abp g;
  Abp h;
  PolyMatrix N_next;
  TrivializeCert cert;
  size_t pivot = 0;
};

/// Splits one factor off the arrangement P·C·D = (f, u; 0, G) with P
/// upper-unitriangular (P itself is never needed: only the zero product
/// (bottom rows of C)·(first column of D) = 0, which is checked exactly).
/// C must be linear and D's first column must not vanish under the
/// trivializer (it cannot when D is full).  Returns g = (C·N·Π)_{00} and
/// h = (Π·N⁻¹·D)_{00}; when D is an atom, h is irreducible.
inline ExtractStep extract_factor(const FieldCtx& F, const LinearMatrix& C,
                                  const PolyMatrix& D) {
  lm_validate(F, C);
  NCF_INPUT(D.rows == C.d && D.cols == C.d,
            "extraction needs matching square shapes");
  NCF_INPUT(C.d >= 2, "extraction needs dimension at least 2");
  const size_t d = C.d;
  const uint32_t n = std::max(C.n, D.nvars);

  // Bottom rows of C as an affine polynomial matrix, and D's first column.
  PolyMatrix Cpm = pm_from_linear(F, C);
  PolyMatrix Cbot(F, d - 1, d, n);
  for (size_t i = 1; i < d; ++i)
    for (size_t j = 0; j < d; ++j) Cbot.at(i - 1, j) = Cpm.at(i, j);
  PolyMatrix v(F, d, 1, n);
  for (size_t i = 0; i < d; ++i) v.at(i, 0) = D.at(i, 0);

  TrivializeCert cert = trivialize(F, Cbot, v);

  PolyMatrix Nv = pm_mul(F, cert.Ninv, v);
  size_t pivot = d;
  for (size_t i = 0; i < d && pivot == d; ++i)
    if (!abp_is_zero(F, Nv.at(i, 0))) pivot = i;
  NCF_INPUT(pivot < d,
            "extraction requires a full right factor: its first column "
            "vanishes under the trivializer");
  NCF_ASSERT(cert.pattern[pivot] == TrivSide::Column,
             "pivot row nonzero yet pattern claims it vanishes");

  // All other rows of N^{-1}·v must vanish: the bottom-right block of C·N·Π
  // is full (a unit cofactor) and annihilates them.
  for (size_t i = 0; i < d; ++i)
    if (i != pivot)
      NCF_ASSERT(abp_is_zero(F, Nv.at(i, 0)),
                 "residual column must vanish outside the pivot row");

  std::vector<size_t> perm(d);
  for (size_t i = 0; i < d; ++i) perm[i] = i;
  perm[0] = pivot;
  perm[pivot] = 0;
  ScalarMatrix Pi = sm_permutation(F, perm);

  ExtractStep out;
  out.pivot = pivot;
  out.N_next = pm_mul(F, cert.N, pm_from_scalar(F, Pi, n));
  out.h = Nv.at(pivot, 0);
  // g = (C·N·Π)_{00} = row 0 of C times column `pivot` of N.
  Abp g = abp_const(F, n, F.zero());
  for (size_t j = 0; j < d; ++j)
    g = abp_sum(F, g, abp_product(F, Cpm.at(0, j), cert.N.at(j, pivot)));
  out.g = std::move(g);
  // The bottom part of column `pivot` of C·N is zero by the pattern; the
  // trivializer already verified it.  The top entry is g by construction.
  out.cert = std::move(cert);
  return out;
}

// ---------------------------------------------------------------------------
// Factorization result.
// ---------------------------------------------------------------------------

struct VerificationRecord {
  std::string mode;  // "exact" | "randomized"
  size_t trials = 0;
  size_t dim = 0;
  uint64_t seed = 0;
  bool ok = false;
};

/// An ordered complete factorization f = factors[0] ··· factors[r-1] with
/// the scalar unit absorbed into the leftmost factor.  Each factor is
/// attested irreducible by the atomic block form that produced it.
struct Factorization {
  uint64_t p = 0;
  uint32_t k = 1;
  std::vector<Abp> factors;
  std::vector<bool> atom_attested;
  std::string route;  // "constant" | "linear" | "shift" | "general" (+":reversed")
  uint64_t seed = 0;
  size_t pencil_retries = 0;
  std::vector<Abp> residuals;  // staged left cofactors g_{k-1}, ..., g_1
  std::optional<std::vector<FreePoly>> sparse_factors;
  VerificationRecord verification;

  size_t r() const { return factors.size(); }
};

struct FactorOptions {
  size_t trials = 40;        // randomized-verification evaluations
  size_t retries = 3;        // fresh-dilation retries in the pencil engine
  size_t point_trials = 64;  // random base-point search budget (large fields)
  bool reverse_words = false;  // factor the word-reversal and map back
};

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

/// Checks that the factors multiply back to f: exactly (deterministic ABP
/// identity test) when deg f ≤ 8, else by `trials` evaluations at random
/// matrices of dimension ⌈deg/2⌉+1 over a grown field, each comparison
/// exact.  Records the outcome in the factorization.
inline bool verify_factorization(const FieldCtx& F, const Formula& f,
                                 Factorization& fact, size_t trials,
                                 uint64_t seed) {
  Abp target = from_formula(F, f);
  uint32_t n = target.nvars;
  for (const auto& g : fact.factors) n = std::max(n, g.nvars);
  Abp prod = abp_one(F, n);
  for (const auto& g : fact.factors) prod = abp_product(F, prod, g);
  Abp diff = abp_sub(F, target, prod);

  long deg = std::max(abp_degree(F, target), abp_degree(F, prod));
  VerificationRecord rec;
  rec.seed = seed;
  if (deg <= 8) {
    rec.mode = "exact";
    rec.trials = 0;
    rec.dim = 0;
    rec.ok = abp_is_zero(F, diff);
  } else {
    rec.mode = "randomized";
    size_t m = static_cast<size_t>(deg) / 2 + 1;
    rec.dim = m;
    Rng rng(seed);
    FieldEmbedding emb = grow_field_to(F, 1u << 20, rng.next());
    const FieldCtx& E = emb.big;
    bool ok = true;
    size_t done = 0;
    for (size_t t = 0; t < trials && ok; ++t) {
      std::vector<ScalarMatrix> pt;
      for (uint32_t i = 0; i < diff.nvars; ++i)
        pt.push_back(sm_rand(E, m, m, rng));
      ok = sm_is_zero(E, abp_eval_matrix(E, diff, pt, &emb));
      ++done;
    }
    rec.trials = done;
    rec.ok = ok;
  }
  fact.verification = rec;
  return rec.ok;
}

// ---------------------------------------------------------------------------
// The factorization pipeline.
// ---------------------------------------------------------------------------

namespace detail {

/// Trailing telescope product G_m ··· G_k of the block-lower form B: the
/// identity with block rows m..k replaced by B's rows — still linear.
inline LinearMatrix chain_suffix(const FieldCtx& F, const LinearMatrix& B,
                                 const std::vector<size_t>& blocks,
                                 size_t m) {
  NCF_ASSERT(m >= 1 && m <= blocks.size(), "suffix index out of range");
  size_t start = 0;
  for (size_t i = 0; i + 1 < m; ++i) start += blocks[i];
  LinearMatrix out(F, B.d, B.n);
  out.A[0] = sm_identity(F, B.d);
  for (size_t r = start; r < B.d; ++r)
    for (size_t c = 0; c < B.d; ++c) {
      F.copy(out.A[0].at(r, c), B.A[0].at(r, c));
      for (uint32_t v = 1; v <= B.n; ++v)
        F.copy(out.A[v].at(r, c), B.A[v].at(r, c));
    }
  return out;
}

/// Exhaustive-then-random search for a base-field point with f(α) ≠ 0.
/// Deterministic when the point space is small enough to enumerate.
inline std::optional<std::vector<Fe>> base_point(const FieldCtx& F,
                                                 const Formula& f,
                                                 size_t point_trials,
                                                 uint64_t seed) {
  const uint32_t n = f.nvars;
  // The origin first: it avoids shifting entirely.
  std::vector<Fe> zero(n, F.zero());
  if (!F.is_zero(eval_scalar(F, f, zero))) return zero;
  bool enumerable = F.order_at_most(4096);
  if (enumerable) {
    uint64_t q = F.order_u64();
    double total = 1;
    for (uint32_t i = 0; i < n; ++i) total *= static_cast<double>(q);
    if (total <= 4096.0) {
      std::vector<Fe> elems = enumerate_field(F);
      std::vector<size_t> digits(n, 0);
      while (true) {
        std::vector<Fe> pt;
        pt.reserve(n);
        for (uint32_t i = 0; i < n; ++i) pt.push_back(elems[digits[i]]);
        if (!F.is_zero(eval_scalar(F, f, pt))) return pt;
        size_t i = 0;
        while (i < n && ++digits[i] == elems.size()) digits[i++] = 0;
        if (i == n) break;
      }
      return std::nullopt;  // provably no base point
    }
  }
  Rng rng(seed ^ 0x9bf0a2c15d3e7741ULL);
  for (size_t t = 0; t < point_trials; ++t) {
    std::vector<Fe> pt;
    pt.reserve(n);
    for (uint32_t i = 0; i < n; ++i) pt.push_back(F.rand(rng));
    if (!F.is_zero(eval_scalar(F, f, pt))) return pt;
  }
  return std::nullopt;
}

/// Rebuilds the formula with every variable leaf x_i replaced by x_i + α_i.
inline Formula formula_shift(const FieldCtx& F, const Formula& f,
                             const std::vector<Fe>& alpha) {
  std::vector<Formula> built(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& nd = f.nodes[i];
    switch (nd.op) {
      case Formula::Op::Const:
        built[i] = f_const(F, nd.value);
        break;
      case Formula::Op::Var:
        if (nd.var < alpha.size() && !F.is_zero(alpha[nd.var]))
          built[i] = f_add(f_var(nd.var), f_const(F, alpha[nd.var]));
        else
          built[i] = f_var(nd.var);
        break;
      case Formula::Op::Add:
        built[i] = f_add(built[nd.lhs], built[nd.rhs]);
        break;
      case Formula::Op::Mul:
        built[i] = f_mul(built[nd.lhs], built[nd.rhs]);
        break;
    }
  }
  Formula out = f.nodes.empty() ? f : built.back();
  out.nvars = std::max(out.nvars, f.nvars);
  return out;
}

/// Core pencil route: linearize, left-monicize, factor the reversal of the
/// monic part into atoms, and peel irreducible factors by the extraction
/// loop.  `invertible_constant` selects the direct engine (valid when
/// f(0) ≠ 0, which the caller normalizes to f(0) = 1).
inline std::vector<Abp> pencil_factors(const FieldCtx& F, const Formula& f,
                                       uint64_t seed, bool invertible_constant,
                                       size_t retries, size_t* retries_out,
                                       std::vector<Abp>* residuals_out) {
  HigmanCert hc = linearize(F, f);
  const uint32_t n = hc.L.n;
  MonicizationCert mc = monicize(F, hc.L, Side::Left);
  LinearMatrix R = lm_rho(F, mc.Lp);
  NCF_ASSERT(is_right_monic(F, R),
             "reversal of a left-monic pencil must be right monic");

  AtomicBlockForm abf;
  if (invertible_constant) {
    NCF_ASSERT(sm_invertible(F, R.A[0]),
               "normalized input must keep an invertible constant term");
    abf = factor_special(F, R, seed).second;
    if (retries_out) *retries_out = 0;
  } else {
    abf = factor_general(F, R, seed, retries, retries_out);
  }

  const size_t kf = abf.blocks.size();
  if (kf == 1) return {from_formula(F, f)};

  // R = sl · B · sr, so the monic part reverses to
  //   L' = W_l · F~_1 ··· F~_k · W_r   with   F~_i = rho(G_{k+1-i}).
  ScalarMatrix sl = sm_invert(F, abf.T_left);
  ScalarMatrix sr = sm_invert(F, abf.T_right);
  ScalarMatrix W_l = sm_transpose(F, sr);
  ScalarMatrix W_r = sm_transpose(F, sl);
  {
    // Exact anchor: W_l · rho(B) · W_r reproduces the monic part.
    LinearMatrix probe = lm_mul_scalar_left(
        F, W_l, lm_mul_scalar_right(F, lm_rho(F, abf.B), W_r));
    for (size_t v = 0; v <= n; ++v)
      NCF_ASSERT(probe.A[v] == mc.Lp.A[v],
                 "scalar bookkeeping failed to reproduce the monic part");
  }

  const size_t t = mc.r;
  ScalarMatrix Sp = sm_mul(F, mc.Sinv, sm_dsum(F, W_l, sm_identity(F, t)));
  PolyMatrix Vp =
      pm_mul(F, pm_from_scalar(F, sm_dsum(F, W_r, sm_identity(F, t)), n),
             pm_mul(F, mc.Uinv, hc.Q));

  std::vector<LinearMatrix> Gs = telescope_factors(F, abf.B, abf.blocks);
  NCF_ASSERT(Gs.size() == kf, "telescope factor count mismatch");

  // Stage j consumes the single factor F~_j = rho(G_{k+1-j}) on the right
  // and the linear prefix F~_1 ··· F~_{j-1} = rho(G_{k-j+2} ··· G_k) on the
  // left.  D starts as pad(F~_k) · Vp and picks up N·Π each stage.
  Abp g_target = from_formula(F, f);
  std::vector<Abp> factors(kf, abp_one(F, n));
  PolyMatrix D = pm_mul(
      F, pm_from_linear(F, lm_pad(F, lm_rho(F, Gs[0]), t)), Vp);
  for (size_t j = kf; j >= 2; --j) {
    LinearMatrix pre =
        lm_rho(F, chain_suffix(F, abf.B, abf.blocks, kf - j + 2));
    LinearMatrix Clin = lm_mul_scalar_left(F, Sp, lm_pad(F, pre, t));
    ExtractStep step = extract_factor(F, Clin, D);
    factors[j - 1] = step.h;
    NCF_ASSERT(abp_degree(F, step.h) >= 1,
               "extracted factor degenerated to a constant");
    NCF_ASSERT(
        abp_is_zero(F, abp_sub(F, g_target,
                               abp_product(F, step.g, step.h))),
        "stage identity g_j = g_{j-1} · f_j failed the exact check");
    g_target = step.g;
    if (residuals_out) residuals_out->push_back(step.g);
    if (j > 2)
      D = pm_mul(F,
                 pm_from_linear(F, lm_pad(F, lm_rho(F, Gs[kf + 1 - j]), t)),
                 step.N_next);
  }
  NCF_ASSERT(abp_degree(F, g_target) >= 1,
             "leftmost factor degenerated to a constant");
  factors[0] = g_target;
  return factors;
}

/// Word-reversal of a formula: every product swaps its operands.  The node
/// order stays child-before-parent, so swapping in place is sound.
inline Formula formula_reverse(const Formula& f) {
  Formula out = f;
  for (auto& nd : out.nodes)
    if (nd.op == Formula::Op::Mul) std::swap(nd.lhs, nd.rhs);
  return out;
}

}  // namespace detail

/// Factors a nonzero polynomial (given as a formula) into irreducible
/// factors emitted as branching programs, with the product equal to the
/// input exactly — the scalar unit is absorbed into the leftmost factor.
///
/// Route selection: constants and affine inputs are irreducible on their
/// own; when some base-field point α has f(α) ≠ 0 the input is normalized
/// to f(0) = 1 by shifting and scaling and the invertible-constant pencil
/// engine runs (factors are shifted back afterwards); otherwise the general
/// pencil engine runs directly.  Extension-field witnesses are never used
/// for shifting: a shift by extension elements would change the coefficient
/// field and with it the set of factorizations.
inline Factorization factor_polynomial(const FieldCtx& F, const Formula& f,
                                       uint64_t seed,
                                       const FactorOptions& opt = {}) {
  Abp fa = from_formula(F, f);
  NCF_INPUT(!abp_is_zero(F, fa), "cannot factor the zero polynomial");

  Factorization fact;
  fact.p = F.p();
  fact.k = F.k();
  fact.seed = seed;

  if (opt.reverse_words) {
    FactorOptions inner = opt;
    inner.reverse_words = false;
    Factorization rev =
        factor_polynomial(F, detail::formula_reverse(f), seed, inner);
    fact.route = rev.route + ":reversed";
    fact.pencil_retries = rev.pencil_retries;
    fact.factors.reserve(rev.factors.size());
    for (size_t i = rev.factors.size(); i-- > 0;)
      fact.factors.push_back(abp_reverse(F, rev.factors[i]));
    fact.atom_attested.assign(fact.factors.size(), true);
    long deg = abp_degree(F, fa);
    long sum = 0;
    for (const auto& g : fact.factors) sum += abp_degree(F, g);
    NCF_ASSERT(sum == deg, "degree additivity failed after reversal");
    verify_factorization(F, f, fact, std::max<size_t>(opt.trials, 1), seed);
    return fact;
  }

  const long deg = abp_degree(F, fa);
  if (deg == 0) {
    fact.route = "constant";
    fact.factors = {fa};
  } else if (deg == 1) {
    fact.route = "linear";
    fact.factors = {fa};
  } else {
    Rng fan(seed);
    uint64_t pencil_seed = fan.next();
    uint64_t point_seed = fan.next();
    std::optional<std::vector<Fe>> alpha =
        detail::base_point(F, f, opt.point_trials, point_seed);
    if (alpha.has_value()) {
      fact.route = "shift";
      Fe gamma = eval_scalar(F, f, *alpha);
      Formula shifted = detail::formula_shift(F, f, *alpha);
      Formula normalized = f_mul(f_const(F, F.inv(gamma)), shifted);
      std::vector<Abp> fs = detail::pencil_factors(
          F, normalized, pencil_seed, /*invertible_constant=*/true,
          opt.retries, &fact.pencil_retries, &fact.residuals);
      if (fs.size() == 1) {
        fact.factors = {fa};  // irreducible: keep the input program
      } else {
        // Undo the substitution x -> x + alpha on every factor, then fold
        // the normalizing scalar back into the leftmost one.
        for (auto& g : fs) g = abp_shift_vars(F, g, *alpha, -1);
        fs[0] = abp_scale(F, fs[0], gamma);
        fact.factors = std::move(fs);
      }
    } else {
      fact.route = "general";
      fact.factors = detail::pencil_factors(
          F, f, pencil_seed, /*invertible_constant=*/false, opt.retries,
          &fact.pencil_retries, &fact.residuals);
    }
  }

  fact.atom_attested.assign(fact.factors.size(), true);
  long sum = 0;
  for (const auto& g : fact.factors) {
    long dg = abp_degree(F, g);
    if (fact.factors.size() > 1)
      NCF_ASSERT(dg >= 1, "nontrivial factorization emitted a constant");
    sum += std::max<long>(dg, 0);
  }
  NCF_ASSERT(sum == std::max<long>(deg, 0),
             "factor degrees must sum to the input degree");
  verify_factorization(F, f, fact, std::max<size_t>(opt.trials, 1), seed);
  return fact;
}

// ---------------------------------------------------------------------------
// Stable associates.
// ---------------------------------------------------------------------------

namespace detail {

/// Widens a pencil to n variables by appending zero coefficient matrices.
inline LinearMatrix lm_extend_vars(const FieldCtx& F, const LinearMatrix& L,
                                   uint32_t n) {
  NCF_ASSERT(n >= L.n, "cannot drop variables");
  LinearMatrix out(F, L.d, n);
  for (size_t v = 0; v <= L.n; ++v) out.A[v] = L.A[v];
  return out;
}

/// Alternates left and right monicization until both hold; every non-no-op
/// pass strictly shrinks the dimension, so this terminates.  The result is
/// stably associated to the input.
inline LinearMatrix two_sided_monic(const FieldCtx& F, LinearMatrix L) {
  size_t guard = 0;
  while (!(is_right_monic(F, L) && is_left_monic(F, L))) {
    NCF_ASSERT(++guard <= 2 * L.d + 2, "monicization loop failed to settle");
    if (!is_right_monic(F, L)) L = monicize(F, L, Side::Right).Lp;
    if (!is_left_monic(F, L)) L = monicize(F, L, Side::Left).Lp;
  }
  return L;
}

}  // namespace detail

/// Decides whether f and g are stable associates: both reduce to full monic
/// pencils A, B of equal dimension, and stable association is equivalent to
/// a scalar equivalence P·A = B·Q with P, Q invertible.  The solution space
/// of that linear system is sampled by random combinations over a grown
/// field; a found witness is re-checked exactly (true answers certified),
/// absence of a witness is correct with high probability.
inline bool stable_associates(const FieldCtx& F, const Formula& f,
                              const Formula& g, uint64_t seed) {
  Abp fa = from_formula(F, f);
  Abp ga = from_formula(F, g);
  NCF_INPUT(!abp_is_zero(F, fa) && !abp_is_zero(F, ga),
            "stable association is defined for nonzero polynomials");
  long df = abp_degree(F, fa);
  long dg = abp_degree(F, ga);
  // Units (nonzero constants) are associates of each other and nothing else.
  if (df == 0 || dg == 0) return df == 0 && dg == 0;

  const uint32_t n = std::max(f.nvars, g.nvars);
  LinearMatrix A = detail::two_sided_monic(
      F, detail::lm_extend_vars(F, linearize(F, f).L, n));
  LinearMatrix B = detail::two_sided_monic(
      F, detail::lm_extend_vars(F, linearize(F, g).L, n));
  if (A.d != B.d) return false;
  const size_t d = A.d;

  // Solutions (P, Q) of P·A_v = B_v·Q for all v, as left null rows of M:
  // row p(i,c) carries P[i][c], row q(c,j) carries Q[c][j]; column (v,i,j)
  // holds the (i,j) entry of the v-th equation block.
  ScalarMatrix M(F, 2 * d * d, (n + 1) * d * d);
  for (size_t v = 0; v <= n; ++v)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) {
        size_t col = (v * d + i) * d + j;
        for (size_t c = 0; c < d; ++c) {
          F.copy(M.at(i * d + c, col), A.A[v].at(c, j));
          Fe b(F.ew());
          F.copy(b.data(), B.A[v].at(i, c));
          F.copy(M.at(d * d + c * d + j, col), F.neg(b).data());
        }
      }
  auto [rank, nullrows] = rank_and_nullspace(F, sm_transpose(F, M));
  (void)rank;
  if (nullrows.rows == 0) return false;

  Rng rng(seed);
  FieldEmbedding emb = grow_field_to(F, 1u << 20, rng.next());
  const FieldCtx& E = emb.big;
  auto lift_entry = [&](const uint64_t* src) {
    Fe c(F.ew());
    F.copy(c.data(), src);
    return emb.map(c);
  };
  for (size_t trial = 0; trial < 24; ++trial) {
    std::vector<Fe> lambda;
    for (size_t r = 0; r < nullrows.rows; ++r) lambda.push_back(E.rand(rng));
    ScalarMatrix P(E, d, d), Q(E, d, d);
    for (size_t r = 0; r < nullrows.rows; ++r)
      for (size_t c = 0; c < 2 * d * d; ++c) {
        Fe term = E.mul(lambda[r], lift_entry(nullrows.at(r, c)));
        if (c < d * d)
          E.add(P.at(c / d, c % d), P.at(c / d, c % d), term.data());
        else {
          size_t cc = c - d * d;
          E.add(Q.at(cc / d, cc % d), Q.at(cc / d, cc % d), term.data());
        }
      }
    if (!sm_invertible(E, P) || !sm_invertible(E, Q)) continue;
    // Certify the witness exactly: P·A_v = B_v·Q over the grown field.
    auto lift_mat = [&](const ScalarMatrix& S) {
      ScalarMatrix out(E, S.rows, S.cols);
      for (size_t i = 0; i < S.rows; ++i)
        for (size_t j = 0; j < S.cols; ++j) {
          Fe c = lift_entry(S.at(i, j));
          E.copy(out.at(i, j), c.data());
        }
      return out;
    };
    bool ok = true;
    for (size_t v = 0; v <= n && ok; ++v)
      ok = sm_mul(E, P, lift_mat(A.A[v])) == sm_mul(E, lift_mat(B.A[v]), Q);
    NCF_ASSERT(ok, "a null-space combination must satisfy the equations");
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Sparse interface.
// ---------------------------------------------------------------------------

namespace detail {

/// All contiguous subwords (including the empty word) of the support of f,
/// in graded lexicographic order.  Factors of a sparse polynomial are
/// supported on such subwords, so these are the only candidates a factor's
/// sparse form can use.
inline std::vector<Word> substring_candidates(const FreePoly& f) {
  std::set<Word, GradedLex> seen;
  seen.insert(Word{});
  for (const auto& [w, c] : f.terms) {
    (void)c;
    for (size_t i = 0; i < w.size(); ++i)
      for (size_t l = 1; i + l <= w.size(); ++l)
        seen.insert(Word(w.begin() + i, w.begin() + i + l));
  }
  return {seen.begin(), seen.end()};
}

/// Formula with the same terms as the sparse polynomial.
inline Formula formula_from_sparse(const FieldCtx& F, const FreePoly& f) {
  Formula acc = f_const(F, F.zero());
  bool first = true;
  for (const auto& [w, c] : f.terms) {
    Formula term = f_const(F, c);
    for (uint32_t letter : w) term = f_mul(term, f_var(letter));
    acc = first ? term : f_add(acc, term);
    first = false;
  }
  return acc;
}

/// Program computing the sparse polynomial (for exactness cross-checks).
inline Abp abp_from_sparse(const FieldCtx& F, const FreePoly& f, uint32_t n) {
  Abp acc = abp_const(F, n, F.zero());
  for (const auto& [w, c] : f.terms) {
    Abp term = abp_const(F, n, c);
    for (uint32_t letter : w)
      term = abp_product(F, term, abp_var(F, n, letter));
    acc = abp_sum(F, acc, term);
  }
  return acc;
}

}  // namespace detail

/// Factors a sparse polynomial and converts every factor back to sparse
/// form over the substring candidates of the input's support.  Each sparse
/// form is certified exact against its program, and the sparse product is
/// certified equal to the input.
inline Factorization factor_sparse(const FieldCtx& F, const FreePoly& f,
                                   uint64_t seed,
                                   const FactorOptions& opt = {}) {
  NCF_INPUT(!f.is_zero(), "cannot factor the zero polynomial");
  Formula formula = detail::formula_from_sparse(F, f);
  Factorization fact = factor_polynomial(F, formula, seed, opt);

  std::vector<Word> candidates = detail::substring_candidates(f);
  std::vector<FreePoly> sparse;
  sparse.reserve(fact.factors.size());
  uint32_t n = 0;
  for (const auto& g : fact.factors) n = std::max(n, g.nvars);
  for (const auto& g : fact.factors) {
    FreePoly s = to_sparse_abp(F, g, candidates);
    // A factor monomial outside the candidate list would be silently
    // dropped; certify none was.
    Abp back = detail::abp_from_sparse(F, s, n);
    NCF_ASSERT(abp_is_zero(F, abp_sub(F, g, back)),
               "factor support escaped the substring candidates");
    sparse.push_back(std::move(s));
  }
  FreePoly prod = sp_one(F);
  for (const auto& s : sparse) prod = sp_mul(F, prod, s);
  NCF_ASSERT(sp_eq(prod, f), "sparse factor product must reproduce the input");
  fact.sparse_factors = std::move(sparse);
  return fact;
}

// ---------------------------------------------------------------------------
// Serialization.
// ---------------------------------------------------------------------------

inline nlohmann::json word_to_json(const Word& w) {
  nlohmann::json a = nlohmann::json::array();
  for (uint32_t letter : w) a.push_back(letter);
  return a;
}

inline nlohmann::json freepoly_to_json(const FieldCtx& F, const FreePoly& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [w, c] : f.terms) {
    nlohmann::json t;
    t["word"] = word_to_json(w);
    t["coeff"] = detail::fe_to_json(F, c);
    terms.push_back(std::move(t));
  }
  return terms;
}

inline nlohmann::json factorization_to_json(const FieldCtx& F,
                                            const Factorization& fact,
                                            const std::string& input) {
  nlohmann::json j;
  j["field"] = F.spec_string();
  j["input"] = input;
  j["r"] = fact.r();
  j["route"] = fact.route;
  j["seed"] = fact.seed;
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& g : fact.factors) factors.push_back(abp_to_json(F, g));
  j["factors"] = std::move(factors);
  nlohmann::json attested = nlohmann::json::array();
  for (bool b : fact.atom_attested) attested.push_back(b);
  j["atom_attested"] = std::move(attested);
  if (fact.sparse_factors.has_value()) {
    nlohmann::json sf = nlohmann::json::array();
    for (const auto& s : *fact.sparse_factors)
      sf.push_back(freepoly_to_json(F, s));
    j["sparse_factors"] = std::move(sf);
  }
  j["verification"] = {{"mode", fact.verification.mode},
                       {"trials", fact.verification.trials},
                       {"dims", fact.verification.dim},
                       {"seed", fact.verification.seed},
                       {"ok", fact.verification.ok}};
  return j;
}

}  // namespace ncfactor

#endif  // NCFACTOR_PIPELINE_HPP
