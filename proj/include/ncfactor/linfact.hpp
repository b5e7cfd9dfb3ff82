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
// Factorization of linear matrix pencils L = A_0 + sum_i A_i x_i over a
// finite field into atoms, with exact two-sided scalar certificates.
//
// Two entry points:
//
//  * factor_special handles pencils with an invertible constant term.
//    Peeling the constant leaves I + sum M_i x_i; refining along *monic*
//    invariant subspaces of {M_i} (invariant subspaces spanned by their own
//    generator images) produces a conjugate block-lower form whose diagonal
//    blocks are exactly the atoms, and telescoping the block rows turns
//    that form into a product of linear factors, one atom each.  Monicity
//    of the subspace is what makes both halves of a split right monic and
//    therefore non-units; an arbitrary invariant subspace may only split
//    off a unit factor and says nothing about atomness.
//
//  * factor_general handles full right-monic pencils with arbitrary
//    constant term.  An invertible dilation point reduces the question to a
//    dilated pencil with invertible constant, a monic invariant subspace of
//    the peeled dilation certifies a block split there, and the descent
//    step transfers that certificate to a two-sided scalar split of the
//    original pencil, which is refined recursively.
//
// Soundness contract: every reported split carries exact certificates
// (invertible scalar transforms, per-coefficient zero patterns, right-monic
// diagonal blocks, hence non-unit factors).  "Atom" answers inherit the
// one-sided randomized error of the invariant-subspace search and are
// retried under independent dilations before being accepted.

#ifndef NCFACTOR_LINFACT_HPP
#define NCFACTOR_LINFACT_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ncfactor/common.hpp"
#include "ncfactor/field.hpp"
#include "ncfactor/invsub.hpp"
#include "ncfactor/linmat.hpp"
#include "ncfactor/matrix.hpp"

namespace ncfactor {

// ---------------------------------------------------------------------------
// Certificates.
// ---------------------------------------------------------------------------

/// Two-sided scalar reduction of a pencil to block-lower form with atomic
/// diagonal blocks: T_left * L * T_right == B coefficient-wise, every
/// coefficient of B is block-lower for the listed diagonal block sizes, and
/// each diagonal block of B is a full right-monic pencil that admits no
/// further split.
struct AtomicBlockForm {
  ScalarMatrix T_left;
  ScalarMatrix T_right;
  LinearMatrix B;
  std::vector<size_t> blocks;
};

/// Complete multiplicative factorization of a pencil:
/// L == scalar_left * factors[0] * ... * factors[r-1] * scalar_right as
/// polynomial matrices, where every factor is a linear pencil equal to a
/// scalar unit times an identity-padded atom.
struct LinFactorization {
  ScalarMatrix scalar_left;
  std::vector<LinearMatrix> factors;
  ScalarMatrix scalar_right;
};

/// Exact verification of an atomic block form: shapes, invertibility of the
/// transforms, coefficient-wise equality T_left * A_v * T_right == B_v, the
/// block-lower zero pattern, and right-monicity of every diagonal block.
inline bool verify_atomic_block_form(const FieldCtx& F, const LinearMatrix& L,
                                     const AtomicBlockForm& abf) {
  lm_validate(F, L);
  lm_validate(F, abf.B);
  if (abf.B.d != L.d || abf.B.n != L.n) return false;
  size_t total = 0;
  for (size_t b : abf.blocks) {
    if (b == 0) return false;
    total += b;
  }
  if (total != L.d) return false;
  if (abf.T_left.rows != L.d || abf.T_left.cols != L.d) return false;
  if (abf.T_right.rows != L.d || abf.T_right.cols != L.d) return false;
  if (!sm_invertible(F, abf.T_left) || !sm_invertible(F, abf.T_right))
    return false;
  for (uint32_t v = 0; v <= L.n; ++v) {
    ScalarMatrix prod =
        sm_mul(F, sm_mul(F, abf.T_left, L.A[v]), abf.T_right);
    if (!(prod == abf.B.A[v])) return false;
    if (!is_block_lower(F, abf.B.A[v], abf.blocks)) return false;
  }
  size_t off = 0;
  for (size_t b : abf.blocks) {
    if (!is_right_monic(F, lm_block(F, abf.B, off, off, b))) return false;
    off += b;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Telescoping: block-lower form -> product of linear factors.
// ---------------------------------------------------------------------------

/// Splits a block-lower pencil into one linear factor per block row: factor
/// j agrees with B on block row j and is the identity elsewhere.  Because
/// the row support of an earlier factor ends before the row block of a
/// later one begins, all cross terms vanish and the ascending product
/// F_1 * F_2 * ... * F_r equals B exactly.  Factor j equals a scalar unit
/// times the j-th diagonal block padded with identities, so it is an atom
/// precisely when that block is.
inline std::vector<LinearMatrix> telescope_factors(
    const FieldCtx& F, const LinearMatrix& B,
    const std::vector<size_t>& blocks) {
  lm_validate(F, B);
  size_t total = 0;
  for (size_t b : blocks) {
    NCF_INPUT(b > 0, "telescope_factors: zero-sized block");
    total += b;
  }
  NCF_INPUT(total == B.d, "telescope_factors: blocks must tile the pencil");
  for (uint32_t v = 0; v <= B.n; ++v)
    NCF_INPUT(is_block_lower(F, B.A[v], blocks),
              "telescope_factors: pencil is not block-lower");
  std::vector<LinearMatrix> out;
  out.reserve(blocks.size());
  size_t off = 0;
  for (size_t b : blocks) {
    LinearMatrix Fj(F, B.d, B.n);
    Fj.A[0] = sm_identity(F, B.d);
    sm_set_block(F, Fj.A[0], off, 0, sm_block(F, B.A[0], off, 0, b, B.d));
    for (uint32_t v = 1; v <= B.n; ++v)
      sm_set_block(F, Fj.A[v], off, 0, sm_block(F, B.A[v], off, 0, b, B.d));
    out.push_back(std::move(Fj));
    off += b;
  }
  return out;
}

/// Randomized check of the product identity L == scalar_left * prod(factors)
/// * scalar_right: evaluates both sides at random matrix tuples over an
/// extension field (so small base fields still separate polynomials) with
/// matrix sizes cycling through 1..3, and compares exactly.
inline bool verify_lin_factorization(const FieldCtx& F, const LinearMatrix& L,
                                     const LinFactorization& lf,
                                     size_t trials, uint64_t seed) {
  lm_validate(F, L);
  if (lf.scalar_left.rows != L.d || lf.scalar_left.cols != L.d) return false;
  if (lf.scalar_right.rows != L.d || lf.scalar_right.cols != L.d) return false;
  for (const auto& Fi : lf.factors) {
    lm_validate(F, Fi);
    if (Fi.d != L.d || Fi.n != L.n) return false;
  }
  Rng rng(seed);
  FieldEmbedding emb = grow_field_to(F, 64, rng.next());
  const FieldCtx& E = emb.big;
  auto lift = [&](const ScalarMatrix& S, size_t m) {
    ScalarMatrix out(E, S.rows * m, S.cols * m);
    Fe c(F.ew());
    for (size_t i = 0; i < S.rows; ++i)
      for (size_t j = 0; j < S.cols; ++j) {
        F.copy(c.data(), S.at(i, j));
        Fe img = emb.map(c);
        for (size_t t = 0; t < m; ++t)
          E.copy(out.at(i * m + t, j * m + t), img.data());
      }
    return out;
  };
  for (size_t t = 0; t < trials; ++t) {
    size_t m = 1 + (t % 3);
    std::vector<ScalarMatrix> pt;
    pt.reserve(L.n);
    for (uint32_t i = 0; i < L.n; ++i) pt.push_back(sm_rand(E, m, m, rng));
    ScalarMatrix lhs = eval_linmat(E, L, pt, &emb);
    ScalarMatrix acc = lift(lf.scalar_left, m);
    for (const auto& Fi : lf.factors)
      acc = sm_mul(E, acc, eval_linmat(E, Fi, pt, &emb));
    acc = sm_mul(E, acc, lift(lf.scalar_right, m));
    if (!(acc == lhs)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Pencils with invertible constant term.
// ---------------------------------------------------------------------------

/// Factorizes a right-monic pencil whose constant term is invertible.  The
/// constant is peeled off on the requested side, the remaining coefficients
/// are refined along monic invariant subspaces into a conjugate block-lower
/// form whose diagonal blocks are atoms, and the block rows are telescoped
/// into linear factors.  Returns the factorization together with the atomic
/// block form of L itself; a single block means L is an atom.  Throws
/// domain_error if the constant term is singular or the pencil is not right
/// monic.
inline std::pair<LinFactorization, AtomicBlockForm> factor_special(
    const FieldCtx& F, const LinearMatrix& L, uint64_t seed,
    Side peel = Side::Right, size_t budget = 0) {
  lm_validate(F, L);
  NCF_REQUIRE(sm_invertible(F, L.A[0]),
              "factor_special needs an invertible constant term");
  NCF_REQUIRE(is_right_monic(F, L),
              "factor_special needs a right-monic pencil");
  ScalarMatrix a0inv = sm_invert(F, L.A[0]);
  std::vector<ScalarMatrix> mats;
  mats.reserve(L.n);
  for (uint32_t i = 1; i <= L.n; ++i)
    mats.push_back(peel == Side::Right ? sm_mul(F, a0inv, L.A[i])
                                       : sm_mul(F, L.A[i], a0inv));
  AtomicFlag fl = atomic_flag_monic(F, L.d, mats, seed, budget);
  // B = T * (I + sum mats x_i) * Tinv has constant term I and inherits the
  // block-lower shape from the refinement.
  LinearMatrix B(F, L.d, L.n);
  B.A[0] = sm_identity(F, L.d);
  for (uint32_t i = 1; i <= L.n; ++i)
    B.A[i] = sm_mul(F, sm_mul(F, fl.T, mats[i - 1]), fl.Tinv);
  AtomicBlockForm abf;
  abf.B = B;
  abf.blocks = fl.blocks;
  LinFactorization lf;
  lf.factors = telescope_factors(F, B, fl.blocks);
  if (peel == Side::Right) {
    // L = A0 * (I + sum) and I + sum = Tinv * B * T.
    abf.T_left = sm_mul(F, fl.T, a0inv);
    abf.T_right = fl.Tinv;
    lf.scalar_left = sm_mul(F, L.A[0], fl.Tinv);
    lf.scalar_right = fl.T;
  } else {
    // L = (I + sum) * A0 and I + sum = Tinv * B * T.
    abf.T_left = fl.T;
    abf.T_right = sm_mul(F, a0inv, fl.Tinv);
    lf.scalar_left = fl.Tinv;
    lf.scalar_right = sm_mul(F, fl.T, L.A[0]);
  }
  NCF_ASSERT(verify_atomic_block_form(F, L, abf),
             "factor_special produced an invalid certificate");
  return {std::move(lf), std::move(abf)};
}

// ---------------------------------------------------------------------------
// Descent: a split of a dilated pencil induces a split of the pencil.
// ---------------------------------------------------------------------------

/// Invertible U, V with every coefficient of U * L * V block-lower for the
/// block sizes (ep, epp).
struct DescentSplit {
  ScalarMatrix U;
  ScalarMatrix V;
  size_t ep = 0;
  size_t epp = 0;
};

namespace detail {

/// The first `want` rows of M that are linearly independent, in order.
inline ScalarMatrix select_independent_rows(const FieldCtx& F,
                                            const ScalarMatrix& M,
                                            size_t want) {
  ScalarMatrix out(F, want, M.cols);
  size_t got = 0;
  for (size_t r = 0; r < M.rows && got < want; ++r) {
    ScalarMatrix trial(F, got + 1, M.cols);
    sm_set_block(F, trial, 0, 0, sm_block(F, out, 0, 0, got, M.cols));
    sm_set_block(F, trial, got, 0, sm_block(F, M, r, 0, 1, M.cols));
    if (sm_rank(F, std::move(trial)) == got + 1) {
      sm_set_block(F, out, got, 0, sm_block(F, M, r, 0, 1, M.cols));
      ++got;
    }
  }
  NCF_ASSERT(got == want, "not enough independent rows");
  return out;
}

/// Coordinate projector onto U "minus" T: fix a basis of the intersection,
/// extend it through U, complete to the whole space; the matrix keeps the
/// middle coordinates and kills the rest.  With rows_act the result acts on
/// row vectors (w -> w * Phat), otherwise on column vectors (v -> Phat * v).
/// Its rank is dim U - dim(U cap T), its range lies in U, and it
/// annihilates U cap T.
inline ScalarMatrix setminus_projector(const FieldCtx& F, size_t dim,
                                       const Subspace& U, const Subspace& T,
                                       bool rows_act) {
  Subspace inter = U.intersect(F, T);
  ScalarMatrix rows(F, dim, dim);
  size_t got = 0;
  auto push_greedy = [&](const ScalarMatrix& cand) {
    for (size_t r = 0; r < cand.rows && got < dim; ++r) {
      ScalarMatrix trial(F, got + 1, dim);
      sm_set_block(F, trial, 0, 0, sm_block(F, rows, 0, 0, got, dim));
      sm_set_block(F, trial, got, 0, sm_block(F, cand, r, 0, 1, dim));
      if (sm_rank(F, std::move(trial)) == got + 1) {
        sm_set_block(F, rows, got, 0, sm_block(F, cand, r, 0, 1, dim));
        ++got;
      }
    }
  };
  push_greedy(inter.basis());
  const size_t r0 = got;
  NCF_ASSERT(r0 == inter.dim(), "intersection basis must be independent");
  push_greedy(U.basis());
  const size_t k0 = got;
  NCF_ASSERT(k0 == U.dim(), "basis extension through U failed");
  push_greedy(sm_identity(F, dim));
  NCF_ASSERT(got == dim, "basis completion failed");
  ScalarMatrix D(F, dim, dim);
  for (size_t j = r0; j < k0; ++j) F.set_one(D.at(j, j));
  if (rows_act) {
    // w = alpha * rows, keep the middle coordinates: Phat = rows^-1 D rows.
    return sm_mul(F, sm_mul(F, sm_invert(F, rows), D), rows);
  }
  // v = rows^T alpha: Phat = rows^T D (rows^T)^-1.
  ScalarMatrix BT = sm_transpose(F, rows);
  return sm_mul(F, sm_mul(F, BT, D), sm_invert(F, BT));
}

}  // namespace detail

/// Transfers a block split of a dilated pencil back to the pencil itself.
/// Input: L of dimension d; a dilation size ell; invertible G, H of
/// dimension D = d * ell such that every coefficient of G * Ld * H has a
/// zero dp x dpp upper-right block, where Ld is L with x_i replaced by an
/// ell x ell matrix of fresh variables around any dilation point (only the
/// slice identities below depend on G and H, not on the point itself).
/// Output: invertible U, V with every coefficient of U * L * V block-lower
/// with diagonal sizes (ep, epp), ep + epp = d.
///
/// Construction: slice the top dp rows of G and the right dpp columns of H
/// along the dilation coordinate,
///   P_b[r][a] = G[r][a * ell + b],   Q_b[a][c] = H[a * ell + b][D - dpp + c].
/// The certificate is equivalent to P_j A_v Q_k = 0 for all v >= 1 and all
/// j, k, together with sum_b P_b A_0 Q_b = 0.  A counting argument over the
/// slice ranges produces an index whose (projected) slice pair annihilates
/// the whole pencil and has ranks summing to at least d; picking rows and
/// columns from that pair and completing to invertible matrices gives the
/// split.  Among the admissible indices (scanned ascending, range-side
/// before projection-side) the first whose trailing diagonal block is right
/// monic is preferred, falling back to the first admissible one.
inline DescentSplit hkv_descent(const FieldCtx& F, const LinearMatrix& L,
                                size_t ell, const ScalarMatrix& G,
                                const ScalarMatrix& H, size_t dp,
                                size_t dpp) {
  lm_validate(F, L);
  const size_t d = L.d;
  const size_t D = d * ell;
  NCF_INPUT(ell >= 1, "descent: dilation size must be positive");
  NCF_INPUT(d >= 2, "descent: pencil dimension must be at least 2");
  bool has_var = false;
  for (uint32_t v = 1; v <= L.n && !has_var; ++v)
    if (!sm_is_zero(F, L.A[v])) has_var = true;
  NCF_INPUT(has_var, "descent: pencil must have a nonzero variable part");
  NCF_INPUT(G.rows == D && G.cols == D && H.rows == D && H.cols == D,
            "descent: transforms must be (d*ell) x (d*ell)");
  NCF_INPUT(dp >= 1 && dpp >= 1 && dp + dpp == D,
            "descent: block sizes must partition d*ell");
  NCF_INPUT(sm_invertible(F, G) && sm_invertible(F, H),
            "descent: transforms must be invertible");

  std::vector<ScalarMatrix> P(ell, ScalarMatrix(F, dp, d));
  std::vector<ScalarMatrix> Q(ell, ScalarMatrix(F, d, dpp));
  for (size_t b = 0; b < ell; ++b) {
    for (size_t r = 0; r < dp; ++r)
      for (size_t a = 0; a < d; ++a)
        F.copy(P[b].at(r, a), G.at(r, a * ell + b));
    for (size_t a = 0; a < d; ++a)
      for (size_t c = 0; c < dpp; ++c)
        F.copy(Q[b].at(a, c), H.at(a * ell + b, D - dpp + c));
  }

  // The sliced form of the certificate.
  {
    ScalarMatrix acc = sm_zero(F, dp, dpp);
    for (size_t b = 0; b < ell; ++b)
      acc = sm_add(F, acc, sm_mul(F, sm_mul(F, P[b], L.A[0]), Q[b]));
    NCF_INPUT(sm_is_zero(F, acc),
              "descent: constant-term certificate does not vanish");
    for (uint32_t v = 1; v <= L.n; ++v)
      for (size_t j = 0; j < ell; ++j)
        for (size_t k = 0; k < ell; ++k)
          NCF_INPUT(
              sm_is_zero(F, sm_mul(F, sm_mul(F, P[j], L.A[v]), Q[k])),
              "descent: variable certificate does not vanish");
  }

  // Slice ranges, sums of the others, and the set-minus projections.
  std::vector<Subspace> Us, Ws;
  Us.reserve(ell);
  Ws.reserve(ell);
  for (size_t b = 0; b < ell; ++b) {
    Us.push_back(Subspace::from_rows(F, sm_transpose(F, P[b])));
    Ws.push_back(Subspace::from_rows(F, Q[b]));
  }
  auto sum_others = [&F](const std::vector<Subspace>& S, size_t i,
                         size_t amb) {
    Subspace acc = Subspace::zero(F, amb);
    for (size_t b = 0; b < S.size(); ++b)
      if (b != i) acc = acc.sum(F, S[b]);
    return acc;
  };
  std::vector<ScalarMatrix> MP, NQ;  // Phat_i * P_i and Q_i * Qhat_i
  MP.reserve(ell);
  NQ.reserve(ell);
  std::vector<size_t> rp(ell), rq(ell), rhp(ell), rhq(ell);
  for (size_t i = 0; i < ell; ++i) {
    Subspace Ti = sum_others(Us, i, dp);
    Subspace TQi = sum_others(Ws, i, dpp);
    ScalarMatrix Phat = detail::setminus_projector(F, dp, Us[i], Ti, false);
    ScalarMatrix Qhat = detail::setminus_projector(F, dpp, Ws[i], TQi, true);
    MP.push_back(sm_mul(F, Phat, P[i]));
    NQ.push_back(sm_mul(F, Q[i], Qhat));
    rp[i] = sm_rank(F, P[i]);
    rq[i] = sm_rank(F, Q[i]);
    rhp[i] = sm_rank(F, MP[i]);
    rhq[i] = sm_rank(F, NQ[i]);
  }
  // Inclusion-exclusion rank bound: summed over the slices, rank plus
  // projected rank reaches twice the dimension of the top (resp. right)
  // strip, because the slices of an invertible transform span it.
  size_t sp = 0, sq = 0;
  for (size_t i = 0; i < ell; ++i) {
    sp += rp[i] + rhp[i];
    sq += rq[i] + rhq[i];
  }
  NCF_ASSERT(sp >= 2 * dp, "descent: row-side rank inequality failed");
  NCF_ASSERT(sq >= 2 * dpp, "descent: column-side rank inequality failed");

  // Admissible pairs: annihilating M, N with positive ranks summing to at
  // least d.  At least one exists; otherwise every variable coefficient
  // would be conjugate to zero, contradicting the nonzero variable part.
  struct Cand {
    const ScalarMatrix* M;
    const ScalarMatrix* N;
    size_t rm, rn;
  };
  std::vector<Cand> cands;
  for (size_t i = 0; i < ell; ++i) {
    if (rhp[i] >= 1 && rq[i] >= 1 && rhp[i] + rq[i] >= d)
      cands.push_back({&MP[i], &Q[i], rhp[i], rq[i]});
    if (rp[i] >= 1 && rhq[i] >= 1 && rp[i] + rhq[i] >= d)
      cands.push_back({&P[i], &NQ[i], rp[i], rhq[i]});
  }
  NCF_ASSERT(!cands.empty(), "descent: no admissible slice pair");

  std::optional<DescentSplit> fallback;
  for (const Cand& c : cands) {
    for (uint32_t v = 0; v <= L.n; ++v)
      NCF_ASSERT(sm_is_zero(F, sm_mul(F, sm_mul(F, *c.M, L.A[v]), *c.N)),
                 "descent: selected pair does not annihilate the pencil");
    size_t ep = c.rm < d - 1 ? c.rm : d - 1;
    size_t epp = d - ep;
    NCF_ASSERT(epp <= c.rn, "descent: split sizes infeasible");
    ScalarMatrix Urows = detail::select_independent_rows(F, *c.M, ep);
    ScalarMatrix Vcols_t =
        detail::select_independent_rows(F, sm_transpose(F, *c.N), epp);
    // U has the selected rows first, then a completion; V has a completion
    // first, then the selected columns last.
    ScalarMatrix U =
        sm_transpose(F, sm_complete_basis(F, sm_transpose(F, Urows)));
    ScalarMatrix Wfull =
        sm_complete_basis(F, sm_transpose(F, Vcols_t));  // [V' | completion]
    ScalarMatrix V(F, d, d);
    for (size_t r = 0; r < d; ++r) {
      for (size_t j = 0; j < d - epp; ++j)
        F.copy(V.at(r, j), Wfull.at(r, epp + j));
      for (size_t j = 0; j < epp; ++j)
        F.copy(V.at(r, d - epp + j), Wfull.at(r, j));
    }
    NCF_ASSERT(sm_invertible(F, U) && sm_invertible(F, V),
               "descent: completion must be invertible");
    LinearMatrix Bs(F, d, L.n);
    for (uint32_t v = 0; v <= L.n; ++v) {
      Bs.A[v] = sm_mul(F, sm_mul(F, U, L.A[v]), V);
      NCF_ASSERT(is_block_lower(F, Bs.A[v], {ep, epp}),
                 "descent: split zero pattern failed");
    }
    DescentSplit ds{std::move(U), std::move(V), ep, epp};
    if (is_right_monic(F, lm_block(F, Bs, ep, ep, epp))) return ds;
    if (!fallback.has_value()) fallback = std::move(ds);
  }
  return *fallback;
}

// ---------------------------------------------------------------------------
// General full right-monic pencils.
// ---------------------------------------------------------------------------

namespace detail {

inline AtomicBlockForm factor_general_impl(const FieldCtx& F,
                                           const LinearMatrix& L, Rng& rng,
                                           size_t tries,
                                           size_t* retry_count) {
  NCF_ASSERT(is_right_monic(F, L),
             "internal: recursion slice lost right-monicity");
  AtomicBlockForm atom{sm_identity(F, L.d), sm_identity(F, L.d), L, {L.d}};
  if (L.d == 1) return atom;  // degree-one 1x1 pencils are atoms
  bool degenerate_seen = false;
  for (size_t attempt = 0; attempt < tries; ++attempt) {
    if (attempt > 0 && retry_count != nullptr) ++*retry_count;
    DilationPoint pnt;
    try {
      pnt = find_invertible_dilation(F, L, rng.next());
    } catch (const domain_error&) {
      continue;  // unlucky sampling; fullness was certified upfront
    }
    Dilation dil = dilate(F, L, pnt.M);
    const size_t D = L.d * dil.ell;
    ScalarMatrix winv = sm_invert(F, pnt.witness);
    std::vector<ScalarMatrix> mats;
    mats.reserve(dil.L.n);
    for (uint32_t v = 1; v <= dil.L.n; ++v)
      mats.push_back(sm_mul(F, winv, dil.L.A[v]));
    auto V = monic_invariant_subspace(F, D, mats, rng.next());
    if (!V.has_value()) continue;  // no witness under this dilation
    // Change of basis putting the witness into the trailing coordinates, so
    // G * (dilated L) * H is block-lower with identity constant term.
    const size_t k = V->dim();
    ScalarMatrix withcomp = sm_complete_basis(F, sm_transpose(F, V->basis()));
    ScalarMatrix tinv(F, D, D);
    for (size_t i = 0; i < D; ++i) {
      for (size_t j = 0; j < D - k; ++j)
        F.copy(tinv.at(i, j), withcomp.at(i, k + j));
      for (size_t j = 0; j < k; ++j)
        F.copy(tinv.at(i, D - k + j), withcomp.at(i, j));
    }
    ScalarMatrix t = sm_invert(F, tinv);
    DescentSplit ds =
        hkv_descent(F, L, dil.ell, sm_mul(F, t, winv), tinv, D - k, k);
    LinearMatrix Bs(F, L.d, L.n);
    for (uint32_t v = 0; v <= L.n; ++v)
      Bs.A[v] = sm_mul(F, sm_mul(F, ds.U, L.A[v]), ds.V);
    LinearMatrix C = lm_block(F, Bs, 0, 0, ds.ep);
    LinearMatrix Dm = lm_block(F, Bs, ds.ep, ds.ep, ds.epp);
    NCF_ASSERT(is_right_monic(F, C),
               "leading block of a split of a right-monic pencil");
    if (!is_right_monic(F, Dm)) {
      // The trailing block could be a unit in disguise, so this split does
      // not certify anything; retry under an independent dilation.
      degenerate_seen = true;
      continue;
    }
    AtomicBlockForm a1 = factor_general_impl(F, C, rng, tries, retry_count);
    AtomicBlockForm a2 = factor_general_impl(F, Dm, rng, tries, retry_count);
    AtomicBlockForm out;
    out.T_left = sm_mul(F, sm_dsum(F, a1.T_left, a2.T_left), ds.U);
    out.T_right = sm_mul(F, ds.V, sm_dsum(F, a1.T_right, a2.T_right));
    out.blocks = a1.blocks;
    out.blocks.insert(out.blocks.end(), a2.blocks.begin(), a2.blocks.end());
    out.B = LinearMatrix(F, L.d, L.n);
    for (uint32_t v = 0; v <= L.n; ++v) {
      out.B.A[v] = sm_mul(F, sm_mul(F, out.T_left, L.A[v]), out.T_right);
      NCF_ASSERT(is_block_lower(F, out.B.A[v], out.blocks),
                 "assembled form must be block-lower");
    }
    return out;
  }
  NCF_ASSERT(!degenerate_seen,
             "a split witness was found but no retry produced a right-monic "
             "split");
  return atom;
}

}  // namespace detail

/// Factorizes a full right-monic pencil into an atomic block-lower form:
/// invertible S, S' with S * L * S' block-lower and every diagonal block a
/// full right-monic atom.  The number of blocks equals the number of atoms
/// in a complete factorization of L; a single block means L is an atom.
/// Atom leaves carry the one-sided error of the randomized subspace search,
/// so each leaf is accepted only after `retries` independent dilations; the
/// number of extra attempts consumed is reported through `retries_out` when
/// given.  Throws domain_error if L is not right monic or not full.
inline AtomicBlockForm factor_general(const FieldCtx& F, const LinearMatrix& L,
                                      uint64_t seed, size_t retries = 3,
                                      size_t* retries_out = nullptr) {
  lm_validate(F, L);
  NCF_REQUIRE(is_right_monic(F, L),
              "factor_general needs a right-monic pencil");
  Rng rng(seed);
  NCF_REQUIRE(is_full_randomized(F, L, 8, rng.next()),
              "factor_general needs a full pencil");
  if (retries_out != nullptr) *retries_out = 0;
  AtomicBlockForm out = detail::factor_general_impl(
      F, L, rng, retries == 0 ? 1 : retries, retries_out);
  NCF_ASSERT(verify_atomic_block_form(F, L, out),
             "factor_general produced an invalid certificate");
  return out;
}

}  // namespace ncfactor

#endif  // NCFACTOR_LINFACT_HPP