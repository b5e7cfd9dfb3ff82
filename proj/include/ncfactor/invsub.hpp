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
// Common invariant subspaces of matrix sets over a finite field, and the
// block-triangularizing change of basis they induce.
//
// The search is the randomized module-splitting method: sample a random
// element Theta of the matrix algebra (words in the generators with random
// coefficients), factor its minimal polynomial, and spin kernel vectors of
// the irreducible-factor evaluations.  A proper spin is an invariant
// subspace and is verified exactly before being returned.  When a factor g
// has dim ker g(Theta) == deg g, a full spin on both the module and its
// dual (transposed generators) certifies that no proper invariant subspace
// exists at all; otherwise a negative answer is only reported after the
// trial budget is exhausted, so the "none" side carries one-sided error
// that shrinks with the budget (the heuristic failure rate per good trial
// is bounded by roughly deg(g)/q on the usual module-splitting analysis).

#ifndef NCFACTOR_INVSUB_HPP
#define NCFACTOR_INVSUB_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ncfactor/matrix.hpp"

namespace ncfactor {

/// Smallest subspace containing `seed` that is carried into itself by every
/// matrix in `mats` acting on column vectors.  Basis rows store transposed
/// coordinates, so the image of a row r under A is r * A^T.
inline Subspace spin(const FieldCtx& F, const Subspace& seed,
                     const std::vector<ScalarMatrix>& mats) {
  size_t d = seed.ambient();
  for (const auto& A : mats)
    NCF_INPUT(A.rows == d && A.cols == d, "spin: matrix shape mismatch");
  Subspace cur = seed;
  for (;;) {
    const ScalarMatrix& B = cur.basis();
    ScalarMatrix stacked(F, B.rows * (mats.size() + 1), d);
    sm_set_block(F, stacked, 0, 0, B);
    size_t r0 = B.rows;
    for (const auto& A : mats) {
      sm_set_block(F, stacked, r0, 0, sm_mul(F, B, sm_transpose(F, A)));
      r0 += B.rows;
    }
    Subspace next = Subspace::from_rows(F, std::move(stacked));
    if (next.dim() == cur.dim()) return cur;
    cur = std::move(next);
  }
}

/// Exact invariance test: every image of a basis vector stays in the span.
inline bool is_invariant(const FieldCtx& F, const Subspace& V,
                         const std::vector<ScalarMatrix>& mats) {
  const ScalarMatrix& B = V.basis();
  for (const auto& A : mats) {
    NCF_INPUT(A.rows == V.ambient() && A.cols == V.ambient(),
              "is_invariant: matrix shape mismatch");
    ScalarMatrix stacked(F, 2 * B.rows, V.ambient());
    sm_set_block(F, stacked, 0, 0, B);
    sm_set_block(F, stacked, B.rows, 0, sm_mul(F, B, sm_transpose(F, A)));
    if (sm_rank(F, std::move(stacked)) != V.dim()) return false;
  }
  return true;
}

namespace detail {

/// A random element of the unital algebra generated by `mats`: a random
/// scalar plus a few random-coefficient words of length up to 2d.
inline ScalarMatrix random_algebra_element(const FieldCtx& F, size_t d,
                                           const std::vector<ScalarMatrix>& mats,
                                           Rng& rng) {
  ScalarMatrix theta = sm_scale(F, sm_identity(F, d), F.rand(rng));
  if (mats.empty()) return theta;
  size_t words = 1 + rng.below(4);
  for (size_t w = 0; w < words; ++w) {
    size_t len = 1 + rng.below(2 * d);
    ScalarMatrix M = mats[rng.below(mats.size())];
    for (size_t t = 1; t < len; ++t)
      M = sm_mul(F, M, mats[rng.below(mats.size())]);
    theta = sm_add(F, theta, sm_scale(F, M, F.rand_nonzero(rng)));
  }
  return theta;
}

}  // namespace detail

/// Searches for a common invariant subspace V with 0 < dim V < d of a set
/// of d x d matrices.  A returned subspace is always verified invariant
/// exactly; `std::nullopt` means none exists, certified exactly when a
/// dual-spin witness appeared and otherwise correct with high probability
/// after `budget` random algebra elements (default 20*d).
inline std::optional<Subspace> common_invariant_subspace(
    const FieldCtx& F, size_t d, const std::vector<ScalarMatrix>& mats,
    uint64_t seed, size_t budget = 0) {
  for (const auto& A : mats)
    NCF_INPUT(A.rows == d && A.cols == d,
              "common_invariant_subspace: matrix shape mismatch");
  if (d <= 1) return std::nullopt;
  if (budget == 0) budget = 20 * d;
  Rng rng(seed);
  std::vector<ScalarMatrix> matsT;
  matsT.reserve(mats.size());
  for (const auto& A : mats) matsT.push_back(sm_transpose(F, A));
  for (size_t trial = 0; trial < budget; ++trial) {
    ScalarMatrix theta = detail::random_algebra_element(F, d, mats, rng);
    UniPoly mp = min_poly(F, theta);
    auto factors = factor_univariate(F, mp, rng.next());
    for (const auto& [g, mult] : factors) {
      ScalarMatrix gval = up_eval_matrix(F, g, theta);
      auto [rank, ker] = rank_and_nullspace(F, gval);
      (void)rank;
      NCF_ASSERT(ker.rows > 0,
                 "minimal-polynomial factor with trivial kernel");
      bool found_full = false;
      for (size_t r = 0; r < ker.rows; ++r) {
        Subspace V = spin(F, Subspace::from_rows(F, sm_block(F, ker, r, 0, 1, d)),
                          mats);
        if (V.is_full()) {
          found_full = true;
          continue;
        }
        NCF_ASSERT(!V.is_zero(), "spin of a nonzero vector vanished");
        NCF_ASSERT(is_invariant(F, V, mats), "spin result not invariant");
        return V;
      }
      (void)found_full;
      // Every kernel vector generates the whole space.  When the kernel has
      // the minimal possible dimension deg g, it is a simple module over
      // the subalgebra generated by Theta, and a single dual spin decides
      // the question exactly: a proper dual-invariant subspace dualizes to
      // a proper invariant one, and a full dual spin certifies that none
      // exists.
      if (ker.rows == static_cast<size_t>(up_deg(F, g))) {
        ScalarMatrix gvalT = up_eval_matrix(F, g, sm_transpose(F, theta));
        auto [rankT, kerT] = rank_and_nullspace(F, gvalT);
        (void)rankT;
        NCF_ASSERT(kerT.rows > 0, "dual kernel must be nonzero");
        Subspace W =
            spin(F, Subspace::from_rows(F, sm_block(F, kerT, 0, 0, 1, d)), matsT);
        if (W.is_full()) return std::nullopt;  // certified: simple module
        Subspace V = W.perp(F);
        NCF_ASSERT(V.dim() > 0 && V.dim() < d, "dual complement not proper");
        NCF_ASSERT(is_invariant(F, V, mats),
                   "dual complement not invariant");
        return V;
      }
    }
  }
  return std::nullopt;  // budget exhausted without a witness either way
}

/// Exact zero-pattern test: with rows and columns partitioned into the
/// given consecutive blocks, every entry strictly above the block diagonal
/// (row block earlier than column block) must be zero.
inline bool is_block_lower(const FieldCtx& F, const ScalarMatrix& M,
                           const std::vector<size_t>& blocks) {
  size_t total = 0;
  for (size_t b : blocks) total += b;
  NCF_INPUT(M.rows == total && M.cols == total,
            "is_block_lower: blocks do not tile the matrix");
  std::vector<size_t> block_of(total);
  size_t off = 0, idx = 0;
  for (size_t b : blocks) {
    for (size_t i = 0; i < b; ++i) block_of[off + i] = idx;
    off += b;
    ++idx;
  }
  for (size_t i = 0; i < total; ++i)
    for (size_t j = 0; j < total; ++j)
      if (block_of[i] < block_of[j] && !F.is_zero(M.at(i, j))) return false;
  return true;
}

/// A change of basis T (with inverse) such that T * A * Tinv is
/// block-lower-triangular with the listed diagonal block sizes for every
/// generator A, and no diagonal block admits a further common invariant
/// subspace.
struct AtomicFlag {
  ScalarMatrix T;
  ScalarMatrix Tinv;
  std::vector<size_t> blocks;
};

/// Recursively refines the space along common invariant subspaces until
/// every diagonal block is unsplittable.  The invariant subspace found at
/// each level is placed in the trailing coordinates, so the leading
/// diagonal block carries the quotient action and the trailing one the
/// restriction.
inline AtomicFlag atomic_flag(const FieldCtx& F, size_t d,
                              const std::vector<ScalarMatrix>& mats,
                              uint64_t seed, size_t budget = 0) {
  for (const auto& A : mats)
    NCF_INPUT(A.rows == d && A.cols == d, "atomic_flag: matrix shape mismatch");
  AtomicFlag out{sm_identity(F, d), sm_identity(F, d), {}};
  if (d == 0) return out;
  Rng seeder(seed);
  uint64_t s_find = seeder.next();
  uint64_t s_quot = seeder.next();
  uint64_t s_res = seeder.next();
  auto V = common_invariant_subspace(F, d, mats, s_find, budget);
  if (!V.has_value()) {
    out.blocks = {d};
    return out;
  }
  size_t k = V->dim();
  // New coordinates put the invariant subspace last: Tinv's columns are the
  // completion followed by the subspace basis, so each conjugated generator
  // is [[quotient, 0], [mixing, restriction]].
  ScalarMatrix withcomp = sm_complete_basis(F, sm_transpose(F, V->basis()));
  ScalarMatrix tinv(F, d, d);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d - k; ++j) F.copy(tinv.at(i, j), withcomp.at(i, k + j));
    for (size_t j = 0; j < k; ++j) F.copy(tinv.at(i, d - k + j), withcomp.at(i, j));
  }
  ScalarMatrix t = sm_invert(F, tinv);
  std::vector<ScalarMatrix> quot, res;
  for (const auto& A : mats) {
    ScalarMatrix B = sm_mul(F, sm_mul(F, t, A), tinv);
    NCF_ASSERT(is_block_lower(F, B, {d - k, k}),
               "conjugation must realize the invariant block");
    quot.push_back(sm_block(F, B, 0, 0, d - k, d - k));
    res.push_back(sm_block(F, B, d - k, d - k, k, k));
  }
  AtomicFlag fq = atomic_flag(F, d - k, quot, s_quot, budget);
  AtomicFlag fr = atomic_flag(F, k, res, s_res, budget);
  out.T = sm_mul(F, sm_dsum(F, fq.T, fr.T), t);
  out.Tinv = sm_mul(F, tinv, sm_dsum(F, fq.Tinv, fr.Tinv));
  out.blocks = fq.blocks;
  out.blocks.insert(out.blocks.end(), fr.blocks.begin(), fr.blocks.end());
  return out;
}

/// Largest subspace on which every sufficiently long product of the
/// generators vanishes (column action): the limit of the increasing chain
/// T_0 = 0, T_{j+1} = {v : A v in T_j for every generator A}.  Any
/// invariant subspace whose generator images fail to span it leaks into
/// this core under iteration.
inline Subspace nilpotent_core(const FieldCtx& F, size_t d,
                               const std::vector<ScalarMatrix>& mats) {
  for (const auto& A : mats)
    NCF_INPUT(A.rows == d && A.cols == d,
              "nilpotent_core: matrix shape mismatch");
  Subspace T = Subspace::zero(F, d);
  for (;;) {
    // v maps into T under every generator iff W * A * v^T = 0 for all A,
    // where the rows of W are functionals cutting out T.
    Subspace Tp = T.perp(F);
    const ScalarMatrix& W = Tp.basis();
    ScalarMatrix stacked(F, W.rows * mats.size(), d);
    size_t r0 = 0;
    for (const auto& A : mats) {
      sm_set_block(F, stacked, r0, 0, sm_mul(F, W, A));
      r0 += W.rows;
    }
    auto [rank, null_rows] = rank_and_nullspace(F, stacked);
    (void)rank;
    Subspace next = Subspace::from_rows(F, std::move(null_rows));
    NCF_ASSERT(next.contains(F, T), "nilpotent core chain must increase");
    if (next.dim() == T.dim()) return T;
    T = std::move(next);
  }
}

/// Searches for a common invariant subspace V with 0 < dim V < d that is
/// additionally *monic*: the generator images span it, sum_i A_i(V) = V.
/// For the peeled coefficients of a pencil I + sum A_i x_i these are
/// exactly the subspaces inducing a two-sided block split with both
/// diagonal blocks right monic (hence non-units); a plain invariant
/// subspace can instead merely dress a unit factor (e.g. generators
/// E_21, E_11 share the invariant line span{e_2}, yet I + E_21 x + E_11 y
/// is an atom because the restriction to that line is zero).
///
/// Method: compute the nilpotent core T.  A monic V satisfies
/// V = sum_{|w| = j} w(V) for every j, so V never sits inside T.  If the
/// induced action on F^d / T is simple, no proper monic V exists at all:
/// such a V would surject onto the quotient, and then the modular law
/// turns T = (T cap V) + J*T into T contained in V, forcing V = F^d.
/// Otherwise any proper invariant subspace of the quotient pulls back to
/// a proper preimage whose stable image under the generators is a nonzero
/// monic witness.  "Found" answers are exact; "none" answers inherit the
/// one-sided budgeted error of common_invariant_subspace on the quotient
/// (and are exact when the quotient is one-dimensional or certified).
inline std::optional<Subspace> monic_invariant_subspace(
    const FieldCtx& F, size_t d, const std::vector<ScalarMatrix>& mats,
    uint64_t seed, size_t budget = 0) {
  for (const auto& A : mats)
    NCF_INPUT(A.rows == d && A.cols == d,
              "monic_invariant_subspace: matrix shape mismatch");
  if (d <= 1) return std::nullopt;
  Subspace T = nilpotent_core(F, d, mats);
  if (T.is_full()) return std::nullopt;
  const size_t k = T.dim();
  const size_t dq = d - k;
  if (dq == 1) return std::nullopt;  // quotient simple by dimension
  // Quotient action in coordinates that put the core last: Tinv's columns
  // are a completion followed by the core basis, so every conjugated
  // generator is [[quotient, 0], [mixing, core]].
  std::vector<ScalarMatrix> quot;
  ScalarMatrix tinv = sm_identity(F, d);
  if (k > 0) {
    ScalarMatrix withcomp = sm_complete_basis(F, sm_transpose(F, T.basis()));
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = 0; j < dq; ++j)
        F.copy(tinv.at(i, j), withcomp.at(i, k + j));
      for (size_t j = 0; j < k; ++j)
        F.copy(tinv.at(i, dq + j), withcomp.at(i, j));
    }
  }
  ScalarMatrix t = sm_invert(F, tinv);
  for (const auto& A : mats) {
    ScalarMatrix B = sm_mul(F, sm_mul(F, t, A), tinv);
    NCF_ASSERT(is_block_lower(F, B, {dq, k}),
               "the nilpotent core must be invariant");
    quot.push_back(sm_block(F, B, 0, 0, dq, dq));
  }
  auto Wq = common_invariant_subspace(F, dq, quot, seed, budget);
  if (!Wq.has_value()) return std::nullopt;
  // Preimage of the quotient witness: the core plus the lift of the basis
  // rows (leading-block coordinates mapped back through Tinv).
  ScalarMatrix lift(F, Wq->dim(), d);
  sm_set_block(F, lift, 0, 0, Wq->basis());
  lift = sm_mul(F, lift, sm_transpose(F, tinv));
  Subspace V = T.sum(F, Subspace::from_rows(F, std::move(lift)));
  NCF_ASSERT(V.dim() == k + Wq->dim() && V.dim() < d,
             "preimage of a proper quotient subspace must be proper");
  NCF_ASSERT(is_invariant(F, V, mats), "preimage must be invariant");
  // Stable image: iterate V <- sum_i A_i(V) until it stops shrinking.  The
  // limit stays nonzero because each iterate still surjects onto the
  // corresponding iterate in the quotient, where images never die.
  for (;;) {
    const ScalarMatrix& B = V.basis();
    ScalarMatrix stacked(F, B.rows * mats.size(), d);
    size_t r0 = 0;
    for (const auto& A : mats) {
      sm_set_block(F, stacked, r0, 0, sm_mul(F, B, sm_transpose(F, A)));
      r0 += B.rows;
    }
    Subspace img = Subspace::from_rows(F, std::move(stacked));
    NCF_ASSERT(V.contains(F, img), "image of an invariant subspace shrinks");
    if (img.dim() == V.dim()) break;
    V = std::move(img);
  }
  NCF_ASSERT(!V.is_zero(), "stable image of a quotient witness is nonzero");
  NCF_ASSERT(is_invariant(F, V, mats), "monic witness must be invariant");
  return V;
}

/// Variant of atomic_flag that refines only along monic invariant
/// subspaces.  Starting from the peeled coefficients of a right-monic
/// pencil with invertible constant term, every diagonal block of the
/// result keeps a full-row-rank coefficient stack, so the blocks are
/// exactly the atoms of the pencil rather than an arbitrary
/// triangularization (which could split off unit factors).
inline AtomicFlag atomic_flag_monic(const FieldCtx& F, size_t d,
                                    const std::vector<ScalarMatrix>& mats,
                                    uint64_t seed, size_t budget = 0) {
  for (const auto& A : mats)
    NCF_INPUT(A.rows == d && A.cols == d,
              "atomic_flag_monic: matrix shape mismatch");
  AtomicFlag out{sm_identity(F, d), sm_identity(F, d), {}};
  if (d == 0) return out;
  Rng seeder(seed);
  uint64_t s_find = seeder.next();
  uint64_t s_quot = seeder.next();
  uint64_t s_res = seeder.next();
  auto V = monic_invariant_subspace(F, d, mats, s_find, budget);
  if (!V.has_value()) {
    out.blocks = {d};
    return out;
  }
  size_t k = V->dim();
  ScalarMatrix withcomp = sm_complete_basis(F, sm_transpose(F, V->basis()));
  ScalarMatrix tinv(F, d, d);
  for (size_t i = 0; i < d; ++i) {
    for (size_t j = 0; j < d - k; ++j) F.copy(tinv.at(i, j), withcomp.at(i, k + j));
    for (size_t j = 0; j < k; ++j) F.copy(tinv.at(i, d - k + j), withcomp.at(i, j));
  }
  ScalarMatrix t = sm_invert(F, tinv);
  std::vector<ScalarMatrix> quot, res;
  for (const auto& A : mats) {
    ScalarMatrix B = sm_mul(F, sm_mul(F, t, A), tinv);
    NCF_ASSERT(is_block_lower(F, B, {d - k, k}),
               "conjugation must realize the invariant block");
    quot.push_back(sm_block(F, B, 0, 0, d - k, d - k));
    res.push_back(sm_block(F, B, d - k, d - k, k, k));
  }
  // The monic property in the new coordinates: the restriction blocks span
  // the subspace they act on.
  ScalarMatrix rstack(F, k, k * res.size());
  for (size_t i = 0; i < res.size(); ++i)
    sm_set_block(F, rstack, 0, i * k, res[i]);
  NCF_ASSERT(sm_rank(F, rstack) == k,
             "restriction to a monic subspace must span it");
  AtomicFlag fq = atomic_flag_monic(F, d - k, quot, s_quot, budget);
  AtomicFlag fr = atomic_flag_monic(F, k, res, s_res, budget);
  out.T = sm_mul(F, sm_dsum(F, fq.T, fr.T), t);
  out.Tinv = sm_mul(F, tinv, sm_dsum(F, fq.Tinv, fr.Tinv));
  out.blocks = fq.blocks;
  out.blocks.insert(out.blocks.end(), fr.blocks.begin(), fr.blocks.end());
  return out;
}

}  // namespace ncfactor

#endif  // NCFACTOR_INVSUB_HPP
