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

#include "ncfactor/invsub.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ncfactor;

namespace {

// ---------------------------------------------------------------------------
// Independent exhaustive oracle over F_2 (d <= 4).
//
// A subspace of F_2^d is represented as a bitmask over the 2^d vectors
// (bit v set <=> vector v is a member, with vectors encoded as d-bit
// integers).  All subspaces are enumerated by scanning every membership
// mask and keeping those that contain 0 and are closed under addition
// (XOR).  This is a brute-force model, entirely separate from the
// implementation under test.
// ---------------------------------------------------------------------------

// Applies a 0/1 matrix to a d-bit column vector over F_2.
uint32_t f2_apply(const FieldCtx& F, const ScalarMatrix& A, uint32_t v) {
  uint32_t w = 0;
  for (size_t i = 0; i < A.rows; ++i) {
    uint32_t bit = 0;
    for (size_t j = 0; j < A.cols; ++j)
      if (!F.is_zero(A.at(i, j)) && ((v >> j) & 1)) bit ^= 1;
    w |= bit << i;
  }
  return w;
}

bool f2_mask_is_subspace(uint32_t mask, uint32_t d) {
  if (!(mask & 1)) return false;  // must contain the zero vector
  uint32_t count = 1u << d;
  for (uint32_t a = 0; a < count; ++a) {
    if (!((mask >> a) & 1)) continue;
    for (uint32_t b = a; b < count; ++b) {
      if (!((mask >> b) & 1)) continue;
      if (!((mask >> (a ^ b)) & 1)) return false;
    }
  }
  return true;
}

std::vector<uint32_t> f2_all_subspaces(uint32_t d) {
  std::vector<uint32_t> out;
  uint64_t total = 1ull << (1u << d);
  for (uint64_t mask = 0; mask < total; ++mask)
    if (f2_mask_is_subspace(static_cast<uint32_t>(mask), d))
      out.push_back(static_cast<uint32_t>(mask));
  return out;
}

bool f2_mask_invariant(const FieldCtx& F, uint32_t mask, uint32_t d,
                       const std::vector<ScalarMatrix>& mats) {
  uint32_t count = 1u << d;
  for (uint32_t v = 0; v < count; ++v) {
    if (!((mask >> v) & 1)) continue;
    for (const auto& A : mats)
      if (!((mask >> f2_apply(F, A, v)) & 1)) return false;
  }
  return true;
}

// Oracle: does a common invariant subspace with 0 < dim < d exist?
bool f2_oracle_exists(const FieldCtx& F, uint32_t d,
                      const std::vector<ScalarMatrix>& mats) {
  for (uint32_t mask : f2_all_subspaces(d)) {
    uint32_t members = 0;
    for (uint32_t v = 0; v < (1u << d); ++v) members += (mask >> v) & 1;
    if (members <= 1 || members >= (1u << d)) continue;  // trivial
    if (f2_mask_invariant(F, mask, d, mats)) return true;
  }
  return false;
}

// Oracle closure: smallest invariant subspace containing the seed vectors,
// as a membership mask.  Built by alternating additive closure and matrix
// application until a fixpoint.
uint32_t f2_oracle_spin(const FieldCtx& F, uint32_t d,
                        const std::vector<uint32_t>& seeds,
                        const std::vector<ScalarMatrix>& mats) {
  uint32_t mask = 1;  // zero vector
  for (uint32_t s : seeds) mask |= 1u << s;
  uint32_t count = 1u << d;
  for (;;) {
    uint32_t before = mask;
    for (uint32_t a = 0; a < count; ++a) {
      if (!((mask >> a) & 1)) continue;
      for (uint32_t b = a; b < count; ++b)
        if ((mask >> b) & 1) mask |= 1u << (a ^ b);
    }
    for (uint32_t v = 0; v < count; ++v) {
      if (!((mask >> v) & 1)) continue;
      for (const auto& A : mats) mask |= 1u << f2_apply(F, A, v);
    }
    if (mask == before) return mask;
  }
}

// Membership mask of an implementation Subspace over F_2 for comparison.
uint32_t f2_mask_of(const FieldCtx& F, const Subspace& V) {
  uint32_t d = static_cast<uint32_t>(V.ambient());
  uint32_t mask = 1;
  uint32_t k = static_cast<uint32_t>(V.dim());
  for (uint32_t sel = 1; sel < (1u << k); ++sel) {
    uint32_t vec = 0;
    for (uint32_t r = 0; r < k; ++r) {
      if (!((sel >> r) & 1)) continue;
      for (uint32_t j = 0; j < d; ++j)
        if (!F.is_zero(V.basis().at(r, j))) vec ^= 1u << j;
    }
    mask |= 1u << vec;
  }
  return mask;
}

Subspace span_of_unit(const FieldCtx& F, size_t d, size_t i) {
  ScalarMatrix row(F, 1, d);
  F.set_one(row.at(0, i));
  return Subspace::from_rows(F, std::move(row));
}

// Sum of the generator images of V: span{A v : v in V, A in mats}.
Subspace image_sum(const FieldCtx& F, const Subspace& V,
                   const std::vector<ScalarMatrix>& mats) {
  const ScalarMatrix& B = V.basis();
  ScalarMatrix stacked(F, B.rows * mats.size(), V.ambient());
  size_t r0 = 0;
  for (const auto& A : mats) {
    sm_set_block(F, stacked, r0, 0, sm_mul(F, B, sm_transpose(F, A)));
    r0 += B.rows;
  }
  return Subspace::from_rows(F, std::move(stacked));
}

std::vector<ScalarMatrix> random_mats(const FieldCtx& F, size_t d, size_t n,
                                      Rng& rng) {
  std::vector<ScalarMatrix> mats;
  for (size_t i = 0; i < n; ++i) mats.push_back(sm_rand(F, d, d, rng));
  return mats;
}

}  // namespace

TEST_CASE("spin: frozen closures") {
  FieldCtx F2 = FieldCtx::prime(2);
  FieldCtx F5 = FieldCtx::prime(5);

  SECTION("identity fixes any seed line") {
    Subspace V = spin(F2, span_of_unit(F2, 2, 0), {sm_identity(F2, 2)});
    REQUIRE(V.dim() == 1);
    REQUIRE(V == span_of_unit(F2, 2, 0));
  }
  SECTION("cyclic shift orbits e1 to the full space") {
    // Hand derivation: the shift maps e1 -> e2 -> e3, so the closure of e1
    // contains all three unit vectors and is everything.
    ScalarMatrix P(F5, 3, 3);
    F5.set_one(P.at(1, 0));
    F5.set_one(P.at(2, 1));
    F5.set_one(P.at(0, 2));
    Subspace V = spin(F5, span_of_unit(F5, 3, 0), {P});
    REQUIRE(V.is_full());
  }
  SECTION("empty seed spins to the zero subspace") {
    Subspace V = spin(F2, Subspace::zero(F2, 3), {sm_identity(F2, 3)});
    REQUIRE(V.is_zero());
  }
  SECTION("no matrices: closure is the seed span itself") {
    ScalarMatrix rows = sm_from_ints(F5, {{1, 2, 3}, {0, 1, 4}});
    Subspace V = spin(F5, Subspace::from_rows(F5, rows), {});
    REQUIRE(V == Subspace::from_rows(F5, rows));
  }
}

TEST_CASE("spin agrees with the exhaustive closure oracle over F_2") {
  FieldCtx F = FieldCtx::prime(2);
  Rng rng(777);
  for (int trial = 0; trial < 60; ++trial) {
    uint32_t d = 2 + static_cast<uint32_t>(rng.below(3));
    size_t nm = 1 + rng.below(3);
    auto mats = random_mats(F, d, nm, rng);
    size_t nseed = rng.below(3);
    ScalarMatrix rows = sm_rand(F, nseed, d, rng);
    std::vector<uint32_t> seed_vecs;
    for (size_t r = 0; r < rows.rows; ++r) {
      uint32_t v = 0;
      for (uint32_t j = 0; j < d; ++j)
        if (!F.is_zero(rows.at(r, j))) v |= 1u << j;
      seed_vecs.push_back(v);
    }
    Subspace V = spin(F, Subspace::from_rows(F, rows), mats);
    REQUIRE(is_invariant(F, V, mats));
    REQUIRE(f2_mask_of(F, V) == f2_oracle_spin(F, d, seed_vecs, mats));
  }
}

TEST_CASE("common invariant subspace: frozen small instances") {
  FieldCtx F2 = FieldCtx::prime(2);
  FieldCtx F5 = FieldCtx::prime(5);

  SECTION("diag(1,2) over F_5 splits along an axis") {
    // Hand derivation: the eigenlines of diag(1,2) are exactly span{e1} and
    // span{e2}; any invariant line is an eigenline.
    std::vector<ScalarMatrix> mats = {sm_from_ints(F5, {{1, 0}, {0, 2}})};
    auto V = common_invariant_subspace(F5, 2, mats, 1);
    REQUIRE(V.has_value());
    REQUIRE(V->dim() == 1);
    REQUIRE(is_invariant(F5, *V, mats));
    bool axis = (*V == span_of_unit(F5, 2, 0)) || (*V == span_of_unit(F5, 2, 1));
    REQUIRE(axis);
  }
  SECTION("identity matrix: any line works") {
    std::vector<ScalarMatrix> mats = {sm_identity(F5, 3)};
    auto V = common_invariant_subspace(F5, 3, mats, 2);
    REQUIRE(V.has_value());
    REQUIRE(V->dim() == 1);
    REQUIRE(is_invariant(F5, *V, mats));
  }
  SECTION("E12 and E21 over F_2 have no common line") {
    // Hand derivation over F_2: the candidate lines are span{e1}, span{e2},
    // span{e1+e2}.  E21 moves e1 out of the first, E12 moves e2 out of the
    // second and e1+e2 out of the third.  Cross-checked below against the
    // exhaustive oracle.
    std::vector<ScalarMatrix> mats = {sm_from_ints(F2, {{0, 1}, {0, 0}}),
                                      sm_from_ints(F2, {{0, 0}, {1, 0}})};
    REQUIRE_FALSE(f2_oracle_exists(F2, 2, mats));
    auto V = common_invariant_subspace(F2, 2, mats, 3);
    REQUIRE_FALSE(V.has_value());
  }
  SECTION("dimension one has no nontrivial subspace") {
    std::vector<ScalarMatrix> mats = {sm_identity(F2, 1)};
    REQUIRE_FALSE(common_invariant_subspace(F2, 1, mats, 4).has_value());
  }
}

TEST_CASE("existence agrees with the exhaustive oracle over F_2") {
  FieldCtx F = FieldCtx::prime(2);
  Rng rng(4242);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    uint32_t d = 1 + static_cast<uint32_t>(rng.below(4));  // 1..4
    size_t nm = 1 + rng.below(3);
    auto mats = random_mats(F, d, nm, rng);
    bool expect = f2_oracle_exists(F, d, mats);
    auto got = common_invariant_subspace(F, d, mats, 9000 + trial);
    if (got.has_value()) {
      REQUIRE(got->dim() > 0);
      REQUIRE(got->dim() < d);
      REQUIRE(is_invariant(F, *got, mats));
      REQUIRE(f2_mask_invariant(F, f2_mask_of(F, *got), d, mats));
    }
    REQUIRE(got.has_value() == expect);
    ++checked;
  }
  REQUIRE(checked == 100);
}

TEST_CASE("existence sanity on larger fields") {
  FieldCtx F7 = FieldCtx::prime(7);
  SECTION("single upper-triangular matrix is reducible") {
    std::vector<ScalarMatrix> mats = {sm_from_ints(
        F7, {{1, 1, 0}, {0, 2, 1}, {0, 0, 3}})};
    auto V = common_invariant_subspace(F7, 3, mats, 5);
    REQUIRE(V.has_value());
    REQUIRE(is_invariant(F7, *V, mats));
  }
  SECTION("companion matrix of an irreducible cubic is irreducible") {
    // x^3 + x + 1 has no root mod 7 (values at 0..6: 1,3,4,3,6,5,6), so the
    // companion matrix admits no invariant line, and
    // a single matrix with irreducible characteristic polynomial admits no
    // invariant plane either (the dual companion argument).
    ScalarMatrix C = sm_from_ints(F7, {{0, 0, 6}, {1, 0, 6}, {0, 1, 0}});
    auto V = common_invariant_subspace(F7, 3, {C}, 6);
    REQUIRE_FALSE(V.has_value());
  }
  SECTION("extension field F_4 works end to end") {
    FieldCtx F4 = FieldCtx::extension(2, 2, {1, 1, 1});
    std::vector<ScalarMatrix> mats = {sm_from_ints(F4, {{1, 0}, {0, 0}})};
    auto V = common_invariant_subspace(F4, 2, mats, 7);
    REQUIRE(V.has_value());
    REQUIRE(is_invariant(F4, *V, mats));
  }
}

TEST_CASE("atomic flag: frozen block structures") {
  FieldCtx F2 = FieldCtx::prime(2);
  FieldCtx F5 = FieldCtx::prime(5);

  SECTION("zero matrix splits into unit blocks") {
    std::vector<ScalarMatrix> mats = {sm_zero(F2, 2, 2)};
    AtomicFlag fl = atomic_flag(F2, 2, mats, 11);
    REQUIRE(fl.blocks == std::vector<size_t>{1, 1});
    REQUIRE(sm_mul(F2, fl.T, fl.Tinv) == sm_identity(F2, 2));
  }
  SECTION("diag(1,2) over F_5 splits into unit blocks") {
    std::vector<ScalarMatrix> mats = {sm_from_ints(F5, {{1, 0}, {0, 2}})};
    AtomicFlag fl = atomic_flag(F5, 2, mats, 12);
    REQUIRE(fl.blocks == std::vector<size_t>{1, 1});
    for (const auto& A : mats)
      REQUIRE(is_block_lower(F5, sm_mul(F5, sm_mul(F5, fl.T, A), fl.Tinv),
                             fl.blocks));
  }
  SECTION("E12, E21 over F_2 stay one block") {
    std::vector<ScalarMatrix> mats = {sm_from_ints(F2, {{0, 1}, {0, 0}}),
                                      sm_from_ints(F2, {{0, 0}, {1, 0}})};
    AtomicFlag fl = atomic_flag(F2, 2, mats, 13);
    REQUIRE(fl.blocks == std::vector<size_t>{2});
    REQUIRE(fl.T == sm_identity(F2, 2));
  }
}

TEST_CASE("atomic flag: exact zero pattern and atomic diagonal on random sets") {
  Rng rng(31337);
  for (int trial = 0; trial < 30; ++trial) {
    FieldCtx F = (trial % 2 == 0) ? FieldCtx::prime(3) : FieldCtx::prime(5);
    size_t d = 2 + rng.below(4);  // 2..5
    size_t nm = 1 + rng.below(2);
    auto mats = random_mats(F, d, nm, rng);
    AtomicFlag fl = atomic_flag(F, d, mats, 500 + trial);

    size_t total = 0;
    for (size_t b : fl.blocks) total += b;
    REQUIRE(total == d);
    REQUIRE(sm_mul(F, fl.T, fl.Tinv) == sm_identity(F, d));

    // Exact zero pattern above the diagonal blocks for every matrix.
    size_t off = 0;
    std::vector<ScalarMatrix> conj;
    for (const auto& A : mats) {
      ScalarMatrix B = sm_mul(F, sm_mul(F, fl.T, A), fl.Tinv);
      REQUIRE(is_block_lower(F, B, fl.blocks));
      conj.push_back(std::move(B));
    }
    // Each diagonal block admits no further split (re-test).
    off = 0;
    for (size_t b : fl.blocks) {
      std::vector<ScalarMatrix> diag;
      for (const auto& B : conj) diag.push_back(sm_block(F, B, off, off, b, b));
      REQUIRE_FALSE(common_invariant_subspace(F, b, diag, 900 + trial).has_value());
      off += b;
    }
  }
}

TEST_CASE("monic invariant subspaces: frozen instances") {
  FieldCtx F2 = FieldCtx::prime(2);
  FieldCtx F5 = FieldCtx::prime(5);
  ScalarMatrix E11 = sm_from_ints(F5, {{1, 0}, {0, 0}});
  ScalarMatrix E12 = sm_from_ints(F5, {{0, 1}, {0, 0}});
  ScalarMatrix E21 = sm_from_ints(F5, {{0, 0}, {1, 0}});
  ScalarMatrix E22 = sm_from_ints(F5, {{0, 0}, {0, 1}});

  SECTION("nilpotent core: frozen values") {
    // {E21, E11}: the common kernel is v1 = 0, and span{e2} is stable under
    // another round (both generators kill e2), so the chain stops there.
    REQUIRE(nilpotent_core(F5, 2, {E21, E11}) == span_of_unit(F5, 2, 1));
    // {E11, E22}: the kernels meet only in 0.
    REQUIRE(nilpotent_core(F5, 2, {E11, E22}).is_zero());
    // Single nilpotent E12: e1 dies immediately, e2 one step later.
    REQUIRE(nilpotent_core(F5, 2, {E12}).is_full());
    // Invertible generator: nothing ever dies.
    REQUIRE(nilpotent_core(F5, 2, {sm_identity(F5, 2)}).is_zero());
  }
  SECTION("the invariant line of a dressed atom is rejected") {
    // span{e2} is invariant for {E21, E11} but both generators kill it, so
    // it is not monic; the core is span{e2}, the quotient is
    // one-dimensional hence simple, and no monic subspace exists.
    REQUIRE(common_invariant_subspace(F5, 2, {E21, E11}, 31).has_value());
    REQUIRE_FALSE(
        monic_invariant_subspace(F5, 2, {E21, E11}, 31).has_value());
  }
  SECTION("a torsion-free pair splits along a certified monic line") {
    auto V = monic_invariant_subspace(F5, 2, {E11, E22}, 32);
    REQUIRE(V.has_value());
    REQUIRE(V->dim() == 1);
    REQUIRE(is_invariant(F5, *V, {E11, E22}));
    REQUIRE(image_sum(F5, *V, {E11, E22}) == *V);
  }
  SECTION("a single nilpotent generator has no monic subspace") {
    REQUIRE_FALSE(monic_invariant_subspace(F5, 2, {E12}, 33).has_value());
  }
  SECTION("a quotient witness shrinks to its stable image") {
    // diag(1,2,0): the core is span{e3}; the quotient diag(1,2) splits, and
    // pulling back through the core and shrinking leaves a monic eigenline.
    ScalarMatrix A = sm_from_ints(F5, {{1, 0, 0}, {0, 2, 0}, {0, 0, 0}});
    auto V = monic_invariant_subspace(F5, 3, {A}, 34);
    REQUIRE(V.has_value());
    REQUIRE(V->dim() == 1);
    REQUIRE(is_invariant(F5, *V, {A}));
    REQUIRE(image_sum(F5, *V, {A}) == *V);
    bool eigen =
        (*V == span_of_unit(F5, 3, 0)) || (*V == span_of_unit(F5, 3, 1));
    REQUIRE(eigen);
  }
  SECTION("monic refinement keeps a dressed atom whole") {
    AtomicFlag plain = atomic_flag(F5, 2, {E21, E11}, 35);
    REQUIRE(plain.blocks.size() == 2);  // a non-monic cut exists...
    AtomicFlag fl = atomic_flag_monic(F5, 2, {E21, E11}, 35);
    REQUIRE(fl.blocks == std::vector<size_t>{2});  // ...and is refused
  }
  SECTION("monic refinement still splits torsion-free pairs") {
    AtomicFlag fl = atomic_flag_monic(F5, 2, {E11, E22}, 36);
    REQUIRE(fl.blocks == std::vector<size_t>{1, 1});
    for (const auto& A : {E11, E22})
      REQUIRE(is_block_lower(F5, sm_mul(F5, sm_mul(F5, fl.T, A), fl.Tinv),
                             fl.blocks));
  }
  SECTION("the dressed atom stays whole over F_2 as well") {
    ScalarMatrix e21 = sm_from_ints(F2, {{0, 0}, {1, 0}});
    ScalarMatrix e11 = sm_from_ints(F2, {{1, 0}, {0, 0}});
    REQUIRE_FALSE(
        monic_invariant_subspace(F2, 2, {e21, e11}, 37).has_value());
    AtomicFlag fl = atomic_flag_monic(F2, 2, {e21, e11}, 37);
    REQUIRE(fl.blocks == std::vector<size_t>{2});
  }
}

TEST_CASE("determinism: identical seeds give identical answers") {
  FieldCtx F = FieldCtx::prime(3);
  Rng rng(99);
  auto mats = random_mats(F, 4, 2, rng);
  auto a = common_invariant_subspace(F, 4, mats, 1234);
  auto b = common_invariant_subspace(F, 4, mats, 1234);
  REQUIRE(a.has_value() == b.has_value());
  if (a.has_value()) REQUIRE(*a == *b);
  AtomicFlag fa = atomic_flag(F, 4, mats, 1234);
  AtomicFlag fb = atomic_flag(F, 4, mats, 1234);
  REQUIRE(fa.blocks == fb.blocks);
  REQUIRE(fa.T == fb.T);
  REQUIRE(fa.Tinv == fb.Tinv);
}
