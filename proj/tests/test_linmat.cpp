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

#include "ncfactor/linmat.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ncfactor;

namespace {

bool lm_eq(const LinearMatrix& a, const LinearMatrix& b) {
  if (a.d != b.d || a.n != b.n) return false;
  for (size_t i = 0; i <= a.n; ++i)
    if (!(a.A[i] == b.A[i])) return false;
  return true;
}

// diag pencil with entry polynomials x_{i} on the diagonal.
LinearMatrix lm_diag_vars(const FieldCtx& F, uint32_t n) {
  LinearMatrix L(F, n, n);
  for (uint32_t i = 0; i < n; ++i) F.set_one(L.A[i + 1].at(i, i));
  return L;
}

ScalarMatrix rand_invertible(const FieldCtx& F, size_t d, Rng& rng) {
  for (;;) {
    ScalarMatrix M = sm_rand(F, d, d, rng);
    if (sm_invertible(F, M)) return M;
  }
}

}  // namespace

TEST_CASE("eval_linmat frozen examples") {
  FieldCtx F = FieldCtx::prime(7);
  LinearMatrix X = lm_var(F, 1, 0);  // [x]
  ScalarMatrix c(F, 1, 1);
  F.copy(c.at(0, 0), F.from_int(3).data());
  ScalarMatrix ev = eval_linmat(F, X, {c});
  CHECK(ev.rows == 1);
  CHECK(F.eq(Fe{*ev.at(0, 0)}, F.from_int(3)));

  LinearMatrix Id(F, 2, 1);
  Id.A[0] = sm_identity(F, 2);
  Rng rng(5);
  ScalarMatrix any = sm_rand(F, 3, 3, rng);
  CHECK(sm_is_identity(F, eval_linmat(F, Id, {any})));

  LinearMatrix D = lm_diag_vars(F, 2);
  ScalarMatrix one(F, 1, 1);
  F.set_one(one.at(0, 0));
  CHECK(sm_is_identity(F, eval_linmat(F, D, {one, one})));

  ScalarMatrix bad(F, 2, 2);
  CHECK_THROWS_AS(eval_linmat(F, D, {one, bad}), input_error);
}

TEST_CASE("monicity tests on frozen examples") {
  FieldCtx F = FieldCtx::prime(5);
  LinearMatrix D(F, 3, 3);
  D.A[0] = sm_identity(F, 3);
  for (uint32_t i = 0; i < 3; ++i) F.set_one(D.A[i + 1].at(i, i));
  CHECK(is_right_monic(F, D));
  CHECK(is_left_monic(F, D));

  LinearMatrix Z(F, 2, 2);
  Z.A[0] = sm_identity(F, 2);
  CHECK_FALSE(is_right_monic(F, Z));
  CHECK_FALSE(is_left_monic(F, Z));

  // [[x,0],[0,1]]: the variable block has rank 1 < 2.
  LinearMatrix L(F, 2, 1);
  F.set_one(L.A[0].at(1, 1));
  F.set_one(L.A[1].at(0, 0));
  CHECK_FALSE(is_right_monic(F, L));
}

TEST_CASE("is_full_randomized accepts full and rejects outer products") {
  FieldCtx F = FieldCtx::prime(2);
  CHECK(is_full_randomized(F, lm_var(F, 1, 0), 8, 11));

  LinearMatrix S(F, 2, 1);  // [[x,x],[x,x]] = (1,1)^T x (1,1)
  for (size_t i = 0; i < 2; ++i)
    for (size_t j = 0; j < 2; ++j) F.set_one(S.A[1].at(i, j));
  CHECK_FALSE(is_full_randomized(F, S, 8, 12));

  CHECK(is_full_randomized(F, lm_diag_vars(F, 2), 8, 13));
}

TEST_CASE("is_full_randomized rejects 20 constructed rank-deficient pencils") {
  FieldCtx F = FieldCtx::prime(5);
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    size_t d = 2 + rng.below(2);
    uint32_t n = 1 + static_cast<uint32_t>(rng.below(2));
    // L = u * (sum_i v_i^T x_i): every coefficient matrix shares the column
    // space spanned by u, so every dilation has rank <= l < d*l.
    ScalarMatrix u = sm_rand(F, d, 1, rng);
    LinearMatrix L(F, d, n);
    for (uint32_t i = 0; i < n; ++i) {
      ScalarMatrix v = sm_rand(F, 1, d, rng);
      L.A[i + 1] = sm_mul(F, u, v);
    }
    CHECK_FALSE(is_full_randomized(F, L, 6, 1000 + trial));
  }
}

TEST_CASE("monicize leaves an already right-monic pencil untouched") {
  FieldCtx F = FieldCtx::prime(5);
  LinearMatrix L(F, 2, 1);
  L.A[0] = sm_identity(F, 2);
  L.A[1] = sm_identity(F, 2);
  MonicizationCert cert = monicize(F, L, Side::Right);
  CHECK(cert.r == 0);
  CHECK(lm_eq(cert.Lp, L));
  CHECK(sm_is_identity(F, cert.S));
  CHECK(pm_eq(F, cert.U, pm_identity(F, 2, 1)));
  CHECK(verify_monicization_exact(F, L, cert));
}

TEST_CASE("monicize reduces [[x,0],[0,1]] to [x] with padding 1") {
  FieldCtx F = FieldCtx::prime(7);
  LinearMatrix L(F, 2, 1);
  F.set_one(L.A[0].at(1, 1));
  F.set_one(L.A[1].at(0, 0));
  MonicizationCert cert = monicize(F, L, Side::Right);
  CHECK(cert.r == 1);
  CHECK(cert.Lp.d == 1);
  CHECK(F.is_zero(Fe{*cert.Lp.A[0].at(0, 0)}));
  CHECK(F.is_one(Fe{*cert.Lp.A[1].at(0, 0)}));
  CHECK(is_right_monic(F, cert.Lp));
  CHECK(verify_monicization_exact(F, L, cert));
  CHECK(verify_monicization(F, L, cert, 10, 99));

  MonicizationCert left = monicize(F, L, Side::Left);
  CHECK(left.r == 1);
  CHECK(is_left_monic(F, left.Lp));
  CHECK(verify_monicization_exact(F, L, left));
  CHECK(verify_monicization(F, L, left, 10, 100));
}

TEST_CASE("monicize rejects unit pencils") {
  FieldCtx F = FieldCtx::prime(5);
  LinearMatrix I2(F, 2, 1);
  I2.A[0] = sm_identity(F, 2);
  CHECK_THROWS_AS(monicize(F, I2, Side::Right), domain_error);
}

TEST_CASE("monicize handles conjugated padded pencils (both sides)") {
  FieldCtx F = FieldCtx::prime(7);
  Rng rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    // L = U0 (core ⊕ I_2) S0, core = I + E_00 x1 + E_11 x2 (right monic).
    LinearMatrix core(F, 2, 2);
    core.A[0] = sm_identity(F, 2);
    F.set_one(core.A[1].at(0, 0));
    F.set_one(core.A[2].at(1, 1));
    LinearMatrix padded = lm_pad(F, core, 2);
    ScalarMatrix U0 = rand_invertible(F, 4, rng);
    ScalarMatrix S0 = rand_invertible(F, 4, rng);
    LinearMatrix L = lm_mul_scalar_left(F, U0, lm_mul_scalar_right(F, padded, S0));

    MonicizationCert cert = monicize(F, L, Side::Right);
    CHECK(cert.r == 2);
    CHECK(is_right_monic(F, cert.Lp));
    CHECK(verify_monicization_exact(F, L, cert));

    MonicizationCert left = monicize(F, L, Side::Left);
    CHECK(left.r == 2);
    CHECK(is_left_monic(F, left.Lp));
    CHECK(verify_monicization_exact(F, L, left));
  }
}

TEST_CASE("monicize works over an extension field") {
  FieldCtx F = FieldCtx::extension(2, 2, {1, 1, 1});
  LinearMatrix L(F, 2, 1);
  // [[x,0],[0,t]]: full, not right monic; t is a unit scalar.
  Fe t = F.make({0, 1});
  F.copy(L.A[0].at(1, 1), t.data());
  F.set_one(L.A[1].at(0, 0));
  MonicizationCert cert = monicize(F, L, Side::Right);
  CHECK(cert.r == 1);
  CHECK(is_right_monic(F, cert.Lp));
  CHECK(verify_monicization_exact(F, L, cert));
}

TEST_CASE("dilate frozen example and monicity preservation") {
  FieldCtx F = FieldCtx::prime(5);
  LinearMatrix X = lm_var(F, 1, 0);
  ScalarMatrix c(F, 1, 1);
  F.copy(c.at(0, 0), F.from_int(2).data());
  Dilation dil = dilate(F, X, {c});
  CHECK(dil.L.d == 1);
  CHECK(dil.L.n == 1);
  CHECK(F.eq(Fe{*dil.L.A[0].at(0, 0)}, F.from_int(2)));
  CHECK(F.is_one(Fe{*dil.L.A[1].at(0, 0)}));

  // Right monicity is preserved under dilation.
  Rng rng(31);
  LinearMatrix D = lm_diag_vars(F, 2);
  D.A[0] = sm_identity(F, 2);
  REQUIRE(is_right_monic(F, D));
  for (size_t ell : {1, 2, 3}) {
    std::vector<ScalarMatrix> M = {sm_rand(F, ell, ell, rng),
                                   sm_rand(F, ell, ell, rng)};
    Dilation dd = dilate(F, D, M);
    CHECK(is_right_monic(F, dd.L));
    // Evaluating the dilated pencil at y=0 recovers eval_linmat(L, M).
    std::vector<ScalarMatrix> zeros(dd.L.n, sm_zero(F, 1, 1));
    CHECK(eval_linmat(F, dd.L, zeros) == eval_linmat(F, D, M));
  }
}

TEST_CASE("dilation variable bookkeeping round-trips") {
  FieldCtx F = FieldCtx::prime(3);
  LinearMatrix D = lm_diag_vars(F, 2);
  Rng rng(8);
  std::vector<ScalarMatrix> M = {sm_rand(F, 3, 3, rng), sm_rand(F, 3, 3, rng)};
  Dilation dd = dilate(F, D, M);
  CHECK(dd.L.n == 2 * 9);
  for (uint32_t v = 0; v < dd.L.n; ++v) {
    auto [i, j, k] = dd.old_of(v);
    CHECK(dd.var_of(i, j, k) == v);
  }
}

TEST_CASE("find_invertible_dilation frozen cases") {
  FieldCtx F = FieldCtx::prime(5);
  // Invertible constant term: the zero point at l=1 wins.
  LinearMatrix L = lm_identity(F, 2, 1);
  L.A[1] = sm_identity(F, 2);
  DilationPoint pt = find_invertible_dilation(F, L, 41);
  CHECK(pt.ell == 1);
  CHECK(sm_is_zero(F, pt.M[0]));
  CHECK(sm_invertible(F, pt.witness));

  // [x]: any nonzero scalar.
  DilationPoint px = find_invertible_dilation(F, lm_var(F, 1, 0), 42);
  CHECK(px.ell == 1);
  CHECK_FALSE(sm_is_zero(F, px.M[0]));

  // diag(x, y) over F_2: the exhaustive scalar pass finds (1), (1).
  FieldCtx F2 = FieldCtx::prime(2);
  DilationPoint pd = find_invertible_dilation(F2, lm_diag_vars(F2, 2), 43);
  CHECK(pd.ell == 1);
  CHECK(F2.is_one(Fe{*pd.M[0].at(0, 0)}));
  CHECK(F2.is_one(Fe{*pd.M[1].at(0, 0)}));
}

TEST_CASE("find_invertible_dilation needs l=2 for the 3x3 skew pencil") {
  // L = [[0,x,y],[-x,0,z],[-y,-z,0]] is full, but every scalar evaluation is
  // a 3x3 alternating matrix and hence singular; matrix points of l >= 2 are
  // required.
  FieldCtx F = FieldCtx::prime(3);
  LinearMatrix L(F, 3, 3);
  auto set = [&](size_t m, size_t i, size_t j, int v) {
    F.copy(L.A[m].at(i, j), F.from_int(v).data());
  };
  set(1, 0, 1, 1);
  set(1, 1, 0, -1);
  set(2, 0, 2, 1);
  set(2, 2, 0, -1);
  set(3, 1, 2, 1);
  set(3, 2, 1, -1);
  DilationPoint pt = find_invertible_dilation(F, L, 44);
  CHECK(pt.ell >= 2);
  CHECK(sm_invertible(F, pt.witness));
  CHECK(pt.witness == eval_linmat(F, L, pt.M));
}

TEST_CASE("find_invertible_dilation reports exhaustion on non-full input") {
  FieldCtx F = FieldCtx::prime(2);
  LinearMatrix S(F, 2, 1);
  for (size_t i = 0; i < 2; ++i)
    for (size_t j = 0; j < 2; ++j) F.set_one(S.A[1].at(i, j));
  CHECK_THROWS_AS(find_invertible_dilation(F, S, 45), domain_error);
}

TEST_CASE("poly matrix plumbing: identity, tags, reversal") {
  FieldCtx F = FieldCtx::prime(7);
  Rng rng(606);
  LinearMatrix L(F, 3, 2);
  for (size_t m = 0; m <= 2; ++m) L.A[m] = sm_rand(F, 3, 3, rng);
  PolyMatrix P = pm_from_linear(F, L);
  CHECK(pm_eq(F, pm_mul(F, P, pm_identity(F, 3, 2)), P));
  CHECK(pm_eq(F, pm_mul(F, pm_identity(F, 3, 2), P), P));

  PolyMatrix upper = pm_identity(F, 3, 2);
  upper.shape = PmShape::UpperUni;
  upper.at(0, 2) = abp_var(F, 2, 0);
  PolyMatrix upper2 = pm_identity(F, 3, 2);
  upper2.shape = PmShape::UpperUni;
  upper2.at(0, 1) = abp_var(F, 2, 1);
  PolyMatrix prod = pm_mul(F, upper, upper2);
  CHECK(prod.shape == PmShape::UpperUni);
  CHECK(pm_shape_ok(F, prod));
  CHECK(pm_shape_ok(F, pm_rho(F, prod)));
  CHECK(pm_rho(F, prod).shape == PmShape::LowerUni);

  // rho is an involution up to polynomial equality.
  CHECK(pm_eq(F, pm_rho(F, pm_rho(F, P)), P));
}

TEST_CASE("pm_eval is a block evaluation") {
  FieldCtx F = FieldCtx::prime(5);
  Rng rng(17);
  LinearMatrix L(F, 2, 2);
  for (size_t m = 0; m <= 2; ++m) L.A[m] = sm_rand(F, 2, 2, rng);
  PolyMatrix P = pm_from_linear(F, L);
  std::vector<ScalarMatrix> pt = {sm_rand(F, 2, 2, rng), sm_rand(F, 2, 2, rng)};
  CHECK(pm_eval(F, P, pt) == eval_linmat(F, L, pt));
}

TEST_CASE("subfield representation is an algebra embedding") {
  FieldCtx F = FieldCtx::extension(2, 2, {1, 1, 1});
  Rng rng(999);
  FieldEmbedding emb = extend_field(F, 2, 7);  // F_16 over F_4
  REQUIRE(emb.big.k() == 4);
  for (int trial = 0; trial < 25; ++trial) {
    Fe a = emb.big.rand(rng), b = emb.big.rand(rng);
    ScalarMatrix ra = subfield_rep(emb, a);
    ScalarMatrix rb = subfield_rep(emb, b);
    CHECK(sm_mul(F, ra, rb) == subfield_rep(emb, emb.big.mul(a, b)));
    CHECK(sm_add(F, ra, rb) == subfield_rep(emb, emb.big.add(a, b)));
  }
  // Elements of the subfield map to scalar diagonal blocks.
  Fe c = F.rand(rng);
  ScalarMatrix rc = subfield_rep(emb, emb.map(c));
  CHECK(rc == sm_scale(F, sm_identity(F, 2), c));
  // Identity embedding when no growth happens.
  FieldEmbedding same = extend_field(F, 1, 3);
  Fe d = F.rand(rng);
  ScalarMatrix rd = subfield_rep(same, d);
  CHECK(rd.rows == 1);
  CHECK(F.eq(Fe(rd.at(0, 0), rd.at(0, 0) + F.ew()), d));
}

TEST_CASE("pencil JSON round-trip") {
  FieldCtx F = FieldCtx::prime(11);
  Rng rng(2718);
  LinearMatrix L(F, 3, 2);
  for (size_t m = 0; m <= 2; ++m) L.A[m] = sm_rand(F, 3, 3, rng);
  nlohmann::json j = linmat_to_json(F, L);
  LinearMatrix back = linmat_from_json(F, j);
  CHECK(lm_eq(L, back));
  CHECK(linmat_to_json(F, back).dump() == j.dump());

  nlohmann::json bad = j;
  bad["field"] = "13^1";
  CHECK_THROWS_AS(linmat_from_json(F, bad), input_error);
}
