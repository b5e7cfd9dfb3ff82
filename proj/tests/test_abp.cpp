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

#include "ncfactor/abp.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace ncfactor;

namespace {

Abp abp_of(const FieldCtx& F, const std::string& text) {
  return from_formula(F, parse(text, F));
}

FreePoly sparse_of(const FieldCtx& F, const std::string& text) {
  return to_sparse(F, parse(text, F), 64);
}

std::string dump(const FieldCtx& F, const Abp& a) {
  return abp_to_json(F, a).dump();
}

}  // namespace

TEST_CASE("from_formula: single variable is a two-layer, one-edge program") {
  FieldCtx F = FieldCtx::prime(5);
  Abp a = abp_of(F, "x1");
  CHECK(a.depth() == 1);
  CHECK(a.vertex_count() == 2);
  REQUIRE(a.edges.size() == 1);
  CHECK(F.is_zero(a.edges[0].label.c0));
  REQUIRE(a.edges[0].label.lin.size() == 1);
  CHECK(a.edges[0].label.lin[0].first == 0);
  CHECK(F.is_one(a.edges[0].label.lin[0].second));
}

TEST_CASE("from_formula matches the sparse expansion") {
  FieldCtx F = FieldCtx::prime(7);
  for (const char* text : {"x + x*y*x", "(1+x)*(1+y)", "x*y - y*x + 3",
                           "2*x*(y+1)*x - x"}) {
    Abp a = abp_of(F, text);
    CHECK(sp_eq(abp_to_freepoly(F, a), sparse_of(F, text)));
  }
}

TEST_CASE("from_formula on the zero constant computes zero") {
  FieldCtx F = FieldCtx::prime(3);
  Abp a = from_formula(F, f_const(F, F.zero()));
  CHECK(abp_is_zero(F, a));
  CHECK(abp_degree(F, a) == -1);
}

TEST_CASE("sum of depth-1 programs merges labels") {
  FieldCtx F = FieldCtx::prime(5);
  Abp a = abp_of(F, "x + y");
  CHECK(a.vertex_count() == 2);
  REQUIRE(a.edges.size() == 1);
  CHECK(a.edges[0].label.lin.size() == 2);
}

TEST_CASE("product concatenates at the sink/source without re-layering") {
  FieldCtx F = FieldCtx::prime(5);
  Abp x = abp_of(F, "x");
  Abp g = abp_of(F, "1 + y*x");
  Abp prod = abp_product(F, x, g);
  CHECK(prod.depth() == x.depth() + g.depth());
  FreePoly expect;
  expect.terms[Word{0}] = F.one();           // x
  expect.terms[Word{0, 1, 0}] = F.one();     // x y x
  CHECK(sp_eq(abp_to_freepoly(F, prod), expect));
}

TEST_CASE("sum with a negated copy is zero; product with constant one is identity") {
  FieldCtx F = FieldCtx::prime(11);
  Abp a = abp_of(F, "1 + 2*x*y + z");
  Abp z = abp_sum(F, a, abp_scale(F, a, F.from_int(-1)));
  CHECK(abp_is_zero(F, z));
  Abp one = abp_one(F, a.nvars);
  CHECK(sp_eq(abp_to_freepoly(F, abp_product(F, one, a)),
              abp_to_freepoly(F, a)));
  CHECK(sp_eq(abp_to_freepoly(F, abp_product(F, a, one)),
              abp_to_freepoly(F, a)));
}

TEST_CASE("shift_vars rewrites 1 + x into x under the offset -1") {
  FieldCtx F = FieldCtx::prime(7);
  Abp a = abp_of(F, "1 + x");
  Abp shifted = abp_shift_vars(F, a, {F.from_int(-1)}, +1);
  FreePoly expect;
  expect.terms[Word{0}] = F.one();
  CHECK(sp_eq(abp_to_freepoly(F, shifted), expect));
}

TEST_CASE("shift_vars round-trips and the zero offset is the identity") {
  FieldCtx F = FieldCtx::prime(13);
  Rng rng(2026);
  for (int trial = 0; trial < 50; ++trial) {
    Formula f = testutil::random_formula(F, rng, 10, 3);
    Abp a = from_formula(F, f);
    std::vector<Fe> alpha = {F.rand(rng), F.rand(rng), F.rand(rng)};
    Abp back = abp_shift_vars(F, abp_shift_vars(F, a, alpha, +1), alpha, -1);
    CHECK(dump(F, back) == dump(F, a));
    std::vector<Fe> zero = {F.zero(), F.zero(), F.zero()};
    CHECK(dump(F, abp_shift_vars(F, a, zero, +1)) == dump(F, a));
  }
}

TEST_CASE("is_zero distinguishes commuting from non-commuting differences") {
  FieldCtx F = FieldCtx::prime(2);
  CHECK(abp_is_zero(F, abp_of(F, "x1*x2 - x1*x2")));
  CHECK_FALSE(abp_is_zero(F, abp_of(F, "x1*x2 - x2*x1")));
}

TEST_CASE("is_zero certifies a product of factors against the original") {
  FieldCtx F = FieldCtx::prime(5);
  Abp lhs = abp_product(F, abp_of(F, "x"), abp_of(F, "1 + y*x"));
  Abp diff = abp_sub(F, lhs, abp_of(F, "x + x*y*x"));
  CHECK(abp_is_zero(F, diff));
}

TEST_CASE("is_zero sees cancellation across parallel paths") {
  // Two parallel routes whose contributions cancel only in the sum:
  // (1)(-x) + (x)(1) + x*y - x*y arrangements exercise the constant-closure
  // propagation rather than a per-layer span heuristic.
  FieldCtx F = FieldCtx::prime(3);
  Abp a = abp_of(F, "(1+x)*(1-x) - 1 + x*x");
  CHECK(abp_is_zero(F, a));
  Abp b = abp_of(F, "(1+x)*(1+y) - (1+y)*(1+x) - x*y + y*x");
  CHECK(abp_is_zero(F, b));
}

TEST_CASE("coefficient_of_word frozen values") {
  FieldCtx F = FieldCtx::prime(7);
  Abp a = abp_of(F, "x + x*y*x");
  CHECK(F.is_one(coefficient_of_word(F, a, Word{0, 1, 0})));
  CHECK(F.is_zero(coefficient_of_word(F, a, Word{0, 1})));
  CHECK(F.is_zero(coefficient_of_word(F, a, Word{})));
  Abp b = abp_of(F, "3 + 2*x");
  CHECK(F.eq(coefficient_of_word(F, b, Word{}), F.from_int(3)));
}

TEST_CASE("empty-word coefficient equals evaluation at the zero point") {
  FieldCtx F = FieldCtx::prime(11);
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    Formula f = testutil::random_formula(F, rng, 10, 2);
    Abp a = from_formula(F, f);
    std::vector<Fe> zeros(2, F.zero());
    CHECK(F.eq(coefficient_of_word(F, a, Word{}), eval_scalar(F, f, zeros)));
  }
}

TEST_CASE("leading_word frozen examples") {
  FieldCtx F = FieldCtx::prime(7);
  auto lw = leading_word(F, abp_of(F, "x + x*y*x"));
  REQUIRE(lw.has_value());
  CHECK(lw->first == Word{0, 1, 0});
  CHECK(F.is_one(lw->second));

  auto cw = leading_word(F, abp_of(F, "5"));
  REQUIRE(cw.has_value());
  CHECK(cw->first.empty());
  CHECK(F.eq(cw->second, F.from_int(5)));

  CHECK_FALSE(leading_word(F, abp_of(F, "x - x")).has_value());
}

TEST_CASE("leading_word prefers maximal degree, then lexicographic order") {
  FieldCtx F = FieldCtx::prime(5);
  auto lw = leading_word(F, abp_of(F, "x*y + y*x"));
  REQUIRE(lw.has_value());
  CHECK(lw->first == Word{0, 1});
  auto lw2 = leading_word(F, abp_of(F, "x*y + x"));
  REQUIRE(lw2.has_value());
  CHECK(lw2->first == Word{0, 1});
  auto lw3 = leading_word(F, abp_of(F, "y*y + x*y + y"));
  REQUIRE(lw3.has_value());
  CHECK(lw3->first == Word{0, 1});
}

TEST_CASE("leading_word agrees with the sparse expansion on random programs") {
  FieldCtx F = FieldCtx::prime(3);
  Rng rng(99);
  int nonzero_seen = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Formula f = testutil::random_formula(F, rng, 10, 2);
    Abp a = from_formula(F, f);
    FreePoly sp = abp_to_freepoly(F, a);
    auto lw = leading_word(F, a);
    if (sp.terms.empty()) {
      CHECK_FALSE(lw.has_value());
      continue;
    }
    ++nonzero_seen;
    REQUIRE(lw.has_value());
    CHECK(static_cast<long>(lw->first.size()) == sp_deg(sp));
    // Lexicographically least among the maximal-degree words.
    Word best;
    bool have = false;
    for (const auto& [w, c] : sp.terms) {
      if (static_cast<long>(w.size()) != sp_deg(sp)) continue;
      if (!have || std::lexicographical_compare(w.begin(), w.end(),
                                                best.begin(), best.end())) {
        best = w;
        have = true;
      }
    }
    CHECK(lw->first == best);
    CHECK(F.eq(lw->second, sp.terms.at(best)));
  }
  CHECK(nonzero_seen >= 20);
}

TEST_CASE("vector_leading_word maximizes degree across components") {
  FieldCtx F = FieldCtx::prime(7);
  std::vector<Abp> comps = {abp_of(F, "x + x*y*x"), abp_of(F, "y")};
  auto lw = vector_leading_word(F, comps);
  REQUIRE(lw.has_value());
  CHECK(lw->first == Word{0, 1, 0});
  REQUIRE(lw->second.size() == 2);
  CHECK(F.is_one(lw->second[0]));
  CHECK(F.is_zero(lw->second[1]));
}

TEST_CASE("vector_leading_word takes the lexicographically least word") {
  FieldCtx F = FieldCtx::prime(5);
  std::vector<Abp> comps = {abp_of(F, "y*x"), abp_of(F, "x*y")};
  auto lw = vector_leading_word(F, comps);
  REQUIRE(lw.has_value());
  CHECK(lw->first == Word{0, 1});
  CHECK(F.is_zero(lw->second[0]));
  CHECK(F.is_one(lw->second[1]));

  std::vector<Abp> zeros = {abp_of(F, "x-x"), abp_of(F, "0")};
  CHECK_FALSE(vector_leading_word(F, zeros).has_value());
}

TEST_CASE("to_sparse_abp restricted to candidate words is exact") {
  FieldCtx F = FieldCtx::prime(7);
  Abp left = abp_of(F, "x");
  Abp right = abp_of(F, "1 + y*x");
  std::vector<Word> candidates = {Word{}, Word{0}, Word{1}, Word{0, 1},
                                  Word{1, 0}, Word{0, 1, 0}};
  FreePoly l = to_sparse_abp(F, left, candidates);
  REQUIRE(l.terms.size() == 1);
  CHECK(F.is_one(l.terms.at(Word{0})));
  FreePoly r = to_sparse_abp(F, right, candidates);
  REQUIRE(r.terms.size() == 2);
  CHECK(F.is_one(r.terms.at(Word{})));
  CHECK(F.is_one(r.terms.at(Word{1, 0})));

  CHECK(to_sparse_abp(F, abp_of(F, "x-x"), candidates).terms.empty());

  FreePoly oneplus = to_sparse_abp(F, abp_of(F, "1 + x*y"), candidates);
  REQUIRE(oneplus.terms.size() == 2);
  CHECK(F.is_one(oneplus.terms.at(Word{})));
  CHECK(F.is_one(oneplus.terms.at(Word{0, 1})));
}

TEST_CASE("is_zero agrees with expansion emptiness on a formula corpus") {
  FieldCtx F = FieldCtx::prime(2);
  Rng rng(31337);
  int zero_seen = 0, nonzero_seen = 0;
  for (int trial = 0; trial < 120; ++trial) {
    Formula f = testutil::random_formula(F, rng, 12, 2);
    Abp a = from_formula(F, f);
    bool empty = abp_to_freepoly(F, a).terms.empty();
    CHECK(abp_is_zero(F, a) == empty);
    (empty ? zero_seen : nonzero_seen)++;
  }
  CHECK(zero_seen >= 5);
  CHECK(nonzero_seen >= 5);
}

TEST_CASE("ring operations commute with expansion on a degree<=8 corpus") {
  FieldCtx F = FieldCtx::prime(5);
  Rng rng(424242);
  for (int trial = 0; trial < 40; ++trial) {
    Formula f = testutil::random_formula(F, rng, 8, 2);
    Formula g = testutil::random_formula(F, rng, 8, 2);
    Abp a = from_formula(F, f);
    Abp b = from_formula(F, g);
    FreePoly sa = abp_to_freepoly(F, a);
    FreePoly sb = abp_to_freepoly(F, b);
    CHECK(sp_eq(abp_to_freepoly(F, abp_product(F, a, b)), sp_mul(F, sa, sb)));
    CHECK(sp_eq(abp_to_freepoly(F, abp_sum(F, a, b)), sp_add(F, sa, sb)));
    Fe c = F.rand(rng);
    CHECK(sp_eq(abp_to_freepoly(F, abp_scale(F, a, c)), sp_scale(F, sa, c)));
  }
}

TEST_CASE("coefficient_of_word matches every stored monomial of the expansion") {
  FieldCtx F = FieldCtx::prime(3);
  Rng rng(555);
  for (int trial = 0; trial < 30; ++trial) {
    Formula f = testutil::random_formula(F, rng, 10, 2);
    Abp a = from_formula(F, f);
    FreePoly sp = abp_to_freepoly(F, a);
    AbpAnalyzer an(F, a);
    for (const auto& [w, c] : sp.terms) CHECK(F.eq(an.coefficient(w), c));
    // And a couple of absent words.
    CHECK(F.is_zero(an.coefficient(Word(a.depth() + 1, 0))));
  }
}

TEST_CASE("reverse flips every monomial and is an involution") {
  FieldCtx F = FieldCtx::prime(7);
  Abp a = abp_of(F, "x*y + 3*x");
  FreePoly rev = abp_to_freepoly(F, abp_reverse(F, a));
  FreePoly expect;
  expect.terms[Word{1, 0}] = F.one();
  expect.terms[Word{0}] = F.from_int(3);
  CHECK(sp_eq(rev, expect));
  CHECK(dump(F, abp_reverse(F, abp_reverse(F, a))) == dump(F, a));
  // Palindromic polynomials are fixed up to equality of the computed poly.
  Abp pal = abp_of(F, "x + x*y*x");
  CHECK(abp_is_zero(F, abp_sub(F, abp_reverse(F, pal), pal)));
}

TEST_CASE("analysis works over extension fields") {
  FieldCtx F = FieldCtx::extension(2, 2, {1, 1, 1});
  // (x + t)(x + t^2) with t^2 = t + 1; constant term t*t^2 = t^3 = 1.
  Formula g = parse("(x + {t}) * (x + {1+t})", F);
  Abp a = from_formula(F, g);
  CHECK(F.is_one(coefficient_of_word(F, a, Word{})));
  auto lw = leading_word(F, a);
  REQUIRE(lw.has_value());
  CHECK(lw->first == Word{0, 0});
  CHECK(F.is_one(lw->second));
}

TEST_CASE("program sizes stay polynomial in formula size") {
  FieldCtx F = FieldCtx::prime(5);
  Rng rng(808);
  for (int trial = 0; trial < 60; ++trial) {
    size_t budget = 4 + rng.below(12);
    Formula f = testutil::random_formula(F, rng, budget, 3);
    Abp a = from_formula(F, f);
    size_t s = f.size();
    CHECK(a.vertex_count() <= (s + 2) * (s + 2));
    CHECK(a.depth() <= s + 1);
  }
}

TEST_CASE("JSON round-trip is bit-exact") {
  FieldCtx F = FieldCtx::prime(7);
  Rng rng(1618);
  for (int trial = 0; trial < 20; ++trial) {
    Formula f = testutil::random_formula(F, rng, 10, 3);
    Abp a = from_formula(F, f);
    std::string first = dump(F, a);
    Abp b = abp_from_json(F, nlohmann::json::parse(first));
    CHECK(dump(F, b) == first);
    CHECK(abp_is_zero(F, abp_sub(F, a, b)));
  }
}

TEST_CASE("JSON round-trip over an extension field") {
  FieldCtx F = FieldCtx::extension(3, 2, {1, 0, 1});
  Abp a = from_formula(F, parse("{t}*x*y + x + {2t+1}", F));
  std::string first = dump(F, a);
  Abp b = abp_from_json(F, nlohmann::json::parse(first));
  CHECK(dump(F, b) == first);
}

TEST_CASE("JSON loader rejects malformed documents") {
  FieldCtx F = FieldCtx::prime(5);
  Abp a = from_formula(F, parse("x*y + 1", F));
  nlohmann::json good = abp_to_json(F, a);

  nlohmann::json wrong_field = good;
  wrong_field["field"] = "7^1";
  CHECK_THROWS_AS(abp_from_json(F, wrong_field), input_error);

  nlohmann::json bad_layer = good;
  bad_layer["layers"][0] = nlohmann::json::array({5});
  CHECK_THROWS_AS(abp_from_json(F, bad_layer), input_error);

  nlohmann::json bad_elem = good;
  bad_elem["edges"][0]["const"] = 99;
  CHECK_THROWS_AS(abp_from_json(F, bad_elem), input_error);

  nlohmann::json bad_var = good;
  bad_var["edges"][0]["coeffs"]["9"] = 1;
  CHECK_THROWS_AS(abp_from_json(F, bad_var), input_error);
}
