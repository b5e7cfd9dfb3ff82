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
// The input language: arithmetic formulas over noncommuting variables, a
// recursive-descent parser, sparse free polynomials, scalar and matrix
// evaluation, and an exponential brute-force factorization oracle intended
// for tests only.

#ifndef NCFACTOR_EXPR_HPP
#define NCFACTOR_EXPR_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ncfactor/matrix.hpp"

namespace ncfactor {

// ---------------------------------------------------------------------------
// Formulas (trees over Const / Var / Add / Mul).
// ---------------------------------------------------------------------------

/// An arithmetic formula: a tree (fan-out one) of constants, variables,
/// additions, and order-preserving noncommutative multiplications. Nodes are
/// stored children-before-parents, so a single forward pass evaluates the
/// tree; the last node is the root. Immutable by convention.
struct Formula {
  enum class Op : uint8_t { Const, Var, Add, Mul };
  struct Node {
    Op op;
    Fe value;           // Const payload
    uint32_t var = 0;   // Var payload (0-based)
    int32_t lhs = -1;   // Add/Mul children
    int32_t rhs = -1;
  };
  std::vector<Node> nodes;
  uint32_t nvars = 0;

  size_t size() const { return nodes.size(); }
  const Node& root() const { return nodes.back(); }
};

inline Formula f_const(const FieldCtx& F, const Fe& c) {
  Formula f;
  f.nodes.push_back({Formula::Op::Const, c, 0, -1, -1});
  (void)F;
  return f;
}

inline Formula f_int(const FieldCtx& F, long long v) {
  return f_const(F, F.from_int(v));
}

inline Formula f_var(uint32_t index) {
  Formula f;
  f.nodes.push_back({Formula::Op::Var, {}, index, -1, -1});
  f.nvars = index + 1;
  return f;
}

namespace detail {

/// Appends `src` nodes to `dst`, returning the new root index of the copy.
inline int32_t graft(Formula& dst, const Formula& src) {
  int32_t off = static_cast<int32_t>(dst.nodes.size());
  for (const auto& n : src.nodes) {
    Formula::Node m = n;
    if (m.lhs >= 0) m.lhs += off;
    if (m.rhs >= 0) m.rhs += off;
    dst.nodes.push_back(std::move(m));
  }
  dst.nvars = std::max(dst.nvars, src.nvars);
  return static_cast<int32_t>(dst.nodes.size()) - 1;
}

}  // namespace detail

inline Formula f_add(const Formula& a, const Formula& b) {
  Formula f;
  int32_t l = detail::graft(f, a);
  int32_t r = detail::graft(f, b);
  f.nodes.push_back({Formula::Op::Add, {}, 0, l, r});
  return f;
}

inline Formula f_mul(const Formula& a, const Formula& b) {
  Formula f;
  int32_t l = detail::graft(f, a);
  int32_t r = detail::graft(f, b);
  f.nodes.push_back({Formula::Op::Mul, {}, 0, l, r});
  return f;
}

/// Negation, pushing the sign into the leftmost constant when one is at hand
/// (keeps parsed subtractions free of spurious product nodes over constants).
inline Formula f_neg(const FieldCtx& F, const Formula& a);

inline Formula f_sub(const FieldCtx& F, const Formula& a, const Formula& b) {
  return f_add(a, f_neg(F, b));
}

namespace detail {

/// Copies the subtree rooted at idx into a standalone formula.
inline Formula subtree(const Formula& src, int32_t idx) {
  const auto& n = src.nodes[idx];
  switch (n.op) {
    case Formula::Op::Const: {
      Formula f;
      f.nodes.push_back(n);
      return f;
    }
    case Formula::Op::Var: return f_var(n.var);
    case Formula::Op::Add: return f_add(subtree(src, n.lhs), subtree(src, n.rhs));
    case Formula::Op::Mul: return f_mul(subtree(src, n.lhs), subtree(src, n.rhs));
  }
  return {};
}

/// Rebuilds the subtree at idx negated, pushing signs into constants
/// (additions negate both sides, products only their left operand).
inline Formula neg_build(const FieldCtx& F, const Formula& src, int32_t idx) {
  const auto& n = src.nodes[idx];
  switch (n.op) {
    case Formula::Op::Const: return f_const(F, F.neg(n.value));
    case Formula::Op::Var:
      return f_mul(f_const(F, F.from_int(-1)), f_var(n.var));
    case Formula::Op::Add:
      return f_add(neg_build(F, src, n.lhs), neg_build(F, src, n.rhs));
    case Formula::Op::Mul:
      return f_mul(neg_build(F, src, n.lhs), subtree(src, n.rhs));
  }
  return {};
}

}  // namespace detail

inline Formula f_neg(const FieldCtx& F, const Formula& a) {
  return detail::neg_build(F, a, static_cast<int32_t>(a.nodes.size()) - 1);
}

/// Syntactic degree bound: Const 0, Var 1, Add max, Mul sum (saturating).
inline uint64_t degree_bound(const Formula& f) {
  constexpr uint64_t kCap = 1ULL << 32;
  std::vector<uint64_t> d(f.nodes.size(), 0);
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    switch (n.op) {
      case Formula::Op::Const: d[i] = 0; break;
      case Formula::Op::Var: d[i] = 1; break;
      case Formula::Op::Add: d[i] = std::max(d[n.lhs], d[n.rhs]); break;
      case Formula::Op::Mul: d[i] = std::min(kCap, d[n.lhs] + d[n.rhs]); break;
    }
  }
  return f.nodes.empty() ? 0 : d.back();
}

/// Renders a formula as parseable infix text.
inline std::string to_string(const FieldCtx& F, const Formula& f) {
  std::vector<std::string> s(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    switch (n.op) {
      case Formula::Op::Const:
        if (F.k() == 1) {
          s[i] = std::to_string(n.value[0]);
        } else {
          std::string t;
          bool first = true;
          for (uint32_t j = F.k(); j-- > 0;) {
            if (!n.value[j]) continue;
            if (!first) t += "+";
            first = false;
            if (j == 0) {
              t += std::to_string(n.value[j]);
            } else {
              if (n.value[j] != 1) t += std::to_string(n.value[j]) + "*";
              t += j == 1 ? "t" : "t^" + std::to_string(j);
            }
          }
          if (first) t = "0";
          s[i] = "{" + t + "}";
        }
        break;
      case Formula::Op::Var:
        s[i] = "x" + std::to_string(n.var + 1);
        break;
      case Formula::Op::Add:
        s[i] = "(" + s[n.lhs] + " + " + s[n.rhs] + ")";
        break;
      case Formula::Op::Mul:
        s[i] = "(" + s[n.lhs] + "*" + s[n.rhs] + ")";
        break;
    }
  }
  return f.nodes.empty() ? "0" : s.back();
}

// ---------------------------------------------------------------------------
// Parser.
// ---------------------------------------------------------------------------

namespace detail {

class Parser {
 public:
  Parser(const std::string& text, const FieldCtx& F) : t_(text), F_(F) {}

  Formula run() {
    Formula f = expr();
    skip_ws();
    NCF_INPUT(pos_ == t_.size(), "syntax error at position ", pos_,
              ": unexpected '", t_.substr(pos_, 8), "'");
    return f;
  }

 private:
  void skip_ws() {
    while (pos_ < t_.size() && (t_[pos_] == ' ' || t_[pos_] == '\t' ||
                                t_[pos_] == '\n' || t_[pos_] == '\r'))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < t_.size() && t_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < t_.size() ? t_[pos_] : '\0';
  }

  uint64_t read_int() {
    skip_ws();
    size_t start = pos_;
    uint64_t v = 0;
    while (pos_ < t_.size() && t_[pos_] >= '0' && t_[pos_] <= '9') {
      NCF_INPUT(v < (1ULL << 57), "integer literal too large at position ",
                start);
      v = v * 10 + (t_[pos_] - '0');
      ++pos_;
    }
    NCF_INPUT(pos_ > start, "syntax error at position ", pos_,
              ": expected integer");
    return v;
  }

  Formula expr() {
    bool lead_neg = eat('-');
    Formula acc = term();
    if (lead_neg) acc = f_neg(F_, acc);
    while (true) {
      if (eat('+')) {
        acc = f_add(acc, term());
      } else if (eat('-')) {
        acc = f_sub(F_, acc, term());
      } else {
        return acc;
      }
    }
  }

  Formula term() {
    Formula acc = factor();
    while (eat('*')) acc = f_mul(acc, factor());
    return acc;
  }

  Formula factor() {
    skip_ws();
    NCF_INPUT(pos_ < t_.size(), "syntax error at position ", pos_,
              ": unexpected end of input");
    char c = t_[pos_];
    if (c == '(') {
      ++pos_;
      Formula inner = expr();
      NCF_INPUT(eat(')'), "syntax error at position ", pos_, ": expected ')'");
      return inner;
    }
    if (c == '{') {
      ++pos_;
      Fe v = extension_coefficient();
      NCF_INPUT(eat('}'), "syntax error at position ", pos_, ": expected '}'");
      return f_const(F_, v);
    }
    if (c >= '0' && c <= '9') {
      uint64_t v = read_int();
      return f_const(F_, F_.from_int(static_cast<long long>(v % F_.p())));
    }
    if (c == 'x' || c == 'y' || c == 'z') {
      ++pos_;
      if (c == 'x' && pos_ < t_.size() && t_[pos_] >= '0' && t_[pos_] <= '9') {
        uint64_t idx = read_int();
        NCF_INPUT(idx >= 1, "unknown variable 'x0' at position ", pos_,
                  ": indices start at 1");
        NCF_INPUT(idx <= 4096, "variable index too large at position ", pos_);
        return f_var(static_cast<uint32_t>(idx - 1));
      }
      return f_var(c == 'x' ? 0 : c == 'y' ? 1 : 2);
    }
    throw input_error(detail::concat("syntax error at position ", pos_,
                                     ": unexpected '", std::string(1, c), "'"));
  }

  /// Polynomial in the extension generator t, e.g. "t+1" or "2*t^2 + t".
  Fe extension_coefficient() {
    Fe acc = F_.zero();
    bool first = true;
    while (true) {
      skip_ws();
      bool neg = false;
      if (eat('-')) {
        neg = true;
      } else if (!first) {
        if (!eat('+')) break;
      }
      first = false;
      uint64_t coef = 1;
      bool saw_coef = false;
      if (peek() >= '0' && peek() <= '9') {
        coef = read_int() % F_.p();
        saw_coef = true;
      }
      uint64_t power = 0;
      skip_ws();
      if (pos_ < t_.size() && (t_[pos_] == 't' || t_[pos_] == '*')) {
        if (t_[pos_] == '*') {
          ++pos_;
          skip_ws();
          NCF_INPUT(pos_ < t_.size() && t_[pos_] == 't',
                    "coefficient syntax error at position ", pos_);
        }
        ++pos_;  // consume 't'
        power = 1;
        if (eat('^')) power = read_int();
      } else {
        NCF_INPUT(saw_coef, "coefficient syntax error at position ", pos_);
      }
      NCF_INPUT(power < F_.k(), "coefficient not in field: t^", power,
                " needs extension degree > ", power);
      Fe termv = F_.zero();
      termv[power] = coef % F_.p();
      if (neg) termv = F_.neg(termv);
      acc = F_.add(acc, termv);
    }
    return acc;
  }

  const std::string& t_;
  const FieldCtx& F_;
  size_t pos_ = 0;
};

}  // namespace detail

/// Parses an expression over x1,x2,... (aliases x,y,z) with integer
/// coefficients mod p; extension coefficients are brace-guarded polynomials
/// in t, e.g. "{t+1}*x1".
inline Formula parse(const std::string& text, const FieldCtx& F) {
  return detail::Parser(text, F).run();
}

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

/// Evaluates at scalar points; with an embedding, constants are pushed into
/// the big field and the point is over the big field.
inline Fe eval_scalar(const FieldCtx& F, const Formula& f,
                      const std::vector<Fe>& point,
                      const FieldEmbedding* emb = nullptr) {
  const FieldCtx& E = emb ? emb->big : F;
  NCF_INPUT(point.size() >= f.nvars, "evaluation point has too few entries");
  std::vector<Fe> v(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    switch (n.op) {
      case Formula::Op::Const: v[i] = emb ? emb->map(n.value) : n.value; break;
      case Formula::Op::Var: v[i] = point[n.var]; break;
      case Formula::Op::Add: v[i] = E.add(v[n.lhs], v[n.rhs]); break;
      case Formula::Op::Mul: v[i] = E.mul(v[n.lhs], v[n.rhs]); break;
    }
  }
  return f.nodes.empty() ? E.zero() : v.back();
}

/// Evaluates at square matrices of a common dimension; constants lift as c*I.
inline ScalarMatrix eval_matrix(const FieldCtx& F, const Formula& f,
                                const std::vector<ScalarMatrix>& point,
                                const FieldEmbedding* emb = nullptr) {
  const FieldCtx& E = emb ? emb->big : F;
  NCF_INPUT(point.size() >= f.nvars, "evaluation point has too few matrices");
  size_t m = point.empty() ? 1 : point[0].rows;
  for (const auto& M : point)
    NCF_INPUT(M.rows == m && M.cols == m,
              "evaluation matrices must be square of a common dimension");
  std::vector<ScalarMatrix> v(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    switch (n.op) {
      case Formula::Op::Const: {
        Fe c = emb ? emb->map(n.value) : n.value;
        ScalarMatrix M(E, m, m);
        for (size_t d = 0; d < m; ++d) E.copy(M.at(d, d), c.data());
        v[i] = std::move(M);
        break;
      }
      case Formula::Op::Var: v[i] = point[n.var]; break;
      case Formula::Op::Add: v[i] = sm_add(E, v[n.lhs], v[n.rhs]); break;
      case Formula::Op::Mul: v[i] = sm_mul(E, v[n.lhs], v[n.rhs]); break;
    }
  }
  if (f.nodes.empty()) return ScalarMatrix(E, m, m);
  return v.back();
}

// ---------------------------------------------------------------------------
// Sparse free polynomials.
// ---------------------------------------------------------------------------

/// A monomial: an explicit word over the variable alphabet (0-based letters).
using Word = std::vector<uint32_t>;

/// Graded lexicographic word order (shorter first, then lex).
struct GradedLex {
  bool operator()(const Word& a, const Word& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

/// Sparse polynomial in the free algebra: words mapped to nonzero
/// coefficients, kept in graded-lex order.
struct FreePoly {
  std::map<Word, Fe, GradedLex> terms;

  bool is_zero() const { return terms.empty(); }
};

inline long sp_deg(const FreePoly& f) {
  return f.terms.empty() ? -1
                         : static_cast<long>(f.terms.rbegin()->first.size());
}

inline FreePoly sp_const(const FieldCtx& F, const Fe& c) {
  FreePoly f;
  if (!F.is_zero(c)) f.terms[{}] = c;
  return f;
}

inline FreePoly sp_one(const FieldCtx& F) { return sp_const(F, F.one()); }

inline FreePoly sp_word(const FieldCtx& F, const Word& w, const Fe& c) {
  FreePoly f;
  if (!F.is_zero(c)) f.terms[w] = c;
  return f;
}

inline void sp_add_term(const FieldCtx& F, FreePoly& f, const Word& w,
                        const Fe& c) {
  auto it = f.terms.find(w);
  if (it == f.terms.end()) {
    if (!F.is_zero(c)) f.terms.emplace(w, c);
    return;
  }
  Fe s = F.add(it->second, c);
  if (F.is_zero(s)) {
    f.terms.erase(it);
  } else {
    it->second = std::move(s);
  }
}

inline FreePoly sp_add(const FieldCtx& F, const FreePoly& a, const FreePoly& b) {
  FreePoly r = a;
  for (const auto& [w, c] : b.terms) sp_add_term(F, r, w, c);
  return r;
}

inline FreePoly sp_neg(const FieldCtx& F, const FreePoly& a) {
  FreePoly r = a;
  for (auto& [w, c] : r.terms) c = F.neg(c);
  return r;
}

inline FreePoly sp_sub(const FieldCtx& F, const FreePoly& a, const FreePoly& b) {
  return sp_add(F, a, sp_neg(F, b));
}

inline FreePoly sp_scale(const FieldCtx& F, const FreePoly& a, const Fe& s) {
  FreePoly r;
  if (F.is_zero(s)) return r;
  for (const auto& [w, c] : a.terms) r.terms[w] = F.mul(c, s);
  return r;
}

/// Convolution product: (fg)(m) = sum over splits m = uv of f(u) g(v).
inline FreePoly sp_mul(const FieldCtx& F, const FreePoly& a, const FreePoly& b) {
  FreePoly r;
  for (const auto& [u, cu] : a.terms)
    for (const auto& [v, cv] : b.terms) {
      Word w = u;
      w.insert(w.end(), v.begin(), v.end());
      sp_add_term(F, r, w, F.mul(cu, cv));
    }
  return r;
}

inline bool sp_eq(const FreePoly& a, const FreePoly& b) {
  return a.terms == b.terms;
}

inline std::string word_to_string(const Word& w) {
  if (w.empty()) return "1";
  std::string s;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) s += "*";
    s += "x" + std::to_string(w[i] + 1);
  }
  return s;
}

inline std::string sp_to_string(const FieldCtx& F, const FreePoly& f) {
  if (f.terms.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [w, c] : f.terms) {
    if (!first) s += " + ";
    first = false;
    if (w.empty()) {
      s += F.to_string(c);
    } else if (F.is_one(c)) {
      s += word_to_string(w);
    } else {
      s += F.to_string(c) + "*" + word_to_string(w);
    }
  }
  return s;
}

/// Expands a formula into a sparse polynomial. Exponential; guarded by a
/// syntactic degree cap.
inline FreePoly to_sparse(const FieldCtx& F, const Formula& f,
                          uint64_t degree_cap = 16) {
  NCF_INPUT(degree_bound(f) <= degree_cap,
            "formula degree bound exceeds expansion cap ", degree_cap);
  std::vector<FreePoly> v(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& n = f.nodes[i];
    switch (n.op) {
      case Formula::Op::Const: v[i] = sp_const(F, n.value); break;
      case Formula::Op::Var: v[i] = sp_word(F, {n.var}, F.one()); break;
      case Formula::Op::Add: v[i] = sp_add(F, v[n.lhs], v[n.rhs]); break;
      case Formula::Op::Mul: v[i] = sp_mul(F, v[n.lhs], v[n.rhs]); break;
    }
  }
  return f.nodes.empty() ? FreePoly{} : v.back();
}

/// Evaluates a sparse polynomial at scalar points.
inline Fe sp_eval(const FieldCtx& F, const FreePoly& f,
                  const std::vector<Fe>& point) {
  Fe acc = F.zero();
  for (const auto& [w, c] : f.terms) {
    Fe prod = c;
    for (uint32_t letter : w) {
      NCF_INPUT(letter < point.size(), "evaluation point has too few entries");
      prod = F.mul(prod, point[letter]);
    }
    F.add(acc.data(), acc.data(), prod.data());
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Randomized identity tests on the commutative image.
// ---------------------------------------------------------------------------

/// A scalar point (over a possibly grown field) at which a formula is
/// provably nonzero.
struct CommWitness {
  FieldEmbedding emb;     // field the point lives in (emb.big)
  std::vector<Fe> point;  // one entry per variable, over emb.big
  Fe value;               // the nonzero evaluation
};

/// Randomized test for commutative nonvanishing: samples trial points over a
/// field grown to at least 4x the degree bound. None means "likely zero on
/// scalars"; Some is a certificate.
inline std::optional<CommWitness> commutative_witness(const FieldCtx& F,
                                                      const Formula& f,
                                                      unsigned trials,
                                                      uint64_t seed) {
  uint64_t d = std::max<uint64_t>(degree_bound(f), 1);
  uint64_t want = d > (1ULL << 55) ? ~0ULL : 4 * d;
  FieldEmbedding emb = grow_field_to(F, want, seed ^ 0x77c6a3f2U);
  Rng rng(seed);
  for (unsigned t = 0; t < std::max(trials, 1u); ++t) {
    std::vector<Fe> point(f.nvars);
    for (auto& a : point) a = emb.big.rand(rng);
    Fe val = eval_scalar(F, f, point, &emb);
    if (!emb.big.is_zero(val)) {
      return CommWitness{std::move(emb), std::move(point), std::move(val)};
    }
  }
  return std::nullopt;
}

/// A matrix substitution over the base prime field at which the formula's
/// image is invertible.
struct InvertibleImage {
  FieldCtx base;                   // F_p
  size_t dim = 0;                  // common dimension of the matrices
  std::vector<ScalarMatrix> point;
  ScalarMatrix image;              // f(point), invertible
};

namespace detail {

/// Pushes a matrix over F_{p^K} down to a block matrix over F_p via the
/// regular representation (a ring homomorphism, so polynomial images
/// commute with the conversion).
inline ScalarMatrix to_base_blocks(const FieldCtx& E, const ScalarMatrix& M) {
  FieldCtx base = FieldCtx::prime(E.p());
  uint32_t K = E.k();
  ScalarMatrix out(base, M.rows * K, M.cols * K);
  for (size_t i = 0; i < M.rows; ++i)
    for (size_t j = 0; j < M.cols; ++j) {
      Fe e(E.ew());
      E.copy(e.data(), M.at(i, j));
      sm_set_block(base, out, i * K, j * K, regular_rep(E, e));
    }
  return out;
}

}  // namespace detail

/// Finds base-prime-field matrices at which the formula evaluates to an
/// invertible matrix. Samples over a grown field sized for the determinant's
/// degree, then converts to F_p blocks through the regular representation.
inline InvertibleImage invertible_image_point(const FieldCtx& F,
                                              const Formula& f,
                                              size_t dim_hint, unsigned trials,
                                              uint64_t seed) {
  uint64_t d = std::max<uint64_t>(degree_bound(f), 1);
  size_t m = std::max<size_t>(dim_hint, 1);
  uint64_t want = 4 * d * static_cast<uint64_t>(m);
  if (want < 4) want = 4;
  FieldEmbedding emb = grow_field_to(F, want, seed ^ 0x51a9b2c4U);
  const FieldCtx& E = emb.big;
  Rng rng(seed);
  for (unsigned t = 0; t < std::max(trials, 1u); ++t) {
    std::vector<ScalarMatrix> point(f.nvars);
    for (auto& M : point) M = sm_rand(E, m, m, rng);
    ScalarMatrix img = eval_matrix(F, f, point, &emb);
    if (!sm_invertible(E, img)) continue;
    InvertibleImage out;
    out.base = FieldCtx::prime(F.p());
    out.dim = m * E.k();
    out.point.reserve(point.size());
    for (const auto& M : point) out.point.push_back(detail::to_base_blocks(E, M));
    out.image = detail::to_base_blocks(E, img);
    NCF_ASSERT(sm_invertible(out.base, out.image),
               "regular representation must preserve invertibility");
    return out;
  }
  throw domain_error(
      detail::concat("no invertible image found after ", trials,
                     " trials at dimension ", m,
                     "; increase trials or the dimension hint"));
}

// ---------------------------------------------------------------------------
// Brute-force factorization oracle (tests only; exponential).
// ---------------------------------------------------------------------------

namespace detail {

inline std::set<Word, GradedLex> prefix_support(const FreePoly& f, size_t maxlen) {
  std::set<Word, GradedLex> out;
  for (const auto& [w, c] : f.terms) {
    (void)c;
    for (size_t l = 0; l <= std::min(maxlen, w.size()); ++l)
      out.insert(Word(w.begin(), w.begin() + l));
  }
  return out;
}

inline std::set<Word, GradedLex> suffix_support(const FreePoly& f, size_t maxlen) {
  std::set<Word, GradedLex> out;
  for (const auto& [w, c] : f.terms) {
    (void)c;
    for (size_t l = 0; l <= std::min(maxlen, w.size()); ++l)
      out.insert(Word(w.end() - l, w.end()));
  }
  return out;
}

}  // namespace detail

/// All ways to write f as a product of two nonconstant polynomials, with the
/// left factor normalized to leading coefficient 1 (splits unique up to a
/// scalar slide, so this lists each split once). Exhaustive and exact.
///
/// Any factor's words are prefixes (left) / suffixes (right) of f's words:
/// if some word of g were not a prefix of a word of f, take the graded-lex
/// largest such word w and the largest word u of h; wu can only be cancelled
/// by w'u' with w' longer than w, forcing w' to extend w, so w would be a
/// prefix of a word of f after all.
inline std::vector<std::pair<FreePoly, FreePoly>> brute_force_factor(
    const FieldCtx& F, const FreePoly& f) {
  NCF_INPUT(F.order_at_most(5), "oracle caps: field order at most 5");
  long d = sp_deg(f);
  NCF_INPUT(d <= 5, "oracle caps: degree at most 5");
  uint32_t n = 0;
  for (const auto& [w, c] : f.terms) {
    (void)c;
    for (uint32_t letter : w) n = std::max(n, letter + 1);
  }
  NCF_INPUT(n <= 3, "oracle caps: at most 3 variables");

  std::vector<std::pair<FreePoly, FreePoly>> out;
  if (d <= 1) return out;  // constants and linear polynomials do not split

  std::vector<Fe> elems = enumerate_field(F);
  uint64_t q = elems.size();

  for (long k = 1; k < d; ++k) {
    // Left factor has degree exactly k; enumerate its coefficients over the
    // prefix support, solve the right factor linearly, verify exactly.
    std::vector<Word> pref;
    for (const auto& w : detail::prefix_support(f, k)) pref.push_back(w);
    std::vector<Word> suf;
    for (const auto& w : detail::suffix_support(f, d - k)) suf.push_back(w);

    unsigned __int128 assignments = 1;
    bool too_big = false;
    for (size_t i = 0; i < pref.size() && !too_big; ++i) {
      assignments *= q;
      if (assignments > (1ULL << 24)) too_big = true;
    }
    NCF_INPUT(!too_big, "brute-force oracle instance too large (", pref.size(),
              " candidate words over an order-", q, " field)");

    std::vector<size_t> digits(pref.size(), 0);
    while (true) {
      // Build g from the current assignment.
      FreePoly g;
      bool has_topdeg = false;
      size_t top_idx = SIZE_MAX;  // graded-lex-largest nonzero word index
      for (size_t i = 0; i < pref.size(); ++i) {
        if (digits[i] == 0) continue;
        g.terms[pref[i]] = elems[digits[i]];
        top_idx = i;  // pref is sorted graded-lex ascending
        if (pref[i].size() == static_cast<size_t>(k)) has_topdeg = true;
      }
      bool canonical = top_idx != SIZE_MAX && F.is_one(elems[digits[top_idx]]);
      if (has_topdeg && canonical) {
        // Solve g * h = f for h supported on the suffix words.
        std::set<Word, GradedLex> eq_words;
        for (const auto& [w, c] : f.terms) {
          (void)c;
          eq_words.insert(w);
        }
        for (const auto& [w, cw] : g.terms) {
          (void)cw;
          for (const auto& u : suf) {
            Word m = w;
            m.insert(m.end(), u.begin(), u.end());
            eq_words.insert(m);
          }
        }
        std::vector<Word> eqs(eq_words.begin(), eq_words.end());
        ScalarMatrix A(F, eqs.size(), suf.size());
        ScalarMatrix b(F, eqs.size(), 1);
        for (size_t r = 0; r < eqs.size(); ++r) {
          const Word& m = eqs[r];
          auto it = f.terms.find(m);
          if (it != f.terms.end()) F.copy(b.at(r, 0), it->second.data());
          for (size_t u = 0; u < suf.size(); ++u) {
            if (suf[u].size() > m.size()) continue;
            Word head(m.begin(), m.end() - suf[u].size());
            if (!std::equal(suf[u].begin(), suf[u].end(),
                            m.end() - suf[u].size()))
              continue;
            auto git = g.terms.find(head);
            if (git != g.terms.end()) F.add(A.at(r, u), A.at(r, u), git->second.data());
          }
        }
        auto x = sm_solve(F, A, b);
        if (x.has_value()) {
          FreePoly h;
          for (size_t u = 0; u < suf.size(); ++u) {
            Fe c(F.ew());
            F.copy(c.data(), x->at(u, 0));
            if (!F.is_zero(c)) h.terms[suf[u]] = c;
          }
          if (sp_deg(h) == d - k && sp_eq(sp_mul(F, g, h), f)) {
            out.emplace_back(std::move(g), std::move(h));
          }
        }
      }
      // Odometer step.
      size_t i = 0;
      while (i < digits.size() && ++digits[i] == q) digits[i++] = 0;
      if (i == digits.size()) break;
    }
  }
  return out;
}

/// Number of irreducible factors in a complete factorization (well-defined:
/// factorization length is an invariant in the free algebra). Constants have
/// length 0; irreducible nonconstants have length 1. Oracle use only.
inline unsigned factorization_length(const FieldCtx& F, const FreePoly& f) {
  NCF_REQUIRE(!f.is_zero(), "factorization length of zero is undefined");
  if (sp_deg(f) == 0) return 0;
  auto splits = brute_force_factor(F, f);
  if (splits.empty()) return 1;
  const auto& [g, h] = splits.front();
  return factorization_length(F, g) + factorization_length(F, h);
}

}  // namespace ncfactor

#endif  // NCFACTOR_EXPR_HPP
