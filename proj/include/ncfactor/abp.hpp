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
// Algebraic branching programs with affine edge labels: construction from
// formulas, ring operations, exact deterministic zero-testing, coefficient
// extraction, and leading-word search.
//
// The zero test works on the whole vertex space at once. Each affine label
// splits into a constant part and per-variable parts; a monomial x_{j1}..x_{jt}
// is picked up along a path by choosing t edges contributing their variable
// parts with arbitrary constant-part runs in between. With K = (I - Gamma)^-1
// the constant-run closure and D_j the variable-j adjacency, the coefficient
// of a word is  e_src K (D_{j1} K) ... (D_{jt} K) e_sink,  so propagating
// row-vector spans through the maps u -> u D_j K is exact per degree.

#ifndef NCFACTOR_ABP_HPP
#define NCFACTOR_ABP_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ncfactor/expr.hpp"

namespace ncfactor {

/// An affine linear form c0 + sum_j c_j x_j (sparse in the variables).
struct AffForm {
  Fe c0;
  std::vector<std::pair<uint32_t, Fe>> lin;  // sorted by variable index
};

inline AffForm aff_const(const FieldCtx& F, const Fe& c) { return {c, {}}; }

inline AffForm aff_var(const FieldCtx& F, uint32_t j) {
  return {F.zero(), {{j, F.one()}}};
}

inline void aff_normalize(const FieldCtx& F, AffForm& a) {
  std::vector<std::pair<uint32_t, Fe>> keep;
  for (auto& [j, c] : a.lin)
    if (!F.is_zero(c)) keep.emplace_back(j, c);
  std::sort(keep.begin(), keep.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  a.lin = std::move(keep);
}

inline AffForm aff_add(const FieldCtx& F, const AffForm& a, const AffForm& b) {
  AffForm r;
  r.c0 = F.add(a.c0, b.c0);
  r.lin = a.lin;
  for (const auto& [j, c] : b.lin) {
    bool found = false;
    for (auto& [i, d] : r.lin)
      if (i == j) {
        d = F.add(d, c);
        found = true;
      }
    if (!found) r.lin.emplace_back(j, c);
  }
  aff_normalize(F, r);
  return r;
}

inline AffForm aff_scale(const FieldCtx& F, const AffForm& a, const Fe& s) {
  AffForm r;
  r.c0 = F.mul(a.c0, s);
  for (const auto& [j, c] : a.lin) r.lin.emplace_back(j, F.mul(c, s));
  aff_normalize(F, r);
  return r;
}

inline bool aff_is_zero(const FieldCtx& F, const AffForm& a) {
  if (!F.is_zero(a.c0)) return false;
  for (const auto& [j, c] : a.lin)
    if (!F.is_zero(c)) return false;
  return true;
}

/// A layered algebraic branching program. Vertices are numbered globally in
/// layer order; layer i occupies [layer_start[i], layer_start[i+1]). Layer 0
/// holds the unique source (vertex 0) and the last layer the unique sink
/// (the last vertex). Edges run only between consecutive layers.
struct Abp {
  uint32_t nvars = 0;
  std::vector<uint32_t> layer_start;  // depth+2 entries
  struct Edge {
    uint32_t from, to;
    AffForm label;
  };
  std::vector<Edge> edges;

  size_t depth() const { return layer_start.size() - 2; }
  size_t vertex_count() const { return layer_start.back(); }
  uint32_t source() const { return 0; }
  uint32_t sink() const { return layer_start.back() - 1; }
};

namespace detail {

inline uint32_t layer_of(const Abp& a, uint32_t v) {
  uint32_t lo = 0;
  while (a.layer_start[lo + 1] <= v) ++lo;
  return lo;
}

}  // namespace detail

/// Structural sanity check: single source/sink, edges between consecutive
/// layers only, label widths matching the field.
inline void abp_validate(const FieldCtx& F, const Abp& a) {
  NCF_ASSERT(a.layer_start.size() >= 2, "ABP needs at least two layers");
  NCF_ASSERT(a.layer_start.front() == 0, "layer offsets must start at 0");
  for (size_t i = 0; i + 1 < a.layer_start.size(); ++i)
    NCF_ASSERT(a.layer_start[i] < a.layer_start[i + 1],
               "layers must be nonempty");
  NCF_ASSERT(a.layer_start[1] == 1, "source layer must be a single vertex");
  NCF_ASSERT(a.layer_start.back() ==
                 a.layer_start[a.layer_start.size() - 2] + 1,
             "sink layer must be a single vertex");
  for (const auto& e : a.edges) {
    NCF_ASSERT(e.from < a.vertex_count() && e.to < a.vertex_count(),
               "edge endpoint out of range");
    NCF_ASSERT(detail::layer_of(a, e.to) == detail::layer_of(a, e.from) + 1,
               "edges must join consecutive layers");
    NCF_ASSERT(e.label.c0.size() == F.ew(), "label width mismatch");
    for (const auto& [j, c] : e.label.lin) {
      NCF_ASSERT(j < a.nvars, "label references an unknown variable");
      NCF_ASSERT(c.size() == F.ew(), "label width mismatch");
    }
  }
}

// ---------------------------------------------------------------------------
// Construction and ring operations.
// ---------------------------------------------------------------------------

/// Single-edge ABP computing one affine form.
inline Abp abp_affine(const FieldCtx& F, uint32_t nvars, const AffForm& label) {
  Abp a;
  a.nvars = nvars;
  a.layer_start = {0, 1, 2};
  a.edges.push_back({0, 1, label});
  (void)F;
  return a;
}

inline Abp abp_const(const FieldCtx& F, uint32_t nvars, const Fe& c) {
  return abp_affine(F, nvars, aff_const(F, c));
}

inline Abp abp_one(const FieldCtx& F, uint32_t nvars) {
  return abp_const(F, nvars, F.one());
}

inline Abp abp_var(const FieldCtx& F, uint32_t nvars, uint32_t j) {
  NCF_ASSERT(j < nvars, "variable out of range");
  return abp_affine(F, nvars, aff_var(F, j));
}

/// Extends the program by plain pass-through edges (label 1) so its depth
/// becomes `depth`; the computed polynomial is unchanged.
inline Abp abp_pad(const FieldCtx& F, Abp a, size_t depth) {
  while (a.depth() < depth) {
    uint32_t old_sink = a.sink();
    a.layer_start.push_back(a.layer_start.back() + 1);
    a.edges.push_back({old_sink, old_sink + 1, aff_const(F, F.one())});
  }
  return a;
}

/// Detects programs that are structurally a constant: depth 1 with no
/// variable parts on any edge. Returns the constant when so.
inline std::optional<Fe> abp_trivial_const(const FieldCtx& F, const Abp& a) {
  if (a.depth() != 1) return std::nullopt;
  Fe acc = F.zero();
  for (const auto& e : a.edges) {
    for (const auto& [j, c] : e.label.lin)
      if (!F.is_zero(c)) return std::nullopt;
    acc = F.add(acc, e.label.c0);
  }
  return acc;
}

inline Abp abp_scale(const FieldCtx& F, Abp a, const Fe& c);

/// Product by sink/source concatenation; depth adds. Structurally constant
/// operands fold into a scaling so that composite expressions (for example
/// products against identity matrices) stay small.
inline Abp abp_product(const FieldCtx& F, const Abp& x, const Abp& y) {
  uint32_t nv = std::max(x.nvars, y.nvars);
  if (auto c = abp_trivial_const(F, x)) {
    if (F.is_zero(*c)) return abp_const(F, nv, F.zero());
    Abp out = abp_scale(F, y, *c);
    out.nvars = nv;
    return out;
  }
  if (auto c = abp_trivial_const(F, y)) {
    if (F.is_zero(*c)) return abp_const(F, nv, F.zero());
    Abp out = abp_scale(F, x, *c);
    out.nvars = nv;
    return out;
  }
  Abp r;
  r.nvars = std::max(x.nvars, y.nvars);
  uint32_t xs = static_cast<uint32_t>(x.vertex_count());
  // y's source is fused onto x's sink; later y vertices shift by xs - 1.
  r.layer_start = x.layer_start;
  for (size_t i = 2; i < y.layer_start.size(); ++i)
    r.layer_start.push_back(y.layer_start[i] + xs - 1);
  r.edges = x.edges;
  for (const auto& e : y.edges) {
    uint32_t from = e.from == 0 ? x.sink() : e.from + xs - 1;
    uint32_t to = e.to + xs - 1;
    r.edges.push_back({from, to, e.label});
  }
  return r;
}

/// Sum: both programs are padded to a common depth and laid side by side
/// between a shared source and sink; parallel edges merge by label addition.
inline Abp abp_sum(const FieldCtx& F, const Abp& x0, const Abp& y0) {
  // Structurally zero summands drop out; this keeps accumulation loops
  // (matrix products of programs) from growing dead vertices.
  if (auto c = abp_trivial_const(F, x0); c && F.is_zero(*c)) {
    Abp out = y0;
    out.nvars = std::max(x0.nvars, y0.nvars);
    return out;
  }
  if (auto c = abp_trivial_const(F, y0); c && F.is_zero(*c)) {
    Abp out = x0;
    out.nvars = std::max(x0.nvars, y0.nvars);
    return out;
  }
  size_t depth = std::max(x0.depth(), y0.depth());
  Abp x = abp_pad(F, x0, depth);
  Abp y = abp_pad(F, y0, depth);
  Abp r;
  r.nvars = std::max(x.nvars, y.nvars);
  if (depth == 1) {
    // Single edge layer: merge the two source->sink labels.
    AffForm lx = aff_const(F, F.zero()), ly = aff_const(F, F.zero());
    for (const auto& e : x.edges) lx = aff_add(F, lx, e.label);
    for (const auto& e : y.edges) ly = aff_add(F, ly, e.label);
    return abp_affine(F, r.nvars, aff_add(F, lx, ly));
  }
  // Vertex map: shared source 0 and sink; x/y interior vertices renumbered
  // layer by layer (x block first).
  std::vector<uint32_t> xmap(x.vertex_count()), ymap(y.vertex_count());
  r.layer_start = {0, 1};
  xmap[0] = 0;
  ymap[0] = 0;
  uint32_t next = 1;
  for (size_t layer = 1; layer <= depth - 1; ++layer) {
    for (uint32_t v = x.layer_start[layer]; v < x.layer_start[layer + 1]; ++v)
      xmap[v] = next++;
    for (uint32_t v = y.layer_start[layer]; v < y.layer_start[layer + 1]; ++v)
      ymap[v] = next++;
    r.layer_start.push_back(next);
  }
  xmap[x.sink()] = next;
  ymap[y.sink()] = next;
  r.layer_start.push_back(next + 1);
  for (const auto& e : x.edges) r.edges.push_back({xmap[e.from], xmap[e.to], e.label});
  for (const auto& e : y.edges) r.edges.push_back({ymap[e.from], ymap[e.to], e.label});
  return r;
}

/// Scales the computed polynomial by c (applied to source-leaving labels).
inline Abp abp_scale(const FieldCtx& F, Abp a, const Fe& c) {
  for (auto& e : a.edges)
    if (e.from == a.source()) e.label = aff_scale(F, e.label, c);
  return a;
}

inline Abp abp_sub(const FieldCtx& F, const Abp& x, const Abp& y) {
  return abp_sum(F, x, abp_scale(F, y, F.from_int(-1)));
}

/// Substitutes x_j <- x_j + sign*alpha_j in every label.
inline Abp abp_shift_vars(const FieldCtx& F, Abp a, const std::vector<Fe>& alpha,
                          int sign) {
  for (auto& e : a.edges) {
    Fe delta = F.zero();
    for (const auto& [j, c] : e.label.lin) {
      if (j < alpha.size()) F.mul_acc(delta.data(), c.data(), alpha[j].data());
    }
    if (sign < 0) delta = F.neg(delta);
    e.label.c0 = F.add(e.label.c0, delta);
  }
  return a;
}

/// Word-reversal antiautomorphism: flips all edges and swaps source/sink.
/// The computed polynomial is the input's with every monomial reversed.
inline Abp abp_reverse(const FieldCtx& F, const Abp& a) {
  (void)F;
  Abp r;
  r.nvars = a.nvars;
  size_t L = a.depth();
  uint32_t V = static_cast<uint32_t>(a.vertex_count());
  // New id: vertices of old layer i become (in order) vertices of layer L-i.
  std::vector<uint32_t> map(V);
  std::vector<uint32_t> sizes(L + 1);
  for (size_t i = 0; i <= L; ++i)
    sizes[L - i] = a.layer_start[i + 1] - a.layer_start[i];
  r.layer_start.assign(1, 0);
  for (size_t i = 0; i <= L; ++i)
    r.layer_start.push_back(r.layer_start.back() + sizes[i]);
  for (size_t i = 0; i <= L; ++i) {
    uint32_t old_base = a.layer_start[i];
    uint32_t new_base = r.layer_start[L - i];
    for (uint32_t v = old_base; v < a.layer_start[i + 1]; ++v)
      map[v] = new_base + (v - old_base);
  }
  for (const auto& e : a.edges) r.edges.push_back({map[e.to], map[e.from], e.label});
  return r;
}

/// Formula to ABP, structurally (exact polynomial equality).
inline Abp from_formula(const FieldCtx& F, const Formula& f) {
  uint32_t n = f.nvars;
  std::vector<Abp> v(f.nodes.size());
  for (size_t i = 0; i < f.nodes.size(); ++i) {
    const auto& node = f.nodes[i];
    switch (node.op) {
      case Formula::Op::Const: v[i] = abp_const(F, n, node.value); break;
      case Formula::Op::Var: v[i] = abp_var(F, n, node.var); break;
      case Formula::Op::Add: v[i] = abp_sum(F, v[node.lhs], v[node.rhs]); break;
      case Formula::Op::Mul:
        v[i] = abp_product(F, v[node.lhs], v[node.rhs]);
        break;
    }
  }
  if (f.nodes.empty()) return abp_const(F, 0, F.zero());
  Abp out = std::move(v.back());
  out.nvars = n;
  return out;
}

// ---------------------------------------------------------------------------
// Exact analysis: zero test, degree, coefficients, leading words.
// ---------------------------------------------------------------------------

/// Shared machinery for the exact ABP analyses. Builds the constant-closure
/// matrix K once and exposes the per-letter transfer maps.
class AbpAnalyzer {
 public:
  AbpAnalyzer(const FieldCtx& F, const Abp& a) : F_(F), a_(a) {
    abp_validate(F, a);
    V_ = a.vertex_count();
    // K = (I - Gamma)^{-1}, Gamma the constant-part adjacency (strictly
    // upper triangular in layer order, so I - Gamma is invertible).
    ScalarMatrix ig = sm_identity(F_, V_);
    for (const auto& e : a.edges) F_.sub(ig.at(e.from, e.to), ig.at(e.from, e.to), e.label.c0.data());
    K_ = sm_invert(F_, ig);
    // Forward spans S_t and the sink-degree profile.
    ScalarMatrix row(F_, 1, V_);
    for (size_t j = 0; j < V_; ++j) F_.copy(row.at(0, j), K_.at(0, j));
    fwd_.push_back(canonical_rows(row));
    for (size_t t = 1; t <= a.depth(); ++t) {
      ScalarMatrix next = step_rows(fwd_.back());
      if (next.rows == 0) break;
      fwd_.push_back(std::move(next));
    }
    degree_ = -1;
    for (size_t t = 0; t < fwd_.size(); ++t)
      if (rows_touch_sink(fwd_[t])) degree_ = static_cast<long>(t);
  }

  const FieldCtx& field() const { return F_; }
  bool is_zero() const { return degree_ < 0; }
  long degree() const { return degree_; }

  /// Row state for greedy prefix walks; starts at e_src K.
  ScalarMatrix start_row() const {
    ScalarMatrix row(F_, 1, V_);
    for (size_t j = 0; j < V_; ++j) F_.copy(row.at(0, j), K_.at(0, j));
    return row;
  }

  /// u -> u (D_j K).
  ScalarMatrix advance(const ScalarMatrix& u, uint32_t j) const {
    return sm_mul(F_, apply_var_right(u, j), K_);
  }

  Fe sink_value(const ScalarMatrix& u) const {
    Fe c(F_.ew());
    F_.copy(c.data(), u.at(0, V_ - 1));
    return c;
  }

  /// Exact coefficient of the given word.
  Fe coefficient(const Word& w) const {
    ScalarMatrix u = start_row();
    for (uint32_t j : w) {
      if (j >= a_.nvars) return F_.zero();
      u = advance(u, j);
    }
    return sink_value(u);
  }

  /// True iff some monomial with the given prefix completes to a nonzero
  /// monomial of total degree prefix_len + remaining.
  bool prefix_completes(const ScalarMatrix& u, size_t remaining) {
    ensure_reverse(remaining);
    const ScalarMatrix& R = rev_[remaining];
    for (size_t r = 0; r < R.rows; ++r) {
      Fe dot = F_.zero();
      for (size_t j = 0; j < V_; ++j) F_.mul_acc(dot.data(), u.at(0, j), R.at(r, j));
      if (!F_.is_zero(dot)) return true;
    }
    return false;
  }

  uint32_t nvars() const { return a_.nvars; }

 private:
  /// RREF rows (dropping zero rows).
  ScalarMatrix canonical_rows(ScalarMatrix m) const {
    std::vector<size_t> piv = sm_rref(F_, m);
    return sm_block(F_, m, 0, 0, piv.size(), m.cols);
  }

  /// Applies all letters to all rows and re-canonicalizes.
  ScalarMatrix step_rows(const ScalarMatrix& rows) const {
    ScalarMatrix out(F_, rows.rows * a_.nvars, V_);
    for (size_t r = 0; r < rows.rows; ++r) {
      ScalarMatrix u = sm_block(F_, rows, r, 0, 1, V_);
      for (uint32_t j = 0; j < a_.nvars; ++j)
        sm_set_block(F_, out, r * a_.nvars + j, 0, advance(u, j));
    }
    return canonical_rows(std::move(out));
  }

  bool rows_touch_sink(const ScalarMatrix& rows) const {
    for (size_t r = 0; r < rows.rows; ++r)
      if (!F_.is_zero(rows.at(r, V_ - 1))) return true;
    return false;
  }

  /// Sparse right-multiplication by the variable-j adjacency D_j.
  ScalarMatrix apply_var_right(const ScalarMatrix& u, uint32_t j) const {
    ScalarMatrix out(F_, 1, V_);
    for (const auto& e : a_.edges)
      for (const auto& [var, c] : e.label.lin)
        if (var == j) F_.mul_acc(out.at(0, e.to), u.at(0, e.from), c.data());
    return out;
  }

  /// Sparse left-multiplication: r -> D_j (K r), as rows of transposes.
  ScalarMatrix apply_back(const ScalarMatrix& r_row, uint32_t j) const {
    // r_row is a row holding a column vector r^T; compute (D_j K r)^T.
    ScalarMatrix kr(F_, 1, V_);
    for (size_t i = 0; i < V_; ++i) {
      Fe acc = F_.zero();
      for (size_t l = 0; l < V_; ++l) F_.mul_acc(acc.data(), K_.at(i, l), r_row.at(0, l));
      F_.copy(kr.at(0, i), acc.data());
    }
    ScalarMatrix out(F_, 1, V_);
    for (const auto& e : a_.edges)
      for (const auto& [var, c] : e.label.lin)
        if (var == j) F_.mul_acc(out.at(0, e.from), c.data(), kr.at(0, e.to));
    return out;
  }

  void ensure_reverse(size_t upto) {
    if (rev_.empty()) {
      ScalarMatrix sink(F_, 1, V_);
      F_.set_one(sink.at(0, V_ - 1));
      rev_.push_back(std::move(sink));
    }
    while (rev_.size() <= upto) {
      const ScalarMatrix& prev = rev_.back();
      ScalarMatrix out(F_, prev.rows * a_.nvars, V_);
      for (size_t r = 0; r < prev.rows; ++r) {
        ScalarMatrix row = sm_block(F_, prev, r, 0, 1, V_);
        for (uint32_t j = 0; j < a_.nvars; ++j)
          sm_set_block(F_, out, r * a_.nvars + j, 0, apply_back(row, j));
      }
      rev_.push_back(canonical_rows(std::move(out)));
    }
  }

  FieldCtx F_;
  const Abp a_;
  size_t V_ = 0;
  ScalarMatrix K_;
  std::vector<ScalarMatrix> fwd_;
  std::vector<ScalarMatrix> rev_;  // rev_[m]: span of suffix transfers, length m
  long degree_ = -1;
};

/// Exact deterministic zero test.
inline bool abp_is_zero(const FieldCtx& F, const Abp& a) {
  return AbpAnalyzer(F, a).is_zero();
}

/// Degree of the computed polynomial (-1 for zero).
inline long abp_degree(const FieldCtx& F, const Abp& a) {
  return AbpAnalyzer(F, a).degree();
}

/// Exact coefficient of a word.
inline Fe coefficient_of_word(const FieldCtx& F, const Abp& a, const Word& w) {
  return AbpAnalyzer(F, a).coefficient(w);
}

/// Lexicographically least monomial of maximal degree, with its coefficient;
/// None iff the polynomial is zero.
inline std::optional<std::pair<Word, Fe>> leading_word(const FieldCtx& F,
                                                       const Abp& a) {
  AbpAnalyzer an(F, a);
  if (an.is_zero()) return std::nullopt;
  size_t D = static_cast<size_t>(an.degree());
  Word w;
  ScalarMatrix u = an.start_row();
  for (size_t t = 0; t < D; ++t) {
    bool advanced = false;
    for (uint32_t j = 0; j < an.nvars() && !advanced; ++j) {
      ScalarMatrix next = an.advance(u, j);
      if (an.prefix_completes(next, D - t - 1)) {
        w.push_back(j);
        u = std::move(next);
        advanced = true;
      }
    }
    NCF_ASSERT(advanced, "leading-word walk lost the maximal degree");
  }
  Fe c = an.sink_value(u);
  NCF_ASSERT(!F.is_zero(c), "leading-word coefficient must be nonzero");
  return std::make_pair(std::move(w), std::move(c));
}

/// Leading word of a vector of programs: the lexicographically least word of
/// maximal degree carrying a nonzero coefficient in at least one component.
/// Returns the word and the per-component coefficient vector.
inline std::optional<std::pair<Word, std::vector<Fe>>> vector_leading_word(
    const FieldCtx& F, const std::vector<Abp>& comps) {
  std::vector<AbpAnalyzer> an;
  an.reserve(comps.size());
  for (const auto& c : comps) an.emplace_back(F, c);
  long D = -1;
  for (const auto& x : an) D = std::max(D, x.degree());
  if (D < 0) return std::nullopt;
  std::vector<ScalarMatrix> u;
  for (auto& x : an) u.push_back(x.start_row());
  Word w;
  for (size_t t = 0; t < static_cast<size_t>(D); ++t) {
    uint32_t nvars = 0;
    for (const auto& c : comps) nvars = std::max(nvars, c.nvars);
    bool advanced = false;
    for (uint32_t j = 0; j < nvars && !advanced; ++j) {
      // Viable iff some component still reaches total degree D with prefix+j.
      std::vector<ScalarMatrix> next(an.size());
      bool viable = false;
      for (size_t i = 0; i < an.size(); ++i) {
        if (j >= an[i].nvars()) {
          next[i] = ScalarMatrix(F, 1, u[i].cols);
          continue;
        }
        next[i] = an[i].advance(u[i], j);
        if (an[i].degree() == D &&
            an[i].prefix_completes(next[i], static_cast<size_t>(D) - t - 1))
          viable = true;
      }
      if (viable) {
        w.push_back(j);
        u = std::move(next);
        advanced = true;
      }
    }
    NCF_ASSERT(advanced, "vector leading-word walk lost the maximal degree");
  }
  std::vector<Fe> coeffs;
  bool nonzero = false;
  for (size_t i = 0; i < an.size(); ++i) {
    Fe c = an[i].sink_value(u[i]);
    if (!F.is_zero(c)) nonzero = true;
    coeffs.push_back(std::move(c));
  }
  NCF_ASSERT(nonzero, "vector leading word must have a nonzero coefficient");
  return std::make_pair(std::move(w), std::move(coeffs));
}

/// Evaluates the computed polynomial at square matrices (one per variable),
/// optionally mapping coefficients through a field embedding into G.
inline ScalarMatrix abp_eval_matrix(const FieldCtx& G, const Abp& a,
                                    const std::vector<ScalarMatrix>& point,
                                    const FieldEmbedding* emb = nullptr) {
  NCF_INPUT(point.size() >= a.nvars, "evaluation point needs ", a.nvars,
            " matrices");
  size_t m = point.empty() ? 1 : point[0].rows;
  for (const auto& M : point)
    NCF_INPUT(M.rows == m && M.cols == m,
              "evaluation matrices must be square of equal dimension");
  auto lift = [&](const Fe& c) { return emb ? emb->map(c) : c; };
  std::vector<ScalarMatrix> val(a.vertex_count());
  val[0] = sm_identity(G, m);
  for (size_t v = 1; v < a.vertex_count(); ++v) val[v] = sm_zero(G, m, m);
  for (size_t layer = 0; layer < a.depth(); ++layer) {
    for (const auto& e : a.edges) {
      if (detail::layer_of(a, e.from) != layer) continue;
      ScalarMatrix lbl = sm_scale(G, sm_identity(G, m), lift(e.label.c0));
      for (const auto& [j, c] : e.label.lin)
        lbl = sm_add(G, lbl, sm_scale(G, point[j], lift(c)));
      val[e.to] = sm_add(G, val[e.to], sm_mul(G, val[e.from], lbl));
    }
  }
  return val[a.sink()];
}

/// Scalar evaluation (1x1 specialization).
inline Fe abp_eval_scalar(const FieldCtx& G, const Abp& a,
                          const std::vector<Fe>& point,
                          const FieldEmbedding* emb = nullptr) {
  std::vector<ScalarMatrix> ms;
  for (const Fe& c : point) {
    ScalarMatrix M(G, 1, 1);
    G.copy(M.at(0, 0), c.data());
    ms.push_back(std::move(M));
  }
  ScalarMatrix r = abp_eval_matrix(G, a, ms, emb);
  Fe out(G.ew());
  G.copy(out.data(), r.at(0, 0));
  return out;
}

/// Restriction of the computed polynomial to a candidate word list.
inline FreePoly to_sparse_abp(const FieldCtx& F, const Abp& a,
                              const std::vector<Word>& candidates) {
  AbpAnalyzer an(F, a);
  FreePoly out;
  for (const Word& w : candidates) {
    Fe c = an.coefficient(w);
    if (!F.is_zero(c)) out.terms[w] = c;
  }
  return out;
}

/// Full expansion by path dynamic programming; exponential in general, for
/// tests and tiny instances only (term-count guarded).
inline FreePoly abp_to_freepoly(const FieldCtx& F, const Abp& a,
                                size_t max_terms = 1 << 16) {
  std::vector<FreePoly> at(a.vertex_count());
  at[0] = sp_one(F);
  for (size_t layer = 0; layer < a.depth(); ++layer) {
    for (const auto& e : a.edges) {
      if (detail::layer_of(a, e.from) != layer) continue;
      FreePoly lbl;
      if (!F.is_zero(e.label.c0)) lbl.terms[{}] = e.label.c0;
      for (const auto& [j, c] : e.label.lin)
        if (!F.is_zero(c)) lbl.terms[{j}] = c;
      at[e.to] = sp_add(F, at[e.to], sp_mul(F, at[e.from], lbl));
      NCF_REQUIRE(at[e.to].terms.size() <= max_terms,
                  "ABP expansion exceeds the term guard");
    }
  }
  return at[a.sink()];
}

// ---------------------------------------------------------------------------
// JSON serialization.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json fe_to_json(const FieldCtx& F, const Fe& c) {
  if (F.k() == 1) return c[0];
  nlohmann::json arr = nlohmann::json::array();
  for (uint64_t w : c) arr.push_back(w);
  return arr;
}

inline Fe fe_from_json(const FieldCtx& F, const nlohmann::json& j) {
  if (F.k() == 1) {
    NCF_INPUT(j.is_number_unsigned(), "field element must be an integer");
    uint64_t v = j.get<uint64_t>();
    NCF_INPUT(v < F.p(), "field element out of range");
    return Fe{v};
  }
  NCF_INPUT(j.is_array() && j.size() == F.k(),
            "field element must be an array of ", F.k(), " integers");
  Fe c(F.k());
  for (uint32_t i = 0; i < F.k(); ++i) {
    NCF_INPUT(j[i].is_number_unsigned(), "field element must hold integers");
    c[i] = j[i].get<uint64_t>();
    NCF_INPUT(c[i] < F.p(), "field element out of range");
  }
  return c;
}

}  // namespace detail

inline nlohmann::json abp_to_json(const FieldCtx& F, const Abp& a) {
  nlohmann::json j;
  j["field"] = F.spec_string();
  j["nvars"] = a.nvars;
  nlohmann::json layers = nlohmann::json::array();
  for (size_t i = 0; i + 1 < a.layer_start.size(); ++i) {
    nlohmann::json layer = nlohmann::json::array();
    for (uint32_t v = a.layer_start[i]; v < a.layer_start[i + 1]; ++v)
      layer.push_back(v);
    layers.push_back(std::move(layer));
  }
  j["layers"] = std::move(layers);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : a.edges) {
    nlohmann::json je;
    je["from"] = e.from;
    je["to"] = e.to;
    je["const"] = detail::fe_to_json(F, e.label.c0);
    nlohmann::json coeffs = nlohmann::json::object();
    for (const auto& [var, c] : e.label.lin)
      coeffs[std::to_string(var + 1)] = detail::fe_to_json(F, c);
    je["coeffs"] = std::move(coeffs);
    edges.push_back(std::move(je));
  }
  j["edges"] = std::move(edges);
  return j;
}

inline Abp abp_from_json(const FieldCtx& F, const nlohmann::json& j) {
  NCF_INPUT(j.is_object(), "ABP document must be a JSON object");
  NCF_INPUT(j.contains("field") && j["field"].is_string(),
            "ABP document needs a 'field' string");
  NCF_INPUT(j["field"].get<std::string>() == F.spec_string(),
            "ABP field ", j["field"].get<std::string>(),
            " does not match the session field ", F.spec_string());
  Abp a;
  NCF_INPUT(j.contains("nvars") && j["nvars"].is_number_unsigned(),
            "ABP document needs 'nvars'");
  a.nvars = j["nvars"].get<uint32_t>();
  NCF_INPUT(j.contains("layers") && j["layers"].is_array() &&
                j["layers"].size() >= 2,
            "ABP document needs at least two layers");
  a.layer_start = {0};
  uint32_t expect = 0;
  for (const auto& layer : j["layers"]) {
    NCF_INPUT(layer.is_array() && !layer.empty(), "layers must be nonempty");
    for (const auto& v : layer) {
      NCF_INPUT(v.is_number_unsigned() && v.get<uint32_t>() == expect,
                "layer vertices must be consecutive starting at 0");
      ++expect;
    }
    a.layer_start.push_back(expect);
  }
  NCF_INPUT(j.contains("edges") && j["edges"].is_array(),
            "ABP document needs 'edges'");
  for (const auto& je : j["edges"]) {
    NCF_INPUT(je.contains("from") && je.contains("to") && je.contains("const"),
              "edge needs from/to/const");
    Abp::Edge e;
    e.from = je["from"].get<uint32_t>();
    e.to = je["to"].get<uint32_t>();
    e.label.c0 = detail::fe_from_json(F, je["const"]);
    if (je.contains("coeffs")) {
      NCF_INPUT(je["coeffs"].is_object(), "edge coeffs must be an object");
      for (const auto& [key, val] : je["coeffs"].items()) {
        uint64_t var = 0;
        for (char c : key) {
          NCF_INPUT(c >= '0' && c <= '9', "bad variable key '", key, "'");
          var = var * 10 + (c - '0');
        }
        NCF_INPUT(var >= 1 && var <= a.nvars, "variable key out of range: ",
                  key);
        e.label.lin.emplace_back(static_cast<uint32_t>(var - 1),
                                 detail::fe_from_json(F, val));
      }
      aff_normalize(F, e.label);
    }
    a.edges.push_back(std::move(e));
  }
  abp_validate(F, a);
  return a;
}

}  // namespace ncfactor

#endif  // NCFACTOR_ABP_HPP
