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
// Dense matrices over F_{p^k}: exact Gaussian elimination with canonical
// reduced row echelon form, subspaces, minimal polynomials, and the regular
// representation of field extensions.

#ifndef NCFACTOR_MATRIX_HPP
#define NCFACTOR_MATRIX_HPP

#include <optional>
#include <utility>
#include <vector>

#include "ncfactor/field.hpp"

namespace ncfactor {

/// Dense row-major matrix over F_{p^k}; each entry occupies `ew` words.
struct ScalarMatrix {
  size_t rows = 0;
  size_t cols = 0;
  size_t ew = 1;
  std::vector<uint64_t> a;

  ScalarMatrix() = default;
  ScalarMatrix(const FieldCtx& F, size_t r, size_t c)
      : rows(r), cols(c), ew(F.ew()), a(r * c * F.ew(), 0) {}

  uint64_t* at(size_t i, size_t j) { return a.data() + (i * cols + j) * ew; }
  const uint64_t* at(size_t i, size_t j) const {
    return a.data() + (i * cols + j) * ew;
  }

  bool operator==(const ScalarMatrix& o) const {
    return rows == o.rows && cols == o.cols && a == o.a;
  }
};

inline ScalarMatrix sm_zero(const FieldCtx& F, size_t r, size_t c) {
  return ScalarMatrix(F, r, c);
}

inline ScalarMatrix sm_identity(const FieldCtx& F, size_t n) {
  ScalarMatrix m(F, n, n);
  for (size_t i = 0; i < n; ++i) F.set_one(m.at(i, i));
  return m;
}

/// Matrix from nested integer literals (reduced into the prime subfield).
inline ScalarMatrix sm_from_ints(const FieldCtx& F,
                                 const std::vector<std::vector<long long>>& v) {
  size_t r = v.size();
  size_t c = r ? v[0].size() : 0;
  ScalarMatrix m(F, r, c);
  for (size_t i = 0; i < r; ++i) {
    NCF_INPUT(v[i].size() == c, "ragged matrix literal");
    for (size_t j = 0; j < c; ++j) {
      Fe e = F.from_int(v[i][j]);
      F.copy(m.at(i, j), e.data());
    }
  }
  return m;
}

inline bool sm_is_zero(const FieldCtx& F, const ScalarMatrix& m) {
  for (size_t i = 0; i < m.a.size(); i += F.ew())
    if (!F.is_zero(m.a.data() + i)) return false;
  return true;
}

inline bool sm_is_identity(const FieldCtx& F, const ScalarMatrix& m) {
  if (m.rows != m.cols) return false;
  for (size_t i = 0; i < m.rows; ++i)
    for (size_t j = 0; j < m.cols; ++j) {
      if (i == j ? !F.is_one(m.at(i, j)) : !F.is_zero(m.at(i, j))) return false;
    }
  return true;
}

inline ScalarMatrix sm_add(const FieldCtx& F, const ScalarMatrix& x,
                           const ScalarMatrix& y) {
  NCF_ASSERT(x.rows == y.rows && x.cols == y.cols, "shape mismatch in add");
  ScalarMatrix r(F, x.rows, x.cols);
  for (size_t i = 0; i < r.a.size(); i += F.ew())
    F.add(r.a.data() + i, x.a.data() + i, y.a.data() + i);
  return r;
}

inline ScalarMatrix sm_sub(const FieldCtx& F, const ScalarMatrix& x,
                           const ScalarMatrix& y) {
  NCF_ASSERT(x.rows == y.rows && x.cols == y.cols, "shape mismatch in sub");
  ScalarMatrix r(F, x.rows, x.cols);
  for (size_t i = 0; i < r.a.size(); i += F.ew())
    F.sub(r.a.data() + i, x.a.data() + i, y.a.data() + i);
  return r;
}

inline ScalarMatrix sm_neg(const FieldCtx& F, const ScalarMatrix& x) {
  ScalarMatrix r(F, x.rows, x.cols);
  for (size_t i = 0; i < r.a.size(); i += F.ew())
    F.neg(r.a.data() + i, x.a.data() + i);
  return r;
}

inline ScalarMatrix sm_scale(const FieldCtx& F, const ScalarMatrix& x,
                             const Fe& s) {
  ScalarMatrix r(F, x.rows, x.cols);
  for (size_t i = 0; i < r.a.size(); i += F.ew())
    F.mul(r.a.data() + i, x.a.data() + i, s.data());
  return r;
}

inline ScalarMatrix sm_mul(const FieldCtx& F, const ScalarMatrix& x,
                           const ScalarMatrix& y) {
  NCF_ASSERT(x.cols == y.rows, "shape mismatch in mul: ", x.rows, "x", x.cols,
             " * ", y.rows, "x", y.cols);
  ScalarMatrix r(F, x.rows, y.cols);
  for (size_t i = 0; i < x.rows; ++i)
    for (size_t l = 0; l < x.cols; ++l) {
      const uint64_t* xi = x.at(i, l);
      if (F.is_zero(xi)) continue;
      for (size_t j = 0; j < y.cols; ++j) F.mul_acc(r.at(i, j), xi, y.at(l, j));
    }
  return r;
}

inline ScalarMatrix sm_transpose(const FieldCtx& F, const ScalarMatrix& x) {
  ScalarMatrix r(F, x.cols, x.rows);
  for (size_t i = 0; i < x.rows; ++i)
    for (size_t j = 0; j < x.cols; ++j) F.copy(r.at(j, i), x.at(i, j));
  return r;
}

/// Kronecker product; entry ((i1*Br+i2),(j1*Bc+j2)) = A(i1,j1)*B(i2,j2).
inline ScalarMatrix sm_kron(const FieldCtx& F, const ScalarMatrix& A,
                            const ScalarMatrix& B) {
  ScalarMatrix r(F, A.rows * B.rows, A.cols * B.cols);
  for (size_t i1 = 0; i1 < A.rows; ++i1)
    for (size_t j1 = 0; j1 < A.cols; ++j1) {
      if (F.is_zero(A.at(i1, j1))) continue;
      for (size_t i2 = 0; i2 < B.rows; ++i2)
        for (size_t j2 = 0; j2 < B.cols; ++j2)
          F.mul(r.at(i1 * B.rows + i2, j1 * B.cols + j2), A.at(i1, j1),
                B.at(i2, j2));
    }
  return r;
}

/// Permutation matrix P with P * e_j = e_{perm[j]} (i.e. P(perm[j], j) = 1).
inline ScalarMatrix sm_permutation(const FieldCtx& F,
                                   const std::vector<size_t>& perm) {
  ScalarMatrix r(F, perm.size(), perm.size());
  for (size_t j = 0; j < perm.size(); ++j) {
    NCF_ASSERT(perm[j] < perm.size(), "bad permutation");
    F.set_one(r.at(perm[j], j));
  }
  return r;
}

inline ScalarMatrix sm_block(const FieldCtx& F, const ScalarMatrix& m,
                             size_t r0, size_t c0, size_t r, size_t c) {
  NCF_ASSERT(r0 + r <= m.rows && c0 + c <= m.cols, "block out of range");
  ScalarMatrix out(F, r, c);
  for (size_t i = 0; i < r; ++i)
    for (size_t j = 0; j < c; ++j) F.copy(out.at(i, j), m.at(r0 + i, c0 + j));
  return out;
}

inline void sm_set_block(const FieldCtx& F, ScalarMatrix& m, size_t r0,
                         size_t c0, const ScalarMatrix& b) {
  NCF_ASSERT(r0 + b.rows <= m.rows && c0 + b.cols <= m.cols,
             "block out of range");
  for (size_t i = 0; i < b.rows; ++i)
    for (size_t j = 0; j < b.cols; ++j) F.copy(m.at(r0 + i, c0 + j), b.at(i, j));
}

/// Block diagonal sum A ⊕ B.
inline ScalarMatrix sm_dsum(const FieldCtx& F, const ScalarMatrix& A,
                            const ScalarMatrix& B) {
  ScalarMatrix r(F, A.rows + B.rows, A.cols + B.cols);
  sm_set_block(F, r, 0, 0, A);
  sm_set_block(F, r, A.rows, A.cols, B);
  return r;
}

inline ScalarMatrix sm_rand(const FieldCtx& F, size_t r, size_t c, Rng& rng) {
  ScalarMatrix m(F, r, c);
  for (size_t i = 0; i < m.a.size(); i += F.ew()) F.rand(m.a.data() + i, rng);
  return m;
}

// ---------------------------------------------------------------------------
// Gaussian elimination.
// ---------------------------------------------------------------------------

/// In-place reduced row echelon form with first-nonzero-column pivoting
/// (scanning columns left to right, rows top to bottom). Returns pivot
/// columns. The result is the canonical RREF of the row space.
inline std::vector<size_t> sm_rref(const FieldCtx& F, ScalarMatrix& m) {
  std::vector<size_t> pivots;
  size_t row = 0;
  for (size_t col = 0; col < m.cols && row < m.rows; ++col) {
    size_t pr = row;
    while (pr < m.rows && F.is_zero(m.at(pr, col))) ++pr;
    if (pr == m.rows) continue;
    if (pr != row) {
      for (size_t j = 0; j < m.cols; ++j) {
        Fe tmp(F.ew());
        F.copy(tmp.data(), m.at(row, j));
        F.copy(m.at(row, j), m.at(pr, j));
        F.copy(m.at(pr, j), tmp.data());
      }
    }
    Fe piv_inv(F.ew());
    F.inv(piv_inv.data(), m.at(row, col));
    for (size_t j = col; j < m.cols; ++j) {
      Fe t(F.ew());
      F.mul(t.data(), m.at(row, j), piv_inv.data());
      F.copy(m.at(row, j), t.data());
    }
    for (size_t i = 0; i < m.rows; ++i) {
      if (i == row || F.is_zero(m.at(i, col))) continue;
      Fe c(F.ew());
      F.copy(c.data(), m.at(i, col));
      for (size_t j = col; j < m.cols; ++j) {
        Fe t(F.ew());
        F.mul(t.data(), c.data(), m.at(row, j));
        F.sub(m.at(i, j), m.at(i, j), t.data());
      }
    }
    pivots.push_back(col);
    ++row;
  }
  return pivots;
}

inline size_t sm_rank(const FieldCtx& F, ScalarMatrix m) {
  return sm_rref(F, m).size();
}

/// Rank and a canonical nullspace basis (one row per free column: 1 in the
/// free position, back-filled pivot entries).
inline std::pair<size_t, ScalarMatrix> rank_and_nullspace(const FieldCtx& F,
                                                          ScalarMatrix m) {
  size_t n = m.cols;
  std::vector<size_t> pivots = sm_rref(F, m);
  size_t rank = pivots.size();
  std::vector<bool> is_pivot(n, false);
  for (size_t c : pivots) is_pivot[c] = true;
  ScalarMatrix basis(F, n - rank, n);
  size_t bi = 0;
  for (size_t j = 0; j < n; ++j) {
    if (is_pivot[j]) continue;
    F.set_one(basis.at(bi, j));
    for (size_t r = 0; r < rank; ++r) {
      // pivot column pivots[r] gets -m(r, j)
      F.neg(basis.at(bi, pivots[r]), m.at(r, j));
    }
    ++bi;
  }
  return {rank, basis};
}

/// Inverse of a square matrix; throws domain_error when singular.
inline ScalarMatrix sm_invert(const FieldCtx& F, const ScalarMatrix& m) {
  NCF_REQUIRE(m.rows == m.cols, "only square matrices can be inverted");
  size_t n = m.rows;
  ScalarMatrix aug(F, n, 2 * n);
  sm_set_block(F, aug, 0, 0, m);
  sm_set_block(F, aug, 0, n, sm_identity(F, n));
  std::vector<size_t> pivots = sm_rref(F, aug);
  NCF_REQUIRE(pivots.size() == n && (n == 0 || pivots.back() == n - 1),
              "matrix is singular");
  return sm_block(F, aug, 0, n, n, n);
}

inline bool sm_invertible(const FieldCtx& F, const ScalarMatrix& m) {
  return m.rows == m.cols && sm_rank(F, m) == m.rows;
}

/// Solves A x = b (b a column matrix); returns std::nullopt if inconsistent.
/// When underdetermined, free variables are set to zero (canonical choice).
inline std::optional<ScalarMatrix> sm_solve(const FieldCtx& F,
                                            const ScalarMatrix& A,
                                            const ScalarMatrix& b) {
  NCF_ASSERT(A.rows == b.rows, "shape mismatch in solve");
  size_t n = A.cols;
  ScalarMatrix aug(F, A.rows, n + b.cols);
  sm_set_block(F, aug, 0, 0, A);
  sm_set_block(F, aug, 0, n, b);
  std::vector<size_t> pivots = sm_rref(F, aug);
  for (size_t c : pivots)
    if (c >= n) return std::nullopt;  // a pivot in the RHS: inconsistent
  ScalarMatrix x(F, n, b.cols);
  for (size_t r = 0; r < pivots.size(); ++r)
    for (size_t j = 0; j < b.cols; ++j) F.copy(x.at(pivots[r], j), aug.at(r, n + j));
  return x;
}

/// Extends the columns of `cols` (assumed independent) to a basis of the
/// ambient space, returning an invertible matrix whose first columns are the
/// given ones. Completion columns are standard basis vectors.
inline ScalarMatrix sm_complete_basis(const FieldCtx& F,
                                      const ScalarMatrix& cols) {
  size_t n = cols.rows;
  NCF_ASSERT(cols.cols <= n, "too many columns to complete");
  ScalarMatrix probe = sm_transpose(F, cols);
  {
    ScalarMatrix chk = probe;
    NCF_ASSERT(sm_rref(F, chk).size() == cols.cols,
               "columns to complete are dependent");
  }
  ScalarMatrix result(F, n, n);
  sm_set_block(F, result, 0, 0, cols);
  size_t placed = cols.cols;
  // Greedily add standard basis vectors that keep the set independent.
  ScalarMatrix accum = probe;
  for (size_t e = 0; e < n && placed < n; ++e) {
    ScalarMatrix trial(F, accum.rows + 1, n);
    sm_set_block(F, trial, 0, 0, accum);
    F.set_one(trial.at(accum.rows, e));
    ScalarMatrix chk = trial;
    if (sm_rref(F, chk).size() == trial.rows) {
      F.set_one(result.at(e, placed));
      ++placed;
      accum = std::move(trial);
    }
  }
  NCF_ASSERT(placed == n, "basis completion failed");
  return result;
}

// ---------------------------------------------------------------------------
// Subspaces (row-space representation, canonical RREF basis).
// ---------------------------------------------------------------------------

/// A subspace of F^n stored as the canonical RREF basis of generating rows;
/// equality of subspaces is literal equality of the stored data.
class Subspace {
 public:
  Subspace() = default;

  static Subspace from_rows(const FieldCtx& F, ScalarMatrix rows) {
    Subspace s;
    s.ambient_ = rows.cols;
    std::vector<size_t> piv = sm_rref(F, rows);
    s.basis_ = sm_block(F, rows, 0, 0, piv.size(), rows.cols);
    return s;
  }

  static Subspace zero(const FieldCtx& F, size_t ambient) {
    Subspace s;
    s.ambient_ = ambient;
    s.basis_ = ScalarMatrix(F, 0, ambient);
    return s;
  }

  static Subspace full(const FieldCtx& F, size_t ambient) {
    Subspace s;
    s.ambient_ = ambient;
    s.basis_ = sm_identity(F, ambient);
    return s;
  }

  size_t dim() const { return basis_.rows; }
  size_t ambient() const { return ambient_; }
  const ScalarMatrix& basis() const { return basis_; }

  bool is_zero() const { return dim() == 0; }
  bool is_full() const { return dim() == ambient_; }

  bool operator==(const Subspace& o) const {
    return ambient_ == o.ambient_ && basis_ == o.basis_;
  }

  /// Membership of a row vector (1 x ambient matrix).
  bool contains(const FieldCtx& F, const ScalarMatrix& v) const {
    NCF_ASSERT(v.rows == 1 && v.cols == ambient_, "bad vector shape");
    ScalarMatrix stacked(F, basis_.rows + 1, ambient_);
    sm_set_block(F, stacked, 0, 0, basis_);
    sm_set_block(F, stacked, basis_.rows, 0, v);
    return sm_rank(F, std::move(stacked)) == dim();
  }

  bool contains(const FieldCtx& F, const Subspace& o) const {
    NCF_ASSERT(ambient_ == o.ambient_, "ambient mismatch");
    ScalarMatrix stacked(F, basis_.rows + o.basis_.rows, ambient_);
    sm_set_block(F, stacked, 0, 0, basis_);
    sm_set_block(F, stacked, basis_.rows, 0, o.basis_);
    return sm_rank(F, std::move(stacked)) == dim();
  }

  Subspace sum(const FieldCtx& F, const Subspace& o) const {
    NCF_ASSERT(ambient_ == o.ambient_, "ambient mismatch");
    ScalarMatrix stacked(F, basis_.rows + o.basis_.rows, ambient_);
    sm_set_block(F, stacked, 0, 0, basis_);
    sm_set_block(F, stacked, basis_.rows, 0, o.basis_);
    return from_rows(F, std::move(stacked));
  }

  /// Zassenhaus intersection.
  Subspace intersect(const FieldCtx& F, const Subspace& o) const {
    NCF_ASSERT(ambient_ == o.ambient_, "ambient mismatch");
    size_t n = ambient_;
    ScalarMatrix z(F, basis_.rows + o.basis_.rows, 2 * n);
    for (size_t i = 0; i < basis_.rows; ++i)
      for (size_t j = 0; j < n; ++j) {
        F.copy(z.at(i, j), basis_.at(i, j));
        F.copy(z.at(i, n + j), basis_.at(i, j));
      }
    for (size_t i = 0; i < o.basis_.rows; ++i)
      for (size_t j = 0; j < n; ++j) F.copy(z.at(basis_.rows + i, j), o.basis_.at(i, j));
    std::vector<size_t> piv = sm_rref(F, z);
    // Rows whose left half is zero carry the intersection in the right half.
    ScalarMatrix inter(F, piv.size(), n);
    size_t cnt = 0;
    for (size_t r = 0; r < piv.size(); ++r) {
      if (piv[r] >= n) {
        for (size_t j = 0; j < n; ++j) F.copy(inter.at(cnt, j), z.at(r, n + j));
        ++cnt;
      }
    }
    return from_rows(F, sm_block(F, inter, 0, 0, cnt, n));
  }

  /// Canonical complement spanned by standard basis vectors at the non-pivot
  /// coordinates of this subspace's RREF basis.
  Subspace complement(const FieldCtx& F) const {
    std::vector<bool> is_pivot(ambient_, false);
    for (size_t r = 0; r < basis_.rows; ++r) {
      size_t c = 0;
      while (c < ambient_ && F.is_zero(basis_.at(r, c))) ++c;
      if (c < ambient_) is_pivot[c] = true;
    }
    ScalarMatrix rows(F, ambient_ - basis_.rows, ambient_);
    size_t k = 0;
    for (size_t j = 0; j < ambient_; ++j) {
      if (!is_pivot[j]) F.set_one(rows.at(k++, j));
    }
    return from_rows(F, std::move(rows));
  }

  /// Orthogonal complement (kernel of the basis as a map), canonical.
  Subspace perp(const FieldCtx& F) const {
    auto [rank, null_basis] = rank_and_nullspace(F, basis_);
    (void)rank;
    return from_rows(F, std::move(null_basis));
  }

 private:
  size_t ambient_ = 0;
  ScalarMatrix basis_;
};

// ---------------------------------------------------------------------------
// Minimal polynomials and the regular representation.
// ---------------------------------------------------------------------------

/// Minimal polynomial of a square matrix: least-degree monic m with m(M)=0.
/// Computed as the lcm of relative minimal polynomials over Krylov chains.
inline UniPoly min_poly(const FieldCtx& F, const ScalarMatrix& M) {
  NCF_REQUIRE(M.rows == M.cols, "minimal polynomial of a non-square matrix");
  size_t n = M.rows;
  if (n == 0) return up_one(F);
  UniPoly result = up_one(F);
  // Echelonized span of all Krylov vectors seen so far (early exit aid).
  ScalarMatrix seen(F, 0, n);
  for (size_t s = 0; s < n; ++s) {
    // Start vector e_s; skip if already inside the accumulated Krylov span.
    ScalarMatrix v(F, 1, n);
    F.set_one(v.at(0, s));
    {
      ScalarMatrix stacked(F, seen.rows + 1, n);
      sm_set_block(F, stacked, 0, 0, seen);
      sm_set_block(F, stacked, seen.rows, 0, v);
      if (sm_rank(F, std::move(stacked)) == seen.rows) continue;
    }
    // Krylov chain v, vM, vM^2, ... as rows until the first dependence; the
    // dependence coefficients give the relative minimal polynomial. (The row
    // action v -> vM has the same minimal polynomial as M.)
    ScalarMatrix chain(F, 0, n);
    ScalarMatrix cur = v;
    UniPoly rel;
    while (true) {
      ScalarMatrix stacked(F, chain.rows + 1, n);
      sm_set_block(F, stacked, 0, 0, chain);
      sm_set_block(F, stacked, chain.rows, 0, cur);
      if (sm_rank(F, stacked) == chain.rows) {
        // cur is a combination of previous chain vectors: solve for it.
        ScalarMatrix A = sm_transpose(F, chain);
        ScalarMatrix b = sm_transpose(F, cur);
        auto x = sm_solve(F, A, b);
        NCF_ASSERT(x.has_value(), "Krylov dependence must be solvable");
        // rel(t) = t^len - sum_j x_j t^j
        size_t len = chain.rows;
        rel.c.assign((len + 1) * F.ew(), 0);
        F.set_one(rel.c.data() + len * F.ew());
        for (size_t j = 0; j < len; ++j)
          F.neg(rel.c.data() + j * F.ew(), x->at(j, 0));
        break;
      }
      chain = std::move(stacked);
      cur = sm_mul(F, cur, M);
    }
    UniPoly g = up_gcd(F, result, rel);
    result = up_divmod(F, up_mul(F, result, rel), g).first;
    if (up_deg(F, result) == static_cast<long>(n)) break;
    // Fold the chain into the seen-span accumulator.
    ScalarMatrix stacked(F, seen.rows + chain.rows, n);
    sm_set_block(F, stacked, 0, 0, seen);
    sm_set_block(F, stacked, seen.rows, 0, chain);
    std::vector<size_t> piv = sm_rref(F, stacked);
    seen = sm_block(F, stacked, 0, 0, piv.size(), n);
  }
  return up_monic(F, result);
}

/// Evaluates a univariate polynomial at a square matrix.
inline ScalarMatrix up_eval_matrix(const FieldCtx& F, const UniPoly& f,
                                   const ScalarMatrix& M) {
  NCF_REQUIRE(M.rows == M.cols, "polynomial of a non-square matrix");
  size_t n = M.rows;
  ScalarMatrix acc(F, n, n);
  for (size_t i = f.c.size() / F.ew(); i-- > 0;) {
    acc = sm_mul(F, acc, M);
    const uint64_t* ci = f.c.data() + i * F.ew();
    for (size_t d = 0; d < n; ++d) F.add(acc.at(d, d), acc.at(d, d), ci);
  }
  return acc;
}

/// Regular representation of an element of F_{p^k} as a k x k matrix over
/// F_p: column j holds the coordinates of a * t^j in the power basis.
inline ScalarMatrix regular_rep(const FieldCtx& F, const Fe& a) {
  FieldCtx base = FieldCtx::prime(F.p());
  uint32_t k = F.k();
  ScalarMatrix m(base, k, k);
  Fe t = F.zero();
  if (k == 1) {
    F.copy(m.at(0, 0), a.data());
    return m;
  }
  t[1] = 1;
  Fe cur = a;
  for (uint32_t j = 0; j < k; ++j) {
    for (uint32_t i = 0; i < k; ++i) m.at(i, j)[0] = cur[i];
    if (j + 1 < k) cur = F.mul(cur, t);
  }
  return m;
}

/// Matrix of multiplication by e on E = emb.big as a linear map over
/// F = emb.small, in the E-over-F basis {t_E^j : j < m} with m = [E:F].
/// The entries lie in F; the map E -> F^{m x m} is an F-algebra embedding.
inline ScalarMatrix subfield_rep(const FieldEmbedding& emb, const Fe& e) {
  const FieldCtx& E = emb.big;
  const FieldCtx& F = emb.small;
  NCF_ASSERT(E.p() == F.p() && E.k() % F.k() == 0,
             "subfield representation needs a subfield pair");
  uint32_t k = F.k(), km = E.k(), m = km / k;
  if (m == 1) {
    // grow/extend with equal degree returns the identical context.
    ScalarMatrix r(F, 1, 1);
    F.copy(r.at(0, 0), e.data());
    return r;
  }
  FieldCtx Fp = FieldCtx::prime(E.p());
  // Change of basis over F_p: column j*k+i holds t_E^j * g^i, where g is the
  // image of F's generator in E; E elements are already F_p coordinate
  // vectors in the basis {t_E^l}.
  Fe tE = E.zero();
  tE[1] = 1;
  std::vector<Fe> gp(k, E.one());
  for (uint32_t i = 1; i < k; ++i) gp[i] = E.mul(gp[i - 1], emb.generator_image);
  std::vector<Fe> tp(m, E.one());
  for (uint32_t j = 1; j < m; ++j) tp[j] = E.mul(tp[j - 1], tE);
  ScalarMatrix B(Fp, km, km);
  for (uint32_t j = 0; j < m; ++j)
    for (uint32_t i = 0; i < k; ++i) {
      Fe z = E.mul(tp[j], gp[i]);
      for (uint32_t row = 0; row < km; ++row) B.at(row, j * k + i)[0] = z[row];
    }
  ScalarMatrix Binv = sm_invert(Fp, B);
  ScalarMatrix rep(F, m, m);
  for (uint32_t j2 = 0; j2 < m; ++j2) {
    Fe w = E.mul(e, tp[j2]);
    ScalarMatrix wcol(Fp, km, 1);
    for (uint32_t row = 0; row < km; ++row) wcol.at(row, 0)[0] = w[row];
    ScalarMatrix coords = sm_mul(Fp, Binv, wcol);
    for (uint32_t j = 0; j < m; ++j) {
      Fe c(F.ew());
      for (uint32_t i = 0; i < k; ++i) c[i] = coords.at(j * k + i, 0)[0];
      F.copy(rep.at(j, j2), c.data());
    }
  }
  return rep;
}

}  // namespace ncfactor

#endif  // NCFACTOR_MATRIX_HPP
