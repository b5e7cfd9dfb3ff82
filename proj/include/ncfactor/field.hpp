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
// Exact arithmetic in F_p and F_{p^k}: field contexts, elements, dense
// univariate polynomials, and univariate factorization (Cantor-Zassenhaus
// with a naive exhaustive fallback at tiny sizes).

#ifndef NCFACTOR_FIELD_HPP
#define NCFACTOR_FIELD_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ncfactor/common.hpp"

namespace ncfactor {

using std::size_t;
using std::uint32_t;
using std::uint64_t;

/// Largest supported extension degree. Elements are manipulated through
/// small stack buffers sized by this cap.
inline constexpr uint32_t kMaxExtensionDegree = 32;

namespace modarith {

inline uint64_t add(uint64_t a, uint64_t b, uint64_t p) {
  uint64_t s = a + b;  // p < 2^61 so this never wraps
  return s >= p ? s - p : s;
}

inline uint64_t sub(uint64_t a, uint64_t b, uint64_t p) {
  return a >= b ? a - b : a + p - b;
}

inline uint64_t neg(uint64_t a, uint64_t p) { return a == 0 ? 0 : p - a; }

inline uint64_t mul(uint64_t a, uint64_t b, uint64_t p) {
  return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % p);
}

inline uint64_t pow(uint64_t a, uint64_t e, uint64_t p) {
  uint64_t r = 1 % p;
  a %= p;
  while (e) {
    if (e & 1) r = mul(r, a, p);
    a = mul(a, a, p);
    e >>= 1;
  }
  return r;
}

inline uint64_t inv(uint64_t a, uint64_t p) {
  NCF_REQUIRE(a % p != 0, "division by zero mod ", p);
  return pow(a, p - 2, p);
}

/// Deterministic Miller-Rabin, valid for all 64-bit inputs.
inline bool is_prime(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t q : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % q == 0) return n == q;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                     23ULL, 29ULL, 31ULL, 37ULL}) {
    uint64_t x = pow(a % n, d, n);
    if (x == 0 || x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mul(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

}  // namespace modarith

/// An element of F_{p^k}: k coefficients over F_p in the power basis of the
/// context's defining polynomial. Length always equals the context's degree.
using Fe = std::vector<uint64_t>;

/// A little-endian multiword unsigned integer, used only as a power-map
/// exponent inside univariate factorization.
class BigUint {
 public:
  BigUint() = default;
  explicit BigUint(uint64_t v) {
    if (v) limbs_.push_back(v);
  }

  bool is_zero() const { return limbs_.empty(); }

  size_t bits() const {
    if (limbs_.empty()) return 0;
    uint64_t top = limbs_.back();
    size_t b = limbs_.size() * 64;
    while (!(top >> 63)) {
      top <<= 1;
      --b;
    }
    return b;
  }

  bool bit(size_t i) const {
    size_t w = i / 64;
    return w < limbs_.size() && ((limbs_[w] >> (i % 64)) & 1);
  }

  void mul_u64(uint64_t m) {
    unsigned __int128 carry = 0;
    for (auto& w : limbs_) {
      unsigned __int128 t = static_cast<unsigned __int128>(w) * m + carry;
      w = static_cast<uint64_t>(t);
      carry = t >> 64;
    }
    if (carry) limbs_.push_back(static_cast<uint64_t>(carry));
    trim();
  }

  void sub_u64(uint64_t m) {
    NCF_ASSERT(!limbs_.empty(), "BigUint underflow");
    size_t i = 0;
    uint64_t borrow = m;
    while (borrow) {
      NCF_ASSERT(i < limbs_.size(), "BigUint underflow");
      uint64_t before = limbs_[i];
      limbs_[i] = before - borrow;
      borrow = before < borrow ? 1 : 0;
      ++i;
    }
    trim();
  }

  void halve() {
    uint64_t carry = 0;
    for (size_t i = limbs_.size(); i-- > 0;) {
      uint64_t w = limbs_[i];
      limbs_[i] = (w >> 1) | (carry << 63);
      carry = w & 1;
    }
    trim();
  }

 private:
  void trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
  }
  std::vector<uint64_t> limbs_;
};

/// An explicit finite field F_{p^k}. Elements are slices of k machine words
/// (coefficients over F_p); all arithmetic routines operate on raw slices so
/// matrices and polynomials can store elements flat.
class FieldCtx {
 public:
  /// Default context is F_2; mainly so aggregates holding a context can be
  /// default-constructed before assignment.
  FieldCtx() : modulus_{0, 1} {}

  /// Prime-field context F_p (defining polynomial x).
  static FieldCtx prime(uint64_t p) {
    check_p(p);
    FieldCtx c;
    c.p_ = p;
    c.k_ = 1;
    c.modulus_ = {0, 1};
    return c;
  }

  /// Extension context with an explicitly supplied defining polynomial
  /// (k+1 coefficients over F_p, monic). Irreducibility is verified.
  static FieldCtx extension(uint64_t p, uint32_t k,
                            std::vector<uint64_t> defining);

  uint64_t p() const { return p_; }
  uint32_t k() const { return k_; }
  const std::vector<uint64_t>& modulus() const { return modulus_; }

  /// Words per element.
  size_t ew() const { return k_; }

  /// Whether p^k <= bound (without overflowing).
  bool order_at_most(uint64_t bound) const {
    unsigned __int128 q = 1;
    for (uint32_t i = 0; i < k_; ++i) {
      q *= p_;
      if (q > bound) return false;
    }
    return true;
  }

  /// p^k as a 64-bit value; requires order_at_most(2^63).
  uint64_t order_u64() const {
    NCF_ASSERT(order_at_most(~0ULL >> 1), "field order out of range");
    uint64_t q = 1;
    for (uint32_t i = 0; i < k_; ++i) q *= p_;
    return q;
  }

  std::string spec_string() const {
    return std::to_string(p_) + "^" + std::to_string(k_);
  }

  bool same_field(const FieldCtx& o) const {
    return p_ == o.p_ && k_ == o.k_ && modulus_ == o.modulus_;
  }

  // --- raw-slice arithmetic -------------------------------------------------

  void set_zero(uint64_t* d) const { std::fill(d, d + k_, 0); }
  void set_one(uint64_t* d) const {
    set_zero(d);
    d[0] = 1 % p_;
  }
  void copy(uint64_t* d, const uint64_t* a) const { std::copy(a, a + k_, d); }

  bool is_zero(const uint64_t* a) const {
    for (uint32_t i = 0; i < k_; ++i)
      if (a[i]) return false;
    return true;
  }
  bool is_one(const uint64_t* a) const {
    if (a[0] != 1 % p_) return false;
    for (uint32_t i = 1; i < k_; ++i)
      if (a[i]) return false;
    return true;
  }
  bool eq(const uint64_t* a, const uint64_t* b) const {
    return std::equal(a, a + k_, b);
  }

  void add(uint64_t* d, const uint64_t* a, const uint64_t* b) const {
    for (uint32_t i = 0; i < k_; ++i) d[i] = modarith::add(a[i], b[i], p_);
  }
  void sub(uint64_t* d, const uint64_t* a, const uint64_t* b) const {
    for (uint32_t i = 0; i < k_; ++i) d[i] = modarith::sub(a[i], b[i], p_);
  }
  void neg(uint64_t* d, const uint64_t* a) const {
    for (uint32_t i = 0; i < k_; ++i) d[i] = modarith::neg(a[i], p_);
  }

  /// d = a * b. d may alias neither input unless k == 1.
  void mul(uint64_t* d, const uint64_t* a, const uint64_t* b) const {
    if (k_ == 1) {
      d[0] = modarith::mul(a[0], b[0], p_);
      return;
    }
    std::array<uint64_t, 2 * kMaxExtensionDegree> buf{};
    for (uint32_t i = 0; i < k_; ++i) {
      if (!a[i]) continue;
      for (uint32_t j = 0; j < k_; ++j) {
        if (!b[j]) continue;
        buf[i + j] =
            modarith::add(buf[i + j], modarith::mul(a[i], b[j], p_), p_);
      }
    }
    reduce(buf.data(), 2 * k_ - 1);
    std::copy(buf.begin(), buf.begin() + k_, d);
  }

  /// d += a * b (accumulating product; d must not alias a or b).
  void mul_acc(uint64_t* d, const uint64_t* a, const uint64_t* b) const {
    if (k_ == 1) {
      d[0] = modarith::add(d[0], modarith::mul(a[0], b[0], p_), p_);
      return;
    }
    std::array<uint64_t, kMaxExtensionDegree> t{};
    mul(t.data(), a, b);
    add(d, d, t.data());
  }

  /// d = a * s for a prime-subfield scalar s.
  void scale_base(uint64_t* d, const uint64_t* a, uint64_t s) const {
    s %= p_;
    for (uint32_t i = 0; i < k_; ++i) d[i] = modarith::mul(a[i], s, p_);
  }

  void pow_u64(uint64_t* d, const uint64_t* a, uint64_t e) const {
    std::array<uint64_t, kMaxExtensionDegree> base{}, acc{};
    copy(base.data(), a);
    set_one(acc.data());
    while (e) {
      if (e & 1) {
        std::array<uint64_t, kMaxExtensionDegree> t{};
        mul(t.data(), acc.data(), base.data());
        copy(acc.data(), t.data());
      }
      std::array<uint64_t, kMaxExtensionDegree> t{};
      mul(t.data(), base.data(), base.data());
      copy(base.data(), t.data());
      e >>= 1;
    }
    copy(d, acc.data());
  }

  /// Multiplicative inverse; errors on zero.
  void inv(uint64_t* d, const uint64_t* a) const;

  /// Uniformly random element.
  void rand(uint64_t* d, Rng& rng) const {
    for (uint32_t i = 0; i < k_; ++i) d[i] = rng.below(p_);
  }

  /// Uniformly random nonzero element.
  void rand_nonzero(uint64_t* d, Rng& rng) const {
    do {
      rand(d, rng);
    } while (is_zero(d));
  }

  // --- Fe (owning) conveniences ----------------------------------------------

  Fe zero() const { return Fe(k_, 0); }
  Fe one() const {
    Fe e(k_, 0);
    e[0] = 1 % p_;
    return e;
  }
  /// Element from a (possibly negative) integer, reduced into F_p ⊆ F_{p^k}.
  Fe from_int(long long v) const {
    long long m = static_cast<long long>(p_);
    long long r = v % m;
    if (r < 0) r += m;
    Fe e(k_, 0);
    e[0] = static_cast<uint64_t>(r);
    return e;
  }
  Fe make(std::vector<uint64_t> coeffs) const {
    NCF_INPUT(coeffs.size() <= k_, "element has too many coefficients");
    coeffs.resize(k_, 0);
    for (auto& c : coeffs) c %= p_;
    return coeffs;
  }
  Fe add(const Fe& a, const Fe& b) const {
    Fe d(k_);
    add(d.data(), a.data(), b.data());
    return d;
  }
  Fe sub(const Fe& a, const Fe& b) const {
    Fe d(k_);
    sub(d.data(), a.data(), b.data());
    return d;
  }
  Fe neg(const Fe& a) const {
    Fe d(k_);
    neg(d.data(), a.data());
    return d;
  }
  Fe mul(const Fe& a, const Fe& b) const {
    Fe d(k_);
    mul(d.data(), a.data(), b.data());
    return d;
  }
  Fe inv(const Fe& a) const {
    Fe d(k_);
    inv(d.data(), a.data());
    return d;
  }
  Fe pow(const Fe& a, uint64_t e) const {
    Fe d(k_);
    pow_u64(d.data(), a.data(), e);
    return d;
  }
  Fe rand(Rng& rng) const {
    Fe d(k_);
    rand(d.data(), rng);
    return d;
  }
  Fe rand_nonzero(Rng& rng) const {
    Fe d(k_);
    rand_nonzero(d.data(), rng);
    return d;
  }
  bool is_zero(const Fe& a) const { return is_zero(a.data()); }
  bool is_one(const Fe& a) const { return is_one(a.data()); }
  bool eq(const Fe& a, const Fe& b) const { return eq(a.data(), b.data()); }

  std::string to_string(const uint64_t* a) const {
    if (k_ == 1) return std::to_string(a[0]);
    std::string s = "[";
    for (uint32_t i = 0; i < k_; ++i) {
      if (i) s += ",";
      s += std::to_string(a[i]);
    }
    return s + "]";
  }
  std::string to_string(const Fe& a) const { return to_string(a.data()); }

 private:
  static void check_p(uint64_t p) {
    NCF_INPUT(p < (1ULL << 61), "characteristic must be < 2^61, got ", p);
    NCF_INPUT(modarith::is_prime(p), p, " is not prime");
  }

  /// In-place reduction of a degree < len coefficient buffer by the monic
  /// defining polynomial.
  void reduce(uint64_t* buf, size_t len) const {
    for (size_t i = len; i-- > k_;) {
      uint64_t c = buf[i];
      if (!c) continue;
      buf[i] = 0;
      for (uint32_t j = 0; j < k_; ++j) {
        buf[i - k_ + j] = modarith::sub(
            buf[i - k_ + j], modarith::mul(c, modulus_[j], p_), p_);
      }
    }
  }

  uint64_t p_ = 2;
  uint32_t k_ = 1;
  std::vector<uint64_t> modulus_;  // k+1 words, monic
};

// ---------------------------------------------------------------------------
// Dense univariate polynomials over a FieldCtx.
// ---------------------------------------------------------------------------

/// Dense univariate polynomial: coefficient slices stored flat, lowest degree
/// first, trimmed so the leading element is nonzero (empty = zero polynomial).
struct UniPoly {
  std::vector<uint64_t> c;

  bool is_zero() const { return c.empty(); }
};

inline long up_deg(const FieldCtx& F, const UniPoly& f) {
  return f.c.empty() ? -1 : static_cast<long>(f.c.size() / F.ew()) - 1;
}

inline void up_trim(const FieldCtx& F, UniPoly& f) {
  size_t w = F.ew();
  size_t n = f.c.size() / w;
  while (n > 0 && F.is_zero(f.c.data() + (n - 1) * w)) --n;
  f.c.resize(n * w);
}

inline UniPoly up_zero() { return {}; }

inline UniPoly up_const(const FieldCtx& F, const Fe& a) {
  UniPoly f;
  if (!F.is_zero(a)) f.c = a;
  return f;
}

inline UniPoly up_one(const FieldCtx& F) { return up_const(F, F.one()); }

/// The monomial x.
inline UniPoly up_x(const FieldCtx& F) {
  UniPoly f;
  f.c.assign(2 * F.ew(), 0);
  f.c[F.ew()] = 1 % F.p();
  up_trim(F, f);
  return f;
}

/// Builds a polynomial from per-degree prime-subfield coefficients.
inline UniPoly up_from_ints(const FieldCtx& F, const std::vector<long long>& a) {
  UniPoly f;
  f.c.assign(a.size() * F.ew(), 0);
  for (size_t i = 0; i < a.size(); ++i) {
    Fe e = F.from_int(a[i]);
    F.copy(f.c.data() + i * F.ew(), e.data());
  }
  up_trim(F, f);
  return f;
}

inline const uint64_t* up_coef(const FieldCtx& F, const UniPoly& f, size_t i) {
  static thread_local Fe zero_buf;  // all-zero scratch; only ever grows
  if (i >= f.c.size() / F.ew()) {
    if (zero_buf.size() < F.ew()) zero_buf.assign(F.ew(), 0);
    return zero_buf.data();
  }
  return f.c.data() + i * F.ew();
}

inline Fe up_coef_fe(const FieldCtx& F, const UniPoly& f, size_t i) {
  const uint64_t* s = up_coef(F, f, i);
  return Fe(s, s + F.ew());
}

inline Fe up_lead(const FieldCtx& F, const UniPoly& f) {
  NCF_REQUIRE(!f.is_zero(), "leading coefficient of zero polynomial");
  return up_coef_fe(F, f, static_cast<size_t>(up_deg(F, f)));
}

inline UniPoly up_add(const FieldCtx& F, const UniPoly& a, const UniPoly& b) {
  size_t w = F.ew();
  size_t n = std::max(a.c.size(), b.c.size()) / w;
  UniPoly r;
  r.c.assign(n * w, 0);
  for (size_t i = 0; i < n; ++i)
    F.add(r.c.data() + i * w, up_coef(F, a, i), up_coef(F, b, i));
  up_trim(F, r);
  return r;
}

inline UniPoly up_sub(const FieldCtx& F, const UniPoly& a, const UniPoly& b) {
  size_t w = F.ew();
  size_t n = std::max(a.c.size(), b.c.size()) / w;
  UniPoly r;
  r.c.assign(n * w, 0);
  for (size_t i = 0; i < n; ++i)
    F.sub(r.c.data() + i * w, up_coef(F, a, i), up_coef(F, b, i));
  up_trim(F, r);
  return r;
}

inline UniPoly up_scale(const FieldCtx& F, const UniPoly& a, const Fe& s) {
  size_t w = F.ew();
  UniPoly r;
  r.c.assign(a.c.size(), 0);
  for (size_t i = 0; i * w < a.c.size(); ++i)
    F.mul(r.c.data() + i * w, a.c.data() + i * w, s.data());
  up_trim(F, r);
  return r;
}

inline UniPoly up_mul(const FieldCtx& F, const UniPoly& a, const UniPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  size_t w = F.ew();
  size_t na = a.c.size() / w, nb = b.c.size() / w;
  UniPoly r;
  r.c.assign((na + nb - 1) * w, 0);
  for (size_t i = 0; i < na; ++i) {
    const uint64_t* ai = a.c.data() + i * w;
    if (F.is_zero(ai)) continue;
    for (size_t j = 0; j < nb; ++j)
      F.mul_acc(r.c.data() + (i + j) * w, ai, b.c.data() + j * w);
  }
  up_trim(F, r);
  return r;
}

/// Euclidean division a = q*b + r with deg r < deg b.
inline std::pair<UniPoly, UniPoly> up_divmod(const FieldCtx& F,
                                             const UniPoly& a,
                                             const UniPoly& b) {
  NCF_REQUIRE(!b.is_zero(), "polynomial division by zero");
  size_t w = F.ew();
  long db = up_deg(F, b);
  UniPoly rem = a;
  long dr = up_deg(F, rem);
  if (dr < db) return {{}, rem};
  Fe lb_inv = F.inv(up_lead(F, b));
  UniPoly q;
  q.c.assign((dr - db + 1) * w, 0);
  while (!rem.is_zero() && (dr = up_deg(F, rem)) >= db) {
    Fe coef = F.mul(up_coef_fe(F, rem, dr), lb_inv);
    size_t shift = dr - db;
    F.copy(q.c.data() + shift * w, coef.data());
    // rem -= coef * x^shift * b
    for (long i = 0; i <= db; ++i) {
      Fe t = F.mul(coef, up_coef_fe(F, b, i));
      Fe cur = up_coef_fe(F, rem, shift + i);
      Fe nw = F.sub(cur, t);
      F.copy(rem.c.data() + (shift + i) * w, nw.data());
    }
    up_trim(F, rem);
  }
  up_trim(F, q);
  return {q, rem};
}

inline UniPoly up_mod(const FieldCtx& F, const UniPoly& a, const UniPoly& b) {
  return up_divmod(F, a, b).second;
}

inline UniPoly up_monic(const FieldCtx& F, const UniPoly& a) {
  if (a.is_zero()) return a;
  return up_scale(F, a, F.inv(up_lead(F, a)));
}

inline UniPoly up_gcd(const FieldCtx& F, UniPoly a, UniPoly b) {
  while (!b.is_zero()) {
    UniPoly r = up_mod(F, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return up_monic(F, a);
}

inline bool up_eq(const FieldCtx&, const UniPoly& a, const UniPoly& b) {
  return a.c == b.c;
}

inline Fe up_eval(const FieldCtx& F, const UniPoly& f, const Fe& x) {
  Fe acc = F.zero();
  size_t w = F.ew();
  for (size_t i = f.c.size() / w; i-- > 0;) {
    acc = F.mul(acc, x);
    F.add(acc.data(), acc.data(), f.c.data() + i * w);
  }
  return acc;
}

inline UniPoly up_derivative(const FieldCtx& F, const UniPoly& f) {
  size_t w = F.ew();
  if (f.c.size() <= w) return {};
  size_t n = f.c.size() / w;
  UniPoly r;
  r.c.assign((n - 1) * w, 0);
  for (size_t i = 1; i < n; ++i) {
    Fe t(F.ew());
    F.scale_base(t.data(), f.c.data() + i * w, i % F.p());
    F.copy(r.c.data() + (i - 1) * w, t.data());
  }
  up_trim(F, r);
  return r;
}

inline UniPoly up_mulmod(const FieldCtx& F, const UniPoly& a, const UniPoly& b,
                         const UniPoly& m) {
  return up_mod(F, up_mul(F, a, b), m);
}

inline UniPoly up_powmod(const FieldCtx& F, UniPoly a, uint64_t e,
                         const UniPoly& m) {
  UniPoly r = up_mod(F, up_one(F), m);
  a = up_mod(F, a, m);
  while (e) {
    if (e & 1) r = up_mulmod(F, r, a, m);
    a = up_mulmod(F, a, a, m);
    e >>= 1;
  }
  return r;
}

inline UniPoly up_powmod_big(const FieldCtx& F, UniPoly a, const BigUint& e,
                             const UniPoly& m) {
  UniPoly r = up_mod(F, up_one(F), m);
  a = up_mod(F, a, m);
  size_t nbits = e.bits();
  for (size_t i = 0; i < nbits; ++i) {
    if (e.bit(i)) r = up_mulmod(F, r, a, m);
    if (i + 1 < nbits) a = up_mulmod(F, a, a, m);
  }
  return r;
}

/// x^(p^j) mod m, computed as a j-fold Frobenius power so the exponent never
/// needs more than one machine word at a time.
inline UniPoly up_frobenius_pow(const FieldCtx& F, UniPoly a, uint32_t j,
                                const UniPoly& m) {
  for (uint32_t i = 0; i < j; ++i) a = up_powmod(F, a, F.p(), m);
  return a;
}

inline void FieldCtx::inv(uint64_t* d, const uint64_t* a) const {
  NCF_REQUIRE(!is_zero(a), "division by zero in F_", p_, "^", k_);
  if (k_ == 1) {
    d[0] = modarith::inv(a[0], p_);
    return;
  }
  // Extended Euclid in F_p[t] between a (degree < k) and the modulus.
  FieldCtx base = FieldCtx::prime(p_);
  UniPoly r0;
  r0.c.assign(modulus_.begin(), modulus_.end());
  up_trim(base, r0);
  UniPoly r1;
  r1.c.assign(a, a + k_);
  up_trim(base, r1);
  UniPoly s0 = up_zero(), s1 = up_one(base);
  while (up_deg(base, r1) > 0) {
    auto [q, r2] = up_divmod(base, r0, r1);
    UniPoly s2 = up_sub(base, s0, up_mul(base, q, s1));
    r0 = std::move(r1);
    r1 = std::move(r2);
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  NCF_ASSERT(!r1.is_zero(), "element not invertible: gcd with modulus");
  // r1 is a nonzero constant; divide it out.
  Fe c = up_coef_fe(base, r1, 0);
  UniPoly invpoly = up_scale(base, s1, base.inv(c));
  set_zero(d);
  for (size_t i = 0; i * base.ew() < invpoly.c.size() && i < k_; ++i)
    d[i] = invpoly.c[i];
}

inline bool up_is_irreducible(const FieldCtx& F, const UniPoly& f);

inline FieldCtx FieldCtx::extension(uint64_t p, uint32_t k,
                                    std::vector<uint64_t> defining) {
  check_p(p);
  NCF_INPUT(k >= 1, "extension degree must be >= 1");
  NCF_INPUT(k <= kMaxExtensionDegree, "extension degree capped at ",
            kMaxExtensionDegree);
  NCF_INPUT(defining.size() == k + 1, "defining polynomial must have degree k");
  for (auto& c : defining) c %= p;
  NCF_INPUT(defining[k] == 1, "defining polynomial must be monic");
  if (k > 1) {
    FieldCtx base = prime(p);
    UniPoly f;
    f.c = defining;
    NCF_INPUT(up_is_irreducible(base, f),
              "defining polynomial is reducible over F_", p);
  }
  FieldCtx c;
  c.p_ = p;
  c.k_ = k;
  c.modulus_ = std::move(defining);
  return c;
}

// ---------------------------------------------------------------------------
// Irreducibility, extension construction, univariate factorization.
// ---------------------------------------------------------------------------

namespace detail {

/// Distinct prime divisors of n.
inline std::vector<uint32_t> prime_divisors(uint32_t n) {
  std::vector<uint32_t> ps;
  for (uint32_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      ps.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) ps.push_back(n);
  return ps;
}

}  // namespace detail

/// Rabin irreducibility test for a monic polynomial over F_{p^k}.
inline bool up_is_irreducible(const FieldCtx& F, const UniPoly& f) {
  long d = up_deg(F, f);
  if (d <= 0) return false;
  if (d == 1) return true;
  UniPoly x = up_x(F);
  // x^(q^d) == x (mod f)
  UniPoly h = x;
  for (long i = 0; i < d; ++i) h = up_frobenius_pow(F, h, F.k(), f);
  if (!up_eq(F, h, up_mod(F, x, f))) return false;
  for (uint32_t r : detail::prime_divisors(static_cast<uint32_t>(d))) {
    long e = d / r;
    UniPoly g = x;
    for (long i = 0; i < e; ++i) g = up_frobenius_pow(F, g, F.k(), f);
    UniPoly diff = up_sub(F, g, up_mod(F, x, f));
    if (up_deg(F, up_gcd(F, diff, f)) > 0) return false;
  }
  return true;
}

/// Builds F_{p^k} by sampling random monic degree-k polynomials until one is
/// irreducible. Deterministic for a fixed seed.
inline FieldCtx build_extension(uint64_t p, uint32_t k, uint64_t seed) {
  NCF_INPUT(modarith::is_prime(p), p, " is not prime");
  NCF_INPUT(k >= 1, "extension degree must be >= 1");
  NCF_INPUT(k <= kMaxExtensionDegree, "extension degree capped at ",
            kMaxExtensionDegree);
  if (k == 1) return FieldCtx::prime(p);
  FieldCtx base = FieldCtx::prime(p);
  Rng rng(seed);
  while (true) {
    UniPoly f;
    f.c.assign(k + 1, 0);
    f.c[k] = 1;
    for (uint32_t i = 0; i < k; ++i) f.c[i] = rng.below(p);
    if (up_is_irreducible(base, f))
      return FieldCtx::extension(p, k, std::move(f.c));
  }
}

namespace detail {

/// Appends (factor, multiplicity), merging with an existing equal factor.
inline void push_factor(const FieldCtx& F, std::vector<std::pair<UniPoly, uint32_t>>& out,
                        const UniPoly& f, uint32_t mult) {
  for (auto& [g, m] : out) {
    if (up_eq(F, g, f)) {
      m += mult;
      return;
    }
  }
  out.emplace_back(f, mult);
}

/// Lexicographically enumerates all monic degree-d polynomials; returns false
/// once the enumeration wraps around.
inline bool next_monic(const FieldCtx& F, UniPoly& g, long d) {
  size_t w = F.ew();
  for (long i = 0; i < d; ++i) {
    uint64_t* slot = g.c.data() + i * w;
    for (size_t j = 0; j < w; ++j) {
      if (++slot[j] < F.p()) return true;
      slot[j] = 0;
    }
  }
  return false;
}

/// Trial division by all monic polynomials in ascending degree; exact and
/// deterministic, viable only when q^deg is tiny.
inline void factor_naive(const FieldCtx& F, UniPoly f,
                         std::vector<std::pair<UniPoly, uint32_t>>& out) {
  for (long d = 1; 2 * d <= up_deg(F, f); ++d) {
    UniPoly g;
    g.c.assign((d + 1) * F.ew(), 0);
    F.set_one(g.c.data() + d * F.ew());
    bool more = true;
    while (more) {
      if (up_deg(F, g) == d) {
        uint32_t mult = 0;
        while (true) {
          auto [q, r] = up_divmod(F, f, g);
          if (!r.is_zero()) break;
          f = q;
          ++mult;
        }
        if (mult) push_factor(F, out, g, mult);
        if (2 * d > up_deg(F, f)) break;
      }
      more = next_monic(F, g, d);
    }
  }
  if (up_deg(F, f) >= 1) push_factor(F, out, up_monic(F, f), 1);
}

/// Equal-degree splitting (Cantor-Zassenhaus): f is squarefree, monic, and a
/// product of irreducibles all of degree d.
inline void cz_equal_degree(const FieldCtx& F, const UniPoly& f, long d,
                            Rng& rng,
                            std::vector<std::pair<UniPoly, uint32_t>>& out) {
  long n = up_deg(F, f);
  if (n == d) {
    push_factor(F, out, f, 1);
    return;
  }
  UniPoly split;
  while (true) {
    UniPoly r;
    r.c.assign(n * F.ew(), 0);
    for (long i = 0; i < n; ++i) F.rand(r.c.data() + i * F.ew(), rng);
    up_trim(F, r);
    if (up_deg(F, r) < 1) continue;
    UniPoly s;
    if (F.p() == 2) {
      // Trace map to F_2: r + r^2 + r^4 + ... over k*d doublings.
      UniPoly t = up_mod(F, r, f);
      UniPoly acc = t;
      for (long j = 1; j < static_cast<long>(F.k()) * d; ++j) {
        t = up_mulmod(F, t, t, f);
        acc = up_add(F, acc, t);
      }
      s = acc;
    } else {
      // Norm map into F_q followed by the (q-1)/2 power map.
      UniPoly w = up_mod(F, r, f);
      UniPoly v = w;
      for (long j = 1; j < d; ++j) {
        w = up_frobenius_pow(F, w, F.k(), f);
        v = up_mulmod(F, v, w, f);
      }
      BigUint e(1);
      for (uint32_t j = 0; j < F.k(); ++j) e.mul_u64(F.p());
      e.sub_u64(1);
      e.halve();
      UniPoly t = up_powmod_big(F, v, e, f);
      s = up_sub(F, t, up_one(F));
    }
    split = up_gcd(F, s, f);
    long ds = up_deg(F, split);
    if (ds > 0 && ds < n) break;
  }
  cz_equal_degree(F, split, d, rng, out);
  cz_equal_degree(F, up_divmod(F, f, split).first, d, rng, out);
}

/// Distinct-degree then equal-degree factorization of a squarefree monic f.
inline void cz_squarefree(const FieldCtx& F, UniPoly f, Rng& rng,
                          std::vector<std::pair<UniPoly, uint32_t>>& out) {
  UniPoly x = up_mod(F, up_x(F), f);
  UniPoly h = x;
  long d = 0;
  while (up_deg(F, f) > 0) {
    ++d;
    if (2 * d > up_deg(F, f)) {
      push_factor(F, out, f, 1);
      return;
    }
    h = up_frobenius_pow(F, h, F.k(), f);
    UniPoly g = up_gcd(F, up_sub(F, h, x), f);
    if (up_deg(F, g) > 0) {
      cz_equal_degree(F, g, d, rng, out);
      f = up_divmod(F, f, g).first;
      h = up_mod(F, h, f);
      x = up_mod(F, up_x(F), f);
    }
  }
}

/// p-th root of an element of F_{p^k} (the inverse Frobenius).
inline Fe pth_root(const FieldCtx& F, const Fe& a) {
  if (F.k() == 1) return a;
  Fe r = a;
  for (uint32_t i = 0; i + 1 < F.k(); ++i) r = F.pow(r, F.p());
  return r;
}

inline void factor_monic(const FieldCtx& F, UniPoly f, uint32_t mult_scale,
                         Rng& rng,
                         std::vector<std::pair<UniPoly, uint32_t>>& out);

/// Squarefree decomposition in characteristic p, recursing through p-th
/// powers when the derivative vanishes.
inline void squarefree_split(const FieldCtx& F, UniPoly f, uint32_t mult_scale,
                             Rng& rng,
                             std::vector<std::pair<UniPoly, uint32_t>>& out) {
  UniPoly df = up_derivative(F, f);
  if (df.is_zero()) {
    // f(x) = u(x^p): take coefficientwise p-th roots to recover u.
    size_t w = F.ew();
    long d = up_deg(F, f);
    UniPoly u;
    u.c.assign((d / F.p() + 1) * w, 0);
    for (long i = 0; i * static_cast<long>(F.p()) <= d; ++i) {
      Fe c = up_coef_fe(F, f, i * F.p());
      Fe r = pth_root(F, c);
      F.copy(u.c.data() + i * w, r.data());
    }
    up_trim(F, u);
    factor_monic(F, u, mult_scale * F.p(), rng, out);
    return;
  }
  UniPoly c = up_gcd(F, f, df);
  UniPoly w = up_divmod(F, f, c).first;
  uint32_t i = 1;
  while (up_deg(F, w) > 0) {
    UniPoly y = up_gcd(F, w, c);
    UniPoly part = up_divmod(F, w, y).first;
    if (up_deg(F, part) > 0) {
      std::vector<std::pair<UniPoly, uint32_t>> sub;
      cz_squarefree(F, part, rng, sub);
      for (auto& [g, m] : sub) push_factor(F, out, g, m * i * mult_scale);
    }
    w = std::move(y);
    c = up_divmod(F, c, w).first;
    ++i;
  }
  if (up_deg(F, c) > 0) {
    // Remaining part is a p-th power.
    squarefree_split(F, c, mult_scale, rng, out);
  }
}

inline void factor_monic(const FieldCtx& F, UniPoly f, uint32_t mult_scale,
                         Rng& rng,
                         std::vector<std::pair<UniPoly, uint32_t>>& out) {
  if (up_deg(F, f) <= 0) return;
  squarefree_split(F, f, mult_scale, rng, out);
}

}  // namespace detail

/// Factors a nonzero univariate polynomial into monic irreducibles with
/// multiplicities. The product of the factors times the input's leading
/// coefficient reproduces the input exactly.
///
/// Tiny instances (q^deg <= 4096) use deterministic exhaustive trial
/// division; larger ones use Cantor-Zassenhaus threaded on `seed`.
inline std::vector<std::pair<UniPoly, uint32_t>> factor_univariate(
    const FieldCtx& F, const UniPoly& f, uint64_t seed) {
  NCF_REQUIRE(!f.is_zero(), "cannot factor the zero polynomial");
  std::vector<std::pair<UniPoly, uint32_t>> out;
  long d = up_deg(F, f);
  if (d == 0) return out;
  UniPoly g = up_monic(F, f);
  bool tiny = true;
  {
    unsigned __int128 qd = 1;
    for (long i = 0; i < d && tiny; ++i) {
      for (uint32_t j = 0; j < F.k() && tiny; ++j) {
        qd *= F.p();
        if (qd > 4096) tiny = false;
      }
    }
  }
  if (tiny) {
    detail::factor_naive(F, std::move(g), out);
  } else {
    Rng rng(seed);
    detail::factor_monic(F, std::move(g), 1, rng, out);
  }
  // Canonical order: by degree, then lexicographic on coefficient words.
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    if (a.first.c.size() != b.first.c.size())
      return a.first.c.size() < b.first.c.size();
    return a.first.c < b.first.c;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Field growth and embeddings (small-field handling).
// ---------------------------------------------------------------------------

/// An embedding of a field F_{p^k} into an extension F_{p^(k*m)}: carries the
/// image of the small field's generator so elements can be pushed through.
struct FieldEmbedding {
  FieldCtx small;
  FieldCtx big;
  Fe generator_image;  // root of `small`'s defining polynomial inside `big`

  /// Image of a small-field element in the big field.
  Fe map(const Fe& a) const {
    Fe acc = big.zero();
    Fe img = generator_image;
    for (size_t i = small.k(); i-- > 0;) {
      acc = big.mul(acc, img);
      Fe c = big.from_int(0);
      c[0] = a[i];
      acc = big.add(acc, c);
    }
    return acc;
  }
};

/// Grows F_{p^k} to F_{p^(k*m)} together with an embedding. m >= 1.
inline FieldEmbedding extend_field(const FieldCtx& F, uint32_t m,
                                   uint64_t seed) {
  NCF_INPUT(m >= 1, "extension multiple must be >= 1");
  FieldEmbedding emb;
  emb.small = F;
  if (m == 1) {
    emb.big = F;
    emb.generator_image = F.zero();
    if (F.k() > 1) emb.generator_image[1] = 1;  // the generator itself
    return emb;
  }
  emb.big = build_extension(F.p(), F.k() * m, seed);
  if (F.k() == 1) {
    emb.generator_image = emb.big.zero();
    return emb;
  }
  // Find a root of the small field's defining polynomial in the big field.
  UniPoly mod_in_big;
  mod_in_big.c.assign((F.k() + 1) * emb.big.ew(), 0);
  for (uint32_t i = 0; i <= F.k(); ++i)
    mod_in_big.c[i * emb.big.ew()] = F.modulus()[i];
  up_trim(emb.big, mod_in_big);
  auto roots = factor_univariate(emb.big, mod_in_big, seed ^ 0xabcdef);
  for (auto& [fac, mult] : roots) {
    (void)mult;
    if (up_deg(emb.big, fac) == 1) {
      // fac = x + c, so the root is -c.
      Fe c = up_coef_fe(emb.big, fac, 0);
      emb.generator_image = emb.big.neg(c);
      return emb;
    }
  }
  throw internal_error("defining polynomial has no root in its extension");
}

/// Smallest field growth of F with at least `min_size` elements; identity
/// when F is already big enough.
inline FieldEmbedding grow_field_to(const FieldCtx& F, uint64_t min_size,
                                    uint64_t seed) {
  auto big_enough = [&](uint32_t m) {
    unsigned __int128 q = 1;
    for (uint32_t i = 0; i < F.k() * m; ++i) {
      q *= F.p();
      if (q >= min_size) return true;
    }
    return static_cast<uint64_t>(q) >= min_size;
  };
  uint32_t m = 1;
  while (!big_enough(m)) {
    ++m;
    NCF_ASSERT(F.k() * m <= kMaxExtensionDegree,
               "field growth exceeded the supported extension degree");
  }
  return extend_field(F, m, seed);
}

/// All elements of a small field in a fixed (odometer) order.
inline std::vector<Fe> enumerate_field(const FieldCtx& F, uint64_t cap = 4096) {
  NCF_REQUIRE(F.order_at_most(cap), "field too large to enumerate");
  std::vector<Fe> out;
  Fe cur = F.zero();
  while (true) {
    out.push_back(cur);
    uint32_t i = 0;
    while (i < F.k() && ++cur[i] == F.p()) cur[i++] = 0;
    if (i == F.k()) break;
  }
  return out;
}

/// Parses a "p^k" field specification ("5", "5^1", "2^3").
inline std::pair<uint64_t, uint32_t> parse_field_spec(const std::string& s) {
  size_t caret = s.find('^');
  std::string ps = caret == std::string::npos ? s : s.substr(0, caret);
  std::string ks = caret == std::string::npos ? "1" : s.substr(caret + 1);
  NCF_INPUT(!ps.empty() && !ks.empty(), "malformed field spec '", s, "'");
  for (char c : ps + ks)
    NCF_INPUT(c >= '0' && c <= '9', "malformed field spec '", s, "'");
  uint64_t p = 0;
  for (char c : ps) {
    NCF_INPUT(p < (1ULL << 61), "characteristic too large in '", s, "'");
    p = p * 10 + (c - '0');
  }
  uint64_t k = 0;
  for (char c : ks) {
    k = k * 10 + (c - '0');
    NCF_INPUT(k <= kMaxExtensionDegree, "extension degree too large in '", s,
              "'");
  }
  NCF_INPUT(k >= 1, "extension degree must be >= 1 in '", s, "'");
  return {p, static_cast<uint32_t>(k)};
}

}  // namespace ncfactor

#endif  // NCFACTOR_FIELD_HPP
