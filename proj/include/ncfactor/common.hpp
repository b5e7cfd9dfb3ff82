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

#ifndef NCFACTOR_COMMON_HPP
#define NCFACTOR_COMMON_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ncfactor {

/// Raised for malformed user input (bad expressions, bad field specs, ...).
class input_error : public std::runtime_error {
 public:
  explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an operation's mathematical precondition fails (singular
/// matrix where an invertible one is required, non-full pencil, ...).
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an internal invariant that the algorithms guarantee is
/// violated; indicates a bug, never bad input.
class internal_error : public std::logic_error {
 public:
  explicit internal_error(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

#define NCF_REQUIRE(cond, ...)                                              \
  do {                                                                      \
    if (!(cond))                                                            \
      throw ::ncfactor::domain_error(::ncfactor::detail::concat(__VA_ARGS__)); \
  } while (0)

#define NCF_INPUT(cond, ...)                                               \
  do {                                                                     \
    if (!(cond))                                                           \
      throw ::ncfactor::input_error(::ncfactor::detail::concat(__VA_ARGS__)); \
  } while (0)

#define NCF_ASSERT(cond, ...)                                                \
  do {                                                                       \
    if (!(cond))                                                             \
      throw ::ncfactor::internal_error(::ncfactor::detail::concat(           \
          "internal invariant failed at ", __FILE__, ":", __LINE__, ": ",    \
          __VA_ARGS__));                                                     \
  } while (0)

/// Deterministic splittable RNG (splitmix64 core).
///
/// Sequences are reproducible across platforms for a given seed, and
/// `split(i)` derives an independent stream from (state, i) so that every
/// randomized routine can be handed its own sub-seed in a fixed order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform value in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) {
    // Rejection sampling keeps the distribution exactly uniform.
    std::uint64_t limit = bound * (~0ULL / bound);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % bound;
  }

  bool coin() { return next() & 1u; }

  /// Derives an independent child stream; does not disturb this stream.
  Rng split(std::uint64_t counter) const {
    Rng child(state_ ^ 0x5851f42d4c957f2dULL);
    child.state_ += 0x9e3779b97f4a7c15ULL * (counter + 1);
    std::uint64_t mixed = child.next();
    return Rng(mixed);
  }

  /// The raw state; recorded in verification certificates.
  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace ncfactor

#endif  // NCFACTOR_COMMON_HPP
