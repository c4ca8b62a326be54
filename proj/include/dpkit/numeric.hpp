#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "dpkit/errors.hpp"

namespace dpkit {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline std::string to_string(const BigInt& v) { return v.str(); }

/// Rationals travel as "num/den" strings so no float ever touches a result.
inline std::string to_string(const Rational& r) {
  return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

inline Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    return Rational(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, "malformed rational '" + s + "'");
  }
}

/// q^e for possibly negative e.
inline Rational rational_pow(std::uint32_t q, std::int64_t e) {
  BigInt b = boost::multiprecision::pow(BigInt(q), static_cast<unsigned>(e < 0 ? -e : e));
  return e < 0 ? Rational(BigInt(1), b) : Rational(b);
}

inline std::int64_t mod_floor(std::int64_t a, std::int64_t m) {
  std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

inline std::uint32_t pow_mod(std::uint64_t base, std::uint64_t e, std::uint32_t m) {
  std::uint64_t r = 1 % m;
  base %= m;
  while (e) {
    if (e & 1) r = r * base % m;
    base = base * base % m;
    e >>= 1;
  }
  return static_cast<std::uint32_t>(r);
}

inline bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

/// Legendre symbol of a mod odd prime p: 0, 1 or -1.
inline int legendre(std::int64_t a, std::uint32_t p) {
  auto r = static_cast<std::uint64_t>(mod_floor(a, p));
  if (r == 0) return 0;
  return pow_mod(r, (p - 1) / 2, p) == 1 ? 1 : -1;
}

/// Smallest positive quadratic non-residue mod p.
inline std::uint32_t smallest_nonresidue(std::uint32_t p) {
  for (std::uint32_t a = 2; a < p; ++a)
    if (legendre(a, p) == -1) return a;
  fail(ErrorKind::InvalidStructure, "no quadratic non-residue mod " + std::to_string(p));
}

inline std::uint32_t inv_mod(std::uint32_t a, std::uint32_t p) { return pow_mod(a, p - 2, p); }

/// Integers extended by a top element; ord(0) lives here.
class ZExt {
 public:
  constexpr ZExt() = default;
  constexpr ZExt(std::int64_t v) : value_(v) {}  // NOLINT: integers convert implicitly

  static constexpr ZExt infinity() {
    ZExt z;
    z.inf_ = true;
    return z;
  }

  constexpr bool is_infinite() const { return inf_; }
  constexpr bool is_finite() const { return !inf_; }

  std::int64_t value() const {
    if (inf_) fail(ErrorKind::InvalidArgument, "value() of INFINITY");
    return value_;
  }

  friend constexpr ZExt operator+(ZExt a, ZExt b) {
    if (a.inf_ || b.inf_) return infinity();
    return ZExt(a.value_ + b.value_);
  }

  friend constexpr bool operator==(ZExt a, ZExt b) {
    return a.inf_ == b.inf_ && (a.inf_ || a.value_ == b.value_);
  }

  friend constexpr std::strong_ordering operator<=>(ZExt a, ZExt b) {
    if (a.inf_ && b.inf_) return std::strong_ordering::equal;
    if (a.inf_) return std::strong_ordering::greater;
    if (b.inf_) return std::strong_ordering::less;
    return a.value_ <=> b.value_;
  }

  std::string str() const { return inf_ ? "INFINITY" : std::to_string(value_); }

  friend std::ostream& operator<<(std::ostream& os, ZExt z) { return os << z.str(); }

 private:
  std::int64_t value_ = 0;
  bool inf_ = false;
};

}  // namespace dpkit
