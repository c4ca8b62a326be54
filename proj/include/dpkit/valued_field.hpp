#pragma once

// Finite-precision elements of Q_p and F_p((t)) with the ord / ac interface.
//
// An element is one of
//   Zero  - the exact zero, ord = INFINITY;
//   Unit  - w^v * U with U a unit, either exact (finite expansion) or known
//           modulo w^N (N = relative precision);
//   Ball  - O(w^a): known only to lie in w^a O, digits unknown.
// Balls only appear when an inexact computation cancels completely; they are
// what lets the evaluator treat residue cells as points.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/numeric.hpp"

namespace dpkit {

enum class Backend { Padic, Laurent };

inline const char* to_string(Backend b) { return b == Backend::Padic ? "padic" : "laurent"; }

/// Element of the prime residue field F_p.
struct ResidueElement {
  std::uint32_t value = 0;
  std::uint32_t modulus = 2;

  ResidueElement() = default;
  ResidueElement(std::int64_t v, std::uint32_t p)
      : value(static_cast<std::uint32_t>(mod_floor(v, p))), modulus(p) {}

  friend ResidueElement operator+(ResidueElement a, ResidueElement b) {
    return {static_cast<std::int64_t>(a.value) + b.value, a.modulus};
  }
  friend ResidueElement operator-(ResidueElement a, ResidueElement b) {
    return {static_cast<std::int64_t>(a.value) - b.value, a.modulus};
  }
  friend ResidueElement operator*(ResidueElement a, ResidueElement b) {
    return {static_cast<std::int64_t>(static_cast<std::uint64_t>(a.value) * b.value % a.modulus), a.modulus};
  }
  ResidueElement inverse() const {
    if (value == 0) fail(ErrorKind::DivisionByZero, "inverse of 0 in F_" + std::to_string(modulus));
    return {inv_mod(value, modulus), modulus};
  }
  friend bool operator==(ResidueElement a, ResidueElement b) = default;
};

class ValuedFieldElement {
 public:
  enum class Kind : std::uint8_t { Zero, Unit, Ball };
  static constexpr int kExact = -1;
  static constexpr int kDefaultPrecision = 12;

  ValuedFieldElement() = default;

  // ---- factories -------------------------------------------------------

  static ValuedFieldElement zero(Backend b, std::uint32_t p, int cap = kDefaultPrecision) {
    ValuedFieldElement z(b, p, cap);
    z.kind_ = Kind::Zero;
    return z;
  }

  /// O(w^abs_precision).
  static ValuedFieldElement ball(Backend b, std::uint32_t p, std::int64_t abs_precision,
                                 int cap = kDefaultPrecision) {
    ValuedFieldElement z(b, p, cap);
    z.kind_ = Kind::Ball;
    z.val_ = abs_precision;
    return z;
  }

  /// The exact image of an integer (for LAURENT this is n mod p).
  static ValuedFieldElement from_integer(Backend b, std::uint32_t p, const BigInt& n,
                                         int cap = kDefaultPrecision) {
    ValuedFieldElement e(b, p, cap);
    e.kind_ = Kind::Unit;
    e.prec_ = kExact;
    if (b == Backend::Padic) {
      e.iu_ = n;
    } else {
      BigInt r = n % p;
      if (r < 0) r += p;
      e.lu_ = {static_cast<std::uint32_t>(r)};
    }
    e.normalize();
    return e;
  }

  static ValuedFieldElement uniformizer_power(Backend b, std::uint32_t p, std::int64_t k,
                                              int cap = kDefaultPrecision) {
    auto e = from_integer(b, p, 1, cap);
    e.val_ = k;
    return e;
  }

  /// w^val * (d_0 + d_1 w + ...). With precision == kExact the expansion is
  /// finite and exact; otherwise the digits are known modulo w^precision
  /// (missing digits are taken as 0, extra ones are dropped). Leading zero
  /// digits are absorbed into the valuation.
  static ValuedFieldElement from_digits(Backend b, std::uint32_t p, std::int64_t val,
                                        const std::vector<std::uint32_t>& digits, int precision,
                                        int cap = kDefaultPrecision) {
    ValuedFieldElement e(b, p, cap);
    e.kind_ = Kind::Unit;
    e.val_ = val;
    e.prec_ = precision;
    std::vector<std::uint32_t> ds = digits;
    if (precision != kExact) ds.resize(static_cast<std::size_t>(precision), 0);
    for (auto d : ds)
      if (d >= p) fail(ErrorKind::InvalidArgument, "digit " + std::to_string(d) + " out of range for p=" + std::to_string(p));
    if (b == Backend::Padic) {
      BigInt u = 0;
      for (auto it = ds.rbegin(); it != ds.rend(); ++it) u = u * p + *it;
      e.iu_ = u;
    } else {
      e.lu_ = ds;
    }
    if (precision == 0) return ball(b, p, val, cap);
    e.normalize();
    return e;
  }

  // ---- observers -------------------------------------------------------

  Backend backend() const { return backend_; }
  std::uint32_t prime() const { return p_; }
  int cap() const { return cap_; }
  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::Zero; }
  bool is_ball() const { return kind_ == Kind::Ball; }
  bool is_unit_form() const { return kind_ == Kind::Unit; }
  bool is_exact() const { return kind_ == Kind::Zero || (kind_ == Kind::Unit && prec_ == kExact); }
  /// Known to be nonzero.
  bool is_nonzero() const { return kind_ == Kind::Unit; }

  /// Stored valuation; INFINITY for zero. For a ball this is only a lower bound.
  ZExt valuation() const { return kind_ == Kind::Zero ? ZExt::infinity() : ZExt(val_); }

  /// Relative precision (number of known unit digits), kExact when exact.
  int precision() const {
    if (kind_ == Kind::Zero) return kExact;
    if (kind_ == Kind::Ball) return 0;
    return prec_;
  }

  /// Absolute precision: the element is known modulo w^absolute_precision().
  ZExt absolute_precision() const {
    if (is_exact()) return ZExt::infinity();
    if (kind_ == Kind::Ball) return val_;
    return val_ + prec_;
  }

  /// First `count` unit digits (fewer if the element is exact and shorter,
  /// or inexact with lower precision).
  std::vector<std::uint32_t> digits(std::size_t count = kDefaultPrecision) const {
    std::vector<std::uint32_t> out;
    if (kind_ != Kind::Unit) return out;
    std::size_t n = count;
    if (prec_ != kExact) n = std::min<std::size_t>(n, static_cast<std::size_t>(prec_));
    if (backend_ == Backend::Padic) {
      BigInt u = iu_;
      if (prec_ == kExact && u >= 0) {
        while (u != 0 && out.size() < n) {
          out.push_back(static_cast<std::uint32_t>(u % p_));
          u /= p_;
        }
        return out;
      }
      BigInt m = pow_p(static_cast<int>(n));
      u %= m;
      if (u < 0) u += m;
      for (std::size_t i = 0; i < n; ++i) {
        out.push_back(static_cast<std::uint32_t>(u % p_));
        u /= p_;
      }
      return out;
    }
    for (std::size_t i = 0; i < std::min(n, lu_.size()); ++i) out.push_back(lu_[i]);
    return out;
  }

  /// First unit digit; nullopt for a ball (it could be anything).
  std::optional<std::uint32_t> leading_digit() const {
    if (kind_ == Kind::Zero) return 0u;
    if (kind_ == Kind::Ball) return std::nullopt;
    if (backend_ == Backend::Padic) {
      BigInt r = iu_ % p_;
      if (r < 0) r += p_;
      return static_cast<std::uint32_t>(r);
    }
    return lu_.front();
  }

  /// The finite expansion as an exact element (a ball becomes zero).
  ValuedFieldElement exact_representative() const {
    ValuedFieldElement r = *this;
    if (kind_ == Kind::Ball) return zero(backend_, p_, cap_);
    if (kind_ == Kind::Unit && prec_ != kExact) {
      r.prec_ = kExact;
      r.normalize();
    }
    return r;
  }

  /// Same value, precision capped at `rel` digits (exact elements become inexact).
  ValuedFieldElement truncated(int rel) const {
    if (kind_ != Kind::Unit) return *this;
    if (prec_ != kExact && prec_ <= rel) return *this;
    ValuedFieldElement r = *this;
    r.prec_ = rel;
    r.normalize();
    return r;
  }

  /// Reduce to absolute precision `abs` (no-op when already coarser).
  ValuedFieldElement reduced_to_absolute(std::int64_t abs) const {
    if (kind_ == Kind::Zero) return ball(backend_, p_, abs, cap_);
    if (kind_ == Kind::Ball) return val_ <= abs ? *this : ball(backend_, p_, abs, cap_);
    if (abs <= val_) return ball(backend_, p_, abs, cap_);
    return truncated(static_cast<int>(abs - val_));
  }

  // ---- ring operations (total on balls) -------------------------------

  friend ValuedFieldElement operator+(const ValuedFieldElement& a, const ValuedFieldElement& b) {
    a.check_compatible(b);
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_ball() || b.is_ball()) {
      const ValuedFieldElement& bl = a.is_ball() ? a : b;
      const ValuedFieldElement& other = a.is_ball() ? b : a;
      std::int64_t abs = bl.val_;
      if (other.is_ball()) return ball(a.backend_, a.p_, std::min(abs, other.val_), a.cap_);
      return other.reduced_to_absolute(abs);
    }
    std::int64_t v = std::min(a.val_, b.val_);
    bool exact = a.prec_ == kExact && b.prec_ == kExact;
    std::int64_t abs = 0;
    if (!exact) {
      std::int64_t aa = a.prec_ == kExact ? INT64_MAX : a.val_ + a.prec_;
      std::int64_t ab = b.prec_ == kExact ? INT64_MAX : b.val_ + b.prec_;
      abs = std::min(aa, ab);
    }
    ValuedFieldElement r(a.backend_, a.p_, std::max(a.cap_, b.cap_));
    r.kind_ = Kind::Unit;
    r.val_ = v;
    r.prec_ = exact ? kExact : static_cast<int>(abs - v);
    auto sa = static_cast<int>(a.val_ - v);
    auto sb = static_cast<int>(b.val_ - v);
    if (a.backend_ == Backend::Padic) {
      r.iu_ = a.iu_ * a.pow_p(sa) + b.iu_ * a.pow_p(sb);
    } else {
      std::size_t len = std::max(a.lu_.size() + sa, b.lu_.size() + sb);
      r.lu_.assign(len, 0);
      for (std::size_t i = 0; i < a.lu_.size(); ++i) r.lu_[i + sa] = a.lu_[i];
      for (std::size_t i = 0; i < b.lu_.size(); ++i) r.lu_[i + sb] = (r.lu_[i + sb] + b.lu_[i]) % a.p_;
    }
    r.normalize();
    return r;
  }

  friend ValuedFieldElement operator-(const ValuedFieldElement& a) {
    if (a.kind_ != Kind::Unit) return a;
    ValuedFieldElement r = a;
    if (a.backend_ == Backend::Padic) {
      r.iu_ = -a.iu_;
    } else {
      for (auto& c : r.lu_) c = c == 0 ? 0 : a.p_ - c;
    }
    r.normalize();
    return r;
  }

  friend ValuedFieldElement operator-(const ValuedFieldElement& a, const ValuedFieldElement& b) { return a + (-b); }

  friend ValuedFieldElement operator*(const ValuedFieldElement& a, const ValuedFieldElement& b) {
    a.check_compatible(b);
    int cap = std::max(a.cap_, b.cap_);
    if (a.is_zero() || b.is_zero()) return zero(a.backend_, a.p_, cap);
    if (a.is_ball() || b.is_ball()) return ball(a.backend_, a.p_, a.val_ + b.val_, cap);
    ValuedFieldElement r(a.backend_, a.p_, cap);
    r.kind_ = Kind::Unit;
    r.val_ = a.val_ + b.val_;
    if (a.prec_ == kExact) r.prec_ = b.prec_;
    else if (b.prec_ == kExact) r.prec_ = a.prec_;
    else r.prec_ = std::min(a.prec_, b.prec_);
    if (a.backend_ == Backend::Padic) {
      r.iu_ = a.iu_ * b.iu_;
    } else {
      std::size_t la = a.lu_.size(), lb = b.lu_.size();
      std::size_t len = la + lb - 1;
      if (r.prec_ != kExact) len = std::min(len, static_cast<std::size_t>(r.prec_));
      r.lu_.assign(len, 0);
      for (std::size_t i = 0; i < la && i < len; ++i) {
        if (a.lu_[i] == 0) continue;
        for (std::size_t j = 0; j < lb && i + j < len; ++j)
          r.lu_[i + j] = static_cast<std::uint32_t>((r.lu_[i + j] + static_cast<std::uint64_t>(a.lu_[i]) * b.lu_[j]) % a.p_);
      }
    }
    r.normalize();
    return r;
  }

  /// Multiplicative inverse. Exact only when the unit part is trivially
  /// invertible; otherwise computed to the element's relative precision
  /// (or the working precision cap for exact input).
  ValuedFieldElement inverse() const {
    if (kind_ == Kind::Zero) fail(ErrorKind::DivisionByZero, "inverse of 0");
    if (kind_ == Kind::Ball) fail(ErrorKind::PrecisionExhausted, "inverse of an element with no known digits");
    ValuedFieldElement r(backend_, p_, cap_);
    r.kind_ = Kind::Unit;
    r.val_ = -val_;
    if (backend_ == Backend::Padic) {
      if (prec_ == kExact && (iu_ == 1 || iu_ == -1)) {
        r.prec_ = kExact;
        r.iu_ = iu_;
        return r;
      }
      r.prec_ = prec_ == kExact ? cap_ : prec_;
      r.iu_ = inverse_mod(iu_, pow_p(r.prec_));
    } else {
      if (prec_ == kExact && lu_.size() == 1) {
        r.prec_ = kExact;
        r.lu_ = {inv_mod(lu_[0], p_)};
        return r;
      }
      r.prec_ = prec_ == kExact ? cap_ : prec_;
      auto n = static_cast<std::size_t>(r.prec_);
      std::vector<std::uint32_t> w(n, 0);
      std::uint32_t inv0 = inv_mod(lu_[0], p_);
      for (std::size_t k = 0; k < n; ++k) {
        std::uint64_t s = k == 0 ? 1 : 0;
        for (std::size_t i = 1; i <= k && i < lu_.size(); ++i)
          s = (s + static_cast<std::uint64_t>(p_ - lu_[i]) * w[k - i]) % p_;
        w[k] = static_cast<std::uint32_t>(s * inv0 % p_);
      }
      r.lu_ = w;
    }
    r.normalize();
    return r;
  }

  /// Structural identity (same state, valuation, precision and digits).
  friend bool operator==(const ValuedFieldElement& a, const ValuedFieldElement& b) {
    if (a.backend_ != b.backend_ || a.p_ != b.p_ || a.kind_ != b.kind_) return false;
    if (a.kind_ == Kind::Zero) return true;
    if (a.kind_ == Kind::Ball) return a.val_ == b.val_;
    if (a.val_ != b.val_ || a.prec_ != b.prec_) return false;
    return a.backend_ == Backend::Padic ? a.iu_ == b.iu_ : a.lu_ == b.lu_;
  }

  /// Human-readable rendering. Exact elements with nonnegative valuation
  /// print as integers (PADIC) or polynomials in t (LAURENT); everything
  /// else uses the literal syntax.
  std::string str() const {
    if (kind_ == Kind::Zero) return "0";
    if (is_exact() && backend_ == Backend::Padic) {
      if (val_ >= 0) return (iu_ * pow_p(static_cast<int>(val_))).str();
      return to_string(Rational(iu_, pow_p(static_cast<int>(-val_))));
    }
    if (is_exact() && backend_ == Backend::Laurent) {
      std::ostringstream os;
      bool first = true;
      for (std::size_t i = 0; i < lu_.size(); ++i) {
        if (lu_[i] == 0) continue;
        if (!first) os << " + ";
        first = false;
        std::int64_t e = val_ + static_cast<std::int64_t>(i);
        if (e == 0) os << lu_[i];
        else {
          if (lu_[i] != 1) os << lu_[i] << "*";
          os << "t";
          if (e != 1) os << "^" << e;
        }
      }
      return os.str();
    }
    return literal();
  }

  /// `padic(p=5, val=2, digits=[2,0,1])`, with `prec=N` for inexact values.
  std::string literal() const {
    std::ostringstream os;
    os << to_string(backend_) << "(p=" << p_ << ", val=";
    if (kind_ == Kind::Zero) {
      os << "inf, digits=[])";
      return os.str();
    }
    os << val_ << ", digits=[";
    auto ds = digits(prec_ == kExact ? 64 : static_cast<std::size_t>(std::max(0, precision())));
    for (std::size_t i = 0; i < ds.size(); ++i) os << (i ? "," : "") << ds[i];
    os << "]";
    if (!is_exact()) os << ", prec=" << precision();
    os << ")";
    return os.str();
  }

 private:
  ValuedFieldElement(Backend b, std::uint32_t p, int cap) : backend_(b), p_(p), cap_(cap) {}

  void check_compatible(const ValuedFieldElement& o) const {
    if (backend_ != o.backend_ || p_ != o.p_)
      fail(ErrorKind::BackendMismatch, std::string(to_string(backend_)) + ":" + std::to_string(p_) + " vs " +
                                           to_string(o.backend_) + ":" + std::to_string(o.p_));
  }

  BigInt pow_p(int k) const { return boost::multiprecision::pow(BigInt(p_), static_cast<unsigned>(k)); }

  static BigInt inverse_mod(BigInt a, const BigInt& m) {
    a %= m;
    if (a < 0) a += m;
    BigInt old_r = a, r = m, old_s = 1, s = 0;
    while (r != 0) {
      BigInt q = old_r / r;
      BigInt t = old_r - q * r;
      old_r = r;
      r = t;
      t = old_s - q * s;
      old_s = s;
      s = t;
    }
    old_s %= m;
    if (old_s < 0) old_s += m;
    return old_s;
  }

  // Restores the canonical form: leading digit nonzero, inexact units reduced
  // modulo w^prec, total cancellation turned into Zero or a Ball.
  void normalize() {
    if (kind_ != Kind::Unit) return;
    if (backend_ == Backend::Padic) {
      if (prec_ != kExact) {
        BigInt m = pow_p(prec_);
        iu_ %= m;
        if (iu_ < 0) iu_ += m;
      }
      if (iu_ == 0) {
        if (prec_ == kExact) kind_ = Kind::Zero;
        else { kind_ = Kind::Ball; val_ += prec_; }
        iu_ = 0;
        return;
      }
      while (iu_ % p_ == 0) {
        iu_ /= p_;
        ++val_;
        if (prec_ != kExact) --prec_;
      }
    } else {
      if (prec_ != kExact) lu_.resize(static_cast<std::size_t>(prec_), 0);
      else while (!lu_.empty() && lu_.back() == 0) lu_.pop_back();
      std::size_t lead = 0;
      while (lead < lu_.size() && lu_[lead] == 0) ++lead;
      if (lead == lu_.size()) {
        if (prec_ == kExact) kind_ = Kind::Zero;
        else { kind_ = Kind::Ball; val_ += prec_; }
        lu_.clear();
        return;
      }
      if (lead) {
        lu_.erase(lu_.begin(), lu_.begin() + static_cast<std::ptrdiff_t>(lead));
        val_ += static_cast<std::int64_t>(lead);
        if (prec_ != kExact) prec_ -= static_cast<int>(lead);
      }
    }
  }

  Backend backend_ = Backend::Padic;
  std::uint32_t p_ = 3;
  int cap_ = kDefaultPrecision;
  Kind kind_ = Kind::Zero;
  std::int64_t val_ = 0;
  int prec_ = kExact;
  BigInt iu_ = 0;
  std::vector<std::uint32_t> lu_;
};

using VFE = ValuedFieldElement;

enum class ArithOp { Add, Mul, Neg, Inv };

/// Checked arithmetic entry point: unlike the raw operators it refuses to
/// manufacture a value with no known digits out of known operands.
inline VFE vf_arith(ArithOp op, const VFE& x, const VFE* y = nullptr) {
  auto need_y = [&]() -> const VFE& {
    if (!y) fail(ErrorKind::InvalidArgument, "binary operation needs two operands");
    if (y->backend() != x.backend() || y->prime() != x.prime())
      fail(ErrorKind::BackendMismatch, "operands differ in backend or prime");
    return *y;
  };
  switch (op) {
    case ArithOp::Add: {
      const VFE& b = need_y();
      VFE r = x + b;
      if (r.is_ball() && !x.is_ball() && !b.is_ball())
        fail(ErrorKind::PrecisionExhausted, "cancellation left no known digits");
      return r;
    }
    case ArithOp::Mul: return x * need_y();
    case ArithOp::Neg: return -x;
    case ArithOp::Inv: return x.inverse();
  }
  return x;
}

inline ZExt ord(const VFE& x) { return x.valuation(); }

/// Angular component: first unit digit, ac(0) = 0.
inline ResidueElement ac(const VFE& x) {
  auto d = x.leading_digit();
  if (!d) fail(ErrorKind::PrecisionExhausted, "ac of an element with no known digits");
  return {static_cast<std::int64_t>(*d), x.prime()};
}

/// A concrete local field: Q_p or F_p((t)) with its uniformizer and the
/// interpreted named constants.
struct Structure {
  Backend backend = Backend::Padic;
  std::uint32_t p = 3;
  int precision = VFE::kDefaultPrecision;
  std::map<std::string, VFE> constants;

  /// Builds and validates a structure. `eps`, when not given, defaults to
  /// the smallest positive quadratic non-residue mod p; `pi` is the
  /// uniformizer.
  static Structure make(Backend b, std::uint32_t p, int precision = VFE::kDefaultPrecision,
                        std::optional<std::int64_t> eps = std::nullopt) {
    if (!is_prime(p)) fail(ErrorKind::InvalidStructure, std::to_string(p) + " is not prime");
    if (p == 2) fail(ErrorKind::InvalidStructure, "residue characteristic 2 is not supported");
    if (precision < 1) fail(ErrorKind::InvalidStructure, "precision must be positive");
    Structure s;
    s.backend = b;
    s.p = p;
    s.precision = precision;
    s.constants["pi"] = VFE::uniformizer_power(b, p, 1, precision);
    s.set_constant("eps", VFE::from_integer(b, p, eps.value_or(smallest_nonresidue(p)), precision));
    return s;
  }

  std::uint32_t q() const { return p; }

  VFE integer(const BigInt& n) const { return VFE::from_integer(backend, p, n, precision); }
  VFE pi_power(std::int64_t k) const { return VFE::uniformizer_power(backend, p, k, precision); }
  VFE zero() const { return VFE::zero(backend, p, precision); }
  VFE one() const { return integer(1); }

  bool has(const std::string& name) const { return constants.count(name) > 0; }

  const VFE& constant(const std::string& name) const {
    auto it = constants.find(name);
    if (it == constants.end()) {
      if (name == "eps") fail(ErrorKind::MissingEps, "structure has no eps constant");
      fail(ErrorKind::InvalidArgument, "unknown named constant '" + name + "'");
    }
    return it->second;
  }

  const VFE& eps() const { return constant("eps"); }

  void set_constant(const std::string& name, const VFE& v) {
    if (v.backend() != backend || v.prime() != p) fail(ErrorKind::BackendMismatch, "constant '" + name + "'");
    if (name == "eps") {
      if (!v.is_nonzero() || v.valuation() != ZExt(0))
        fail(ErrorKind::InvalidStructure, "eps must be a unit");
      if (legendre(*v.leading_digit(), p) != -1)
        fail(ErrorKind::InvalidStructure, "eps must be a non-square (Euler's criterion on ac(eps))");
    }
    constants[name] = v;
  }

  /// `padic:5`, `laurent:7:16`.
  std::string spec() const {
    return std::string(to_string(backend)) + ":" + std::to_string(p) +
           (precision == VFE::kDefaultPrecision ? "" : ":" + std::to_string(precision));
  }

  static Structure parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 2 || parts.size() > 3) fail(ErrorKind::InvalidArgument, "structure spec '" + text + "'");
    Backend b;
    if (parts[0] == "padic") b = Backend::Padic;
    else if (parts[0] == "laurent") b = Backend::Laurent;
    else fail(ErrorKind::InvalidArgument, "unknown backend '" + parts[0] + "'");
    try {
      auto p = static_cast<std::uint32_t>(std::stoul(parts[1]));
      int prec = parts.size() == 3 ? std::stoi(parts[2]) : VFE::kDefaultPrecision;
      return make(b, p, prec);
    } catch (const std::logic_error&) {
      fail(ErrorKind::InvalidArgument, "structure spec '" + text + "'");
    }
  }
};

/// Parses `padic(p=5, val=2, digits=[2,0,1])` / `laurent(p=7, val=-1, digits=[3])`,
/// optionally with `prec=N` for an inexact value. Without `prec` the
/// expansion is exact.
inline VFE parse_element_literal(const std::string& text, int cap = VFE::kDefaultPrecision) {
  auto bad = [&](const std::string& why) -> VFE { fail(ErrorKind::InvalidArgument, "element literal '" + text + "': " + why); };
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  Backend b;
  std::size_t pos;
  if (s.rfind("padic(", 0) == 0) { b = Backend::Padic; pos = 6; }
  else if (s.rfind("laurent(", 0) == 0) { b = Backend::Laurent; pos = 8; }
  else return bad("expected padic(...) or laurent(...)");
  if (s.back() != ')') return bad("missing ')'");
  std::string body = s.substr(pos, s.size() - pos - 1);
  std::optional<std::uint32_t> p;
  std::optional<std::int64_t> val;
  bool zero = false;
  std::vector<std::uint32_t> digits;
  int prec = VFE::kExact;
  std::size_t i = 0;
  while (i < body.size()) {
    auto eq = body.find('=', i);
    if (eq == std::string::npos) return bad("expected key=value");
    std::string key = body.substr(i, eq - i);
    std::size_t end;
    std::string value;
    if (body[eq + 1] == '[') {
      end = body.find(']', eq);
      if (end == std::string::npos) return bad("unterminated digit list");
      value = body.substr(eq + 2, end - eq - 2);
      ++end;
    } else {
      end = body.find(',', eq);
      if (end == std::string::npos) end = body.size();
      value = body.substr(eq + 1, end - eq - 1);
    }
    try {
      if (key == "p") p = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "val") {
        if (value == "inf") zero = true;
        else val = std::stoll(value);
      } else if (key == "digits") {
        std::stringstream ds(value);
        std::string d;
        while (std::getline(ds, d, ','))
          if (!d.empty()) digits.push_back(static_cast<std::uint32_t>(std::stoul(d)));
      } else if (key == "prec") prec = std::stoi(value);
      else return bad("unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      return bad("bad value for '" + key + "'");
    }
    i = end + (end < body.size() && body[end] == ',' ? 1 : 0);
  }
  if (!p) return bad("missing p");
  if (zero) return VFE::zero(b, *p, cap);
  if (!val) return bad("missing val");
  if (prec == VFE::kExact && !digits.empty() && digits.front() == 0) return bad("digits[0] must be nonzero");
  if (digits.empty() && prec == VFE::kExact) return bad("empty digits for a nonzero element");
  return VFE::from_digits(b, *p, *val, digits, prec, cap);
}

}  // namespace dpkit
