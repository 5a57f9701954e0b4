#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <concepts>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bsaction {

using BigInt = boost::multiprecision::cpp_int;

// Arbitrary-precision integer with an int64 fast path. Values that fit in
// int64 never touch the heap; anything larger is delegated to cpp_int and
// demoted again as soon as it fits. Saturations create hundreds of thousands
// of orbits whose labels are almost always small, so this matters.
class Int {
 public:
  Int() = default;

  template <std::signed_integral T>
  Int(T v) : small_(static_cast<std::int64_t>(v)) {}

  template <std::unsigned_integral T>
  Int(T v) {
    if (static_cast<std::uint64_t>(v) <= static_cast<std::uint64_t>(kMax)) {
      small_ = static_cast<std::int64_t>(v);
    } else {
      big_ = std::make_unique<BigInt>(static_cast<std::uint64_t>(v));
    }
  }

  Int(const BigInt& b) { assign(b); }

  Int(const Int& o) : small_(o.small_) {
    if (o.big_) [[unlikely]] big_ = std::make_unique<BigInt>(*o.big_);
  }
  Int(Int&&) noexcept = default;
  Int& operator=(const Int& o) {
    if (this != &o) {
      small_ = o.small_;
      big_ = o.big_ ? std::make_unique<BigInt>(*o.big_) : nullptr;
    }
    return *this;
  }
  Int& operator=(Int&&) noexcept = default;

  // Accepts an optional sign followed by decimal digits.
  static Int parse(std::string_view text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      neg = text[i] == '-';
      ++i;
    }
    if (i == text.size()) throw std::invalid_argument("empty integer literal");
    BigInt acc = 0;
    for (; i < text.size(); ++i) {
      char c = text[i];
      if (c < '0' || c > '9') {
        throw std::invalid_argument("bad integer literal '" + std::string(text) + "'");
      }
      acc = acc * 10 + (c - '0');
    }
    if (neg) acc = -acc;
    return Int(acc);
  }

  bool is_small() const { return !big_; }
  bool is_zero() const { return !big_ && small_ == 0; }
  int sign() const {
    if (big_) return big_->sign();
    return (small_ > 0) - (small_ < 0);
  }

  bool fits_int64() const { return !big_; }
  std::int64_t to_int64() const {
    if (big_) [[unlikely]] throw_overflow();
    return small_;
  }

  BigInt to_big() const { return big_ ? *big_ : BigInt(small_); }

  std::string str() const { return big_ ? big_->str() : std::to_string(small_); }

  friend Int operator+(const Int& a, const Int& b) {
    std::int64_t r;
    if (a.is_small() && b.is_small() && !__builtin_add_overflow(a.small_, b.small_, &r)) return Int(r);
    return slow(a, b, '+');
  }
  friend Int operator-(const Int& a, const Int& b) {
    std::int64_t r;
    if (a.is_small() && b.is_small() && !__builtin_sub_overflow(a.small_, b.small_, &r)) return Int(r);
    return slow(a, b, '-');
  }
  friend Int operator*(const Int& a, const Int& b) {
    std::int64_t r;
    if (a.is_small() && b.is_small() && !__builtin_mul_overflow(a.small_, b.small_, &r)) return Int(r);
    return slow(a, b, '*');
  }
  // Truncating division, as for built-in integers.
  friend Int operator/(const Int& a, const Int& b) {
    if (a.is_small() && b.is_small() && b.small_ != 0 && !(a.small_ == kMin && b.small_ == -1)) {
      return Int(a.small_ / b.small_);
    }
    return slow(a, b, '/');
  }
  friend Int operator%(const Int& a, const Int& b) {
    if (a.is_small() && b.is_small() && b.small_ != 0) return Int(b.small_ == -1 ? 0 : a.small_ % b.small_);
    return slow(a, b, '%');
  }
  Int operator-() const {
    if (is_small() && small_ != kMin) return Int(-small_);
    return Int(BigInt(-to_big()));
  }

  Int& operator+=(const Int& o) { return *this = *this + o; }
  Int& operator-=(const Int& o) { return *this = *this - o; }
  Int& operator*=(const Int& o) { return *this = *this * o; }
  Int& operator/=(const Int& o) { return *this = *this / o; }
  Int& operator%=(const Int& o) { return *this = *this % o; }
  Int& operator++() { return *this += 1; }
  Int& operator--() { return *this -= 1; }

  friend bool operator==(const Int& a, const Int& b) {
    if (a.is_small() && b.is_small()) return a.small_ == b.small_;
    if (a.is_small() != b.is_small()) return false;  // normalized: big never fits int64
    return *a.big_ == *b.big_;
  }
  friend std::strong_ordering operator<=>(const Int& a, const Int& b) {
    if (a.is_small() && b.is_small()) return a.small_ <=> b.small_;
    BigInt x = a.to_big(), y = b.to_big();
    if (x < y) return std::strong_ordering::less;
    if (x > y) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const Int& v) { return os << v.str(); }

 private:
  static constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  static constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();

  [[noreturn, gnu::cold, gnu::noinline]] static void throw_overflow() {
    throw std::overflow_error("integer does not fit in 64 bits");
  }

  // Out-of-line path for heap operands, overflow and division by zero.
  [[gnu::noinline, gnu::cold]] static Int slow(const Int& a, const Int& b, char op) {
    if ((op == '/' || op == '%') && b.is_zero()) throw std::domain_error("division by zero");
    BigInt x = a.to_big(), y = b.to_big();
    switch (op) {
      case '+': return Int(BigInt(x + y));
      case '-': return Int(BigInt(x - y));
      case '*': return Int(BigInt(x * y));
      case '/': return Int(BigInt(x / y));
      default: return Int(BigInt(x % y));
    }
  }

  void assign(const BigInt& b) {
    if (b >= kMin && b <= kMax) {
      small_ = static_cast<std::int64_t>(b);
      big_.reset();
    } else {
      small_ = 0;
      big_ = std::make_unique<BigInt>(b);
    }
  }

  std::int64_t small_ = 0;
  std::unique_ptr<BigInt> big_;
};

inline Int abs(const Int& a) { return a.sign() < 0 ? -a : a; }

inline Int gcd(const Int& a, const Int& b) {
  if (a.is_small() && b.is_small()) {
    auto ua = static_cast<std::uint64_t>(a.to_int64());
    auto ub = static_cast<std::uint64_t>(b.to_int64());
    if (a.sign() < 0) ua = 0 - ua;
    if (b.sign() < 0) ub = 0 - ub;
    return Int(std::gcd(ua, ub));
  }
  return Int(BigInt(boost::multiprecision::gcd(a.to_big(), b.to_big())));
}

inline Int lcm(const Int& a, const Int& b) {
  if (a.is_zero() || b.is_zero()) return Int(0);
  return abs(a) / gcd(a, b) * abs(b);
}

// Representative in [0, |m|).
inline Int floor_mod(const Int& a, const Int& m) {
  if (a.is_small() && m.is_small() && m.to_int64() > 0) {
    std::int64_t r = a.to_int64() % m.to_int64();
    return Int(r < 0 ? r + m.to_int64() : r);
  }
  Int r = a % m;
  if (r.sign() < 0) r += abs(m);
  return r;
}

// a = q*m + r with 0 <= r < |m|; returns (q, r). Works for negative m.
inline std::pair<Int, Int> euclid_divmod(const Int& a, const Int& m) {
  Int r = floor_mod(a, m);
  return {(a - r) / m, r};
}

inline bool divides(const Int& d, const Int& a) { return (a % d).is_zero(); }

inline Int pow(Int base, unsigned e) {
  Int r(1);
  while (e) {
    if (e & 1u) r *= base;
    e >>= 1;
    if (e) base *= base;
  }
  return r;
}

// Exponent of the prime p in a nonzero integer.
inline unsigned valuation(const Int& p, Int a) {
  if (a.is_zero()) throw std::domain_error("valuation of zero");
  if (abs(p) < 2) throw std::domain_error("valuation base must be at least 2");
  unsigned v = 0;
  while (divides(p, a)) {
    a /= p;
    ++v;
  }
  return v;
}

// Inverse of a modulo mod (mod >= 1, gcd(a, mod) = 1), in [0, mod).
inline Int mod_inverse(const Int& a, const Int& mod) {
  if (mod == 1) return Int(0);
  if (a.is_small() && mod.is_small() && mod.to_int64() > 0) {
    std::int64_t m = mod.to_int64(), r0 = m, r1 = a.to_int64() % m, s0 = 0, s1 = 1;
    if (r1 < 0) r1 += m;
    while (r1 != 0) {
      std::int64_t q = r0 / r1;
      r0 = std::exchange(r1, r0 - q * r1);
      s0 = std::exchange(s1, s0 - q * s1);
    }
    if (r0 != 1) throw std::domain_error("no modular inverse");
    return Int(s0 < 0 ? s0 + m : s0);
  }
  Int r0 = mod, r1 = floor_mod(a, mod);
  Int s0 = 0, s1 = 1;
  while (!r1.is_zero()) {
    Int q = r0 / r1;
    Int r2 = r0 - q * r1;
    r0 = std::move(r1);
    r1 = std::move(r2);
    Int s2 = s0 - q * s1;
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  if (r0 != 1) throw std::domain_error("no modular inverse");
  return floor_mod(s0, mod);
}

// Prime factorisation by trial division; only used on the group parameters.
struct PrimePower {
  Int prime;
  unsigned exponent;
};

inline std::vector<PrimePower> factorize(Int a) {
  a = abs(a);
  if (a.is_zero()) throw std::domain_error("factorize(0)");
  std::vector<PrimePower> out;
  for (Int p = 2; p * p <= a; ++p) {
    if (divides(p, a)) {
      unsigned e = 0;
      while (divides(p, a)) {
        a /= p;
        ++e;
      }
      out.push_back({p, e});
    }
  }
  if (a > 1) out.push_back({a, 1});
  return out;
}

}  // namespace bsaction
