#pragma once

#include <complex>
#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "cusped/errors.hpp"

namespace cusped {

using BigInt = boost::multiprecision::cpp_int;

namespace detail {

inline std::int64_t checked_mul(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_mul_overflow(x, y, &r)) throw Overflow("int64 overflow in unimodular product");
  return r;
}
inline std::int64_t checked_add(std::int64_t x, std::int64_t y) {
  std::int64_t r;
  if (__builtin_add_overflow(x, y, &r)) throw Overflow("int64 overflow in unimodular product");
  return r;
}
inline BigInt checked_mul(const BigInt& x, const BigInt& y) { return x * y; }
inline BigInt checked_add(const BigInt& x, const BigInt& y) { return x + y; }

inline double to_double(std::int64_t v) { return static_cast<double>(v); }
inline double to_double(const BigInt& v) { return v.convert_to<double>(); }

}  // namespace detail

// Integer 2x2 matrix with determinant one, acting on the upper half-plane by
// z -> (az + b)/(cz + d). Elements are identified with their negation.
template <class Int>
struct Unimodular {
  Int a{1}, b{0}, c{0}, d{1};

  Unimodular() = default;
  Unimodular(Int a_, Int b_, Int c_, Int d_) : a(a_), b(b_), c(c_), d(d_) {
    if (a * d - b * c != 1) throw NotUnimodular("determinant is not 1");
  }

  static Unimodular identity() { return {}; }
  // Parabolic translation z -> z + n (the Dehn twist about the cusp at infinity).
  static Unimodular translation(Int n) { return Unimodular(Int{1}, n, Int{0}, Int{1}); }
  // Inversion z -> -1/z.
  static Unimodular inversion() { return Unimodular(Int{0}, Int{-1}, Int{1}, Int{0}); }

  Unimodular operator*(const Unimodular& o) const {
    using detail::checked_add;
    using detail::checked_mul;
    Unimodular r;
    r.a = checked_add(checked_mul(a, o.a), checked_mul(b, o.c));
    r.b = checked_add(checked_mul(a, o.b), checked_mul(b, o.d));
    r.c = checked_add(checked_mul(c, o.a), checked_mul(d, o.c));
    r.d = checked_add(checked_mul(c, o.b), checked_mul(d, o.d));
    return r;
  }

  Unimodular inverse() const {
    Unimodular r;
    r.a = d;
    r.b = -b;
    r.c = -c;
    r.d = a;
    return r;
  }

  Int trace() const { return a + d; }

  // Projective equality: M ~ -M.
  bool operator==(const Unimodular& o) const {
    return (a == o.a && b == o.b && c == o.c && d == o.d) ||
           (a == -o.a && b == -o.b && c == -o.c && d == -o.d);
  }

  std::complex<double> apply(std::complex<double> z) const {
    using detail::to_double;
    return (to_double(a) * z + to_double(b)) / (to_double(c) * z + to_double(d));
  }

  // Derivative of the Moebius map at z; its argument is the rotation applied
  // to tangent vectors.
  std::complex<double> derivative(std::complex<double> z) const {
    using detail::to_double;
    const auto den = to_double(c) * z + to_double(d);
    return 1.0 / (den * den);
  }

  template <class Other>
  Unimodular<Other> cast() const {
    Unimodular<Other> r;
    r.a = Other(a);
    r.b = Other(b);
    r.c = Other(c);
    r.d = Other(d);
    return r;
  }
};

using MappingClassElement = Unimodular<std::int64_t>;
using BigUnimodular = Unimodular<BigInt>;

inline BigUnimodular to_big(const MappingClassElement& m) { return m.cast<BigInt>(); }

}  // namespace cusped
