#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace oq {

using cplx = std::complex<double>;

// Error codes shared with the C API / CLI exit codes.
enum class errc : int { ok = 0, internal = 1, invalid_argument = 2, numerical = 3 };

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail_invalid(const std::string& msg) {
  throw Error(errc::invalid_argument, msg);
}
[[noreturn]] inline void fail_numerical(const std::string& msg) {
  throw Error(errc::numerical, msg);
}

// 2x2 complex matrix, row-major {a b; c d}. Value type, no allocation.
struct Mat2 {
  cplx a{1.0}, b{0.0}, c{0.0}, d{1.0};

  static Mat2 identity() { return Mat2{1.0, 0.0, 0.0, 1.0}; }
};

inline Mat2 operator*(const Mat2& x, const Mat2& y) {
  return Mat2{x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
              x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

inline Mat2 operator+(const Mat2& x, const Mat2& y) {
  return Mat2{x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
}

inline Mat2 operator-(const Mat2& x, const Mat2& y) {
  return Mat2{x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
}

inline Mat2 operator*(cplx s, const Mat2& x) { return Mat2{s * x.a, s * x.b, s * x.c, s * x.d}; }

inline cplx trace(const Mat2& m) { return m.a + m.d; }
inline cplx det(const Mat2& m) { return m.a * m.d - m.b * m.c; }

inline Mat2 transpose(const Mat2& m) { return Mat2{m.a, m.c, m.b, m.d}; }
inline Mat2 conjugate(const Mat2& m) {
  return Mat2{std::conj(m.a), std::conj(m.b), std::conj(m.c), std::conj(m.d)};
}
inline Mat2 dagger(const Mat2& m) { return conjugate(transpose(m)); }

inline double fnorm(const Mat2& m) {
  return std::sqrt(std::norm(m.a) + std::norm(m.b) + std::norm(m.c) + std::norm(m.d));
}

inline Mat2 inverse(const Mat2& m) {
  const cplx dt = det(m);
  if (std::abs(dt) < 1e-300) fail_numerical("singular 2x2 matrix inversion");
  const cplx s = 1.0 / dt;
  return Mat2{s * m.d, -s * m.b, -s * m.c, s * m.a};
}

}  // namespace oq
