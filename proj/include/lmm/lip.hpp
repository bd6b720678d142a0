#pragma once

#include <cmath>
#include <limits>

#include "lmm/image.hpp"

namespace lmm {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalar LIP arithmetic on grey levels in (-inf, m). The grey scale is
// inverted (0 = white, m = black); negative values act as light intensifiers.

// a (+) b = a + b - a*b/m. -inf absorbs, matching the convention for
// structuring-function values outside their support.
inline double lip_add(double a, double b, double m = kDefaultM) {
  if (a == -kInf || b == -kInf) return -kInf;
  return a + b - a * b / m;
}

// a (-) b = (a - b)/(1 - b/m); equals m when a == m or b == -inf.
inline double lip_sub(double a, double b, double m = kDefaultM) {
  if (a == m || b == -kInf) return m;
  return (a - b) / (1.0 - b / m);
}

// (-) a = (-a)/(1 - a/m), the LIP-additive inverse.
inline double lip_negate(double a, double m = kDefaultM) {
  return (-a) / (1.0 - a / m);
}

// lambda (*) a = m - m*(1 - a/m)^lambda.
inline double lip_scalar_mul(double lambda, double a, double m = kDefaultM) {
  return m - m * std::pow(1.0 - a / m, lambda);
}

// xi(a) = -m ln(1 - a/m), the isomorphism onto ordinary addition.
// xi(m) = +inf and xi(-inf) = -inf by convention.
inline double xi(double a, double m = kDefaultM) {
  if (a == m) return kInf;
  return -m * std::log1p(-a / m);
}

// xi_inv(u) = m(1 - exp(-u/m)); maps +/-inf to m and -inf.
inline double xi_inv(double u, double m = kDefaultM) {
  return -m * std::expm1(-u / m);
}

// Derivative of xi, used by the layer's backward pass.
inline double xi_prime(double a, double m = kDefaultM) {
  return 1.0 / (1.0 - a / m);
}

// Elementwise image variants. Binary ops require matching shapes and
// matching ceilings m; a mismatch raises config_error.
LipImage lip_add(const LipImage& a, const LipImage& b);
LipImage lip_add(const LipImage& a, double k);
LipImage lip_sub(const LipImage& a, const LipImage& b);
LipImage lip_sub(const LipImage& a, double k);
LipImage lip_negate(const LipImage& a);
LipImage lip_scalar_mul(double lambda, const LipImage& a);
Grid xi_image(const LipImage& f);
LipImage xi_inv_image(const Grid& u, double m = kDefaultM);

}  // namespace lmm
