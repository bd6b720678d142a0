#include "lmm/lip.hpp"

#include <string>

#include "lmm/errors.hpp"

namespace lmm {

namespace {

void check_compatible(const LipImage& a, const LipImage& b) {
  if (a.m != b.m) {
    throw config_error("LIP ceiling mismatch: " + std::to_string(a.m) + " vs " +
                       std::to_string(b.m));
  }
  if (!a.grid.same_shape(b.grid)) {
    throw config_error("image shape mismatch");
  }
}

template <typename Fn>
LipImage elementwise(const LipImage& a, Fn&& fn) {
  LipImage out(a.width(), a.height(), 0.0, a.m);
  for (size_t i = 0; i < a.grid.size(); ++i) out.grid.data[i] = fn(a.grid.data[i]);
  return out;
}

}  // namespace

LipImage lip_add(const LipImage& a, const LipImage& b) {
  check_compatible(a, b);
  LipImage out(a.width(), a.height(), 0.0, a.m);
  for (size_t i = 0; i < a.grid.size(); ++i)
    out.grid.data[i] = lip_add(a.grid.data[i], b.grid.data[i], a.m);
  return out;
}

LipImage lip_add(const LipImage& a, double k) {
  return elementwise(a, [&](double v) { return lip_add(v, k, a.m); });
}

LipImage lip_sub(const LipImage& a, const LipImage& b) {
  check_compatible(a, b);
  LipImage out(a.width(), a.height(), 0.0, a.m);
  for (size_t i = 0; i < a.grid.size(); ++i)
    out.grid.data[i] = lip_sub(a.grid.data[i], b.grid.data[i], a.m);
  return out;
}

LipImage lip_sub(const LipImage& a, double k) {
  return elementwise(a, [&](double v) { return lip_sub(v, k, a.m); });
}

LipImage lip_negate(const LipImage& a) {
  return elementwise(a, [&](double v) { return lip_negate(v, a.m); });
}

LipImage lip_scalar_mul(double lambda, const LipImage& a) {
  return elementwise(a, [&](double v) { return lip_scalar_mul(lambda, v, a.m); });
}

Grid xi_image(const LipImage& f) {
  Grid out(f.width(), f.height());
  for (size_t i = 0; i < f.grid.size(); ++i) out.data[i] = xi(f.grid.data[i], f.m);
  return out;
}

LipImage xi_inv_image(const Grid& u, double m) {
  LipImage out(u.width, u.height, 0.0, m);
  for (size_t i = 0; i < u.size(); ++i) out.grid.data[i] = xi_inv(u.data[i], m);
  return out;
}

}  // namespace lmm
