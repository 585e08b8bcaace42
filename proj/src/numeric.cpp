#include "baoc/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace baoc {

double quantile(std::span<const double> values, double q) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = clip(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {
constexpr double kHalfMax = 65504.0;
constexpr double kHalfMinNormal = 6.103515625e-05;  // 2^-14
}  // namespace

double round_to_half(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  const double a = std::fabs(x);
  double quantum;
  if (a < kHalfMinNormal) {
    quantum = std::ldexp(1.0, -24);
  } else {
    int e = 0;
    std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
    quantum = std::ldexp(1.0, e - 1 - 10);
  }
  const double r = std::nearbyint(x / quantum) * quantum;
  if (std::fabs(r) > kHalfMax) return std::copysign(std::numeric_limits<double>::infinity(), x);
  return r;
}

std::uint16_t encode_half(double x) {
  if (std::isnan(x)) return 0x7E00;
  const double r = round_to_half(x);
  const std::uint16_t sign = std::signbit(r) ? 0x8000 : 0;
  const double a = std::fabs(r);
  if (std::isinf(a)) return sign | 0x7C00;
  if (a == 0.0) return sign;
  if (a < kHalfMinNormal) {
    return sign | static_cast<std::uint16_t>(std::ldexp(a, 24));
  }
  int e = 0;
  const double f = std::frexp(a, &e);  // a = f * 2^e
  const int exponent = e - 1;
  const auto mant = static_cast<std::uint16_t>((f * 2.0 - 1.0) * 1024.0);
  return sign | static_cast<std::uint16_t>((exponent + 15) << 10) | mant;
}

float decode_half(std::uint16_t bits) {
  const bool neg = bits & 0x8000;
  const int exponent = (bits >> 10) & 0x1F;
  const int mant = bits & 0x3FF;
  double v;
  if (exponent == 0) {
    v = std::ldexp(static_cast<double>(mant), -24);
  } else if (exponent == 31) {
    v = mant ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else {
    v = std::ldexp(1.0 + mant / 1024.0, exponent - 15);
  }
  return static_cast<float>(neg ? -v : v);
}

std::vector<double> quantize_absmax8(std::span<const double> x) {
  double absmax = 0.0;
  for (double v : x) absmax = std::max(absmax, std::fabs(v));
  std::vector<double> out(x.size(), 0.0);
  if (absmax == 0.0) return out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double q = clip(std::nearbyint(x[i] * 127.0 / absmax), -127.0, 127.0);
    out[i] = absmax * (q / 127.0);
  }
  return out;
}

}  // namespace baoc
