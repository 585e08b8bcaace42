#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace baoc {

/// q-th quantile with linear interpolation between order statistics
/// (position (n-1)q in the sorted sample). Empty input returns 0.
double quantile(std::span<const double> values, double q);

inline double clip(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

/// Rounds to the nearest IEEE binary16 value, ties to even. Magnitudes that round
/// past the largest finite half (65504) become +-inf.
double round_to_half(double x);

/// binary16 bit pattern of x after round_to_half.
std::uint16_t encode_half(double x);
float decode_half(std::uint16_t bits);

/// Symmetric absmax 8-bit grid: returns the dequantized values
/// absmax * (q / 127) with q = round(x * 127 / absmax) in [-127, 127].
std::vector<double> quantize_absmax8(std::span<const double> x);

}  // namespace baoc
