#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "baoc/common.hpp"

namespace baoc {

/// Optimizer families in the default candidate grid.
enum class Family { adamw, adam, adafactor, sgdwm, sgdm, sgdw, sgd };

inline constexpr Family kAllFamilies[] = {Family::adamw, Family::adam, Family::adafactor, Family::sgdwm,
                                          Family::sgdm,  Family::sgdw, Family::sgd};

std::string_view family_name(Family family);
std::optional<Family> parse_family(std::string_view name);

/// Mechanism switches plus state bit-width. A configuration with neither adaptive
/// scaling nor momentum owns no state; its bit-width is pinned to 32.
struct Configuration {
  bool adaptive = true;
  bool momentum = true;
  bool decoupled_decay = true;
  bool factorized = false;
  int bits = 32;

  bool stateless() const { return !adaptive && !momentum; }
  /// Short reporting name derived from the flags ("adamw", "sgdm", ...).
  std::string family_label() const;
  /// "family:bits", the key used by cost tables and CLI selectors.
  std::string key() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

Configuration make_config(Family family, int bits);

/// Throws InvalidConfiguration when bits is not one of {32,16,8}, when a factorized
/// configuration is not adaptive, or when a stateless configuration is not 32-bit.
void validate(const Configuration& config);

/// Tensor extents of one parameter block.
class BlockShape {
 public:
  BlockShape() : dims_{1}, param_count_{1} {}
  explicit BlockShape(std::vector<std::int64_t> dims);

  const std::vector<std::int64_t>& dims() const { return dims_; }
  std::int64_t param_count() const { return param_count_; }

  /// Extents with the size-1 axes removed.
  std::vector<std::int64_t> squeezed() const;
  /// True when at least two axes have extent > 1 (factorization is possible).
  bool matrix_like() const;

  /// Factor layout over the two trailing non-degenerate axes:
  /// {leading matrices, rows, cols}. Only valid when matrix_like().
  struct FactorDims {
    std::int64_t batch;
    std::int64_t rows;
    std::int64_t cols;
  };
  FactorDims factor_dims() const;

  friend bool operator==(const BlockShape&, const BlockShape&) = default;

 private:
  std::vector<std::int64_t> dims_;
  std::int64_t param_count_;
};

struct CandidatePolicy {
  std::vector<int> bits{32, 16, 8};
  std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
};

/// Family-with-optional-bits pattern, e.g. "adamw:8" or "sgd".
struct ConfigSelector {
  std::string family;
  std::optional<int> bits;

  static ConfigSelector parse(std::string_view text);
  bool matches(const Configuration& config) const;
  std::string str() const;

  friend bool operator==(const ConfigSelector&, const ConfigSelector&) = default;
};

bool matches_any(const std::vector<ConfigSelector>& selectors, const Configuration& config);

/// Candidate grid for a block, ordered conservative-first: descending bits, adaptive
/// families before non-adaptive ones. Stateless families appear once (at 32 bits),
/// factorized families only on matrix-like shapes.
std::vector<Configuration> enumerate_candidates(const BlockShape& shape, const CandidatePolicy& policy = {});

/// Persistent optimizer-state bytes: one tensor per moment, row+column factors for a
/// factorized second moment, each element costing bits/8 bytes.
std::uint64_t state_bytes(const Configuration& config, const BlockShape& shape);

/// Compression penalty (1-y_a)+(1-y_m)+(1-y_d)+y_f+32/b-1.
double aggressiveness(const Configuration& config);

enum class CostSource { static_table, measured };

/// Update-time ratios relative to AdamW with 16-bit states.
class CostModel {
 public:
  CostModel(std::map<std::string, double> ratios, CostSource source);

  /// Placeholder table used when no measurement is available.
  static CostModel static_default();
  /// Ratio the static table assigns to a configuration.
  static double static_ratio(const Configuration& config);

  /// Throws InputError when the table has no entry for the configuration.
  double ratio(const Configuration& config) const;

  const std::map<std::string, double>& ratios() const { return ratios_; }
  CostSource source() const { return source_; }

 private:
  std::map<std::string, double> ratios_;
  CostSource source_;
};

}  // namespace baoc
