#include "baoc/config_space.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace baoc {

namespace {

struct FamilyFlags {
  Family family;
  std::string_view name;
  bool adaptive, momentum, decoupled_decay, factorized;
};

constexpr FamilyFlags kFamilyTable[] = {
    {Family::adamw, "adamw", true, true, true, false},
    {Family::adam, "adam", true, true, false, false},
    {Family::adafactor, "adafactor", true, false, true, true},
    {Family::sgdwm, "sgdwm", false, true, true, false},
    {Family::sgdm, "sgdm", false, true, false, false},
    {Family::sgdw, "sgdw", false, false, true, false},
    {Family::sgd, "sgd", false, false, false, false},
};

const FamilyFlags& flags_of(Family family) {
  for (const auto& row : kFamilyTable) {
    if (row.family == family) return row;
  }
  throw InvalidConfiguration("unknown family");
}

bool valid_bits(int bits) { return bits == 32 || bits == 16 || bits == 8; }

}  // namespace

std::string_view family_name(Family family) { return flags_of(family).name; }

std::optional<Family> parse_family(std::string_view name) {
  for (const auto& row : kFamilyTable) {
    if (row.name == name) return row.family;
  }
  return std::nullopt;
}

std::string Configuration::family_label() const {
  for (const auto& row : kFamilyTable) {
    if (row.adaptive == adaptive && row.momentum == momentum && row.decoupled_decay == decoupled_decay &&
        row.factorized == factorized) {
      return std::string(row.name);
    }
  }
  // Off-grid flag combination; spell the flags out.
  std::ostringstream os;
  os << 'a' << adaptive << 'm' << momentum << 'd' << decoupled_decay << 'f' << factorized;
  return os.str();
}

std::string Configuration::key() const { return family_label() + ":" + std::to_string(bits); }

Configuration make_config(Family family, int bits) {
  const auto& row = flags_of(family);
  Configuration c{row.adaptive, row.momentum, row.decoupled_decay, row.factorized, bits};
  if (c.stateless()) c.bits = 32;
  validate(c);
  return c;
}

void validate(const Configuration& config) {
  if (!valid_bits(config.bits)) {
    throw InvalidConfiguration("state bits must be 32, 16 or 8, got " + std::to_string(config.bits));
  }
  if (config.factorized && !config.adaptive) {
    throw InvalidConfiguration("factorized configuration must be adaptive");
  }
  if (config.stateless() && config.bits != 32) {
    throw InvalidConfiguration("stateless configuration must report 32 state bits");
  }
}

BlockShape::BlockShape(std::vector<std::int64_t> dims) : dims_(std::move(dims)), param_count_(1) {
  if (dims_.empty()) throw InputError("block shape must have at least one axis");
  for (auto d : dims_) {
    if (d < 1) throw InputError("block shape extents must be positive");
    param_count_ *= d;
  }
}

std::vector<std::int64_t> BlockShape::squeezed() const {
  std::vector<std::int64_t> out;
  for (auto d : dims_) {
    if (d > 1) out.push_back(d);
  }
  return out;
}

bool BlockShape::matrix_like() const { return squeezed().size() >= 2; }

BlockShape::FactorDims BlockShape::factor_dims() const {
  auto sq = squeezed();
  if (sq.size() < 2) throw InvalidConfiguration("factorization needs two axes of extent > 1");
  FactorDims f{1, sq[sq.size() - 2], sq.back()};
  for (std::size_t i = 0; i + 2 < sq.size(); ++i) f.batch *= sq[i];
  return f;
}

ConfigSelector ConfigSelector::parse(std::string_view text) {
  ConfigSelector sel;
  auto colon = text.find(':');
  sel.family = std::string(text.substr(0, colon));
  if (!parse_family(sel.family)) {
    throw InputError("unknown optimizer family '" + sel.family + "'");
  }
  if (colon != std::string_view::npos) {
    auto rest = text.substr(colon + 1);
    int bits = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), bits);
    if (ec != std::errc{} || ptr != rest.data() + rest.size() || !valid_bits(bits)) {
      throw InputError("bad bit-width in selector '" + std::string(text) + "'");
    }
    sel.bits = bits;
  }
  return sel;
}

bool ConfigSelector::matches(const Configuration& config) const {
  if (config.family_label() != family) return false;
  return !bits || *bits == config.bits;
}

std::string ConfigSelector::str() const { return bits ? family + ":" + std::to_string(*bits) : family; }

bool matches_any(const std::vector<ConfigSelector>& selectors, const Configuration& config) {
  return std::any_of(selectors.begin(), selectors.end(), [&](const auto& s) { return s.matches(config); });
}

std::vector<Configuration> enumerate_candidates(const BlockShape& shape, const CandidatePolicy& policy) {
  std::vector<int> bits = policy.bits;
  std::sort(bits.begin(), bits.end(), std::greater<>());
  bits.erase(std::unique(bits.begin(), bits.end()), bits.end());

  std::vector<Configuration> out;
  auto push_unique = [&](const Configuration& c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  for (Family family : kAllFamilies) {
    if (std::find(policy.families.begin(), policy.families.end(), family) == policy.families.end()) continue;
    const auto& row = flags_of(family);
    if (row.factorized && !shape.matrix_like()) continue;
    if (!row.adaptive && !row.momentum) {
      push_unique(make_config(family, 32));
      continue;
    }
    for (int b : bits) push_unique(make_config(family, b));
  }
  std::stable_sort(out.begin(), out.end(), [](const Configuration& a, const Configuration& b) {
    if (a.bits != b.bits) return a.bits > b.bits;
    return a.adaptive && !b.adaptive;
  });
  return out;
}

std::uint64_t state_bytes(const Configuration& config, const BlockShape& shape) {
  validate(config);
  if (config.stateless()) return 0;
  const auto n = static_cast<std::uint64_t>(shape.param_count());
  std::uint64_t elements = 0;
  if (config.momentum) elements += n;
  if (config.adaptive) {
    if (config.factorized) {
      auto f = shape.factor_dims();
      elements += static_cast<std::uint64_t>(f.batch) * static_cast<std::uint64_t>(f.rows + f.cols);
    } else {
      elements += n;
    }
  }
  return elements * static_cast<std::uint64_t>(config.bits) / 8;
}

double aggressiveness(const Configuration& config) {
  const int b = config.stateless() ? 32 : config.bits;
  return (1.0 - config.adaptive) + (1.0 - config.momentum) + (1.0 - config.decoupled_decay) +
         static_cast<double>(config.factorized) + 32.0 / b - 1.0;
}

CostModel::CostModel(std::map<std::string, double> ratios, CostSource source)
    : ratios_(std::move(ratios)), source_(source) {
  auto base = ratios_.find("adamw:16");
  if (base == ratios_.end() || base->second != 1.0) {
    throw InputError("cost model must map adamw:16 to exactly 1.0");
  }
  for (const auto& [key, r] : ratios_) {
    if (!(r > 0.0)) throw InputError("cost ratio for " + key + " must be positive");
  }
}

double CostModel::static_ratio(const Configuration& config) {
  if (config.stateless()) return 0.4;
  if (!config.adaptive) return 0.7;
  if (config.factorized) return 1.2;
  switch (config.bits) {
    case 8: return 1.1;
    case 16: return 1.0;
    default: return 1.05;
  }
}

CostModel CostModel::static_default() {
  std::map<std::string, double> table;
  for (Family family : kAllFamilies) {
    for (int b : {32, 16, 8}) {
      auto c = make_config(family, b);
      table.emplace(c.key(), static_ratio(c));
    }
  }
  return CostModel(std::move(table), CostSource::static_table);
}

double CostModel::ratio(const Configuration& config) const {
  auto it = ratios_.find(config.key());
  if (it == ratios_.end()) throw InputError("cost model has no ratio for " + config.key());
  return it->second;
}

}  // namespace baoc
