#include "baoc/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "baoc/numeric.hpp"

namespace baoc {

void PartitionParams::validate() const {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("partition weights must be non-negative");
  }
  if (tau_policy == TauPolicy::fixed && !(tau_value >= 0.0)) throw InputError("tau must be non-negative");
}

MetricVector partition_metrics(const RiskSignals& s) { return {s.s_A, s.s_M, std::min(s.C_tilde, 1.0), s.s_F}; }

double pairwise_difference(const MetricVector& a, const MetricVector& b, const std::array<double, 4>& weights) {
  double d = 0.0;
  for (std::size_t k = 0; k < 4; ++k) d = std::max(d, weights[k] * std::fabs(a[k] - b[k]));
  return d;
}

namespace {

struct Range {
  std::size_t begin;  // positions in the ordered unit list
  std::size_t end;
};

class Partitioner {
 public:
  Partitioner(std::vector<std::int64_t> sizes, std::vector<std::vector<double>> delta, double tau, double n_min)
      : sizes_(std::move(sizes)), delta_(std::move(delta)), tau_(tau), n_min_(n_min) {}

  // A zero difference never separates, even when the quartile itself is zero.
  bool big(double d) const { return d >= tau_ && d > 0.0; }

  double size(const Range& r) const {
    double s = 0.0;
    for (auto i = r.begin; i < r.end; ++i) s += static_cast<double>(sizes_[i]);
    return s;
  }

  // Complete linkage: largest unit-to-unit difference across the two blocks.
  double between(const Range& a, const Range& b) const {
    double d = 0.0;
    for (auto i = a.begin; i < a.end; ++i) {
      for (auto j = b.begin; j < b.end; ++j) d = std::max(d, delta_[i][j]);
    }
    return d;
  }

  bool small(const Range& r) const { return size(r) < n_min_; }

  // Leftmost undersized block goes into the closer neighbour (ties: preceding).
  void merge_small(std::vector<Range>& blocks) const {
    for (;;) {
      if (blocks.size() < 2) return;
      auto it = std::find_if(blocks.begin(), blocks.end(), [&](const Range& r) { return small(r); });
      if (it == blocks.end()) return;
      const auto k = static_cast<std::size_t>(it - blocks.begin());
      bool into_prev;
      if (k == 0) {
        into_prev = false;
      } else if (k + 1 == blocks.size()) {
        into_prev = true;
      } else {
        into_prev = between(blocks[k - 1], blocks[k]) <= between(blocks[k], blocks[k + 1]);
      }
      if (into_prev) {
        blocks[k - 1].end = blocks[k].end;
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        blocks[k + 1].begin = blocks[k].begin;
        blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
  }

  std::vector<Range> form(const std::vector<Range>& blocks) const {
    std::vector<Range> out{blocks.front()};
    for (std::size_t k = 1; k < blocks.size(); ++k) {
      auto& last = out.back();
      if (big(between(last, blocks[k])) && !small(last) && !small(blocks[k])) {
        out.push_back(blocks[k]);
      } else {
        last.end = blocks[k].end;
      }
    }
    return out;
  }

  std::vector<Range> split_internal(const std::vector<Range>& blocks) const {
    std::vector<Range> out;
    for (const auto& b : blocks) {
      Range rest = b;
      for (auto i = b.begin + 1; i < b.end; ++i) {
        const Range left{rest.begin, i}, right{i, b.end};
        if (big(delta_[i - 1][i]) && !small(left) && !small(right)) {
          out.push_back(left);
          rest.begin = i;
        }
      }
      out.push_back(rest);
    }
    return out;
  }

 private:
  std::vector<std::int64_t> sizes_;
  std::vector<std::vector<double>> delta_;
  double tau_;
  double n_min_;
};

}  // namespace

PartitionResult partition(const std::vector<StructuralUnit>& units, const std::vector<RiskSignals>& signals,
                          const PartitionParams& params, std::int64_t total_params) {
  if (units.empty()) throw InputError("partition needs at least one unit");
  if (units.size() != signals.size()) throw InputError("signals are required for every unit");
  params.validate();
  {
    std::set<std::int64_t> ids;
    for (const auto& u : units) {
      if (!ids.insert(u.id).second) throw InputError("duplicate unit id " + std::to_string(u.id));
    }
  }

  std::vector<std::size_t> order(units.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return std::tie(units[a].layer_index, units[a].position) < std::tie(units[b].layer_index, units[b].position);
  });

  const std::size_t n = units.size();
  std::vector<MetricVector> z(n);
  std::vector<std::int64_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = partition_metrics(signals[order[i]]);
    sizes[i] = units[order[i]].shape.param_count();
  }
  std::vector<std::vector<double>> delta(n, std::vector<double>(n, 0.0));
  std::vector<double> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      delta[i][j] = delta[j][i] = pairwise_difference(z[i], z[j], params.weights);
      all.push_back(delta[i][j]);
    }
  }

  PartitionResult result;
  result.n_min = params.alpha * static_cast<double>(total_params);
  if (params.tau_policy == TauPolicy::fixed) {
    result.tau = params.tau_value;
  } else {
    result.tau = all.empty() ? 0.0 : quantile(all, 0.75);
  }

  auto emit = [&](const std::vector<Range>& blocks) {
    for (const auto& r : blocks) {
      std::vector<std::int64_t> ids;
      for (auto i = r.begin; i < r.end; ++i) ids.push_back(units[order[i]].id);
      result.blocks.push_back(std::move(ids));
    }
    return result;
  };

  if (static_cast<double>(total_params) < result.n_min || n == 1) return emit({Range{0, n}});

  const Partitioner p(sizes, delta, result.tau, result.n_min);

  // Candidate boundaries: structural changes and large adjacent differences.
  std::vector<Range> blocks;
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const auto& a = units[order[i - 1]];
    const auto& b = units[order[i]];
    if (a.layer_index != b.layer_index || a.module_kind != b.module_kind || p.big(delta[i - 1][i])) {
      blocks.push_back({start, i});
      start = i;
    }
  }
  blocks.push_back({start, n});

  p.merge_small(blocks);
  blocks = p.form(blocks);
  blocks = p.split_internal(blocks);
  p.merge_small(blocks);
  return emit(blocks);
}

}  // namespace baoc
