#include <doctest.h>

#include "baoc/partitioner.hpp"
#include "baoc/rng.hpp"

using namespace baoc;

namespace {

RiskSignals sig(double s_A, double s_M = 0.5, double C = 0.2, double F = 0.5) {
  RiskSignals s;
  s.s_A = s_A;
  s.s_M = s_M;
  s.C_tilde = C;
  s.s_F = F;
  return s;
}

StructuralUnit unit(std::int64_t id, std::int64_t params, std::int64_t layer, std::int64_t pos = 0,
                    std::string kind = "mlp") {
  StructuralUnit u;
  u.id = id;
  u.name = "u" + std::to_string(id);
  u.shape = BlockShape({params});
  u.module_kind = std::move(kind);
  u.layer_index = layer;
  u.position = pos;
  return u;
}

std::int64_t total(const std::vector<StructuralUnit>& us) {
  std::int64_t t = 0;
  for (const auto& u : us) t += u.shape.param_count();
  return t;
}

using Blocks = std::vector<std::vector<std::int64_t>>;

}  // namespace

TEST_CASE("pairwise difference") {
  const std::array<double, 4> unit_w{1, 1, 1, 1};
  CHECK(pairwise_difference({0.3, 0.2, 0.1, 0.0}, {0.3, 0.2, 0.1, 0.0}, unit_w) == 0.0);
  CHECK(pairwise_difference({0.9, 0.1, 0, 0}, {0.1, 0.1, 0, 0}, unit_w) == doctest::Approx(0.8));
  CHECK(pairwise_difference({0.9, 0.1, 0, 0}, {0.1, 0.1, 0, 0}, {0, 1, 1, 1}) == 0.0);
  const auto z = partition_metrics(sig(0.4, 0.3, 2.5, 0.7));
  CHECK(z == MetricVector{0.4, 0.3, 1.0, 0.7});
}

TEST_CASE("two clusters split at the boundary") {
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 8; ++i) {
    us.push_back(unit(i, 1000, i));
    ss.push_back(sig(i < 4 ? 0.1 : 0.9));
  }
  const auto r = partition(us, ss, {}, total(us));
  CHECK(r.tau == doctest::Approx(0.8));
  CHECK(r.blocks == Blocks{{0, 1, 2, 3}, {4, 5, 6, 7}});
}

TEST_CASE("identical signals give one block") {
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 8; ++i) {
    us.push_back(unit(i, 1000, i, 0, i % 2 ? "attn" : "mlp"));
    ss.push_back(sig(0.4));
  }
  const auto r = partition(us, ss, {}, total(us));
  CHECK(r.blocks.size() == 1);
  CHECK(r.blocks[0].size() == 8);
}

TEST_CASE("a sub-n_min unit joins the closer neighbour") {
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 3; ++i) {
    us.push_back(unit(i, 1000, i));
    ss.push_back(sig(0.1));
  }
  us.push_back(unit(3, 10, 3));
  ss.push_back(sig(0.3));
  for (int i = 4; i < 7; ++i) {
    us.push_back(unit(i, 1000, i));
    ss.push_back(sig(0.9));
  }
  auto r = partition(us, ss, {}, total(us));
  CHECK(r.blocks == Blocks{{0, 1, 2, 3}, {4, 5, 6}});
  ss[3] = sig(0.7);
  r = partition(us, ss, {}, total(us));
  CHECK(r.blocks == Blocks{{0, 1, 2}, {3, 4, 5, 6}});
  ss[3] = sig(0.5);  // equidistant: the preceding block wins
  r = partition(us, ss, {}, total(us));
  CHECK(r.blocks == Blocks{{0, 1, 2, 3}, {4, 5, 6}});
}

TEST_CASE("zero weights give one block") {
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 6; ++i) {
    us.push_back(unit(i, 500, i));
    ss.push_back(sig(i * 0.15, 1 - i * 0.1));
  }
  PartitionParams p;
  p.weights = {0, 0, 0, 0};
  CHECK(partition(us, ss, p, total(us)).blocks.size() == 1);
}

TEST_CASE("units are ordered by layer then position") {
  std::vector<StructuralUnit> us{unit(10, 1000, 1, 1), unit(11, 1000, 0, 0), unit(12, 1000, 1, 0), unit(13, 1000, 0, 1)};
  std::vector<RiskSignals> ss{sig(0.9), sig(0.1), sig(0.9), sig(0.1)};
  const auto r = partition(us, ss, {}, total(us));
  CHECK(r.blocks == Blocks{{11, 13}, {12, 10}});
}

TEST_CASE("fixed tau") {
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 4; ++i) {
    us.push_back(unit(i, 1000, i));
    ss.push_back(sig(0.2 * i));
  }
  PartitionParams p;
  p.tau_policy = TauPolicy::fixed;
  p.tau_value = 0.15;
  CHECK(partition(us, ss, p, total(us)).blocks.size() == 4);
  p.tau_value = 0.9;
  CHECK(partition(us, ss, p, total(us)).blocks.size() == 1);
}

TEST_CASE("invalid input") {
  std::vector<StructuralUnit> us{unit(0, 10, 0), unit(0, 10, 1)};
  std::vector<RiskSignals> ss{sig(0), sig(1)};
  CHECK_THROWS_AS(partition(us, ss, {}, 20), InputError);
  us[1].id = 1;
  ss.pop_back();
  CHECK_THROWS_AS(partition(us, ss, {}, 20), InputError);
  CHECK_THROWS_AS(partition({}, {}, {}, 0), InputError);
  PartitionParams p;
  p.alpha = 0.0;
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("random fixtures: contiguous cover and minimum size") {
  CounterRng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(24);
    std::vector<StructuralUnit> us;
    std::vector<RiskSignals> ss;
    for (std::size_t i = 0; i < n; ++i) {
      us.push_back(unit(static_cast<std::int64_t>(i), 1 + static_cast<std::int64_t>(rng.below(5000)),
                        static_cast<std::int64_t>(i / 3), static_cast<std::int64_t>(i % 3), rng.below(2) ? "attn" : "mlp"));
      ss.push_back(sig(rng.uniform(), rng.uniform(), rng.uniform() * 2, rng.uniform()));
    }
    const auto t = total(us);
    for (double alpha : {0.001, 0.01, 0.05, 0.1, 0.2, 0.5}) {
      PartitionParams p;
      p.alpha = alpha;
      const auto r = partition(us, ss, p, t);
      std::vector<std::int64_t> flat;
      for (const auto& b : r.blocks) {
        CHECK_FALSE(b.empty());
        flat.insert(flat.end(), b.begin(), b.end());
        if (r.blocks.size() > 1) {
          std::int64_t size = 0;
          for (auto id : b) size += us[static_cast<std::size_t>(id)].shape.param_count();
          CHECK(static_cast<double>(size) >= r.n_min);
        }
      }
      std::vector<std::int64_t> expect(n);
      for (std::size_t i = 0; i < n; ++i) expect[i] = static_cast<std::int64_t>(i);
      CHECK(flat == expect);
    }
  }
}

TEST_CASE("block count is non-increasing in alpha on the cluster fixtures") {
  const double alphas[] = {0.001, 0.01, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.9};
  auto sweep = [&](const std::vector<StructuralUnit>& us, const std::vector<RiskSignals>& ss) {
    std::size_t prev = us.size() + 1;
    for (double a : alphas) {
      PartitionParams p;
      p.alpha = a;
      const auto n = partition(us, ss, p, total(us)).blocks.size();
      CHECK(n <= prev);
      prev = n;
    }
    CHECK(prev == 1);
  };
  for (int clusters = 1; clusters <= 4; ++clusters) {
    std::vector<StructuralUnit> us;
    std::vector<RiskSignals> ss;
    for (int i = 0; i < 12; ++i) {
      us.push_back(unit(i, 200 + 150 * (i % 5), i));
      ss.push_back(sig(0.1 + 0.8 * (i * clusters / 12) / std::max(1, clusters - 1)));
    }
    sweep(us, ss);
  }
}

TEST_CASE("larger alpha can add a block") {
  // Greedy merging is path dependent: with the larger n_min, unit 6 is absorbed to
  // the right instead of the left, and complete linkage then keeps 5 apart.
  const std::int64_t sizes[] = {4546, 2839, 4437, 2424, 170, 4455, 1049, 2962, 2738, 2271};
  const std::int64_t layers[] = {0, 0, 0, 1, 1, 1, 2, 2, 2, 3};
  const char* kinds[] = {"attn", "attn", "attn", "mlp", "mlp", "attn", "attn", "mlp", "attn", "attn"};
  const double z[10][4] = {{0.55, 0.71, 1.00, 0.98}, {0.29, 0.96, 1.00, 0.51}, {0.74, 0.12, 1.00, 0.64},
                           {0.90, 0.80, 1.00, 0.10}, {0.71, 0.86, 0.66, 0.09}, {0.16, 0.17, 1.00, 0.08},
                           {0.49, 0.87, 0.64, 0.71}, {0.97, 0.33, 1.00, 0.37}, {0.46, 0.10, 1.00, 0.50},
                           {0.70, 0.79, 1.00, 0.34}};
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 10; ++i) {
    us.push_back(unit(i, sizes[i], layers[i], i % 3, kinds[i]));
    ss.push_back(sig(z[i][0], z[i][1], z[i][2], z[i][3]));
  }
  PartitionParams fine, coarse;
  fine.alpha = 0.01;
  coarse.alpha = 0.05;
  CHECK(partition(us, ss, fine, total(us)).blocks == Blocks{{0, 1}, {2}, {3, 4}, {5, 6}, {7, 8, 9}});
  CHECK(partition(us, ss, coarse, total(us)).blocks == Blocks{{0, 1}, {2}, {3, 4}, {5}, {6, 7}, {8, 9}});
}
