// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "baoc/allocator.hpp"
#include "baoc/partitioner.hpp"
#include "baoc/pipeline.hpp"
#include "baoc/simulator.hpp"
#include "random_problems.hpp"

using namespace baoc;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  std::string why;
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why = what;
    ok = ok && cond;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Criteria 1, 2 and the exclusion half of 11 share the random suite.
struct SuiteResult {
  Check oracle, certificate, exclusions;
  double seconds = 0.0;
  int feasible = 0;
};

bool is_excluded(const ProblemBlock& b, const Configuration& c) {
  for (const auto& e : b.excluded) {
    if (e == c) return true;
  }
  return false;
}

SuiteResult random_suite() {
  SuiteResult r;
  const auto t0 = Clock::now();
  CounterRng rng(stream_key({2024, 1}));
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(10);
    const auto p = testing::random_problem(rng, n, 8);
    const auto exact = solve_exact(p);
    const auto brute = solve_bruteforce(p);
    const std::string tag = "instance " + std::to_string(trial) + ": ";
    r.oracle.expect(exact.status == brute.status, tag + "feasibility differs");
    if (exact.status != SolveStatus::optimal || brute.status != SolveStatus::optimal) continue;
    ++r.feasible;
    r.oracle.expect(std::fabs(exact.objective - brute.objective) <= 1e-9, tag + "objectives differ");

    for (const auto* s : {&exact, &brute}) {
      const auto rep = verify(p, *s);
      r.certificate.expect(rep.ok, tag + "verify() rejected the optimum");
      std::uint64_t mem = 0;
      double time = 0.0;
      std::set<std::int64_t> ids;
      r.certificate.expect(s->choice.size() == p.blocks.size(), tag + "choice does not cover every block");
      for (std::size_t i = 0; i < s->choice.size(); ++i) {
        const auto& cand = p.blocks[i].candidates[s->choice[i]];
        mem += cand.mem_bytes;
        time += cand.time_ratio;
        ids.insert(p.blocks[i].id);
        r.exclusions.expect(!is_excluded(p.blocks[i], cand.config), tag + "excluded configuration selected");
      }
      time /= static_cast<double>(p.blocks.size());
      r.certificate.expect(ids.size() == p.blocks.size(), tag + "a block is assigned twice");
      r.certificate.expect(mem == rep.total_mem && mem <= p.mem_budget, tag + "memory budget exceeded");
      r.certificate.expect(time <= p.time_budget + kTimeSlack, tag + "time budget exceeded");
    }
  }
  r.seconds = seconds_since(t0);
  r.oracle.expect(r.seconds < 60.0, "suite took " + std::to_string(r.seconds) + " s");
  return r;
}

Check anchors() {
  Check c;
  c.expect(geometry_signal(std::log(2.0)) == 0.0, "geometry_signal(log 2) != 0");
  c.expect(geometry_signal(std::log(10.0)) == 1.0, "geometry_signal(log 10) != 1");
  c.expect(momentum_need(0.2, 0.0, {}, false) == 0.0, "s_rho(0.2) != 0");
  c.expect(momentum_need(0.6, 0.0, {}, false) == 1.0, "s_rho(0.6) != 1");
  c.expect(distortion_signal(0.0) == 0.0, "C~(0) != 0");
  c.expect(std::fabs(precision_risk(1.0)) <= 1e-9, "l_Q(1) outside [-1e-9, 1e-9]");
  return c;
}

Check agg() {
  Check c;
  const std::map<Family, std::array<double, 3>> table{
      {Family::adamw, {0, 1, 3}}, {Family::adam, {1, 2, 4}}, {Family::adafactor, {2, 3, 5}},
      {Family::sgdwm, {1, 2, 4}}, {Family::sgdm, {2, 3, 5}}, {Family::sgdw, {2, 2, 2}},
      {Family::sgd, {3, 3, 3}}};
  c.expect(aggressiveness(make_config(Family::adamw, 32)) == 0.0, "Agg(AdamW32) != 0");
  c.expect(aggressiveness(make_config(Family::adamw, 8)) == 3.0, "Agg(AdamW8) != 3");
  c.expect(aggressiveness(make_config(Family::sgd, 32)) == 3.0, "Agg(SGD) != 3");
  const auto grid = enumerate_candidates(BlockShape({16, 16}));
  c.expect(grid.size() == 17, "grid size " + std::to_string(grid.size()));
  for (const auto& cfg : grid) {
    const double expect = (cfg.adaptive ? 0 : 1) + (cfg.momentum ? 0 : 1) + (cfg.decoupled_decay ? 0 : 1) +
                          (cfg.factorized ? 1 : 0) + 32.0 / cfg.bits - 1.0;
    c.expect(aggressiveness(cfg) == expect, cfg.key() + " differs from the term-by-term sum");
    const auto f = parse_family(cfg.family_label());
    const int k = cfg.bits == 32 ? 0 : cfg.bits == 16 ? 1 : 2;
    c.expect(f && table.at(*f)[k] == aggressiveness(cfg), cfg.key() + " differs from the table");
  }
  return c;
}

std::vector<BlockSpec> three_specs() {
  return {make_block_spec(0, "vec", {1000}, 0.01, 1), make_block_spec(1, "mat", {100, 200}, 0.01, 1),
          make_block_spec(2, "sq", {64, 64}, 0.01, 1)};
}

Check state_mem() {
  Check c;
  const auto specs = three_specs();
  c.expect(adamw16_total_bytes(specs) == 100384, "AdamW16 total != 100384");
  c.expect(state_bytes(make_config(Family::adafactor, 32), BlockShape({100, 200})) == 1200, "Adafactor32 != 1200");
  for (const auto& s : specs) c.expect(state_bytes(make_config(Family::sgd, 32), s.shape) == 0, "SGD state != 0");
  BuildOptions opt;
  opt.budget_ratio = 0.5;
  const std::vector<RiskSignals> sig(3, RiskSignals{0.5, 0.5, 0.5, 0.5, {{32, 0.0}, {16, 0.0}, {8, 0.0}}});
  const auto p = build_problem(specs, sig, {}, CostModel::static_default(), opt);
  c.expect(p.mem_budget == 50192, "budget at 0.5 is " + std::to_string(p.mem_budget));
  return c;
}

Check closed_forms() {
  Check c;
  c.expect(std::fabs(distortion(std::vector<double>{1, 4}, std::vector<double>{1, 1}) - 1.0 / 3.0) <= 1e-6,
           "distortion");
  Matrix outer(3, 4);
  const double a[] = {0.5, 2.0, 3.0}, b[] = {1.0, 0.1, 7.0, 2.5};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) outer(i, j) = a[i] * b[j];
  c.expect(structure_residual(outer) < 1e-9, "outer product residual");
  Matrix id(2, 2);
  id(0, 0) = id(1, 1) = 1.0;
  c.expect(std::fabs(structure_residual(id) - 1.0 / std::sqrt(2.0)) <= 1e-9, "identity residual");
  c.expect(std::fabs(snr(std::vector<double>{3, 4}, std::vector<double>{2, 3}) - 5.0) <= 1e-9, "snr");
  DiagnosticsParams params;
  params.beta_rho = 0.9;
  auto st = make_state(make_block_spec(0, "v", {3}, 1.0, 0), params);
  const std::vector<double> g{1, -2, 0.5};
  update(st, g);
  update(st, g);
  c.expect(std::fabs(st.rho_bar - 0.1) <= 1e-12, "rho_bar after two identical gradients");
  return c;
}

RawMetrics one_block_metrics(const StreamProfile& p) {
  TraceHeader h;
  h.sampling_ratio = 0.25;
  h.blocks.push_back(make_block_spec(0, "b", {64, 64}, 0.25, p.seed));
  return collect_metrics(generate_stream(h, {p}, 500), DiagnosticsParams{}, std::nullopt).metrics[0];
}

Check monotone_control(double& secs) {
  Check c;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double prev = -INFINITY;
    for (double spread : {0.0, 1.0, 2.0, 3.0}) {
      StreamProfile p;
      p.seed = seed;
      p.noise_scale_spread = spread;
      const double A = one_block_metrics(p).A;
      c.expect(A >= prev, "A decreased at spread " + std::to_string(spread) + ", seed " + std::to_string(seed));
      prev = A;
    }
    prev = -INFINITY;
    for (double q : {0.0, 0.5, 0.9, 1.0}) {
      StreamProfile p;
      p.seed = seed;
      p.drift_strength = 1.0;
      p.drift_persistence = q;
      const double rho = one_block_metrics(p).rho_bar;
      c.expect(rho >= prev, "rho_bar decreased at persistence " + std::to_string(q) + ", seed " + std::to_string(seed));
      prev = rho;
    }
  }
  secs = seconds_since(t0);
  c.expect(secs < 60.0, "took " + std::to_string(secs) + " s");
  return c;
}

// Two equal blocks whose signals come from the simulator; the second copies the
// first except s_A. The budget fits one AdamW16 and one SGDM16 but not two AdamW16.
Check exchange(double& secs) {
  Check c;
  const auto t0 = Clock::now();
  const auto adamw = make_config(Family::adamw, 16);
  const auto sgdm = make_config(Family::sgdm, 16);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TraceHeader h;
    h.sampling_ratio = 0.05;
    h.blocks.push_back(make_block_spec(0, "a", {64, 64}, 0.05, seed));
    h.blocks.push_back(make_block_spec(1, "b", {64, 64}, 0.05, seed));
    StreamProfile p;
    p.seed = seed;
    p.drift_strength = 0.5;
    p.drift_persistence = 0.5;
    p.noise_scale_spread = 1.0;
    p.rank1_mix = 0.5;
    const auto run = collect_metrics(generate_stream(h, {p, p}, 100), DiagnosticsParams{}, std::nullopt);
    const std::size_t hi = seed % 2;
    std::vector<RiskSignals> sig(2, make_signals(run.metrics[0]));
    sig[hi].s_A = 0.9;
    sig[1 - hi].s_A = 0.1;

    BuildOptions opt;
    opt.budget_ratio = 0.75;
    opt.policy.bits = {16};
    opt.policy.families = {Family::adamw, Family::sgdm};
    const auto prob = build_problem(h.blocks, sig, {}, CostModel::static_default(), opt);
    const auto two_adaptive = 2 * state_bytes(adamw, h.blocks[0].shape);
    const auto one_adaptive = state_bytes(adamw, h.blocks[0].shape) + state_bytes(sgdm, h.blocks[0].shape);
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    c.expect(one_adaptive <= prob.mem_budget && two_adaptive > prob.mem_budget, tag + "budget does not admit exactly one");
    const auto exact = solve_exact(prob);
    const auto brute = solve_bruteforce(prob);
    c.expect(exact.status == SolveStatus::optimal, tag + "infeasible");
    if (exact.status != SolveStatus::optimal) continue;
    c.expect(exact.choice == brute.choice, tag + "brute force disagrees");
    const auto plan = exact.assignment(prob);
    c.expect(plan.at(static_cast<std::int64_t>(hi)) == adamw, tag + "high-s_A block did not get AdamW16");
    c.expect(plan.at(static_cast<std::int64_t>(1 - hi)) == sgdm, tag + "low-s_A block did not get SGDM16");
  }
  secs = seconds_since(t0);
  c.expect(secs < 30.0, "took " + std::to_string(secs) + " s");
  return c;
}

Check budget_sweep() {
  Check c;
  TraceHeader h;
  h.sampling_ratio = 0.02;
  std::vector<StreamProfile> ps;
  for (int i = 0; i < 12; ++i) {
    std::vector<std::int64_t> dims = i % 3 == 0 ? std::vector<std::int64_t>{2000} : std::vector<std::int64_t>{48 + 8 * i, 64};
    h.blocks.push_back(make_block_spec(i, "b" + std::to_string(i), dims, 0.02, 77));
    StreamProfile p;
    p.seed = 77;
    p.noise_scale_spread = 0.3 * i;
    p.drift_strength = 0.25 * (i % 5);
    p.drift_persistence = (i % 4) / 3.0;
    p.rank1_mix = (i % 3) / 2.0;
    ps.push_back(p);
  }
  const auto metrics = collect_metrics(generate_stream(h, ps, 150), DiagnosticsParams{}, std::nullopt);
  double prev = INFINITY;
  for (double rho : {0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.2}) {
    RunConfig cfg;
    cfg.budget_ratio = rho;
    const auto run = allocate_from_metrics(cfg, metrics);
    const std::string tag = "rho " + std::to_string(rho) + ": ";
    c.expect(run.solution.status == SolveStatus::optimal, tag + "infeasible");
    if (run.solution.status != SolveStatus::optimal) continue;
    c.expect(run.solution.objective <= prev, tag + "objective increased");
    prev = run.solution.objective;
  }
  return c;
}

StructuralUnit unit(std::int64_t id, std::int64_t params, std::int64_t layer) {
  StructuralUnit u;
  u.id = id;
  u.name = "u" + std::to_string(id);
  u.shape = BlockShape({params});
  u.module_kind = "mlp";
  u.layer_index = layer;
  return u;
}

RiskSignals sig(double s_A) { return RiskSignals{s_A, 0.5, 0.2, 0.5, {}}; }

std::int64_t total(const std::vector<StructuralUnit>& us) {
  std::int64_t t = 0;
  for (const auto& u : us) t += u.shape.param_count();
  return t;
}

Check partitioner() {
  Check c;
  using Blocks = std::vector<std::vector<std::int64_t>>;
  std::vector<StructuralUnit> us;
  std::vector<RiskSignals> ss;
  for (int i = 0; i < 8; ++i) {
    us.push_back(unit(i, 1000, i));
    ss.push_back(sig(i < 4 ? 0.1 : 0.9));
  }
  c.expect(partition(us, ss, {}, total(us)).blocks == Blocks{{0, 1, 2, 3}, {4, 5, 6, 7}}, "two clusters");

  for (auto& s : ss) s = sig(0.4);
  c.expect(partition(us, ss, {}, total(us)).blocks.size() == 1, "identical signals");

  us.clear();
  ss.clear();
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
  const auto r = partition(us, ss, {}, total(us));
  c.expect(r.n_min == 0.01 * 6010, "n_min");
  c.expect(r.blocks == Blocks{{0, 1, 2, 3}, {4, 5, 6}}, "small unit near the left cluster");
  ss[3] = sig(0.7);
  c.expect(partition(us, ss, {}, total(us)).blocks == Blocks{{0, 1, 2}, {3, 4, 5, 6}},
           "small unit near the right cluster");
  return c;
}

Check preference_semantics(const Check& exclusions) {
  Check c = exclusions;
  CounterRng rng(stream_key({2024, 11}));
  const auto specs = three_specs();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RiskSignals> sig(3);
    for (auto& s : sig) {
      s = RiskSignals{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(),
                      {{32, 0.0}, {16, rng.uniform()}, {8, 3 * rng.uniform()}}};
    }
    BuildOptions opt;
    opt.budget_ratio = 0.1 + rng.uniform();
    RiskWeights pref;
    pref.pref_set = {ConfigSelector::parse("sgdm"), ConfigSelector::parse("adafactor:8")};
    pref.lambda_pref = 0.0;
    const auto base_p = build_problem(specs, sig, {}, CostModel::static_default(), opt);
    const auto pref_p = build_problem(specs, sig, pref, CostModel::static_default(), opt);
    bool same_phi = true;
    for (std::size_t i = 0; i < base_p.blocks.size(); ++i) {
      for (std::size_t j = 0; j < base_p.blocks[i].candidates.size(); ++j) {
        same_phi = same_phi && base_p.blocks[i].candidates[j].phi == pref_p.blocks[i].candidates[j].phi;
      }
    }
    const auto a = solve_exact(base_p), b = solve_exact(pref_p);
    c.expect(same_phi && a.choice == b.choice && a.objective == b.objective,
             "lambda_pref = 0 changed trial " + std::to_string(trial));
  }
  return c;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Check& c, const std::string& extra = "") {
    std::printf("%s %d %s%s%s\n", c.ok ? "PASS" : "FAIL", id, name.c_str(), extra.c_str(),
                c.ok ? "" : (" :: " + c.why).c_str());
    if (!c.ok) ++failures;
  };
  auto guarded = [](const std::function<Check()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      Check c;
      c.expect(false, std::string("threw: ") + e.what());
      return c;
    }
  };

  SuiteResult suite;
  try {
    suite = random_suite();
  } catch (const std::exception& e) {
    suite.oracle.expect(false, std::string("threw: ") + e.what());
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, " (%d feasible of 1000, %.2f s)", suite.feasible, suite.seconds);
  report(1, "solver oracle equivalence", suite.oracle, buf);
  report(2, "feasibility certificate", suite.certificate);
  report(3, "normalization anchors", guarded(anchors));
  report(4, "aggressiveness table", guarded(agg));
  report(5, "state memory formula", guarded(state_mem));
  report(6, "diagnostics closed forms", guarded(closed_forms));
  double t7 = 0.0, t8 = 0.0;
  const auto c7 = guarded([&] { return monotone_control(t7); });
  std::snprintf(buf, sizeof buf, " (%.2f s)", t7);
  report(7, "simulator monotone control", c7, buf);
  const auto c8 = guarded([&] { return exchange(t8); });
  std::snprintf(buf, sizeof buf, " (%.2f s)", t8);
  report(8, "exchange property", c8, buf);
  report(9, "budget monotonicity", guarded(budget_sweep));
  report(10, "partitioner cluster recovery", guarded(partitioner));
  report(11, "soft and hard constraint semantics", guarded([&] { return preference_semantics(suite.exclusions); }));
  return failures == 0 ? 0 : 1;
}
