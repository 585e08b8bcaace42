#include "baoc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace baoc {

std::string to_string(SolveStatus s) { return s == SolveStatus::optimal ? "optimal" : "infeasible"; }

std::string to_string(Infeasibility r) {
  switch (r) {
    case Infeasibility::memory: return "memory";
    case Infeasibility::time: return "time";
    case Infeasibility::joint: return "joint";
    default: return "none";
  }
}

namespace {

bool is_excluded(const ProblemBlock& b, const Configuration& c) {
  return std::find(b.excluded.begin(), b.excluded.end(), c) != b.excluded.end();
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kUnlimitedMemory - b ? kUnlimitedMemory : a + b; }

bool time_ok(double sum_r, std::size_t n, double budget) {
  if (!std::isfinite(budget)) return true;
  return sum_r / static_cast<double>(n) <= budget + kTimeSlack;
}

/// Selectable candidates plus the per-block extremes every solver needs.
struct Prepared {
  const AllocationProblem* problem = nullptr;
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> allowed;
  std::vector<double> min_phi;
  std::vector<std::uint64_t> min_mem;
  std::vector<double> min_r;

  explicit Prepared(const AllocationProblem& p) : problem(&p), n(p.blocks.size()) {
    p.validate();
    allowed.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = p.blocks[i];
      for (std::size_t c = 0; c < b.candidates.size(); ++c) {
        if (!is_excluded(b, b.candidates[c].config)) allowed[i].push_back(c);
      }
      double mp = std::numeric_limits<double>::infinity(), mr = mp;
      std::uint64_t mm = kUnlimitedMemory;
      for (auto c : allowed[i]) {
        const auto& cand = b.candidates[c];
        mp = std::min(mp, cand.phi);
        mm = std::min(mm, cand.mem_bytes);
        mr = std::min(mr, cand.time_ratio);
      }
      min_phi.push_back(mp);
      min_mem.push_back(mm);
      min_r.push_back(mr);
    }
  }

  const Candidate& cand(std::size_t block, std::size_t index) const {
    return problem->blocks[block].candidates[index];
  }

  std::uint64_t sum_min_mem() const {
    std::uint64_t s = 0;
    for (auto m : min_mem) s = sat_add(s, m);
    return s;
  }

  /// Which budget makes the instance infeasible, judged from per-block minima.
  Infeasibility classify() const {
    double sr = 0.0;
    for (double r : min_r) sr += r;
    if (sum_min_mem() > problem->mem_budget) return Infeasibility::memory;
    if (!time_ok(sr, n, problem->time_budget)) return Infeasibility::time;
    return Infeasibility::joint;
  }

  /// Objective/memory/time of a full choice, summed in block order.
  void evaluate(const std::vector<std::size_t>& choice, AllocationSolution& sol) const {
    double obj = 0.0, sr = 0.0;
    std::uint64_t mem = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = cand(i, choice[i]);
      obj += c.phi;
      mem = sat_add(mem, c.mem_bytes);
      sr += c.time_ratio;
    }
    sol.objective = obj;
    sol.total_mem = mem;
    sol.mean_time_ratio = sr / static_cast<double>(n);
  }

  AllocationSolution infeasible(std::uint64_t nodes) const {
    AllocationSolution sol;
    sol.status = SolveStatus::infeasible;
    sol.reason = classify();
    sol.nodes_explored = nodes;
    sol.min_feasible_mem = sum_min_mem();
    return sol;
  }

  AllocationSolution optimal(std::vector<std::size_t> choice, std::uint64_t nodes) const {
    AllocationSolution sol;
    sol.status = SolveStatus::optimal;
    sol.choice = std::move(choice);
    evaluate(sol.choice, sol);
    sol.nodes_explored = nodes;
    sol.bound_gap = 0.0;
    sol.min_feasible_mem = sum_min_mem();
    return sol;
  }
};

// ---------------------------------------------------------------------------------------
// Brute force

struct BruteTask {
  std::vector<std::size_t> prefix;  // candidate indices for the first blocks
  double partial = 0.0;
  std::uint64_t mem = 0;
  double sum_r = 0.0;
};

class BruteEnumerator {
 public:
  explicit BruteEnumerator(const Prepared& prep) : prep_(prep) {}

  // Minimum feasible objective below a task (infinity if none); counts leaves.
  double min_below(const BruteTask& t, std::uint64_t& leaves) const {
    std::vector<std::size_t> choice = t.prefix;
    choice.resize(prep_.n);
    double best = std::numeric_limits<double>::infinity();
    min_rec(t.prefix.size(), t.partial, t.mem, t.sum_r, best, leaves);
    return best;
  }

  // First leaf in lexicographic order with objective <= target.
  bool first_below(const BruteTask& t, double target, std::vector<std::size_t>& out) const {
    out = t.prefix;
    out.resize(prep_.n);
    return first_rec(t.prefix.size(), t.partial, t.mem, t.sum_r, target, out);
  }

 private:
  void min_rec(std::size_t k, double partial, std::uint64_t mem, double sr, double& best,
               std::uint64_t& leaves) const {
    if (k == prep_.n) {
      ++leaves;
      if (mem <= prep_.problem->mem_budget && time_ok(sr, prep_.n, prep_.problem->time_budget)) {
        best = std::min(best, partial);
      }
      return;
    }
    for (auto c : prep_.allowed[k]) {
      const auto& cand = prep_.cand(k, c);
      min_rec(k + 1, partial + cand.phi, sat_add(mem, cand.mem_bytes), sr + cand.time_ratio, best, leaves);
    }
  }

  bool first_rec(std::size_t k, double partial, std::uint64_t mem, double sr, double target,
                 std::vector<std::size_t>& out) const {
    if (k == prep_.n) {
      return mem <= prep_.problem->mem_budget && time_ok(sr, prep_.n, prep_.problem->time_budget) &&
             partial <= target;
    }
    for (auto c : prep_.allowed[k]) {
      const auto& cand = prep_.cand(k, c);
      out[k] = c;
      if (first_rec(k + 1, partial + cand.phi, sat_add(mem, cand.mem_bytes), sr + cand.time_ratio, target, out)) {
        return true;
      }
    }
    return false;
  }

  const Prepared& prep_;
};

std::vector<BruteTask> split_tasks(const Prepared& prep, std::size_t min_tasks) {
  std::vector<BruteTask> tasks{BruteTask{}};
  std::size_t depth = 0;
  while (tasks.size() < min_tasks && depth < prep.n) {
    std::vector<BruteTask> next;
    for (const auto& t : tasks) {
      for (auto c : prep.allowed[depth]) {
        const auto& cand = prep.cand(depth, c);
        BruteTask u = t;
        u.prefix.push_back(c);
        u.partial = t.partial + cand.phi;
        u.mem = sat_add(t.mem, cand.mem_bytes);
        u.sum_r = t.sum_r + cand.time_ratio;
        next.push_back(std::move(u));
      }
    }
    tasks = std::move(next);
    ++depth;
  }
  return tasks;
}

}  // namespace

void AllocationProblem::validate() const {
  if (blocks.empty()) throw InputError("allocation problem has no blocks");
  if (std::isnan(time_budget)) throw InputError("time budget is NaN");
  for (const auto& b : blocks) {
    bool any = false;
    for (const auto& c : b.candidates) {
      if (!std::isfinite(c.phi)) throw InputError("block " + std::to_string(b.id) + " has a non-finite risk");
      if (!(c.time_ratio > 0.0) || !std::isfinite(c.time_ratio)) {
        throw InputError("block " + std::to_string(b.id) + " has a non-positive time ratio");
      }
      if (!is_excluded(b, c.config)) any = true;
    }
    if (!any) throw InputError("block " + std::to_string(b.id) + " has no selectable candidate");
  }
}

std::map<std::int64_t, Configuration> AllocationSolution::assignment(const AllocationProblem& problem) const {
  std::map<std::int64_t, Configuration> out;
  if (status != SolveStatus::optimal) return out;
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
    out.emplace(problem.blocks[i].id, problem.blocks[i].candidates[choice[i]].config);
  }
  return out;
}

std::uint64_t adamw16_total_bytes(const std::vector<BlockSpec>& blocks) {
  const auto base = make_config(Family::adamw, 16);
  std::uint64_t total = 0;
  for (const auto& b : blocks) total += state_bytes(base, b.shape);
  return total;
}

AllocationProblem build_problem(const std::vector<BlockSpec>& blocks, const std::vector<RiskSignals>& signals,
                                const RiskWeights& weights, const CostModel& cost, const BuildOptions& options) {
  if (blocks.size() != signals.size()) throw InputError("signals are required for every block");
  if (!(options.budget_ratio > 0.0)) throw InputError("budget ratio must be positive");
  if (!(options.time_budget > 0.0)) throw InputError("time budget must be positive");
  weights.validate();

  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return blocks[a].id < blocks[b].id; });

  AllocationProblem problem;
  const auto total = adamw16_total_bytes(blocks);
  problem.mem_budget =
      static_cast<std::uint64_t>(std::floor(static_cast<long double>(options.budget_ratio) * total));
  problem.time_budget = options.time_budget;
  for (auto idx : order) {
    const auto& spec = blocks[idx];
    ProblemBlock pb;
    pb.id = spec.id;
    pb.name = spec.name;
    pb.shape = spec.shape;
    for (const auto& c : enumerate_candidates(spec.shape, options.policy)) {
      if (matches_any(options.exclusions, c)) {
        pb.excluded.push_back(c);
        continue;
      }
      pb.candidates.push_back(
          Candidate{c, phi(c, signals[idx], weights, options.gamma), state_bytes(c, spec.shape), cost.ratio(c)});
    }
    if (pb.candidates.empty()) {
      throw InputError("block " + std::to_string(spec.id) + ": every candidate configuration is excluded");
    }
    problem.blocks.push_back(std::move(pb));
  }
  return problem;
}

AllocationProblem build_problem(const std::vector<BlockSpec>& blocks, const std::vector<RawMetrics>& metrics,
                                const Anchors& anchors, const RiskWeights& weights, const CostModel& cost,
                                const BuildOptions& options) {
  if (blocks.size() != metrics.size()) throw InputError("metrics are required for every block");
  anchors.validate();
  std::vector<RiskSignals> signals;
  signals.reserve(metrics.size());
  for (const auto& m : metrics) signals.push_back(make_signals(m, anchors));
  return build_problem(blocks, signals, weights, cost, options);
}

AllocationSolution solve_bruteforce(const AllocationProblem& problem, Exec exec) {
  const Prepared prep(problem);
  double leaves_total = 1.0;
  for (const auto& a : prep.allowed) leaves_total *= static_cast<double>(a.size());
  if (leaves_total > kBruteforceLimit) {
    throw InputError("instance too large for brute force (" + std::to_string(static_cast<long long>(leaves_total)) +
                     " assignments)");
  }

  const BruteEnumerator en(prep);
  const auto tasks = split_tasks(prep, exec == Exec::parallel ? 64 : 1);
  const auto n_tasks = static_cast<std::int64_t>(tasks.size());

  std::vector<double> task_min(tasks.size());
  std::vector<std::uint64_t> task_leaves(tasks.size(), 0);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (std::int64_t t = 0; t < n_tasks; ++t) {
    const auto i = static_cast<std::size_t>(t);
    task_min[i] = en.min_below(tasks[i], task_leaves[i]);
  }
  const double best = *std::min_element(task_min.begin(), task_min.end());
  const std::uint64_t leaves = std::accumulate(task_leaves.begin(), task_leaves.end(), std::uint64_t{0});
  if (!std::isfinite(best)) return prep.infeasible(leaves);

  const double target = best + kObjectiveSlack;
  std::vector<std::vector<std::size_t>> found(tasks.size());
  std::vector<std::uint8_t> hit(tasks.size(), 0);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (std::int64_t t = 0; t < n_tasks; ++t) {
    const auto i = static_cast<std::size_t>(t);
    if (task_min[i] <= target) hit[i] = en.first_below(tasks[i], target, found[i]);
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (hit[i]) return prep.optimal(std::move(found[i]), leaves);
  }
  return prep.infeasible(leaves);  // unreachable: the minimizer itself qualifies
}

std::optional<std::vector<std::size_t>> greedy_repair(const AllocationProblem& problem) {
  const Prepared prep(problem);
  const std::size_t n = prep.n;
  std::vector<std::size_t> choice(n);
  for (std::size_t i = 0; i < n; ++i) {
    choice[i] = prep.allowed[i].front();
    for (auto c : prep.allowed[i]) {
      if (prep.cand(i, c).phi < prep.cand(i, choice[i]).phi) choice[i] = c;
    }
  }
  auto totals = [&](std::uint64_t& mem, double& sr) {
    mem = 0;
    sr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mem = sat_add(mem, prep.cand(i, choice[i]).mem_bytes);
      sr += prep.cand(i, choice[i]).time_ratio;
    }
  };
  for (;;) {
    std::uint64_t mem;
    double sr;
    totals(mem, sr);
    const bool mem_ok = mem <= problem.mem_budget;
    const bool t_ok = time_ok(sr, n, problem.time_budget);
    if (mem_ok && t_ok) return choice;

    double best_ratio = std::numeric_limits<double>::infinity();
    std::size_t best_block = n, best_cand = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cur = prep.cand(i, choice[i]);
      for (auto c : prep.allowed[i]) {
        const auto& alt = prep.cand(i, c);
        double saved;
        if (!mem_ok) {
          if (alt.mem_bytes >= cur.mem_bytes) continue;
          saved = static_cast<double>(cur.mem_bytes - alt.mem_bytes);
        } else {
          if (alt.time_ratio >= cur.time_ratio) continue;
          if (alt.mem_bytes > cur.mem_bytes && mem - cur.mem_bytes + alt.mem_bytes > problem.mem_budget) continue;
          saved = cur.time_ratio - alt.time_ratio;
        }
        const double ratio = (alt.phi - cur.phi) / saved;
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best_block = i;
          best_cand = c;
        }
      }
    }
    if (best_block == n) return std::nullopt;
    choice[best_block] = best_cand;
  }
}

namespace {

struct Scales {
  double mem = 1.0;   // bytes per normalized unit
  double time = 1.0;  // time-ratio sum per normalized unit
  bool mem_active = false;
  bool time_active = false;
};

Scales budget_scales(const AllocationProblem& p) {
  Scales s;
  if (p.mem_budget != kUnlimitedMemory) {
    s.mem_active = true;
    s.mem = std::max<double>(1.0, static_cast<double>(p.mem_budget));
  }
  if (std::isfinite(p.time_budget)) {
    s.time_active = true;
    s.time = p.time_budget * static_cast<double>(p.blocks.size());
  }
  return s;
}

double reduced_cost(const Candidate& c, const Scales& s, double lm, double lt) {
  return c.phi + lm * static_cast<double>(c.mem_bytes) / s.mem + lt * c.time_ratio / s.time;
}

}  // namespace

LagrangianBound lagrangian_bound(const AllocationProblem& problem, int iterations) {
  const Prepared prep(problem);
  const Scales s = budget_scales(problem);
  const double mem_rhs = s.mem_active ? static_cast<double>(problem.mem_budget) / s.mem : 0.0;
  const double time_rhs = s.time_active ? 1.0 : 0.0;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < prep.n; ++i) {
    for (auto c : prep.allowed[i]) {
      lo = std::min(lo, prep.cand(i, c).phi);
      hi = std::max(hi, prep.cand(i, c).phi);
    }
  }
  const double mu0 = hi > lo ? hi - lo : 1.0;

  LagrangianBound best;
  double lm = 0.0, lt = 0.0;
  for (int k = 1; k <= iterations; ++k) {
    double value = -lm * mem_rhs - lt * time_rhs;
    double g_mem = -mem_rhs, g_time = -time_rhs;
    for (std::size_t i = 0; i < prep.n; ++i) {
      double v = std::numeric_limits<double>::infinity();
      std::size_t arg = prep.allowed[i].front();
      for (auto c : prep.allowed[i]) {
        const double rc = reduced_cost(prep.cand(i, c), s, lm, lt);
        if (rc < v) {
          v = rc;
          arg = c;
        }
      }
      value += v;
      g_mem += static_cast<double>(prep.cand(i, arg).mem_bytes) / s.mem;
      g_time += prep.cand(i, arg).time_ratio / s.time;
    }
    if (value > best.value) best = {value, lm, lt};
    if (!s.mem_active) g_mem = 0.0;
    if (!s.time_active) g_time = 0.0;
    const double gn = std::hypot(g_mem, g_time);
    if (gn == 0.0) break;
    const double step = mu0 / std::sqrt(static_cast<double>(k));
    lm = std::max(0.0, lm + step * g_mem / gn);
    lt = std::max(0.0, lt + step * g_time / gn);
  }
  return best;
}

namespace {

/// Depth-first branch-and-bound over blocks in problem order.
class BranchAndBound {
 public:
  explicit BranchAndBound(const Prepared& prep) : prep_(prep), p_(*prep.problem), scales_(budget_scales(p_)) {
    const std::size_t n = prep_.n;
    const auto lag = lagrangian_bound(p_);
    lm_ = lag.lambda_mem;
    lt_ = lag.lambda_time;

    suffix_phi_.assign(n + 1, 0.0);
    suffix_lag_.assign(n + 1, 0.0);
    suffix_mem_.assign(n + 1, 0);
    suffix_r_.assign(n + 1, 0.0);
    for (std::size_t k = n; k-- > 0;) {
      double best_lag = std::numeric_limits<double>::infinity();
      for (auto c : prep_.allowed[k]) best_lag = std::min(best_lag, reduced_cost(prep_.cand(k, c), scales_, lm_, lt_));
      suffix_phi_[k] = suffix_phi_[k + 1] + prep_.min_phi[k];
      suffix_lag_[k] = suffix_lag_[k + 1] + best_lag;
      suffix_mem_[k] = sat_add(suffix_mem_[k + 1], prep_.min_mem[k]);
      suffix_r_[k] = suffix_r_[k + 1] + prep_.min_r[k];
    }
    time_cap_ = std::isfinite(p_.time_budget) ? (p_.time_budget + kTimeSlack) * static_cast<double>(n) + 1e-9
                                               : std::numeric_limits<double>::infinity();

    // Phase-one search order: cheapest risk first, dominated candidates dropped. A
    // candidate is dominated when another uses no more memory and time and has a risk
    // lower by more than the tie slack, so it can never be part of a tied optimum.
    order_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto c : prep_.allowed[i]) {
        const auto& a = prep_.cand(i, c);
        bool dominated = false;
        for (auto d : prep_.allowed[i]) {
          const auto& b = prep_.cand(i, d);
          if (d != c && b.mem_bytes <= a.mem_bytes && b.time_ratio <= a.time_ratio &&
              b.phi + 2 * kObjectiveSlack < a.phi) {
            dominated = true;
            break;
          }
        }
        if (!dominated) order_[i].push_back(c);
      }
      std::stable_sort(order_[i].begin(), order_[i].end(),
                       [&](auto a, auto b) { return prep_.cand(i, a).phi < prep_.cand(i, b).phi; });
    }
  }

  AllocationSolution solve() {
    const std::size_t n = prep_.n;
    if (suffix_mem_[0] > p_.mem_budget || suffix_r_[0] > time_cap_) return prep_.infeasible(0);

    best_ = std::numeric_limits<double>::infinity();
    if (auto seed = greedy_repair(p_)) {
      AllocationSolution tmp;
      prep_.evaluate(*seed, tmp);
      best_ = tmp.objective;
      // Re-sum in block order exactly as the search does, so the incumbent is comparable.
      double partial = 0.0;
      for (std::size_t i = 0; i < n; ++i) partial += prep_.cand(i, (*seed)[i]).phi;
      best_ = partial;
    }
    std::vector<std::size_t> choice(n);
    search_min(0, 0.0, 0, 0.0, choice);
    if (!std::isfinite(best_)) return prep_.infeasible(nodes_);

    target_ = best_ + kObjectiveSlack;
    if (!search_first(0, 0.0, 0, 0.0, choice)) return prep_.infeasible(nodes_);  // not reached
    return prep_.optimal(choice, nodes_);
  }

 private:
  double lower_bound(std::size_t k, double partial, std::uint64_t mem, double sr) const {
    const double simple = partial + suffix_phi_[k];
    double lag = partial + suffix_lag_[k];
    if (scales_.mem_active) lag -= lm_ * (static_cast<double>(p_.mem_budget) - static_cast<double>(mem)) / scales_.mem;
    if (scales_.time_active) {
      lag -= lt_ * (p_.time_budget * static_cast<double>(prep_.n) - sr) / scales_.time;
    }
    return std::max(simple, lag);
  }

  bool hopeless(std::size_t k, std::uint64_t mem, double sr) const {
    return sat_add(mem, suffix_mem_[k]) > p_.mem_budget || sr + suffix_r_[k] > time_cap_;
  }

  void search_min(std::size_t k, double partial, std::uint64_t mem, double sr, std::vector<std::size_t>& choice) {
    ++nodes_;
    if (k == prep_.n) {
      if (mem <= p_.mem_budget && time_ok(sr, prep_.n, p_.time_budget) && partial < best_) best_ = partial;
      return;
    }
    if (hopeless(k, mem, sr)) return;
    if (std::isfinite(best_) && lower_bound(k, partial, mem, sr) >= best_ - 1e-12 * std::max(1.0, std::fabs(best_))) {
      return;
    }
    for (auto c : order_[k]) {
      const auto& cand = prep_.cand(k, c);
      choice[k] = c;
      search_min(k + 1, partial + cand.phi, sat_add(mem, cand.mem_bytes), sr + cand.time_ratio, choice);
    }
  }

  bool search_first(std::size_t k, double partial, std::uint64_t mem, double sr, std::vector<std::size_t>& choice) {
    ++nodes_;
    if (k == prep_.n) {
      return mem <= p_.mem_budget && time_ok(sr, prep_.n, p_.time_budget) && partial <= target_;
    }
    if (hopeless(k, mem, sr)) return false;
    if (lower_bound(k, partial, mem, sr) > target_ + 1e-12 * std::max(1.0, std::fabs(target_))) return false;
    for (auto c : prep_.allowed[k]) {
      const auto& cand = prep_.cand(k, c);
      choice[k] = c;
      if (search_first(k + 1, partial + cand.phi, sat_add(mem, cand.mem_bytes), sr + cand.time_ratio, choice)) {
        return true;
      }
    }
    return false;
  }

  const Prepared& prep_;
  const AllocationProblem& p_;
  Scales scales_;
  double lm_ = 0.0, lt_ = 0.0;
  std::vector<double> suffix_phi_, suffix_lag_, suffix_r_;
  std::vector<std::uint64_t> suffix_mem_;
  double time_cap_ = 0.0;
  std::vector<std::vector<std::size_t>> order_;
  double best_ = 0.0;
  double target_ = 0.0;
  std::uint64_t nodes_ = 0;
};

}  // namespace

AllocationSolution solve_exact(const AllocationProblem& problem) {
  const Prepared prep(problem);
  BranchAndBound bb(prep);
  return bb.solve();
}

VerifyReport verify(const AllocationProblem& problem,
                    const std::vector<std::pair<std::int64_t, Configuration>>& assignment,
                    std::optional<double> claimed_objective, std::optional<std::uint64_t> claimed_total_mem) {
  VerifyReport rep;
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) index.emplace(problem.blocks[i].id, i);

  std::vector<const Candidate*> picked(problem.blocks.size(), nullptr);
  std::vector<std::uint8_t> seen(problem.blocks.size(), 0);
  for (const auto& [id, config] : assignment) {
    auto it = index.find(id);
    if (it == index.end()) {
      rep.unknown_blocks.push_back(id);
      continue;
    }
    const auto i = it->second;
    if (seen[i]) {
      rep.duplicate_blocks.push_back(id);
      continue;
    }
    seen[i] = 1;
    const auto& b = problem.blocks[i];
    if (is_excluded(b, config)) rep.excluded_blocks.push_back(id);
    for (const auto& c : b.candidates) {
      if (c.config == config) picked[i] = &c;
    }
    if (!picked[i] && !is_excluded(b, config)) rep.not_candidate_blocks.push_back(id);
  }
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
    if (!seen[i]) rep.missing_blocks.push_back(problem.blocks[i].id);
  }

  double sr = 0.0;
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
    if (!picked[i]) continue;
    rep.objective += picked[i]->phi;
    rep.total_mem = sat_add(rep.total_mem, picked[i]->mem_bytes);
    sr += picked[i]->time_ratio;
  }
  rep.mean_time_ratio = problem.blocks.empty() ? 0.0 : sr / static_cast<double>(problem.blocks.size());

  auto list = [](const std::vector<std::int64_t>& ids) {
    std::string s;
    for (auto id : ids) s += (s.empty() ? "" : ",") + std::to_string(id);
    return s;
  };
  if (rep.total_mem > problem.mem_budget) {
    rep.mem_overshoot = rep.total_mem - problem.mem_budget;
    rep.messages.push_back("memory budget exceeded by " + std::to_string(*rep.mem_overshoot) + " bytes");
  }
  if (!time_ok(sr, problem.blocks.size(), problem.time_budget)) {
    rep.time_overshoot = rep.mean_time_ratio - problem.time_budget;
    rep.messages.push_back("mean time ratio exceeds budget by " + std::to_string(*rep.time_overshoot));
  }
  if (!rep.missing_blocks.empty()) rep.messages.push_back("blocks without assignment: " + list(rep.missing_blocks));
  if (!rep.duplicate_blocks.empty()) rep.messages.push_back("blocks assigned twice: " + list(rep.duplicate_blocks));
  if (!rep.unknown_blocks.empty()) rep.messages.push_back("unknown blocks: " + list(rep.unknown_blocks));
  if (!rep.excluded_blocks.empty()) {
    rep.messages.push_back("excluded configuration selected for blocks: " + list(rep.excluded_blocks));
  }
  if (!rep.not_candidate_blocks.empty()) {
    rep.messages.push_back("configuration not among candidates for blocks: " + list(rep.not_candidate_blocks));
  }
  if (claimed_objective && std::fabs(*claimed_objective - rep.objective) >
                               kObjectiveSlack * std::max(1.0, std::fabs(rep.objective))) {
    rep.objective_mismatch = *claimed_objective - rep.objective;
    rep.messages.push_back("claimed objective differs from recomputed value");
  }
  if (claimed_total_mem && *claimed_total_mem != rep.total_mem) {
    rep.total_mem_mismatch = static_cast<std::int64_t>(*claimed_total_mem) - static_cast<std::int64_t>(rep.total_mem);
    rep.messages.push_back("claimed total_mem differs from recomputed value");
  }
  rep.ok = rep.messages.empty();
  return rep;
}

VerifyReport verify(const AllocationProblem& problem, const AllocationSolution& solution) {
  if (solution.status != SolveStatus::optimal) {
    VerifyReport rep;
    rep.ok = false;
    rep.messages.push_back("solution is infeasible; no assignment to check");
    return rep;
  }
  std::vector<std::pair<std::int64_t, Configuration>> entries;
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
    entries.emplace_back(problem.blocks[i].id, problem.blocks[i].candidates[solution.choice[i]].config);
  }
  return verify(problem, entries, solution.objective, solution.total_mem);
}

}  // namespace baoc
