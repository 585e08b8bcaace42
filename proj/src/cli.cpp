#include "baoc/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "baoc/json_io.hpp"
#include "baoc/optim_kernels.hpp"
#include "baoc/partitioner.hpp"
#include "baoc/pipeline.hpp"
#include "baoc/simulator.hpp"

namespace baoc {

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text << '\n';
  if (!f) throw InputError("failed writing '" + path + "'");
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("BAOC_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw InputError("BAOC_SEED must be a non-negative integer");
  return v;
}

std::vector<ConfigSelector> parse_selectors(const std::vector<std::string>& items) {
  std::vector<ConfigSelector> out;
  for (const auto& s : items) out.push_back(ConfigSelector::parse(s));
  return out;
}

struct Logger {
  std::ostream& err;
  bool quiet = false;
  void operator()(const std::string& msg) const {
    if (!quiet) err << msg << '\n';
  }
};

void require_positive(double v, const char* flag) {
  if (!(v > 0.0)) throw InputError(std::string(flag) + " must be positive");
}

struct PartitionArgs {
  std::string model_desc, trace, out, config;
  double alpha = 0.01;
  double tau = -1.0;
};

int run_partition(const PartitionArgs& a, const Logger& log, std::ostream& out) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
  const auto units = units_from_json(load_json_file(a.model_desc));
  Anchors anchors;
  RiskWeights weights;
  if (!a.config.empty()) apply_risk_config(load_json_file(a.config), anchors, weights, nullptr);

  TraceReader reader(a.trace);
  const auto run = collect_metrics(reader, DiagnosticsParams{}, std::nullopt);
  std::map<std::int64_t, RiskSignals> by_id;
  for (std::size_t i = 0; i < run.header.blocks.size(); ++i) {
    by_id[run.header.blocks[i].id] = make_signals(run.metrics[i], anchors);
  }
  std::vector<RiskSignals> signals;
  std::int64_t total = 0;
  for (const auto& u : units) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) throw InputError("trace has no block for unit " + std::to_string(u.id));
    signals.push_back(it->second);
    total += u.shape.param_count();
  }
  PartitionParams params;
  params.alpha = a.alpha;
  if (a.tau >= 0.0) {
    params.tau_policy = TauPolicy::fixed;
    params.tau_value = a.tau;
  }
  const auto result = partition(units, signals, params, total);
  log("partition: " + std::to_string(units.size()) + " units -> " + std::to_string(result.blocks.size()) + " blocks");
  emit(a.out, partition_to_json(result, units).dump(2), out);
  return kExitOk;
}

struct DiagnoseArgs {
  std::string trace, out;
  std::int64_t warmup = 0;
  std::int64_t snapshot_every = 0;
};

Json metrics_doc(const TraceHeader& h, const std::vector<RawMetrics>& m) {
  Json blocks = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) blocks.push_back(metrics_to_json(h.blocks[i].id, m[i]));
  return blocks;
}

int run_diagnose(const DiagnoseArgs& a, const Logger& log, std::ostream& out) {
  if (a.snapshot_every < 0) throw InputError("--snapshot-every must be non-negative");
  if (a.warmup != 0 && a.warmup < 2) throw InputError("--warmup-steps must be at least 2");
  TraceReader reader(a.trace);
  Json snaps = Json::array();
  const auto& header = reader.header();
  auto hook = [&](std::int64_t n, const std::vector<RawMetrics>& m) {
    snaps.push_back(Json{{"records", n}, {"blocks", metrics_doc(header, m)}});
  };
  std::optional<std::int64_t> limit;
  if (a.warmup > 0) limit = a.warmup;
  const auto run = collect_metrics(reader, DiagnosticsParams{}, limit, Exec::parallel, a.snapshot_every, hook);
  Json doc{{"records", run.records}, {"blocks", metrics_doc(run.header, run.metrics)}};
  if (a.snapshot_every > 0) doc["snapshots"] = snaps;
  log("diagnose: " + std::to_string(run.header.blocks.size()) + " blocks over " + std::to_string(run.records) +
      " records");
  emit(a.out, doc.dump(2), out);
  return kExitOk;
}

struct AllocateArgs {
  std::string trace, out, problem_out, config, cost_model;
  double budget_ratio = 0.5;
  double time_budget = 1.3;
  std::optional<double> gamma, lambda_pref, anchor_scale;
  std::vector<std::string> prefer, exclude;
  std::int64_t warmup = 0;
};

int run_allocate(const AllocateArgs& a, const Logger& log, std::ostream& out, std::ostream& err) {
  require_positive(a.budget_ratio, "--budget-ratio");
  require_positive(a.time_budget, "--time-budget");
  if (a.warmup != 0 && a.warmup < 2) throw InputError("--warmup-steps must be at least 2");
  RunConfig cfg;
  cfg.budget_ratio = a.budget_ratio;
  cfg.time_budget = a.time_budget;
  if (!a.config.empty()) apply_risk_config(load_json_file(a.config), cfg.anchors, cfg.weights, &cfg.gamma);
  if (a.gamma) {
    if (!(*a.gamma >= 0.0)) throw InputError("--gamma must be non-negative");
    cfg.gamma = *a.gamma;
  }
  if (a.lambda_pref) {
    if (!(*a.lambda_pref >= 0.0)) throw InputError("--lambda-pref must be non-negative");
    cfg.weights.lambda_pref = *a.lambda_pref;
  }
  if (a.anchor_scale) {
    require_positive(*a.anchor_scale, "--anchor-scale");
    cfg.anchors.global_scale *= *a.anchor_scale;
  }
  if (!a.prefer.empty()) cfg.weights.pref_set = parse_selectors(a.prefer);
  cfg.exclusions = parse_selectors(a.exclude);
  if (!a.cost_model.empty()) cfg.cost_model = cost_model_from_json(load_json_file(a.cost_model));
  if (a.warmup > 0) cfg.warmup_steps = a.warmup;

  TraceReader reader(a.trace);
  const auto run = run_allocation(cfg, reader);
  if (!a.problem_out.empty()) emit(a.problem_out, problem_to_json(run.problem).dump(2), out);
  emit(a.out, plan_to_json(run.problem, run.solution).dump(2), out);
  if (run.solution.status != SolveStatus::optimal) {
    err << "error: " << infeasible_message(run) << '\n';
    return kExitInfeasible;
  }
  std::ostringstream msg;
  msg << "allocate: " << run.problem.blocks.size() << " blocks, objective " << run.solution.objective << ", "
      << run.solution.total_mem << "/" << run.problem.mem_budget << " bytes, " << run.solution.nodes_explored
      << " nodes";
  log(msg.str());
  return kExitOk;
}

struct SimulateArgs {
  std::string profile, out;
  std::int64_t steps = 500;
  std::optional<std::uint64_t> seed;
  std::optional<double> sampling_ratio;
};

int run_simulate(const SimulateArgs& a, const Logger& log, std::ostream& out) {
  if (a.steps < 1) throw InputError("--steps must be at least 1");
  auto doc = load_json_file(a.profile);
  if (a.sampling_ratio) {
    if (!(*a.sampling_ratio > 0.0 && *a.sampling_ratio <= 1.0)) throw InputError("--sampling-ratio must lie in (0, 1]");
    doc["sampling_ratio"] = *a.sampling_ratio;
  }
  auto seed = a.seed;
  if (!seed) seed = env_seed();
  const auto setup = simulation_from_json(doc, seed);
  const auto trace = generate_stream(setup.header, setup.profiles, a.steps);
  if (a.out.empty() || a.out == "-") {
    out << Json(trace.header).dump() << '\n';
    for (const auto& r : trace.records) out << Json(r).dump() << '\n';
  } else {
    write_trace(a.out, trace.header, trace.records);
  }
  log("simulate: " + std::to_string(trace.header.blocks.size()) + " blocks, " + std::to_string(a.steps) + " steps");
  return kExitOk;
}

struct BenchArgs {
  std::string shape = "512x512";
  std::string out;
  int repetitions = 5;
  std::optional<std::uint64_t> seed;
};

std::vector<std::int64_t> parse_shape(const std::string& text) {
  std::vector<std::int64_t> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != part.size() || v < 1) throw InputError("--shape must look like 512x512");
    dims.push_back(v);
  }
  if (dims.empty()) throw InputError("--shape must look like 512x512");
  return dims;
}

int run_bench(const BenchArgs& a, const Logger& log, std::ostream& out) {
  if (a.repetitions < 1) throw InputError("--repetitions must be at least 1");
  const BlockShape shape(parse_shape(a.shape));
  auto seed = a.seed;
  if (!seed) seed = env_seed();
  const auto model = measure_cost_model(shape, enumerate_candidates(shape), a.repetitions, seed.value_or(0));
  log("bench: measured " + std::to_string(model.ratios().size()) + " configurations on " + a.shape);
  emit(a.out, cost_model_to_json(model).dump(2), out);
  return kExitOk;
}

struct VerifyArgs {
  std::string problem, plan, out;
};

int run_verify(const VerifyArgs& a, const Logger& log, std::ostream& out, std::ostream& err) {
  const auto problem = problem_from_json(load_json_file(a.problem));
  const auto plan_doc = load_json_file(a.plan);
  if (plan_doc.is_object() && plan_doc.value("status", "") == "infeasible") {
    throw InputError("plan reports an infeasible allocation; nothing to verify");
  }
  const auto plan = plan_entries_from_json(plan_doc);
  const auto report = verify(problem, plan.assignment, plan.objective, plan.total_mem);
  emit(a.out, verify_report_to_json(report).dump(2), out);
  if (!report.ok) {
    std::string all;
    for (const auto& m : report.messages) all += (all.empty() ? "" : "; ") + m;
    err << "error: plan violates the problem: " << all << '\n';
    return kExitInfeasible;
  }
  log("verify: plan is feasible");
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Budget-aware optimizer configuration", "baoc"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress log output");

  PartitionArgs pa;
  auto* part = app.add_subcommand("partition", "Group structural units into blocks");
  part->add_option("--model-desc", pa.model_desc, "Model description JSON")->required();
  part->add_option("--trace", pa.trace, "Per-unit warmup trace (JSON-Lines)")->required();
  part->add_option("--alpha", pa.alpha, "Minimum block size as a fraction of all parameters");
  part->add_option("--tau", pa.tau, "Fixed difference threshold (default: upper quartile)");
  part->add_option("--config", pa.config, "Risk config JSON (anchors)");
  part->add_option("--out", pa.out, "Output path (default stdout)");

  DiagnoseArgs da;
  auto* diag = app.add_subcommand("diagnose", "Per-block metrics from a trace");
  diag->add_option("--trace", da.trace, "Trace (JSON-Lines)")->required();
  diag->add_option("--out", da.out, "Output path (default stdout)");
  diag->add_option("--warmup-steps", da.warmup, "Records to consume (default all)");
  diag->add_option("--snapshot-every", da.snapshot_every, "Also emit snapshots every N records");

  AllocateArgs aa;
  auto* alloc = app.add_subcommand("allocate", "Choose a configuration per block under budgets");
  alloc->add_option("--trace", aa.trace, "Warmup trace (JSON-Lines)")->required();
  alloc->add_option("--budget-ratio", aa.budget_ratio, "State memory budget as a fraction of AdamW16");
  alloc->add_option("--time-budget", aa.time_budget, "Mean update-time ratio budget");
  alloc->add_option("--gamma", aa.gamma, "Aggressiveness weight");
  alloc->add_option("--lambda-pref", aa.lambda_pref, "Soft preference bonus");
  alloc->add_option("--prefer", aa.prefer, "Preferred family[:bits]")->expected(1, -1);
  alloc->add_option("--exclude", aa.exclude, "Excluded family[:bits]")->expected(1, -1);
  alloc->add_option("--anchor-scale", aa.anchor_scale, "Multiplier on the anisotropy anchors");
  alloc->add_option("--config", aa.config, "Risk config JSON");
  alloc->add_option("--cost-model", aa.cost_model, "Cost model JSON (from `baoc bench`)");
  alloc->add_option("--warmup-steps", aa.warmup, "Records to consume (default all)");
  alloc->add_option("--out", aa.out, "Plan output path (default stdout)");
  alloc->add_option("--problem-out", aa.problem_out, "Also write the problem JSON here");

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic trace");
  sim->add_option("--profile", sa.profile, "Stream profile JSON")->required();
  sim->add_option("--steps", sa.steps, "Number of steps");
  sim->add_option("--out", sa.out, "Trace output path (default stdout)");
  sim->add_option("--seed", sa.seed, "Seed (overrides BAOC_SEED and the profile)");
  sim->add_option("--sampling-ratio", sa.sampling_ratio, "Override the profile sampling ratio");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Measure update-time ratios");
  bench->add_option("--shape", ba.shape, "Tensor shape, e.g. 512x512");
  bench->add_option("--repetitions", ba.repetitions, "Timed steps per configuration");
  bench->add_option("--out", ba.out, "Cost model output path (default stdout)");
  bench->add_option("--seed", ba.seed, "Seed for the synthetic tensors");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "Check a plan against a problem");
  ver->add_option("--problem", va.problem, "Problem JSON")->required();
  ver->add_option("--plan", va.plan, "Plan JSON")->required();
  ver->add_option("--out", va.out, "Report output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInputError;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInputError;
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitInputError;
  }

  const Logger log{err, quiet};
  try {
    if (part->parsed()) return run_partition(pa, log, out);
    if (diag->parsed()) return run_diagnose(da, log, out);
    if (alloc->parsed()) return run_allocate(aa, log, out, err);
    if (sim->parsed()) return run_simulate(sa, log, out);
    if (bench->parsed()) return run_bench(ba, log, out);
    if (ver->parsed()) return run_verify(va, log, out, err);
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace baoc
