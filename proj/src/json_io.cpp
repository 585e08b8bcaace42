#include "baoc/json_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace baoc {

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object()) throw InputError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw InputError(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key);
}

std::int64_t parse_id(const std::string& key) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(key, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != key.size()) throw InputError("block key '" + key + "' is not an integer id");
  return v;
}

Json sample_map(const std::map<std::int64_t, std::vector<double>>& m) {
  Json out = Json::object();
  for (const auto& [id, v] : m) out[std::to_string(id)] = v;
  return out;
}

std::map<std::int64_t, std::vector<double>> sample_map_from(const Json& j, const char* what) {
  std::map<std::int64_t, std::vector<double>> out;
  if (j.is_null()) return out;
  if (!j.is_object()) throw InputError(std::string("'") + what + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_array()) throw InputError(std::string("'") + what + "' entry " + k + " must be an array");
    std::vector<double> values;
    values.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number()) throw InputError(std::string("'") + what + "' entry " + k + " holds a non-number");
      values.push_back(x.get<double>());
    }
    out.emplace(parse_id(k), std::move(values));
  }
  return out;
}

Json budget_mem_json(std::uint64_t b) { return b == kUnlimitedMemory ? Json(nullptr) : Json(b); }
Json budget_time_json(double t) { return std::isfinite(t) ? Json(t) : Json(nullptr); }

}  // namespace

void to_json(Json& j, const Configuration& c) {
  j = Json{{"adaptive", c.adaptive},
           {"momentum", c.momentum},
           {"decoupled_decay", c.decoupled_decay},
           {"factorized", c.factorized},
           {"bits", c.bits}};
}

void from_json(const Json& j, Configuration& c) {
  if (j.is_string()) {
    const auto sel = ConfigSelector::parse(j.get<std::string>());
    const auto fam = parse_family(sel.family);
    if (!fam) throw InputError("unknown optimizer family '" + sel.family + "'");
    c = make_config(*fam, sel.bits.value_or(32));
    return;
  }
  c.adaptive = field<bool>(j, "adaptive");
  c.momentum = field<bool>(j, "momentum");
  c.decoupled_decay = field<bool>(j, "decoupled_decay");
  c.factorized = field<bool>(j, "factorized");
  c.bits = field<int>(j, "bits");
  validate(c);
}

void to_json(Json& j, const BlockSpec& b) {
  j = Json{{"id", b.id},
           {"name", b.name},
           {"dims", b.shape.dims()},
           {"kind", b.module_kind},
           {"sample_indices", b.sample_indices}};
}

void from_json(const Json& j, BlockSpec& b) {
  b.id = field<std::int64_t>(j, "id");
  b.name = field_or<std::string>(j, "name", "block" + std::to_string(b.id));
  b.shape = BlockShape(field<std::vector<std::int64_t>>(j, "dims"));
  b.module_kind = field_or<std::string>(j, "kind", "other");
  b.sample_indices = field<std::vector<std::int64_t>>(j, "sample_indices");
}

void to_json(Json& j, const TraceHeader& h) {
  j = Json{{"version", h.version}, {"sampling_ratio", h.sampling_ratio}, {"blocks", h.blocks}};
}

void from_json(const Json& j, TraceHeader& h) {
  h.version = field<int>(j, "version");
  h.sampling_ratio = field<double>(j, "sampling_ratio");
  h.blocks = field<std::vector<BlockSpec>>(j, "blocks");
}

void to_json(Json& j, const StepRecord& r) {
  j = Json{{"step", r.step}, {"grads", sample_map(r.grads)}};
  if (!r.params.empty()) j["params"] = sample_map(r.params);
}

void from_json(const Json& j, StepRecord& r) {
  r.step = field<std::int64_t>(j, "step");
  if (!j.contains("grads")) throw InputError("missing field 'grads'");
  r.grads = sample_map_from(j.at("grads"), "grads");
  r.params = j.contains("params") ? sample_map_from(j.at("params"), "params") : decltype(r.params){};
}

Json cost_model_to_json(const CostModel& model) {
  return Json{{"source", model.source() == CostSource::measured ? "measured" : "static"},
              {"ratios", model.ratios()}};
}

CostModel cost_model_from_json(const Json& j) {
  const auto source = field_or<std::string>(j, "source", "static");
  if (source != "static" && source != "measured") throw InputError("cost model source must be static or measured");
  return CostModel(field<std::map<std::string, double>>(j, "ratios"),
                   source == "measured" ? CostSource::measured : CostSource::static_table);
}

Json metrics_to_json(std::int64_t block_id, const RawMetrics& m) {
  Json q = Json::object();
  for (const auto& [bits, v] : m.Q) q[std::to_string(bits)] = v;
  return Json{{"block_id", block_id},
              {"A", m.A},
              {"rho_bar", m.rho_bar},
              {"snr", m.snr},
              {"C", m.C},
              {"F", m.F},
              {"Q", q},
              {"steps", m.steps},
              {"structure_observed", m.structure_observed},
              {"distortion_observed", m.distortion_observed}};
}

RawMetrics metrics_from_json(const Json& j) {
  RawMetrics m;
  m.A = field<double>(j, "A");
  m.rho_bar = field<double>(j, "rho_bar");
  m.snr = field<double>(j, "snr");
  m.C = field<double>(j, "C");
  m.F = field<double>(j, "F");
  const auto q = field<Json>(j, "Q");
  if (!q.is_object()) throw InputError("field 'Q' must be an object");
  for (const auto& [k, v] : q.items()) {
    if (!v.is_number()) throw InputError("Q values must be numbers");
    m.Q[static_cast<int>(parse_id(k))] = v.get<double>();
  }
  m.steps = field_or<std::int64_t>(j, "steps", 0);
  m.structure_observed = field_or<bool>(j, "structure_observed", false);
  m.distortion_observed = field_or<bool>(j, "distortion_observed", false);
  return m;
}

void apply_risk_config(const Json& j, Anchors& anchors, RiskWeights& weights, double* gamma) {
  if (!j.is_object()) throw InputError("risk config must be a JSON object");
  static const std::set<std::string> known{"anchors", "weights", "lambda_pref", "prefer", "gamma"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw InputError("unknown risk config key '" + k + "'");
  }
  if (j.contains("anchors")) {
    const auto& a = j.at("anchors");
    anchors.A_low = field_or(a, "A_low", anchors.A_low);
    anchors.A_high = field_or(a, "A_high", anchors.A_high);
    anchors.rho_low = field_or(a, "rho_low", anchors.rho_low);
    anchors.rho_high = field_or(a, "rho_high", anchors.rho_high);
    anchors.eta_low = field_or(a, "eta_low", anchors.eta_low);
    anchors.eta_high = field_or(a, "eta_high", anchors.eta_high);
    anchors.global_scale = field_or(a, "global_scale", anchors.global_scale);
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    weights.w_A = field_or(w, "w_A", weights.w_A);
    weights.w_M = field_or(w, "w_M", weights.w_M);
    weights.w_C = field_or(w, "w_C", weights.w_C);
    weights.w_F = field_or(w, "w_F", weights.w_F);
    weights.w_Q = field_or(w, "w_Q", weights.w_Q);
  }
  weights.lambda_pref = field_or(j, "lambda_pref", weights.lambda_pref);
  if (j.contains("prefer")) {
    weights.pref_set.clear();
    for (const auto& s : field<std::vector<std::string>>(j, "prefer")) weights.pref_set.push_back(ConfigSelector::parse(s));
  }
  if (gamma) *gamma = field_or(j, "gamma", *gamma);
  anchors.validate();
  weights.validate();
}

Json problem_to_json(const AllocationProblem& problem) {
  Json blocks = Json::array();
  for (const auto& b : problem.blocks) {
    Json cands = Json::array();
    for (const auto& c : b.candidates) {
      cands.push_back(Json{{"config", c.config}, {"phi", c.phi}, {"mem_bytes", c.mem_bytes}, {"time_ratio", c.time_ratio}});
    }
    blocks.push_back(Json{{"id", b.id},
                          {"name", b.name},
                          {"dims", b.shape.dims()},
                          {"candidates", cands},
                          {"excluded", b.excluded}});
  }
  return Json{{"B_mem", budget_mem_json(problem.mem_budget)},
              {"B_time", budget_time_json(problem.time_budget)},
              {"blocks", blocks}};
}

AllocationProblem problem_from_json(const Json& j) {
  AllocationProblem p;
  p.mem_budget = field_or<std::uint64_t>(j, "B_mem", kUnlimitedMemory);
  p.time_budget = field_or<double>(j, "B_time", kUnlimitedTime);
  std::set<std::int64_t> ids;
  for (const auto& jb : field<Json>(j, "blocks")) {
    ProblemBlock b;
    b.id = field<std::int64_t>(jb, "id");
    if (!ids.insert(b.id).second) throw InputError("duplicate block id " + std::to_string(b.id));
    b.name = field_or<std::string>(jb, "name", "");
    b.shape = BlockShape(field<std::vector<std::int64_t>>(jb, "dims"));
    for (const auto& jc : field<Json>(jb, "candidates")) {
      b.candidates.push_back(Candidate{field<Configuration>(jc, "config"), field<double>(jc, "phi"),
                                       field<std::uint64_t>(jc, "mem_bytes"), field<double>(jc, "time_ratio")});
    }
    b.excluded = field_or<std::vector<Configuration>>(jb, "excluded", {});
    p.blocks.push_back(std::move(b));
  }
  p.validate();
  return p;
}

Json plan_to_json(const AllocationProblem& problem, const AllocationSolution& solution) {
  Json j{{"status", to_string(solution.status)},
         {"B_mem", budget_mem_json(problem.mem_budget)},
         {"B_time", budget_time_json(problem.time_budget)}};
  if (solution.status != SolveStatus::optimal) {
    j["reason"] = to_string(solution.reason);
    j["min_feasible_mem"] = solution.min_feasible_mem;
    j["objective"] = nullptr;
    j["blocks"] = Json::array();
    return j;
  }
  j["objective"] = solution.objective;
  j["total_mem"] = solution.total_mem;
  j["mean_time_ratio"] = solution.mean_time_ratio;
  j["bound_gap"] = solution.bound_gap;
  j["nodes_explored"] = solution.nodes_explored;
  Json blocks = Json::array();
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
    const auto& b = problem.blocks[i];
    const auto& c = b.candidates[solution.choice[i]];
    blocks.push_back(Json{{"id", b.id},
                          {"name", b.name},
                          {"config", c.config},
                          {"family", c.config.family_label()},
                          {"phi", c.phi},
                          {"mem_bytes", c.mem_bytes},
                          {"time_ratio", c.time_ratio}});
  }
  j["blocks"] = blocks;
  return j;
}

PlanEntries plan_entries_from_json(const Json& j) {
  PlanEntries out;
  for (const auto& b : field<Json>(j, "blocks")) {
    out.assignment.emplace_back(field<std::int64_t>(b, "id"), field<Configuration>(b, "config"));
  }
  if (j.contains("objective") && !j.at("objective").is_null()) out.objective = field<double>(j, "objective");
  if (j.contains("total_mem") && !j.at("total_mem").is_null()) out.total_mem = field<std::uint64_t>(j, "total_mem");
  return out;
}

Json verify_report_to_json(const VerifyReport& r) {
  Json j{{"ok", r.ok},
         {"total_mem", r.total_mem},
         {"mean_time_ratio", r.mean_time_ratio},
         {"objective", r.objective},
         {"missing_blocks", r.missing_blocks},
         {"duplicate_blocks", r.duplicate_blocks},
         {"unknown_blocks", r.unknown_blocks},
         {"excluded_blocks", r.excluded_blocks},
         {"not_candidate_blocks", r.not_candidate_blocks},
         {"violations", r.messages}};
  j["mem_overshoot"] = r.mem_overshoot ? Json(*r.mem_overshoot) : Json(nullptr);
  j["time_overshoot"] = r.time_overshoot ? Json(*r.time_overshoot) : Json(nullptr);
  j["objective_mismatch"] = r.objective_mismatch ? Json(*r.objective_mismatch) : Json(nullptr);
  j["total_mem_mismatch"] = r.total_mem_mismatch ? Json(*r.total_mem_mismatch) : Json(nullptr);
  return j;
}

std::vector<StructuralUnit> units_from_json(const Json& j) {
  std::vector<StructuralUnit> out;
  for (const auto& ju : field<Json>(j, "units")) {
    StructuralUnit u;
    u.id = field<std::int64_t>(ju, "id");
    u.name = field_or<std::string>(ju, "name", "unit" + std::to_string(u.id));
    u.shape = BlockShape(field<std::vector<std::int64_t>>(ju, "dims"));
    u.module_kind = field_or<std::string>(ju, "kind", "other");
    u.layer_index = field_or<std::int64_t>(ju, "layer", 0);
    u.position = field_or<std::int64_t>(ju, "position", 0);
    out.push_back(std::move(u));
  }
  if (out.empty()) throw InputError("model description lists no units");
  return out;
}

Json partition_to_json(const PartitionResult& result, const std::vector<StructuralUnit>& units) {
  std::map<std::int64_t, const StructuralUnit*> by_id;
  for (const auto& u : units) by_id[u.id] = &u;
  Json blocks = Json::array();
  for (std::size_t k = 0; k < result.blocks.size(); ++k) {
    std::int64_t params = 0;
    Json names = Json::array();
    for (auto id : result.blocks[k]) {
      params += by_id.at(id)->shape.param_count();
      names.push_back(by_id.at(id)->name);
    }
    blocks.push_back(Json{{"index", k}, {"units", result.blocks[k]}, {"names", names}, {"param_count", params}});
  }
  return Json{{"n_min", result.n_min}, {"tau", result.tau}, {"blocks", blocks}};
}

SimulationSetup simulation_from_json(const Json& j, std::optional<std::uint64_t> seed_override) {
  SimulationSetup setup;
  const auto seed = seed_override.value_or(field_or<std::uint64_t>(j, "seed", 0));
  setup.header.sampling_ratio = field_or<double>(j, "sampling_ratio", 0.001);
  if (!(setup.header.sampling_ratio > 0.0 && setup.header.sampling_ratio <= 1.0)) {
    throw InputError("sampling_ratio must lie in (0, 1]");
  }
  std::set<std::int64_t> ids;
  for (const auto& jb : field<Json>(j, "blocks")) {
    const auto id = field<std::int64_t>(jb, "id");
    if (!ids.insert(id).second) throw InputError("duplicate block id " + std::to_string(id));
    setup.header.blocks.push_back(make_block_spec(id, field_or<std::string>(jb, "name", "block" + std::to_string(id)),
                                                  field<std::vector<std::int64_t>>(jb, "dims"),
                                                  setup.header.sampling_ratio, seed,
                                                  field_or<std::string>(jb, "kind", "other")));
    StreamProfile p;
    p.drift_strength = field_or(jb, "drift_strength", 0.0);
    p.drift_persistence = field_or(jb, "drift_persistence", 0.0);
    p.noise_scale_spread = field_or(jb, "noise_scale_spread", 0.0);
    p.rank1_mix = field_or(jb, "rank1_mix", 0.0);
    p.seed = seed;
    p.validate();
    setup.profiles.push_back(p);
  }
  if (setup.profiles.empty()) throw InputError("simulation profile lists no blocks");
  return setup;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace baoc
