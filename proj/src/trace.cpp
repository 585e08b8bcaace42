#include "baoc/trace.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "baoc/json_io.hpp"
#include "baoc/rng.hpp"

namespace baoc {

std::int64_t sample_count(std::int64_t param_count, double ratio) {
  if (param_count < 1) throw InputError("param_count must be >= 1");
  if (!(ratio > 0.0) || ratio > 1.0) throw InputError("sampling ratio must lie in (0, 1]");
  const double x = ratio * static_cast<double>(param_count);
  auto k = static_cast<std::int64_t>(std::ceil(x - x * 1e-12));
  return std::clamp<std::int64_t>(k, 1, param_count);
}

std::vector<std::int64_t> sample_coordinates(std::int64_t param_count, double ratio, std::uint64_t seed,
                                             std::uint64_t stream) {
  const std::int64_t k = sample_count(param_count, ratio);
  CounterRng rng(stream_key({seed, stream, 0x5A3B1EULL}));
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(k));
  if (k == param_count) {
    for (std::int64_t i = 0; i < param_count; ++i) out.push_back(i);
    return out;
  }
  // Floyd's algorithm: k draws, each yields exactly one new index.
  std::unordered_set<std::int64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(k) * 2);
  for (std::int64_t j = param_count - k; j < param_count; ++j) {
    const auto t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(j + 1)));
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

void validate_block_spec(const BlockSpec& spec, double sampling_ratio) {
  const auto& idx = spec.sample_indices;
  if (idx.empty()) throw InputError("block " + std::to_string(spec.id) + " has no sampled indices");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= spec.shape.param_count()) {
      throw InputError("block " + std::to_string(spec.id) + " sample index out of range");
    }
    if (i > 0 && idx[i] <= idx[i - 1]) {
      throw InputError("block " + std::to_string(spec.id) + " sample indices must be strictly increasing");
    }
  }
  const auto expected = sample_count(spec.shape.param_count(), sampling_ratio);
  if (static_cast<std::int64_t>(idx.size()) != expected) {
    throw InputError("block " + std::to_string(spec.id) + " has " + std::to_string(idx.size()) +
                     " sampled indices, expected " + std::to_string(expected) + " for the sampling ratio");
  }
}

namespace {

std::map<std::int64_t, std::size_t> block_sizes(const TraceHeader& header, std::size_t line) {
  std::map<std::int64_t, std::size_t> sizes;
  for (const auto& b : header.blocks) {
    try {
      validate_block_spec(b, header.sampling_ratio);
    } catch (const InputError& e) {
      throw TraceError(line, e.what());
    }
    if (!sizes.emplace(b.id, b.sample_indices.size()).second) {
      throw TraceError(line, "duplicate block id " + std::to_string(b.id));
    }
  }
  return sizes;
}

void check_finite(const std::vector<double>& v, std::int64_t block, std::int64_t step, std::size_t line) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw TraceError(line, "non-finite value for block " + std::to_string(block) + " at step " +
                                 std::to_string(step));
    }
  }
}

}  // namespace

void check_record(const StepRecord& record, const std::map<std::int64_t, std::size_t>& sizes,
                  const std::optional<std::int64_t>& last_step, std::size_t line) {
  if (last_step && record.step <= *last_step) {
    throw TraceError(line, "step " + std::to_string(record.step) + " is not greater than previous step " +
                               std::to_string(*last_step));
  }
  for (const auto& [id, n] : sizes) {
    if (!record.grads.contains(id)) {
      throw TraceError(line, "missing grads for block " + std::to_string(id) + " at step " +
                                 std::to_string(record.step));
    }
  }
  auto check_map = [&](const std::map<std::int64_t, std::vector<double>>& m, const char* what) {
    for (const auto& [id, v] : m) {
      auto it = sizes.find(id);
      if (it == sizes.end()) {
        throw TraceError(line, std::string(what) + " for unknown block " + std::to_string(id) + " at step " +
                                   std::to_string(record.step));
      }
      if (v.size() != it->second) {
        throw TraceError(line, std::string(what) + " length " + std::to_string(v.size()) + " for block " +
                                   std::to_string(id) + " at step " + std::to_string(record.step) +
                                   ", expected " + std::to_string(it->second));
      }
      check_finite(v, id, record.step, line);
    }
  };
  check_map(record.grads, "grads");
  check_map(record.params, "params");
}

TraceReader::TraceReader(const std::string& path) : in_(path) {
  if (!in_) throw InputError("cannot open trace '" + path + "'");
  std::string first;
  if (!std::getline(in_, first)) throw TraceError(1, "missing header");
  line_ = 1;
  try {
    header_ = Json::parse(first).get<TraceHeader>();
  } catch (const TraceError&) {
    throw;
  } catch (const std::exception& e) {
    throw TraceError(1, std::string("malformed header: ") + e.what());
  }
  if (header_.version != 1) throw TraceError(1, "unsupported trace version " + std::to_string(header_.version));
  sizes_ = block_sizes(header_, 1);
}

std::optional<StepRecord> TraceReader::next() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    StepRecord record;
    try {
      record = Json::parse(text).get<StepRecord>();
    } catch (const std::exception& e) {
      throw TraceError(line_, std::string("malformed record: ") + e.what());
    }
    check_record(record, sizes_, last_step_, line_);
    last_step_ = record.step;
    return record;
  }
  return std::nullopt;
}

std::vector<StepRecord> TraceReader::read_all() {
  std::vector<StepRecord> out;
  while (auto r = next()) out.push_back(std::move(*r));
  return out;
}

TraceWriter::TraceWriter(const std::string& path, const TraceHeader& header) : out_(path), header_(header) {
  if (!out_) throw InputError("cannot open '" + path + "' for writing");
  sizes_ = block_sizes(header_, 1);
  out_ << Json(header_).dump() << '\n';
}

void TraceWriter::write(const StepRecord& record) {
  check_record(record, sizes_, last_step_, line_ + 1);
  ++line_;
  last_step_ = record.step;
  out_ << Json(record).dump() << '\n';
}

void TraceWriter::close() {
  out_.flush();
  out_.close();
}

Trace read_trace(const std::string& path) {
  TraceReader reader(path);
  Trace t;
  t.header = reader.header();
  t.records = reader.read_all();
  return t;
}

void write_trace(const std::string& path, const TraceHeader& header, const std::vector<StepRecord>& records) {
  TraceWriter w(path, header);
  for (const auto& r : records) w.write(r);
  w.close();
}

}  // namespace baoc
