#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "baoc/common.hpp"
#include "baoc/config_space.hpp"

namespace baoc {

/// Parse failure with the 1-based line number of the offending record
/// (line 1 is the header).
class TraceError : public InputError {
 public:
  TraceError(std::size_t line, const std::string& what)
      : InputError("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct BlockSpec {
  std::int64_t id = 0;
  std::string name;
  BlockShape shape;
  std::vector<std::int64_t> sample_indices;  ///< strictly increasing flat indices
  std::string module_kind = "other";

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;
};

/// Sampled values for one training step. `params` is optional per block.
struct StepRecord {
  std::int64_t step = 0;
  std::map<std::int64_t, std::vector<double>> grads;
  std::map<std::int64_t, std::vector<double>> params;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TraceHeader {
  int version = 1;
  double sampling_ratio = 0.001;
  std::vector<BlockSpec> blocks;

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/// ceil(ratio * param_count) clamped to [1, param_count]. The product is nudged down
/// by a relative 1e-12 so decimal ratios like 0.1 * 30 give 3, not 4.
std::int64_t sample_count(std::int64_t param_count, double ratio);

/// Uniform sample without replacement of sample_count(param_count, ratio) indices,
/// sorted ascending. Deterministic in (seed, stream).
std::vector<std::int64_t> sample_coordinates(std::int64_t param_count, double ratio, std::uint64_t seed,
                                             std::uint64_t stream = 0);

/// Checks a spec against its shape and the declared sampling ratio.
void validate_block_spec(const BlockSpec& spec, double sampling_ratio);

/// Sequential JSON-Lines reader: header on construction, then one record per next().
class TraceReader {
 public:
  explicit TraceReader(const std::string& path);

  const TraceHeader& header() const { return header_; }
  std::optional<StepRecord> next();
  /// Drains the remaining records.
  std::vector<StepRecord> read_all();

 private:
  std::ifstream in_;
  TraceHeader header_;
  std::map<std::int64_t, std::size_t> sizes_;
  std::size_t line_ = 0;
  std::optional<std::int64_t> last_step_;
};

class TraceWriter {
 public:
  TraceWriter(const std::string& path, const TraceHeader& header);
  void write(const StepRecord& record);
  void close();

 private:
  std::ofstream out_;
  TraceHeader header_;
  std::map<std::int64_t, std::size_t> sizes_;
  std::optional<std::int64_t> last_step_;
  std::size_t line_ = 1;
};

struct Trace {
  TraceHeader header;
  std::vector<StepRecord> records;
  friend bool operator==(const Trace&, const Trace&) = default;
};

Trace read_trace(const std::string& path);
void write_trace(const std::string& path, const TraceHeader& header, const std::vector<StepRecord>& records);

/// Validates a record against the header sizes; throws TraceError on the given line.
void check_record(const StepRecord& record, const std::map<std::int64_t, std::size_t>& sizes,
                  const std::optional<std::int64_t>& last_step, std::size_t line);

}  // namespace baoc
