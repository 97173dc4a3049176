#pragma once

#include "gpcpd/fixtures.hpp"
#include "gpcpd/tensor.hpp"

#include <nlohmann/json.hpp>
#include <cstdint>
#include <string>
#include <vector>

namespace gpcpd {

struct InstanceSpec {
  std::array<Index, 3> dims{0, 0, 0};
  Index rank = 0;
  int count = 1;
  /// "example41" or "example42"; dims and rank then come from the fixture.
  std::string fixture;

  std::string label() const;
};

/// Worker count override read by run_benchmark.
inline constexpr const char* kWorkersEnv = "GPCPD_WORKERS";

struct BenchConfig {
  std::vector<InstanceSpec> instances;
  std::uint64_t seed = 0;
  std::vector<std::string> methods{"ts"};
  /// Per-run limit in seconds; a run that exceeds it counts as a failure.
  double time_limit = 60.0;
  Distribution distribution = Distribution::StandardNormal;
  int workers = 1;
  double success_tol = 1e-6;

  void validate() const;
  static BenchConfig from_json(const nlohmann::json& j);
};

struct RunRecord {
  std::size_t spec = 0;
  int instance = 0;
  std::string method;
  std::uint64_t seed = 0;
  double err_rel = 0.0;
  double time = 0.0;
  bool success = false;
  bool timed_out = false;
  std::string stage;
  std::string note;
};

struct AggregateRow {
  std::string dims;
  Index rank = 0;
  std::string method;
  double time = 0.0;  // mean over successful runs (NaN when there are none)
  double error = 0.0; // mean err-rel over successful runs (NaN when there are none)
  double s_rate = 0.0;
  int runs = 0;
  int timeouts = 0;
};

struct RunReport {
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> rows;
  std::string recipe;

  nlohmann::json to_json() const;
  /// Header "dims,rank,method,time,error,s_rate" and one line per row.
  std::string to_csv() const;
};

/// Workers: GPCPD_WORKERS when set, else cfg.workers.
int effective_workers(const BenchConfig& cfg);

RunReport run_benchmark(const BenchConfig& cfg);

} // namespace gpcpd
