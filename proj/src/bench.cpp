#include "gpcpd/bench.hpp"

#include "gpcpd/als.hpp"
#include "gpcpd/assembly.hpp"
#include "gpcpd/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

namespace gpcpd {

using nlohmann::json;

std::string InstanceSpec::label() const {
  std::ostringstream os;
  os << dims[0] << 'x' << dims[1] << 'x' << dims[2];
  return os.str();
}

void BenchConfig::validate() const {
  if (methods.empty())
    throw ParseError("bench config: no methods");
  for (const auto& m : methods)
    if (m != "ts" && m != "als")
      throw ParseError("bench config: unknown method '" + m + "'");
  if (!(time_limit > 0.0) || workers < 1 || !(success_tol > 0.0))
    throw ParseError("bench config: time_limit, workers and success_tol must be positive");
  for (const auto& s : instances) {
    if (s.count < 1)
      throw ParseError("bench config: count must be at least 1");
    if (!s.fixture.empty())
      continue;
    const auto& n = s.dims;
    if (!(n[0] >= n[1] && n[1] >= n[2] && n[2] >= 2))
      throw ParseError("bench config: dims must satisfy n1 >= n2 >= n3 >= 2");
    if (s.rank < 1 || s.rank > n[0])
      throw ParseError("bench config: rank must lie in [1, n1]");
  }
}

BenchConfig BenchConfig::from_json(const json& j) {
  BenchConfig cfg;
  try {
    for (const json& e : j.value("instances", json::array())) {
      InstanceSpec s;
      s.count = e.value("count", 1);
      if (e.contains("fixture")) {
        s.fixture = e.at("fixture").get<std::string>();
        if (s.fixture == "example41")
          s.dims = {5, 3, 3}, s.rank = 5;
        else if (s.fixture == "example42")
          s.dims = {8, 5, 3}, s.rank = 8;
        else
          throw ParseError("bench config: unknown fixture '" + s.fixture + "'");
      } else {
        const json& d = e.at("dims");
        if (!d.is_array() || d.size() != 3)
          throw ParseError("bench config: dims must have three entries");
        for (std::size_t m = 0; m < 3; ++m)
          s.dims[m] = d[m].get<Index>();
        s.rank = e.at("rank").get<Index>();
      }
      cfg.instances.push_back(s);
    }
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("methods"))
      cfg.methods = j.at("methods").get<std::vector<std::string>>();
    cfg.time_limit = j.value("time_limit", cfg.time_limit);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.success_tol = j.value("success_tol", cfg.success_tol);
    if (j.contains("distribution"))
      cfg.distribution = distribution_from_string(j.at("distribution").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("bench config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

int effective_workers(const BenchConfig& cfg) {
  if (const char* env = std::getenv(kWorkersEnv)) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1)
      return static_cast<int>(v);
  }
  return cfg.workers;
}

namespace {

struct Job {
  std::size_t spec;
  int instance;
  std::size_t method;
};

Tensor3 make_instance(const BenchConfig& cfg, const InstanceSpec& s, std::uint64_t seed) {
  if (s.fixture == "example41")
    return fixture_example41().tensor;
  if (s.fixture == "example42")
    return fixture_example42().tensor;
  return gen_random_rank_r(s.dims[0], s.dims[1], s.dims[2], s.rank, cfg.distribution, seed).tensor;
}

RunRecord run_one(const BenchConfig& cfg, const Job& job) {
  const InstanceSpec& s = cfg.instances[job.spec];
  const std::uint64_t inst_seed = derive_seed(derive_seed(cfg.seed, job.spec), static_cast<std::uint64_t>(job.instance));
  RunRecord rec;
  rec.spec = job.spec;
  rec.instance = job.instance;
  rec.method = cfg.methods[job.method];
  rec.seed = derive_seed(inst_seed, 1 + job.method);
  const Tensor3 f = make_instance(cfg, s, inst_seed);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (rec.method == "ts") {
      SolveOptions opts;
      opts.seed = rec.seed;
      opts.time_limit = cfg.time_limit;
      opts.success_tol = cfg.success_tol;
      const DecomposeResult res = decompose(f, s.rank, opts);
      rec.err_rel = res.report.err_rel;
      rec.stage = to_string(res.report.stage_used);
    } else {
      AlsOptions opts;
      opts.seed = rec.seed;
      opts.time_limit = cfg.time_limit;
      const AlsResult res = als_decompose(f, s.rank, opts);
      rec.err_rel = relative_error(f, res.factors);
      rec.stage = "als";
    }
  } catch (const Error& e) {
    rec.err_rel = std::numeric_limits<double>::infinity();
    rec.note = e.what();
  }
  rec.time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.timed_out = rec.time > cfg.time_limit;
  rec.success = !rec.timed_out && rec.err_rel <= cfg.success_tol;
  if (rec.timed_out)
    rec.note = "timeout";
  return rec;
}

} // namespace

RunReport run_benchmark(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.instances.size(); ++s)
    for (int i = 0; i < cfg.instances[s].count; ++i)
      for (std::size_t m = 0; m < cfg.methods.size(); ++m)
        jobs.push_back({s, i, m});

  RunReport report;
  report.recipe = "random instances: factor entries iid " + to_string(cfg.distribution) +
                  ", tensor = cpd_to_tensor(factors); seeds derived from base seed " + std::to_string(cfg.seed);
  report.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++)
      report.runs[k] = run_one(cfg, jobs[k]);
  };
  const int nworkers = std::max(1, std::min<int>(effective_workers(cfg), static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < nworkers; ++w)
    pool.emplace_back(worker);
  worker();
  for (auto& t : pool)
    t.join();

  for (std::size_t s = 0; s < cfg.instances.size(); ++s)
    for (const std::string& method : cfg.methods) {
      AggregateRow row;
      row.dims = cfg.instances[s].label();
      row.rank = cfg.instances[s].rank;
      row.method = method;
      int ok = 0;
      double tsum = 0.0, esum = 0.0;
      for (const RunRecord& r : report.runs) {
        if (r.spec != s || r.method != method)
          continue;
        ++row.runs;
        row.timeouts += r.timed_out ? 1 : 0;
        if (r.success) {
          ++ok;
          tsum += r.time;
          esum += r.err_rel;
        }
      }
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.time = ok ? tsum / ok : nan;
      row.error = ok ? esum / ok : nan;
      row.s_rate = row.runs ? static_cast<double>(ok) / row.runs : 0.0;
      report.rows.push_back(row);
    }
  return report;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

json RunReport::to_json() const {
  json rows_j = json::array();
  for (const AggregateRow& r : rows)
    rows_j.push_back({{"dims", r.dims}, {"rank", r.rank}, {"method", r.method}, {"time", number_or_null(r.time)},
                      {"error", number_or_null(r.error)}, {"s_rate", r.s_rate}, {"runs", r.runs},
                      {"timeouts", r.timeouts}});
  json runs_j = json::array();
  for (const RunRecord& r : runs)
    runs_j.push_back({{"spec", r.spec}, {"instance", r.instance}, {"method", r.method}, {"seed", r.seed},
                      {"err_rel", number_or_null(r.err_rel)}, {"time", r.time}, {"success", r.success},
                      {"timed_out", r.timed_out}, {"stage", r.stage}, {"note", r.note}});
  return {{"recipe", recipe}, {"rows", rows_j}, {"runs", runs_j}};
}

std::string RunReport::to_csv() const {
  std::ostringstream os;
  os << "dims,rank,method,time,error,s_rate\n";
  os << std::setprecision(6);
  for (const AggregateRow& r : rows) {
    os << r.dims << ',' << r.rank << ',' << r.method << ',';
    if (std::isfinite(r.time))
      os << std::fixed << r.time << std::defaultfloat;
    else
      os << "nan";
    os << ',';
    if (std::isfinite(r.error))
      os << std::scientific << r.error << std::defaultfloat;
    else
      os << "nan";
    os << ',' << r.s_rate << '\n';
  }
  return os.str();
}

} // namespace gpcpd
