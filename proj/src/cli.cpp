#include "gpcpd/cli.hpp"

#include "gpcpd/assembly.hpp"
#include "gpcpd/bench.hpp"
#include "gpcpd/errors.hpp"
#include "gpcpd/fixtures.hpp"
#include "gpcpd/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace gpcpd {

JacobianCheckSummary run_jacobian_checks(std::uint64_t seed, int instances, int points) {
  // Middle-rank profiles cycled across instances.
  const std::array<std::array<Index, 4>, 3> profiles{{{9, 4, 4, 9}, {6, 4, 3, 5}, {7, 3, 3, 5}}};
  JacobianCheckSummary out;
  for (int i = 0; i < instances; ++i) {
    const auto& p = profiles[static_cast<std::size_t>(i) % profiles.size()];
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    const PlantedInstance inst = gen_random_rank_r(p[0], p[1], p[2], p[3], Distribution::ComplexNormal, s);
    const ReducedTensor rt = build_reduced_tensor(inst.tensor, p[3], derive_seed(s, 1));
    const Index r = p[3];

    EigRowSet none;
    none.r = r;
    const ResidualSystem fq = fQ_system(make_frame(rt, none, derive_seed(s, 2), 0), rt);
    const Stage2System s2 = assemble_stage2(rt, none);
    const ResidualSystem g = g_system(s2, rt);
    Rng rng(derive_seed(s, 3));
    for (int k = 0; k < points; ++k) {
      out.max_fQ = std::max(out.max_fQ, finite_difference_check(fq, rng.complex_gaussian(r - 1, 1)));
      out.max_g = std::max(out.max_g, finite_difference_check(g, rng.complex_gaussian(s2.d(), 1)));
      ++out.points;
    }
  }
  return out;
}

namespace {

int cmd_decompose(const std::string& input, Index rank, std::uint64_t seed, double tol, const std::string& output) {
  const Tensor3 f = read_tensor(input);
  SolveOptions opts;
  opts.seed = seed;
  opts.success_tol = tol;
  const DecomposeResult res = decompose(f, rank, opts);
  nlohmann::json rep = {{"err_rel", res.report.err_rel},      {"stage", to_string(res.report.stage_used)},
                        {"retries", res.report.retries},      {"elapsed", res.report.elapsed},
                        {"seed", res.report.seed},            {"success", res.report.success}};
  if (!output.empty() && res.factors.rank() > 0)
    write_factors(output, res.factors);
  std::cout << rep.dump(1) << '\n';
  return res.report.success ? 0 : 1;
}

int cmd_fixture(const std::string& name, const std::string& dir) {
  Fixture fx;
  if (name == "example41")
    fx = fixture_example41();
  else if (name == "example42")
    fx = fixture_example42();
  else
    throw ParseError("unknown fixture '" + name + "'");
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir) / name;
  write_tensor(base.string() + ".json", fx.tensor);
  write_factors(base.string() + "_factors.json", fx.factors);
  std::cout << base.string() << ".json\n";
  return 0;
}

int cmd_bench(const std::string& config, const std::string& out) {
  const BenchConfig cfg = BenchConfig::from_json(read_json_file(config));
  const RunReport rep = run_benchmark(cfg);
  const std::filesystem::path p(out);
  if (p.extension() == ".csv") {
    std::ofstream os(out);
    if (!os)
      throw ParseError("cannot write " + out);
    os << rep.to_csv();
    write_json_file(std::filesystem::path(p).replace_extension(".json").string(), rep.to_json());
  } else {
    write_json_file(out, rep.to_json());
  }
  std::cout << rep.to_csv();
  return 0;
}

int cmd_check_jacobians(std::uint64_t seed) {
  const JacobianCheckSummary s = run_jacobian_checks(seed);
  std::cout << "f_Q max discrepancy " << s.max_fQ << "\ng   max discrepancy " << s.max_g << "\npoints "
            << s.points << '\n';
  return s.max_fQ <= 1e-6 && s.max_g <= 1e-6 ? 0 : 1;
}

} // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Generating-polynomial CP decomposition of order-3 tensors"};
  app.require_subcommand(1);

  std::string input, output, name, dir = ".", config, out;
  Index rank = 0;
  std::uint64_t seed = 0;
  double tol = 1e-6;

  auto* dec = app.add_subcommand("decompose", "Decompose a tensor from a JSON file");
  dec->add_option("--input", input)->required();
  dec->add_option("--rank", rank)->required();
  dec->add_option("--seed", seed);
  dec->add_option("--tol", tol, "success threshold on err-rel");
  dec->add_option("--output", output, "factor JSON output path");

  auto* fix = app.add_subcommand("fixture", "Write a fixture tensor and its factors");
  fix->add_option("--name", name)->required()->check(CLI::IsMember({"example41", "example42"}));
  fix->add_option("--out", dir);

  auto* bench = app.add_subcommand("bench", "Run a benchmark configuration");
  bench->add_option("--config", config)->required();
  bench->add_option("--out", out)->required();

  auto* jac = app.add_subcommand("check-jacobians", "Finite-difference Jacobian checks");
  jac->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*dec)
      return cmd_decompose(input, rank, seed, tol, output);
    if (*fix)
      return cmd_fixture(name, dir);
    if (*bench)
      return cmd_bench(config, out);
    return cmd_check_jacobians(seed);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedRankError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const StructuralError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "solve failed: " << e.what() << '\n';
    return 1;
  }
}

} // namespace gpcpd
