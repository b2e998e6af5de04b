#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rotubes/errors.hpp"
#include "rotubes/gkf.hpp"
#include "rotubes/gp_sim.hpp"
#include "rotubes/io.hpp"
#include "rotubes/tubes.hpp"

namespace fs = std::filesystem;
using namespace rotubes;
using nlohmann::json;

namespace {

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

void emit_json(const std::string& out, const json& j) { emit(out, j.dump(2) + "\n"); }

EcSigns parse_signs(const std::string& s) {
  if (s == "summed") return EcSigns::Summed;
  if (s == "alternating") return EcSigns::Alternating;
  throw InvalidArgument("--ec-signs must be 'summed' or 'alternating'");
}

LkcFrame parse_frame(const std::string& s) {
  if (s == "principal") return LkcFrame::Principal;
  if (s == "algebra") return LkcFrame::Algebra;
  throw InvalidArgument("--lkc-frame must be 'principal' or 'algebra'");
}

struct SimArgs {
  int family = 1;
  int modulation = 1;
  int mixing = 1;
  double sigma = 0.05;
  int n = 10;
  int reps = 1000;
  std::uint64_t seed = 0;
  std::size_t grid_size = 101;
  unsigned threads = 0;
  std::string out;

  ErrorProcessSpec spec() const {
    ErrorProcessSpec s{family, modulation, mixing, sigma};
    s.validate();
    return s;
  }
};

void add_process_flags(CLI::App* cmd, SimArgs& a) {
  cmd->add_option("--family", a.family, "error process family (1 trig, 2 bump, 3 OU)")
      ->check(CLI::Range(1, 3));
  cmd->add_option("--modulation", a.modulation, "variance modulation (1, 2, 3)")
      ->check(CLI::Range(1, 3));
  cmd->add_option("--mixing", a.mixing, "coordinate mixing (1 identity, 2 mixed)")
      ->check(CLI::Range(1, 2));
  cmd->add_option("--sigma", a.sigma, "noise scale")->check(CLI::PositiveNumber);
  cmd->add_option("--n", a.n, "curves per sample")->check(CLI::Range(4, 1 << 20));
  cmd->add_option("--reps", a.reps, "Monte Carlo replications")->check(CLI::Range(1, 1 << 30));
  cmd->add_option("--seed", a.seed, "RNG seed")->required();
  cmd->add_option("--grid-size", a.grid_size, "grid points K")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--threads", a.threads, "worker threads (0: all cores)");
  cmd->add_option("--out", a.out, "output file (default: stdout)");
}

std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> alphas;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double a = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      alphas.push_back(a);
    } catch (const std::exception&) {
      throw InvalidArgument("--alphas: cannot parse '" + item + "'");
    }
  }
  if (alphas.empty()) throw InvalidArgument("--alphas is empty");
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 0.5)) throw InvalidArgument("--alphas entries must lie in (0, 0.5]");
  }
  return alphas;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous confidence tubes for rotation curves"};
  app.require_subcommand(1);

  // simulate-coverage
  SimArgs sim;
  std::string alphas_text = "0.15,0.10,0.05";
  std::string sim_signs = "summed";
  std::string sim_frame = "principal";
  auto* cmd_sim = app.add_subcommand("simulate-coverage", "coverage of tubes under a GP model");
  add_process_flags(cmd_sim, sim);
  cmd_sim->add_option("--alphas", alphas_text, "comma-separated significance levels");
  cmd_sim->add_option("--ec-signs", sim_signs, "summed | alternating");
  cmd_sim->add_option("--lkc-frame", sim_frame, "principal | algebra");

  // mc-quantile
  SimArgs mcq;
  double mcq_alpha = 0.05;
  double mcq_l1 = -1.0;
  auto* cmd_mcq = app.add_subcommand("mc-quantile", "Monte Carlo quantile of max_t H_t vs GKF");
  add_process_flags(cmd_mcq, mcq);
  cmd_mcq->add_option("--alpha", mcq_alpha, "significance level")->check(CLI::Range(1e-6, 0.5));
  cmd_mcq->add_option("--l1", mcq_l1, "L1 for the GKF comparison (default: none)");

  // tube
  std::string tube_input, tube_manifest, tube_session, tube_alignment, tube_out;
  std::string tube_euler = "zxy", tube_euler_mode = "intrinsic";
  std::string tube_signs = "summed", tube_frame = "principal";
  double tube_alpha = 0.05;
  std::size_t tube_grid = 101;
  auto* cmd_tube = app.add_subcommand("tube", "confidence tube from a directory of curves");
  auto* opt_input = cmd_tube->add_option("--input", tube_input, "directory of CSV curves");
  auto* opt_manifest = cmd_tube->add_option("--manifest", tube_manifest, "dataset manifest");
  opt_input->excludes(opt_manifest);
  cmd_tube->add_option("--session", tube_session, "session label (with --manifest)")
      ->needs(opt_manifest);
  cmd_tube->add_option("--alpha", tube_alpha, "significance level")->check(CLI::Range(1e-6, 0.5));
  auto* opt_grid = cmd_tube->add_option("--grid-size", tube_grid, "grid points K")
                       ->check(CLI::Range(2, 1 << 20));
  auto* opt_euler = cmd_tube->add_option("--euler", tube_euler, "Euler axis sequence of angle CSVs");
  auto* opt_mode = cmd_tube->add_option("--euler-mode", tube_euler_mode, "intrinsic | extrinsic");
  cmd_tube->add_option("--alignment", tube_alignment, "alignment applied to every curve");
  cmd_tube->add_option("--ec-signs", tube_signs, "summed | alternating");
  cmd_tube->add_option("--lkc-frame", tube_frame, "principal | algebra");
  cmd_tube->add_option("--out", tube_out, "output file (default: stdout)");

  // compare
  std::string cmp_a, cmp_b, cmp_alignment, cmp_out;
  auto* cmd_cmp = app.add_subcommand("compare", "overlap of two confidence tubes");
  cmd_cmp->add_option("--tube-a", cmp_a, "first tube")->required();
  cmd_cmp->add_option("--tube-b", cmp_b, "second tube")->required();
  cmd_cmp->add_option("--alignment", cmp_alignment, "alignment applied to tube b");
  cmd_cmp->add_option("--out", cmp_out, "output file (default: stdout)");

  // export-euler
  std::string exp_input, exp_out, exp_euler = "zxy", exp_mode = "intrinsic";
  std::size_t exp_grid = 101;
  auto* cmd_exp = app.add_subcommand("export-euler", "Euler angles of a curve or tube center");
  cmd_exp->add_option("--input", exp_input, "curve CSV or tube JSON")->required();
  cmd_exp->add_option("--euler", exp_euler, "axis sequence");
  cmd_exp->add_option("--euler-mode", exp_mode, "intrinsic | extrinsic");
  cmd_exp->add_option("--grid-size", exp_grid, "resampling grid for CSV input")
      ->check(CLI::Range(2, 1 << 20));
  cmd_exp->add_option("--out", exp_out, "output file (default: stdout)");

  // coverage-battery
  int battery_reps = 1000;
  std::uint64_t battery_seed = 2024;
  std::size_t battery_grid = 101;
  unsigned battery_threads = 0;
  std::string battery_out;
  auto* cmd_battery = app.add_subcommand("coverage-battery", "full coverage battery against reference values");
  cmd_battery->add_option("--reps", battery_reps, "replications per configuration")
      ->check(CLI::Range(1, 1 << 30));
  cmd_battery->add_option("--seed", battery_seed, "RNG seed");
  cmd_battery->add_option("--grid-size", battery_grid, "grid points K")->check(CLI::Range(2, 1 << 20));
  cmd_battery->add_option("--threads", battery_threads, "worker threads (0: all cores)");
  cmd_battery->add_option("--out", battery_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*cmd_sim) {
      CoverageOptions opts{{parse_frame(sim_frame), parse_signs(sim_signs)}, sim.threads};
      const CoverageReport r = coverage_experiment(sim.spec(), sim.n, sim.reps,
                                                   parse_alphas(alphas_text),
                                                   TimeGrid::uniform(sim.grid_size), sim.seed, opts);
      std::cerr << coverage_table(r);
      emit_json(sim.out, coverage_json(r));
    } else if (*cmd_mcq) {
      const ErrorProcessSpec spec = mcq.spec();
      const double q = mc_quantile_oracle(spec, mcq.n, mcq.reps, mcq_alpha,
                                          TimeGrid::uniform(mcq.grid_size), mcq.seed, mcq.threads);
      json j{{"schema", kSchemaVersion},
             {"kind", "mc_quantile"},
             {"spec", spec.label()},
             {"n", mcq.n},
             {"reps", mcq.reps},
             {"alpha", mcq_alpha},
             {"seed", mcq.seed},
             {"mc_quantile", q}};
      if (mcq_l1 >= 0.0) {
        const EcContext ctx(mcq.n, mcq_l1);
        j["l1"] = mcq_l1;
        j["gkf_summed"] = solve_quantile(mcq_alpha, ctx, EcSigns::Summed);
        j["gkf_alternating"] = solve_quantile(mcq_alpha, ctx, EcSigns::Alternating);
      }
      emit_json(mcq.out, j);
    } else if (*cmd_tube) {
      CurveSample sample = [&] {
        if (!tube_manifest.empty()) {
          DatasetManifest m = DatasetManifest::load(tube_manifest);
          if (tube_session.empty()) throw InvalidArgument("--manifest requires --session");
          if (opt_grid->count() > 0) m.grid_size = tube_grid;
          if (opt_euler->count() > 0 || opt_mode->count() > 0) {
            m.convention = EulerConvention::parse(tube_euler, tube_euler_mode);
          }
          return m.load_session(tube_session);
        }
        if (tube_input.empty()) throw InvalidArgument("tube needs --input or --manifest");
        const IngestOptions opts{tube_grid, EulerConvention::parse(tube_euler, tube_euler_mode)};
        return ingest_directory(tube_input, opts);
      }();
      if (!tube_alignment.empty()) {
        sample = apply_manifest_alignment(sample, load_alignment(tube_alignment));
      }
      const TubeOptions opts{parse_frame(tube_frame), parse_signs(tube_signs)};
      emit_json(tube_out, tube_json(build_tube(sample, tube_alpha, opts)));
    } else if (*cmd_cmp) {
      const ConfidenceTube a = load_tube(cmp_a);
      ConfidenceTube b = load_tube(cmp_b);
      if (!cmp_alignment.empty()) b = act_on_tube(b, load_alignment(cmp_alignment), a.grid());
      emit_json(cmp_out, overlap_json(compare_tubes(a, b)));
    } else if (*cmd_exp) {
      const EulerConvention conv = EulerConvention::parse(exp_euler, exp_mode);
      const fs::path in(exp_input);
      const RotationCurve curve = in.extension() == ".json"
                                      ? parse_tube(read_json(in)).center
                                      : ingest_curve_csv(in, IngestOptions{exp_grid, conv});
      emit(exp_out, euler_table_csv(export_euler(curve, conv), conv));
    } else if (*cmd_battery) {
      emit(battery_out, coverage_battery_report(battery_grid, battery_reps, battery_seed, battery_threads));
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
