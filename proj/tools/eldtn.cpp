// Command-line front end: eldtn solve|adapt <config>, eldtn verify.
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "eldtn/adapt.hpp"
#include "eldtn/analytic.hpp"
#include "eldtn/config.hpp"
#include "eldtn/verify.hpp"
#include "eldtn/vtk.hpp"

namespace fs = std::filesystem;
using namespace eldtn;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(12);
  return out;
}

void prepare_outdir(const RunConfig& rc) {
  std::error_code ec;
  fs::create_directories(rc.outdir, ec);
  if (ec) throw Error("cannot create output directory " + rc.outdir.string() + ": " + ec.message());
  open_output(rc.outdir / "config.txt") << rc.text;
}

void write_efficiencies(const fs::path& path, const EfficiencyTable<double>& table) {
  std::ofstream out = open_output(path);
  out << "n1,n2,type,efficiency\n";
  for (const auto& e : table.entries) out << e.n[0] << ',' << e.n[1] << ',' << e.type << ',' << e.value << '\n';
}

void write_field(const RunConfig& rc, const PeriodicTetMesh& mesh, const Field& field, const Indicators& ind) {
  if (!rc.export_vtk) return;
  write_vtk((rc.outdir / "solution.vtk").string(), mesh, {{"u_scattered", field.nodal}}, {{"eta", ind.eta}});
}

void write_record(std::ostream& out, const IterationRecord& r) {
  out << r.iter << ',' << r.n_dofs << ',' << r.n_tets << ',' << r.N << ',' << r.eps_h << ',' << r.eps_N << ',';
  if (r.h1_error) out << *r.h1_error;
  out << ',' << r.efficiency_sum << ',' << r.wall_seconds << '\n';
}

int chosen_N(const RunConfig& rc) {
  const AdaptConfig& c = rc.adapt;
  if (c.N) return *c.N;
  const double volume = c.profile.fluid_volume(c.Lambda1, c.Lambda2, c.h);
  return choose_N(c.medium, c.incidence, c.lattice(), c.eps_N_target, incident_h1_norm(c.medium, volume));
}

int cmd_solve(const RunConfig& rc, bool dry_run) {
  const int N = chosen_N(rc);
  std::cout << "N = " << N << " (" << (2 * N + 1) * (2 * N + 1) << " modes)\n";
  if (dry_run) return 0;
  prepare_outdir(rc);
  const AdaptConfig& c = rc.adapt;
  const PeriodicTetMesh mesh = build_mesh(c.profile, c.Lambda1, c.Lambda2, c.h, c.divisions);
  const ModeTable<double> modes(c.medium, c.incidence, c.lattice(), N);
  const Solution s = solve_once(mesh, c, modes);
  write_field(rc, mesh, s.field, s.indicators);
  write_efficiencies(rc.outdir / "efficiencies.csv", s.efficiencies);
  std::cout << "dofs " << s.dofs.n_free << ", tets " << mesh.num_tets() << ", relative residual "
            << s.solve.relative_residual << "\n";
  std::cout << "eps_h " << s.indicators.eps_h << ", eps_N " << s.indicators.eps_N << ", efficiency sum "
            << s.efficiencies.sum << "\n";
  if (s.h1_error) std::cout << "H1 seminorm error " << *s.h1_error << "\n";
  return 0;
}

int cmd_adapt(const RunConfig& rc, bool dry_run) {
  const int N = chosen_N(rc);
  std::cout << "N = " << N << " (" << (2 * N + 1) * (2 * N + 1) << " modes)\n";
  if (dry_run) return 0;
  prepare_outdir(rc);
  AdaptConfig c = rc.adapt;
  c.N = N;
  std::ofstream csv = open_output(rc.outdir / "convergence.csv");
  csv << "iter,n_dofs,n_tets,N,eps_h,eps_N,h1_error,efficiency_sum,wall_seconds\n";
  const AdaptResult result = run(c, [&](const IterationRecord& r) {
    write_record(csv, r);
    csv.flush();
    std::cout << "iter " << r.iter << ": dofs " << r.n_dofs << ", eps_h " << r.eps_h << ", efficiency sum "
              << r.efficiency_sum;
    if (r.h1_error) std::cout << ", H1 error " << *r.h1_error;
    std::cout << " (" << std::fixed << std::setprecision(1) << r.wall_seconds << " s)\n" << std::defaultfloat
              << std::setprecision(6);
  });
  write_field(rc, result.mesh, result.field, result.indicators);
  write_efficiencies(rc.outdir / "efficiencies.csv", result.efficiencies);
  std::cout << "stopped: " << result.stop_reason << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& groups, bool flip) {
  VerifyOptions opt;
  opt.flip_dtn_sign = flip;
  bool all = true;
  for (const std::string& g : groups.empty() ? verify_group_names() : groups) {
    const VerifyGroup r = run_verify_group(g, opt);
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.checks << " checks)\n";
    for (const std::string& f : r.failures) std::cout << "  " << f << "\n";
    all = all && r.passed;
  }
  return all ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic scattering by biperiodic surfaces: adaptive FEM with a DtN boundary"};
  app.require_subcommand(1);

  std::string config_path;
  bool dry_run = false;
  auto* solve_cmd = app.add_subcommand("solve", "single solve on the initial mesh");
  solve_cmd->add_option("config", config_path, "configuration file")->required();
  solve_cmd->add_flag("--dry-run", dry_run, "validate the configuration and print N");
  auto* adapt_cmd = app.add_subcommand("adapt", "adaptive refinement loop");
  adapt_cmd->add_option("config", config_path, "configuration file")->required();
  adapt_cmd->add_flag("--dry-run", dry_run, "validate the configuration and print N");

  std::vector<std::string> groups;
  bool flip = false;
  auto* verify_cmd = app.add_subcommand("verify", "built-in identity and oracle checks");
  verify_cmd->add_option("--group", groups, "group to run (repeatable)")
      ->check(CLI::IsMember(verify_group_names()));
  verify_cmd->add_flag("--flip-dtn-sign", flip, "test hook: negate the DtN matrices");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify_cmd->parsed()) return cmd_verify(groups, flip);
    const RunConfig rc = load_config(config_path);
    if (solve_cmd->parsed()) return cmd_solve(rc, dry_run);
    return cmd_adapt(rc, dry_run);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
