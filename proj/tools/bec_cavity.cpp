// bec-cavity: command-line front end.
//
// Exit codes: 0 success, 1 computation or verification failure, 2 usage or
// configuration error.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bec_cavity/bec_cavity.hpp"

namespace {

using namespace bec_cavity;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::string table_text(ResultTable table) {
  table.add_metadata("generated", utc_timestamp());
  return table.to_csv();
}

struct Args {
  std::string config;
  std::string out;
  std::vector<double> times;
  bool nonneg_re_only = false;
  bool oracle = false;
  std::string dump_matrix;
  std::string fault;
};

std::string output_path(const Args& a, const RunConfig& cfg) { return a.out.empty() ? cfg.output : a.out; }

int cmd_groundstate(const Args& a, const RunConfig& cfg) {
  const SystemParams& p = cfg.params;
  const Grid grid(p.grid_points);
  MeanFieldState st;
  try {
    st = solve_ground_state(p, grid, cfg.meanfield);
  } catch (const ConvergenceError& e) {
    std::cerr << "bec-cavity: " << e.what() << '\n';
    return kFailure;
  }
  write_text(output_path(a, cfg), state_to_json(st, p).dump(2) + "\n");
  if (!a.dump_matrix.empty())
    write_text(a.dump_matrix, matrix_to_json(build_matrix(st, p, grid, cfg.fluctuation)).dump() + "\n");
  return kOk;
}

int cmd_spectrum(const Args& a, RunConfig cfg) {
  if (a.nonneg_re_only) cfg.nonneg_re_only = true;
  const auto points = spectrum_sweep(cfg);
  write_text(output_path(a, cfg), table_text(spectrum_table(cfg, points)));
  for (const auto& pt : points)
    if (!pt.message.empty()) std::cerr << "bec-cavity: u0=" << pt.u0 << ": " << pt.message << '\n';
  return kOk;
}

int cmd_depletion(const Args& a, RunConfig cfg) {
  if (!a.times.empty()) cfg.times = a.times;
  if (a.oracle) cfg.oracle = true;
  for (double t : cfg.times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("times must be finite and >= 0");
  const auto points = depletion_sweep(cfg);
  write_text(output_path(a, cfg), table_text(depletion_table(cfg, points)));
  for (const auto& pt : points)
    if (!pt.message.empty())
      std::cerr << "bec-cavity: delta_c=" << pt.delta_c << " u0=" << pt.u0 << ": " << pt.message << '\n';
  return kOk;
}

int cmd_verify(const Args& a, const RunConfig& cfg) {
  const VerifyReport rep = run_verification(cfg, a.fault);
  std::ostringstream os;
  os.precision(3);
  os << "# verify on grid_points=" << rep.grid_points << '\n';
  rep.print(os);
  os << (rep.all_passed() ? "all invariants passed\n" : "invariant failures detected\n");
  write_text(a.out, os.str());
  return rep.all_passed() ? kOk : kFailure;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean field, fluctuation spectrum and cavity-noise depletion of a BEC in a driven lossy cavity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BEC_CAVITY_VERSION);

  Args a;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", a.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output path (default: config 'output' or stdout)");
  };

  CLI::App* gs = app.add_subcommand("groundstate", "solve the mean field and write it as JSON");
  add_common(gs);
  gs->add_option("--dump-matrix", a.dump_matrix, "also write the fluctuation matrix as JSON");

  CLI::App* sp = app.add_subcommand("spectrum", "eigenvalues of the fluctuation matrix over a u0 sweep (CSV)");
  add_common(sp);
  sp->add_flag("--nonneg-re-only", a.nonneg_re_only, "keep only modes with Re omega >= 0");

  CLI::App* dp = app.add_subcommand("depletion", "condensate depletion over a sweep (CSV)");
  add_common(dp);
  dp->add_option("--times", a.times, "finite times t1,t2,... instead of the steady state")->delimiter(',');
  dp->add_flag("--oracle", a.oracle, "add moment-equation oracle columns (grid_points <= 32)");

  CLI::App* vf = app.add_subcommand("verify", "run the invariant suite on a reduced grid");
  add_common(vf);
  vf->add_option("--inject-fault", a.fault, "corrupt an intermediate result")
      ->check(CLI::IsMember({"symmetry", "biorthogonality"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  RunConfig cfg;
  try {
    cfg = load_config(a.config);
  } catch (const ValidationError& e) {
    std::cerr << "bec-cavity: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (gs->parsed()) return cmd_groundstate(a, cfg);
    if (sp->parsed()) return cmd_spectrum(a, cfg);
    if (dp->parsed()) return cmd_depletion(a, cfg);
    return cmd_verify(a, cfg);
  } catch (const ValidationError& e) {
    std::cerr << "bec-cavity: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "bec-cavity: " << e.what() << '\n';
    return kFailure;
  }
}
