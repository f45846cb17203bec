// Command-line runner for the MS-GFEM experiments.
//
//   msgfem <subcommand> --config FILE --out DIR [--threads N] [--check]
//
// Exit codes: 0 ok, 1 malformed config or arguments, 2 solver failure,
// 3 property violation in --check mode.

#include "msgfem/config.hpp"
#include "msgfem/pipeline.hpp"
#include "msgfem/vtk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace msgfem;

namespace {

struct Options {
  std::string config;
  std::string out = "run";
  int threads = default_threads();
  bool check = false;
};

/// Run directory with the five standard artifacts; files not produced by a
/// subcommand are written with headers only.
class RunDir {
public:
  RunDir(const Options& opt, std::string command) : dir_(opt.out), command_(std::move(command))
  {
    fs::create_directories(dir_);
    log_.open(dir_ / "log.txt");
    summary_["command"] = command_;
    summary_["config"] = fs::path(opt.config).filename().string();
  }

  fs::path path(const std::string& name) const { return dir_ / name; }
  json& summary() { return summary_; }

  void log(const std::string& line)
  {
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    log_ << '[' << std::fixed << std::setprecision(3) << t << "s] " << line << '\n';
    log_.flush();
  }

  void check(bool ok, const std::string& what)
  {
    checks_.push_back({{"property", what}, {"passed", ok}});
    log(std::string(ok ? "check passed: " : "check FAILED: ") + what);
    if (!ok) failed_ = true;
  }

  void spectra(const std::vector<LocalSpectralBasis>& bases, Index rows)
  {
    std::ofstream f(path("spectra.csv"));
    write_spectra_csv(f, bases, rows);
    wrote_spectra_ = true;
  }

  void errors(const RelativeErrors& e)
  {
    std::ofstream f(path("errors.csv"));
    write_errors_csv(f, e);
    wrote_errors_ = true;
  }

  void fields(const Mesh& mesh, const std::vector<PointVector>& pts, const std::vector<CellScalar>& cells)
  {
    std::ofstream f(path("fields.vtk"));
    write_vtk(f, mesh, pts, cells, "msgfem " + command_);
    wrote_fields_ = true;
  }

  /// Writes whatever is missing plus summary.json; returns the exit code.
  int finish(const Mesh* mesh, bool check_mode)
  {
    if (!wrote_spectra_) std::ofstream(path("spectra.csv")) << "subdomain,k,lambda,one_over_lambda,aharmonic_residual\n";
    if (!wrote_errors_) std::ofstream(path("errors.csv")) << "quantity,value\n";
    if (!wrote_fields_ && mesh) {
      std::ofstream f(path("fields.vtk"));
      write_vtk(f, *mesh, {}, {}, "msgfem " + command_);
    }
    if (!checks_.empty()) summary_["checks"] = checks_;
    std::ofstream(path("summary.json")) << summary_.dump(2) << '\n';
    log("done");
    return check_mode && failed_ ? 3 : 0;
  }

private:
  fs::path dir_;
  std::string command_;
  std::ofstream log_;
  json summary_;
  json checks_ = json::array();
  bool failed_ = false;
  bool wrote_spectra_ = false, wrote_errors_ = false, wrote_fields_ = false;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<char> floating_subdomains(const Decomposition& d)
{
  std::vector<char> out;
  for (const auto& s : d.subdomains) out.push_back(s.touches_dirichlet() ? 0 : 1);
  return out;
}

double envelope_bound(const CoarseRun& r) { return 10.0 * r.decomposition.coloring_constant / std::sqrt(r.lambda_out_min); }

/// With the whole finite spectrum selected the envelope collapses to zero and
/// only round-off remains, so the bound is not checked there.
bool within_envelope(const CoarseRun& r) { return !std::isfinite(r.lambda_out_min) || r.errors.energy <= envelope_bound(r); }

json coarse_summary(const Problem& p, const CoarseRun& r)
{
  json j;
  std::vector<int> m;
  for (const auto& b : r.bases) m.push_back(b.selected);
  j["N_dof"] = p.mesh->num_dofs();
  j["N_H"] = r.space.size();
  j["m_j"] = m;
  j["particular_columns"] = r.space.num_particular();
  j["dropped_columns"] = r.space.dropped;
  j["lambda_out_min"] = finite_or_null(r.lambda_out_min);
  j["mor_factor"] = r.reduction_factor(p.mesh->num_dofs());
  j["k0"] = r.decomposition.coloring_constant;
  j["e_d"] = r.errors.displacement;
  j["e_eps"] = r.errors.strain;
  j["energy_error"] = r.errors.energy;
  j["energy_bound"] = std::isfinite(r.lambda_out_min) ? json(envelope_bound(r)) : json(nullptr);
  return j;
}

std::vector<CellScalar> strain_stress_cells(const FieldSample& f, const std::string& prefix)
{
  static const char* comp[6] = {"xx", "yy", "zz", "yz", "xz", "xy"};
  std::vector<CellScalar> out;
  for (int c = 0; c < 6; ++c) {
    CellScalar s{prefix + "strain_" + comp[c], {}}, t{prefix + "stress_" + comp[c], {}};
    for (std::size_t e = 0; e < f.strain.size(); ++e) {
      s.values.push_back(f.strain[e](c));
      t.values.push_back(f.stress[e](c));
    }
    out.push_back(std::move(s));
    out.push_back(std::move(t));
  }
  return out;
}

CellScalar owner_cells(const Decomposition& d)
{
  CellScalar c{"subdomain", {}};
  for (int o : d.owner) c.values.push_back(o);
  return c;
}

void write_decomposition(RunDir& run, const Decomposition& d)
{
  std::ofstream f(run.path("decomposition.csv"));
  write_decomposition_csv(f, d);
}

void export_matrix(RunDir& run, const RunConfig& cfg, const Problem& p)
{
  if (!cfg.export_matrix) return;
  std::ofstream f(run.path("matrix.mtx"));
  write_matrix_market(f, p.system.reduced);
}

int cmd_solve_fine(const Options& opt, const RunConfig& cfg)
{
  RunDir run(opt, "solve-fine");
  const auto p = setup_problem(cfg.problem);
  run.log("fine system with " + std::to_string(p.system.dofs.num_free()) + " free DoFs solved directly");
  const Vector u = p.system.restrict_free(p.reference);
  const double res = (p.system.reduced * u - p.system.reduced_rhs).norm() / p.system.reduced_rhs.norm();
  export_matrix(run, cfg, p);
  run.summary()["N_dof"] = p.mesh->num_dofs();
  run.summary()["N_free"] = p.system.dofs.num_free();
  run.summary()["relative_residual"] = res;
  run.summary()["max_displacement_mm"] = p.reference.cwiseAbs().maxCoeff();
  auto cells = strain_stress_cells(p.reference_fields, "");
  if (cfg.shear_strength > 0) {
    auto fi = failure_criterion(p.reference_fields.stress_local, cfg.shear_strength, cfg.eta);
    run.summary()["max_failure_index"] = *std::max_element(fi.begin(), fi.end());
    cells.push_back({"failure_index", std::move(fi)});
  }
  run.fields(*p.mesh, {{"displacement", p.reference}}, cells);
  run.check(res <= 1e-10, "direct solve residual <= 1e-10");
  return run.finish(p.mesh.get(), opt.check);
}

int cmd_eigen_decay(const Options& opt, const RunConfig& cfg)
{
  RunDir run(opt, "eigen-decay");
  const auto p = setup_problem(cfg.problem, false);
  const auto d = build_decomposition(*p.mesh, cfg.decomposition);
  const auto pou = build_pou(*p.mesh, d);
  SpectralRequest req = cfg.spectral;
  const auto bases = solve_local_spectra(p, d, pou, req, CoarseKind::aharmonic, opt.threads);
  run.log("solved " + std::to_string(bases.size()) + " local eigenproblems");
  write_decomposition(run, d);
  run.spectra(bases, cfg.spectra_rows);

  const int rigid = p.mesh->dimension() == 3 ? 6 : 3;
  const auto floating = floating_subdomains(d);
  json subs = json::array();
  bool zero_ok = true, res_ok = true;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const auto& b = bases[j];
    double max_res = 0;
    for (double r : b.aharmonic_residuals) max_res = std::max(max_res, r);
    subs.push_back({{"subdomain", j},
                    {"floating", static_cast<bool>(floating[j])},
                    {"zero_modes", b.zero_modes},
                    {"finite_eigenvalues", b.eigenvalues.size()},
                    {"m_j", b.selected},
                    {"next_eigenvalue", finite_or_null(b.next_eigenvalue)},
                    {"max_aharmonic_residual", max_res}});
    if (floating[j]) {
      const bool gap = b.eigenvalues.size() > rigid && std::abs(b.eigenvalues(rigid - 1)) <= 1e-10 * b.eigenvalues(rigid);
      zero_ok = zero_ok && b.zero_modes == rigid && gap;
    }
    res_ok = res_ok && max_res <= 1e-8;
  }
  run.summary()["subdomains"] = subs;
  run.summary()["k0"] = d.coloring_constant;
  run.check(zero_ok, "floating subdomains have exactly " + std::to_string(rigid) + " zero eigenvalues");
  run.check(res_ok, "A-harmonic residual <= 1e-8 for selected eigenvectors");
  return run.finish(p.mesh.get(), opt.check);
}

int cmd_msgfem(const Options& opt, const RunConfig& cfg)
{
  RunDir run(opt, "msgfem");
  const auto p = setup_problem(cfg.problem);
  run.log("reference solution computed, " + std::to_string(p.mesh->num_dofs()) + " DoFs");
  const auto r = run_coarse(p, cfg.decomposition, cfg.spectral, CoarseKind::aharmonic, opt.threads);
  run.log("coarse space of size " + std::to_string(r.space.size()) + " solved");
  write_decomposition(run, r.decomposition);
  export_matrix(run, cfg, p);
  run.spectra(r.bases, cfg.spectra_rows);
  run.errors(r.errors);
  run.summary()["overlap"] = cfg.decomposition.overlap;
  run.summary()["oversampling"] = cfg.decomposition.oversampling;
  run.summary()["coarse"] = coarse_summary(p, r);

  auto cells = strain_stress_cells(r.fields, "coarse_");
  cells.push_back({"abs_delta_strain_xx", error_localization(p.reference_fields, r.fields)});
  cells.push_back(owner_cells(r.decomposition));
  if (cfg.shear_strength > 0) {
    cells.push_back({"failure_index_fine", failure_criterion(p.reference_fields.stress_local, cfg.shear_strength, cfg.eta)});
    cells.push_back({"failure_index_coarse", failure_criterion(r.fields.stress_local, cfg.shear_strength, cfg.eta)});
  }
  run.fields(*p.mesh, {{"displacement_fine", p.reference}, {"displacement_coarse", r.solution.u}}, cells);

  run.check(within_envelope(r), "energy error <= 10 k0 lambda_out_min^(-1/2)");
  double max_res = 0;
  for (const auto& b : r.bases)
    for (double x : b.aharmonic_residuals) max_res = std::max(max_res, x);
  run.check(max_res <= 1e-8, "A-harmonic residual <= 1e-8 for selected eigenvectors");
  return run.finish(p.mesh.get(), opt.check);
}

int cmd_compare_geneo(const Options& opt, const RunConfig& cfg)
{
  RunDir run(opt, "compare-geneo");
  const auto p = setup_problem(cfg.problem);
  std::ofstream table(run.path("compare.csv"));
  table << "m_beyond_zero,N_H_classic,e_d_classic,e_eps_classic,N_H_aharmonic,e_d_aharmonic,e_eps_aharmonic\n";
  table.precision(12);
  json rows = json::array();
  std::vector<LocalSpectralBasis> last_classic, last_aharmonic;
  for (int m : cfg.compare_modes) {
    SpectralRequest req = cfg.spectral;
    req.threshold.reset();
    req.modes = m;
    req.beyond_zero_modes = true;
    const auto classic = run_coarse(p, cfg.decomposition, req, CoarseKind::classic, opt.threads);
    const auto aharm = run_coarse(p, cfg.decomposition, req, CoarseKind::aharmonic, opt.threads);
    run.log("m = " + std::to_string(m) + " compared");
    table << m << ',' << classic.space.size() << ',' << classic.errors.displacement << ',' << classic.errors.strain << ','
          << aharm.space.size() << ',' << aharm.errors.displacement << ',' << aharm.errors.strain << '\n';
    rows.push_back({{"m_beyond_zero", m}, {"classic", coarse_summary(p, classic)}, {"aharmonic", coarse_summary(p, aharm)}});
    run.check(aharm.errors.strain < classic.errors.strain,
              "A-harmonic e_eps < classic e_eps at m = " + std::to_string(m));
    last_classic = classic.bases;
    last_aharmonic = aharm.bases;
  }
  run.summary()["comparison"] = rows;
  // spectra of both problems at the last m: classic first, then A-harmonic
  std::vector<LocalSpectralBasis> both = last_classic;
  both.insert(both.end(), last_aharmonic.begin(), last_aharmonic.end());
  run.spectra(both, cfg.spectra_rows);
  return run.finish(p.mesh.get(), opt.check);
}

int cmd_schwarz(const Options& opt, const RunConfig& cfg)
{
  RunDir run(opt, "schwarz");
  const auto p = setup_problem(cfg.problem, false);
  SpectralRequest req;
  req.threshold = cfg.schwarz_threshold;
  const auto r = run_schwarz(p, cfg.decomposition, req, cfg.pcg, opt.threads);
  run.log("pcg converged in " + std::to_string(r.pcg.iterations) + " iterations");
  {
    std::ofstream f(run.path("iterations.csv"));
    write_iteration_csv(f, r.pcg);
  }
  write_decomposition(run, r.decomposition);
  export_matrix(run, cfg, p);
  run.spectra(r.bases, cfg.spectra_rows);
  const double k0 = r.decomposition.coloring_constant;
  const double envelope = (k0 + 1) * (k0 + 1) * (1 + 1 / r.lambda_out_min);
  json s;
  s["N_free"] = p.system.dofs.num_free();
  s["coarse_size"] = r.coarse_size;
  s["iterations"] = r.pcg.iterations;
  s["condition_estimate"] = r.pcg.condition_estimate;
  s["lambda_min"] = r.pcg.lambda_min;
  s["lambda_max"] = r.pcg.lambda_max;
  s["lambda_out_min"] = finite_or_null(r.lambda_out_min);
  s["k0"] = r.decomposition.coloring_constant;
  s["condition_envelope"] = finite_or_null(envelope);
  run.summary()["schwarz"] = s;
  run.fields(*p.mesh, {{"displacement", p.system.expand(r.pcg.x)}}, {owner_cells(r.decomposition)});
  run.check(r.pcg.condition_estimate <= envelope, "condition estimate <= (k0+1)^2 (1 + 1/lambda_out_min)");
  run.check(r.pcg.iterations <= 60, "PCG converges within 60 iterations");
  return run.finish(p.mesh.get(), opt.check);
}

bool non_increasing(const std::vector<double>& v, double allowance = 0.10)
{
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] * (1 + allowance)) return false;
  return true;
}

int cmd_sweep(const Options& opt, const RunConfig& cfg)
{
  RunDir run(opt, "sweep");
  const auto p = setup_problem(cfg.problem);
  std::ofstream table(run.path("sweep.csv"));
  table << "kind,oversampling,m_beyond_zero,threshold,N_H,lambda_out_min,k0,e_d,e_eps,energy_error,energy_bound\n";
  table.precision(12);
  const auto nm = cfg.sweep_modes.size(), no = cfg.sweep_oversampling.size();
  std::vector<std::vector<RelativeErrors>> grid(no, std::vector<RelativeErrors>(nm));
  bool bound_ok = true;
  json points = json::array();
  auto record = [&](const CoarseRun& r, int os, const std::string& kind, const std::string& m, const std::string& t) {
    std::ostringstream bound;
    bound.precision(12);
    if (std::isfinite(r.lambda_out_min)) bound << envelope_bound(r);
    table << kind << ',' << os << ',' << m << ',' << t << ',' << r.space.size() << ',' << r.lambda_out_min << ','
          << r.decomposition.coloring_constant << ',' << r.errors.displacement << ',' << r.errors.strain << ','
          << r.errors.energy << ',' << bound.str() << '\n';
    bound_ok = bound_ok && within_envelope(r);
  };
  for (std::size_t io = 0; io < no; ++io) {
    DecompositionSpec ds = cfg.decomposition;
    ds.oversampling = cfg.sweep_oversampling[io];
    for (std::size_t im = 0; im < nm; ++im) {
      SpectralRequest req = cfg.spectral;
      req.threshold.reset();
      req.modes = cfg.sweep_modes[im];
      req.beyond_zero_modes = true;
      const auto r = run_coarse(p, ds, req, CoarseKind::aharmonic, opt.threads);
      grid[io][im] = r.errors;
      record(r, ds.oversampling, "modes", std::to_string(cfg.sweep_modes[im]), "");
      points.push_back({{"oversampling", ds.oversampling}, {"m_beyond_zero", cfg.sweep_modes[im]}, {"coarse", coarse_summary(p, r)}});
    }
    run.log("oversampling " + std::to_string(ds.oversampling) + " swept");
  }
  json threshold_points = json::array();
  for (double t : cfg.sweep_thresholds)
    for (int os : cfg.sweep_oversampling) {
      DecompositionSpec ds = cfg.decomposition;
      ds.oversampling = os;
      SpectralRequest req = cfg.spectral;
      req.modes.reset();
      req.threshold = t;
      const auto r = run_coarse(p, ds, req, CoarseKind::aharmonic, opt.threads);
      std::ostringstream ts;
      ts << t;
      record(r, os, "threshold", "", ts.str());
      threshold_points.push_back({{"oversampling", os}, {"threshold", t}, {"coarse", coarse_summary(p, r)}});
    }
  run.summary()["mode_sweep"] = points;
  run.summary()["threshold_sweep"] = threshold_points;

  bool mono = true;
  for (std::size_t io = 0; io < no; ++io) {
    std::vector<double> ed, ee;
    for (std::size_t im = 0; im < nm; ++im) {
      ed.push_back(grid[io][im].displacement);
      ee.push_back(grid[io][im].strain);
    }
    mono = mono && non_increasing(ed) && non_increasing(ee);
  }
  for (std::size_t im = 0; im < nm; ++im) {
    std::vector<double> ed, ee;
    for (std::size_t io = 0; io < no; ++io) {
      ed.push_back(grid[io][im].displacement);
      ee.push_back(grid[io][im].strain);
    }
    mono = mono && non_increasing(ed) && non_increasing(ee);
  }
  run.check(bound_ok, "energy error <= 10 k0 lambda_out_min^(-1/2) at every sweep point");
  run.check(mono, "e_d and e_eps non-increasing in m_j and in o* (10% allowance)");
  return run.finish(p.mesh.get(), opt.check);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Multiscale spectral GFEM for laminated elasticity"};
  app.require_subcommand(1);
  Options opt;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&, const RunConfig&);
  };
  const std::vector<Command> commands{
      {"solve-fine", "Direct solve of the fine-scale problem", cmd_solve_fine},
      {"eigen-decay", "Local A-harmonic spectra per subdomain", cmd_eigen_decay},
      {"msgfem", "MS-GFEM coarse approximation and errors", cmd_msgfem},
      {"compare-geneo", "Classic GenEO against A-harmonic coarse spaces", cmd_compare_geneo},
      {"schwarz", "PCG with the two-level additive Schwarz preconditioner", cmd_schwarz},
      {"sweep", "Errors over local basis sizes, oversampling and thresholds", cmd_sweep},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "INI configuration file")->required();
    sub->add_option("--out", opt.out, "Run directory");
    sub->add_option("--threads", opt.threads, "Worker threads for per-subdomain tasks")->check(CLI::PositiveNumber);
    sub->add_flag("--check", opt.check, "Exit with code 3 when a checked property fails");
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = load_config(opt.config);
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) return commands[i].run(opt, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
