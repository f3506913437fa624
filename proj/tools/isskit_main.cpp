#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "isskit/csv.hpp"
#include "isskit/examples.hpp"
#include "isskit/json_io.hpp"

using namespace isskit;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

Eigen::MatrixXd parse_matrix(const std::string& text) {
  // Rows separated by ';', entries by ','. Example: "-1,0.5;0,-2".
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find(';', pos);
    const std::string row = text.substr(pos, next == std::string::npos ? next : next - pos);
    std::vector<double> vals;
    std::size_t rp = 0;
    while (rp <= row.size()) {
      const std::size_t comma = row.find(',', rp);
      const std::string tok = row.substr(rp, comma == std::string::npos ? comma : comma - rp);
      if (!tok.empty()) vals.push_back(std::stod(tok));
      if (comma == std::string::npos) break;
      rp = comma + 1;
    }
    if (!vals.empty()) rows.push_back(std::move(vals));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (rows.empty()) throw Error("empty matrix literal");
  Eigen::MatrixXd M(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error("ragged matrix literal");
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

/// Writes the run report and guarantees a FAIL run names a witness file.
int finish(const std::string& out_dir, nlohmann::json report, bool pass) {
  if (!out_dir.empty()) {
    if (!pass) {
      auto witnesses = report.value("witness_files", std::vector<std::string>{});
      if (witnesses.empty()) {
        const std::string path = out_dir + "/witness_report.json";
        write_json_file(path, report);
        witnesses.push_back(path);
      }
      report["witness_files"] = witnesses;
    }
    write_json_file(out_dir + "/report.json", report);
  }
  std::printf("%s\n", report.value("headline", std::string(pass ? "PASS" : "FAIL")).c_str());
  return pass ? kExitPass : kExitFail;
}

SystemSpec load_spec(const std::string& path, int n_interior_override) {
  SystemSpec spec = system_spec_from_json(read_json_file(path));
  if (n_interior_override > 0) spec.grid = Grid1D(spec.grid.d, n_interior_override);
  return spec;
}

struct CommonOpts {
  std::string out_dir;
  std::uint64_t seed = 1;
  int n_interior = 0;  // 0: keep the spec's grid
};

nlohmann::json config_echo(const CommonOpts& c, nlohmann::json extra) {
  extra["seed"] = c.seed;
  extra["out_dir"] = c.out_dir;
  if (c.n_interior > 0) extra["n_interior"] = c.n_interior;
  return extra;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISS certification toolkit for 1-D reaction-diffusion networks"};
  app.require_subcommand(1);

  CommonOpts common;
  int exit_code = kExitPass;

  // --- simulate ---------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "integrate a system and dump trajectory CSVs");
  std::string sim_spec_path, sim_input_path, sim_init = "random";
  double sim_t_end = 1.0, sim_dt = 0.0, sim_amp = 1.0, sim_m_max = 1e8;
  int sim_stride = 10, sim_mode = 1;
  std::vector<double> sim_const_input;
  sim_cmd->add_option("--spec", sim_spec_path, "system spec JSON")->required();
  sim_cmd->add_option("--input", sim_input_path, "input signal JSON");
  sim_cmd->add_option("--input-const", sim_const_input, "constant input per channel");
  sim_cmd->add_option("--init", sim_init, "initial state: random|zero|mode");
  sim_cmd->add_option("--mode", sim_mode, "sine mode for --init mode");
  sim_cmd->add_option("--amp", sim_amp, "initial amplitude (sup norm)");
  sim_cmd->add_option("--t-end", sim_t_end, "final time");
  sim_cmd->add_option("--dt", sim_dt, "time step (0: default)");
  sim_cmd->add_option("--stride", sim_stride, "record every n-th step");
  sim_cmd->add_option("--m-max", sim_m_max, "sup-norm blow-up bound");
  sim_cmd->add_option("--n-interior", common.n_interior, "grid override");
  sim_cmd->add_option("--seed", common.seed, "rng seed");
  sim_cmd->add_option("--out", common.out_dir, "output directory")->required();
  sim_cmd->callback([&] {
    const SystemSpec spec = load_spec(sim_spec_path, common.n_interior);
    InputSignal input = InputSignal::zero(spec.n_channels);
    if (!sim_input_path.empty()) {
      input = input_signal_from_json(read_json_file(sim_input_path));
    } else if (!sim_const_input.empty()) {
      input = InputSignal::constant(sim_const_input);
    }
    if (input.n_channels() != spec.n_channels) {
      throw Error("input channels do not match the spec");
    }
    Field init(spec.grid, spec.n_species);
    if (sim_init == "random") {
      FieldSampler sampler(spec, {}, common.seed);
      init = sampler.sample_with_norm(NormKind::Sup, sim_amp);
    } else if (sim_init == "mode") {
      for (int k = 0; k < spec.n_species; ++k) {
        for (int i = 0; i < spec.grid.n_interior; ++i) {
          init.values(i, k) =
              sim_amp * std::sin(sim_mode * 3.14159265358979323846 * spec.grid.node(i) / spec.grid.d);
        }
      }
    } else if (sim_init != "zero") {
      throw Error("unknown --init '" + sim_init + "'");
    }
    SimulateOptions so;
    so.t_end = sim_t_end;
    so.dt = sim_dt;
    so.stride = sim_stride;
    so.m_max = sim_m_max;
    const Trajectory traj = simulate(spec, init, input, so);
    write_trajectory_csv(common.out_dir + "/trajectory.csv", spec, traj);
    write_norms_csv(common.out_dir + "/norms.csv", spec, traj);
    nlohmann::json report;
    report["command"] = "simulate";
    report["config"] = config_echo(common, {{"spec", sim_spec_path},
                                            {"t_end", sim_t_end},
                                            {"dt", so.dt > 0 ? so.dt : default_dt(spec)},
                                            {"stride", sim_stride}});
    report["blowup"] = traj.blowup ? nlohmann::json(*traj.blowup) : nlohmann::json(nullptr);
    report["steps_recorded"] = traj.times.size();
    report["final_time"] = traj.times.back();
    report["data_paths"] = {common.out_dir + "/trajectory.csv", common.out_dir + "/norms.csv"};
    report["headline"] = traj.blowup
                             ? "simulation halted at blow-up t = " + format_g17(*traj.blowup)
                             : "simulation completed to t = " + format_g17(traj.times.back());
    exit_code = finish(common.out_dir, report, true);
  });

  // --- spectrum ----------------------------------------------------------
  auto* spec_cmd = app.add_subcommand("spectrum", "eigenvalues of the discretized generator");
  std::string spectrum_spec_path;
  spec_cmd->add_option("--spec", spectrum_spec_path, "system spec JSON")->required();
  spec_cmd->add_option("--n-interior", common.n_interior, "grid override");
  spec_cmd->add_option("--out", common.out_dir, "output directory")->required();
  spec_cmd->callback([&] {
    const SystemSpec spec = load_spec(spectrum_spec_path, common.n_interior);
    const auto ev = generator_spectrum(spec);
    std::vector<std::vector<double>> rows;
    for (const auto& z : ev) rows.push_back({z.real(), z.imag()});
    write_table_csv(common.out_dir + "/spectrum.csv", "real,imag", rows);
    nlohmann::json report;
    report["command"] = "spectrum";
    report["config"] = config_echo(common, {{"spec", spectrum_spec_path}});
    report["max_real"] = ev.front().real();
    report["stable"] = ev.front().real() < 0.0;
    report["data_paths"] = {common.out_dir + "/spectrum.csv"};
    report["headline"] = std::string("spectral abscissa ") + format_g17(ev.front().real()) +
                         (ev.front().real() < 0.0 ? " (stable)" : " (unstable)");
    exit_code = finish(common.out_dir, report, true);
  });

  // --- small-gain --------------------------------------------------------
  auto* sg_cmd = app.add_subcommand("small-gain", "cycle-based small-gain decision");
  std::string sg_gains_path;
  sg_cmd->add_option("--gains", sg_gains_path, "gain matrix JSON")->required();
  sg_cmd->add_option("--out", common.out_dir, "output directory");
  sg_cmd->callback([&] {
    const GainMatrix gains = gain_matrix_from_json(read_json_file(sg_gains_path));
    const Certificate cert = check_small_gain(gains);
    nlohmann::json report;
    report["command"] = "small-gain";
    report["config"] = config_echo(common, {{"gains", sg_gains_path}});
    report["certificate"] = cert.to_json();
    report["headline"] = cert.verdict ? "small-gain condition holds"
                                      : "small-gain condition fails";
    if (!cert.verdict && !common.out_dir.empty()) {
      const std::string path = common.out_dir + "/witness_cycles.json";
      write_json_file(path, cert.details["cycles"]);
      report["witness_files"] = {path};
    }
    exit_code = finish(common.out_dir, report, cert.verdict);
  });

  // --- omega-path --------------------------------------------------------
  auto* op_cmd = app.add_subcommand("omega-path", "construct and verify an omega-path");
  std::string op_gains_path;
  std::vector<double> op_anchor;
  std::size_t op_samples = 100;
  op_cmd->add_option("--gains", op_gains_path, "gain matrix JSON")->required();
  op_cmd->add_option("--anchor", op_anchor, "anchor vector (default all ones)");
  op_cmd->add_option("--samples", op_samples, "verification sample count");
  op_cmd->add_option("--out", common.out_dir, "output directory");
  op_cmd->callback([&] {
    const GainMatrix gains = gain_matrix_from_json(read_json_file(op_gains_path));
    nlohmann::json report;
    report["command"] = "omega-path";
    report["config"] = config_echo(common, {{"gains", op_gains_path}, {"samples", op_samples}});
    try {
      OmegaPath path = op_anchor.empty() ? build_omega_path(gains)
                                         : build_omega_path(gains, op_anchor);
      OmegaPathVerifyOptions vo;
      vo.r_samples = op_samples;
      const Certificate cert = verify_omega_path(gains, path, vo);
      nlohmann::json sigmas = nlohmann::json::array();
      for (const auto& s : path.sigmas) sigmas.push_back(kfun_to_json(s));
      report["path"] = {{"sigmas", sigmas}, {"verified", path.verified}};
      report["certificate"] = cert.to_json();
      report["headline"] = cert.verdict ? "omega-path constructed and verified"
                                        : "omega-path verification failed";
      exit_code = finish(common.out_dir, report, cert.verdict);
    } catch (const SmallGainViolated&) {
      const Certificate cert = check_small_gain(gains);
      report["certificate"] = cert.to_json();
      report["headline"] = "small-gain condition fails; no omega-path exists";
      if (!common.out_dir.empty()) {
        const std::string path = common.out_dir + "/witness_cycles.json";
        write_json_file(path, cert.details["cycles"]);
        report["witness_files"] = {path};
      }
      exit_code = finish(common.out_dir, report, false);
    }
  });

  // --- certify -----------------------------------------------------------
  auto* cert_cmd = app.add_subcommand("certify", "sampled gain-implication certificate");
  std::string cert_spec_path, cert_lf_path;
  long cert_samples = 200;
  double cert_tol_rel = 0.0, cert_amp_lo = 1e-2, cert_amp_hi = 10.0;
  cert_cmd->add_option("--spec", cert_spec_path, "system spec JSON")->required();
  cert_cmd->add_option("--lyapunov", cert_lf_path, "Lyapunov candidate JSON")->required();
  cert_cmd->add_option("--samples", cert_samples, "sample count");
  cert_cmd->add_option("--tol-rel", cert_tol_rel, "relative tolerance");
  cert_cmd->add_option("--amp-lo", cert_amp_lo, "smallest sampled amplitude");
  cert_cmd->add_option("--amp-hi", cert_amp_hi, "largest sampled amplitude");
  cert_cmd->add_option("--n-interior", common.n_interior, "grid override");
  cert_cmd->add_option("--seed", common.seed, "rng seed");
  cert_cmd->add_option("--out", common.out_dir, "output directory");
  cert_cmd->callback([&] {
    const SystemSpec spec = load_spec(cert_spec_path, common.n_interior);
    const LyapunovFn V = lyapunov_from_json(spec, read_json_file(cert_lf_path));
    ImplicationOptions io;
    io.n_samples = cert_samples;
    io.tol_rel = cert_tol_rel;
    io.seed = common.seed;
    io.sampler.amp_lo = cert_amp_lo;
    io.sampler.amp_hi = cert_amp_hi;
    io.crosscheck_fd = true;
    if (!common.out_dir.empty()) io.witness_dir = common.out_dir + "/witnesses";
    const Certificate cert = check_implication(V, spec, io);
    nlohmann::json report;
    report["command"] = "certify";
    report["config"] = config_echo(
        common, {{"spec", cert_spec_path}, {"lyapunov", cert_lf_path}, {"samples", cert_samples}});
    report["certificate"] = cert.to_json();
    report["witness_files"] = cert.witness_files;
    report["headline"] = cert.vacuous ? "certificate vacuous: no applicable samples"
                         : cert.verdict ? "gain implication certified"
                                        : "gain implication violated";
    exit_code = finish(common.out_dir, report, cert.verdict);
  });

  // --- linearize ---------------------------------------------------------
  auto* lin_cmd = app.add_subcommand("linearize", "local certificate from the linear part");
  std::string lin_spec_path;
  LinearizationOptions lin_opts;
  lin_cmd->add_option("--spec", lin_spec_path, "system spec JSON")->required();
  lin_cmd->add_option("--ceiling", lin_opts.ceiling, "amplitude search ceiling");
  lin_cmd->add_option("--theta", lin_opts.theta, "certified decay coefficient");
  lin_cmd->add_option("--samples", lin_opts.samples_per_level, "samples per bisection level");
  lin_cmd->add_option("--n-interior", common.n_interior, "grid override");
  lin_cmd->add_option("--seed", common.seed, "rng seed");
  lin_cmd->add_option("--out", common.out_dir, "output directory");
  lin_cmd->callback([&] {
    const SystemSpec spec = load_spec(lin_spec_path, common.n_interior);
    lin_opts.seed = common.seed;
    nlohmann::json report;
    report["command"] = "linearize";
    report["config"] = config_echo(common, {{"spec", lin_spec_path},
                                            {"ceiling", lin_opts.ceiling},
                                            {"theta", lin_opts.theta}});
    try {
      const LinearizationResult res = build_linearization_lyapunov(spec, lin_opts);
      report["radius"] = res.radius;
      report["certificate"] = res.certificate.to_json();
      report["headline"] =
          "local certificate with sqrt gain, certified amplitude " + format_g17(res.radius);
      exit_code = finish(common.out_dir, report, true);
    } catch (const NotHurwitz& e) {
      report["headline"] = std::string("linearization unavailable: ") + e.what();
      exit_code = finish(common.out_dir, report, false);
    } catch (const NoPositiveRadius& e) {
      report["headline"] = std::string("no certified radius: ") + e.what();
      exit_code = finish(common.out_dir, report, false);
    }
  });

  // --- composite ---------------------------------------------------------
  auto* comp_cmd = app.add_subcommand("composite", "blend subsystem certificates over a path");
  std::string comp_spec_path, comp_gains_path;
  std::vector<std::string> comp_sub_paths;
  int comp_trajectories = 5;
  double comp_t_end = 5.0;
  comp_cmd->add_option("--spec", comp_spec_path, "coupled system spec JSON")->required();
  comp_cmd->add_option("--gains", comp_gains_path, "gain matrix JSON")->required();
  comp_cmd->add_option("--subs", comp_sub_paths, "subsystem Lyapunov JSONs (species order)")
      ->required();
  comp_cmd->add_option("--trajectories", comp_trajectories, "decrease-check trajectory count");
  comp_cmd->add_option("--t-end", comp_t_end, "decrease-check horizon");
  comp_cmd->add_option("--n-interior", common.n_interior, "grid override");
  comp_cmd->add_option("--seed", common.seed, "rng seed");
  comp_cmd->add_option("--out", common.out_dir, "output directory");
  comp_cmd->callback([&] {
    const SystemSpec spec = load_spec(comp_spec_path, common.n_interior);
    const GainMatrix gains = gain_matrix_from_json(read_json_file(comp_gains_path));
    std::vector<LyapunovFn> subs;
    for (const auto& p : comp_sub_paths) {
      subs.push_back(lyapunov_from_json(spec, read_json_file(p)));
    }
    nlohmann::json report;
    report["command"] = "composite";
    report["config"] = config_echo(common, {{"spec", comp_spec_path},
                                            {"gains", comp_gains_path},
                                            {"trajectories", comp_trajectories}});
    try {
      OmegaPath path = build_omega_path(gains);
      const Certificate path_cert = verify_omega_path(gains, path);
      const LyapunovFn V = build_composite_lyapunov(subs, gains, path);
      std::vector<Trajectory> trajs;
      SimulateOptions so;
      so.t_end = comp_t_end;
      so.stride = 10;
      for (int k = 0; k < comp_trajectories; ++k) {
        FieldSampler sampler(spec, {}, split_seed(common.seed, static_cast<std::uint64_t>(k)));
        trajs.push_back(simulate(spec, sampler.sample_with_norm(NormKind::Sup, 0.5),
                                 InputSignal::zero(spec.n_channels), so));
      }
      const Certificate dec = check_trajectory_decrease(V, spec, trajs, 1e-6);
      report["path_certificate"] = path_cert.to_json();
      report["decrease_certificate"] = dec.to_json();
      const bool pass = path_cert.verdict && dec.verdict;
      report["headline"] = pass ? "composite certificate decreasing along trajectories"
                                : "composite certificate failed";
      exit_code = finish(common.out_dir, report, pass);
    } catch (const SmallGainViolated& e) {
      report["headline"] = std::string("composite unavailable: ") + e.what();
      exit_code = finish(common.out_dir, report, false);
    }
  });

  // --- example -----------------------------------------------------------
  auto* ex_cmd = app.add_subcommand("example", "run a bundled model problem");
  std::string ex_id;
  double ex_a = 1.0, ex_m = 1.0, ex_gain_a = 2.0;
  double ex_c1 = 1.0, ex_c2 = 1.0, ex_d = 3.14159265358979323846;
  double ex_a12 = 0.9, ex_a21 = 0.9, ex_eps = 0.1, ex_b = 1.5, ex_eps1 = 0.1, ex_eps2 = 0.1;
  double ex_t_end = 10.0, ex_truncation = 800.0, ex_input_mag = 0.2;
  std::string ex_R = "-1,0.5;0,-2";
  std::string ex_reaction = "cubic_odd";
  std::vector<double> ex_t_grid = {25.0, 100.0, 400.0};
  int ex_n_interior = 200, ex_trajectories = 0;
  long ex_samples = 0;
  bool ex_unstable_ok = false;
  ex_cmd->add_option("--id", ex_id,
                     "counterexample|neumann-hurwitz|semilinear|coupled-linear|coupled-nonlinear")
      ->required();
  ex_cmd->add_option("--a", ex_a, "counterexample input amplitude");
  ex_cmd->add_option("--t-grid", ex_t_grid, "counterexample times");
  ex_cmd->add_option("--truncation", ex_truncation, "counterexample axis half-width");
  ex_cmd->add_option("--R", ex_R, "coupling matrix rows 'a,b;c,d'");
  ex_cmd->add_option("--input-mag", ex_input_mag, "constant input magnitude");
  ex_cmd->add_flag("--expect-unstable", ex_unstable_ok, "expect a non-Hurwitz matrix");
  ex_cmd->add_option("--m", ex_m, "semilinear input exponent");
  ex_cmd->add_option("--gain-a", ex_gain_a, "semilinear gain factor a > 1");
  ex_cmd->add_option("--reaction", ex_reaction, "semilinear reaction id");
  ex_cmd->add_option("--c1", ex_c1, "first diffusion coefficient");
  ex_cmd->add_option("--c2", ex_c2, "second diffusion coefficient");
  ex_cmd->add_option("--d", ex_d, "domain length");
  ex_cmd->add_option("--a12", ex_a12, "coupling of species 2 into 1");
  ex_cmd->add_option("--a21", ex_a21, "coupling of species 1 into 2");
  ex_cmd->add_option("--eps", ex_eps, "margin parameter for the linear pair");
  ex_cmd->add_option("--b", ex_b, "damping of the nonlinear pair");
  ex_cmd->add_option("--eps1", ex_eps1, "first margin parameter");
  ex_cmd->add_option("--eps2", ex_eps2, "second margin parameter");
  ex_cmd->add_option("--t-end", ex_t_end, "simulation horizon");
  ex_cmd->add_option("--n-interior", ex_n_interior, "grid size");
  ex_cmd->add_option("--samples", ex_samples, "certificate sample count");
  ex_cmd->add_option("--trajectories", ex_trajectories, "trajectory count");
  ex_cmd->add_option("--seed", common.seed, "rng seed");
  ex_cmd->add_option("--out", common.out_dir, "output directory");
  ex_cmd->callback([&] {
    if (common.out_dir.empty()) common.out_dir = "out/" + ex_id;
    ExampleReport report;
    if (ex_id == "counterexample") {
      CounterexampleOptions o;
      o.a = ex_a;
      o.t_grid = ex_t_grid;
      o.s_truncation = ex_truncation;
      o.out_dir = common.out_dir;
      report = run_counterexample(o);
    } else if (ex_id == "neumann-hurwitz") {
      NeumannHurwitzOptions o;
      o.R = parse_matrix(ex_R);
      o.diffusion = {ex_c1};
      o.stable_expected = !ex_unstable_ok;
      o.n_interior = std::min(ex_n_interior, 150);
      o.t_end = ex_t_end;
      o.input_mag = ex_input_mag;
      o.seed = common.seed;
      o.out_dir = common.out_dir;
      report = run_neumann_hurwitz(o);
    } else if (ex_id == "semilinear") {
      SemilinearEnergyOptions o;
      o.m = ex_m;
      o.a = ex_gain_a;
      o.reaction = {ex_reaction, 1.0};
      o.n_interior = ex_n_interior;
      if (ex_samples > 0) o.n_samples = ex_samples;
      o.seed = common.seed;
      o.out_dir = common.out_dir;
      report = run_semilinear_energy(o);
    } else if (ex_id == "coupled-linear") {
      CoupledLinearOptions o;
      o.c1 = ex_c1;
      o.c2 = ex_c2;
      o.d = ex_d;
      o.a12 = ex_a12;
      o.a21 = ex_a21;
      o.eps = ex_eps;
      o.n_interior = ex_n_interior;
      if (ex_trajectories > 0) o.n_trajectories = ex_trajectories;
      if (ex_samples > 0) o.n_samples = ex_samples;
      o.t_end = ex_t_end;
      o.seed = common.seed;
      o.out_dir = common.out_dir;
      report = run_coupled_linear(o);
    } else if (ex_id == "coupled-nonlinear") {
      CoupledNonlinearOptions o;
      o.c1 = ex_c1;
      o.c2 = ex_c2;
      o.d = ex_d;
      o.b = ex_b;
      o.eps1 = ex_eps1;
      o.eps2 = ex_eps2;
      o.n_interior = ex_n_interior;
      if (ex_trajectories > 0) o.n_trajectories = ex_trajectories;
      if (ex_samples > 0) o.n_samples = ex_samples;
      o.t_end = ex_t_end;
      o.seed = common.seed;
      o.out_dir = common.out_dir;
      report = run_coupled_nonlinear(o);
    } else {
      throw Error("unknown example id '" + ex_id + "'");
    }
    std::printf("%s\n", report.headline.c_str());
    exit_code = report.verdict ? kExitPass : kExitFail;
  });

  // --- envelope ----------------------------------------------------------
  auto* env_cmd = app.add_subcommand("envelope", "fit an exponential ISS envelope");
  std::string env_spec_path;
  std::vector<double> env_x0 = {0.5, 1.0, 2.0};
  std::vector<double> env_u = {0.0};
  double env_t_end = 6.0, env_gamma_coeff = 1.0, env_gamma_expo = 1.0;
  env_cmd->add_option("--spec", env_spec_path, "system spec JSON")->required();
  env_cmd->add_option("--x0-norms", env_x0, "initial norms of the ensemble");
  env_cmd->add_option("--input-mags", env_u, "constant input magnitudes");
  env_cmd->add_option("--t-end", env_t_end, "horizon");
  env_cmd->add_option("--gamma-coeff", env_gamma_coeff, "input gain coefficient");
  env_cmd->add_option("--gamma-expo", env_gamma_expo, "input gain exponent");
  env_cmd->add_option("--n-interior", common.n_interior, "grid override");
  env_cmd->add_option("--seed", common.seed, "rng seed");
  env_cmd->add_option("--out", common.out_dir, "output directory");
  env_cmd->callback([&] {
    const SystemSpec spec = load_spec(env_spec_path, common.n_interior);
    std::vector<EnsembleTrajectory> ensemble;
    std::uint64_t salt = 0;
    std::vector<std::vector<double>> rows;
    for (double x0 : env_x0) {
      for (double u : env_u) {
        FieldSampler sampler(spec, {}, split_seed(common.seed, salt++));
        SimulateOptions so;
        so.t_end = env_t_end;
        so.stride = 20;
        const InputSignal input = spec.n_channels > 0
                                      ? InputSignal::constant(std::vector<double>(
                                            static_cast<std::size_t>(spec.n_channels), u))
                                      : InputSignal::zero(0);
        const Trajectory traj =
            simulate(spec, sampler.sample_with_norm(NormKind::L2, x0), input, so);
        ensemble.push_back(make_ensemble_entry(spec, traj, NormKind::L2, u));
        for (std::size_t s = 0; s < ensemble.back().times.size(); ++s) {
          rows.push_back({x0, u, ensemble.back().times[s], ensemble.back().norms[s]});
        }
      }
    }
    const EnvelopeFit fit =
        estimate_iss_envelope(ensemble, KFun::power(env_gamma_coeff, env_gamma_expo));
    nlohmann::json report;
    report["command"] = "envelope";
    report["config"] = config_echo(common, {{"spec", env_spec_path},
                                            {"x0_norms", env_x0},
                                            {"input_mags", env_u},
                                            {"t_end", env_t_end}});
    report["certificate"] = fit.certificate.to_json();
    report["M"] = fit.M;
    report["a"] = fit.a;
    report["feasible"] = fit.feasible;
    if (!common.out_dir.empty()) {
      write_table_csv(common.out_dir + "/ensemble.csv", "x0_norm,input_mag,t,norm", rows);
      report["data_paths"] = {common.out_dir + "/ensemble.csv"};
    }
    report["headline"] = fit.feasible
                             ? "envelope M = " + format_g17(fit.M) + ", rate = " + format_g17(fit.a)
                             : "no feasible exponential envelope (non-ISS evidence)";
    exit_code = finish(common.out_dir, report, fit.feasible);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return exit_code;
}
