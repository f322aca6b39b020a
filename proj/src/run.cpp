#include "pdesign/run.hpp"

#include <cmath>
#include <iostream>
#include <memory>
#include <sstream>

#include "pdesign/design_opt.hpp"
#include "pdesign/diagnostics.hpp"
#include "pdesign/duality.hpp"
#include "pdesign/error.hpp"
#include "pdesign/io_util.hpp"
#include "pdesign/lamination.hpp"

namespace pdesign {

void Summary::add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
void Summary::add(const std::string& key, double value) { add(key, fmt_real(value)); }
void Summary::add(const std::string& key, int value) { add(key, std::to_string(value)); }
void Summary::add(const std::string& key, bool value) { add(key, value ? "true" : "false"); }

void Summary::add_config(const RunConfig& cfg) {
  std::istringstream in(cfg.to_text());
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    add("config." + line.substr(0, eq), line.substr(eq + 3));
  }
}

void Summary::append(const Summary& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::string Summary::text() const {
  std::string s;
  for (const auto& [k, v] : entries_) s += k + ": " + v + "\n";
  return s;
}

void Summary::write(const std::filesystem::path& path) const {
  std::ofstream f = open_output(path);
  f << text();
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "oracle", "laminate", "dual-check", "diagnose"};
  return names;
}

namespace {

struct Problem {
  MeshPtr mesh;
  ScalarField f;
};

Problem make_problem(const RunConfig& cfg, double h) {
  DomainSpec d = cfg.domain;
  d.target_h = h;
  auto mesh = std::make_shared<const Mesh>(build_mesh(d));
  return {mesh, interpolate_nodal(mesh, cfg.load.function(), "load")};
}

const Disk* oracle_disk(const RunConfig& cfg) {
  const Disk* d = std::get_if<Disk>(&cfg.domain.shape);
  if (!d || !cfg.load.is_constant || !(cfg.load.value > 0.0)) return nullptr;
  return d;
}

RadialOracle make_oracle(const RunConfig& cfg, const Disk& d) {
  RadialOracle o(d.radius, cfg.model, cfg.load.value);
  o.set_center(d.cx, d.cy);
  return o;
}

void add_mesh(Summary& s, const std::string& pre, const Mesh& m) {
  s.add(pre + "nodes", m.num_nodes());
  s.add(pre + "elements", m.num_elements());
  s.add(pre + "max_edge", m.max_edge_length());
  s.add(pre + "area", m.total_area());
}

/// Relative gap between the state energy at theta_hat and the F energy minus
/// its volume term; both formulations share the same optimum.
double formulation_gap(const DesignSolution& sol, const SolveConfig& cfg) {
  const ScalarField u = solve_state(sol.theta_hat, sol.f_tilde, sol.model, cfg);
  const double state = primal_energy(u, sol.theta_hat, sol.f_tilde, sol.model);
  const double q = sol.model.p_conj();
  const double shift = sol.model.c() * std::pow(sol.mu_hat, sol.model.p) / q * integrate(sol.theta_hat);
  return std::abs(state - (sol.F_energy - shift)) / std::max(std::abs(state), 1e-300);
}

void add_solution(Summary& s, const std::string& pre, const DesignSolution& sol, const RunConfig& cfg) {
  const double kappa = cfg.model.kappa;
  s.add(pre + "mu_hat", sol.mu_hat);
  s.add(pre + "sigma_threshold", std::pow(sol.mu_hat, cfg.model.p - 1.0));
  s.add(pre + "degenerate", sol.degenerate);
  s.add(pre + "volume", sol.volume);
  s.add(pre + "volume_rel_error", std::abs(sol.volume - kappa) / kappa);
  s.add(pre + "primal_energy", sol.primal_energy);
  s.add(pre + "dual_energy", sol.dual_energy);
  s.add(pre + "F_energy", sol.F_energy);
  s.add(pre + "kkt_residual", sol.kkt_residual);
  s.add(pre + "solver_residual", sol.solver_residual);
  s.add(pre + "solver_tolerance", sol.solver_tolerance);
  s.add(pre + "solver_fallback", sol.solver_fallback);
  s.add(pre + "bisection_steps", sol.bisection_steps);
  s.add(pre + "plateau_blend", sol.plateau_blend);
  s.add(pre + "monotonicity_violations", sol.monotonicity_violations);
  s.add(pre + "sweep_points", static_cast<int>(sol.sweep.size()));
}

void add_oracle_match(Summary& s, const std::string& pre, const DesignSolution& sol, const RunConfig& cfg) {
  const Disk* d = oracle_disk(cfg);
  if (!d) return;
  const RadialOracle o = make_oracle(cfg, *d);
  const double t = std::pow(sol.mu_hat, cfg.model.p - 1.0);
  s.add(pre + "oracle_sigma_threshold", o.sigma_threshold());
  s.add(pre + "oracle_threshold_rel_error", std::abs(t - o.sigma_threshold()) / o.sigma_threshold());
  s.add(pre + "oracle_theta_l1_mismatch", o.theta_l1_mismatch(sol.theta_hat));
  s.add(pre + "oracle_theta_l1_mismatch_rel", o.theta_l1_mismatch(sol.theta_hat) / cfg.model.kappa);
  s.add(pre + "oracle_primal_energy", o.primal_energy());
}

void write_solution_fields(const DesignSolution& sol, const std::filesystem::path& dir, bool log) {
  write_mesh_csv(*sol.mesh, dir / "nodes.csv", dir / "elements.csv");
  write_field_csv(sol.u_hat, "u", dir / "u.csv");
  write_field_csv(sol.theta_hat, "theta", dir / "theta.csv");
  write_field_csv(sol.sigma_hat, "sigma", dir / "sigma.csv");
  std::ofstream sw = open_output(dir / "sweep.csv");
  sw << "mu,volume\n";
  for (const auto& [mu, v] : sol.sweep) sw << fmt_real(mu) << ',' << fmt_real(v) << '\n';
  if (log) write_iteration_log(sol.solver_log, dir / "iterations.csv");
}

void cmd_solve(const RunConfig& cfg, Summary& s, const std::filesystem::path& dir) {
  const Problem pr = make_problem(cfg, cfg.domain.target_h);
  add_mesh(s, "mesh.", *pr.mesh);
  const DesignSolution sol = solve_design(pr.mesh, cfg.model, pr.f, cfg.design);
  add_solution(s, "result.", sol, cfg);
  const DualReport rep = dual_report(sol, 0, cfg.design.solve, cfg.seed, cfg.threads);
  s.add("result.gap", rep.gap);
  s.add("result.relative_gap", rep.relative_gap);
  s.add("result.div_residual", rep.div_residual);
  s.add("result.formulation_gap", formulation_gap(sol, cfg.design.solve));
  add_oracle_match(s, "result.", sol, cfg);
  write_solution_fields(sol, dir, cfg.iteration_log);
}

void cmd_oracle(const RunConfig& cfg, Summary& s, const std::filesystem::path& dir) {
  const Disk* d = oracle_disk(cfg);
  if (!d) throw InvalidInput("oracle: needs a disk domain and a positive constant load (f = const v)");
  const RadialOracle o = make_oracle(cfg, *d);
  s.add("oracle.R", o.R());
  s.add("oracle.c", cfg.model.c());
  s.add("oracle.f_tilde", o.f_tilde());
  s.add("oracle.r0", o.r0());
  s.add("oracle.t_hat", o.sigma_threshold());
  s.add("oracle.mu_hat", o.mu_hat());
  s.add("oracle.primal_energy", o.primal_energy());
  s.add("oracle.dual_energy", o.dual_energy());
  s.add("oracle.u_center", o.u(0.0));
  std::ofstream f = open_output(dir / "oracle_profile.csv");
  f << "r,sigma_abs,theta,grad_abs,u\n";
  const int n = 200;
  for (int i = 0; i <= n; ++i) {
    const double r = o.R() * i / n;
    f << fmt_real(r) << ',' << fmt_real(o.sigma_abs(r)) << ',' << fmt_real(o.theta(r)) << ','
      << fmt_real(o.grad_abs(r)) << ',' << fmt_real(o.u(r)) << '\n';
  }
}

void cmd_laminate(const RunConfig& cfg, Summary& s, const std::filesystem::path& dir) {
  const Problem pr = make_problem(cfg, cfg.domain.target_h);
  add_mesh(s, "mesh.", *pr.mesh);
  const DesignSolution sol = solve_design(pr.mesh, cfg.model, pr.f, cfg.design);
  add_solution(s, "design.", sol, cfg);
  // The laminate is built for the normalized state u_hat and its theta_hat.
  const auto rows = laminate_table(sol.theta_hat, sol.u_hat, cfg.model, cfg.deltas, cfg.epsilons);
  write_laminate_table(rows, dir / "laminate.csv");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string pre = "laminate." + std::to_string(i) + ".";
    s.add(pre + "delta", rows[i].delta);
    s.add(pre + "epsilon", rows[i].epsilon);
    s.add(pre + "laminate_energy", rows[i].laminate_energy);
    s.add(pre + "homogenized_energy", rows[i].homogenized_energy);
    s.add(pre + "gap", rows[i].gap);
  }
}

void cmd_dual_check(const RunConfig& cfg, Summary& s, const std::filesystem::path& dir) {
  const Problem pr = make_problem(cfg, cfg.domain.target_h);
  add_mesh(s, "mesh.", *pr.mesh);
  const DesignSolution sol = solve_design(pr.mesh, cfg.model, pr.f, cfg.design);
  add_solution(s, "result.", sol, cfg);
  const DualReport rep = dual_report(sol, cfg.restarts, cfg.design.solve, cfg.seed, cfg.threads);
  s.add("dual.primal_value", rep.primal_value);
  s.add("dual.dual_value", rep.dual_value);
  s.add("dual.gap", rep.gap);
  s.add("dual.relative_gap", rep.relative_gap);
  s.add("dual.dual_max_value", rep.dual_max_value);
  s.add("dual.div_residual", rep.div_residual);
  s.add("dual.restarts", cfg.restarts);
  s.add("dual.flux_spread", rep.flux_spread);
  s.add("dual.theta_spread", rep.theta_spread);
  for (std::size_t k = 0; k < rep.restart_flux_spreads.size(); ++k) {
    const std::string pre = "dual.restart." + std::to_string(k) + ".";
    s.add(pre + "flux_spread", rep.restart_flux_spreads[k]);
    s.add(pre + "theta_spread", rep.restart_theta_spreads[k]);
    if (cfg.restart_fluxes)
      write_field_csv(rep.restart_fluxes[k], "sigma", dir / ("restart_" + std::to_string(k) + "_sigma.csv"));
  }
  write_solution_fields(sol, dir, cfg.iteration_log);
}

void cmd_diagnose(const RunConfig& cfg, Summary& s, const std::filesystem::path& dir) {
  const Disk* disk = oracle_disk(cfg);
  std::ofstream csv = open_output(dir / "diagnostics.csv");
  csv << "level,h,elements,mu_hat,sigma_threshold,intermediate_measure,flux_h1_seminorm,"
         "commutator_l2,commutator_off_band,commutator_on_band,band_tol,curl_residual,"
         "boundary_alignment_mean,boundary_alignment_max,interface_violations,max_grad_u";
  if (disk) csv << ",oracle_threshold_rel_error,oracle_theta_l1_mismatch";
  csv << '\n';
  std::vector<double> h1;
  for (int level = 0; level < cfg.levels; ++level) {
    const double h = cfg.domain.target_h / std::pow(2.0, level);
    const Problem pr = make_problem(cfg, h);
    const DesignSolution sol = solve_design(pr.mesh, cfg.model, pr.f, cfg.design);
    const double t = std::pow(sol.mu_hat, cfg.model.p - 1.0);
    const double im = intermediate_measure(sol.theta_hat, cfg.band);
    const double semi = flux_h1_seminorm(sol.sigma_hat, cfg.r_exp);
    const CommutatorReport cm = theta_sigma_commutator(sol.theta_hat, sol.sigma_hat, t);
    const double curl = curl_residual(sol.sigma_hat, cfg.model);
    const AlignmentReport al = boundary_flux_alignment(sol.sigma_hat);
    const int iv = interface_violations(sol.theta_hat, sol.sigma_hat, t, 0.05, 1e-6);
    const double gmax = max_gradient_norm(sol.u_hat);
    h1.push_back(semi);

    const std::string pre = "level." + std::to_string(level) + ".";
    s.add(pre + "h", h);
    add_mesh(s, pre + "mesh.", *pr.mesh);
    add_solution(s, pre, sol, cfg);
    s.add(pre + "intermediate_measure", im);
    s.add(pre + "flux_h1_seminorm", semi);
    s.add(pre + "commutator_l2", cm.l2_total);
    s.add(pre + "commutator_off_band", cm.l2_off_band);
    s.add(pre + "commutator_on_band", cm.l2_on_band);
    s.add(pre + "band_tol", cm.band_tol);
    s.add(pre + "curl_residual", curl);
    s.add(pre + "boundary_alignment_mean", al.mean);
    s.add(pre + "boundary_alignment_max", al.max);
    s.add(pre + "interface_violations", iv);
    s.add(pre + "max_grad_u", gmax);
    add_oracle_match(s, pre, sol, cfg);

    csv << level << ',' << fmt_real(h) << ',' << pr.mesh->num_elements() << ',' << fmt_real(sol.mu_hat) << ','
        << fmt_real(t) << ',' << fmt_real(im) << ',' << fmt_real(semi) << ',' << fmt_real(cm.l2_total) << ','
        << fmt_real(cm.l2_off_band) << ',' << fmt_real(cm.l2_on_band) << ',' << fmt_real(cm.band_tol) << ','
        << fmt_real(curl) << ',' << fmt_real(al.mean) << ',' << fmt_real(al.max) << ',' << iv << ','
        << fmt_real(gmax);
    if (disk) {
      const RadialOracle o = make_oracle(cfg, *disk);
      csv << ',' << fmt_real(std::abs(t - o.sigma_threshold()) / o.sigma_threshold()) << ','
          << fmt_real(o.theta_l1_mismatch(sol.theta_hat));
    }
    csv << '\n';
  }
  if (h1.size() >= 2) {
    const double a = h1[h1.size() - 2], b = h1.back();
    s.add("trend.flux_h1_rel_change", std::abs(b - a) / std::max(std::abs(a), 1e-300));
  }
  s.add("caveat", boundary_caveat());
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& console) {
  const std::filesystem::path dir = cfg.out;
  Summary s;
  s.add("command", command);
  std::string kind, message;
  int code = 0;
  Summary body;
  try {
    cfg.validate();
    if (command == "solve") cmd_solve(cfg, body, dir);
    else if (command == "oracle") cmd_oracle(cfg, body, dir);
    else if (command == "laminate") cmd_laminate(cfg, body, dir);
    else if (command == "dual-check") cmd_dual_check(cfg, body, dir);
    else if (command == "diagnose") cmd_diagnose(cfg, body, dir);
    else throw InvalidInput("command: unknown '" + command + "'");
  } catch (const InvalidInput& e) {
    kind = "invalid_input", message = e.what(), code = 2;
  } catch (const BracketError& e) {
    kind = "bracket_failure", message = e.what(), code = 3;
    std::ostringstream sweep;
    for (const auto& [mu, v] : e.sweep()) sweep << ' ' << fmt_real(mu) << ':' << fmt_real(v);
    body.add("error.sweep", sweep.str().empty() ? std::string("none") : sweep.str().substr(1));
  } catch (const SolveError& e) {
    kind = "solver_failure", message = e.what(), code = 3;
    body.add("error.residual_history_length", static_cast<int>(e.residual_history().size()));
  } catch (const std::exception& e) {
    kind = "internal", message = e.what(), code = 1;
  }
  s.add("status", code == 0 ? "ok" : "error");
  if (code != 0) {
    s.add("error.kind", kind);
    s.add("error.message", message);
  }
  s.add_config(cfg);
  // Results or error details follow the header and the embedded config.
  s.append(body);
  try {
    s.write(dir / "summary.txt");
  } catch (const std::exception& e) {
    console << "error: " << e.what() << '\n';
    return code == 0 ? 1 : code;
  }
  console << s.text();
  return code;
}

int write_error(const std::filesystem::path& out_dir, const std::string& command,
                const std::string& kind, const std::string& message, std::ostream& console) {
  Summary s;
  s.add("command", command);
  s.add("status", "error");
  s.add("error.kind", kind);
  s.add("error.message", message);
  console << s.text();
  try {
    s.write(out_dir / "summary.txt");
  } catch (const std::exception& e) {
    console << "error: " << e.what() << '\n';
  }
  return kind == "invalid_input" ? 2 : 1;
}

}  // namespace pdesign
