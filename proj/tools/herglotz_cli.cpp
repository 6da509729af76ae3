// Command-line front end: validate algebroid axioms, integrate contact /
// Herglotz trajectories, and compare the two formulations through the
// Legendre map. Exit codes: 0 success, 1 validation failure, 2 config error,
// 3 integration failure, 4 regularity failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "herglotz/herglotz.hpp"

namespace hz = herglotz;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitIntegrationFailure = 3;
constexpr int kExitRegularityFailure = 4;

struct SystemBundle {
  hz::AlgebroidSpec spec;
  std::optional<hz::TangentFunction> lagrangian;
  std::optional<hz::CotangentFunction> hamiltonian;
  std::string name;
  double box_lo = -1.0;
  double box_hi = 1.0;
};

struct CommonOptions {
  std::string system;
  int dim = 1;
  std::string hamiltonian_text;
  std::string lagrangian_text;
  std::vector<std::string> param_kv;
  double gamma = std::nan("");
  std::string q0, p0, y0;
  double z0 = 0.0;
  double t0 = 0.0, t1 = 1.0;
  std::string method = "rk4";
  double step = 1e-3;
  double rtol = 1e-8, atol = 1e-10;
  int record_every = 1;
  std::string out;
  std::string plot;
  std::uint64_t seed = 0;
  double tol = std::nan("");
  int points = 100;
  std::string sweep;
};

std::map<std::string, double> collect_params(const CommonOptions& opt) {
  std::map<std::string, double> params;
  for (const auto& kv : opt.param_kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw hz::InputError("--param expects name=value, got '" + kv + "'");
    try {
      params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (...) {
      throw hz::InputError("--param expects a numeric value in '" + kv + "'");
    }
  }
  if (!std::isnan(opt.gamma)) params["gamma"] = opt.gamma;
  return params;
}

double param_or(const std::map<std::string, double>& params,
                const std::string& name, double fallback) {
  const auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

SystemBundle resolve_system(const CommonOptions& opt,
                            const std::map<std::string, double>& params) {
  if (opt.system.empty()) throw hz::InputError("--system is required");
  if (opt.system == "tq") {
    return SystemBundle{hz::build_tangent_bundle(opt.dim), {}, {}, "tq"};
  }
  if (opt.system == "lie:so3") {
    return SystemBundle{hz::build_lie_algebra(hz::LieAlgebraData::so3()),
                        {},
                        {},
                        "lie:so3"};
  }
  if (opt.system == "atiyah") {
    return SystemBundle{hz::build_atiyah(hz::atiyah_abelian_demo()), {}, {},
                        "atiyah"};
  }
  if (opt.system == "wong" || opt.system == "wong:so3") {
    const double gamma = param_or(params, "gamma", 0.5);
    hz::WongModel model =
        opt.system == "wong"
            ? hz::wong_abelian_demo(gamma)
            : hz::wong_so3_demo(gamma, param_or(params, "alpha", 1.0));
    return SystemBundle{model.spec, std::move(model.lagrangian),
                        std::move(model.hamiltonian), opt.system};
  }
  // otherwise: a spec config file
  hz::SpecConfig cfg = hz::load_spec_config(opt.system);
  for (const auto& [k, v] : params) cfg.params[k] = v;
  SystemBundle bundle{cfg.build_spec(), {}, {}, opt.system, cfg.box_lo,
                      cfg.box_hi};
  if (!cfg.lagrangian.empty())
    bundle.lagrangian.emplace(bundle.spec, cfg.lagrangian, cfg.params);
  if (!cfg.hamiltonian.empty())
    bundle.hamiltonian.emplace(bundle.spec, cfg.hamiltonian, cfg.params);
  return bundle;
}

hz::Vec parse_vector(const std::string& text, int expected, const char* what) {
  hz::Vec v = hz::Vec::Zero(expected);
  if (text.empty()) return v;
  std::stringstream ss(text);
  std::string item;
  int count = 0;
  while (std::getline(ss, item, ',')) {
    if (count >= expected)
      throw hz::InputError(std::string(what) + ": too many entries");
    try {
      v[count++] = std::stod(item);
    } catch (...) {
      throw hz::InputError(std::string(what) + ": bad number '" + item + "'");
    }
  }
  if (count != expected)
    throw hz::InputError(std::string(what) + ": expected " +
                         std::to_string(expected) + " entries, got " +
                         std::to_string(count));
  return v;
}

hz::IntegratorConfig integrator_config(const CommonOptions& opt) {
  hz::IntegratorConfig cfg;
  if (opt.method == "rk4")
    cfg.method = hz::Method::rk4;
  else if (opt.method == "rkf45")
    cfg.method = hz::Method::rkf45;
  else
    throw hz::InputError("unknown method '" + opt.method + "'");
  cfg.step = opt.step;
  cfg.rel_tol = opt.rtol;
  cfg.abs_tol = opt.atol;
  cfg.t0 = opt.t0;
  cfg.t1 = opt.t1;
  cfg.record_every = opt.record_every;
  return cfg;
}

void write_plot_files(const std::string& prefix, const hz::Trajectory& traj,
                      const std::vector<hz::SampleDiagnostics>& diags,
                      const std::vector<std::string>& columns) {
  char buf[40];
  const auto write = [&](const std::string& name, auto getter) {
    std::ofstream f(prefix + "." + name + ".dat");
    for (std::size_t k = 0; k < traj.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
      f << buf << ' ';
      std::snprintf(buf, sizeof buf, "%.17g", getter(k));
      f << buf << '\n';
    }
  };
  for (std::size_t j = 0; j < columns.size(); ++j)
    write(columns[j], [&](std::size_t k) {
      return traj.states[k][static_cast<Eigen::Index>(j)];
    });
  write("h", [&](std::size_t k) { return diags[k].h_value; });
  write("residual", [&](std::size_t k) { return diags[k].dissipation_residual; });
}

double decay_fit_rate(const hz::Trajectory& traj,
                      const std::vector<hz::SampleDiagnostics>& diags) {
  // least-squares slope of log h(t); NaN unless enough positive samples
  double st = 0, sl = 0, stt = 0, stl = 0;
  int n = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (!(diags[k].h_value > 0.0)) continue;
    const double t = traj.times[k];
    const double lh = std::log(diags[k].h_value);
    st += t;
    sl += lh;
    stt += t * t;
    stl += t * lh;
    ++n;
  }
  if (n < 2) return std::nan("");
  const double denom = n * stt - st * st;
  if (denom == 0.0) return std::nan("");
  return -(n * stl - st * sl) / denom;
}

std::vector<std::string> state_columns(int n, int m, bool lagrangian_side) {
  std::vector<std::string> cols;
  for (int i = 0; i < n; ++i) cols.push_back("q" + std::to_string(i + 1));
  for (int a = 0; a < m; ++a)
    cols.push_back((lagrangian_side ? "y" : "p") + std::to_string(a + 1));
  cols.push_back("z");
  return cols;
}

// Integrates, and on failure writes whatever was accepted so far (flagged as
// partial in the JSON report) before letting the error propagate.
hz::Trajectory integrate_or_flag_partial(const hz::Rhs& rhs, const hz::Vec& s0,
                                         const hz::IntegratorConfig& cfg,
                                         const std::string& system,
                                         const std::string& out_path, int n,
                                         int m, bool lagrangian_side) {
  hz::Trajectory partial;
  try {
    return hz::integrate(rhs, s0, cfg, &partial);
  } catch (const hz::Error& e) {
    json report;
    report["system"] = system;
    report["error"] = e.what();
    report["partial"] = true;
    report["samples"] = partial.size();
    if (!out_path.empty() && partial.size() > 0) {
      std::ofstream f(out_path);
      hz::write_trajectory_csv(f, partial, n, m, lagrangian_side);
      report["csv"] = out_path;
    } else {
      report["csv"] = nullptr;
    }
    std::cout << report.dump(2) << "\n";
    throw;
  }
}

json run_simulation(const CommonOptions& opt,
                    const std::map<std::string, double>& params,
                    const std::string& out_path,
                    const std::string& plot_prefix) {
  SystemBundle sys = resolve_system(opt, params);
  const int n = sys.spec.base_dim(), m = sys.spec.fiber_dim();

  const bool want_l = !opt.lagrangian_text.empty();
  const bool want_h = !opt.hamiltonian_text.empty();
  if (want_l && want_h)
    throw hz::InputError("choose exactly one of --hamiltonian / --lagrangian");

  json report;
  report["system"] = sys.name;
  const hz::IntegratorConfig cfg = integrator_config(opt);

  if (want_l || (!want_h && !sys.hamiltonian && sys.lagrangian)) {
    // Lagrangian side: integrate the Herglotz flow
    hz::TangentFunction l =
        (!want_l || opt.lagrangian_text == "catalog")
            ? (sys.lagrangian ? *sys.lagrangian
                              : throw hz::InputError(
                                    "no catalog Lagrangian for '" + sys.name +
                                    "'"))
            : hz::TangentFunction(sys.spec, opt.lagrangian_text, params);
    hz::Vec s0(n + m + 1);
    s0.head(n) = parse_vector(opt.q0, n, "--q0");
    s0.segment(n, m) = parse_vector(!opt.y0.empty() ? opt.y0 : opt.p0, m, "--y0");
    s0[n + m] = opt.z0;
    const auto traj = integrate_or_flag_partial(
        hz::herglotz_flow(sys.spec, l), s0, cfg, sys.name, out_path, n, m, true);
    // diagnostics carry the Lagrangian energy along the trajectory
    std::vector<hz::SampleDiagnostics> diags(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      diags[k] = traj.diagnostics[k];
      diags[k].h_value =
          hz::lagrangian_energy(l, hz::unpack_state(traj.states[k], n, m));
    }
    report["side"] = "lagrangian";
    report["samples"] = traj.size();
    report["initial_h"] = diags.front().h_value;
    report["final_h"] = diags.back().h_value;
    report["decay_fit_rate"] = decay_fit_rate(traj, diags);
    report["max_dissipation_residual"] = nullptr;
    if (!out_path.empty()) {
      std::ofstream f(out_path);
      hz::write_trajectory_csv(f, traj, n, m, /*lagrangian_side=*/true, &diags);
      report["csv"] = out_path;
    } else {
      report["csv"] = nullptr;
    }
    if (!plot_prefix.empty())
      write_plot_files(plot_prefix, traj, diags, state_columns(n, m, true));
    return report;
  }

  // Hamiltonian side
  hz::CotangentFunction h =
      (!want_h || opt.hamiltonian_text == "catalog")
          ? (sys.hamiltonian ? *sys.hamiltonian
                             : throw hz::InputError(
                                   "no catalog Hamiltonian for '" + sys.name +
                                   "'; pass --hamiltonian or --lagrangian"))
          : hz::CotangentFunction(sys.spec, opt.hamiltonian_text, params);
  hz::Vec s0(n + m + 1);
  s0.head(n) = parse_vector(opt.q0, n, "--q0");
  s0.segment(n, m) = parse_vector(opt.p0, m, "--p0");
  s0[n + m] = opt.z0;
  const auto traj = integrate_or_flag_partial(
      hz::contact_flow(sys.spec, h), s0, cfg, sys.name, out_path, n, m, false);
  const auto diags = hz::dissipation_diagnostics(sys.spec, h, traj);
  double max_resid = 0.0;
  for (const auto& d : diags)
    if (std::isfinite(d.dissipation_residual))
      max_resid = std::max(max_resid, d.dissipation_residual);
  report["side"] = "hamiltonian";
  report["samples"] = traj.size();
  report["initial_h"] = diags.front().h_value;
  report["final_h"] = diags.back().h_value;
  report["decay_fit_rate"] = decay_fit_rate(traj, diags);
  report["max_dissipation_residual"] = max_resid;
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    hz::write_trajectory_csv(f, traj, n, m, /*lagrangian_side=*/false, &diags);
    report["csv"] = out_path;
  } else {
    report["csv"] = nullptr;
  }
  if (!plot_prefix.empty())
    write_plot_files(plot_prefix, traj, diags, state_columns(n, m, false));
  return report;
}

int cmd_validate(const CommonOptions& opt) {
  const auto params = collect_params(opt);
  SystemBundle sys = resolve_system(opt, params);
  const double tol = std::isnan(opt.tol) ? 1e-8 : opt.tol;

  const auto box =
      hz::SampleBox::centered(sys.spec.base_dim(), sys.box_lo, sys.box_hi);
  const auto points = hz::sample_base_points(box, opt.points, opt.seed);

  std::vector<hz::ValidationReport> reports;
  reports.push_back(hz::validate_anchor(sys.spec, points, tol));
  reports.push_back(hz::validate_jacobi(sys.spec, points, tol));

  hz::BracketTolerances btols;
  btols.antisymmetry = 1e-12;
  btols.leibniz = tol;
  btols.jacobi = std::max(tol, 1e-7);
  const auto states = hz::sample_costates(sys.spec, box, 20, opt.seed + 1);
  for (const auto& r : hz::bracket_axiom_suite(
           sys.spec, hz::default_test_functions(sys.spec), states, btols))
    reports.push_back(r);

  json out;
  out["system"] = sys.name;
  out["seed"] = opt.seed;
  out["points"] = opt.points;
  bool all_pass = true;
  out["checks"] = json::array();
  for (const auto& r : reports) {
    all_pass = all_pass && r.pass;
    out["checks"].push_back({{"check", r.check},
                             {"residual", r.max_residual},
                             {"tolerance", r.tolerance},
                             {"pass", r.pass}});
  }
  out["pass"] = all_pass;
  std::cout << out.dump(2) << "\n";
  return all_pass ? kExitOk : kExitValidationFailure;
}

int cmd_simulate(const CommonOptions& opt) {
  const auto params = collect_params(opt);

  if (opt.sweep.empty()) {
    const json report = run_simulation(opt, params, opt.out, opt.plot);
    std::cout << report.dump(2) << "\n";
    return kExitOk;
  }

  // --sweep name=start:end:step, trajectories run in parallel
  const auto eq = opt.sweep.find('=');
  if (eq == std::string::npos)
    throw hz::InputError("--sweep expects name=start:end:step");
  const std::string name = opt.sweep.substr(0, eq);
  double start = 0, end = 0, inc = 0;
  {
    std::stringstream ss(opt.sweep.substr(eq + 1));
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
        !std::getline(ss, c))
      throw hz::InputError("--sweep expects name=start:end:step");
    try {
      start = std::stod(a);
      end = std::stod(b);
      inc = std::stod(c);
    } catch (...) {
      throw hz::InputError("--sweep expects numeric start:end:step");
    }
  }
  if (inc <= 0.0) throw hz::InputError("--sweep step must be positive");

  std::vector<double> values;
  for (double v = start; v <= end + 1e-12 * std::max(1.0, std::abs(end));
       v += inc)
    values.push_back(v);

  const auto stem = [&](double v) {
    if (opt.out.empty()) return std::string();
    std::ostringstream os;
    os << name << v;
    const std::string tag = os.str();
    const auto dot = opt.out.rfind('.');
    return dot == std::string::npos
               ? opt.out + "-" + tag
               : opt.out.substr(0, dot) + "-" + tag + opt.out.substr(dot);
  };

  std::vector<std::future<json>> futures;
  futures.reserve(values.size());
  for (double v : values) {
    auto p = params;
    p[name] = v;
    futures.push_back(std::async(std::launch::async, [&opt, p, v, &stem] {
      json r = run_simulation(opt, p, stem(v), "");
      r["sweep_value"] = v;
      return r;
    }));
  }
  json out = json::array();
  for (auto& f : futures) out.push_back(f.get());
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int cmd_compare(const CommonOptions& opt) {
  const auto params = collect_params(opt);
  SystemBundle sys = resolve_system(opt, params);
  const int n = sys.spec.base_dim(), m = sys.spec.fiber_dim();

  hz::TangentFunction l =
      (opt.lagrangian_text.empty() || opt.lagrangian_text == "catalog")
          ? (sys.lagrangian ? *sys.lagrangian
                            : throw hz::InputError("compare needs --lagrangian"))
          : hz::TangentFunction(sys.spec, opt.lagrangian_text, params);

  hz::Vec s0(n + m + 1);
  s0.head(n) = parse_vector(opt.q0, n, "--q0");
  s0.segment(n, m) = parse_vector(!opt.y0.empty() ? opt.y0 : opt.p0, m, "--y0");
  s0[n + m] = opt.z0;

  // fixed-step rk4 on both sides so the time grids coincide
  hz::IntegratorConfig cfg = integrator_config(opt);
  cfg.method = hz::Method::rk4;

  const auto ltraj = hz::integrate(hz::herglotz_flow(sys.spec, l), s0, cfg);
  const hz::ContactCoState x0 =
      hz::fiber_derivative(l, hz::unpack_state(s0, n, m));

  const auto sup_deviation = [&](const hz::Trajectory& htraj) {
    double dev = 0.0;
    for (std::size_t k = 0; k < ltraj.size(); ++k) {
      const auto mapped =
          hz::fiber_derivative(l, hz::unpack_state(ltraj.states[k], n, m));
      dev = std::max(dev,
                     (hz::pack(mapped) - htraj.states[k]).cwiseAbs().maxCoeff());
    }
    return dev;
  };

  json report;
  double deviation = 0.0;
  if (!opt.hamiltonian_text.empty() && opt.hamiltonian_text != "catalog") {
    hz::CotangentFunction h(sys.spec, opt.hamiltonian_text, params);
    deviation = sup_deviation(
        hz::integrate(hz::contact_flow(sys.spec, h), hz::pack(x0), cfg));
    report["hamiltonian"] = "explicit";
  } else {
    hz::LegendreHamiltonian h(sys.spec, l);
    deviation = sup_deviation(
        hz::integrate(hz::contact_flow(sys.spec, h), hz::pack(x0), cfg));
    report["hamiltonian"] = "legendre";
  }

  const double tol = std::isnan(opt.tol) ? 1e-6 : opt.tol;
  report["system"] = sys.name;
  report["sup_norm_deviation"] = deviation;
  report["tolerance"] = tol;
  report["pass"] = deviation < tol;
  std::cout << report.dump(2) << "\n";
  return deviation < tol ? kExitOk : kExitValidationFailure;
}

void add_common_options(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--system", opt.system,
                  "catalog name (tq, lie:so3, atiyah, wong, wong:so3) or spec "
                  "config path");
  cmd->add_option("--dim", opt.dim, "base dimension for --system tq");
  cmd->add_option("--hamiltonian", opt.hamiltonian_text,
                  "expression in (q..., p..., z), or 'catalog'");
  cmd->add_option("--lagrangian", opt.lagrangian_text,
                  "expression in (q..., y..., z), or 'catalog'");
  cmd->add_option("--param", opt.param_kv, "parameter binding name=value");
  cmd->add_option("--gamma", opt.gamma, "shorthand for --param gamma=VALUE");
  cmd->add_option("--q0", opt.q0, "initial base point, comma separated");
  cmd->add_option("--p0", opt.p0, "initial momenta, comma separated");
  cmd->add_option("--y0", opt.y0, "initial fiber velocities, comma separated");
  cmd->add_option("--z0", opt.z0, "initial z");
  cmd->add_option("--t0", opt.t0, "start time");
  cmd->add_option("--t1", opt.t1, "end time");
  cmd->add_option("--method", opt.method, "rk4 or rkf45");
  cmd->add_option("--step", opt.step, "rk4 step size");
  cmd->add_option("--rtol", opt.rtol, "rkf45 relative tolerance");
  cmd->add_option("--atol", opt.atol, "rkf45 absolute tolerance");
  cmd->add_option("--record-every", opt.record_every, "record every k-th step");
  cmd->add_option("--out", opt.out, "trajectory CSV path");
  cmd->add_option("--plot", opt.plot, "prefix for two-column .dat observables");
  cmd->add_option("--seed", opt.seed, "sampling seed");
  cmd->add_option("--tol", opt.tol, "tolerance override");
  cmd->add_option("--points", opt.points, "validation sample count");
  cmd->add_option("--sweep", opt.sweep, "parameter sweep name=start:end:step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dissipative mechanics on Lie algebroids"};
  app.require_subcommand(1);

  CommonOptions vopt, sopt, copt;
  CLI::App* validate = app.add_subcommand(
      "validate", "check the structure identities and bracket axioms");
  add_common_options(validate, vopt);
  CLI::App* simulate =
      app.add_subcommand("simulate", "integrate a contact or Herglotz flow");
  add_common_options(simulate, sopt);
  CLI::App* compare = app.add_subcommand(
      "compare",
      "Herglotz vs contact-Hamiltonian, mapped through the fiber derivative");
  add_common_options(compare, copt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (validate->parsed()) return cmd_validate(vopt);
    if (simulate->parsed()) return cmd_simulate(sopt);
    if (compare->parsed()) return cmd_compare(copt);
    return kExitConfigError;
  } catch (const hz::RegularityError& e) {
    std::cerr << "regularity error: " << e.what() << "\n";
    return kExitRegularityFailure;
  } catch (const hz::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return kExitRegularityFailure;
  } catch (const hz::StiffnessError& e) {
    std::cerr << "integration error: " << e.what() << "\n";
    return kExitIntegrationFailure;
  } catch (const hz::DivergenceError& e) {
    std::cerr << "integration error: " << e.what() << "\n";
    return kExitIntegrationFailure;
  } catch (const hz::ParseError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const hz::EvalError& e) {
    std::cerr << "evaluation error: " << e.what() << "\n";
    return kExitIntegrationFailure;
  } catch (const hz::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
