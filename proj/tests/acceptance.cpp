// Acceptance suite: end-to-end checks of the bracket axioms, structure
// identities, dissipation laws, formulation equivalences and numerical
// contracts, one criterion per runner. Prints one [PASS]/[FAIL] line each and
// exits with the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "herglotz/herglotz.hpp"

using namespace herglotz;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

AlgebroidSpec corrupted_so3() {
  AlgebroidBuilder b(0, 3);
  b.structure(2, 0, 1, 1.0);
  b.structure(0, 1, 2, 1.0);
  b.structure(1, 2, 0, 1.0);
  b.structure(1, 0, 1, 1.0);  // breaks the Jacobi identity
  return b.build();
}

struct CatalogHamiltonian {
  std::string name;
  AlgebroidSpec spec;
  CotangentFunction h;
  Vec s0;  // packed (q, p, z)
};

std::vector<CatalogHamiltonian> catalog_hamiltonians() {
  std::vector<CatalogHamiltonian> out;
  {
    auto spec = build_lie_algebra(LieAlgebraData::so3());
    CotangentFunction h(spec, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", 0.5}});
    out.push_back({"lie:so3", spec, h, vec({1, 2, 3, 0})});
  }
  {
    auto spec = build_tangent_bundle(2);
    CotangentFunction h(spec, "0.5*(p1^2+p2^2) + q1^2 + q2^2 + gamma*z",
                        {{"gamma", 0.4}});
    out.push_back({"tq(2)", spec, h, vec({0.7, -0.3, 0.2, 1.1, 0.05})});
  }
  {
    auto model = wong_abelian_demo(0.3);
    out.push_back({"wong", model.spec, model.hamiltonian,
                   vec({0.2, -0.1, 1.0, 2.0, 1.5, 0.1})});
  }
  {
    auto model = wong_so3_demo(0.25);
    out.push_back({"wong:so3", model.spec, model.hamiltonian,
                   vec({0.1, 0.3, 1.0, 0.5, -0.4, 0.8, 0.6, 0.0})});
  }
  return out;
}

// --------------------------------------------------------------------------

Outcome criterion1_bracket_axioms() {
  const auto t0 = Clock::now();
  struct Case {
    std::string name;
    AlgebroidSpec spec;
  };
  std::vector<Case> cases;
  cases.push_back({"tq(2)", build_tangent_bundle(2)});
  cases.push_back({"lie:so3", build_lie_algebra(LieAlgebraData::so3())});
  cases.push_back({"wong", wong_abelian_demo(0.3).spec});
  cases.push_back({"wong:so3", wong_so3_demo(0.25).spec});

  BracketTolerances tols;
  tols.antisymmetry = 1e-12;
  tols.jacobi = 1e-7;
  tols.leibniz = 1e-8;

  double worst_anti = 0, worst_jac = 0, worst_leib = 0;
  bool pass = true;
  for (const auto& c : cases) {
    const auto fns = default_test_functions(c.spec);
    const auto states = sample_costates(
        c.spec, SampleBox::centered(c.spec.base_dim()), 20, 2026);
    const auto reports = bracket_axiom_suite(c.spec, fns, states, tols);
    pass = pass && reports[0].pass && reports[1].pass && reports[2].pass;
    worst_anti = std::max(worst_anti, reports[0].max_residual);
    worst_jac = std::max(worst_jac, reports[1].max_residual);
    worst_leib = std::max(worst_leib, reports[2].max_residual);
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 10.0;
  std::ostringstream os;
  os << "antisymmetry " << worst_anti << " (tol 1e-12), jacobi " << worst_jac
     << " (tol 1e-7), leibniz " << worst_leib << " (tol 1e-8), " << elapsed
     << " s";
  return {pass, os.str()};
}

Outcome criterion2_structure_validation() {
  const auto t0 = Clock::now();
  struct Case {
    std::string name;
    AlgebroidSpec spec;
  };
  std::vector<Case> cases;
  cases.push_back({"tq(2)", build_tangent_bundle(2)});
  cases.push_back({"lie:so3", build_lie_algebra(LieAlgebraData::so3())});
  cases.push_back({"atiyah", build_atiyah(atiyah_abelian_demo())});
  cases.push_back({"wong", wong_abelian_demo(0.3).spec});
  cases.push_back({"wong:so3", wong_so3_demo(0.25).spec});

  bool pass = true;
  double worst = 0;
  for (const auto& c : cases) {
    const auto pts =
        sample_base_points(SampleBox::centered(c.spec.base_dim()), 100, 11);
    const auto ra = validate_anchor(c.spec, pts, 1e-8);
    const auto rj = validate_jacobi(c.spec, pts, 1e-8);
    pass = pass && ra.pass && rj.pass;
    worst = std::max({worst, ra.max_residual, rj.max_residual});
  }

  const auto bad = corrupted_so3();
  const auto rbad = validate_jacobi(bad, {BasePoint(Vec(0))}, 1e-8);
  pass = pass && !rbad.pass;

  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 5.0;
  std::ostringstream os;
  os << "max catalog residual " << worst << " (tol 1e-8), counterexample residual "
     << rbad.max_residual << " (fails as required), " << elapsed << " s";
  return {pass, os.str()};
}

Outcome criterion3_dissipation_identity() {
  bool pass = true;
  double worst_rhs = 0, worst_reint = 0;
  for (const auto& c : catalog_hamiltonians()) {
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    cfg.t1 = 1.0;
    const auto traj = integrate(contact_flow(c.spec, c.h), c.s0, cfg);
    const int n = c.spec.base_dim(), m = c.spec.fiber_dim();

    // pointwise identity X_h(h) = -h dh/dz at every recorded state
    std::vector<double> hvals(traj.size()), hzvals(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const ContactCoState x = unpack_costate(traj.states[k], n, m);
      const auto g = c.h.gradient(x);
      hvals[k] = g.value;
      hzvals[k] = g.dz;
      const double lhs = contact_directional_derivative(c.spec, c.h, x);
      worst_rhs = std::max(worst_rhs, std::abs(lhs + g.value * g.dz));
    }
    pass = pass && worst_rhs < 1e-9;

    // independent re-integration of udot = -u * (dh/dz)(x(t))
    double u = hvals.front();
    const double h0 = std::abs(hvals.front());
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      const double dt = traj.times[k + 1] - traj.times[k];
      const auto g = [&](double theta) {
        return (1.0 - theta) * hzvals[k] + theta * hzvals[k + 1];
      };
      const double k1 = -u * g(0.0);
      const double k2 = -(u + 0.5 * dt * k1) * g(0.5);
      const double k3 = -(u + 0.5 * dt * k2) * g(0.5);
      const double k4 = -(u + dt * k3) * g(1.0);
      u += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      worst_reint = std::max(worst_reint, std::abs(u - hvals[k + 1]) / h0);
    }
    pass = pass && worst_reint < 1e-6;
  }
  std::ostringstream os;
  os << "max |X_h(h) + h dh/dz| " << worst_rhs
     << " (tol 1e-9), re-integration relative gap " << worst_reint
     << " (tol 1e-6)";
  return {pass, os.str()};
}

Outcome criterion4_closed_form_decay() {
  const auto t0 = Clock::now();
  auto spec = build_lie_algebra(LieAlgebraData::so3());
  CotangentFunction h(spec, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", 0.5}});
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;
  const auto traj = integrate(contact_flow(spec, h), vec({1, 2, 3, 0}), cfg);
  const double decay = std::exp(-0.5);
  double worst = 0;
  for (int a = 0; a < 3; ++a)
    worst = std::max(worst,
                     std::abs(traj.states.back()[a] - decay * (a + 1.0)));
  const double elapsed = seconds_since(t0);
  const bool pass = worst < 1e-6 && elapsed < 1.0;
  std::ostringstream os;
  os << "max |p(1) - e^{-1/2} p0| = " << worst << " (tol 1e-6), " << elapsed
     << " s";
  return {pass, os.str()};
}

Outcome criterion5_conservative_limit() {
  auto spec = build_lie_algebra(LieAlgebraData::so3());
  CotangentFunction h(spec, "0.5*(p1^2+p2^2+p3^2)");
  IntegratorConfig cfg;
  cfg.method = Method::rkf45;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  cfg.t1 = 10.0;
  const auto traj = integrate(contact_flow(spec, h), vec({1, 2, 3, 0.2}), cfg);
  const double h0 = h.value(unpack_costate(traj.states.front(), 0, 3));
  double worst = 0;
  for (const auto& s : traj.states)
    worst = std::max(worst,
                     std::abs(h.value(unpack_costate(s, 0, 3)) - h0) / h0);
  std::ostringstream os;
  os << "max relative h drift over [0,10] = " << worst << " (tol 1e-8)";
  return {worst < 1e-8, os.str()};
}

Outcome criterion6_equivalence() {
  struct Case {
    std::string name;
    AlgebroidSpec spec;
    TangentFunction l;
    Vec s0;
  };
  std::vector<Case> cases;
  {
    auto spec = build_tangent_bundle(1);
    TangentFunction l(spec, "y1^2/2 - q1^2 - gamma*z", {{"gamma", 0.5}});
    cases.push_back({"damped oscillator", spec, l, vec({1.0, 0.0, 0.0})});
  }
  {
    auto spec = build_lie_algebra(LieAlgebraData::so3());
    TangentFunction l(spec, "0.5*(y1^2+y2^2+y3^2) - gamma*z", {{"gamma", 0.5}});
    cases.push_back({"so3", spec, l, vec({1, 2, 3, 0.1})});
  }
  double worst = 0;
  bool pass = true;
  for (const auto& c : cases) {
    const int n = c.spec.base_dim(), m = c.spec.fiber_dim();
    IntegratorConfig cfg;
    cfg.step = 1e-3;
    cfg.t1 = 1.0;
    const auto ltraj = integrate(herglotz_flow(c.spec, c.l), c.s0, cfg);
    const LegendreHamiltonian h(c.spec, c.l);
    const ContactCoState x0 = fiber_derivative(c.l, unpack_state(c.s0, n, m));
    const auto htraj = integrate(contact_flow(c.spec, h), pack(x0), cfg);
    double sup = 0;
    for (std::size_t k = 0; k < ltraj.size(); ++k) {
      const auto mapped =
          fiber_derivative(c.l, unpack_state(ltraj.states[k], n, m));
      sup = std::max(sup, (pack(mapped) - htraj.states[k]).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, sup);
    pass = pass && sup < 1e-6;
  }
  std::ostringstream os;
  os << "sup-norm deviation through the fiber derivative = " << worst
     << " (tol 1e-6)";
  return {pass, os.str()};
}

Outcome criterion7_wong_cross_checks() {
  bool pass = true;
  double worst_contact = 0, worst_lph = 0;
  for (const auto& model : {wong_abelian_demo(0.3), wong_so3_demo(0.45, 0.8)}) {
    const auto states = sample_costates(
        model.spec, SampleBox::centered(model.spec.base_dim()), 1000, 5);
    for (const auto& x : states) {
      const auto generic =
          contact_hamiltonian_vector_field(model.spec, model.hamiltonian, x);
      const auto special = wong_rhs_specialized(model.system, model.data, x);
      worst_contact = std::max(
          worst_contact,
          std::max((generic.dq - special.dq).cwiseAbs().maxCoeff(),
                   std::max((generic.dp - special.dp).cwiseAbs().maxCoeff(),
                            std::abs(generic.dz - special.dz))));
      const ContactState s(x.q, x.p, x.z);
      const auto hgen = herglotz_rhs(model.spec, model.lagrangian, s);
      const auto hspec =
          lagrange_poincare_herglotz_rhs(model.system, model.data, s);
      worst_lph = std::max(
          worst_lph,
          std::max((hgen.dq - hspec.dq).cwiseAbs().maxCoeff(),
                   std::max((hgen.dy - hspec.dy).cwiseAbs().maxCoeff(),
                            std::abs(hgen.dz - hspec.dz))));
    }
  }
  pass = pass && worst_contact < 1e-12 && worst_lph < 1e-10;

  // flat abelian decay: with a zero connection every bracket term vanishes
  const auto abelian = LieAlgebraData::abelian(1);
  AtiyahData flat{abelian, Connection::zero({"x1", "x2"}, 1)};
  const double gamma = 0.3;
  const auto model = build_wong(WongSystem::flat(abelian, 2, gamma), flat);
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;
  const Vec s0 = vec({0.2, -0.1, 1.0, 2.0, 1.5, 0.0});
  const auto traj = integrate(contact_flow(model.spec, model.hamiltonian), s0, cfg);
  const double decay = std::exp(-gamma);
  double worst_decay = 0;
  for (int a = 0; a < 3; ++a)
    worst_decay = std::max(worst_decay, std::abs(traj.states.back()[2 + a] -
                                                 decay * s0[2 + a]));
  pass = pass && worst_decay < 1e-6;

  std::ostringstream os;
  os << "contact gap " << worst_contact << " (tol 1e-12), reduction gap "
     << worst_lph << " (tol 1e-10), momentum decay gap " << worst_decay
     << " (tol 1e-6)";
  return {pass, os.str()};
}

Outcome criterion8_reduction_regression() {
  bool pass = true;
  // identity anchor, zero structure: classical contact equations, exactly
  {
    auto spec = build_tangent_bundle(2);
    CotangentFunction h(spec, "0.5*(p1^2+p2^2) + q1^2*q2 + cos(q2) + 0.3*z");
    const auto states = sample_costates(spec, SampleBox::centered(2), 100, 21);
    for (const auto& x : states) {
      const auto g = h.gradient(x);
      const auto v = contact_hamiltonian_vector_field(spec, h, x);
      for (int i = 0; i < 2; ++i) {
        const double dq = g.dp[i];
        const double dp = -(g.dq[i] + x.p[i] * g.dz);
        pass = pass && v.dq[i] == dq && v.dp[i] == dp;
      }
      const double dz = x.p[0] * g.dp[0] + x.p[1] * g.dp[1] - g.value;
      pass = pass && v.dz == dz;
    }
  }
  // base over a point: Lie-Poisson-Jacobi equations for so(3), exactly
  {
    auto spec = build_lie_algebra(LieAlgebraData::so3());
    CotangentFunction h(spec, "0.5*(p1^2+2*p2^2+3*p3^2) + 0.7*z + p1*p2");
    const auto states = sample_costates(spec, SampleBox::centered(0), 100, 22);
    for (const auto& x : states) {
      const auto g = h.gradient(x);
      const auto v = contact_hamiltonian_vector_field(spec, h, x);
      const Vec& p = x.p;
      const Vec& gp = g.dp;
      const double d0 = -((p[2] * gp[1] - p[1] * gp[2]) + p[0] * g.dz);
      const double d1 = -((p[0] * gp[2] - p[2] * gp[0]) + p[1] * g.dz);
      const double d2 = -((p[1] * gp[0] - p[0] * gp[1]) + p[2] * g.dz);
      const double dz = p[0] * gp[0] + p[1] * gp[1] + p[2] * gp[2] - g.value;
      pass = pass && v.dp[0] == d0 && v.dp[1] == d1 && v.dp[2] == d2 &&
             v.dz == dz;
    }
  }
  return {pass, pass ? "generic field reproduces both hand-coded reductions "
                       "exactly on 100 random states each"
                     : "exact reduction equality failed"};
}

Outcome criterion9_expression_module() {
  bool pass = true;
  std::ostringstream os;

  // forward-mode gradients vs central differences on random expressions
  std::mt19937_64 rng(909);
  const std::vector<std::string> vars{"a", "b", "c", "d"};
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  std::function<std::string(int)> gen = [&](int depth) -> std::string {
    if (depth <= 0) {
      if (rng() % 2) return vars[rng() % 4];
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", uniform(0.3, 2.0));
      return buf;
    }
    switch (rng() % 9) {
      case 0: return "(" + gen(depth - 1) + "+" + gen(depth - 1) + ")";
      case 1: return "(" + gen(depth - 1) + "-" + gen(depth - 1) + ")";
      case 2: return "(" + gen(depth - 1) + "*" + gen(depth - 1) + ")";
      case 3: return "(" + gen(depth - 1) + ")/((" + gen(depth - 1) + ")^2+1.7)";
      case 4: return "sin(" + gen(depth - 1) + ")";
      case 5: return "cos(" + gen(depth - 1) + ")";
      case 6: return "exp(0.3*(" + gen(depth - 1) + "))";
      case 7: return "log((" + gen(depth - 1) + ")^2+1.3)";
      default: return "(" + gen(depth - 1) + ")^" + ((rng() % 2) ? "2" : "3");
    }
  };
  double worst_rel = 0;
  for (int k = 0; k < 100; ++k) {
    const auto f = ScalarField::parse(gen(3), vars);
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = uniform(-1.5, 1.5);
    const auto d = f.eval_with_gradient(x);
    for (int i = 0; i < 4; ++i) {
      Vec xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const double fd = (f(xp) - f(xm)) / 2e-6;
      worst_rel = std::max(worst_rel, std::abs(d.derivs[i] - fd) /
                                          std::max(1.0, std::abs(d.derivs[i])));
    }
  }
  pass = pass && worst_rel < 1e-5;
  os << "AD-vs-FD relative gap " << worst_rel << " (tol 1e-5)";

  // parse errors carry positions
  bool position_ok = false;
  try {
    ScalarField::parse("q1 + * p1", {"q1", "p1"});
  } catch (const ParseError& e) {
    position_ok = e.position() == 5;
  }
  pass = pass && position_ok;
  os << ", parse-error position " << (position_ok ? "ok" : "WRONG");

  // rk4 order-4 factor on the closed-form decay
  auto spec = build_lie_algebra(LieAlgebraData::so3());
  CotangentFunction h(spec, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", 2.0}});
  const double gamma = 2.0;
  const Vec p0 = vec({1, 2, 3});
  const double z0 = 0.3;
  const auto closed = [&](double t) {
    Vec out(4);
    const double decay = std::exp(-gamma * t);
    out.head(3) = decay * p0;
    out[3] = decay * (z0 + p0.squaredNorm() * (1.0 - decay) / (2.0 * gamma));
    return out;
  };
  std::vector<double> errors;
  for (double step : {1e-2, 5e-3, 2.5e-3}) {
    IntegratorConfig cfg;
    cfg.step = step;
    cfg.t1 = 1.0;
    const auto traj =
        integrate(contact_flow(spec, h), vec({1, 2, 3, 0.3}), cfg);
    errors.push_back(
        (traj.states.back() - closed(1.0)).cwiseAbs().maxCoeff());
  }
  const double f1 = errors[0] / errors[1];
  const double f2 = errors[1] / errors[2];
  pass = pass && f1 >= 12.0 && f2 >= 12.0;
  os << ", rk4 halving factors " << f1 << ", " << f2 << " (>= 12)";
  return {pass, os.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* label;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "bracket axiom suite", criterion1_bracket_axioms},
      {2, "structure-equation validation", criterion2_structure_validation},
      {3, "dissipation identity", criterion3_dissipation_identity},
      {4, "closed-form decay", criterion4_closed_form_decay},
      {5, "conservative limit", criterion5_conservative_limit},
      {6, "Herglotz/contact equivalence", criterion6_equivalence},
      {7, "Wong cross-checks", criterion7_wong_cross_checks},
      {8, "reduction regression", criterion8_reduction_regression},
      {9, "expression module", criterion9_expression_module},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] criterion %d: %s: %s\n", outcome.pass ? "PASS" : "FAIL",
                c.id, c.label, outcome.detail.c_str());
    if (!outcome.pass) ++failures;
  }
  if (failures)
    std::printf("%d criterion(s) failed\n", failures);
  else
    std::printf("all %zu criteria passed\n", criteria.size());
  return failures;
}
