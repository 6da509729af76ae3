#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "herglotz/integrate.hpp"

using namespace herglotz;

namespace {

AlgebroidSpec tangent_bundle(int n) {
  AlgebroidBuilder b(n, n);
  for (int i = 0; i < n; ++i) b.anchor(i, i, 1.0);
  return b.build();
}

AlgebroidSpec so3() {
  AlgebroidBuilder b(0, 3);
  b.structure(2, 0, 1, 1.0);
  b.structure(0, 1, 2, 1.0);
  b.structure(1, 2, 0, 1.0);
  return b.build();
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// packed (p, z) closed form for h = |p|^2/2 + gamma z on a Lie algebra with
// isotropic kinetic term: p(t) = e^{-gamma t} p0,
// z(t) = e^{-gamma t} (z0 + |p0|^2 (1 - e^{-gamma t}) / (2 gamma)).
Vec so3_closed_form(const Vec& p0, double z0, double gamma, double t) {
  Vec out(4);
  const double decay = std::exp(-gamma * t);
  out.head(3) = decay * p0;
  out[3] = decay * (z0 + p0.squaredNorm() * (1.0 - decay) / (2.0 * gamma));
  return out;
}

}  // namespace

TEST_CASE("closed-form decay on so(3)") {
  const auto g = so3();
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", 0.5}});
  IntegratorConfig cfg;
  cfg.method = Method::rk4;
  cfg.step = 1e-3;
  cfg.t0 = 0.0;
  cfg.t1 = 1.0;
  const Vec s0 = vec({1, 2, 3, 0});
  const auto traj = integrate(contact_flow(g, h), s0, cfg);
  REQUIRE(traj.size() == 1001);
  CHECK(traj.times.back() == 1.0);
  const Vec expect = so3_closed_form(vec({1, 2, 3}), 0.0, 0.5, 1.0);
  const double err = (traj.states.back() - expect).cwiseAbs().maxCoeff();
  CHECK(err < 1e-8);
}

TEST_CASE("zero field keeps the trajectory constant") {
  const Vec s0 = vec({0.3, -0.4, 2.0});
  IntegratorConfig cfg;
  cfg.step = 0.01;
  cfg.t1 = 2.0;
  const auto traj =
      integrate([](const Vec& v) { return Vec(Vec::Zero(v.size())); }, s0, cfg);
  for (const auto& s : traj.states) CHECK(s == s0);
}

TEST_CASE("conservative so(3) flow leaves momenta untouched") {
  const auto g = so3();
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2)");
  IntegratorConfig cfg;
  cfg.step = 1e-2;
  cfg.t1 = 3.0;
  const auto traj =
      integrate(contact_flow(g, h), vec({1, 2, 3, 0.5}), cfg);
  for (const auto& s : traj.states) {
    CHECK(s[0] == 1.0);
    CHECK(s[1] == 2.0);
    CHECK(s[2] == 3.0);
  }
}

TEST_CASE("rk4 converges at fourth order on the closed-form case") {
  const auto g = so3();
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", 2.0}});
  const Vec s0 = vec({1, 2, 3, 0.3});
  const Vec expect = so3_closed_form(vec({1, 2, 3}), 0.3, 2.0, 1.0);
  std::vector<double> errors;
  for (double step : {1e-2, 5e-3, 2.5e-3}) {
    IntegratorConfig cfg;
    cfg.step = step;
    cfg.t1 = 1.0;
    const auto traj = integrate(contact_flow(g, h), s0, cfg);
    errors.push_back((traj.states.back() - expect).cwiseAbs().maxCoeff());
  }
  INFO("errors " << errors[0] << " " << errors[1] << " " << errors[2]);
  CHECK(errors[0] / errors[1] >= 12.0);
  CHECK(errors[1] / errors[2] >= 12.0);
}

TEST_CASE("adaptive integrator respects its tolerances per accepted step") {
  const auto tq = tangent_bundle(1);
  CotangentFunction h(tq, "0.5*p1^2 + q1^2 + 0.2*z");
  IntegratorConfig cfg;
  cfg.method = Method::rkf45;
  cfg.rel_tol = 1e-8;
  cfg.abs_tol = 1e-10;
  cfg.t1 = 5.0;
  const auto traj = integrate(contact_flow(tq, h), vec({1.0, 0.0, 0.0}), cfg);
  REQUIRE(traj.size() > 10);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double est = traj.diagnostics[k].error_estimate;
    const double scale =
        cfg.abs_tol + cfg.rel_tol * std::max(traj.states[k - 1].cwiseAbs().maxCoeff(),
                                             traj.states[k].cwiseAbs().maxCoeff());
    CHECK(est <= scale);
  }
}

TEST_CASE("adaptive integrator conserves energy in the conservative limit") {
  const auto tq = tangent_bundle(1);
  CotangentFunction h(tq, "0.5*p1^2 + q1^2");
  IntegratorConfig cfg;
  cfg.method = Method::rkf45;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  cfg.t1 = 10.0;
  const auto traj = integrate(contact_flow(tq, h), vec({1.0, 0.5, 0.0}), cfg);
  const double h0 = h.value(unpack_costate(traj.states.front(), 1, 1));
  for (const auto& s : traj.states) {
    const double ht = h.value(unpack_costate(s, 1, 1));
    CHECK(std::abs(ht - h0) / std::abs(h0) < 1e-8);
  }
}

TEST_CASE("trajectories are bit-for-bit deterministic") {
  const auto g = so3();
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2) + 0.3*z + 0.1*p1*p2");
  IntegratorConfig cfg;
  cfg.method = Method::rkf45;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-11;
  cfg.t1 = 2.0;
  const auto a = integrate(contact_flow(g, h), vec({1, 2, 3, 0}), cfg);
  const auto b = integrate(contact_flow(g, h), vec({1, 2, 3, 0}), cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a.times[k] == b.times[k]);
    CHECK(a.states[k] == b.states[k]);
  }
}

TEST_CASE("record_every thins the samples") {
  IntegratorConfig cfg;
  cfg.step = 0.1;
  cfg.t1 = 1.0;
  cfg.record_every = 4;
  const auto traj = integrate(
      [](const Vec& v) { return Vec(-v); }, vec({1.0}), cfg);
  // initial sample, steps 4 and 8, and the forced final sample
  REQUIRE(traj.size() == 4);
  CHECK(traj.times[1] == Catch::Approx(0.4));
  CHECK(traj.times[2] == Catch::Approx(0.8));
  CHECK(traj.times[3] == Catch::Approx(1.0));
}

TEST_CASE("divergence and stiffness are reported") {
  IntegratorConfig cfg;
  cfg.step = 1.0;
  cfg.t1 = 40.0;
  CHECK_THROWS_AS(
      integrate([](const Vec& v) { return Vec(v.cwiseProduct(v)); }, vec({2.0}), cfg),
      DivergenceError);

  IntegratorConfig stiff;
  stiff.method = Method::rkf45;
  stiff.rel_tol = 1e-10;
  stiff.abs_tol = 1e-12;
  stiff.min_step = 0.5;  // forces rejection below the floor
  stiff.t1 = 10.0;
  const auto tq = tangent_bundle(1);
  CotangentFunction h(tq, "0.5*p1^2 + q1^2");
  CHECK_THROWS_AS(integrate(contact_flow(tq, h), vec({1.0, 0.0, 0.0}), stiff),
                  StiffnessError);

  IntegratorConfig bad;
  bad.t1 = -1.0;
  CHECK_THROWS_AS(integrate([](const Vec& v) { return v; }, vec({1.0}), bad),
                  InputError);
}

TEST_CASE("dissipation diagnostics track the decay law") {
  const auto g = so3();
  const double gamma = 0.3;
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", gamma}});
  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 1.0;
  cfg.record_every = 10;
  const auto traj = integrate(contact_flow(g, h), vec({1, 2, 3, 0}), cfg);
  const auto diags = dissipation_diagnostics(g, h, traj);
  REQUIRE(diags.size() == traj.size());
  const double h0 = diags.front().h_value;
  for (std::size_t k = 0; k < diags.size(); ++k) {
    const double expected = h0 * std::exp(-gamma * traj.times[k]);
    CHECK(std::abs(diags[k].h_value - expected) / h0 < 1e-6);
    if (k > 0 && k + 1 < diags.size())
      CHECK(diags[k].dissipation_residual < 1e-4);
  }
}

TEST_CASE("constant hamiltonian freezes the momenta and drains z") {
  const auto g = so3();
  CotangentFunction h(g, "2.5");
  IntegratorConfig cfg;
  cfg.step = 1e-2;
  cfg.t1 = 1.0;
  const auto traj = integrate(contact_flow(g, h), vec({1, 2, 3, 0}), cfg);
  const auto diags = dissipation_diagnostics(g, h, traj);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    CHECK(traj.states[k].head(3) == vec({1, 2, 3}));
    // dz = -h: z(t) = -2.5 t
    CHECK_THAT(traj.states[k][3],
               Catch::Matchers::WithinAbs(-2.5 * traj.times[k], 1e-12));
    if (k > 0 && k + 1 < traj.size())
      CHECK(diags[k].dissipation_residual < 1e-12);
  }

  Trajectory tiny;
  tiny.append(0.0, vec({1, 2, 3, 0}), {});
  tiny.append(1.0, vec({1, 2, 3, 0}), {});
  CHECK_THROWS_AS(dissipation_diagnostics(g, h, tiny), InputError);
}

TEST_CASE("csv serialization is deterministic and carries full precision") {
  const auto tq = tangent_bundle(1);
  CotangentFunction h(tq, "0.5*p1^2 + q1^2 + 0.25*z");
  IntegratorConfig cfg;
  cfg.step = 0.25;
  cfg.t1 = 1.0;
  const auto traj = integrate(contact_flow(tq, h), vec({1.0, 0.5, 0.0}), cfg);
  const auto diags = dissipation_diagnostics(tq, h, traj);

  std::ostringstream a, b;
  write_trajectory_csv(a, traj, 1, 1, false, &diags);
  write_trajectory_csv(b, traj, 1, 1, false, &diags);
  CHECK(a.str() == b.str());

  std::istringstream in(a.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,q1,p1,z,h,residual");
  std::string line;
  std::getline(in, line);  // first sample: t=0, q=1, p=0.5, z=0
  double t, q, p, z;
  char comma;
  std::istringstream ls(line);
  ls >> t >> comma >> q >> comma >> p >> comma >> z;
  CHECK(t == 0.0);
  CHECK(q == 1.0);
  CHECK(p == 0.5);
  CHECK(z == 0.0);

  // round-trip of a full-precision state
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", traj.states.back()[0]);
  CHECK(std::stod(buf) == traj.states.back()[0]);
}
