#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "herglotz/brackets.hpp"

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

AlgebroidSpec corrupted_so3() {
  AlgebroidBuilder b(0, 3);
  b.structure(2, 0, 1, 1.0);
  b.structure(0, 1, 2, 1.0);
  b.structure(1, 2, 0, 1.0);
  b.structure(1, 0, 1, 1.0);
  return b.build();
}

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("poisson bracket reproduces the coordinate relations") {
  const auto g = so3();
  CotangentFunction p1(g, "p1"), p2(g, "p2");
  const CoVector x{Vec(0), vec({1, 2, 3})};
  CHECK(poisson_bracket(g, p1, p2, x) == 3.0);  // C^3_12 p_3
  CHECK(poisson_bracket(g, p2, p1, x) == -3.0);

  const auto tq = tangent_bundle(2);
  CotangentFunction tp1(tq, "p1"), tq1(tq, "q1"), tq2(tq, "q2");
  const CoVector y{vec({0.4, -0.7}), vec({1.5, 2.5})};
  CHECK(poisson_bracket(tq, tp1, tq1, y) == 1.0);  // rho^1_1
  CHECK(poisson_bracket(tq, tq1, tq2, y) == 0.0);

  CotangentFunction zdep(tq, "p1 + z");
  CHECK_THROWS_AS(poisson_bracket(tq, zdep, tq1, y), ContractError);
}

TEST_CASE("jacobi bracket local relations") {
  const auto g = so3();
  CotangentFunction p1(g, "p1"), p2(g, "p2"), z(g, "z");
  for (double zz : {-1.0, 0.0, 2.4}) {
    const ContactCoState x(Vec(0), vec({1, 2, 3}), zz);
    CHECK(jacobi_bracket(g, p1, p2, x) == 3.0);
    CHECK(jacobi_bracket(g, p1, z, x) == 0.0);  // {p_a, z} = 0
  }

  const auto tq = tangent_bundle(1);
  CotangentFunction q1(tq, "q1"), tz(tq, "z");
  const ContactCoState s(vec({2.0}), vec({0.3}), 1.7);
  CHECK(jacobi_bracket(tq, q1, tz, s) == -2.0);  // {q^i, z} = -q^i
}

TEST_CASE("jacobi bracket is exactly antisymmetric") {
  const auto g = so3();
  const auto fns = default_test_functions(g);
  const auto states = sample_costates(g, SampleBox::centered(0), 20, 42);
  for (const auto& x : states)
    for (std::size_t i = 0; i < fns.size(); ++i)
      for (std::size_t j = 0; j < fns.size(); ++j) {
        const double ab = jacobi_bracket(g, fns[i], fns[j], x);
        const double ba = jacobi_bracket(g, fns[j], fns[i], x);
        CHECK(ab + ba == 0.0);
      }
}

TEST_CASE("jacobi bracket degenerates to the poisson bracket off z") {
  const auto tq = tangent_bundle(2);
  CotangentFunction f(tq, "q1*p2 + p1^2"), g(tq, "sin(q2)*p1");
  for (double z : {-3.0, 0.0, 5.5}) {
    const ContactCoState x(vec({0.3, -0.9}), vec({1.2, -0.4}), z);
    const CoVector y{x.q, x.p};
    CHECK(jacobi_bracket(tq, f, g, x) == poisson_bracket(tq, f, g, y));
  }
}

TEST_CASE("hamiltonian vector field") {
  const auto tq = tangent_bundle(1);
  CotangentFunction h(tq, "p1^2/2 + q1^2");
  const auto v = hamiltonian_vector_field(tq, h, {vec({1.0}), vec({1.0})});
  CHECK(v.dq[0] == 1.0);
  CHECK(v.dp[0] == -2.0);
  CHECK(v.dz == 0.0);

  const auto g = so3();
  CotangentFunction iso(g, "0.5*(p1^2+p2^2+p3^2)");
  const auto w = hamiltonian_vector_field(g, iso, {Vec(0), vec({0.3, -1.9, 2.2})});
  CHECK(w.dp == Vec::Zero(3));

  CotangentFunction c(g, "3.25");
  const auto u = hamiltonian_vector_field(g, c, {Vec(0), vec({1, 2, 3})});
  CHECK(u.dp == Vec::Zero(3));

  CotangentFunction zdep(g, "p1*z");
  CHECK_THROWS_AS(hamiltonian_vector_field(g, zdep, CoVector{Vec(0), vec({1, 2, 3})}),
                  ContractError);
}

TEST_CASE("contact hamiltonian vector field") {
  const auto g = so3();
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2) + 0.5*z");
  const ContactCoState x(Vec(0), vec({1, 2, 3}), 0.0);
  const auto v = contact_hamiltonian_vector_field(g, h, x);
  CHECK(v.dp[0] == -0.5);
  CHECK(v.dp[1] == -1.0);
  CHECK(v.dp[2] == -1.5);
  CHECK(v.dz == 7.0);  // p.dh/dp - h = 14 - 7

  const auto tq = tangent_bundle(1);
  CotangentFunction th(tq, "p1^2/2 + z");
  const auto w = contact_hamiltonian_vector_field(
      tq, th, ContactCoState(vec({0.0}), vec({1.0}), 0.0));
  CHECK(w.dq[0] == 1.0);
  CHECK(w.dp[0] == -1.0);
  CHECK(w.dz == 0.5);

  // pure dissipation h = z
  CotangentFunction hz(g, "z");
  const ContactCoState y(Vec(0), vec({0.7, -0.2, 1.1}), 0.9);
  const auto u = contact_hamiltonian_vector_field(g, hz, y);
  CHECK(u.dq.size() == 0);
  CHECK(u.dp == -y.p);
  CHECK(u.dz == -y.z);
}

TEST_CASE("dissipation identity X_h(h) = -h dh/dz") {
  const auto g = so3();
  CotangentFunction h(g, "0.5*(p1^2+p2^2+p3^2) + gamma*z", {{"gamma", 0.5}});
  for (const auto& x : sample_costates(g, SampleBox::centered(0), 40, 9)) {
    const double lhs = contact_directional_derivative(g, h, x);
    const auto grad = h.gradient(x);
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(-grad.value * grad.dz, 1e-9));
  }

  const auto tq = tangent_bundle(2);
  CotangentFunction ho(tq, "0.5*(p1^2+p2^2) + q1^2 + cos(q2) + 0.3*z");
  for (const auto& x : sample_costates(tq, SampleBox::centered(2), 40, 10)) {
    const double lhs = contact_directional_derivative(tq, ho, x);
    const auto grad = ho.gradient(x);
    CHECK_THAT(lhs, Catch::Matchers::WithinAbs(-grad.value * grad.dz, 1e-9));
  }
}

TEST_CASE("conservative degeneration drops the contact terms exactly") {
  const auto tq = tangent_bundle(2);
  CotangentFunction h(tq, "0.5*(p1^2+p2^2) + q1^2*q2");
  for (const auto& x : sample_costates(tq, SampleBox::centered(2), 25, 12)) {
    const auto contact = contact_hamiltonian_vector_field(tq, h, x);
    const auto plain = hamiltonian_vector_field(tq, h, {x.q, x.p});
    CHECK(contact.dq == plain.dq);
    CHECK(contact.dp == plain.dp);
  }
}

TEST_CASE("bracket axiom suite passes on sound specs") {
  const auto tq = tangent_bundle(1);
  std::vector<CotangentFunction> fns;
  for (const char* t : {"q1", "p1", "z", "q1*p1", "p1^2"}) fns.emplace_back(tq, t);
  auto reports = bracket_axiom_suite(
      tq, fns, sample_costates(tq, SampleBox::centered(1), 20, 4));
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    INFO(r.check << " residual " << r.max_residual);
    CHECK(r.pass);
  }
  CHECK(reports[0].max_residual == 0.0);  // antisymmetry exact

  const auto g = so3();
  auto reports2 = bracket_axiom_suite(
      g, default_test_functions(g), sample_costates(g, SampleBox::centered(0), 20, 5));
  for (const auto& r : reports2) CHECK(r.pass);
}

TEST_CASE("bracket axiom suite flags a corrupted spec") {
  const auto bad = corrupted_so3();
  auto reports = bracket_axiom_suite(
      bad, default_test_functions(bad),
      sample_costates(bad, SampleBox::centered(0), 20, 6));
  CHECK(reports[0].pass);        // antisymmetry still holds
  CHECK_FALSE(reports[1].pass);  // Jacobi identity fails
  CHECK(reports[1].max_residual > 1e-3);
}

TEST_CASE("bracket axiom suite input contract") {
  const auto g = so3();
  std::vector<CotangentFunction> two{{g, "p1"}, {g, "p2"}};
  CHECK_THROWS_AS(
      bracket_axiom_suite(g, two, sample_costates(g, SampleBox::centered(0), 5, 1)),
      InputError);
  CHECK_THROWS_AS(bracket_axiom_suite(g, default_test_functions(g), {}),
                  InputError);
  CHECK(default_test_functions(g).size() >= 5);
  CHECK(default_test_functions(tangent_bundle(1)).size() >= 5);
}
