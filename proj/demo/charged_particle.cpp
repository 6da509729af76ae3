// A charged particle in a uniform magnetic field: the abelian Wong system
// with connection A = (-x2, x1), whose curvature is the constant field
// B_12 = 2. With gamma = 0 the particle orbits a circle of radius |p|/(2e);
// with gamma > 0 the orbit spirals in.

#include <cstdio>

#include "herglotz/herglotz.hpp"

using namespace herglotz;

int main(int argc, char** argv) {
  const double gamma = argc > 1 ? std::atof(argv[1]) : 0.0;
  const auto model = wong_abelian_demo(gamma);

  const double charge = 0.5;
  Vec s0(6);  // x1, x2, p1, p2, pbar, z
  s0 << 1.0, 0.0, 0.8, 0.0, charge, 0.0;

  IntegratorConfig cfg;
  cfg.step = 1e-3;
  cfg.t1 = 6.0;
  cfg.record_every = 100;

  const auto traj =
      integrate(contact_flow(model.spec, model.hamiltonian), s0, cfg);
  std::printf("# gamma = %g, charge = %g, |p0| = %g\n", gamma, charge,
              s0.segment(2, 2).norm());
  std::printf("%8s %12s %12s %12s %12s\n", "t", "x1", "x2", "|p|", "z");
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vec& s = traj.states[k];
    std::printf("%8.3f %12.6f %12.6f %12.6f %12.6f\n", traj.times[k], s[0],
                s[1], s.segment(2, 2).norm(), s[5]);
  }
  return 0;
}
