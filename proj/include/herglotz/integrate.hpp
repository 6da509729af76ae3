#ifndef HERGLOTZ_INTEGRATE_HPP
#define HERGLOTZ_INTEGRATE_HPP

// Time integration of autonomous vector fields with per-step diagnostics.
// Fixed-step classical RK4 and an adaptive Dormand-Prince 5(4) embedded pair.
// Integration is strictly sequential per trajectory, so identical inputs give
// bit-identical trajectories.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "herglotz/brackets.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"

namespace herglotz {

enum class Method { rk4, rkf45 };

struct IntegratorConfig {
  Method method = Method::rk4;
  double step = 1e-3;      // rk4 step size
  double rel_tol = 1e-8;   // rkf45
  double abs_tol = 1e-10;  // rkf45
  double min_step = 1e-12;
  double max_step = 0.0;   // 0 = span of t
  double t0 = 0.0;
  double t1 = 1.0;
  int record_every = 1;    // record every k-th accepted step

  void validate() const {
    if (!(t1 > t0)) throw InputError("integrator: t1 must exceed t0");
    if (step <= 0.0) throw InputError("integrator: step must be positive");
    if (rel_tol <= 0.0 || abs_tol <= 0.0)
      throw InputError("integrator: tolerances must be positive");
    if (min_step <= 0.0) throw InputError("integrator: min_step must be positive");
    if (record_every < 1) throw InputError("integrator: record_every must be >= 1");
  }
};

struct SampleDiagnostics {
  double h_value = std::numeric_limits<double>::quiet_NaN();
  double dissipation_residual = std::numeric_limits<double>::quiet_NaN();
  double step_size = std::numeric_limits<double>::quiet_NaN();
  double error_estimate = std::numeric_limits<double>::quiet_NaN();
};

/// A time-indexed sequence of packed states with per-sample diagnostics.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<SampleDiagnostics> diagnostics;

  void append(double t, Vec state, SampleDiagnostics d) {
    if (!times.empty() && !(t > times.back()))
      throw InputError("trajectory times must be strictly increasing");
    times.push_back(t);
    states.push_back(std::move(state));
    diagnostics.push_back(d);
  }
  std::size_t size() const { return times.size(); }
};

using Rhs = std::function<Vec(const Vec&)>;

namespace integrate_detail {

inline void check_finite(const Vec& v, double t_last) {
  if (!v.allFinite())
    throw DivergenceError("state became non-finite during integration", t_last);
}

inline Vec rk4_step(const Rhs& rhs, const Vec& y, double h) {
  const Vec k1 = rhs(y);
  const Vec k2 = rhs(y + (h / 2) * k1);
  const Vec k3 = rhs(y + (h / 2) * k2);
  const Vec k4 = rhs(y + h * k3);
  return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                          e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

}  // namespace integrate_detail

namespace integrate_detail {

inline void run(const Rhs& rhs, const Vec& s0, const IntegratorConfig& cfg,
                Trajectory& traj) {
  traj.append(cfg.t0, s0, SampleDiagnostics{});

  // Stage states can overflow before the post-step check sees them; fail as
  // divergence rather than surfacing a downstream evaluation error.
  double t_good = cfg.t0;
  const Rhs guarded = [&rhs, &t_good](const Vec& y) {
    integrate_detail::check_finite(y, t_good);
    return rhs(y);
  };

  if (cfg.method == Method::rk4) {
    const double span = cfg.t1 - cfg.t0;
    const long nfull = static_cast<long>(span / cfg.step + 1e-9);
    const bool partial = std::abs(span - static_cast<double>(nfull) * cfg.step) >
                         1e-12 * std::abs(span);
    Vec y = s0;
    long accepted = 0;
    const long total = nfull + (partial ? 1 : 0);
    for (long k = 0; k < total; ++k) {
      const double t = cfg.t0 + static_cast<double>(k) * cfg.step;
      t_good = t;
      const double h = (k < nfull) ? cfg.step : (cfg.t1 - t);
      y = integrate_detail::rk4_step(guarded, y, h);
      integrate_detail::check_finite(y, t);
      ++accepted;
      const double tn = (k + 1 == total) ? cfg.t1 : cfg.t0 + static_cast<double>(k + 1) * cfg.step;
      if (accepted % cfg.record_every == 0 || k + 1 == total) {
        SampleDiagnostics d;
        d.step_size = h;
        traj.append(tn, y, d);
      }
    }
    return;
  }

  // Dormand-Prince 5(4)
  using T = integrate_detail::Dopri5;
  const double span = cfg.t1 - cfg.t0;
  const double hmax = cfg.max_step > 0.0 ? cfg.max_step : span;
  double t = cfg.t0;
  double h = std::min(hmax, span / 100.0);
  Vec y = s0;
  long accepted = 0;
  while (t < cfg.t1 - 1e-14 * span) {
    h = std::min(h, cfg.t1 - t);
    t_good = t;
    const Vec k1 = guarded(y);
    const Vec k2 = guarded(y + h * (T::a21 * k1));
    const Vec k3 = guarded(y + h * (T::a31 * k1 + T::a32 * k2));
    const Vec k4 = guarded(y + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3));
    const Vec k5 =
        guarded(y + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4));
    const Vec k6 = guarded(y + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 +
                                    T::a64 * k4 + T::a65 * k5));
    const Vec ynew = y + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 +
                              T::b5 * k5 + T::b6 * k6);
    const Vec k7 = guarded(ynew);
    const Vec err = h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 +
                         T::e6 * k6 + T::e7 * k7);
    integrate_detail::check_finite(ynew, t);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err_norm = std::max(err_norm, std::abs(err[i]) / scale);
    }

    if (err_norm <= 1.0) {
      t = (cfg.t1 - t <= h * (1 + 1e-12)) ? cfg.t1 : t + h;
      y = ynew;
      ++accepted;
      if (accepted % cfg.record_every == 0 || t >= cfg.t1) {
        SampleDiagnostics d;
        d.step_size = h;
        d.error_estimate = err.size() ? err.cwiseAbs().maxCoeff() : 0.0;
        traj.append(t, y, d);
      }
    }

    const double factor =
        err_norm > 0.0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    h = std::min(h, hmax);
    if (h < cfg.min_step) {
      if (err_norm > 1.0)
        throw StiffnessError(
            "adaptive integrator forced below min_step; system too stiff");
      h = cfg.min_step;
    }
  }
}

}  // namespace integrate_detail

/// Integrates the autonomous system y' = rhs(y) over cfg's time span.
/// rk4: uniform steps of cfg.step (last step shortened to land on t1).
/// rkf45: adaptive Dormand-Prince 5(4); each accepted step keeps the embedded
/// error estimate within abs_tol + rel_tol * |state| componentwise.
/// When integration fails and `partial_out` is given, it receives the samples
/// accepted before the failure.
inline Trajectory integrate(const Rhs& rhs, const Vec& s0,
                            const IntegratorConfig& cfg,
                            Trajectory* partial_out = nullptr) {
  cfg.validate();
  if (!s0.allFinite()) throw InputError("non-finite initial state");
  Trajectory traj;
  try {
    integrate_detail::run(rhs, s0, cfg, traj);
  } catch (...) {
    if (partial_out) *partial_out = std::move(traj);
    throw;
  }
  return traj;
}

/// Packs the contact-Hamiltonian flow of h into an autonomous RHS over the
/// packed (q, p, z) state vector.
template <PhaseFunction H>
Rhs contact_flow(const AlgebroidSpec& spec, const H& h) {
  const int n = spec.base_dim(), m = spec.fiber_dim();
  return [spec, h, n, m](const Vec& v) {
    const ContactCoState x = unpack_costate(v, n, m);
    const PhaseVelocity pv = contact_hamiltonian_vector_field(spec, h, x);
    Vec out(v.size());
    out.head(n) = pv.dq;
    out.segment(n, m) = pv.dp;
    out[n + m] = pv.dz;
    return out;
  };
}

/// Same for the Herglotz flow of a regular Lagrangian over packed (q, y, z).
inline Rhs herglotz_flow(const AlgebroidSpec& spec, const TangentFunction& l) {
  const int n = spec.base_dim(), m = spec.fiber_dim();
  return [spec, l, n, m](const Vec& v) {
    const ContactState s = unpack_state(v, n, m);
    const ContactVelocity cv = herglotz_rhs(spec, l, s);
    Vec out(v.size());
    out.head(n) = cv.dq;
    out.segment(n, m) = cv.dy;
    out[n + m] = cv.dz;
    return out;
  };
}

/// Per-sample dissipation diagnostics along a contact trajectory of h:
/// the value h(x(t)), and the residual |dh/dt + h dh/dz| with dh/dt estimated
/// by the exact-for-quadratics three-point formula on the recorded (possibly
/// nonuniform) grid. Endpoint samples carry only the h value.
template <PhaseFunction H>
std::vector<SampleDiagnostics> dissipation_diagnostics(const AlgebroidSpec& spec,
                                                       const H& h,
                                                       const Trajectory& traj) {
  if (traj.size() < 3)
    throw InputError("dissipation diagnostics need at least 3 samples");
  const int n = spec.base_dim(), m = spec.fiber_dim();
  const std::size_t N = traj.size();
  std::vector<double> hv(N), hz(N);
  for (std::size_t i = 0; i < N; ++i) {
    const ContactCoState x = unpack_costate(traj.states[i], n, m);
    const PhaseGradient g = h.gradient(x);
    hv[i] = g.value;
    hz[i] = g.dz;
  }
  std::vector<SampleDiagnostics> out(N);
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = traj.diagnostics[i];
    out[i].h_value = hv[i];
    if (i == 0 || i + 1 == N) continue;
    const double dm = traj.times[i] - traj.times[i - 1];
    const double dp = traj.times[i + 1] - traj.times[i];
    // derivative of the quadratic through the three samples
    const double dhdt = (hv[i + 1] * dm * dm - hv[i - 1] * dp * dp +
                         hv[i] * (dp * dp - dm * dm)) /
                        (dm * dp * (dm + dp));
    out[i].dissipation_residual = std::abs(dhdt + hv[i] * hz[i]);
  }
  return out;
}

/// Writes the trajectory as CSV: t, coordinates, z, h, residual. Floating
/// point is printed with 17 significant digits, so the output is
/// byte-deterministic and round-trips exactly.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                                 int n, int m, bool lagrangian_side = false,
                                 const std::vector<SampleDiagnostics>* diags = nullptr) {
  os << "t";
  for (int i = 0; i < n; ++i) os << ",q" << i + 1;
  for (int a = 0; a < m; ++a) os << "," << (lagrangian_side ? "y" : "p") << a + 1;
  os << ",z,h,residual\n";
  char buf[40];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    num(traj.times[k]);
    for (Eigen::Index j = 0; j < traj.states[k].size(); ++j) {
      os << ',';
      num(traj.states[k][j]);
    }
    const SampleDiagnostics& d = diags ? (*diags)[k] : traj.diagnostics[k];
    os << ',';
    num(d.h_value);
    os << ',';
    num(d.dissipation_residual);
    os << '\n';
  }
}

}  // namespace herglotz

#endif  // HERGLOTZ_INTEGRATE_HPP
