#ifndef HERGLOTZ_DYNAMICS_HPP
#define HERGLOTZ_DYNAMICS_HPP

// Lagrangian-side structures on A x R: fiber derivative (Legendre map),
// Lagrangian energy, the Herglotz equations as an explicit first-order
// system, and the Hamiltonian induced by a regular Lagrangian.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "herglotz/algebroid.hpp"
#include "herglotz/brackets.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"

namespace herglotz {

/// A point (q, y, z) of A x R.
struct ContactState {
  Vec q;
  Vec y;
  double z = 0.0;

  ContactState() = default;
  ContactState(Vec q_, Vec y_, double z_)
      : q(std::move(q_)), y(std::move(y_)), z(z_) {
    if (!q.allFinite() || !y.allFinite() || !std::isfinite(z))
      throw InputError("non-finite contact state");
  }
};

/// Components of a vector field value at a point of A x R.
struct ContactVelocity {
  Vec dq;
  Vec dy;
  double dz = 0.0;
};

inline Vec pack(const ContactState& s) {
  Vec v(s.q.size() + s.y.size() + 1);
  v.head(s.q.size()) = s.q;
  v.segment(s.q.size(), s.y.size()) = s.y;
  v[v.size() - 1] = s.z;
  return v;
}

inline ContactState unpack_state(const Vec& v, int n, int m) {
  if (v.size() != n + m + 1) throw InputError("packed state has wrong length");
  ContactState s;
  s.q = v.head(n);
  s.y = v.segment(n, m);
  s.z = v[n + m];
  return s;
}

/// Variable names (q..., y..., z) for functions on A x R bound to `spec`.
inline std::vector<std::string> tangent_variables(const AlgebroidSpec& spec) {
  std::vector<std::string> vars = spec.coordinate_names();
  for (int a = 0; a < spec.fiber_dim(); ++a)
    vars.push_back("y" + std::to_string(a + 1));
  vars.push_back("z");
  return vars;
}

/// A scalar expression over (q^1..q^n, y^1..y^m, z) bound to an algebroid;
/// houses Lagrangians.
class TangentFunction {
 public:
  TangentFunction(const AlgebroidSpec& spec, ScalarField f)
      : n_(spec.base_dim()), m_(spec.fiber_dim()), f_(std::move(f)) {
    if (f_.num_variables() != n_ + m_ + 1)
      throw InputError("expected a function of " + std::to_string(n_ + m_ + 1) +
                       " variables (q,y,z), got " +
                       std::to_string(f_.num_variables()));
  }

  TangentFunction(const AlgebroidSpec& spec, std::string_view text,
                  const std::map<std::string, double>& params = {})
      : TangentFunction(
            spec, ScalarField::parse(text, tangent_variables(spec), params)) {}

  double value(const ContactState& s) const { return f_(pack_checked(s)); }

  DualValue gradient(const ContactState& s) const {
    return f_.eval_with_gradient(pack_checked(s));
  }

  DualValue hessian(const ContactState& s) const {
    return f_.eval_with_hessian(pack_checked(s));
  }

  const ScalarField& field() const { return f_; }
  int base_dim() const { return n_; }
  int fiber_dim() const { return m_; }

 private:
  Vec pack_checked(const ContactState& s) const {
    if (s.q.size() != n_ || s.y.size() != m_)
      throw InputError("state dimensions do not match the bound algebroid");
    return pack(s);
  }

  int n_, m_;
  ScalarField f_;
};

/// E_l = y^a dl/dy^a - l.
inline double lagrangian_energy(const TangentFunction& l, const ContactState& s) {
  const DualValue d = l.gradient(s);
  double e = 0.0;
  for (int a = 0; a < l.fiber_dim(); ++a)
    e += s.y[a] * d.derivs[l.base_dim() + a];
  return e - d.value;
}

/// Fiber derivative (Legendre map): (q, y, z) -> (q, dl/dy, z).
inline ContactCoState fiber_derivative(const TangentFunction& l,
                                       const ContactState& s) {
  const DualValue d = l.gradient(s);
  ContactCoState x;
  x.q = s.q;
  x.p = d.derivs.segment(l.base_dim(), l.fiber_dim());
  x.z = s.z;
  return x;
}

namespace dynamics_detail {

/// Solves W u = rhs for the symmetric fiber Hessian W, rejecting
/// near-singular W (condition estimate above `cond_limit`).
inline Vec solve_regular(const Mat& W, const Vec& rhs, double cond_limit) {
  if (W.size() == 0) return Vec(0);
  Eigen::JacobiSVD<Mat> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()[0];
  const double smin = svd.singularValues()[svd.singularValues().size() - 1];
  if (!(smin > 0.0) || smax / smin > cond_limit)
    throw RegularityError("fiber Hessian is singular (condition estimate " +
                          std::to_string(smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity()) +
                          ")");
  return Eigen::PartialPivLU<Mat>(W).solve(rhs);
}

inline Mat fiber_block(const DualValue& d, int n, int m) {
  return d.second->block(n, n, m, m);
}

}  // namespace dynamics_detail

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  double cond_limit = 1e12;
};

/// Inverts the fiber derivative: finds y with dl/dy(q, y, z) = target.p,
/// keeping q and z from `target`. Damped Newton iteration (step halving on
/// residual increase) starting from `y_guess`.
inline ContactState legendre_invert(const TangentFunction& l,
                                    const ContactCoState& target,
                                    const Vec& y_guess,
                                    const NewtonOptions& opts = {}) {
  if (!y_guess.allFinite()) throw InputError("non-finite Newton guess");
  if (y_guess.size() != l.fiber_dim())
    throw InputError("Newton guess has wrong dimension");
  const int n = l.base_dim(), m = l.fiber_dim();
  ContactState s(target.q, y_guess, target.z);

  auto residual = [&](const ContactState& st) -> Vec {
    const DualValue d = l.gradient(st);
    return d.derivs.segment(n, m) - target.p;
  };

  Vec r = residual(s);
  double rnorm = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (rnorm < opts.tol) return s;
    const DualValue d = l.hessian(s);
    const Mat W = dynamics_detail::fiber_block(d, n, m);
    const Vec step = dynamics_detail::solve_regular(W, r, opts.cond_limit);
    double damping = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
      ContactState trial(s.q, s.y - damping * step, s.z);
      const Vec rt = residual(trial);
      const double rtnorm = rt.size() ? rt.cwiseAbs().maxCoeff() : 0.0;
      if (rtnorm < rnorm || rtnorm < opts.tol) {
        s = std::move(trial);
        r = rt;
        rnorm = rtnorm;
        break;
      }
      damping *= 0.5;
      if (halving == 29) {
        s.y -= damping * step;  // accept the tiny step and keep iterating
        r = residual(s);
        rnorm = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
      }
    }
  }
  if (rnorm < opts.tol) return s;
  throw ConvergenceError("legendre_invert did not converge", rnorm);
}

inline ContactState legendre_invert(const TangentFunction& l,
                                    const ContactCoState& target,
                                    const NewtonOptions& opts = {}) {
  return legendre_invert(l, target, target.p, opts);
}

/// Right-hand side of the Herglotz equations as an explicit first-order
/// system, obtained by expanding d/dt(dl/dy^a) with the chain rule:
///   dq^i = rho^i_a y^a,   dz = l,
///   W_ab dy^b = rho^i_a dl/dq^i - C^d_ab y^b dl/dy^d + (dl/dz)(dl/dy^a)
///               - (d2l/dy^a dq^i) dq^i - (d2l/dy^a dz) dz.
inline ContactVelocity herglotz_rhs(const AlgebroidSpec& spec,
                                    const TangentFunction& l,
                                    const ContactState& s,
                                    double cond_limit = 1e12) {
  const int n = spec.base_dim(), m = spec.fiber_dim();
  const DualValue d = l.hessian(s);
  const Mat rho = spec.anchor(BasePoint(s.q));
  const auto C = spec.structure(BasePoint(s.q));

  ContactVelocity v;
  v.dq = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int a = 0; a < m; ++a) acc += rho(i, a) * s.y[a];
    v.dq[i] = acc;
  }
  v.dz = d.value;

  Vec rhs = Vec::Zero(m);
  for (int a = 0; a < m; ++a) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rho(i, a) * d.derivs[i];
    for (int b = 0; b < m; ++b) {
      double w = 0.0;
      for (int dd = 0; dd < m; ++dd)
        w += C[static_cast<std::size_t>(dd)](a, b) * d.derivs[n + dd];
      acc -= w * s.y[b];
    }
    acc += d.derivs[n + m] * d.derivs[n + a];
    for (int i = 0; i < n; ++i) acc -= (*d.second)(n + a, i) * v.dq[i];
    acc -= (*d.second)(n + a, n + m) * v.dz;
    rhs[a] = acc;
  }
  const Mat W = dynamics_detail::fiber_block(d, n, m);
  v.dy = dynamics_detail::solve_regular(W, rhs, cond_limit);
  return v;
}

/// h(x) = E_l((Fl)^{-1}(x)) for a regular Lagrangian.
inline double hamiltonian_from_lagrangian(const AlgebroidSpec& spec,
                                          const TangentFunction& l,
                                          const ContactCoState& x,
                                          const NewtonOptions& opts = {}) {
  (void)spec;
  return lagrangian_energy(l, legendre_invert(l, x, opts));
}

/// The Hamiltonian induced by a regular Lagrangian, evaluated pointwise by
/// Newton inversion of the fiber derivative. Derivatives come from the exact
/// Legendre identities at the preimage point y* = (Fl)^{-1}(x):
///   dh/dp_a = y*^a,  dh/dq^i = -dl/dq^i(s*),  dh/dz = -dl/dz(s*).
/// Models the same evaluation interface as CotangentFunction.
class LegendreHamiltonian {
 public:
  LegendreHamiltonian(const AlgebroidSpec& spec, TangentFunction l,
                      NewtonOptions opts = {})
      : n_(spec.base_dim()), m_(spec.fiber_dim()), l_(std::move(l)), opts_(opts) {}

  double value(const ContactCoState& x) const {
    return lagrangian_energy(l_, legendre_invert(l_, x, opts_));
  }

  PhaseGradient gradient(const ContactCoState& x) const {
    const ContactState s = legendre_invert(l_, x, opts_);
    const DualValue d = l_.gradient(s);
    PhaseGradient g;
    double e = 0.0;
    for (int a = 0; a < m_; ++a) e += s.y[a] * d.derivs[n_ + a];
    g.value = e - d.value;
    g.dq = -d.derivs.head(n_);
    g.dp = s.y;
    g.dz = -d.derivs[n_ + m_];
    return g;
  }

  const TangentFunction& lagrangian() const { return l_; }

 private:
  int n_, m_;
  TangentFunction l_;
  NewtonOptions opts_;
};

static_assert(PhaseFunction<LegendreHamiltonian>);
static_assert(PhaseFunction<CotangentFunction>);

}  // namespace herglotz

#endif  // HERGLOTZ_DYNAMICS_HPP
