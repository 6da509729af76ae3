#ifndef HERGLOTZ_BRACKETS_HPP
#define HERGLOTZ_BRACKETS_HPP

// The linear Poisson bracket on A*, the Jacobi bracket on A* x R, and the
// (contact) Hamiltonian vector fields in coordinates.
//
// With rho^i_a and C^d_ab the structure functions of the algebroid, the
// brackets used here are fixed by the coordinate relations
//   {p_a,p_b} = C^d_ab p_d,  {p_a,q^i} = rho^i_a,  {q^i,q^j} = 0,
// extended on A* x R by the fiber-scaling/Reeb pair, which adds
//   {p_a,z} = 0,  {q^i,z} = -q^i.

#include <Eigen/Dense>
#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "herglotz/algebroid.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"

namespace herglotz {

/// A point (q, p, z) of A* x R.
struct ContactCoState {
  Vec q;
  Vec p;
  double z = 0.0;

  ContactCoState() = default;
  ContactCoState(Vec q_, Vec p_, double z_)
      : q(std::move(q_)), p(std::move(p_)), z(z_) {
    if (!q.allFinite() || !p.allFinite() || !std::isfinite(z))
      throw InputError("non-finite contact co-state");
  }
};

/// Components of a vector field value at a point of A* x R.
struct PhaseVelocity {
  Vec dq;
  Vec dp;
  double dz = 0.0;
};

/// Value and first partials of a scalar function on A* x R at one point.
struct PhaseGradient {
  double value = 0.0;
  Vec dq;
  Vec dp;
  double dz = 0.0;
};

inline Vec pack(const ContactCoState& x) {
  Vec v(x.q.size() + x.p.size() + 1);
  v.head(x.q.size()) = x.q;
  v.segment(x.q.size(), x.p.size()) = x.p;
  v[v.size() - 1] = x.z;
  return v;
}

inline ContactCoState unpack_costate(const Vec& v, int n, int m) {
  if (v.size() != n + m + 1) throw InputError("packed state has wrong length");
  ContactCoState x;
  x.q = v.head(n);
  x.p = v.segment(n, m);
  x.z = v[n + m];
  return x;
}

/// Variable names (q..., p..., z) for functions on A* x R bound to `spec`.
inline std::vector<std::string> cotangent_variables(const AlgebroidSpec& spec) {
  std::vector<std::string> vars = spec.coordinate_names();
  for (int a = 0; a < spec.fiber_dim(); ++a)
    vars.push_back("p" + std::to_string(a + 1));
  vars.push_back("z");
  return vars;
}

/// A scalar expression over (q^1..q^n, p_1..p_m, z) bound to an algebroid;
/// houses Hamiltonians and bracket test functions.
class CotangentFunction {
 public:
  CotangentFunction(const AlgebroidSpec& spec, ScalarField f)
      : n_(spec.base_dim()), m_(spec.fiber_dim()), f_(std::move(f)) {
    if (f_.num_variables() != n_ + m_ + 1)
      throw InputError("expected a function of " + std::to_string(n_ + m_ + 1) +
                       " variables (q,p,z), got " +
                       std::to_string(f_.num_variables()));
  }

  /// Parses `text` in the spec's (q..., p..., z) variables.
  CotangentFunction(const AlgebroidSpec& spec, std::string_view text,
                    const std::map<std::string, double>& params = {})
      : CotangentFunction(
            spec, ScalarField::parse(text, cotangent_variables(spec), params)) {}

  double value(const ContactCoState& x) const { return f_(pack_checked(x)); }

  PhaseGradient gradient(const ContactCoState& x) const {
    const DualValue d = f_.eval_with_gradient(pack_checked(x));
    PhaseGradient g;
    g.value = d.value;
    g.dq = d.derivs.head(n_);
    g.dp = d.derivs.segment(n_, m_);
    g.dz = d.derivs[n_ + m_];
    return g;
  }

  /// Structural z-dependence of the expression.
  bool references_z() const { return f_.depends_on(n_ + m_); }

  const ScalarField& field() const { return f_; }
  int base_dim() const { return n_; }
  int fiber_dim() const { return m_; }

 private:
  Vec pack_checked(const ContactCoState& x) const {
    if (x.q.size() != n_ || x.p.size() != m_)
      throw InputError("state dimensions do not match the bound algebroid");
    return pack(x);
  }

  int n_, m_;
  ScalarField f_;
};

/// Anything that can be evaluated with first derivatives on A* x R.
template <class H>
concept PhaseFunction = requires(const H& h, const ContactCoState& x) {
  { h.value(x) } -> std::convertible_to<double>;
  { h.gradient(x) } -> std::convertible_to<PhaseGradient>;
};

namespace bracket_detail {

// Antisymmetrized Poisson part
//   sum_{i,a} rho^i_a (f_pa g_qi - g_pa f_qi)
//   + sum_{a<b} (sum_d C^d_ab p_d)(f_pa g_pb - f_pb g_pa).
// Each term is an explicit difference of mirrored products, so swapping f and
// g negates the result bit-for-bit.
inline double poisson_part(const Mat& rho, const std::vector<Mat>& C,
                           const Vec& p, const PhaseGradient& fg,
                           const PhaseGradient& gg) {
  const int n = static_cast<int>(rho.rows());
  const int m = static_cast<int>(rho.cols());
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < m; ++a)
      acc += rho(i, a) * (fg.dp[a] * gg.dq[i] - gg.dp[a] * fg.dq[i]);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      double w = 0.0;
      for (int d = 0; d < m; ++d) w += C[static_cast<std::size_t>(d)](a, b) * p[d];
      acc += w * (fg.dp[a] * gg.dp[b] - fg.dp[b] * gg.dp[a]);
    }
  return acc;
}

}  // namespace bracket_detail

/// Jacobi bracket on A* x R evaluated from precomputed gradients:
///   {f,g} = Lambda(df,dg) - f R(g) + g R(f),
/// with Lambda = Lambda_{A*} + (p_a d/dp_a) ^ (d/dz).
inline double jacobi_bracket_from_gradients(const AlgebroidSpec& spec,
                                            const PhaseGradient& fg,
                                            const PhaseGradient& gg,
                                            const ContactCoState& x) {
  const Mat rho = spec.anchor(BasePoint(x.q));
  const auto C = spec.structure(BasePoint(x.q));
  double acc = bracket_detail::poisson_part(rho, C, x.p, fg, gg);
  for (int a = 0; a < spec.fiber_dim(); ++a)
    acc += x.p[a] * (fg.dp[a] * gg.dz - gg.dp[a] * fg.dz);
  acc += -(fg.value * gg.dz) + gg.value * fg.dz;
  return acc;
}

/// Linear Poisson bracket on A* for z-independent functions. Throws
/// ContractError when f or g has a nonzero z-derivative at the point; such
/// functions belong to jacobi_bracket.
inline double poisson_bracket(const AlgebroidSpec& spec,
                              const CotangentFunction& f,
                              const CotangentFunction& g, const CoVector& x) {
  const ContactCoState s(x.q, x.p, 0.0);
  const PhaseGradient fg = f.gradient(s);
  const PhaseGradient gg = g.gradient(s);
  if (fg.dz != 0.0 || gg.dz != 0.0)
    throw ContractError(
        "poisson_bracket requires z-independent functions; use jacobi_bracket");
  const Mat rho = spec.anchor(BasePoint(x.q));
  const auto C = spec.structure(BasePoint(x.q));
  return bracket_detail::poisson_part(rho, C, x.p, fg, gg);
}

/// Jacobi bracket of two bound functions at a contact co-state.
inline double jacobi_bracket(const AlgebroidSpec& spec,
                             const CotangentFunction& f,
                             const CotangentFunction& g,
                             const ContactCoState& x) {
  return jacobi_bracket_from_gradients(spec, f.gradient(x), g.gradient(x), x);
}

namespace bracket_detail {

/// Assembles the contact Hamiltonian field from the gradient of h:
///   dq^i =  rho^i_a h_pa
///   dp_a = -(rho^i_a h_qi + C^d_ab p_d h_pb + p_a h_z)
///   dz   =  p_a h_pa - h.
/// `contact_terms` off drops the two h_z terms and forces dz = 0, which gives
/// the plain Hamilton equations.
inline PhaseVelocity assemble_field(const AlgebroidSpec& spec,
                                    const PhaseGradient& g,
                                    const ContactCoState& x,
                                    bool contact_terms) {
  const int n = spec.base_dim(), m = spec.fiber_dim();
  const Mat rho = spec.anchor(BasePoint(x.q));
  const auto C = spec.structure(BasePoint(x.q));
  PhaseVelocity v;
  v.dq = Vec::Zero(n);
  v.dp = Vec::Zero(m);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += rho(i, a) * g.dp[a];
    v.dq[i] = s;
  }
  for (int a = 0; a < m; ++a) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rho(i, a) * g.dq[i];
    double c = 0.0;
    for (int b = 0; b < m; ++b) {
      double w = 0.0;
      for (int d = 0; d < m; ++d) w += C[static_cast<std::size_t>(d)](a, b) * x.p[d];
      c += w * g.dp[b];
    }
    v.dp[a] = contact_terms ? -(s + c + x.p[a] * g.dz) : -(s + c);
  }
  if (contact_terms) {
    double s = 0.0;
    for (int a = 0; a < m; ++a) s += x.p[a] * g.dp[a];
    v.dz = s - g.value;
  } else {
    v.dz = 0.0;
  }
  return v;
}

}  // namespace bracket_detail

/// Hamiltonian vector field of a z-independent h on A*:
///   dq^i/dt = rho^i_a dh/dp_a,
///   dp_a/dt = -rho^i_a dh/dq^i - p_d C^d_ab dh/dp_b,  dz = 0.
inline PhaseVelocity hamiltonian_vector_field(const AlgebroidSpec& spec,
                                              const CotangentFunction& h,
                                              const CoVector& x) {
  const ContactCoState s(x.q, x.p, 0.0);
  const PhaseGradient g = h.gradient(s);
  if (g.dz != 0.0)
    throw ContractError(
        "hamiltonian_vector_field requires a z-independent Hamiltonian; use "
        "contact_hamiltonian_vector_field");
  return bracket_detail::assemble_field(spec, g, s, /*contact_terms=*/false);
}

/// Contact Hamiltonian vector field X_h on A* x R. Satisfies the dissipation
/// identity X_h(h) = -h dh/dz.
template <PhaseFunction H>
PhaseVelocity contact_hamiltonian_vector_field(const AlgebroidSpec& spec,
                                               const H& h,
                                               const ContactCoState& x) {
  return bracket_detail::assemble_field(spec, h.gradient(x), x,
                                        /*contact_terms=*/true);
}

/// Directional derivative of h along its own contact field.
template <PhaseFunction H>
double contact_directional_derivative(const AlgebroidSpec& spec, const H& h,
                                      const ContactCoState& x) {
  const PhaseGradient g = h.gradient(x);
  const PhaseVelocity v = bracket_detail::assemble_field(spec, g, x, true);
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.dq.size(); ++i) s += g.dq[i] * v.dq[i];
  for (Eigen::Index a = 0; a < v.dp.size(); ++a) s += g.dp[a] * v.dp[a];
  s += g.dz * v.dz;
  return s;
}

/// Central finite-difference gradient of an opaque scalar on A* x R.
inline PhaseGradient fd_phase_gradient(
    const std::function<double(const ContactCoState&)>& fn,
    const ContactCoState& x, double step = 1e-5) {
  const int n = static_cast<int>(x.q.size());
  const int m = static_cast<int>(x.p.size());
  PhaseGradient g;
  g.value = fn(x);
  g.dq = Vec::Zero(n);
  g.dp = Vec::Zero(m);
  Vec v = pack(x);
  for (int j = 0; j < n + m + 1; ++j) {
    Vec vp = v, vm = v;
    vp[j] += step;
    vm[j] -= step;
    const double d =
        (fn(unpack_costate(vp, n, m)) - fn(unpack_costate(vm, n, m))) /
        (2 * step);
    if (j < n)
      g.dq[j] = d;
    else if (j < n + m)
      g.dp[j - n] = d;
    else
      g.dz = d;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Bracket axiom suite.

struct BracketTolerances {
  double antisymmetry = 1e-12;
  double jacobi = 1e-7;   // limited by the finite-difference nested brackets
  double leibniz = 1e-8;
  double fd_step = 1e-5;  // central-difference step for nested brackets
};

/// Checks antisymmetry, the Jacobi identity (nested brackets by central
/// differences) and the generalized Leibniz rule
///   {f, gh} = g{f,h} + h{f,g} + gh E(f),  E = -d/dz
/// over all function pairs/triples and all states. Returns one report per
/// axiom, in that order.
inline std::vector<ValidationReport> bracket_axiom_suite(
    const AlgebroidSpec& spec, const std::vector<CotangentFunction>& functions,
    const std::vector<ContactCoState>& states,
    const BracketTolerances& tols = {}) {
  if (functions.size() < 3)
    throw InputError("bracket_axiom_suite needs at least 3 functions");
  if (states.empty()) throw InputError("bracket_axiom_suite needs states");

  ValidationReport antisym{"bracket_antisymmetry", 0.0, tols.antisymmetry,
                           false, static_cast<int>(states.size()), {}};
  ValidationReport jacobi{"bracket_jacobi", 0.0, tols.jacobi, false,
                          static_cast<int>(states.size()), {}};
  ValidationReport leibniz{"bracket_leibniz", 0.0, tols.leibniz, false,
                           static_cast<int>(states.size()), {}};

  const std::size_t N = functions.size();
  for (const auto& x : states) {
    std::vector<PhaseGradient> grads;
    grads.reserve(N);
    for (const auto& f : functions) grads.push_back(f.gradient(x));

    // antisymmetry
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) {
        const double r =
            std::abs(jacobi_bracket_from_gradients(spec, grads[i], grads[j], x) +
                     jacobi_bracket_from_gradients(spec, grads[j], grads[i], x));
        if (r > antisym.max_residual) {
          antisym.max_residual = r;
          antisym.worst_point = pack(x);
        }
      }

    // Jacobi identity; inner brackets differentiated by central differences
    const auto nested = [&](std::size_t outer, std::size_t a, std::size_t b) {
      const PhaseGradient inner = fd_phase_gradient(
          [&](const ContactCoState& s) {
            return jacobi_bracket(spec, functions[a], functions[b], s);
          },
          x, tols.fd_step);
      return jacobi_bracket_from_gradients(spec, grads[outer], inner, x);
    };
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        for (std::size_t k = j + 1; k < N; ++k) {
          const double r =
              std::abs(nested(i, j, k) + nested(j, k, i) + nested(k, i, j));
          if (r > jacobi.max_residual) {
            jacobi.max_residual = r;
            jacobi.worst_point = pack(x);
          }
        }

    // generalized Leibniz rule
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = j; k < N; ++k) {
          PhaseGradient prod;
          prod.value = grads[j].value * grads[k].value;
          prod.dq = grads[j].value * grads[k].dq + grads[k].value * grads[j].dq;
          prod.dp = grads[j].value * grads[k].dp + grads[k].value * grads[j].dp;
          prod.dz = grads[j].value * grads[k].dz + grads[k].value * grads[j].dz;
          const double lhs =
              jacobi_bracket_from_gradients(spec, grads[i], prod, x);
          const double rhs =
              grads[j].value *
                  jacobi_bracket_from_gradients(spec, grads[i], grads[k], x) +
              grads[k].value *
                  jacobi_bracket_from_gradients(spec, grads[i], grads[j], x) +
              grads[j].value * grads[k].value * (-grads[i].dz);
          const double r = std::abs(lhs - rhs);
          if (r > leibniz.max_residual) {
            leibniz.max_residual = r;
            leibniz.worst_point = pack(x);
          }
        }
  }

  antisym.pass = antisym.max_residual <= antisym.tolerance;
  jacobi.pass = jacobi.max_residual <= jacobi.tolerance;
  leibniz.pass = leibniz.max_residual <= leibniz.tolerance;
  return {antisym, jacobi, leibniz};
}

inline std::vector<ValidationReport> bracket_axiom_suite(
    const AlgebroidSpec& spec, const std::vector<CotangentFunction>& functions,
    const std::vector<ContactCoState>& states, double tol) {
  BracketTolerances t;
  t.antisymmetry = t.jacobi = t.leibniz = tol;
  return bracket_axiom_suite(spec, functions, states, t);
}

/// Coordinate functions and a few products; at least five entries for any
/// spec, suitable as a default bracket_axiom_suite input.
inline std::vector<CotangentFunction> default_test_functions(
    const AlgebroidSpec& spec) {
  const auto vars = cotangent_variables(spec);
  const int n = spec.base_dim(), m = spec.fiber_dim();
  std::vector<std::string> texts;
  for (int i = 0; i < std::min(n, 2); ++i) texts.push_back(vars[static_cast<std::size_t>(i)]);
  for (int a = 0; a < std::min(m, 3); ++a) texts.push_back("p" + std::to_string(a + 1));
  texts.push_back("z");
  if (m >= 2)
    texts.push_back("p1*p2");
  else
    texts.push_back("p1^2");
  if (n >= 1) texts.push_back(vars[0] + "*p1");
  if (texts.size() < 5) texts.push_back("p1^2");
  std::vector<CotangentFunction> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.emplace_back(spec, t);
  return out;
}

/// `count` uniform states with q in `qbox`, p in [-pscale, pscale]^m and z in
/// [-zscale, zscale], deterministic in `seed`.
inline std::vector<ContactCoState> sample_costates(const AlgebroidSpec& spec,
                                                   const SampleBox& qbox,
                                                   int count, std::uint64_t seed,
                                                   double pscale = 2.0,
                                                   double zscale = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<ContactCoState> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vec q(spec.base_dim());
    for (int j = 0; j < spec.base_dim(); ++j)
      q[j] = qbox.lo[j] + (qbox.hi[j] - qbox.lo[j]) * sampling_detail::unit(rng);
    Vec p(spec.fiber_dim());
    for (int a = 0; a < spec.fiber_dim(); ++a)
      p[a] = pscale * (2.0 * sampling_detail::unit(rng) - 1.0);
    const double z = zscale * (2.0 * sampling_detail::unit(rng) - 1.0);
    out.emplace_back(std::move(q), std::move(p), z);
  }
  return out;
}

}  // namespace herglotz

#endif  // HERGLOTZ_BRACKETS_HPP
