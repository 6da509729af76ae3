#ifndef HERGLOTZ_ALGEBROID_HPP
#define HERGLOTZ_ALGEBROID_HPP

// Lie algebroid data in one coordinate patch: anchor field rho^i_a(q) and
// structure-function field C^d_ab(q), plus numerical validation of the
// anchor-compatibility and Jacobi identities on sampled base points.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"

namespace herglotz {

/// A point of the base manifold in the spec's coordinate patch.
struct BasePoint {
  Vec q;

  BasePoint() = default;
  explicit BasePoint(Vec q_) : q(std::move(q_)) {
    if (!q.allFinite()) throw InputError("non-finite base point");
  }
};

/// A fiber element (q, y) of the algebroid A.
struct FiberVector {
  Vec q;
  Vec y;
};

/// A dual fiber element (q, p) of A*.
struct CoVector {
  Vec q;
  Vec p;
};

/// How validators obtain base derivatives of the anchor/structure entries.
enum class DerivMode {
  analytic,           // forward-mode AD where the entry supports it
  finite_difference,  // central differences on entry values
};

/// Central-difference step for base coordinate j near q.
inline double fd_step(double qj) { return 1e-5 * std::max(1.0, std::abs(qj)); }

// ---------------------------------------------------------------------------
// Differentiable scalar entries over the base.

/// A differentiable scalar function of the base coordinates; the common
/// carrier for anchor and structure entries.
class BaseField {
 public:
  virtual ~BaseField() = default;
  virtual double value(const Vec& q) const = 0;
  /// Gradient with respect to the base coordinates. Analytic when available,
  /// otherwise central finite differences.
  virtual Vec gradient(const Vec& q) const = 0;
  virtual bool has_analytic_gradient() const { return true; }
};

using BaseFieldPtr = std::shared_ptr<const BaseField>;

class ConstantField final : public BaseField {
 public:
  explicit ConstantField(double c) : c_(c) {}
  double value(const Vec& q) const override {
    (void)q;
    return c_;
  }
  Vec gradient(const Vec& q) const override { return Vec::Zero(q.size()); }

 private:
  double c_;
};

class ExpressionField final : public BaseField {
 public:
  explicit ExpressionField(ScalarField f) : f_(std::move(f)) {}
  double value(const Vec& q) const override { return f_(q); }
  Vec gradient(const Vec& q) const override {
    return f_.eval_with_gradient(q).derivs;
  }
  const ScalarField& field() const { return f_; }

 private:
  ScalarField f_;
};

/// Opaque callable entry; derivatives fall back to central differences.
class CallableField final : public BaseField {
 public:
  explicit CallableField(std::function<double(const Vec&)> fn)
      : fn_(std::move(fn)) {}
  double value(const Vec& q) const override { return fn_(q); }
  Vec gradient(const Vec& q) const override {
    Vec g(q.size());
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const double h = fd_step(q[j]);
      Vec qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      const double vp = fn_(qp), vm = fn_(qm);
      if (!std::isfinite(vp) || !std::isfinite(vm))
        throw NumericalError("derivative evaluation failed near a sample point");
      g[j] = (vp - vm) / (2 * h);
    }
    return g;
  }
  bool has_analytic_gradient() const override { return false; }

 private:
  std::function<double(const Vec&)> fn_;
};

/// coeff[0]*f[0] + coeff[1]*f[1] + ...; analytic whenever every term is.
class LinearCombinationField final : public BaseField {
 public:
  explicit LinearCombinationField(std::vector<std::pair<double, BaseFieldPtr>> terms)
      : terms_(std::move(terms)) {}
  double value(const Vec& q) const override {
    double s = 0.0;
    for (const auto& [c, f] : terms_) s += c * f->value(q);
    return s;
  }
  Vec gradient(const Vec& q) const override {
    Vec g = Vec::Zero(q.size());
    for (const auto& [c, f] : terms_) g += c * f->gradient(q);
    return g;
  }
  bool has_analytic_gradient() const override {
    for (const auto& [c, f] : terms_)
      if (!f->has_analytic_gradient()) return false;
    return true;
  }

 private:
  std::vector<std::pair<double, BaseFieldPtr>> terms_;
};

// ---------------------------------------------------------------------------

/// Result of one numerical validation check.
struct ValidationReport {
  std::string check;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int samples = 0;
  Vec worst_point;
};

/// A Lie algebroid in coordinates: dimensions, anchor entries rho^i_a(q) and
/// structure entries C^d_ab(q), antisymmetric in (a,b) by construction (only
/// the a<b triangle is stored). Immutable after construction.
class AlgebroidSpec {
 public:
  int base_dim() const { return n_; }
  int fiber_dim() const { return m_; }
  const std::vector<std::string>& coordinate_names() const { return coords_; }
  const std::vector<std::string>& section_names() const { return sections_; }

  /// rho^i_a(q) as an n x m matrix.
  Mat anchor(const BasePoint& x) const {
    check(x);
    Mat rho = Mat::Zero(n_, m_);
    for (int i = 0; i < n_; ++i)
      for (int a = 0; a < m_; ++a)
        if (const auto& f = anchor_[idx_anchor(i, a)])
          rho(i, a) = f->value(x.q);
    return rho;
  }

  /// C^d_ab(q); the d-th matrix holds the (a,b) entries and is antisymmetric.
  std::vector<Mat> structure(const BasePoint& x) const {
    check(x);
    std::vector<Mat> C(static_cast<std::size_t>(m_), Mat::Zero(m_, m_));
    for (int d = 0; d < m_; ++d)
      for (int a = 0; a < m_; ++a)
        for (int b = a + 1; b < m_; ++b)
          if (const auto& f = structure_[idx_structure(d, a, b)]) {
            const double v = f->value(x.q);
            C[static_cast<std::size_t>(d)](a, b) = v;
            C[static_cast<std::size_t>(d)](b, a) = -v;
          }
    return C;
  }

  /// d rho^i_a / d q^j, indexed [j](i,a).
  std::vector<Mat> anchor_derivatives(const BasePoint& x, DerivMode mode) const {
    check(x);
    std::vector<Mat> D(static_cast<std::size_t>(n_), Mat::Zero(n_, m_));
    for (int i = 0; i < n_; ++i)
      for (int a = 0; a < m_; ++a)
        if (const auto& f = anchor_[idx_anchor(i, a)]) {
          const Vec g = entry_gradient(*f, x.q, mode);
          for (int j = 0; j < n_; ++j) D[static_cast<std::size_t>(j)](i, a) = g[j];
        }
    return D;
  }

  /// d C^d_ab / d q^j, indexed [j][d](a,b); antisymmetric in (a,b).
  std::vector<std::vector<Mat>> structure_derivatives(const BasePoint& x,
                                                      DerivMode mode) const {
    check(x);
    std::vector<std::vector<Mat>> D(
        static_cast<std::size_t>(n_),
        std::vector<Mat>(static_cast<std::size_t>(m_), Mat::Zero(m_, m_)));
    for (int d = 0; d < m_; ++d)
      for (int a = 0; a < m_; ++a)
        for (int b = a + 1; b < m_; ++b)
          if (const auto& f = structure_[idx_structure(d, a, b)]) {
            const Vec g = entry_gradient(*f, x.q, mode);
            for (int j = 0; j < n_; ++j) {
              D[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)](a, b) = g[j];
              D[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)](b, a) = -g[j];
            }
          }
    return D;
  }

  /// True when every entry provides analytic derivatives.
  bool fully_analytic() const {
    for (const auto& f : anchor_)
      if (f && !f->has_analytic_gradient()) return false;
    for (const auto& f : structure_)
      if (f && !f->has_analytic_gradient()) return false;
    return true;
  }

 private:
  friend class AlgebroidBuilder;

  AlgebroidSpec(int n, int m, std::vector<std::string> coords,
                std::vector<std::string> sections,
                std::vector<BaseFieldPtr> anchor,
                std::vector<BaseFieldPtr> structure)
      : n_(n),
        m_(m),
        coords_(std::move(coords)),
        sections_(std::move(sections)),
        anchor_(std::move(anchor)),
        structure_(std::move(structure)) {}

  std::size_t idx_anchor(int i, int a) const {
    return static_cast<std::size_t>(i * m_ + a);
  }
  // canonical storage of the strictly upper (a<b) triangle
  std::size_t idx_structure(int d, int a, int b) const {
    const std::size_t pair =
        static_cast<std::size_t>(a) * static_cast<std::size_t>(m_) -
        static_cast<std::size_t>(a * (a + 1)) / 2 +
        static_cast<std::size_t>(b - a - 1);
    const std::size_t npairs = static_cast<std::size_t>(m_ * (m_ - 1)) / 2;
    return static_cast<std::size_t>(d) * npairs + pair;
  }

  void check(const BasePoint& x) const {
    if (x.q.size() != n_)
      throw InputError("base point has " + std::to_string(x.q.size()) +
                       " coordinates, expected " + std::to_string(n_));
  }

  static Vec entry_gradient(const BaseField& f, const Vec& q, DerivMode mode) {
    if (mode == DerivMode::analytic) return f.gradient(q);
    Vec g(q.size());
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const double h = fd_step(q[j]);
      Vec qp = q, qm = q;
      qp[j] += h;
      qm[j] -= h;
      g[j] = (f.value(qp) - f.value(qm)) / (2 * h);
    }
    return g;
  }

  int n_, m_;
  std::vector<std::string> coords_, sections_;
  std::vector<BaseFieldPtr> anchor_;     // n*m entries, null = 0
  std::vector<BaseFieldPtr> structure_;  // m * m(m-1)/2 entries, null = 0
};

/// Builds an AlgebroidSpec entry by entry. Structure entries are stored for
/// a<b only and reflected, so antisymmetry holds by construction. Indices are
/// 0-based here; the CLI config layer is 1-based.
class AlgebroidBuilder {
 public:
  AlgebroidBuilder(int base_dim, int fiber_dim) : n_(base_dim), m_(fiber_dim) {
    if (n_ < 0) throw InputError("base_dim must be >= 0");
    if (m_ < 1) throw InputError("fiber_dim must be >= 1");
    coords_.reserve(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) coords_.push_back("q" + std::to_string(i + 1));
    for (int a = 0; a < m_; ++a) sections_.push_back("e" + std::to_string(a + 1));
    anchor_.assign(static_cast<std::size_t>(n_ * m_), nullptr);
    structure_.assign(static_cast<std::size_t>(m_) *
                          static_cast<std::size_t>(m_ * (m_ - 1)) / 2,
                      nullptr);
  }

  AlgebroidBuilder& coordinate_names(std::vector<std::string> names) {
    if (static_cast<int>(names.size()) != n_)
      throw InputError("expected " + std::to_string(n_) + " coordinate names");
    coords_ = std::move(names);
    return *this;
  }

  AlgebroidBuilder& section_names(std::vector<std::string> names) {
    if (static_cast<int>(names.size()) != m_)
      throw InputError("expected " + std::to_string(m_) + " section names");
    sections_ = std::move(names);
    return *this;
  }

  AlgebroidBuilder& anchor(int i, int a, BaseFieldPtr f) {
    range(i, n_, "anchor row");
    range(a, m_, "anchor column");
    anchor_[static_cast<std::size_t>(i * m_ + a)] = std::move(f);
    return *this;
  }
  AlgebroidBuilder& anchor(int i, int a, double c) {
    return anchor(i, a, std::make_shared<ConstantField>(c));
  }
  AlgebroidBuilder& anchor(int i, int a, const std::string& expr) {
    return anchor(i, a, make_expr(expr));
  }

  /// Sets C^d_ab; a != b required, (d,b,a) is implied with the opposite sign.
  AlgebroidBuilder& structure(int d, int a, int b, BaseFieldPtr f) {
    range(d, m_, "structure upper index");
    range(a, m_, "structure lower index");
    range(b, m_, "structure lower index");
    if (a == b) throw InputError("structure entries C^d_aa vanish identically");
    double sign = 1.0;
    if (a > b) {
      std::swap(a, b);
      sign = -1.0;
    }
    auto& slot = structure_[idx(d, a, b)];
    if (slot) throw InputError("structure entry set twice");
    if (sign < 0)
      slot = std::make_shared<LinearCombinationField>(
          std::vector<std::pair<double, BaseFieldPtr>>{{-1.0, std::move(f)}});
    else
      slot = std::move(f);
    return *this;
  }
  AlgebroidBuilder& structure(int d, int a, int b, double c) {
    return structure(d, a, b, std::make_shared<ConstantField>(c));
  }
  AlgebroidBuilder& structure(int d, int a, int b, const std::string& expr) {
    return structure(d, a, b, make_expr(expr));
  }

  AlgebroidSpec build() const {
    return AlgebroidSpec(n_, m_, coords_, sections_, anchor_, structure_);
  }

 private:
  static void range(int v, int bound, const char* what) {
    if (v < 0 || v >= bound)
      throw InputError(std::string(what) + " index out of range");
  }
  std::size_t idx(int d, int a, int b) const {
    const std::size_t pair =
        static_cast<std::size_t>(a) * static_cast<std::size_t>(m_) -
        static_cast<std::size_t>(a * (a + 1)) / 2 +
        static_cast<std::size_t>(b - a - 1);
    return static_cast<std::size_t>(d) *
               (static_cast<std::size_t>(m_ * (m_ - 1)) / 2) +
           pair;
  }
  BaseFieldPtr make_expr(const std::string& text) const {
    return std::make_shared<ExpressionField>(ScalarField::parse(text, coords_));
  }

  int n_, m_;
  std::vector<std::string> coords_, sections_;
  std::vector<BaseFieldPtr> anchor_, structure_;
};

/// Builds a spec from opaque callables (derivatives via finite differences).
/// The structure callable is read on the a<b triangle only and reflected.
inline AlgebroidSpec algebroid_from_callables(
    int base_dim, int fiber_dim, std::function<Mat(const Vec&)> anchor_fn,
    std::function<std::vector<Mat>(const Vec&)> structure_fn) {
  AlgebroidBuilder b(base_dim, fiber_dim);
  auto anchor_shared =
      std::make_shared<std::function<Mat(const Vec&)>>(std::move(anchor_fn));
  for (int i = 0; i < base_dim; ++i)
    for (int a = 0; a < fiber_dim; ++a)
      b.anchor(i, a,
               std::make_shared<CallableField>([anchor_shared, i, a](const Vec& q) {
                 return (*anchor_shared)(q)(i, a);
               }));
  auto structure_shared =
      std::make_shared<std::function<std::vector<Mat>(const Vec&)>>(
          std::move(structure_fn));
  for (int d = 0; d < fiber_dim; ++d)
    for (int a = 0; a < fiber_dim; ++a)
      for (int bb = a + 1; bb < fiber_dim; ++bb)
        b.structure(d, a, bb,
                    std::make_shared<CallableField>(
                        [structure_shared, d, a, bb](const Vec& q) {
                          return (*structure_shared)(q)[static_cast<std::size_t>(d)](a, bb);
                        }));
  return b.build();
}

// ---------------------------------------------------------------------------
// Spec-level operations.

inline Mat eval_anchor(const AlgebroidSpec& spec, const BasePoint& q) {
  return spec.anchor(q);
}

inline std::vector<Mat> eval_structure(const AlgebroidSpec& spec,
                                       const BasePoint& q) {
  return spec.structure(q);
}

/// Axis-aligned sampling box for validation points.
struct SampleBox {
  Vec lo, hi;

  static SampleBox centered(int dim, double lo = -1.0, double hi = 1.0) {
    SampleBox b;
    b.lo = Vec::Constant(dim, lo);
    b.hi = Vec::Constant(dim, hi);
    return b;
  }
};

namespace sampling_detail {
// mt19937_64 bits mapped to [0,1) directly, so samples are identical across
// standard library implementations.
inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace sampling_detail

/// `count` uniform points in `box`, deterministic in `seed`.
inline std::vector<BasePoint> sample_base_points(const SampleBox& box, int count,
                                                 std::uint64_t seed) {
  if (count < 1) throw InputError("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::vector<BasePoint> out;
  out.reserve(static_cast<std::size_t>(count));
  const Eigen::Index dim = box.lo.size();
  for (int k = 0; k < count; ++k) {
    Vec q(dim);
    for (Eigen::Index j = 0; j < dim; ++j)
      q[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * sampling_detail::unit(rng);
    out.emplace_back(std::move(q));
  }
  return out;
}

/// Checks rho^j_a d_j rho^i_b - rho^j_b d_j rho^i_a = rho^i_d C^d_ab
/// on the given samples.
inline ValidationReport validate_anchor(const AlgebroidSpec& spec,
                                        const std::vector<BasePoint>& samples,
                                        double tol,
                                        DerivMode mode = DerivMode::analytic) {
  if (samples.empty()) throw InputError("validate_anchor: no sample points");
  const int n = spec.base_dim(), m = spec.fiber_dim();
  ValidationReport rep;
  rep.check = "anchor_compatibility";
  rep.tolerance = tol;
  rep.samples = static_cast<int>(samples.size());
  for (const auto& x : samples) {
    const Mat rho = spec.anchor(x);
    const auto drho = spec.anchor_derivatives(x, mode);
    const auto C = spec.structure(x);
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        for (int i = 0; i < n; ++i) {
          double lhs = 0.0;
          for (int j = 0; j < n; ++j)
            lhs += rho(j, a) * drho[static_cast<std::size_t>(j)](i, b) -
                   rho(j, b) * drho[static_cast<std::size_t>(j)](i, a);
          double rhs = 0.0;
          for (int d = 0; d < m; ++d)
            rhs += rho(i, d) * C[static_cast<std::size_t>(d)](a, b);
          const double r = std::abs(lhs - rhs);
          if (r > rep.max_residual) {
            rep.max_residual = r;
            rep.worst_point = x.q;
          }
        }
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

/// Checks the cyclic identity
///   sum_cyc(a,b,c) [ rho^i_a d_i C^nu_bc + C^nu_ad C^d_bc ] = 0
/// on the given samples.
inline ValidationReport validate_jacobi(const AlgebroidSpec& spec,
                                        const std::vector<BasePoint>& samples,
                                        double tol,
                                        DerivMode mode = DerivMode::analytic) {
  if (samples.empty()) throw InputError("validate_jacobi: no sample points");
  const int n = spec.base_dim(), m = spec.fiber_dim();
  ValidationReport rep;
  rep.check = "structure_jacobi";
  rep.tolerance = tol;
  rep.samples = static_cast<int>(samples.size());
  for (const auto& x : samples) {
    const Mat rho = spec.anchor(x);
    const auto C = spec.structure(x);
    const auto dC = spec.structure_derivatives(x, mode);
    const auto term = [&](int a, int b, int c, int nu) {
      double t = 0.0;
      for (int i = 0; i < n; ++i)
        t += rho(i, a) *
             dC[static_cast<std::size_t>(i)][static_cast<std::size_t>(nu)](b, c);
      for (int d = 0; d < m; ++d)
        t += C[static_cast<std::size_t>(nu)](a, d) *
             C[static_cast<std::size_t>(d)](b, c);
      return t;
    };
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        for (int c = b + 1; c < m; ++c)
          for (int nu = 0; nu < m; ++nu) {
            const double r = std::abs(term(a, b, c, nu) + term(b, c, a, nu) +
                                      term(c, a, b, nu));
            if (r > rep.max_residual) {
              rep.max_residual = r;
              rep.worst_point = x.q;
            }
          }
  }
  rep.pass = rep.max_residual <= tol;
  return rep;
}

}  // namespace herglotz

#endif  // HERGLOTZ_ALGEBROID_HPP
