#ifndef HERGLOTZ_CATALOG_HPP
#define HERGLOTZ_CATALOG_HPP

// Builders for the concrete instances: tangent bundle, Lie algebra over a
// point, Atiyah algebroid over a trivialized principal bundle, and the Wong
// system (charged particle in a Yang-Mills field) with a linear dissipation
// rate gamma.

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "herglotz/algebroid.hpp"
#include "herglotz/brackets.hpp"
#include "herglotz/dynamics.hpp"
#include "herglotz/errors.hpp"
#include "herglotz/expr.hpp"

namespace herglotz {

/// A finite-dimensional real Lie algebra given by its structure constants
/// c^C_AB (antisymmetric in the lower pair). The Jacobi identity of the
/// constants is checked at construction.
class LieAlgebraData {
 public:
  LieAlgebraData(std::vector<Mat> constants, std::string name)
      : c_(std::move(constants)), name_(std::move(name)) {
    dim_ = static_cast<int>(c_.size());
    if (dim_ < 1) throw InputError("Lie algebra dimension must be positive");
    double scale = 0.0;
    for (const auto& m : c_) {
      if (m.rows() != dim_ || m.cols() != dim_)
        throw InputError("structure constant block has wrong shape");
      for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) {
          if (m(a, b) != -m(b, a))
            throw InputError("structure constants must be antisymmetric");
          scale = std::max(scale, std::abs(m(a, b)));
        }
    }
    // Jacobi identity of the constants
    const double tol = 1e-12 * std::max(1.0, scale * scale);
    for (int a = 0; a < dim_; ++a)
      for (int b = a + 1; b < dim_; ++b)
        for (int cc = b + 1; cc < dim_; ++cc)
          for (int nu = 0; nu < dim_; ++nu) {
            double s = 0.0;
            for (int d = 0; d < dim_; ++d)
              s += c(nu, a, d) * c(d, b, cc) + c(nu, b, d) * c(d, cc, a) +
                   c(nu, cc, d) * c(d, a, b);
            if (std::abs(s) > tol)
              throw InputError("structure constants of '" + name_ +
                               "' violate the Jacobi identity");
          }
  }

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  double c(int C, int A, int B) const {
    return c_[static_cast<std::size_t>(C)](A, B);
  }
  bool is_abelian() const {
    for (const auto& m : c_)
      if (m.cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
  }

  static LieAlgebraData so3() {
    std::vector<Mat> c(3, Mat::Zero(3, 3));
    // c^C_AB = epsilon_ABC
    c[2](0, 1) = 1.0;
    c[2](1, 0) = -1.0;
    c[0](1, 2) = 1.0;
    c[0](2, 1) = -1.0;
    c[1](2, 0) = 1.0;
    c[1](0, 2) = -1.0;
    return LieAlgebraData(std::move(c), "so3");
  }

  static LieAlgebraData abelian(int dim, std::string name = "abelian") {
    return LieAlgebraData(std::vector<Mat>(static_cast<std::size_t>(dim),
                                           Mat::Zero(dim, dim)),
                          std::move(name));
  }

 private:
  std::vector<Mat> c_;  // c_[C](A,B)
  std::string name_;
  int dim_ = 0;
};

/// Principal connection components A_i^B(x) over one base chart.
struct Connection {
  int base_dim = 0;
  int algebra_dim = 0;
  std::vector<std::string> coord_names;
  std::vector<ScalarField> entries;  // A[i][B] at i*algebra_dim + B

  const ScalarField& at(int i, int B) const {
    return entries[static_cast<std::size_t>(i * algebra_dim + B)];
  }

  static Connection from_texts(std::vector<std::string> coords,
                               const std::vector<std::vector<std::string>>& a,
                               const std::map<std::string, double>& params = {}) {
    Connection c;
    c.base_dim = static_cast<int>(a.size());
    c.algebra_dim = c.base_dim ? static_cast<int>(a[0].size()) : 0;
    c.coord_names = std::move(coords);
    if (static_cast<int>(c.coord_names.size()) != c.base_dim)
      throw InputError("connection: coordinate names do not match base_dim");
    for (const auto& row : a) {
      if (static_cast<int>(row.size()) != c.algebra_dim)
        throw InputError("connection: ragged component matrix");
      for (const auto& text : row)
        c.entries.push_back(ScalarField::parse(text, c.coord_names, params));
    }
    return c;
  }

  static Connection zero(std::vector<std::string> coords, int algebra_dim) {
    const int n = static_cast<int>(coords.size());
    std::vector<std::vector<std::string>> a(
        static_cast<std::size_t>(n),
        std::vector<std::string>(static_cast<std::size_t>(algebra_dim), "0"));
    return from_texts(std::move(coords), a);
  }
};

namespace catalog_detail {

struct CurvatureData {
  LieAlgebraData algebra;
  Connection connection;
};

/// One curvature component coeff * B^A_ij as a differentiable base field:
///   B^A_ij = d_i A_j^A - d_j A_i^A - c^A_BC A_i^B A_j^C.
/// (The quadratic term's sign is forced by the structure Jacobi identity of
/// the induced algebroid; see the consistency tests.)
class CurvatureField final : public BaseField {
 public:
  CurvatureField(std::shared_ptr<const CurvatureData> data, int A, int i, int j,
                 double coeff)
      : data_(std::move(data)), A_(A), i_(i), j_(j), coeff_(coeff) {}

  double value(const Vec& q) const override {
    const auto& conn = data_->connection;
    const auto& alg = data_->algebra;
    const double dAj =
        conn.at(j_, A_).eval_with_gradient(q).derivs[i_];
    const double dAi =
        conn.at(i_, A_).eval_with_gradient(q).derivs[j_];
    double quad = 0.0;
    for (int B = 0; B < alg.dim(); ++B)
      for (int C = 0; C < alg.dim(); ++C) {
        const double c = alg.c(A_, B, C);
        if (c != 0.0) quad += c * conn.at(i_, B)(q) * conn.at(j_, C)(q);
      }
    return coeff_ * (dAj - dAi - quad);
  }

  Vec gradient(const Vec& q) const override {
    const auto& conn = data_->connection;
    const auto& alg = data_->algebra;
    const DualValue hj = conn.at(j_, A_).eval_with_hessian(q);
    const DualValue hi = conn.at(i_, A_).eval_with_hessian(q);
    Vec g(q.size());
    for (Eigen::Index k = 0; k < q.size(); ++k)
      g[k] = (*hj.second)(k, i_) - (*hi.second)(k, j_);
    for (int B = 0; B < alg.dim(); ++B)
      for (int C = 0; C < alg.dim(); ++C) {
        const double c = alg.c(A_, B, C);
        if (c == 0.0) continue;
        const DualValue ai = conn.at(i_, B).eval_with_gradient(q);
        const DualValue aj = conn.at(j_, C).eval_with_gradient(q);
        g -= c * (ai.derivs * aj.value + ai.value * aj.derivs);
      }
    return coeff_ * g;
  }

 private:
  std::shared_ptr<const CurvatureData> data_;
  int A_, i_, j_;
  double coeff_;
};

inline std::string fmt(double v) { return expr_detail::format_double(v); }

}  // namespace catalog_detail

/// The curvature of a principal connection, evaluable as a callable and
/// addressable per component for spec building. Antisymmetric in (i,j).
class Curvature {
 public:
  Curvature(const LieAlgebraData& algebra, const Connection& connection)
      : data_(std::make_shared<catalog_detail::CurvatureData>(
            catalog_detail::CurvatureData{algebra, connection})) {
    if (connection.algebra_dim != algebra.dim())
      throw InputError("connection components do not match the algebra dimension");
  }

  /// B(x) as algebra-indexed antisymmetric base matrices [A](i,j).
  std::vector<Mat> operator()(const Vec& x) const {
    const int n = data_->connection.base_dim;
    const int mg = data_->algebra.dim();
    std::vector<Mat> B(static_cast<std::size_t>(mg), Mat::Zero(n, n));
    for (int A = 0; A < mg; ++A)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double v =
              catalog_detail::CurvatureField(data_, A, i, j, 1.0).value(x);
          B[static_cast<std::size_t>(A)](i, j) = v;
          B[static_cast<std::size_t>(A)](j, i) = -v;
        }
    return B;
  }

  /// coeff * B^A_ij as a differentiable entry for AlgebroidBuilder.
  BaseFieldPtr component(int A, int i, int j, double coeff = 1.0) const {
    return std::make_shared<catalog_detail::CurvatureField>(data_, A, i, j, coeff);
  }

 private:
  std::shared_ptr<const catalog_detail::CurvatureData> data_;
};

inline Curvature curvature_from_connection(const LieAlgebraData& algebra,
                                           const Connection& connection) {
  return Curvature(algebra, connection);
}

/// Atiyah algebroid input data: a base chart, a Lie algebra and a principal
/// connection on the trivialized bundle.
struct AtiyahData {
  LieAlgebraData algebra;
  Connection connection;

  int base_dim() const { return connection.base_dim; }
  const std::vector<std::string>& coordinate_names() const {
    return connection.coord_names;
  }
};

// ---------------------------------------------------------------------------
// Instance builders.

/// Identity anchor, zero structure: the tangent bundle of R^n.
inline AlgebroidSpec build_tangent_bundle(int n) {
  if (n < 1) throw InputError("tangent bundle needs n >= 1");
  AlgebroidBuilder b(n, n);
  for (int i = 0; i < n; ++i) b.anchor(i, i, 1.0);
  return b.build();
}

/// Lie algebroid over a point: zero anchor, constant structure.
inline AlgebroidSpec build_lie_algebra(const LieAlgebraData& data) {
  AlgebroidBuilder b(0, data.dim());
  for (int d = 0; d < data.dim(); ++d)
    for (int A = 0; A < data.dim(); ++A)
      for (int B = A + 1; B < data.dim(); ++B)
        if (data.c(d, A, B) != 0.0) b.structure(d, A, B, data.c(d, A, B));
  return b.build();
}

/// Atiyah algebroid of a trivialized principal bundle, in the section basis
/// (horizontal lifts e_i first, vertical sections e_A second):
///   rho^j_i = delta_ij, others 0;
///   C^A_ij = -B^A_ij,  C^C_iA = c^C_AB A_i^B,  C^C_AB = c^C_AB.
inline AlgebroidSpec build_atiyah(const AtiyahData& data) {
  const int n = data.base_dim();
  const int mg = data.algebra.dim();
  if (n < 1) throw InputError("Atiyah algebroid needs a base chart");
  AlgebroidBuilder b(n, n + mg);
  b.coordinate_names(data.coordinate_names());
  std::vector<std::string> sections;
  for (int i = 0; i < n; ++i) sections.push_back("e" + std::to_string(i + 1));
  for (int A = 0; A < mg; ++A) sections.push_back("a" + std::to_string(A + 1));
  b.section_names(std::move(sections));

  for (int i = 0; i < n; ++i) b.anchor(i, i, 1.0);

  const Curvature curv(data.algebra, data.connection);
  for (int A = 0; A < mg; ++A)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        b.structure(n + A, i, j, curv.component(A, i, j, -1.0));

  for (int C = 0; C < mg; ++C)
    for (int i = 0; i < n; ++i)
      for (int A = 0; A < mg; ++A) {
        std::vector<std::pair<double, BaseFieldPtr>> terms;
        for (int B = 0; B < mg; ++B) {
          const double c = data.algebra.c(C, A, B);
          if (c != 0.0)
            terms.emplace_back(c, std::make_shared<ExpressionField>(
                                      data.connection.at(i, B)));
        }
        if (!terms.empty())
          b.structure(n + C, i, n + A,
                      std::make_shared<LinearCombinationField>(std::move(terms)));
      }

  for (int C = 0; C < mg; ++C)
    for (int A = 0; A < mg; ++A)
      for (int B = A + 1; B < mg; ++B)
        if (data.algebra.c(C, A, B) != 0.0)
          b.structure(n + C, n + A, n + B, data.algebra.c(C, A, B));

  return b.build();
}

// ---------------------------------------------------------------------------
// Wong systems.

/// Kinetic-energy data for the Wong system: a base metric g_ij(x) given by
/// expressions, a constant bi-invariant algebra metric kappa_AB, and the
/// dissipation rate gamma. Inverse metrics are derived at construction
/// (kappa numerically, g symbolically via cofactors for the Hamiltonian).
class WongSystem {
 public:
  WongSystem(std::vector<std::vector<std::string>> g_texts,
             std::vector<std::string> coord_names, Mat kappa, double gamma,
             const LieAlgebraData& algebra)
      : coords_(std::move(coord_names)),
        g_texts_(std::move(g_texts)),
        kappa_(std::move(kappa)),
        gamma_(gamma) {
    n_ = static_cast<int>(g_texts_.size());
    if (n_ < 1 || n_ > 3)
      throw InputError("base metric must be 1x1, 2x2 or 3x3");
    if (static_cast<int>(coords_.size()) != n_)
      throw InputError("metric: coordinate names do not match the dimension");
    if (gamma_ < 0.0) throw InputError("gamma must be nonnegative");
    for (const auto& row : g_texts_)
      if (static_cast<int>(row.size()) != n_)
        throw InputError("base metric matrix is ragged");
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (g_texts_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] !=
            g_texts_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
          throw InputError("base metric entries must be symmetric");
    for (const auto& row : g_texts_)
      for (const auto& t : row)
        g_fields_.push_back(ScalarField::parse(t, coords_));

    if (kappa_.rows() != kappa_.cols())
      throw InputError("algebra metric must be square");
    if (kappa_ != kappa_.transpose())
      throw InputError("algebra metric must be symmetric");
    if (kappa_.rows() != algebra.dim())
      throw InputError("algebra metric does not match the algebra dimension");

    // ad-invariance of kappa: the lowered constants c^D_AB kappa_DE are
    // totally antisymmetric, i.e. c^D_AB kappa_DE + c^D_AE kappa_DB = 0.
    double cscale = 1.0;
    for (int A = 0; A < algebra.dim(); ++A)
      for (int B = 0; B < algebra.dim(); ++B)
        for (int E = 0; E < algebra.dim(); ++E) {
          double s = 0.0;
          for (int D = 0; D < algebra.dim(); ++D)
            s += algebra.c(D, A, B) * kappa_(D, E) +
                 algebra.c(D, A, E) * kappa_(D, B);
          if (std::abs(s) > 1e-12 * cscale)
            throw InputError("algebra metric is not bi-invariant");
        }

    Eigen::LLT<Mat> kllt(kappa_);
    if (kllt.info() != Eigen::Success)
      throw InputError("algebra metric is not positive definite");
    kappa_inv_ = kllt.solve(Mat::Identity(algebra.dim(), algebra.dim()));

    // probe positive definiteness of g on the working box
    for (const auto& pt : sample_base_points(SampleBox::centered(n_), 20, 1)) {
      Eigen::LLT<Mat> llt(metric(pt.q));
      if (llt.info() != Eigen::Success)
        throw InputError("base metric is not positive definite on the box");
    }

    build_inverse_texts();
  }

  /// Identity metrics on an n-dimensional base.
  static WongSystem flat(const LieAlgebraData& algebra, int base_dim,
                         double gamma,
                         std::vector<std::string> coord_names = {}) {
    if (coord_names.empty())
      for (int i = 0; i < base_dim; ++i)
        coord_names.push_back("x" + std::to_string(i + 1));
    std::vector<std::vector<std::string>> g(
        static_cast<std::size_t>(base_dim),
        std::vector<std::string>(static_cast<std::size_t>(base_dim), "0"));
    for (int i = 0; i < base_dim; ++i)
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = "1";
    return WongSystem(std::move(g), std::move(coord_names),
                      Mat::Identity(algebra.dim(), algebra.dim()), gamma,
                      algebra);
  }

  int base_dim() const { return n_; }
  double gamma() const { return gamma_; }
  const std::vector<std::string>& coordinate_names() const { return coords_; }
  const Mat& kappa() const { return kappa_; }
  const Mat& kappa_inverse() const { return kappa_inv_; }
  const std::string& g_text(int i, int j) const {
    return g_texts_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const std::string& g_inverse_text(int i, int j) const {
    return ginv_texts_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }

  Mat metric(const Vec& x) const {
    Mat g(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        g(i, j) = g_fields_[static_cast<std::size_t>(i * n_ + j)](x);
    return g;
  }

  Mat metric_inverse(const Vec& x) const {
    return Eigen::PartialPivLU<Mat>(metric(x)).solve(Mat::Identity(n_, n_));
  }

  /// d g_ij / d x^k, indexed [k](i,j); exact forward-mode derivatives.
  std::vector<Mat> metric_derivatives(const Vec& x) const {
    std::vector<Mat> d(static_cast<std::size_t>(n_), Mat::Zero(n_, n_));
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        const Vec grad =
            g_fields_[static_cast<std::size_t>(i * n_ + j)].eval_with_gradient(x).derivs;
        for (int k = 0; k < n_; ++k) d[static_cast<std::size_t>(k)](i, j) = grad[k];
      }
    return d;
  }

 private:
  void build_inverse_texts() {
    const auto T = [&](int i, int j) -> std::string {
      return "(" + g_text(i, j) + ")";
    };
    ginv_texts_.assign(static_cast<std::size_t>(n_),
                       std::vector<std::string>(static_cast<std::size_t>(n_)));
    if (n_ == 1) {
      ginv_texts_[0][0] = "1/" + T(0, 0);
      return;
    }
    if (n_ == 2) {
      const std::string det =
          "(" + T(0, 0) + "*" + T(1, 1) + "-" + T(0, 1) + "*" + T(1, 0) + ")";
      ginv_texts_[0][0] = T(1, 1) + "/" + det;
      ginv_texts_[1][1] = T(0, 0) + "/" + det;
      ginv_texts_[0][1] = "(0-" + T(0, 1) + ")/" + det;
      ginv_texts_[1][0] = ginv_texts_[0][1];
      return;
    }
    // n == 3: adjugate over determinant
    const auto minor2 = [&](int a, int b, int c, int d) {
      return "(" + T(a, b) + "*" + T(c, d) + "-" + T(a, d) + "*" + T(c, b) + ")";
    };
    const std::string det = "(" + T(0, 0) + "*" + minor2(1, 1, 2, 2) + "-" +
                            T(0, 1) + "*" + minor2(1, 0, 2, 2) + "+" + T(0, 2) +
                            "*" + minor2(1, 0, 2, 1) + ")";
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        // cofactor C_ji for the adjugate; rows/cols complementary to (j,i)
        const int r0 = j == 0 ? 1 : 0, r1 = j == 2 ? 1 : 2;
        const int c0 = i == 0 ? 1 : 0, c1 = i == 2 ? 1 : 2;
        std::string cof = minor2(r0, c0, r1, c1);
        if ((i + j) % 2 == 1) cof = "(0-" + cof + ")";
        ginv_texts_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            cof + "/" + det;
      }
  }

  int n_ = 0;
  std::vector<std::string> coords_;
  std::vector<std::vector<std::string>> g_texts_;
  std::vector<std::vector<std::string>> ginv_texts_;
  std::vector<ScalarField> g_fields_;
  Mat kappa_, kappa_inv_;
  double gamma_ = 0.0;
};

/// The Wong system bundled: the Atiyah algebroid spec, the quadratic contact
/// Lagrangian and the matching reduced Hamiltonian (fiber order: base block
/// first, algebra block second).
struct WongModel {
  AlgebroidSpec spec;
  TangentFunction lagrangian;
  CotangentFunction hamiltonian;
  WongSystem system;
  AtiyahData data;
};

/// l = (kappa_AB v^A v^B + g_ij xdot^i xdot^j)/2 - gamma z and
/// h = (kappa^AB pbar_A pbar_B + g^ij p_i p_j)/2 + gamma z, both bound to the
/// Atiyah spec; gamma is a rebindable parameter named "gamma".
inline WongModel build_wong(const WongSystem& sys, const AtiyahData& data) {
  using catalog_detail::fmt;
  const int n = sys.base_dim();
  const int mg = data.algebra.dim();
  if (data.base_dim() != n)
    throw InputError("connection chart does not match the metric dimension");
  if (sys.coordinate_names() != data.coordinate_names())
    throw InputError("metric and connection use different coordinate names");

  AlgebroidSpec spec = build_atiyah(data);

  std::string lsum, hsum;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const std::string yi = "y" + std::to_string(i + 1);
      const std::string yj = "y" + std::to_string(j + 1);
      lsum += (lsum.empty() ? "" : " + ") + ("(" + sys.g_text(i, j) + ")*" + yi +
                                             "*" + yj);
      const std::string pi = "p" + std::to_string(i + 1);
      const std::string pj = "p" + std::to_string(j + 1);
      hsum += (hsum.empty() ? "" : " + ") +
              ("(" + sys.g_inverse_text(i, j) + ")*" + pi + "*" + pj);
    }
  for (int A = 0; A < mg; ++A)
    for (int B = 0; B < mg; ++B) {
      if (sys.kappa()(A, B) != 0.0) {
        lsum += " + " + fmt(sys.kappa()(A, B)) + "*y" + std::to_string(n + A + 1) +
                "*y" + std::to_string(n + B + 1);
      }
      if (sys.kappa_inverse()(A, B) != 0.0) {
        hsum += " + " + fmt(sys.kappa_inverse()(A, B)) + "*p" +
                std::to_string(n + A + 1) + "*p" + std::to_string(n + B + 1);
      }
    }
  const std::string ltext = "0.5*(" + lsum + ") - gamma*z";
  const std::string htext = "0.5*(" + hsum + ") + gamma*z";
  const std::map<std::string, double> params{{"gamma", sys.gamma()}};

  TangentFunction l(spec, ScalarField::parse(ltext, tangent_variables(spec), params));
  CotangentFunction h(spec,
                      ScalarField::parse(htext, cotangent_variables(spec), params));
  return WongModel{std::move(spec), std::move(l), std::move(h), sys, data};
}

/// Contact Hamiltonian equations of the Wong Hamiltonian, hand-specialized
/// (independent of the generic contact-field assembly):
///   qdot^i    = g^ij p_j
///   pdot_i    = -(1/2) d_i g^jk p_j p_k + B^A_ij pbar_A g^jk p_k
///               - c^C_BD A_i^D pbar_C kappa^BE pbar_E - gamma p_i
///   pbardot_A = c^C_AB A_i^B pbar_C g^ij p_j - c^C_AB kappa^BD pbar_C pbar_D
///               - gamma pbar_A
///   zdot      = (g^ij p_i p_j + kappa^AB pbar_A pbar_B)/2 - gamma z.
inline PhaseVelocity wong_rhs_specialized(const WongSystem& sys,
                                          const AtiyahData& data,
                                          const ContactCoState& x) {
  const int n = sys.base_dim();
  const int mg = data.algebra.dim();
  if (x.q.size() != n || x.p.size() != n + mg)
    throw InputError("state does not match the Wong system dimensions");
  const Vec p = x.p.head(n);
  const Vec pbar = x.p.tail(mg);
  const double gamma = sys.gamma();
  const auto& alg = data.algebra;

  const Mat ginv = sys.metric_inverse(x.q);
  const auto dg = sys.metric_derivatives(x.q);
  const Mat& kinv = sys.kappa_inverse();
  const Curvature curv(alg, data.connection);
  const auto B = curv(x.q);
  Mat A(n, mg);
  for (int i = 0; i < n; ++i)
    for (int Bdx = 0; Bdx < mg; ++Bdx) A(i, Bdx) = data.connection.at(i, Bdx)(x.q);

  const Vec gp = ginv * p;        // g^jk p_k
  const Vec kpbar = kinv * pbar;  // kappa^BE pbar_E

  PhaseVelocity v;
  v.dq = gp;
  v.dp = Vec::Zero(n + mg);

  for (int i = 0; i < n; ++i) {
    // d_i g^jk = -(g^-1 d_i g g^-1)^jk
    const Mat dginv_i = -(ginv * dg[static_cast<std::size_t>(i)] * ginv);
    double acc = -0.5 * p.dot(dginv_i * p);
    for (int A_ = 0; A_ < mg; ++A_)
      for (int j = 0; j < n; ++j)
        acc += B[static_cast<std::size_t>(A_)](i, j) * pbar[A_] * gp[j];
    for (int C = 0; C < mg; ++C)
      for (int Bdx = 0; Bdx < mg; ++Bdx)
        for (int D = 0; D < mg; ++D) {
          const double c = alg.c(C, Bdx, D);
          if (c != 0.0) acc -= c * A(i, D) * pbar[C] * kpbar[Bdx];
        }
    acc -= gamma * p[i];
    v.dp[i] = acc;
  }

  for (int A_ = 0; A_ < mg; ++A_) {
    double acc = 0.0;
    for (int C = 0; C < mg; ++C)
      for (int Bdx = 0; Bdx < mg; ++Bdx) {
        const double c = alg.c(C, A_, Bdx);
        if (c == 0.0) continue;
        for (int i = 0; i < n; ++i) acc += c * A(i, Bdx) * pbar[C] * gp[i];
        acc -= c * pbar[C] * kpbar[Bdx];
      }
    acc -= gamma * pbar[A_];
    v.dp[n + A_] = acc;
  }

  v.dz = 0.5 * (p.dot(gp) + pbar.dot(kpbar)) - gamma * x.z;
  return v;
}

/// Lagrange-Poincare-Herglotz equations of the Wong Lagrangian,
/// hand-specialized (independent of the generic Herglotz assembly):
///   g_ij xddot^j = (1/2) d_i g_jk xdot^j xdot^k - d_l g_ij xdot^l xdot^j
///                  + B^A_ij xdot^j (kappa v)_A - c^C_BD A_i^D v^B (kappa v)_C
///                  - gamma (g xdot)_i
///   kappa_AB vdot^B = c^C_AB A_j^B xdot^j (kappa v)_C
///                     - c^C_AB v^B (kappa v)_C - gamma (kappa v)_A
///   qdot = xdot,  zdot = l.
inline ContactVelocity lagrange_poincare_herglotz_rhs(const WongSystem& sys,
                                                      const AtiyahData& data,
                                                      const ContactState& s) {
  const int n = sys.base_dim();
  const int mg = data.algebra.dim();
  if (s.q.size() != n || s.y.size() != n + mg)
    throw InputError("state does not match the Wong system dimensions");
  const Vec xdot = s.y.head(n);
  const Vec v = s.y.tail(mg);
  const double gamma = sys.gamma();
  const auto& alg = data.algebra;

  const Mat g = sys.metric(s.q);
  const auto dg = sys.metric_derivatives(s.q);
  const Mat& kappa = sys.kappa();
  const Curvature curv(alg, data.connection);
  const auto B = curv(s.q);
  Mat A(n, mg);
  for (int i = 0; i < n; ++i)
    for (int Bdx = 0; Bdx < mg; ++Bdx) A(i, Bdx) = data.connection.at(i, Bdx)(s.q);

  const Vec kv = kappa * v;   // algebra momenta
  const Vec gx = g * xdot;    // base momenta

  Vec rhs_base(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.5 * xdot.dot(dg[static_cast<std::size_t>(i)] * xdot);
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j)
        acc -= dg[static_cast<std::size_t>(l)](i, j) * xdot[l] * xdot[j];
    for (int A_ = 0; A_ < mg; ++A_)
      for (int j = 0; j < n; ++j)
        acc += B[static_cast<std::size_t>(A_)](i, j) * xdot[j] * kv[A_];
    for (int C = 0; C < mg; ++C)
      for (int Bdx = 0; Bdx < mg; ++Bdx)
        for (int D = 0; D < mg; ++D) {
          const double c = alg.c(C, Bdx, D);
          if (c != 0.0) acc -= c * A(i, D) * v[Bdx] * kv[C];
        }
    acc -= gamma * gx[i];
    rhs_base[i] = acc;
  }

  Vec rhs_alg(mg);
  for (int A_ = 0; A_ < mg; ++A_) {
    double acc = 0.0;
    for (int C = 0; C < mg; ++C)
      for (int Bdx = 0; Bdx < mg; ++Bdx) {
        const double c = alg.c(C, A_, Bdx);
        if (c == 0.0) continue;
        for (int j = 0; j < n; ++j) acc += c * A(j, Bdx) * xdot[j] * kv[C];
        acc -= c * v[Bdx] * kv[C];
      }
    acc -= gamma * kv[A_];
    rhs_alg[A_] = acc;
  }

  ContactVelocity out;
  out.dq = xdot;
  out.dy = Vec(n + mg);
  out.dy.head(n) = Eigen::PartialPivLU<Mat>(g).solve(rhs_base);
  out.dy.tail(mg) = Eigen::PartialPivLU<Mat>(kappa).solve(rhs_alg);
  out.dz = 0.5 * (v.dot(kv) + xdot.dot(gx)) - gamma * s.z;
  return out;
}

// ---------------------------------------------------------------------------
// Demo configurations.

/// Abelian Atiyah chart: base R^2, algebra R, connection A = (-x2, x1)
/// (uniform curvature B_12 = 2).
inline AtiyahData atiyah_abelian_demo() {
  return AtiyahData{LieAlgebraData::abelian(1),
                    Connection::from_texts({"x1", "x2"}, {{"0-x2"}, {"x1"}})};
}

/// Abelian Wong demo: identity metrics over atiyah_abelian_demo().
inline WongModel wong_abelian_demo(double gamma) {
  auto data = atiyah_abelian_demo();
  return build_wong(WongSystem::flat(data.algebra, 2, gamma, {"x1", "x2"}), data);
}

/// Nonabelian Wong demo: so(3) with identity metrics over base R^2 and the
/// one-parameter connection A_1 = alpha x2 xi_1, A_2 = alpha x1 xi_2; every
/// structure-term class of the equations is nonzero.
inline WongModel wong_so3_demo(double gamma, double alpha = 1.0) {
  const auto so3 = LieAlgebraData::so3();
  const std::map<std::string, double> params{{"alpha", alpha}};
  auto conn = Connection::from_texts(
      {"x1", "x2"}, {{"alpha*x2", "0", "0"}, {"0", "alpha*x1", "0"}}, params);
  AtiyahData data{so3, std::move(conn)};
  return build_wong(WongSystem::flat(so3, 2, gamma, {"x1", "x2"}), data);
}

}  // namespace herglotz

#endif  // HERGLOTZ_CATALOG_HPP
