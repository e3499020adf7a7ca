#include "ltts/analytic_families.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ltts {

namespace {

constexpr std::array<std::pair<FamilyKind, std::string_view>, 7> kFamilyNames{{
    {FamilyKind::ExpSum, "ExpSum"},
    {FamilyKind::ProductCos, "ProductCos"},
    {FamilyKind::PolyMatched, "PolyMatched"},
    {FamilyKind::PolyHigher, "PolyHigher"},
    {FamilyKind::QuadraticForm, "QuadraticForm"},
    {FamilyKind::Trig, "Trig"},
    {FamilyKind::Gauss, "Gauss"},
}};

// a-th derivative of cos(c t) at t.
double cos_derivative(int a, double c, double t) {
  const double phase = c * t;
  double base = 0.0;
  switch (a % 4) {
    case 0: base = std::cos(phase); break;
    case 1: base = -std::sin(phase); break;
    case 2: base = -std::cos(phase); break;
    default: base = std::sin(phase); break;
  }
  return std::pow(c, a) * base;
}

double falling_factorial(int n, int k) {
  double out = 1.0;
  for (int j = 0; j < k; ++j) out *= n - j;
  return out;
}

std::vector<Monomial> quadratic_as_terms(const QuadraticParams& q) {
  const auto n = static_cast<std::size_t>(q.b.size());
  std::map<MultiIndex, double> acc;
  acc[MultiIndex(n)] += q.c;
  for (std::size_t i = 0; i < n; ++i) {
    acc[unit_index(n, i)] += q.b(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n; ++j) {
      MultiIndex e(n);
      e[i] += 1;
      e[j] += 1;
      acc[e] += q.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  std::vector<Monomial> terms;
  for (auto& [e, v] : acc) terms.push_back({e, v});
  return terms;
}

double polynomial_derivative(const std::vector<Monomial>& terms, std::span<const double> x, const MultiIndex& alpha) {
  double sum = 0.0;
  for (const auto& t : terms) {
    double v = t.coefficient;
    for (std::size_t i = 0; i < x.size() && v != 0.0; ++i) {
      const int b = t.exponent[i];
      const int a = alpha[i];
      if (b < a) {
        v = 0.0;
        break;
      }
      v *= falling_factorial(b, a) * std::pow(x[i], b - a);
    }
    sum += v;
  }
  return sum;
}

double polynomial_sup_bound(const std::vector<Monomial>& terms, std::span<const double> x0, double r,
                            const MultiIndex& alpha) {
  double sum = 0.0;
  for (const auto& t : terms) {
    double v = std::abs(t.coefficient);
    for (std::size_t i = 0; i < x0.size() && v != 0.0; ++i) {
      const int b = t.exponent[i];
      const int a = alpha[i];
      if (b < a) {
        v = 0.0;
        break;
      }
      v *= falling_factorial(b, a) * std::pow(std::abs(x0[i]) + r, b - a);
    }
    sum += v;
  }
  return sum;
}

// d^alpha exp(-x^T Q x / 2) through
// D(alpha) = -(Qx)_i D(alpha - e_i) - sum_j (alpha - e_i)_j Q_ij D(alpha - e_i - e_j),
// i the first coordinate with alpha_i > 0. At x = 0 only the pairing terms survive.
class GaussDerivatives {
public:
  GaussDerivatives(const Eigen::MatrixXd& q, std::span<const double> x) : q_(q) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd xv(n);
    for (Eigen::Index i = 0; i < n; ++i) xv(i) = x[static_cast<std::size_t>(i)];
    qx_ = q_ * xv;
    value_ = std::exp(-0.5 * xv.dot(qx_));
    at_origin_ = xv.isZero(0.0);
  }

  double operator()(const MultiIndex& alpha) {
    const int degree = alpha.total_degree();
    if (degree == 0) return value_;
    if (at_origin_ && degree % 2 == 1) return 0.0;
    if (auto it = memo_.find(alpha); it != memo_.end()) return it->second;

    std::size_t i = 0;
    while (alpha[i] == 0) ++i;
    MultiIndex beta = alpha;
    beta[i] -= 1;
    double out = 0.0;
    if (!at_origin_) out -= qx_(static_cast<Eigen::Index>(i)) * (*this)(beta);
    for (std::size_t j = 0; j < alpha.order(); ++j) {
      if (beta[j] == 0) continue;
      MultiIndex gamma = beta;
      gamma[j] -= 1;
      out -= beta[j] * q_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * (*this)(gamma);
    }
    memo_.emplace(alpha, out);
    return out;
  }

private:
  const Eigen::MatrixXd& q_;
  Eigen::VectorXd qx_;
  double value_ = 1.0;
  bool at_origin_ = false;
  std::map<MultiIndex, double> memo_;
};

void check_dim(const FamilyInstance& f, std::size_t n) {
  if (n != f.dim) throw ShapeError("point dimension does not match the family instance");
}

std::vector<double> normal_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

Eigen::MatrixXd normal_matrix(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  }
  return m;
}

} // namespace

std::string_view to_string(FamilyKind kind) noexcept {
  for (const auto& [k, name] : kFamilyNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<FamilyKind> parse_family(std::string_view name) noexcept {
  for (const auto& [k, n] : kFamilyNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

FamilyInstance make_exp_sum(std::vector<double> c) {
  if (c.empty()) throw ShapeError("dimension must be >= 1");
  const std::size_t n = c.size();
  return {FamilyKind::ExpSum, n, 0, SeparableParams{std::move(c)}};
}

FamilyInstance make_product_cos(std::vector<double> c) {
  if (c.empty()) throw ShapeError("dimension must be >= 1");
  const std::size_t n = c.size();
  return {FamilyKind::ProductCos, n, 0, SeparableParams{std::move(c)}};
}

FamilyInstance make_polynomial(FamilyKind kind, std::size_t dim, int degree, std::vector<Monomial> terms) {
  if (kind != FamilyKind::PolyMatched && kind != FamilyKind::PolyHigher) {
    throw DomainError("polynomial instances must be PolyMatched or PolyHigher");
  }
  if (dim == 0) throw ShapeError("dimension must be >= 1");
  for (const auto& t : terms) {
    if (t.exponent.order() != dim) throw ShapeError("monomial order does not match the dimension");
    if (t.exponent.total_degree() > degree) throw DomainError("monomial exceeds the declared degree");
  }
  return {kind, dim, 0, PolynomialParams{degree, std::move(terms)}};
}

FamilyInstance make_quadratic(Eigen::MatrixXd a, Eigen::VectorXd b, double c) {
  if (a.rows() != a.cols() || a.rows() != b.size() || b.size() == 0) {
    throw ShapeError("quadratic form needs a square A matching b");
  }
  const auto n = static_cast<std::size_t>(b.size());
  return {FamilyKind::QuadraticForm, n, 0, QuadraticParams{std::move(a), std::move(b), c}};
}

FamilyInstance make_trig(std::vector<double> weights, std::vector<std::vector<int>> frequencies) {
  if (weights.size() != frequencies.size() || weights.empty()) {
    throw ShapeError("trig sum needs one frequency row per weight");
  }
  const std::size_t n = frequencies.front().size();
  if (n == 0) throw ShapeError("dimension must be >= 1");
  for (const auto& row : frequencies) {
    if (row.size() != n) throw ShapeError("frequency rows must share one dimension");
  }
  return {FamilyKind::Trig, n, 0, TrigParams{std::move(weights), std::move(frequencies)}};
}

FamilyInstance make_gauss(Eigen::MatrixXd q) {
  if (q.rows() != q.cols() || q.rows() == 0) throw ShapeError("precision matrix must be square");
  if (!q.isApprox(q.transpose(), 1e-12)) throw DomainError("precision matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(q);
  if (llt.info() != Eigen::Success) throw DomainError("precision matrix must be positive definite");
  const auto n = static_cast<std::size_t>(q.rows());
  return {FamilyKind::Gauss, n, 0, GaussParams{std::move(q)}};
}

FamilyInstance ones_instance(FamilyKind kind, std::size_t dim) {
  if (kind == FamilyKind::ExpSum) return make_exp_sum(std::vector<double>(dim, 1.0));
  if (kind == FamilyKind::ProductCos) return make_product_cos(std::vector<double>(dim, 1.0));
  throw DomainError("all-ones instances exist only for the separable families");
}

FamilyInstance draw_instance(FamilyKind kind, std::size_t dim, int p, std::uint64_t seed) {
  if (dim == 0) throw ShapeError("dimension must be >= 1");
  if (p < 0) throw DomainError("degree must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FamilyInstance f;
  switch (kind) {
    case FamilyKind::ExpSum: f = make_exp_sum(normal_vector(dim, rng)); break;
    case FamilyKind::ProductCos: f = make_product_cos(normal_vector(dim, rng)); break;
    case FamilyKind::PolyMatched:
    case FamilyKind::PolyHigher: {
      const int degree = kind == FamilyKind::PolyMatched ? p : p + 2;
      std::vector<Monomial> terms;
      for (const auto& e : simplex_indices(dim, degree)) terms.push_back({e, normal(rng)});
      f = make_polynomial(kind, dim, degree, std::move(terms));
      break;
    }
    case FamilyKind::QuadraticForm: {
      Eigen::MatrixXd a = normal_matrix(dim, rng);
      Eigen::VectorXd b(static_cast<Eigen::Index>(dim));
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = normal(rng);
      f = make_quadratic(std::move(a), std::move(b), normal(rng));
      break;
    }
    case FamilyKind::Trig: {
      std::vector<std::vector<int>> candidates;
      for (const auto& m : simplex_indices(dim, kTrigMaxFrequency)) {
        if (!m.is_zero()) candidates.push_back(m.values());
      }
      std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
      std::vector<double> weights;
      std::vector<std::vector<int>> freqs;
      for (std::size_t k = 0; k < kTrigTerms; ++k) {
        freqs.push_back(candidates[pick(rng)]);
        weights.push_back(normal(rng));
      }
      f = make_trig(std::move(weights), std::move(freqs));
      break;
    }
    case FamilyKind::Gauss: {
      const Eigen::MatrixXd m = normal_matrix(dim, rng);
      Eigen::MatrixXd q = m.transpose() * m + 0.5 * Eigen::MatrixXd::Identity(m.rows(), m.cols());
      q = 0.5 * (q + q.transpose());
      f = make_gauss(std::move(q));
      break;
    }
  }
  f.seed = seed;
  return f;
}

double evaluate(const FamilyInstance& f, std::span<const double> x) {
  check_dim(f, x.size());
  switch (f.kind) {
    case FamilyKind::ExpSum: {
      const auto& c = std::get<SeparableParams>(f.params).c;
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += c[i] * x[i];
      return std::exp(s);
    }
    case FamilyKind::ProductCos: {
      const auto& c = std::get<SeparableParams>(f.params).c;
      double prod = 1.0;
      for (std::size_t i = 0; i < x.size(); ++i) prod *= std::cos(c[i] * x[i]);
      return prod;
    }
    default: return derivative_at(f, x, MultiIndex(f.dim));
  }
}

double derivative_at(const FamilyInstance& f, std::span<const double> x, const MultiIndex& alpha) {
  check_dim(f, x.size());
  if (alpha.order() != f.dim) throw ShapeError("multi-index order does not match the family instance");
  const std::size_t n = f.dim;
  switch (f.kind) {
    case FamilyKind::ExpSum: {
      const auto& c = std::get<SeparableParams>(f.params).c;
      double s = 0.0;
      double prefactor = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        s += c[i] * x[i];
        prefactor *= std::pow(c[i], alpha[i]);
      }
      return prefactor * std::exp(s);
    }
    case FamilyKind::ProductCos: {
      const auto& c = std::get<SeparableParams>(f.params).c;
      double prod = 1.0;
      for (std::size_t i = 0; i < n; ++i) prod *= cos_derivative(alpha[i], c[i], x[i]);
      return prod;
    }
    case FamilyKind::PolyMatched:
    case FamilyKind::PolyHigher:
      return polynomial_derivative(std::get<PolynomialParams>(f.params).terms, x, alpha);
    case FamilyKind::QuadraticForm: {
      const auto& q = std::get<QuadraticParams>(f.params);
      const int degree = alpha.total_degree();
      if (degree > 2) return 0.0;
      Eigen::VectorXd xv(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) xv(static_cast<Eigen::Index>(i)) = x[i];
      if (degree == 0) return xv.dot(q.a * xv) + q.b.dot(xv) + q.c;
      const Eigen::MatrixXd sym = q.a + q.a.transpose();
      std::vector<Eigen::Index> axes;
      for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < alpha[i]; ++k) axes.push_back(static_cast<Eigen::Index>(i));
      }
      if (degree == 1) return sym.row(axes[0]).dot(xv) + q.b(axes[0]);
      return sym(axes[0], axes[1]);
    }
    case FamilyKind::Trig: {
      const auto& t = std::get<TrigParams>(f.params);
      double sum = 0.0;
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        double prod = t.weights[k];
        for (std::size_t i = 0; i < n && prod != 0.0; ++i) {
          prod *= cos_derivative(alpha[i], t.frequencies[k][i], x[i]);
        }
        sum += prod;
      }
      return sum;
    }
    case FamilyKind::Gauss: {
      GaussDerivatives d(std::get<GaussParams>(f.params).q, x);
      return d(alpha);
    }
  }
  return 0.0;
}

double exact_derivative(const FamilyInstance& f, const MultiIndex& alpha) {
  const std::vector<double> origin(f.dim, 0.0);
  return derivative_at(f, origin, alpha);
}

DerivativeMap exact_derivatives(const FamilyInstance& f, std::span<const double> x0, int p) {
  check_dim(f, x0.size());
  DerivativeMap out;
  if (f.kind == FamilyKind::Gauss) {
    GaussDerivatives d(std::get<GaussParams>(f.params).q, x0);
    for (const auto& a : simplex_indices(f.dim, p)) out[a] = d(a);
    return out;
  }
  for (const auto& a : simplex_indices(f.dim, p)) out[a] = derivative_at(f, x0, a);
  return out;
}

DenseTensor box_tensor(const FamilyInstance& f, int p, std::size_t cap) {
  DenseTensor out = DenseTensor::box(f.dim, p, cap);
  auto data = out.data();
  const std::vector<double> origin(f.dim, 0.0);
  if (f.kind == FamilyKind::Gauss) {
    GaussDerivatives d(std::get<GaussParams>(f.params).q, origin);
    for (std::size_t off = 0; off < data.size(); ++off) data[off] = d(out.index_of(off));
    return out;
  }
  for (std::size_t off = 0; off < data.size(); ++off) data[off] = derivative_at(f, origin, out.index_of(off));
  return out;
}

DenseTensor simplex_tensor(const FamilyInstance& f, int p, std::size_t cap) {
  DenseTensor out = box_tensor(f, p, cap);
  auto data = out.data();
  for (std::size_t off = 0; off < data.size(); ++off) {
    if (out.index_of(off).total_degree() > p) data[off] = 0.0;
  }
  return out;
}

double derivative_sup_bound(const FamilyInstance& f, std::span<const double> x0, double r, const MultiIndex& alpha) {
  check_dim(f, x0.size());
  if (!(r >= 0.0)) throw DomainError("radius must be >= 0");
  const std::size_t n = f.dim;
  switch (f.kind) {
    case FamilyKind::ExpSum: {
      const auto& c = std::get<SeparableParams>(f.params).c;
      double exponent = 0.0;
      double prefactor = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        exponent += c[i] * x0[i] + r * std::abs(c[i]);
        prefactor *= std::pow(std::abs(c[i]), alpha[i]);
      }
      return prefactor * std::exp(exponent);
    }
    case FamilyKind::ProductCos: {
      const auto& c = std::get<SeparableParams>(f.params).c;
      double prefactor = 1.0;
      for (std::size_t i = 0; i < n; ++i) prefactor *= std::pow(std::abs(c[i]), alpha[i]);
      return prefactor;
    }
    case FamilyKind::PolyMatched:
    case FamilyKind::PolyHigher:
      return polynomial_sup_bound(std::get<PolynomialParams>(f.params).terms, x0, r, alpha);
    case FamilyKind::QuadraticForm:
      return polynomial_sup_bound(quadratic_as_terms(std::get<QuadraticParams>(f.params)), x0, r, alpha);
    case FamilyKind::Trig: {
      const auto& t = std::get<TrigParams>(f.params);
      double sum = 0.0;
      for (std::size_t k = 0; k < t.weights.size(); ++k) {
        double prod = std::abs(t.weights[k]);
        for (std::size_t i = 0; i < n; ++i) prod *= std::pow(std::abs(t.frequencies[k][i]), alpha[i]);
        sum += prod;
      }
      return sum;
    }
    case FamilyKind::Gauss: {
      // Cauchy estimate on the polydisc of radius rho around any real point:
      // |f(z)| <= exp(lambda_max N rho^2 / 2), so |d^alpha f| <= alpha! exp(a rho^2) / rho^k
      // with a = lambda_max N / 2, minimized at rho^2 = k / (2a).
      const int k = alpha.total_degree();
      if (k == 0) return 1.0;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(std::get<GaussParams>(f.params).q, Eigen::EigenvaluesOnly);
      const double a = 0.5 * eig.eigenvalues().maxCoeff() * static_cast<double>(n);
      const double rho2 = k / (2.0 * a);
      return alpha.factorial() * std::exp(a * rho2) / std::pow(rho2, 0.5 * k);
    }
  }
  return 0.0;
}

SmoothnessBudget exact_budget(const FamilyInstance& f, const PatchSpec& patch) {
  patch.validate();
  check_dim(f, patch.order());
  SmoothnessBudget budget{0.0, 0.0, Provenance::Exact};
  for (const auto& a : simplex_indices(f.dim, patch.p + 1)) {
    const double bound = derivative_sup_bound(f, patch.x0, patch.r, a);
    if (a.total_degree() <= patch.p) budget.c_le_p = std::max(budget.c_le_p, bound);
    else budget.c_p1 = std::max(budget.c_p1, bound);
  }
  return budget;
}

BlackBox as_black_box(const FamilyInstance& f) {
  return BlackBox(f.dim, [f](std::span<const double> x) { return evaluate(f, x); });
}

} // namespace ltts
