#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ltts/derivative_engine.hpp"
#include "ltts/tensor_core.hpp"

namespace ltts {

enum class FamilyKind { ExpSum, ProductCos, PolyMatched, PolyHigher, QuadraticForm, Trig, Gauss };

std::string_view to_string(FamilyKind kind) noexcept;
/// Parses the names printed by to_string; nullopt on unknown names.
std::optional<FamilyKind> parse_family(std::string_view name) noexcept;

/// exp(sum c_i x_i) or prod cos(c_i x_i).
struct SeparableParams {
  std::vector<double> c;
};

struct Monomial {
  MultiIndex exponent;
  double coefficient = 0.0;
};

struct PolynomialParams {
  int degree = 0;
  std::vector<Monomial> terms;
};

/// x^T A x + b^T x + c.
struct QuadraticParams {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  double c = 0.0;
};

/// sum_k w_k prod_i cos(m_{k,i} x_i).
struct TrigParams {
  std::vector<double> weights;
  std::vector<std::vector<int>> frequencies;
};

/// exp(-x^T Q x / 2), Q symmetric positive definite.
struct GaussParams {
  Eigen::MatrixXd q;
};

using FamilyParams = std::variant<SeparableParams, PolynomialParams, QuadraticParams, TrigParams, GaussParams>;

/// One analytic test function with closed-form derivatives of every order.
struct FamilyInstance {
  FamilyKind kind = FamilyKind::ExpSum;
  std::size_t dim = 1;
  std::uint64_t seed = 0;  // 0 for deterministic instances
  FamilyParams params;
};

FamilyInstance make_exp_sum(std::vector<double> c);
FamilyInstance make_product_cos(std::vector<double> c);
/// `kind` must be PolyMatched or PolyHigher.
FamilyInstance make_polynomial(FamilyKind kind, std::size_t dim, int degree, std::vector<Monomial> terms);
FamilyInstance make_quadratic(Eigen::MatrixXd a, Eigen::VectorXd b, double c);
FamilyInstance make_trig(std::vector<double> weights, std::vector<std::vector<int>> frequencies);
/// Throws DomainError unless q is symmetric positive definite.
FamilyInstance make_gauss(Eigen::MatrixXd q);

/// Number of Trig terms and the l1 cap on their frequency rows.
inline constexpr std::size_t kTrigTerms = 8;
inline constexpr int kTrigMaxFrequency = 3;

/// Random instance for a rank-scan cell. Polynomial degrees are p (matched) and p + 2 (higher).
FamilyInstance draw_instance(FamilyKind kind, std::size_t dim, int p, std::uint64_t seed);
/// The deterministic all-ones instance (ExpSum / ProductCos only).
FamilyInstance ones_instance(FamilyKind kind, std::size_t dim);

double evaluate(const FamilyInstance& f, std::span<const double> x);

/// Exact d^alpha f(x).
double derivative_at(const FamilyInstance& f, std::span<const double> x, const MultiIndex& alpha);

/// Exact d^alpha f(0).
double exact_derivative(const FamilyInstance& f, const MultiIndex& alpha);

/// A_box[alpha] = d^alpha f(0) on {0..p}^N.
DenseTensor box_tensor(const FamilyInstance& f, int p, std::size_t cap = kDefaultDenseCap);
/// box_tensor with every |alpha| > p entry zeroed.
DenseTensor simplex_tensor(const FamilyInstance& f, int p, std::size_t cap = kDefaultDenseCap);

/// All derivatives up to total degree p at x0, in the form fd_derivatives returns.
DerivativeMap exact_derivatives(const FamilyInstance& f, std::span<const double> x0, int p);

/// Rigorous upper bound on sup_{x in B(x0, r)} |d^alpha f(x)|.
double derivative_sup_bound(const FamilyInstance& f, std::span<const double> x0, double r, const MultiIndex& alpha);

/// Smoothness budget assembled from derivative_sup_bound; provenance Exact.
SmoothnessBudget exact_budget(const FamilyInstance& f, const PatchSpec& patch);

BlackBox as_black_box(const FamilyInstance& f);

} // namespace ltts
