#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ltts/feature_map.hpp"
#include "ltts/tensor_core.hpp"

namespace ltts {

/// Query-counting wrapper around an expensive scalar function g: R^D -> R.
///
/// Copies share the counter. Every returned value is checked to be finite and, when a bound
/// G_max is declared, to satisfy |g(x)| <= G_max.
class BlackBox {
public:
  using Function = std::function<double(std::span<const double>)>;

  BlackBox(std::size_t dim, Function fn, std::optional<double> g_max = std::nullopt, bool reentrant = true);

  double operator()(std::span<const double> x) const;

  std::size_t dim() const noexcept { return dim_; }
  std::optional<double> g_max() const noexcept { return g_max_; }
  bool reentrant() const noexcept { return reentrant_; }

  std::uint64_t queries() const noexcept { return counter_->load(); }
  void reset_queries() noexcept { counter_->store(0); }

private:
  std::size_t dim_;
  Function fn_;
  std::optional<double> g_max_;
  bool reentrant_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

/// g + eps with eps ~ U[-sigma, sigma] drawn from a private seeded stream. Not reentrant.
BlackBox with_uniform_noise(const BlackBox& g, double sigma, std::uint64_t seed);

using DerivativeMap = std::map<MultiIndex, double>;

enum class Provenance { Exact, Estimated };

const char* to_string(Provenance p) noexcept;

/// Bounds on |d^alpha g| over the patch: C_le_p for |alpha| <= p, C_p1 for |alpha| = p + 1.
struct SmoothnessBudget {
  double c_le_p = 0.0;
  double c_p1 = 0.0;
  Provenance provenance = Provenance::Exact;

  void validate() const;
  /// Derivative bound in normalized coordinates, r^{p+1} C_p1.
  double xi_bound(double r, int p) const;
};

/// Taylor coefficients r^{|alpha|} d^alpha g(x0) on the total-degree simplex, zero elsewhere.
class CoefficientTensor {
public:
  CoefficientTensor() = default;
  CoefficientTensor(std::vector<double> x0, double r, int p, std::vector<double> simplex_values);

  std::size_t order() const noexcept { return x0_.size(); }
  int degree() const noexcept { return p_; }
  double radius() const noexcept { return r_; }
  const std::vector<double>& center() const noexcept { return x0_; }

  /// Simplex multi-indices in lexicographic order, aligned with values().
  const std::vector<MultiIndex>& support() const noexcept { return support_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Zero for any alpha outside the simplex.
  double entry(const MultiIndex& alpha) const;

  double frobenius_norm() const noexcept;
  /// Box-shaped zero-padded tensor (small N only).
  DenseTensor densify(std::size_t cap = kDefaultDenseCap) const;

private:
  std::vector<double> x0_;
  double r_ = 1.0;
  int p_ = 0;
  std::vector<MultiIndex> support_;
  std::vector<double> values_;
  std::map<MultiIndex, std::size_t> lookup_;
};

/// Default step 1e-2 * max(r, 1e-3).
double default_fd_step(double r) noexcept;

/// Central-difference derivatives d^alpha g(x0) for every |alpha| <= p, p in {0, 1, 2}.
/// Axis points are shared between first and pure second derivatives, so p = 2 costs
/// exactly 1 + 2N + 2N(N-1) queries. With `threads` > 1 and a reentrant black box the
/// queries run concurrently.
DerivativeMap fd_derivatives(const BlackBox& g, std::span<const double> x0, int p, double h,
                             std::size_t threads = 1);

/// A* from raw derivatives; throws DomainError when a simplex index is missing.
CoefficientTensor embed(const DerivativeMap& derivs, const PatchSpec& patch);

/// T_p(xi) = <A*, Phi(xi)> summed over the simplex support only.
double taylor_eval(const CoefficientTensor& coeffs, std::span<const double> xi);

/// C_p1 r^{p+1} N^{p+1} / (p+1)!.
double truncation_bound(const SmoothnessBudget& budget, double r, std::size_t order, int p);

/// C_le_p (sum_{m<=p} C(N+m-1, m) r^{2m})^{1/2}.
double lambda_star(const SmoothnessBudget& budget, double r, std::size_t order, int p);

/// (x, alpha) -> d^alpha g(x).
using DerivativeOracle = std::function<double(std::span<const double>, const MultiIndex&)>;

/// Tensor product of second-order central stencils of the requested orders, step h.
DerivativeOracle fd_derivative_oracle(const BlackBox& g, double h);

/// Grid maxima of |d^alpha g| on a uniform grid with `grid_density` points per axis
/// (endpoints included), times `safety`. Flagged Estimated.
SmoothnessBudget estimate_budget(const DerivativeOracle& derivative, const PatchSpec& patch,
                                 std::size_t grid_density, double safety = 1.5);

/// FD flavour: requires p <= 2.
SmoothnessBudget estimate_budget(const BlackBox& g, const PatchSpec& patch, std::size_t grid_density,
                                 double safety = 1.5, std::optional<double> h = std::nullopt);

} // namespace ltts
