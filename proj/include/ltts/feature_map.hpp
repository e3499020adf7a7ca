#pragma once

#include <span>
#include <vector>

#include "ltts/tensor_core.hpp"

namespace ltts {

/// A local patch B(x0, r) (l-infinity ball) with the Taylor degree and TT rank cap used on it.
struct PatchSpec {
  std::vector<double> x0;
  double r = 1.0;
  int p = 2;
  int chi = 1;

  std::size_t order() const noexcept { return x0.size(); }
  /// Throws DomainError unless r > 0, p >= 0, chi >= 1 and x0 is nonempty and finite.
  void validate() const;
};

/// Per-coordinate factorial features (xi^k / k!)_{k=0..p}.
struct FactorVector {
  std::vector<double> entries;

  double operator[](std::size_t k) const { return entries[k]; }
  std::size_t size() const noexcept { return entries.size(); }
  double norm() const noexcept;
};

/// xi = (x - x0) / r. Throws OutOfPatchError when |x_i - x0_i| > r (1e-12 slack).
std::vector<double> normalize(std::span<const double> x, const PatchSpec& patch);

/// Inverse of normalize.
std::vector<double> denormalize(std::span<const double> xi, const PatchSpec& patch);

/// Throws DomainError when |xi| > 1.
FactorVector factor_vector(double xi, int degree);

/// Unchecked fill of out[0..p] with xi^k/k!; the hot path used by TT evaluation.
inline void fill_factor_vector(double xi, std::span<double> out) noexcept {
  double v = 1.0;
  out[0] = 1.0;
  for (std::size_t k = 1; k < out.size(); ++k) {
    v *= xi / static_cast<double>(k);
    out[k] = v;
  }
}

/// Phi(xi)[alpha] = prod_i xi_i^{alpha_i} / alpha_i!.
double phi_entry(std::span<const double> xi, const MultiIndex& alpha);

/// Dense Phi(xi) on {0..p}^N. Only for small-N oracles.
DenseTensor phi_dense(std::span<const double> xi, int degree, std::size_t cap = kDefaultDenseCap);

/// K = sqrt(I_0(2)) = sqrt(sum_k 1/(k!)^2), summed until the term drops below 1e-18.
double bessel_constant();

/// K^N.
double feature_norm_bound(std::size_t order);

} // namespace ltts
