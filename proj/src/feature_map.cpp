#include "ltts/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ltts {

namespace {
constexpr double kPatchSlack = 1e-12;
}

void PatchSpec::validate() const {
  if (x0.empty()) throw DomainError("patch center must have at least one coordinate");
  for (double v : x0) {
    if (!std::isfinite(v)) throw DomainError("patch center must be finite");
  }
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("patch radius must be > 0");
  if (p < 0) throw DomainError("degree must be >= 0");
  if (chi < 1) throw DomainError("rank cap must be >= 1");
}

double FactorVector::norm() const noexcept {
  double s = 0.0;
  for (double e : entries) s += e * e;
  return std::sqrt(s);
}

std::vector<double> normalize(std::span<const double> x, const PatchSpec& patch) {
  if (x.size() != patch.order()) throw ShapeError("point dimension does not match the patch");
  std::vector<double> xi(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double offset = (x[i] - patch.x0[i]) / patch.r;
    if (!(std::abs(offset) <= 1.0 + kPatchSlack)) throw OutOfPatchError(i, offset);
    xi[i] = std::clamp(offset, -1.0, 1.0);
  }
  return xi;
}

std::vector<double> denormalize(std::span<const double> xi, const PatchSpec& patch) {
  if (xi.size() != patch.order()) throw ShapeError("point dimension does not match the patch");
  std::vector<double> x(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) x[i] = patch.x0[i] + patch.r * xi[i];
  return x;
}

FactorVector factor_vector(double xi, int degree) {
  if (degree < 0) throw DomainError("degree must be >= 0");
  if (!(std::abs(xi) <= 1.0)) throw DomainError("normalized coordinate must lie in [-1, 1]");
  FactorVector v{std::vector<double>(static_cast<std::size_t>(degree) + 1)};
  fill_factor_vector(xi, v.entries);
  return v;
}

double phi_entry(std::span<const double> xi, const MultiIndex& alpha) {
  if (xi.size() != alpha.order()) throw ShapeError("point dimension does not match the multi-index");
  double prod = 1.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const auto v = factor_vector(xi[i], alpha[i]);
    prod *= v[static_cast<std::size_t>(alpha[i])];
  }
  return prod;
}

DenseTensor phi_dense(std::span<const double> xi, int degree, std::size_t cap) {
  DenseTensor phi = DenseTensor::box(xi.size(), degree, cap);
  std::vector<FactorVector> factors;
  factors.reserve(xi.size());
  for (double v : xi) factors.push_back(factor_vector(v, degree));
  auto data = phi.data();
  for (std::size_t off = 0; off < data.size(); ++off) {
    const MultiIndex alpha = phi.index_of(off);
    double prod = 1.0;
    for (std::size_t i = 0; i < xi.size(); ++i) prod *= factors[i][static_cast<std::size_t>(alpha[i])];
    data[off] = prod;
  }
  return phi;
}

double bessel_constant() {
  static const double k = [] {
    double sum = 0.0;
    double inv_fact = 1.0;
    for (int j = 0;; ++j) {
      if (j > 0) inv_fact /= j;
      const double term = inv_fact * inv_fact;
      if (term < 1e-18) break;
      sum += term;
    }
    return std::sqrt(sum);
  }();
  return k;
}

double feature_norm_bound(std::size_t order) {
  const double k = bessel_constant();
  double out = 1.0;
  for (std::size_t i = 0; i < order; ++i) out *= k;
  return out;
}

} // namespace ltts
