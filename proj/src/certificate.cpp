#include "ltts/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ltts/feature_map.hpp"

namespace ltts {

Certificate deterministic_certificate(double trunc, double tt_err, std::size_t order) {
  if (!(trunc >= 0.0) || !(tt_err >= 0.0)) throw DomainError("certificate inputs must be >= 0");
  Certificate c;
  c.e_taylor = trunc;
  c.e_tt_raw = tt_err;
  c.k_n = feature_norm_bound(order);
  c.e_det = trunc + c.k_n * tt_err;
  return c;
}

Certificate build_certificate(const SmoothnessBudget& budget, double r, std::size_t order, int p, double tt_err,
                              double y_max) {
  Certificate c = deterministic_certificate(truncation_bound(budget, r, order, p), tt_err, order);
  c.lambda = lambda_star(budget, r, order, p);
  c.y_max = y_max;
  c.m_bound = m_bound(c.lambda, order, y_max);
  c.provenance = budget.provenance;
  return c;
}

double pdim_hypothesis(std::size_t order, std::size_t mode, std::size_t chi) {
  if (order < 1 || mode < 1 || chi < 1) throw DomainError("pseudo-dimension inputs must be >= 1");
  const double n = static_cast<double>(order);
  const double x = static_cast<double>(chi);
  return 2.0 * n * static_cast<double>(mode) * x * x * std::log(12.0 * n);
}

double pdim_loss(double d_hyp) {
  if (!(d_hyp >= 0.0)) throw DomainError("pseudo-dimension must be >= 0");
  return 4.0 * (2.0 * d_hyp + 1.0) * std::log2(6.0);
}

double m_bound(double lambda, std::size_t order, double y_max) {
  if (!(lambda >= 0.0) || !(y_max >= 0.0)) throw DomainError("loss-bound inputs must be >= 0");
  const double s = lambda * feature_norm_bound(order) + y_max;
  return s * s;
}

double uniform_deviation(double m, double d, double n, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("confidence delta must lie in (0, 1)");
  if (!(n >= 1.0)) throw DomainError("sample size must be >= 1");
  if (!(d > 0.0)) throw DomainError("pseudo-dimension must be > 0");
  if (!(m >= 0.0)) throw DomainError("loss bound must be >= 0");
  const double log_term = std::max(1.0, std::log(std::numbers::e * n / d));
  return m * std::sqrt(2.0 * d * log_term / n) + m * std::sqrt(std::log(1.0 / delta) / (2.0 * n));
}

double risk_bound(const Certificate& cert, double d_loss, double n, double delta) {
  return cert.e_det * cert.e_det + 2.0 * uniform_deviation(cert.m_bound, d_loss, n, delta);
}

std::uint64_t sample_complexity(double m, double d, double eta, double delta) {
  if (!(eta > 0.0)) throw DomainError("tolerance eta must be > 0");
  auto ok = [&](std::uint64_t n) { return 2.0 * uniform_deviation(m, d, static_cast<double>(n), delta) <= eta; };
  if (ok(1)) return 1;
  std::uint64_t lo = 1;  // violates
  std::uint64_t hi = 2;
  while (!ok(hi)) {
    lo = hi;
    if (hi > std::numeric_limits<std::uint64_t>::max() / 2) throw OverflowError("sample complexity exceeds 64 bits");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

StatBounds stat_bounds(const Certificate& cert, std::size_t order, std::size_t mode, std::size_t chi, double n,
                       double delta, double eta) {
  StatBounds s;
  s.d_hyp = pdim_hypothesis(order, mode, chi);
  s.d_loss = pdim_loss(s.d_hyp);
  s.delta_n = uniform_deviation(cert.m_bound, s.d_loss, n, delta);
  s.risk_bound = cert.e_det * cert.e_det + 2.0 * s.delta_n;
  s.n_required = sample_complexity(cert.m_bound, s.d_loss, eta, delta);
  return s;
}

} // namespace ltts
