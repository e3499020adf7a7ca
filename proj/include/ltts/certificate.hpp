#pragma once

#include <cstdint>

#include "ltts/derivative_engine.hpp"

namespace ltts {

/// Pointwise error certificate |g(x) - h_{A_TT}(x)| <= e_det on the patch, plus the
/// loss-range constants the statistical bounds need.
struct Certificate {
  double e_taylor = 0.0;   // C_p1 r^{p+1} N^{p+1} / (p+1)!
  double e_tt_raw = 0.0;   // ||A* - A_TT||_F
  double k_n = 1.0;        // K^N
  double e_det = 0.0;      // e_taylor + k_n * e_tt_raw
  double lambda = 0.0;     // Lambda*(r)
  double y_max = 0.0;
  double m_bound = 0.0;    // (lambda k_n + y_max)^2
  Provenance provenance = Provenance::Exact;
};

struct StatBounds {
  double d_hyp = 0.0;
  double d_loss = 0.0;
  double delta_n = 0.0;
  double risk_bound = 0.0;
  std::uint64_t n_required = 0;
};

/// e_det = trunc + K^N tt_err. Only the deterministic fields are filled.
Certificate deterministic_certificate(double trunc, double tt_err, std::size_t order);

/// Full certificate on a patch: Taylor term and Lambda*(r) from the budget, M(r) from y_max.
Certificate build_certificate(const SmoothnessBudget& budget, double r, std::size_t order, int p,
                              double tt_err, double y_max);

/// 2 N m chi^2 ln(12 N).
double pdim_hypothesis(std::size_t order, std::size_t mode, std::size_t chi);

/// 4 (2 d_hyp + 1) log2(6).
double pdim_loss(double d_hyp);

/// (lambda K^N + y_max)^2.
double m_bound(double lambda, std::size_t order, double y_max);

/// M sqrt(2 d L / n) + M sqrt(ln(1/delta) / (2n)) with L = max(1, ln(e n / d)).
double uniform_deviation(double m, double d, double n, double delta);

/// e_det^2 + 2 uniform_deviation(M, d_loss, n, delta), M taken from the certificate.
double risk_bound(const Certificate& cert, double d_loss, double n, double delta);

/// Smallest n with 2 uniform_deviation(M, d, n, delta) <= eta (doubling, then bisection).
std::uint64_t sample_complexity(double m, double d, double eta, double delta);

StatBounds stat_bounds(const Certificate& cert, std::size_t order, std::size_t mode, std::size_t chi,
                       double n, double delta, double eta);

} // namespace ltts
