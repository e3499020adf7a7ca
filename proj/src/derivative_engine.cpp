#include "ltts/derivative_engine.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <string>
#include <thread>

namespace ltts {

BlackBox::BlackBox(std::size_t dim, Function fn, std::optional<double> g_max, bool reentrant)
    : dim_(dim), fn_(std::move(fn)), g_max_(g_max), reentrant_(reentrant),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (dim_ == 0) throw ShapeError("black box dimension must be >= 1");
  if (!fn_) throw DomainError("black box needs a callable");
  if (g_max_ && !(*g_max_ >= 0.0)) throw DomainError("G_max must be >= 0");
}

double BlackBox::operator()(std::span<const double> x) const {
  if (x.size() != dim_) throw ShapeError("black box called with the wrong dimension");
  counter_->fetch_add(1, std::memory_order_relaxed);
  const double v = fn_(x);
  if (!std::isfinite(v)) throw NumericalError("black box returned a non-finite value");
  if (g_max_ && std::abs(v) > *g_max_ * (1.0 + 1e-12) + 1e-300) {
    throw NumericalError("black box output " + std::to_string(v) + " exceeds declared bound " +
                         std::to_string(*g_max_));
  }
  return v;
}

BlackBox with_uniform_noise(const BlackBox& g, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw DomainError("noise level must be >= 0");
  struct State {
    std::mutex mu;
    std::mt19937_64 rng;
  };
  auto state = std::make_shared<State>();
  state->rng.seed(seed);
  auto fn = [g, sigma, state](std::span<const double> x) {
    const double clean = g(x);
    std::lock_guard lock(state->mu);
    std::uniform_real_distribution<double> u(-sigma, sigma);
    return clean + u(state->rng);
  };
  std::optional<double> bound;
  if (g.g_max()) bound = *g.g_max() + sigma;
  return BlackBox(g.dim(), std::move(fn), bound, false);
}

const char* to_string(Provenance p) noexcept {
  return p == Provenance::Exact ? "exact" : "estimated";
}

void SmoothnessBudget::validate() const {
  if (!(c_le_p >= 0.0) || !std::isfinite(c_le_p) || !(c_p1 >= 0.0) || !std::isfinite(c_p1)) {
    throw DomainError("smoothness budget constants must be finite and >= 0");
  }
}

double SmoothnessBudget::xi_bound(double r, int p) const {
  return std::pow(r, p + 1) * c_p1;
}

CoefficientTensor::CoefficientTensor(std::vector<double> x0, double r, int p, std::vector<double> simplex_values)
    : x0_(std::move(x0)), r_(r), p_(p), values_(std::move(simplex_values)) {
  if (x0_.empty()) throw ShapeError("coefficient tensor order must be >= 1");
  support_ = simplex_indices(x0_.size(), p_);
  if (support_.size() != values_.size()) throw ShapeError("coefficient values do not cover the simplex");
  for (std::size_t i = 0; i < support_.size(); ++i) lookup_.emplace(support_[i], i);
}

double CoefficientTensor::entry(const MultiIndex& alpha) const {
  if (alpha.order() != order()) throw ShapeError("multi-index order does not match");
  const auto it = lookup_.find(alpha);
  return it == lookup_.end() ? 0.0 : values_[it->second];
}

double CoefficientTensor::frobenius_norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

DenseTensor CoefficientTensor::densify(std::size_t cap) const {
  DenseTensor out = DenseTensor::box(order(), p_, cap);
  for (std::size_t i = 0; i < support_.size(); ++i) out[support_[i]] = values_[i];
  return out;
}

double default_fd_step(double r) noexcept { return 1e-2 * std::max(r, 1e-3); }

namespace {

// Evaluates g at every point, concurrently when allowed.
std::vector<double> evaluate_all(const BlackBox& g, const std::vector<std::vector<double>>& points,
                                 std::size_t threads) {
  std::vector<double> out(points.size());
  if (threads <= 1 || !g.reentrant() || points.size() < 2) {
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = g(points[i]);
    return out;
  }
  const std::size_t workers = std::min(threads, points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < points.size(); i = next++) {
        try {
          out[i] = g(points[i]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return out;
}

} // namespace

DerivativeMap fd_derivatives(const BlackBox& g, std::span<const double> x0, int p, double h, std::size_t threads) {
  if (p < 0 || p > 2) throw DomainError("central stencils are implemented for p in {0, 1, 2}");
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("finite-difference step must be > 0");
  const std::size_t n = x0.size();
  if (n != g.dim()) throw ShapeError("center dimension does not match the black box");

  std::vector<std::vector<double>> points;
  const std::vector<double> center(x0.begin(), x0.end());
  points.push_back(center);
  // Axis points: index 1 + 2i (plus), 2 + 2i (minus).
  if (p >= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (double s : {1.0, -1.0}) {
        auto pt = center;
        pt[i] += s * h;
        points.push_back(std::move(pt));
      }
    }
  }
  // Mixed points: ++, +-, -+, -- per pair i < j.
  const std::size_t mixed_begin = points.size();
  if (p >= 2) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        for (double si : {1.0, -1.0}) {
          for (double sj : {1.0, -1.0}) {
            auto pt = center;
            pt[i] += si * h;
            pt[j] += sj * h;
            points.push_back(std::move(pt));
          }
        }
      }
    }
  }

  const std::vector<double> values = evaluate_all(g, points, threads);

  DerivativeMap out;
  const double f0 = values[0];
  out[MultiIndex(n)] = f0;
  if (p >= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const double fp = values[1 + 2 * i];
      const double fm = values[2 + 2 * i];
      out[unit_index(n, i)] = (fp - fm) / (2.0 * h);
      if (p >= 2) {
        MultiIndex a(n);
        a[i] = 2;
        out[a] = (fp - 2.0 * f0 + fm) / (h * h);
      }
    }
  }
  if (p >= 2) {
    std::size_t idx = mixed_begin;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double fpp = values[idx];
        const double fpm = values[idx + 1];
        const double fmp = values[idx + 2];
        const double fmm = values[idx + 3];
        idx += 4;
        MultiIndex a(n);
        a[i] = 1;
        a[j] = 1;
        out[a] = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      }
    }
  }
  return out;
}

CoefficientTensor embed(const DerivativeMap& derivs, const PatchSpec& patch) {
  patch.validate();
  const auto support = simplex_indices(patch.order(), patch.p);
  std::vector<double> values;
  values.reserve(support.size());
  for (const auto& alpha : support) {
    const auto it = derivs.find(alpha);
    if (it == derivs.end()) throw DomainError("derivative map is missing a simplex index");
    values.push_back(std::pow(patch.r, alpha.total_degree()) * it->second);
  }
  return CoefficientTensor(patch.x0, patch.r, patch.p, std::move(values));
}

double taylor_eval(const CoefficientTensor& coeffs, std::span<const double> xi) {
  const std::size_t n = coeffs.order();
  if (xi.size() != n) throw ShapeError("point dimension does not match the coefficient tensor");
  const auto m = static_cast<std::size_t>(coeffs.degree()) + 1;
  std::vector<double> factors(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::abs(xi[i]) <= 1.0)) throw DomainError("normalized coordinate must lie in [-1, 1]");
    fill_factor_vector(xi[i], std::span<double>(factors.data() + i * m, m));
  }
  double sum = 0.0;
  const auto& support = coeffs.support();
  const auto& values = coeffs.values();
  for (std::size_t k = 0; k < support.size(); ++k) {
    double phi = 1.0;
    for (std::size_t i = 0; i < n; ++i) phi *= factors[i * m + static_cast<std::size_t>(support[k][i])];
    sum += values[k] * phi;
  }
  return sum;
}

double truncation_bound(const SmoothnessBudget& budget, double r, std::size_t order, int p) {
  budget.validate();
  double factorial = 1.0;
  for (int j = 2; j <= p + 1; ++j) factorial *= j;
  return budget.c_p1 * std::pow(r, p + 1) * std::pow(static_cast<double>(order), p + 1) / factorial;
}

double lambda_star(const SmoothnessBudget& budget, double r, std::size_t order, int p) {
  budget.validate();
  double s = 0.0;
  for (int m = 0; m <= p; ++m) {
    s += static_cast<double>(count_degree_exactly(order, m)) * std::pow(r, 2 * m);
  }
  return budget.c_le_p * std::sqrt(s);
}

DerivativeOracle fd_derivative_oracle(const BlackBox& g, double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be > 0");
  return [g, h](std::span<const double> x, const MultiIndex& alpha) {
    const std::size_t n = x.size();
    // Per-coordinate stencils: offsets (a/2 - j) h with weights (-1)^j C(a, j) / h^a.
    std::vector<std::size_t> axes;
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] > 0) axes.push_back(i);
    }
    std::vector<double> pt(x.begin(), x.end());
    double sum = 0.0;
    std::vector<int> j(axes.size(), 0);
    while (true) {
      double w = 1.0;
      for (std::size_t t = 0; t < axes.size(); ++t) {
        const int a = alpha[axes[t]];
        pt[axes[t]] = x[axes[t]] + (0.5 * a - j[t]) * h;
        w *= ((j[t] % 2) ? -1.0 : 1.0) * static_cast<double>(binomial(static_cast<std::uint64_t>(a),
                                                                      static_cast<std::uint64_t>(j[t])));
      }
      sum += w * g(pt);
      std::size_t t = 0;
      for (; t < axes.size(); ++t) {
        if (++j[t] <= alpha[axes[t]]) break;
        j[t] = 0;
      }
      if (t == axes.size()) break;
    }
    return sum / std::pow(h, alpha.total_degree());
  };
}

SmoothnessBudget estimate_budget(const DerivativeOracle& derivative, const PatchSpec& patch,
                                 std::size_t grid_density, double safety) {
  patch.validate();
  if (grid_density == 0) throw DomainError("grid density must be >= 1");
  if (!(safety > 0.0)) throw DomainError("safety factor must be > 0");
  const std::size_t n = patch.order();
  std::vector<double> axis(grid_density);
  for (std::size_t k = 0; k < grid_density; ++k) {
    axis[k] = grid_density == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(grid_density - 1);
  }
  std::vector<MultiIndex> low = simplex_indices(n, patch.p);
  std::vector<MultiIndex> high;
  for (const auto& a : simplex_indices(n, patch.p + 1)) {
    if (a.total_degree() == patch.p + 1) high.push_back(a);
  }

  double c_le_p = 0.0;
  double c_p1 = 0.0;
  std::vector<std::size_t> counter(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) x[i] = patch.x0[i] + patch.r * axis[counter[i]];
    for (const auto& a : low) c_le_p = std::max(c_le_p, std::abs(derivative(x, a)));
    for (const auto& a : high) c_p1 = std::max(c_p1, std::abs(derivative(x, a)));
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (++counter[i] < grid_density) break;
      counter[i] = 0;
    }
    if (i == n) break;
  }
  return {safety * c_le_p, safety * c_p1, Provenance::Estimated};
}

SmoothnessBudget estimate_budget(const BlackBox& g, const PatchSpec& patch, std::size_t grid_density, double safety,
                                 std::optional<double> h) {
  if (patch.p > 2) throw DomainError("finite-difference budget estimation supports p <= 2");
  return estimate_budget(fd_derivative_oracle(g, h.value_or(default_fd_step(patch.r))), patch, grid_density, safety);
}

} // namespace ltts
