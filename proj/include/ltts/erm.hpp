#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltts/derivative_engine.hpp"
#include "ltts/feature_map.hpp"
#include "ltts/tt_format.hpp"

namespace ltts {

/// Label noise model. Uniform draws eps ~ U[-sigma, sigma]; Shots replaces g(x) by a
/// finite-shot estimate of an expectation value in [-1, 1].
struct NoiseModel {
  enum class Kind { None, Uniform, Shots };
  Kind kind = Kind::None;
  double sigma = 0.0;
  std::uint64_t shots = 0;

  static NoiseModel none() { return {}; }
  static NoiseModel uniform(double sigma) { return {Kind::Uniform, sigma, 0}; }
  static NoiseModel shot_noise(std::uint64_t shots) { return {Kind::Shots, 0.0, shots}; }

  std::string describe() const;
};

/// i.i.d. samples (X_i, Y_i) on a patch. Points are stored row-major, `dim` per row.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<double> xi;
  std::vector<double> y;
  std::uint64_t seed = 0;
  NoiseModel noise;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> point(std::size_t i) const { return {x.data() + i * dim, dim}; }
  std::span<const double> normalized(std::size_t i) const { return {xi.data() + i * dim, dim}; }
};

/// n points uniform on the l-infinity ball B(x0, r).
std::vector<double> sample_uniform_patch(const PatchSpec& patch, std::size_t n, std::uint64_t seed);

/// X_i uniform on the patch, Y_i = g(X_i) + eps_i.
Dataset sample_patch(const BlackBox& g, const PatchSpec& patch, std::size_t n, const NoiseModel& noise,
                     std::uint64_t seed);

struct ERMConfig {
  std::size_t chi = 1;
  int p = 2;
  std::optional<double> lambda_budget;
  std::size_t max_sweeps = 50;
  double rel_tol = 1e-9;
  double ridge = 1e-10;
  /// Warm start; padded with fresh rank channels up to the cap without changing its values.
  std::optional<TTTensor> init;
  std::uint64_t seed = 0;
  /// Scale the fitted tensor back onto the norm ball when the budget is exceeded.
  bool rescale_to_budget = false;

  void validate() const;
};

struct FitReport {
  std::vector<double> sweep_risks;       // after each full sweep; element 0 is the initial risk
  std::vector<double> half_sweep_risks;  // after every core update
  double final_risk = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
  double norm = 0.0;
  bool budget_violation = false;
  bool rescaled = false;
  std::size_t ridge_retries = 0;
};

struct FitResult {
  TTTensor tt;
  FitReport report;
};

/// Alternating least squares over TT cores minimizing the empirical squared loss.
/// One sweep is a right half-sweep (cores 0..N-2) followed by a left half-sweep (N-1..1);
/// the orthogonality center moves with the active core.
FitResult als_fit(const Dataset& data, const ERMConfig& cfg);

/// Mean squared residual on the dataset labels.
double empirical_risk(const TTTensor& tt, const Dataset& data);

/// RMS of tt_eval(xi_i) - g_i for precomputed clean values.
double clean_rmse(const TTTensor& tt, std::span<const double> xi, std::span<const double> g_values);

/// RMS of tt_eval - g over the given input points of the patch.
double clean_rmse(const TTTensor& tt, const BlackBox& g, const PatchSpec& patch, std::span<const double> points);

/// Adds rank channels up to `ranks` (entry-wise max) so that the represented tensor is unchanged.
TTTensor pad_ranks(const TTTensor& tt, std::span<const std::size_t> ranks, std::uint64_t seed);

} // namespace ltts
