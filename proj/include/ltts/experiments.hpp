#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ltts/analytic_families.hpp"
#include "ltts/derivative_engine.hpp"
#include "ltts/erm.hpp"
#include "ltts/quantum_oracle.hpp"
#include "ltts/tensor_core.hpp"

namespace ltts {

/// Smallest chi in 1..chi_max whose TT-SVD meets ||A - A_TT||_F <= tol_abs.
std::optional<std::size_t> min_rank_to_tolerance(const DenseTensor& a, double tol_abs, std::size_t chi_max);

enum class Criterion { CommonScale, SelfRelative };
std::string_view to_string(Criterion c) noexcept;

/// Aggregation bucket of a family: ExpSum and ProductCos are "Separable", Trig and Gauss share "Trig+Gauss".
std::string_view bucket_of(FamilyKind kind) noexcept;

struct ScanCase {
  FamilyKind kind;
  std::size_t n;
  int p;
  /// 0 is the all-ones instance for separable families; random draws count from 1.
  std::size_t instance;
  bool all_ones = false;
  std::uint64_t seed = 0;
};

struct InventoryCounts {
  std::size_t separable_random = 5;  // per separable family, plus one all-ones instance
  std::size_t poly = 10;             // per polynomial family
  std::size_t quadratic = 4;
  std::size_t trig = 4;
  std::size_t gauss = 4;
};

struct RankScanConfig {
  std::vector<FamilyKind> families{FamilyKind::ExpSum, FamilyKind::ProductCos, FamilyKind::PolyMatched,
                                   FamilyKind::PolyHigher, FamilyKind::QuadraticForm, FamilyKind::Trig,
                                   FamilyKind::Gauss};
  std::vector<std::pair<std::size_t, int>> configs{{4, 3}, {4, 4}, {6, 2}, {6, 3}};
  std::vector<double> epsilons{1e-2, 1e-3};
  std::vector<Criterion> criteria{Criterion::CommonScale, Criterion::SelfRelative};
  std::size_t chi_max = 25;
  InventoryCounts counts;
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;

  void validate() const;
};

struct RankScanRecord {
  FamilyKind family;
  std::size_t n;
  int p;
  std::size_t instance;
  double epsilon;
  Criterion criterion;
  std::optional<std::size_t> chi_box;
  std::optional<std::size_t> chi_delta;

  std::optional<double> rho() const;
};

/// Instances in a fixed order: per (N, p), families in config order, instances by index.
std::vector<ScanCase> scan_inventory(const RankScanConfig& cfg);

std::vector<RankScanRecord> rank_scan(const RankScanConfig& cfg);

struct RankSummaryRow {
  std::string bucket;
  double epsilon;
  Criterion criterion;
  std::size_t n = 0;
  std::size_t unreached = 0;
  double median_rho = 0.0;
  double q25_rho = 0.0;
  double q75_rho = 0.0;
  double median_chi_box = 0.0;
  double median_chi_delta = 0.0;
};

/// Linear-interpolation percentile (type 7), q in [0, 1].
double percentile(std::vector<double> values, double q);

/// One row per (bucket, epsilon, criterion) in first-seen order.
std::vector<RankSummaryRow> aggregate(const std::vector<RankScanRecord>& records);

void write_rank_scan_csv(std::ostream& out, const std::vector<RankScanRecord>& records);

/// Locally smooth black box with its smoothness budget and label bound.
struct ValidationOracle {
  std::string name;
  BlackBox g;
  std::function<SmoothnessBudget(const PatchSpec&)> budget;
  /// sup |g| on a patch.
  std::function<double(const PatchSpec&)> g_bound;
  /// Input domain used to place default centers.
  double lower = 0.0;
  double upper = 0.0;
};

/// The frozen QCNN on [0, pi]^D with the exact unit budget.
ValidationOracle qcnn_oracle(const QcnnModel& model, std::size_t input_dim);

/// An analytic family on [-1, 1]^N with exact per-patch budgets.
ValidationOracle family_oracle(const FamilyInstance& f);

/// origin, random interior point, near-lower, near-upper, midpoint of the oracle domain.
std::vector<std::vector<double>> default_centers(const ValidationOracle& oracle, std::uint64_t seed);

struct ValidationConfig {
  std::vector<std::vector<double>> centers;  // empty: default_centers
  std::vector<double> radii{0.05, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::size_t> chis{1, 2, 3, 4, 5};
  int p = 2;
  std::size_t n_train = 600;
  std::size_t n_test = 2000;
  NoiseModel noise;
  std::optional<double> fd_step;  // default_fd_step(r) when unset
  std::size_t max_sweeps = 50;
  double rel_tol = 1e-9;
  /// Wall-clock speedup measurement. Off keeps outputs byte-reproducible.
  bool timing = false;
  std::size_t timing_evals = 10000;
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;

  void validate() const;
};

struct ValidationRecord {
  std::size_t center = 0;
  double r = 0.0;
  std::size_t chi = 0;
  double rmse_trunc = 0.0;
  double rmse_tt = 0.0;
  double rmse_total = 0.0;
  double coeff_compression = 0.0;
  double tt_over_trunc = 0.0;
  double e_det = 0.0;
  double cert_rmse = 0.0;
  double erm_rmse = 0.0;
  double te_ratio = 0.0;
  std::optional<double> speedup;
  // Not part of the CSV.
  double lambda_star = 0.0;
  double erm_norm = 0.0;
  bool erm_budget_violation = false;
  std::size_t erm_sweeps = 0;
  std::size_t fd_queries = 0;
};

struct ValidationResult {
  std::vector<std::vector<double>> centers;
  std::vector<ValidationRecord> records;
};

ValidationResult ltts_validate(const ValidationOracle& oracle, const ValidationConfig& cfg);

void write_validation_csv(std::ostream& out, const std::vector<ValidationRecord>& records);

/// Shortest round-trip decimal form, used for all CSV numbers.
std::string format_double(double v);

/// Median seconds per call of fn over `evals` calls, timed in blocks of 100.
double time_per_call(const std::function<void()>& fn, std::size_t evals);

} // namespace ltts
