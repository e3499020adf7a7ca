#include "ltts/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "ltts/certificate.hpp"
#include "ltts/parallel.hpp"
#include "ltts/rng.hpp"
#include "ltts/tt_format.hpp"

namespace ltts {

std::optional<std::size_t> min_rank_to_tolerance(const DenseTensor& a, double tol_abs, std::size_t chi_max) {
  if (!(tol_abs > 0.0)) throw DomainError("absolute tolerance must be > 0");
  if (chi_max < 1) throw DomainError("chi_max must be >= 1");
  if (frobenius_norm(a) <= tol_abs) return 1;
  for (std::size_t chi = 1; chi <= chi_max; ++chi) {
    const auto res = tt_svd(a, chi);
    if (tt_distance_dense(res.tt, a) <= tol_abs) return chi;
  }
  return std::nullopt;
}

std::string_view to_string(Criterion c) noexcept {
  return c == Criterion::CommonScale ? "common" : "self";
}

std::string_view bucket_of(FamilyKind kind) noexcept {
  switch (kind) {
    case FamilyKind::ExpSum:
    case FamilyKind::ProductCos: return "Separable";
    case FamilyKind::PolyMatched: return "PolyMatched";
    case FamilyKind::PolyHigher: return "PolyHigher";
    case FamilyKind::QuadraticForm: return "QuadraticForm";
    case FamilyKind::Trig:
    case FamilyKind::Gauss: return "Trig+Gauss";
  }
  return "unknown";
}

void RankScanConfig::validate() const {
  if (families.empty()) throw DomainError("families: at least one family is required");
  if (configs.empty()) throw DomainError("configs: at least one (N, p) pair is required");
  for (const auto& [n, p] : configs) {
    if (n < 1 || p < 0) throw DomainError("configs: need N >= 1 and p >= 0");
  }
  if (epsilons.empty()) throw DomainError("eps: at least one tolerance is required");
  for (double e : epsilons) {
    if (!(e > 0.0)) throw DomainError("eps: tolerances must be > 0");
  }
  if (criteria.empty()) throw DomainError("criteria: at least one criterion is required");
  if (chi_max < 1) throw DomainError("chi_max must be >= 1");
}

std::optional<double> RankScanRecord::rho() const {
  if (!chi_box || !chi_delta) return std::nullopt;
  return static_cast<double>(*chi_delta) / static_cast<double>(*chi_box);
}

std::vector<ScanCase> scan_inventory(const RankScanConfig& cfg) {
  std::vector<ScanCase> cases;
  for (const auto& [n, p] : cfg.configs) {
    for (FamilyKind kind : cfg.families) {
      std::size_t random = 0;
      bool ones = false;
      switch (kind) {
        case FamilyKind::ExpSum:
        case FamilyKind::ProductCos:
          ones = true;
          random = cfg.counts.separable_random;
          break;
        case FamilyKind::PolyMatched:
        case FamilyKind::PolyHigher: random = cfg.counts.poly; break;
        case FamilyKind::QuadraticForm: random = cfg.counts.quadratic; break;
        case FamilyKind::Trig: random = cfg.counts.trig; break;
        case FamilyKind::Gauss: random = cfg.counts.gauss; break;
      }
      const std::size_t first = ones ? 1 : 0;
      if (ones) cases.push_back({kind, n, p, 0, true, 0});
      for (std::size_t i = 0; i < random; ++i) {
        const std::size_t idx = first + i;
        cases.push_back({kind, n, p, idx, false,
                         substream_seed(cfg.seed, "rank-scan", static_cast<int>(kind), n, p, idx)});
      }
    }
  }
  return cases;
}

std::vector<RankScanRecord> rank_scan(const RankScanConfig& cfg) {
  cfg.validate();
  const auto cases = scan_inventory(cfg);
  const std::size_t per_case = cfg.epsilons.size() * cfg.criteria.size();
  std::vector<RankScanRecord> records(cases.size() * per_case);

  parallel_for(cases.size(), cfg.threads, [&](std::size_t c) {
    const ScanCase& sc = cases[c];
    const FamilyInstance f = sc.all_ones ? ones_instance(sc.kind, sc.n) : draw_instance(sc.kind, sc.n, sc.p, sc.seed);
    const DenseTensor box = box_tensor(f, sc.p);
    const DenseTensor simplex = simplex_tensor(f, sc.p);
    const double norm_box = frobenius_norm(box);
    const double norm_simplex = frobenius_norm(simplex);
    if (!(norm_box > 0.0) || !(norm_simplex > 0.0)) {
      throw NumericalError(std::string(to_string(sc.kind)) + " instance " + std::to_string(sc.instance) +
                           " has a zero coefficient tensor; tolerance is undefined");
    }
    std::size_t slot = c * per_case;
    for (double eps : cfg.epsilons) {
      // Both criteria share the box tolerance, so chi_box is computed once.
      const auto chi_box = min_rank_to_tolerance(box, eps * norm_box, cfg.chi_max);
      for (Criterion crit : cfg.criteria) {
        const double scale = crit == Criterion::CommonScale ? norm_box : norm_simplex;
        records[slot++] = {sc.kind, sc.n,    sc.p, sc.instance, eps, crit, chi_box,
                           min_rank_to_tolerance(simplex, eps * scale, cfg.chi_max)};
      }
    }
  });
  return records;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("percentile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<RankSummaryRow> aggregate(const std::vector<RankScanRecord>& records) {
  if (records.empty()) throw DomainError("nothing to aggregate");
  struct Acc {
    std::size_t n = 0;
    std::size_t unreached = 0;
    std::vector<double> rho, box, delta;
  };
  using Key = std::tuple<std::string, double, Criterion>;
  std::vector<Key> order;
  std::map<Key, Acc> acc;
  for (const auto& rec : records) {
    Key key{std::string(bucket_of(rec.family)), rec.epsilon, rec.criterion};
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) order.push_back(key);
    Acc& a = it->second;
    ++a.n;
    if (const auto rho = rec.rho()) {
      a.rho.push_back(*rho);
      a.box.push_back(static_cast<double>(*rec.chi_box));
      a.delta.push_back(static_cast<double>(*rec.chi_delta));
    } else {
      ++a.unreached;
    }
  }
  std::vector<RankSummaryRow> rows;
  for (const Key& key : order) {
    const Acc& a = acc.at(key);
    RankSummaryRow row;
    row.bucket = std::get<0>(key);
    row.epsilon = std::get<1>(key);
    row.criterion = std::get<2>(key);
    row.n = a.n;
    row.unreached = a.unreached;
    if (!a.rho.empty()) {
      row.median_rho = percentile(a.rho, 0.5);
      row.q25_rho = percentile(a.rho, 0.25);
      row.q75_rho = percentile(a.rho, 0.75);
      row.median_chi_box = percentile(a.box, 0.5);
      row.median_chi_delta = percentile(a.delta, 0.5);
    } else {
      row.median_rho = row.q25_rho = row.q75_rho = std::nan("");
      row.median_chi_box = row.median_chi_delta = std::nan("");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_rank_scan_csv(std::ostream& out, const std::vector<RankScanRecord>& records) {
  out << "family,N,p,instance,epsilon,criterion,chi_box,chi_delta,rho,reached_box,reached_delta\n";
  for (const auto& r : records) {
    const auto rho = r.rho();
    out << to_string(r.family) << ',' << r.n << ',' << r.p << ',' << r.instance << ',' << format_double(r.epsilon)
        << ',' << to_string(r.criterion) << ',' << (r.chi_box ? std::to_string(*r.chi_box) : "") << ','
        << (r.chi_delta ? std::to_string(*r.chi_delta) : "") << ',' << (rho ? format_double(*rho) : "") << ','
        << (r.chi_box ? "true" : "false") << ',' << (r.chi_delta ? "true" : "false") << '\n';
  }
}

ValidationOracle qcnn_oracle(const QcnnModel& model, std::size_t input_dim) {
  return {"qcnn", as_black_box(model, input_dim), [](const PatchSpec&) { return qcnn_budget(); },
          [](const PatchSpec&) { return 1.0; }, 0.0, std::numbers::pi};
}

ValidationOracle family_oracle(const FamilyInstance& f) {
  return {std::string(to_string(f.kind)), as_black_box(f),
          [f](const PatchSpec& patch) { return exact_budget(f, patch); },
          [f](const PatchSpec& patch) {
            return derivative_sup_bound(f, patch.x0, patch.r, MultiIndex(std::vector<int>(f.dim, 0)));
          },
          -1.0, 1.0};
}

std::vector<std::vector<double>> default_centers(const ValidationOracle& oracle, std::uint64_t seed) {
  const std::size_t dim = oracle.g.dim();
  const double width = oracle.upper - oracle.lower;
  if (!(width > 0.0)) throw DomainError("oracle domain must have positive width");
  auto constant = [dim](double v) { return std::vector<double>(dim, v); };
  auto rng = substream(seed, "centers");
  std::uniform_real_distribution<double> u(oracle.lower + 0.1 * width, oracle.upper - 0.1 * width);
  std::vector<double> interior(dim);
  for (double& v : interior) v = u(rng);
  return {constant(std::clamp(0.0, oracle.lower, oracle.upper)), interior, constant(oracle.lower + 0.05 * width),
          constant(oracle.upper - 0.05 * width), constant(oracle.lower + 0.5 * width)};
}

void ValidationConfig::validate() const {
  if (radii.empty()) throw DomainError("r: at least one radius is required");
  for (double r : radii) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("r: radii must be finite and > 0");
  }
  if (chis.empty()) throw DomainError("chi: at least one rank cap is required");
  for (std::size_t c : chis) {
    if (c < 1) throw DomainError("chi: rank caps must be >= 1");
  }
  if (p < 0 || p > 2) throw DomainError("p: finite-difference extraction supports p in {0, 1, 2}");
  if (n_train < 1) throw DomainError("n_train must be >= 1");
  if (n_test < 1) throw DomainError("n_test must be >= 1");
  if (fd_step && !(*fd_step > 0.0)) throw DomainError("fd_step must be > 0");
  if (max_sweeps < 1) throw DomainError("max_sweeps must be >= 1");
  if (!(rel_tol > 0.0)) throw DomainError("rel_tol must be > 0");
  if (timing && timing_evals < 100) throw DomainError("timing_evals must be >= 100");
}

double time_per_call(const std::function<void()>& fn, std::size_t evals) {
  constexpr std::size_t kBlock = 100;
  const std::size_t blocks = std::max<std::size_t>(1, evals / kBlock);
  std::vector<double> per_call(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < kBlock; ++i) fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    per_call[b] = dt.count() / static_cast<double>(kBlock);
  }
  return percentile(std::move(per_call), 0.5);
}

namespace {

double rms(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

double label_bound(double g_max, const NoiseModel& noise) {
  switch (noise.kind) {
    case NoiseModel::Kind::None: return g_max;
    case NoiseModel::Kind::Uniform: return g_max + noise.sigma;
    case NoiseModel::Kind::Shots:
      if (g_max > 1.0) throw DomainError("shot noise needs an oracle with values in [-1, 1]");
      return 1.0;  // a shot average of +-1 outcomes
  }
  return g_max;
}

} // namespace

ValidationResult ltts_validate(const ValidationOracle& oracle, const ValidationConfig& cfg) {
  cfg.validate();
  const std::size_t dim = oracle.g.dim();
  ValidationResult result;
  result.centers = cfg.centers.empty() ? default_centers(oracle, cfg.seed) : cfg.centers;
  for (const auto& c : result.centers) {
    if (c.size() != dim) throw ShapeError("center dimension does not match the oracle");
  }
  const std::size_t n_chi = cfg.chis.size();
  const std::size_t n_items = result.centers.size() * cfg.radii.size();
  result.records.resize(n_items * n_chi);
  std::vector<TTTensor> surrogates(result.records.size());
  const std::size_t chi_top = *std::max_element(cfg.chis.begin(), cfg.chis.end());

  parallel_for(n_items, cfg.threads, [&](std::size_t item) {
    const std::size_t c = item / cfg.radii.size();
    const std::size_t ri = item % cfg.radii.size();
    const double r = cfg.radii[ri];
    const PatchSpec patch{result.centers[c], r, cfg.p, static_cast<int>(chi_top)};
    patch.validate();

    // A private counter so the query count is exact under concurrency.
    const BlackBox& shared = oracle.g;
    BlackBox local(dim, [&shared](std::span<const double> x) { return shared(x); }, shared.g_max());
    const double h = cfg.fd_step ? *cfg.fd_step : default_fd_step(r);
    const CoefficientTensor coeffs = embed(fd_derivatives(local, patch.x0, cfg.p, h), patch);
    const std::size_t queries = local.queries();
    const DenseTensor dense = coeffs.densify();
    const double coeff_norm = frobenius_norm(dense);

    const auto test_points = sample_uniform_patch(patch, cfg.n_test, substream_seed(cfg.seed, "test", c, ri));
    std::vector<double> xi_test(test_points.size());
    std::vector<double> g_test(cfg.n_test);
    std::vector<double> taylor(cfg.n_test);
    for (std::size_t i = 0; i < cfg.n_test; ++i) {
      const std::span<const double> pt(test_points.data() + i * dim, dim);
      const auto z = normalize(pt, patch);
      std::copy(z.begin(), z.end(), xi_test.begin() + static_cast<std::ptrdiff_t>(i * dim));
      g_test[i] = shared(pt);
      taylor[i] = taylor_eval(coeffs, z);
    }
    const Dataset train = sample_patch(shared, patch, cfg.n_train, cfg.noise, substream_seed(cfg.seed, "train", c, ri));
    const SmoothnessBudget budget = oracle.budget(patch);
    const double y_max = label_bound(oracle.g_bound(patch), cfg.noise);
    const double rmse_trunc = rms(g_test, taylor);

    for (std::size_t k = 0; k < n_chi; ++k) {
      const std::size_t chi = cfg.chis[k];
      const auto svd = tt_svd(dense, chi);
      const double tt_err = tt_distance_dense(svd.tt, dense);
      const Certificate cert = build_certificate(budget, r, dim, cfg.p, tt_err, y_max);

      std::vector<double> surrogate(cfg.n_test);
      for (std::size_t i = 0; i < cfg.n_test; ++i) {
        surrogate[i] = tt_eval(svd.tt, std::span<const double>(xi_test.data() + i * dim, dim));
      }

      ERMConfig ecfg;
      ecfg.chi = chi;
      ecfg.p = cfg.p;
      ecfg.lambda_budget = cert.lambda;
      ecfg.max_sweeps = cfg.max_sweeps;
      ecfg.rel_tol = cfg.rel_tol;
      ecfg.init = svd.tt;
      ecfg.seed = substream_seed(cfg.seed, "erm", c, ri, chi);
      FitResult fit = als_fit(train, ecfg);

      ValidationRecord& rec = result.records[item * n_chi + k];
      rec.center = c;
      rec.r = r;
      rec.chi = chi;
      rec.rmse_trunc = rmse_trunc;
      rec.rmse_tt = rms(taylor, surrogate);
      rec.rmse_total = rms(g_test, surrogate);
      rec.coeff_compression = ratio(tt_err, coeff_norm);
      rec.tt_over_trunc = ratio(rec.rmse_tt, rmse_trunc);
      rec.e_det = cert.e_det;
      rec.cert_rmse = rec.rmse_total;
      rec.erm_rmse = clean_rmse(fit.tt, xi_test, g_test);
      rec.te_ratio = ratio(rec.erm_rmse, rec.cert_rmse);
      rec.lambda_star = cert.lambda;
      rec.erm_norm = fit.report.norm;
      rec.erm_budget_violation = fit.report.budget_violation;
      rec.erm_sweeps = fit.report.sweeps;
      rec.fd_queries = queries;
      surrogates[item * n_chi + k] = std::move(fit.tt);
    }
  });

  if (cfg.timing) {
    // Sequential so that concurrent work does not distort the clock.
    for (std::size_t c = 0; c < result.centers.size(); ++c) {
      const PatchSpec probe{result.centers[c], cfg.radii.front(), cfg.p, static_cast<int>(chi_top)};
      const auto pts = sample_uniform_patch(probe, 256, substream_seed(cfg.seed, "timing", c));
      std::size_t cursor = 0;
      volatile double sink = 0.0;
      const double oracle_time = time_per_call(
          [&] {
            sink = sink + oracle.g(std::span<const double>(pts.data() + (cursor++ % 256) * dim, dim));
          },
          cfg.timing_evals);
      for (std::size_t ri = 0; ri < cfg.radii.size(); ++ri) {
        const PatchSpec patch{result.centers[c], cfg.radii[ri], cfg.p, static_cast<int>(chi_top)};
        for (std::size_t k = 0; k < n_chi; ++k) {
          const std::size_t slot = (c * cfg.radii.size() + ri) * n_chi + k;
          const TTTensor& tt = surrogates[slot];
          const double tt_time = time_per_call(
              [&] {
                const auto z = normalize(std::span<const double>(pts.data() + (cursor++ % 256) * dim, dim), patch);
                sink = sink + tt_eval(tt, z);
              },
              cfg.timing_evals);
          result.records[slot].speedup = ratio(oracle_time, tt_time);
        }
      }
    }
  }
  return result;
}

void write_validation_csv(std::ostream& out, const std::vector<ValidationRecord>& records) {
  out << "center,r,chi,rmse_trunc,rmse_tt,rmse_total,coeff_compression,tt_over_trunc,e_det,cert_rmse,erm_rmse,"
         "te_ratio,speedup\n";
  for (const auto& r : records) {
    out << r.center << ',' << format_double(r.r) << ',' << r.chi << ',' << format_double(r.rmse_trunc) << ','
        << format_double(r.rmse_tt) << ',' << format_double(r.rmse_total) << ',' << format_double(r.coeff_compression)
        << ',' << format_double(r.tt_over_trunc) << ',' << format_double(r.e_det) << ','
        << format_double(r.cert_rmse) << ',' << format_double(r.erm_rmse) << ',' << format_double(r.te_ratio) << ','
        << (r.speedup ? format_double(*r.speedup) : "") << '\n';
  }
}

} // namespace ltts
