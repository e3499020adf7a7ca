#include "ltts/erm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/QR>

#include "ltts/quantum_oracle.hpp"
#include "ltts/rng.hpp"

namespace ltts {

std::string NoiseModel::describe() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Uniform: return "uniform(sigma=" + std::to_string(sigma) + ")";
    case Kind::Shots: return "shots(" + std::to_string(shots) + ")";
  }
  return "none";
}

std::vector<double> sample_uniform_patch(const PatchSpec& patch, std::size_t n, std::uint64_t seed) {
  patch.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> points(n * patch.order());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < patch.order(); ++j) points[i * patch.order() + j] = patch.x0[j] + patch.r * u(rng);
  }
  return points;
}

Dataset sample_patch(const BlackBox& g, const PatchSpec& patch, std::size_t n, const NoiseModel& noise,
                     std::uint64_t seed) {
  if (n == 0) throw DomainError("dataset size must be >= 1");
  if (g.dim() != patch.order()) throw ShapeError("black box dimension does not match the patch");
  if (noise.kind == NoiseModel::Kind::Uniform && !(noise.sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  if (noise.kind == NoiseModel::Kind::Shots && noise.shots == 0) throw DomainError("shot count must be >= 1");

  Dataset d;
  d.dim = patch.order();
  d.seed = seed;
  d.noise = noise;
  d.x = sample_uniform_patch(patch, n, substream_seed(seed, "points"));
  d.xi.resize(d.x.size());
  d.y.resize(n);
  auto noise_rng = substream(seed, "noise");
  std::uniform_real_distribution<double> eps(-noise.sigma, noise.sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = normalize(d.point(i), patch);
    std::copy(xi.begin(), xi.end(), d.xi.begin() + static_cast<std::ptrdiff_t>(i * d.dim));
    const double clean = g(d.point(i));
    switch (noise.kind) {
      case NoiseModel::Kind::None: d.y[i] = clean; break;
      case NoiseModel::Kind::Uniform: d.y[i] = clean + eps(noise_rng); break;
      case NoiseModel::Kind::Shots: d.y[i] = shot_estimate(clean, noise.shots, noise_rng()); break;
    }
  }
  return d;
}

void ERMConfig::validate() const {
  if (chi < 1) throw DomainError("rank cap must be >= 1");
  if (p < 0) throw DomainError("degree must be >= 0");
  if (max_sweeps < 1) throw DomainError("max_sweeps must be >= 1");
  if (!(rel_tol > 0.0)) throw DomainError("rel_tol must be > 0");
  if (!(ridge >= 0.0)) throw DomainError("ridge must be >= 0");
  if (lambda_budget && !(*lambda_budget >= 0.0)) throw DomainError("norm budget must be >= 0");
}

TTTensor pad_ranks(const TTTensor& tt, std::span<const std::size_t> ranks, std::uint64_t seed) {
  const std::size_t order = tt.order();
  if (ranks.size() + 1 != order) throw ShapeError("need N-1 target ranks");
  const std::size_t m = tt.mode_size();
  std::vector<std::size_t> target(ranks.begin(), ranks.end());
  const auto old_ranks = tt.ranks();
  for (std::size_t k = 0; k < target.size(); ++k) target[k] = std::max(target[k], old_ranks[k]);

  std::mt19937_64 rng(seed);
  std::vector<TTCore> cores;
  for (std::size_t k = 0; k < order; ++k) {
    const TTCore& old = tt.core(k);
    const std::size_t l = k == 0 ? 1 : target[k - 1];
    const std::size_t r = k + 1 == order ? 1 : target[k];
    TTCore core(l, m, r);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m * r));
    std::normal_distribution<double> normal(0.0, scale);
    for (std::size_t a = 0; a < old.left; ++a) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t b = 0; b < r; ++b) core(a, i, b) = b < old.right ? old(a, i, b) : normal(rng);
      }
    }
    // Rows a >= old.left stay zero, so the fresh channels of bond k-1 contribute nothing.
    cores.push_back(std::move(core));
  }
  return TTTensor(std::move(cores));
}

namespace {

struct LeastSquares {
  Eigen::VectorXd solution;
  bool retried = false;
};

LeastSquares solve_ridge(const Eigen::MatrixXd& phi, const Eigen::VectorXd& y, double ridge) {
  const Eigen::Index n = phi.rows();
  const Eigen::Index p = phi.cols();
  auto solve = [&](double lambda) {
    Eigen::MatrixXd a(n + p, p);
    a.topRows(n) = phi;
    a.bottomRows(p) = std::sqrt(static_cast<double>(n) * lambda) * Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + p);
    b.head(n) = y;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    return std::pair{Eigen::VectorXd(qr.solve(b)), qr.rank()};
  };
  auto [x, rank] = solve(ridge);
  if (ridge == 0.0 && rank < p) {
    return {solve(1e-10).first, true};
  }
  return {std::move(x), false};
}

// Per-sample contraction state for ALS.
class AlsState {
public:
  AlsState(const Dataset& data, TTTensor tt, int p) : data_(data), tt_(std::move(tt)), m_(static_cast<std::size_t>(p) + 1) {
    n_ = data.size();
    order_ = tt_.order();
    factors_.resize(order_);
    for (std::size_t k = 0; k < order_; ++k) {
      factors_[k].resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_));
      for (std::size_t i = 0; i < n_; ++i) {
        Eigen::Ref<Eigen::RowVectorXd> row = factors_[k].row(static_cast<Eigen::Index>(i));
        fill_factor_vector(data.normalized(i)[k], std::span<double>(row.data(), m_));
      }
    }
    y_ = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(n_));
    left_.resize(order_);
    right_.resize(order_);
  }

  TTTensor& tt() { return tt_; }

  void right_orthogonalize() {
    for (std::size_t k = order_; k-- > 1;) shift_left(k);
    left_[0] = RowMatrix::Ones(static_cast<Eigen::Index>(n_), 1);
    right_[order_ - 1] = RowMatrix::Ones(static_cast<Eigen::Index>(n_), 1);
    for (std::size_t k = order_ - 1; k-- > 0;) update_right(k);
  }

  // Exact least-squares update of core k; returns the empirical risk afterwards.
  double solve_core(std::size_t k, double ridge, std::size_t& retries) {
    TTCore& g = tt_.core(k);
    const std::size_t l = g.left;
    const std::size_t r = g.right;
    const auto params = static_cast<Eigen::Index>(l * m_ * r);
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(n_), params);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (std::size_t a = 0; a < l; ++a) {
        const double la = left_[k](ii, static_cast<Eigen::Index>(a));
        for (std::size_t j = 0; j < m_; ++j) {
          const double w = la * factors_[k](ii, static_cast<Eigen::Index>(j));
          for (std::size_t b = 0; b < r; ++b) {
            phi(ii, static_cast<Eigen::Index>((a * m_ + j) * r + b)) = w * right_[k](ii, static_cast<Eigen::Index>(b));
          }
        }
      }
    }
    const LeastSquares ls = solve_ridge(phi, y_, ridge);
    if (ls.retried) ++retries;
    std::copy(ls.solution.data(), ls.solution.data() + params, g.data.begin());
    const Eigen::VectorXd residual = phi * ls.solution - y_;
    return residual.squaredNorm() / static_cast<double>(n_);
  }

  // Moves the orthogonality center from core k to core k+1.
  void shift_right(std::size_t k) {
    TTCore& core = tt_.core(k);
    TTCore& next = tt_.core(k + 1);
    const Eigen::MatrixXd a = core.left_unfolding();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::Index t = std::min(a.rows(), a.cols());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), t);
    const Eigen::MatrixXd rr = qr.matrixQR().topRows(t).triangularView<Eigen::Upper>();
    TTCore new_core(core.left, core.mode, static_cast<std::size_t>(t));
    new_core.left_unfolding() = q;
    TTCore new_next(static_cast<std::size_t>(t), next.mode, next.right);
    new_next.right_unfolding() = rr * next.right_unfolding();
    core = std::move(new_core);
    next = std::move(new_next);
    update_left(k + 1);
  }

  // Moves the orthogonality center from core k to core k-1.
  void shift_left(std::size_t k) {
    TTCore& core = tt_.core(k);
    TTCore& prev = tt_.core(k - 1);
    const Eigen::MatrixXd at = core.right_unfolding().transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(at);
    const Eigen::Index t = std::min(at.rows(), at.cols());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(at.rows(), t);
    const Eigen::MatrixXd rr = qr.matrixQR().topRows(t).triangularView<Eigen::Upper>();
    TTCore new_core(static_cast<std::size_t>(t), core.mode, core.right);
    new_core.right_unfolding() = q.transpose();
    TTCore new_prev(prev.left, prev.mode, static_cast<std::size_t>(t));
    new_prev.left_unfolding() = prev.left_unfolding() * rr.transpose();
    core = std::move(new_core);
    prev = std::move(new_prev);
    if (!right_.empty() && right_[k].size() > 0) update_right(k - 1);
  }

  double risk() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double d = tt_eval(tt_, data_.normalized(i)) - data_.y[i];
      s += d * d;
    }
    return s / static_cast<double>(n_);
  }

private:
  void update_left(std::size_t k) {
    const TTCore& g = tt_.core(k - 1);
    RowMatrix next = RowMatrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(g.right));
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (std::size_t a = 0; a < g.left; ++a) {
        const double la = left_[k - 1](ii, static_cast<Eigen::Index>(a));
        for (std::size_t j = 0; j < m_; ++j) {
          const double w = la * factors_[k - 1](ii, static_cast<Eigen::Index>(j));
          for (std::size_t b = 0; b < g.right; ++b) next(ii, static_cast<Eigen::Index>(b)) += w * g(a, j, b);
        }
      }
    }
    left_[k] = std::move(next);
  }

  void update_right(std::size_t k) {
    const TTCore& g = tt_.core(k + 1);
    RowMatrix next = RowMatrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(g.left));
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      for (std::size_t a = 0; a < g.left; ++a) {
        double s = 0.0;
        for (std::size_t j = 0; j < m_; ++j) {
          const double f = factors_[k + 1](ii, static_cast<Eigen::Index>(j));
          for (std::size_t b = 0; b < g.right; ++b) s += g(a, j, b) * f * right_[k + 1](ii, static_cast<Eigen::Index>(b));
        }
        next(ii, static_cast<Eigen::Index>(a)) = s;
      }
    }
    right_[k] = std::move(next);
  }

  const Dataset& data_;
  TTTensor tt_;
  std::size_t m_;
  std::size_t n_ = 0;
  std::size_t order_ = 0;
  std::vector<RowMatrix> factors_;
  std::vector<RowMatrix> left_;
  std::vector<RowMatrix> right_;
  Eigen::VectorXd y_;
};

bool converged(double prev, double cur, double rel_tol) {
  if (cur <= 1e-30) return true;
  return std::abs(prev - cur) <= rel_tol * std::max(prev, 1e-300);
}

} // namespace

FitResult als_fit(const Dataset& data, const ERMConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw DomainError("dataset must be nonempty");
  const std::size_t order = data.dim;
  const auto m = static_cast<std::size_t>(cfg.p) + 1;
  const auto caps = capped_ranks(order, m, cfg.chi);

  TTTensor init;
  if (cfg.init) {
    if (cfg.init->order() != order || cfg.init->mode_size() != m) {
      throw ShapeError("warm start does not match the dataset dimension or feature degree");
    }
    const auto r = cfg.init->ranks();
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (r[k] > cfg.chi) throw ShapeError("warm start rank exceeds the rank cap");
    }
    init = pad_ranks(*cfg.init, caps, substream_seed(cfg.seed, "pad"));
  } else {
    auto rng = substream(cfg.seed, "als-init");
    init = random_tt(order, m, caps, 1.0 / std::sqrt(static_cast<double>(m * cfg.chi)), rng);
  }

  FitReport report;
  AlsState state(data, std::move(init), cfg.p);
  state.right_orthogonalize();
  double prev = state.risk();
  report.sweep_risks.push_back(prev);

  for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    double cur = prev;
    if (order == 1) {
      cur = state.solve_core(0, cfg.ridge, report.ridge_retries);
      report.half_sweep_risks.push_back(cur);
    } else {
      for (std::size_t k = 0; k + 1 < order; ++k) {
        cur = state.solve_core(k, cfg.ridge, report.ridge_retries);
        report.half_sweep_risks.push_back(cur);
        state.shift_right(k);
      }
      for (std::size_t k = order - 1; k > 0; --k) {
        cur = state.solve_core(k, cfg.ridge, report.ridge_retries);
        report.half_sweep_risks.push_back(cur);
        state.shift_left(k);
      }
    }
    report.sweep_risks.push_back(cur);
    ++report.sweeps;
    if (converged(prev, cur, cfg.rel_tol)) {
      report.converged = true;
      break;
    }
    prev = cur;
  }

  TTTensor tt = std::move(state.tt());
  report.final_risk = empirical_risk(tt, data);
  report.norm = tt_norm(tt);
  if (cfg.lambda_budget && report.norm > *cfg.lambda_budget) {
    report.budget_violation = true;
    if (cfg.rescale_to_budget && report.norm > 0.0) {
      const double s = *cfg.lambda_budget / report.norm;
      for (double& v : tt.core(order - 1).data) v *= s;
      report.rescaled = true;
      report.final_risk = empirical_risk(tt, data);
    }
  }
  return {std::move(tt), std::move(report)};
}

double empirical_risk(const TTTensor& tt, const Dataset& data) {
  if (data.size() == 0) throw DomainError("dataset must be nonempty");
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d = tt_eval(tt, data.normalized(i)) - data.y[i];
    s += d * d;
  }
  return s / static_cast<double>(data.size());
}

double clean_rmse(const TTTensor& tt, std::span<const double> xi, std::span<const double> g_values) {
  const std::size_t dim = tt.order();
  if (g_values.empty() || xi.size() != g_values.size() * dim) throw ShapeError("evaluation set is inconsistent");
  double s = 0.0;
  for (std::size_t i = 0; i < g_values.size(); ++i) {
    const double d = tt_eval(tt, xi.subspan(i * dim, dim)) - g_values[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(g_values.size()));
}

double clean_rmse(const TTTensor& tt, const BlackBox& g, const PatchSpec& patch, std::span<const double> points) {
  const std::size_t dim = patch.order();
  if (points.empty() || points.size() % dim != 0) throw ShapeError("evaluation points are inconsistent");
  const std::size_t n = points.size() / dim;
  std::vector<double> xi(points.size());
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pt = points.subspan(i * dim, dim);
    const auto z = normalize(pt, patch);
    std::copy(z.begin(), z.end(), xi.begin() + static_cast<std::ptrdiff_t>(i * dim));
    values[i] = g(pt);
  }
  return clean_rmse(tt, xi, values);
}

} // namespace ltts
