#include "ltts/tt_format.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "ltts/feature_map.hpp"

namespace ltts {

namespace {
// Singular values below this fraction of sigma_max count as zero.
constexpr double kRankCutoff = 1e-14;
}

TTTensor::TTTensor(std::vector<TTCore> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw ShapeError("a tensor train needs at least one core");
  const std::size_t m = cores_.front().mode;
  for (std::size_t k = 0; k < cores_.size(); ++k) {
    const TTCore& c = cores_[k];
    if (c.mode != m) throw ShapeError("all TT cores must share the same mode size");
    if (c.left == 0 || c.right == 0 || c.mode == 0) throw ShapeError("TT ranks and mode sizes must be >= 1");
    if (c.data.size() != c.left * c.mode * c.right) throw ShapeError("TT core data has the wrong length");
    if (k > 0 && cores_[k - 1].right != c.left) {
      throw ShapeError("TT rank mismatch between cores " + std::to_string(k - 1) + " and " + std::to_string(k));
    }
  }
  if (cores_.front().left != 1 || cores_.back().right != 1) throw ShapeError("TT boundary ranks must be 1");
}

TTTensor TTTensor::zeros(std::size_t order, std::size_t mode, std::span<const std::size_t> internal_ranks) {
  if (order == 0) throw ShapeError("order must be >= 1");
  if (internal_ranks.size() + 1 != order) throw ShapeError("need N-1 internal ranks");
  std::vector<TTCore> cores;
  cores.reserve(order);
  for (std::size_t k = 0; k < order; ++k) {
    const std::size_t l = k == 0 ? 1 : internal_ranks[k - 1];
    const std::size_t r = k + 1 == order ? 1 : internal_ranks[k];
    cores.emplace_back(l, mode, r);
  }
  return TTTensor(std::move(cores));
}

std::vector<std::size_t> TTTensor::ranks() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k) out.push_back(cores_[k].right);
  return out;
}

std::size_t TTTensor::max_rank() const noexcept {
  std::size_t r = 1;
  for (const auto& c : cores_) r = std::max(r, c.right);
  return r;
}

double TruncationReport::aggregate_bound() const noexcept {
  double s = 0.0;
  for (const auto& split : discarded) {
    for (double sigma : split) s += sigma * sigma;
  }
  return std::sqrt(s);
}

TTSVDResult tt_svd(const DenseTensor& tensor, std::size_t chi, std::optional<double> tol) {
  if (chi < 1) throw DomainError("rank cap must be >= 1");
  if (tol && !(*tol >= 0.0)) throw DomainError("tolerance must be >= 0");
  for (double v : tensor.data()) {
    if (!std::isfinite(v)) throw NumericalError("TT-SVD input contains non-finite entries");
  }
  const std::size_t order = tensor.order();
  const std::size_t m = tensor.shape().front();
  for (std::size_t s : tensor.shape()) {
    if (s != m) throw ShapeError("TT-SVD expects equal mode sizes");
  }

  const double split_tol = tol && order > 1 ? *tol / std::sqrt(static_cast<double>(order - 1)) : 0.0;

  TruncationReport report;
  std::vector<TTCore> cores;
  cores.reserve(order);

  // Remainder C of shape (r_prev * m) x rest.
  RowMatrix rest = Eigen::Map<const RowMatrix>(tensor.data().data(), 1, static_cast<Eigen::Index>(tensor.size()));
  std::size_t r_prev = 1;
  for (std::size_t k = 0; k + 1 < order; ++k) {
    const Eigen::Index rows = static_cast<Eigen::Index>(r_prev * m);
    const Eigen::Index cols = rest.size() / rows;
    const RowMatrix unfolding = Eigen::Map<const RowMatrix>(rest.data(), rows, cols);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(unfolding, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    const std::size_t full = static_cast<std::size_t>(sigma.size());

    std::size_t numerical_rank = 0;
    const double sigma_max = full > 0 ? sigma(0) : 0.0;
    for (std::size_t j = 0; j < full; ++j) {
      if (sigma(static_cast<Eigen::Index>(j)) > kRankCutoff * sigma_max) ++numerical_rank;
    }
    std::size_t keep = std::max<std::size_t>(1, numerical_rank);
    if (tol) {
      // Smallest rank whose discarded tail meets the per-split tolerance.
      double tail = 0.0;
      std::size_t needed = full;
      for (std::size_t j = full; j-- > 0;) {
        tail += sigma(static_cast<Eigen::Index>(j)) * sigma(static_cast<Eigen::Index>(j));
        if (std::sqrt(tail) <= split_tol) needed = j;
        else break;
      }
      keep = std::min(keep, std::max<std::size_t>(1, needed));
    }
    keep = std::min({keep, chi, full});

    std::vector<double> dropped;
    for (std::size_t j = keep; j < full; ++j) dropped.push_back(sigma(static_cast<Eigen::Index>(j)));
    report.discarded.push_back(std::move(dropped));
    report.kept_ranks.push_back(keep);

    TTCore core(r_prev, m, keep);
    core.left_unfolding() = svd.matrixU().leftCols(static_cast<Eigen::Index>(keep));
    cores.push_back(std::move(core));

    const RowMatrix next = sigma.head(static_cast<Eigen::Index>(keep)).asDiagonal() *
                           svd.matrixV().leftCols(static_cast<Eigen::Index>(keep)).transpose();
    rest = next;
    r_prev = keep;
  }

  TTCore last(r_prev, m, 1);
  std::copy(rest.data(), rest.data() + rest.size(), last.data.begin());
  cores.push_back(std::move(last));

  return {TTTensor(std::move(cores)), std::move(report)};
}

namespace {

constexpr std::size_t kStackRank = 64;
constexpr std::size_t kStackMode = 32;

constexpr std::array<double, kStackMode> kInverse = [] {
  std::array<double, kStackMode> inv{};
  for (std::size_t k = 1; k < kStackMode; ++k) inv[k] = 1.0 / static_cast<double>(k);
  return inv;
}();

template <std::size_t M>
double tt_eval_fixed(const TTTensor& tt, std::span<const double> xi) {
  // Left uninitialized on purpose: only the first `right` entries are ever read.
  std::array<double, kStackRank> u;
  std::array<double, kStackRank> next;
  std::array<double, M> f;
  u[0] = 1.0;
  f[0] = 1.0;
  for (std::size_t k = 0; k < tt.order(); ++k) {
    const TTCore& g = tt.core(k);
    for (std::size_t i = 1; i < M; ++i) f[i] = f[i - 1] * (xi[k] * kInverse[i]);
    const double* data = g.data.data();
    const std::size_t right = g.right;
    std::fill_n(next.begin(), right, 0.0);
    // Contract the mode index first so the chain through u stays one FMA deep per slab.
    for (std::size_t a = 0; a < g.left; ++a) {
      const double* slab = data + a * M * right;
      const double ua = u[a];
      for (std::size_t b = 0; b < right; ++b) {
        double t = f[0] * slab[b];
        for (std::size_t i = 1; i < M; ++i) t += f[i] * slab[i * right + b];
        next[b] += ua * t;
      }
    }
    std::copy_n(next.begin(), right, u.begin());
  }
  return u[0];
}

double tt_eval_stack(const TTTensor& tt, std::span<const double> xi) {
  switch (tt.mode_size()) {
    case 1: return tt_eval_fixed<1>(tt, xi);
    case 2: return tt_eval_fixed<2>(tt, xi);
    case 3: return tt_eval_fixed<3>(tt, xi);
    case 4: return tt_eval_fixed<4>(tt, xi);
    case 5: return tt_eval_fixed<5>(tt, xi);
    default: break;
  }
  std::array<double, kStackRank> u;
  std::array<double, kStackRank> next;
  std::array<double, kStackMode> f;
  u[0] = 1.0;
  const std::size_t m = tt.mode_size();
  f[0] = 1.0;
  for (std::size_t k = 0; k < tt.order(); ++k) {
    const TTCore& g = tt.core(k);
    for (std::size_t i = 1; i < m; ++i) f[i] = f[i - 1] * xi[k] * kInverse[i];
    const double* data = g.data.data();
    const std::size_t right = g.right;
    std::fill_n(next.begin(), right, 0.0);
    for (std::size_t a = 0; a < g.left; ++a) {
      const double ua = u[a];
      for (std::size_t i = 0; i < m; ++i) {
        const double w = ua * f[i];
        const double* row = data + (a * m + i) * right;
        for (std::size_t b = 0; b < right; ++b) next[b] += w * row[b];
      }
    }
    std::copy_n(next.begin(), right, u.begin());
  }
  return u[0];
}

double tt_eval_heap(const TTTensor& tt, std::span<const double> xi) {
  std::vector<double> u{1.0};
  std::vector<double> f(tt.mode_size());
  const std::size_t m = tt.mode_size();
  for (std::size_t k = 0; k < tt.order(); ++k) {
    const TTCore& g = tt.core(k);
    fill_factor_vector(xi[k], f);
    std::vector<double> next(g.right, 0.0);
    for (std::size_t a = 0; a < g.left; ++a) {
      for (std::size_t i = 0; i < m; ++i) {
        const double w = u[a] * f[i];
        for (std::size_t b = 0; b < g.right; ++b) next[b] += w * g(a, i, b);
      }
    }
    u = std::move(next);
  }
  return u[0];
}

} // namespace

double tt_eval(const TTTensor& tt, std::span<const double> xi) {
  if (xi.size() != tt.order()) throw ShapeError("point dimension does not match the TT order");
  if (tt.max_rank() <= kStackRank && tt.mode_size() <= kStackMode) return tt_eval_stack(tt, xi);
  return tt_eval_heap(tt, xi);
}

TTTensor left_orthogonalize(TTTensor tt) {
  for (std::size_t k = 0; k + 1 < tt.order(); ++k) {
    TTCore& core = tt.core(k);
    TTCore& next = tt.core(k + 1);
    const RowMatrix a = core.left_unfolding();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    const Eigen::Index thin = std::min(rows, cols);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, thin);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(thin).triangularView<Eigen::Upper>();

    TTCore new_core(core.left, core.mode, static_cast<std::size_t>(thin));
    new_core.left_unfolding() = q;
    TTCore new_next(static_cast<std::size_t>(thin), next.mode, next.right);
    new_next.right_unfolding() = r * next.right_unfolding();
    core = std::move(new_core);
    next = std::move(new_next);
  }
  return tt;
}

double tt_norm(const TTTensor& tt) {
  if (tt.order() == 0) return 0.0;
  const TTTensor ortho = left_orthogonalize(tt);
  double s = 0.0;
  for (double v : ortho.cores().back().data) s += v * v;
  return std::sqrt(s);
}

DenseTensor densify(const TTTensor& tt, std::size_t cap) {
  const std::size_t order = tt.order();
  const std::size_t m = tt.mode_size();
  DenseTensor out(std::vector<std::size_t>(order, m), cap);
  // acc: (m^k) x r_k
  RowMatrix acc = tt.core(0).left_unfolding();
  for (std::size_t k = 1; k < order; ++k) {
    const TTCore& g = tt.core(k);
    const RowMatrix prod = acc * g.right_unfolding();  // (m^k) x (m * r_{k+1})
    acc = Eigen::Map<const RowMatrix>(prod.data(), prod.rows() * static_cast<Eigen::Index>(m),
                                      static_cast<Eigen::Index>(g.right));
  }
  std::copy(acc.data(), acc.data() + acc.size(), out.data().begin());
  return out;
}

double tt_distance_dense(const TTTensor& tt, const DenseTensor& tensor) {
  const DenseTensor dense = densify(tt);
  if (dense.shape() != tensor.shape()) throw ShapeError("TT and dense tensor shapes differ");
  double s = 0.0;
  const auto a = dense.data();
  const auto b = tensor.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::size_t param_count(const TTTensor& tt) noexcept {
  std::size_t n = 0;
  for (const auto& c : tt.cores()) n += c.left * c.mode * c.right;
  return n;
}

std::vector<std::size_t> capped_ranks(std::size_t order, std::size_t mode, std::size_t chi) {
  std::vector<std::size_t> ranks;
  for (std::size_t k = 1; k < order; ++k) {
    std::size_t left = 1;
    std::size_t right = 1;
    for (std::size_t i = 0; i < k && left < chi; ++i) left *= mode;
    for (std::size_t i = k; i < order && right < chi; ++i) right *= mode;
    ranks.push_back(std::min({chi, left, right}));
  }
  return ranks;
}

TTTensor random_tt(std::size_t order, std::size_t mode, std::span<const std::size_t> internal_ranks,
                   double stddev, std::mt19937_64& rng) {
  TTTensor tt = TTTensor::zeros(order, mode, internal_ranks);
  std::normal_distribution<double> normal(0.0, stddev);
  for (std::size_t k = 0; k < order; ++k) {
    for (double& v : tt.core(k).data) v = normal(rng);
  }
  return tt;
}

} // namespace ltts
