#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ltts/tensor_core.hpp"

namespace ltts {

/// Order-3 TT core G of shape (left, mode, right), row-major.
struct TTCore {
  std::size_t left = 1;
  std::size_t mode = 1;
  std::size_t right = 1;
  std::vector<double> data;

  TTCore() = default;
  TTCore(std::size_t l, std::size_t m, std::size_t r) : left(l), mode(m), right(r), data(l * m * r, 0.0) {}

  double operator()(std::size_t a, std::size_t i, std::size_t b) const { return data[(a * mode + i) * right + b]; }
  double& operator()(std::size_t a, std::size_t i, std::size_t b) { return data[(a * mode + i) * right + b]; }

  /// (left*mode) x right view.
  Eigen::Map<const RowMatrix> left_unfolding() const {
    return {data.data(), static_cast<Eigen::Index>(left * mode), static_cast<Eigen::Index>(right)};
  }
  Eigen::Map<RowMatrix> left_unfolding() {
    return {data.data(), static_cast<Eigen::Index>(left * mode), static_cast<Eigen::Index>(right)};
  }
  /// left x (mode*right) view.
  Eigen::Map<const RowMatrix> right_unfolding() const {
    return {data.data(), static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(mode * right)};
  }
  Eigen::Map<RowMatrix> right_unfolding() {
    return {data.data(), static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(mode * right)};
  }
};

/// Tensor train with boundary ranks 1 and a common mode size m = p + 1.
class TTTensor {
public:
  TTTensor() = default;
  /// Validates rank chaining and boundary ranks; throws ShapeError.
  explicit TTTensor(std::vector<TTCore> cores);

  /// All-zero TT with the given internal ranks (size N-1).
  static TTTensor zeros(std::size_t order, std::size_t mode, std::span<const std::size_t> internal_ranks);

  std::size_t order() const noexcept { return cores_.size(); }
  std::size_t mode_size() const noexcept { return cores_.empty() ? 0 : cores_.front().mode; }
  /// Internal ranks r_1..r_{N-1}.
  std::vector<std::size_t> ranks() const;
  std::size_t max_rank() const noexcept;

  const std::vector<TTCore>& cores() const noexcept { return cores_; }
  const TTCore& core(std::size_t k) const { return cores_[k]; }
  TTCore& core(std::size_t k) { return cores_[k]; }

private:
  std::vector<TTCore> cores_;
};

/// Singular values discarded at every split of a TT-SVD sweep.
struct TruncationReport {
  std::vector<std::vector<double>> discarded;  // per split k = 1..N-1
  std::vector<std::size_t> kept_ranks;

  /// sqrt(sum_k sum_{j > r_k} sigma_{k,j}^2).
  double aggregate_bound() const noexcept;
};

struct TTSVDResult {
  TTTensor tt;
  TruncationReport report;
};

/// Left-to-right TT-SVD. Keeps min(chi, rank needed for `tol`) directions per split, where
/// `tol` is an absolute Frobenius tolerance shared evenly over the N-1 splits.
TTSVDResult tt_svd(const DenseTensor& tensor, std::size_t chi, std::optional<double> tol = std::nullopt);

/// h(xi) = <A, Phi(xi)> by left-to-right contraction, O(N m chi^2).
double tt_eval(const TTTensor& tt, std::span<const double> xi);

/// Frobenius norm through a left-orthogonalization sweep.
double tt_norm(const TTTensor& tt);

DenseTensor densify(const TTTensor& tt, std::size_t cap = kDefaultDenseCap);

/// ||densify(tt) - A||_F.
double tt_distance_dense(const TTTensor& tt, const DenseTensor& tensor);

/// sum_k m r_{k-1} r_k.
std::size_t param_count(const TTTensor& tt) noexcept;

/// Rank profile min(chi, m^k, m^(N-k)) for k = 1..N-1.
std::vector<std::size_t> capped_ranks(std::size_t order, std::size_t mode, std::size_t chi);

/// Cores with i.i.d. N(0, stddev^2) entries.
TTTensor random_tt(std::size_t order, std::size_t mode, std::span<const std::size_t> internal_ranks,
                   double stddev, std::mt19937_64& rng);

/// Same tensor, every core except the last left-orthonormal.
TTTensor left_orthogonalize(TTTensor tt);

} // namespace ltts
