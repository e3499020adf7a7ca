#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ltts/errors.hpp"

namespace ltts {

/// Default upper bound on the number of entries a DenseTensor may hold.
inline constexpr std::size_t kDefaultDenseCap = 10'000'000;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Multi-index alpha in N_0^N.
class MultiIndex {
public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t order) : alpha_(order, 0) {}
  explicit MultiIndex(std::vector<int> alpha);
  MultiIndex(std::initializer_list<int> alpha) : MultiIndex(std::vector<int>(alpha)) {}

  std::size_t order() const noexcept { return alpha_.size(); }
  int operator[](std::size_t i) const { return alpha_[i]; }
  int& operator[](std::size_t i) { return alpha_[i]; }

  /// |alpha| = sum of entries.
  int total_degree() const noexcept;
  /// alpha! = prod alpha_i!.
  double factorial() const noexcept;
  int max_entry() const noexcept;
  bool is_zero() const noexcept { return total_degree() == 0; }

  const std::vector<int>& values() const noexcept { return alpha_; }
  std::span<const int> span() const noexcept { return alpha_; }

  auto operator<=>(const MultiIndex&) const = default;

private:
  std::vector<int> alpha_;
};

/// Unit multi-index e_i of the given order.
MultiIndex unit_index(std::size_t order, std::size_t i);

/// Order-N real tensor, row-major with the last index fastest.
class DenseTensor {
public:
  DenseTensor() = default;
  /// Zero tensor of the given shape; throws CapacityError past `cap` entries.
  explicit DenseTensor(std::vector<std::size_t> shape, std::size_t cap = kDefaultDenseCap);
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data,
              std::size_t cap = kDefaultDenseCap);

  /// Hypercube {0..p}^N.
  static DenseTensor box(std::size_t order, int degree, std::size_t cap = kDefaultDenseCap);

  std::size_t order() const noexcept { return shape_.size(); }
  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  std::size_t offset(const MultiIndex& alpha) const;
  MultiIndex index_of(std::size_t offset) const;

  double operator[](const MultiIndex& alpha) const { return data_[offset(alpha)]; }
  double& operator[](const MultiIndex& alpha) { return data_[offset(alpha)]; }

  bool operator==(const DenseTensor&) const = default;

private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// All alpha with alpha_i in {0..p} and |alpha| <= p, lexicographic order.
std::vector<MultiIndex> simplex_indices(std::size_t order, int degree);

/// Every alpha in {0..p}^N in row-major (lexicographic) order.
std::vector<MultiIndex> box_indices(std::size_t order, int degree);

/// C(N+m-1, m): number of alpha in N_0^N with |alpha| = m. Throws OverflowError.
std::uint64_t count_degree_exactly(std::size_t order, int degree);

/// Checked binomial coefficient C(n, k). Throws OverflowError.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// k-th unfolding as a zero-copy (prod_{i<k} n_i) x (prod_{i>=k} n_i) view, 1 <= k <= N-1.
Eigen::Map<const RowMatrix> unfold(const DenseTensor& tensor, std::size_t k);

/// Inverse of unfold: reshape a matrix back to the given shape.
DenseTensor fold(const RowMatrix& matrix, std::vector<std::size_t> shape);

double frobenius_norm(const DenseTensor& tensor) noexcept;

/// Frobenius inner product; throws ShapeError on mismatch.
double inner_product(const DenseTensor& a, const DenseTensor& b);

} // namespace ltts
