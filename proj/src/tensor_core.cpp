#include "ltts/tensor_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ltts {

MultiIndex::MultiIndex(std::vector<int> alpha) : alpha_(std::move(alpha)) {
  for (int a : alpha_) {
    if (a < 0) throw DomainError("multi-index entries must be nonnegative");
  }
}

int MultiIndex::total_degree() const noexcept {
  return std::accumulate(alpha_.begin(), alpha_.end(), 0);
}

double MultiIndex::factorial() const noexcept {
  double f = 1.0;
  for (int a : alpha_) {
    for (int j = 2; j <= a; ++j) f *= j;
  }
  return f;
}

int MultiIndex::max_entry() const noexcept {
  int m = 0;
  for (int a : alpha_) m = std::max(m, a);
  return m;
}

MultiIndex unit_index(std::size_t order, std::size_t i) {
  MultiIndex e(order);
  e[i] = 1;
  return e;
}

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape, std::size_t cap) {
  std::size_t n = 1;
  for (std::size_t s : shape) {
    if (s == 0) throw ShapeError("mode sizes must be >= 1");
    if (n > cap / s) {
      throw CapacityError("dense tensor would exceed the entry cap of " + std::to_string(cap));
    }
    n *= s;
  }
  if (n > cap) throw CapacityError("dense tensor would exceed the entry cap of " + std::to_string(cap));
  return n;
}

} // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::size_t cap) : shape_(std::move(shape)) {
  if (shape_.empty()) throw ShapeError("tensor order must be >= 1");
  data_.assign(checked_product(shape_, cap), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data, std::size_t cap)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw ShapeError("tensor order must be >= 1");
  if (checked_product(shape_, cap) != data_.size()) {
    throw ShapeError("data length does not match the product of the shape");
  }
}

DenseTensor DenseTensor::box(std::size_t order, int degree, std::size_t cap) {
  if (degree < 0) throw DomainError("degree must be >= 0");
  return DenseTensor(std::vector<std::size_t>(order, static_cast<std::size_t>(degree) + 1), cap);
}

std::size_t DenseTensor::offset(const MultiIndex& alpha) const {
  if (alpha.order() != shape_.size()) throw ShapeError("multi-index order does not match tensor order");
  std::size_t off = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    const auto a = static_cast<std::size_t>(alpha[i]);
    if (a >= shape_[i]) throw ShapeError("multi-index entry out of range");
    off = off * shape_[i] + a;
  }
  return off;
}

MultiIndex DenseTensor::index_of(std::size_t offset) const {
  MultiIndex alpha(shape_.size());
  for (std::size_t i = shape_.size(); i-- > 0;) {
    alpha[i] = static_cast<int>(offset % shape_[i]);
    offset /= shape_[i];
  }
  return alpha;
}

namespace {

void enumerate_simplex(std::size_t pos, int remaining, MultiIndex& current, std::vector<MultiIndex>& out) {
  if (pos == current.order()) {
    out.push_back(current);
    return;
  }
  for (int a = 0; a <= remaining; ++a) {
    current[pos] = a;
    enumerate_simplex(pos + 1, remaining - a, current, out);
  }
  current[pos] = 0;
}

} // namespace

std::vector<MultiIndex> simplex_indices(std::size_t order, int degree) {
  if (order == 0) throw ShapeError("order must be >= 1");
  if (degree < 0) throw DomainError("degree must be >= 0");
  std::vector<MultiIndex> out;
  out.reserve(binomial(order + static_cast<std::uint64_t>(degree), static_cast<std::uint64_t>(degree)));
  MultiIndex current(order);
  enumerate_simplex(0, degree, current, out);
  return out;
}

std::vector<MultiIndex> box_indices(std::size_t order, int degree) {
  const DenseTensor shape_only = DenseTensor::box(order, degree);
  std::vector<MultiIndex> out;
  out.reserve(shape_only.size());
  for (std::size_t off = 0; off < shape_only.size(); ++off) out.push_back(shape_only.index_of(off));
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t j = 1; j <= k; ++j) {
    // result * (n - k + j) / j stays exact because C(n-k+j, j) is an integer.
    const std::uint64_t factor = n - k + j;
    const std::uint64_t g = std::gcd(result, j);
    const std::uint64_t reduced = result / g;
    const std::uint64_t factor_reduced = factor / (j / g);
    if (factor_reduced != 0 && reduced > std::numeric_limits<std::uint64_t>::max() / factor_reduced) {
      throw OverflowError("binomial coefficient C(" + std::to_string(n) + ", " + std::to_string(k) +
                          ") overflows 64 bits");
    }
    result = reduced * factor_reduced;
  }
  return result;
}

std::uint64_t count_degree_exactly(std::size_t order, int degree) {
  if (order == 0) throw ShapeError("order must be >= 1");
  if (degree < 0) throw DomainError("degree must be >= 0");
  return binomial(order + static_cast<std::uint64_t>(degree) - 1, static_cast<std::uint64_t>(degree));
}

Eigen::Map<const RowMatrix> unfold(const DenseTensor& tensor, std::size_t k) {
  const auto& shape = tensor.shape();
  if (k < 1 || k >= shape.size()) {
    throw ShapeError("unfolding split " + std::to_string(k) + " out of range [1, " +
                     std::to_string(shape.size() - 1) + "]");
  }
  std::size_t rows = 1;
  for (std::size_t i = 0; i < k; ++i) rows *= shape[i];
  const std::size_t cols = tensor.size() / rows;
  return {tensor.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

DenseTensor fold(const RowMatrix& matrix, std::vector<std::size_t> shape) {
  std::vector<double> data(matrix.data(), matrix.data() + matrix.size());
  return DenseTensor(std::move(shape), std::move(data));
}

double frobenius_norm(const DenseTensor& tensor) noexcept {
  double s = 0.0;
  for (double v : tensor.data()) s += v * v;
  return std::sqrt(s);
}

double inner_product(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("inner product of tensors with different shapes");
  const auto x = a.data();
  const auto y = b.data();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

} // namespace ltts
