#include "vpgraph/matrix.hpp"

#include <cmath>
#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vpgraph/error.hpp"
#include "vpgraph/io.hpp"

namespace vpgraph {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_sq() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto crow = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: shape mismatch");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: shape mismatch");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::uint32_t> col_idx, std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || col_idx_.size() != values_.size() || row_ptr_.back() != col_idx_.size())
    throw std::invalid_argument("SparseMatrix: inconsistent CSR arrays");
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row >= rows || t.col >= cols) throw std::invalid_argument("from_triplets: index out of range");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::uint32_t> cols_out;
  std::vector<double> vals;
  cols_out.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      vals.back() += t.value;
      continue;
    }
    cols_out.push_back(t.col);
    vals.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(cols_out), std::move(vals));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> rp(n + 1);
  std::vector<std::uint32_t> ci(n);
  for (std::size_t i = 0; i <= n; ++i) rp[i] = i;
  for (std::size_t i = 0; i < n; ++i) ci[i] = static_cast<std::uint32_t>(i);
  return SparseMatrix(n, n, std::move(rp), std::move(ci), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const Matrix& m, double drop_tol) {
  std::vector<std::size_t> rp(m.rows() + 1, 0);
  std::vector<std::uint32_t> ci;
  std::vector<double> v;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double x = m(i, j);
      if (x == 0.0 || (drop_tol > 0.0 && std::abs(x) <= drop_tol)) continue;
      ci.push_back(static_cast<std::uint32_t>(j));
      v.push_back(x);
    }
    rp[i + 1] = ci.size();
  }
  return SparseMatrix(m.rows(), m.cols(), std::move(rp), std::move(ci), std::move(v));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  auto cols = row_cols(i);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(j));
  if (it == cols.end() || *it != j) return 0.0;
  return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

Matrix SparseMatrix::to_dense() const {
  Matrix d(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) += values_[p];
  return d;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> rp(cols_ + 1, 0);
  for (auto c : col_idx_) ++rp[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) rp[j + 1] += rp[j];
  std::vector<std::size_t> cursor(rp.begin(), rp.end() - 1);
  std::vector<std::uint32_t> ci(nnz());
  std::vector<double> v(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t dst = cursor[col_idx_[p]]++;
      ci[dst] = static_cast<std::uint32_t>(i);
      v[dst] = values_[p];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(rp), std::move(ci), std::move(v));
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  return transpose() == *this;
}

Matrix SparseMatrix::multiply(const Matrix& b) const {
  if (cols_ != b.rows()) throw std::invalid_argument("SparseMatrix::multiply: shape mismatch");
  Matrix c(rows_, b.cols());
  const std::size_t w = b.cols();
  for (std::size_t i = 0; i < rows_; ++i) {
    double* crow = c.row(i).data();
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const double a = values_[p];
      const double* brow = b.row(col_idx_[p]).data();
      for (std::size_t j = 0; j < w; ++j) crow[j] += a * brow[j];
    }
  }
  return c;
}

Matrix SparseMatrix::transpose_multiply(const Matrix& b) const {
  if (rows_ != b.rows()) throw std::invalid_argument("SparseMatrix::transpose_multiply: shape mismatch");
  Matrix c(cols_, b.cols());
  const std::size_t w = b.cols();
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* brow = b.row(i).data();
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const double a = values_[p];
      double* crow = c.row(col_idx_[p]).data();
      for (std::size_t j = 0; j < w; ++j) crow[j] += a * brow[j];
    }
  }
  return c;
}

void SparseMatrix::multiply_vector(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw std::invalid_argument("multiply_vector: shape mismatch");
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> s(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s[i] += values_[p];
  return s;
}

void write_triplets(std::ostream& out, const SparseMatrix& m) {
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto cols = m.row_cols(i);
    auto vals = m.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) out << i << ' ' << cols[k] << ' ' << vals[k] << '\n';
  }
}

void write_triplets_file(const std::string& path, const SparseMatrix& m) {
  std::ostringstream ss;
  write_triplets(ss, m);
  atomic_write(path, ss.str());
}

SparseMatrix read_triplets(std::istream& in) {
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw InputError("triplets: missing 'rows cols nnz' header");
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i, j;
    double v;
    if (!(in >> i >> j >> v)) throw InputError("triplets: expected " + std::to_string(nnz) + " entries");
    if (i >= rows || j >= cols) throw InputError("triplets: index out of range");
    t.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), v});
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

}  // namespace vpgraph
