#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace wemsfem {

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Compressed-sparse-row matrix. Column indices are strictly increasing within
/// each row and no duplicates are stored.
class SparseMatrix {
public:
    SparseMatrix() = default;
    /// All-zero matrix.
    SparseMatrix(int rows, int cols);
    /// Takes ownership of finalized CSR arrays; validates ordering.
    SparseMatrix(int rows, int cols, std::vector<std::size_t> offsets, std::vector<int> columns,
                 std::vector<double> values);

    /// Duplicates are summed.
    static SparseMatrix from_triplets(int rows, int cols, std::span<const Triplet> triplets);
    static SparseMatrix identity(int n);
    static SparseMatrix from_dense(int rows, int cols, std::span<const double> row_major, double drop = 0.0);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<int>& columns() const { return columns_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    std::size_t row_begin(int r) const { return offsets_[static_cast<std::size_t>(r)]; }
    std::size_t row_end(int r) const { return offsets_[static_cast<std::size_t>(r) + 1]; }

    /// Entry (i, j), zero when not stored.
    double at(int i, int j) const;
    /// Position of (i, j) in the value array, or -1.
    std::ptrdiff_t find(int i, int j) const;

    std::vector<double> matvec(std::span<const double> x) const;
    /// y += alpha * A x
    void multiply_add(std::span<const double> x, std::span<double> y, double alpha = 1.0) const;

    SparseMatrix transpose() const;
    std::vector<double> to_dense() const;
    std::vector<double> diagonal() const;
    /// Rows and columns selected by index lists (each sorted ascending).
    SparseMatrix submatrix(std::span<const int> row_ids, std::span<const int> col_ids) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<int> columns_;
    std::vector<double> values_;
};

std::vector<double> matvec(const SparseMatrix& a, std::span<const double> x);

/// Sparse product A B.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

/// Galerkin projection Bᵀ A B.
SparseMatrix triple_product(const SparseMatrix& basis, const SparseMatrix& a);

/// Matrix Market coordinate format (general, real).
void write_matrix_market(const SparseMatrix& a, std::ostream& os);

}  // namespace wemsfem
