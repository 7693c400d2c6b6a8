#include "wemsfem/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

namespace wemsfem {

namespace {

void check_shape(int rows, int cols)
{
    if (rows < 0 || cols < 0) throw DimensionError("SparseMatrix: negative dimension");
}

}  // namespace

SparseMatrix::SparseMatrix(int rows, int cols)
    : rows_(rows), cols_(cols), offsets_(static_cast<std::size_t>(rows) + 1, 0)
{
    check_shape(rows, cols);
}

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<std::size_t> offsets, std::vector<int> columns,
                           std::vector<double> values)
    : rows_(rows), cols_(cols), offsets_(std::move(offsets)), columns_(std::move(columns)), values_(std::move(values))
{
    check_shape(rows, cols);
    if (offsets_.size() != static_cast<std::size_t>(rows) + 1 || offsets_.front() != 0 ||
        offsets_.back() != columns_.size() || columns_.size() != values_.size()) {
        throw AssemblyError("SparseMatrix: inconsistent CSR arrays");
    }
    for (int r = 0; r < rows_; ++r) {
        if (offsets_[r + 1] < offsets_[r]) throw AssemblyError("SparseMatrix: offsets not monotone");
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
            if (columns_[k] < 0 || columns_[k] >= cols_) throw AssemblyError("SparseMatrix: column out of range");
            if (k > offsets_[r] && columns_[k] <= columns_[k - 1]) {
                throw AssemblyError("SparseMatrix: columns not strictly increasing in row " + std::to_string(r));
            }
        }
    }
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::span<const Triplet> triplets)
{
    check_shape(rows, cols);
    std::vector<std::size_t> counts(static_cast<std::size_t>(rows) + 1, 0);
    for (const auto& t : triplets) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
            throw AssemblyError("from_triplets: index (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                ") out of bounds for " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        ++counts[static_cast<std::size_t>(t.row) + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());

    // Bucket by row, then sort and merge each row.
    std::vector<std::pair<int, double>> bucket(triplets.size());
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (const auto& t : triplets) bucket[fill[static_cast<std::size_t>(t.row)]++] = {t.col, t.value};

    std::vector<std::size_t> offsets(static_cast<std::size_t>(rows) + 1, 0);
    std::vector<int> columns;
    std::vector<double> values;
    columns.reserve(triplets.size());
    values.reserve(triplets.size());
    for (int r = 0; r < rows; ++r) {
        auto first = bucket.begin() + static_cast<std::ptrdiff_t>(counts[r]);
        auto last = bucket.begin() + static_cast<std::ptrdiff_t>(counts[r + 1]);
        std::sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto it = first; it != last; ++it) {
            if (!columns.empty() && values.size() > offsets[r] && columns.back() == it->first) {
                values.back() += it->second;
            } else {
                columns.push_back(it->first);
                values.push_back(it->second);
            }
        }
        offsets[r + 1] = columns.size();
    }
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.offsets_ = std::move(offsets);
    m.columns_ = std::move(columns);
    m.values_ = std::move(values);
    return m;
}

SparseMatrix SparseMatrix::identity(int n)
{
    std::vector<std::size_t> offsets(static_cast<std::size_t>(n) + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<int> cols(static_cast<std::size_t>(n));
    std::iota(cols.begin(), cols.end(), 0);
    return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

SparseMatrix SparseMatrix::from_dense(int rows, int cols, std::span<const double> row_major, double drop)
{
    if (row_major.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
        throw DimensionError("from_dense: size mismatch");
    }
    std::vector<std::size_t> offsets(static_cast<std::size_t>(rows) + 1, 0);
    std::vector<int> columns;
    std::vector<double> values;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double v = row_major[static_cast<std::size_t>(i) * cols + j];
            if (std::abs(v) > drop || (drop == 0.0 && v != 0.0)) {
                columns.push_back(j);
                values.push_back(v);
            }
        }
        offsets[i + 1] = columns.size();
    }
    return SparseMatrix(rows, cols, std::move(offsets), std::move(columns), std::move(values));
}

std::ptrdiff_t SparseMatrix::find(int i, int j) const
{
    const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_begin(i));
    const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_end(i));
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return -1;
    return it - columns_.begin();
}

double SparseMatrix::at(int i, int j) const
{
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) throw DimensionError("SparseMatrix::at: index out of range");
    const auto k = find(i, j);
    return k < 0 ? 0.0 : values_[static_cast<std::size_t>(k)];
}

void SparseMatrix::multiply_add(std::span<const double> x, std::span<double> y, double alpha) const
{
    if (x.size() != static_cast<std::size_t>(cols_) || y.size() != static_cast<std::size_t>(rows_)) {
        throw DimensionError("matvec: dimension mismatch (" + std::to_string(rows_) + "x" + std::to_string(cols_) +
                             " times " + std::to_string(x.size()) + ")");
    }
    for (int r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) s += values_[k] * x[columns_[k]];
        y[r] += alpha * s;
    }
}

std::vector<double> SparseMatrix::matvec(std::span<const double> x) const
{
    std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
    multiply_add(x, y);
    return y;
}

std::vector<double> matvec(const SparseMatrix& a, std::span<const double> x) { return a.matvec(x); }

SparseMatrix SparseMatrix::transpose() const
{
    std::vector<std::size_t> offsets(static_cast<std::size_t>(cols_) + 1, 0);
    for (int c : columns_) ++offsets[static_cast<std::size_t>(c) + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    std::vector<int> columns(columns_.size());
    std::vector<double> values(values_.size());
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (int r = 0; r < rows_; ++r) {
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
            const auto pos = fill[static_cast<std::size_t>(columns_[k])]++;
            columns[pos] = r;
            values[pos] = values_[k];
        }
    }
    SparseMatrix t;
    t.rows_ = cols_;
    t.cols_ = rows_;
    t.offsets_ = std::move(offsets);
    t.columns_ = std::move(columns);
    t.values_ = std::move(values);
    return t;
}

std::vector<double> SparseMatrix::to_dense() const
{
    std::vector<double> d(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), 0.0);
    for (int r = 0; r < rows_; ++r) {
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
            d[static_cast<std::size_t>(r) * cols_ + columns_[k]] = values_[k];
        }
    }
    return d;
}

std::vector<double> SparseMatrix::diagonal() const
{
    std::vector<double> d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
    for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = at(r, r);
    return d;
}

SparseMatrix SparseMatrix::submatrix(std::span<const int> row_ids, std::span<const int> col_ids) const
{
    std::vector<int> col_map(static_cast<std::size_t>(cols_), -1);
    for (std::size_t k = 0; k < col_ids.size(); ++k) {
        if (col_ids[k] < 0 || col_ids[k] >= cols_) throw DimensionError("submatrix: column id out of range");
        col_map[static_cast<std::size_t>(col_ids[k])] = static_cast<int>(k);
    }
    const bool sorted = std::is_sorted(col_ids.begin(), col_ids.end());
    std::vector<std::size_t> offsets(row_ids.size() + 1, 0);
    std::vector<int> columns;
    std::vector<double> values;
    std::vector<std::pair<int, double>> row_buf;
    for (std::size_t i = 0; i < row_ids.size(); ++i) {
        const int r = row_ids[i];
        if (r < 0 || r >= rows_) throw DimensionError("submatrix: row id out of range");
        row_buf.clear();
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k) {
            const int c = col_map[static_cast<std::size_t>(columns_[k])];
            if (c >= 0) row_buf.emplace_back(c, values_[k]);
        }
        if (!sorted) std::sort(row_buf.begin(), row_buf.end());
        for (const auto& [c, v] : row_buf) {
            columns.push_back(c);
            values.push_back(v);
        }
        offsets[i + 1] = columns.size();
    }
    return SparseMatrix(static_cast<int>(row_ids.size()), static_cast<int>(col_ids.size()), std::move(offsets),
                        std::move(columns), std::move(values));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b)
{
    if (a.cols() != b.rows()) {
        throw DimensionError("multiply: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                             std::to_string(b.rows()) + ")");
    }
    // Gustavson's row-by-row product with a dense accumulator.
    std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
    std::vector<int> marker(static_cast<std::size_t>(b.cols()), -1);
    std::vector<int> pattern;
    std::vector<std::size_t> offsets(static_cast<std::size_t>(a.rows()) + 1, 0);
    std::vector<int> columns;
    std::vector<double> values;
    const auto& ac = a.columns();
    const auto& av = a.values();
    const auto& bc = b.columns();
    const auto& bv = b.values();
    for (int r = 0; r < a.rows(); ++r) {
        pattern.clear();
        for (std::size_t ka = a.row_begin(r); ka < a.row_end(r); ++ka) {
            const int k = ac[ka];
            const double s = av[ka];
            for (std::size_t kb = b.row_begin(k); kb < b.row_end(k); ++kb) {
                const int c = bc[kb];
                if (marker[c] != r) {
                    marker[c] = r;
                    acc[c] = 0.0;
                    pattern.push_back(c);
                }
                acc[c] += s * bv[kb];
            }
        }
        std::sort(pattern.begin(), pattern.end());
        for (int c : pattern) {
            columns.push_back(c);
            values.push_back(acc[c]);
        }
        offsets[r + 1] = columns.size();
    }
    return SparseMatrix(a.rows(), b.cols(), std::move(offsets), std::move(columns), std::move(values));
}

SparseMatrix triple_product(const SparseMatrix& basis, const SparseMatrix& a)
{
    if (a.rows() != a.cols() || a.cols() != basis.rows()) {
        throw DimensionError("triple_product: operator is " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " but basis has " + std::to_string(basis.rows()) + " rows");
    }
    return multiply(basis.transpose(), multiply(a, basis));
}

void write_matrix_market(const SparseMatrix& a, std::ostream& os)
{
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    os << std::setprecision(17);
    for (int r = 0; r < a.rows(); ++r) {
        for (std::size_t k = a.row_begin(r); k < a.row_end(r); ++k) {
            os << r + 1 << ' ' << a.columns()[k] + 1 << ' ' << a.values()[k] << '\n';
        }
    }
}

}  // namespace wemsfem
