#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace splice::linalg {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetry tolerance relative to the largest absolute entry.
inline constexpr double kSymmetryTol = 1e-10;
/// Cholesky pivots at or below this fraction of the largest diagonal entry
/// are treated as singular.
inline constexpr double kPivotTol = 1e-12;

/// Diagonal matrix stored by its diagonal.
class DiagonalMatrix
{
public:
    DiagonalMatrix() = default;
    explicit DiagonalMatrix(Vector diag);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(diag_.size()); }
    const Vector& diag() const noexcept { return diag_; }
    double operator[](std::size_t i) const { return diag_[static_cast<Eigen::Index>(i)]; }

    DenseMatrix dense() const { return diag_.asDiagonal(); }
    bool strictly_positive() const noexcept;

private:
    Vector diag_;
};

/// Column-oriented sparse matrix. Each column keeps strictly increasing row
/// indices paired with nonzero values.
class SparseColumnMatrix
{
public:
    struct Entry
    {
        std::size_t row;
        double value;
    };

    SparseColumnMatrix(std::size_t rows, std::size_t cols);

    static SparseColumnMatrix from_dense(const DenseMatrix& m);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return columns_.size(); }
    std::size_t nonzeros() const noexcept;

    /// Replaces column `col`. Entries must have strictly increasing rows;
    /// zero values are dropped.
    void set_column(std::size_t col, std::vector<Entry> entries);

    std::span<const Entry> column(std::size_t col) const { return columns_.at(col); }

    double column_dot(std::size_t col, const Vector& v) const;
    double column_dot(std::size_t a, std::size_t b) const;
    double column_squared_norm(std::size_t col) const;
    /// out += scale * column(col)
    void axpy_column(std::size_t col, double scale, Vector& out) const;

    DenseMatrix dense() const;

private:
    std::size_t rows_;
    std::vector<std::vector<Entry>> columns_;
};

bool is_symmetric(const DenseMatrix& m, double rel_tol = kSymmetryTol);

/// Validates symmetry within tolerance and returns (m + m')/2.
DenseMatrix symmetrized(const DenseMatrix& m);

/// Eigenvalues of a symmetric matrix in ascending order.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& m);

double min_eigenvalue(const DenseMatrix& m);

/// Lower-triangular Cholesky factor with the pivot threshold above.
class Cholesky
{
public:
    explicit Cholesky(const DenseMatrix& a);

    const DenseMatrix& lower() const noexcept { return l_; }
    DenseMatrix solve(const DenseMatrix& b) const;
    Vector solve(const Vector& b) const;
    double log_det() const;

private:
    DenseMatrix l_;
};

/// Attempts a Cholesky factorization without throwing.
bool try_cholesky(const DenseMatrix& a, DenseMatrix& lower);

DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b);
double log_det_spd(const DenseMatrix& a);
DenseMatrix inverse_spd(const DenseMatrix& a);

} // namespace splice::linalg
