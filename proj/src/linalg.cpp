#include "splice/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splice/error.hpp"

namespace splice {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::asymmetry: return "asymmetry";
    case ErrorKind::singular: return "singular";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_column: return "degenerate_column";
    case ErrorKind::input: return "input";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::inconsistent_params: return "inconsistent_params";
    case ErrorKind::degenerate_residual: return "degenerate_residual";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::no_valid_model: return "no_valid_model";
    case ErrorKind::filesystem: return "filesystem";
    case ErrorKind::config: return "config";
    }
    return "unknown";
}

} // namespace splice

namespace splice::linalg {

namespace {

void require_square(const DenseMatrix& m, const char* what)
{
    if (m.rows() != m.cols()) {
        fail(ErrorKind::dimension, std::string(what) + ": matrix is " + std::to_string(m.rows()) +
                                       "x" + std::to_string(m.cols()) + ", expected square");
    }
}

void require_finite(const DenseMatrix& m, const char* what)
{
    if (!m.allFinite()) {
        fail(ErrorKind::input, std::string(what) + ": non-finite entries");
    }
}

} // namespace

DiagonalMatrix::DiagonalMatrix(Vector diag) : diag_(std::move(diag))
{
    if (!diag_.allFinite()) {
        fail(ErrorKind::input, "DiagonalMatrix: non-finite diagonal");
    }
}

bool DiagonalMatrix::strictly_positive() const noexcept
{
    return diag_.size() == 0 || diag_.minCoeff() > 0.0;
}

SparseColumnMatrix::SparseColumnMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), columns_(cols)
{
}

SparseColumnMatrix SparseColumnMatrix::from_dense(const DenseMatrix& m)
{
    SparseColumnMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::vector<Entry> col;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != 0.0) {
                col.push_back({static_cast<std::size_t>(i), m(i, j)});
            }
        }
        out.columns_[static_cast<std::size_t>(j)] = std::move(col);
    }
    return out;
}

std::size_t SparseColumnMatrix::nonzeros() const noexcept
{
    std::size_t total = 0;
    for (const auto& c : columns_) {
        total += c.size();
    }
    return total;
}

void SparseColumnMatrix::set_column(std::size_t col, std::vector<Entry> entries)
{
    if (col >= columns_.size()) {
        fail(ErrorKind::dimension, "SparseColumnMatrix::set_column: column out of range");
    }
    std::erase_if(entries, [](const Entry& e) { return e.value == 0.0; });
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (entries[k].row >= rows_ || (k > 0 && entries[k].row <= entries[k - 1].row)) {
            fail(ErrorKind::input, "SparseColumnMatrix::set_column: row indices must be strictly "
                                   "increasing and in range");
        }
        if (!std::isfinite(entries[k].value)) {
            fail(ErrorKind::input, "SparseColumnMatrix::set_column: non-finite value");
        }
    }
    columns_[col] = std::move(entries);
}

double SparseColumnMatrix::column_dot(std::size_t col, const Vector& v) const
{
    double s = 0.0;
    for (const auto& e : columns_[col]) {
        s += e.value * v[static_cast<Eigen::Index>(e.row)];
    }
    return s;
}

double SparseColumnMatrix::column_dot(std::size_t a, std::size_t b) const
{
    const auto& ca = columns_[a];
    const auto& cb = columns_[b];
    double s = 0.0;
    std::size_t i = 0;
    std::size_t k = 0;
    while (i < ca.size() && k < cb.size()) {
        if (ca[i].row == cb[k].row) {
            s += ca[i].value * cb[k].value;
            ++i;
            ++k;
        } else if (ca[i].row < cb[k].row) {
            ++i;
        } else {
            ++k;
        }
    }
    return s;
}

double SparseColumnMatrix::column_squared_norm(std::size_t col) const
{
    double s = 0.0;
    for (const auto& e : columns_[col]) {
        s += e.value * e.value;
    }
    return s;
}

void SparseColumnMatrix::axpy_column(std::size_t col, double scale, Vector& out) const
{
    for (const auto& e : columns_[col]) {
        out[static_cast<Eigen::Index>(e.row)] += scale * e.value;
    }
}

DenseMatrix SparseColumnMatrix::dense() const
{
    DenseMatrix m = DenseMatrix::Zero(static_cast<Eigen::Index>(rows_),
                                      static_cast<Eigen::Index>(columns_.size()));
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        for (const auto& e : columns_[j]) {
            m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(j)) = e.value;
        }
    }
    return m;
}

bool is_symmetric(const DenseMatrix& m, double rel_tol)
{
    if (m.rows() != m.cols()) {
        return false;
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

DenseMatrix symmetrized(const DenseMatrix& m)
{
    require_square(m, "symmetrized");
    require_finite(m, "symmetrized");
    if (!is_symmetric(m)) {
        fail(ErrorKind::asymmetry, "matrix is not symmetric within tolerance");
    }
    return 0.5 * (m + m.transpose());
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& m)
{
    const DenseMatrix s = symmetrized(m);
    if (s.rows() == 0) {
        return {};
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        fail(ErrorKind::input, "symmetric_eigenvalues: eigen solver failed to converge");
    }
    const Vector& ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end());
    return out;
}

double min_eigenvalue(const DenseMatrix& m)
{
    const auto ev = symmetric_eigenvalues(m);
    if (ev.empty()) {
        fail(ErrorKind::dimension, "min_eigenvalue: empty matrix");
    }
    return ev.front();
}

bool try_cholesky(const DenseMatrix& a, DenseMatrix& lower)
{
    const Eigen::Index n = a.rows();
    lower = DenseMatrix::Zero(n, n);
    if (n == 0) {
        return true;
    }
    const double threshold = kPivotTol * std::max(a.diagonal().cwiseAbs().maxCoeff(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) {
            pivot -= lower(j, k) * lower(j, k);
        }
        if (!(pivot > threshold) || pivot <= 0.0) {
            return false;
        }
        const double ljj = std::sqrt(pivot);
        lower(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) {
                s -= lower(i, k) * lower(j, k);
            }
            lower(i, j) = s / ljj;
        }
    }
    return true;
}

Cholesky::Cholesky(const DenseMatrix& a)
{
    const DenseMatrix s = symmetrized(a);
    if (!try_cholesky(s, l_)) {
        fail(ErrorKind::singular, "Cholesky: matrix is not positive definite (pivot below tolerance)");
    }
}

DenseMatrix Cholesky::solve(const DenseMatrix& b) const
{
    if (b.rows() != l_.rows()) {
        fail(ErrorKind::dimension, "Cholesky::solve: right-hand side has wrong row count");
    }
    const auto tri = l_.triangularView<Eigen::Lower>();
    DenseMatrix y = tri.solve(b);
    return tri.transpose().solve(y);
}

Vector Cholesky::solve(const Vector& b) const
{
    if (b.size() != l_.rows()) {
        fail(ErrorKind::dimension, "Cholesky::solve: right-hand side has wrong length");
    }
    const auto tri = l_.triangularView<Eigen::Lower>();
    Vector y = tri.solve(b);
    return tri.transpose().solve(y);
}

double Cholesky::log_det() const
{
    return 2.0 * l_.diagonal().array().log().sum();
}

DenseMatrix solve_spd(const DenseMatrix& a, const DenseMatrix& b)
{
    require_square(a, "solve_spd");
    require_finite(b, "solve_spd");
    return Cholesky(a).solve(b);
}

double log_det_spd(const DenseMatrix& a)
{
    require_square(a, "log_det_spd");
    return Cholesky(a).log_det();
}

DenseMatrix inverse_spd(const DenseMatrix& a)
{
    require_square(a, "inverse_spd");
    DenseMatrix inv = Cholesky(a).solve(DenseMatrix(DenseMatrix::Identity(a.rows(), a.cols())));
    return 0.5 * (inv + inv.transpose());
}

} // namespace splice::linalg
