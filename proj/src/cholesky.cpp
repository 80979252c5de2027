#include "splice/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "splice/error.hpp"
#include "splice/estimator.hpp"

namespace splice::cholesky {

namespace {

constexpr double kGridTol = 1e-12;
constexpr double kResidualFloor = 1e-12;

DenseMatrix permute_columns(const DenseMatrix& x, const Ordering& ordering)
{
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(ordering[i]));
    }
    return out;
}

// Residual variances of the triangular regressions encoded in u.
Vector residual_d2(const DenseMatrix& x, const DenseMatrix& u)
{
    const DenseMatrix r = x * u;
    const auto n = static_cast<double>(x.rows());
    Vector d2(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double marginal = x.col(j).squaredNorm() / n;
        d2[j] = std::max(r.col(j).squaredNorm() / n, kResidualFloor * marginal);
    }
    return d2;
}

std::size_t beta_nonzeros(const DenseMatrix& u)
{
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        for (Eigen::Index k = 0; k < j; ++k) {
            if (u(k, j) != 0.0) {
                ++count;
            }
        }
    }
    return count;
}

} // namespace

Ordering natural_ordering(std::size_t p)
{
    Ordering o(p);
    std::iota(o.begin(), o.end(), std::size_t{0});
    return o;
}

Ordering inverted_ordering(std::size_t p)
{
    Ordering o = natural_ordering(p);
    std::reverse(o.begin(), o.end());
    return o;
}

void validate_ordering(const Ordering& ordering, std::size_t p)
{
    if (ordering.size() != p) {
        fail(ErrorKind::dimension, "ordering: length must equal p");
    }
    std::vector<char> seen(p, 0);
    for (const auto i : ordering) {
        if (i >= p || seen[i]) {
            fail(ErrorKind::input, "ordering: not a permutation");
        }
        seen[i] = 1;
    }
}

std::vector<homotopy::LassoPath> trace_subpaths(const DenseMatrix& x, const homotopy::StoppingRule& stop)
{
    const auto p = static_cast<std::size_t>(x.cols());
    if (p < 2 || x.rows() < 2) {
        fail(ErrorKind::dimension, "trace_subpaths: need n >= 2 and p >= 2");
    }
    std::vector<homotopy::LassoPath> out;
    out.reserve(p - 1);
    for (std::size_t j = 1; j < p; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        homotopy::WeightedLassoProblem prob{linalg::SparseColumnMatrix::from_dense(x.leftCols(jj)), x.col(jj),
                                            Vector::Ones(jj)};
        out.push_back(homotopy::trace_path(prob, stop));
    }
    return out;
}

CholeskyPath merge_subpaths(std::vector<homotopy::LassoPath> subpaths, const Ordering& ordering,
                            const Vector& d2_permuted)
{
    const std::size_t p = ordering.size();
    if (subpaths.size() + 1 != p || static_cast<std::size_t>(d2_permuted.size()) != p) {
        fail(ErrorKind::dimension, "merge_subpaths: inconsistent sizes");
    }
    if (d2_permuted.minCoeff() <= 0.0 || !d2_permuted.allFinite()) {
        fail(ErrorKind::domain, "merge_subpaths: d2 must be strictly positive");
    }
    CholeskyPath path;
    path.ordering = ordering;
    path.d2 = d2_permuted;
    path.subpaths = std::move(subpaths);

    std::vector<double> grid;
    for (std::size_t j = 1; j < p; ++j) {
        const double dj = d2_permuted[static_cast<Eigen::Index>(j)];
        for (const auto& bp : path.subpaths[j - 1].breakpoints) {
            grid.push_back(bp.lambda / dj);
        }
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    std::vector<double> unique;
    for (const double l : grid) {
        if (unique.empty() || unique.back() - l > kGridTol * std::max(unique.front(), 1e-300)) {
            unique.push_back(l);
        }
    }
    path.merged_breakpoints.reserve(unique.size());
    for (const double l : unique) {
        path.merged_breakpoints.push_back({l, path.u_at(l)});
    }
    return path;
}

DenseMatrix CholeskyPath::u_at(double lambda) const
{
    const auto pp = static_cast<Eigen::Index>(p());
    DenseMatrix u = DenseMatrix::Identity(pp, pp);
    for (std::size_t j = 1; j < p(); ++j) {
        const auto& sub = subpaths[j - 1];
        // Subpaths that stopped early hold their last coefficients below it.
        const double lam = std::max(lambda * d2[static_cast<Eigen::Index>(j)], sub.breakpoints.back().lambda);
        const auto coef = homotopy::interpolate(sub, lam);
        for (std::size_t k = 0; k < coef.indices.size(); ++k) {
            u(static_cast<Eigen::Index>(coef.indices[k]), static_cast<Eigen::Index>(j)) = -coef.values[k];
        }
    }
    return u;
}

CholeskyPath fit_cholesky_path(const DenseMatrix& x, const Ordering& ordering, const Vector& d2,
                               const homotopy::StoppingRule& stop)
{
    const auto p = static_cast<std::size_t>(x.cols());
    validate_ordering(ordering, p);
    if (static_cast<std::size_t>(d2.size()) != p) {
        fail(ErrorKind::dimension, "fit_cholesky_path: d2 length must equal p");
    }
    const DenseMatrix xp = permute_columns(x, ordering);
    return merge_subpaths(trace_subpaths(xp, stop), ordering, permute(d2, ordering));
}

DenseMatrix precision_from_cholesky(const DenseMatrix& u, const Vector& d2)
{
    const auto p = u.rows();
    if (u.cols() != p || d2.size() != p) {
        fail(ErrorKind::dimension, "precision_from_cholesky: dimension mismatch");
    }
    if (!d2.allFinite() || d2.minCoeff() <= 0.0) {
        fail(ErrorKind::domain, "precision_from_cholesky: d2 must be strictly positive");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (u(j, j) != 1.0) {
            fail(ErrorKind::input, "precision_from_cholesky: u must have a unit diagonal");
        }
        for (Eigen::Index i = j + 1; i < p; ++i) {
            if (u(i, j) != 0.0) {
                fail(ErrorKind::input, "precision_from_cholesky: u must be upper triangular");
            }
        }
    }
    const DenseMatrix c = u * d2.cwiseInverse().asDiagonal() * u.transpose();
    return 0.5 * (c + c.transpose());
}

DenseMatrix unpermute(const DenseMatrix& m, const Ordering& ordering)
{
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        for (std::size_t j = 0; j < ordering.size(); ++j) {
            out(static_cast<Eigen::Index>(ordering[i]), static_cast<Eigen::Index>(ordering[j])) =
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    return out;
}

Vector permute(const Vector& v, const Ordering& ordering)
{
    Vector out(v.size());
    for (std::size_t i = 0; i < ordering.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(ordering[i])];
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> structural_support(const DenseMatrix& u, const Ordering& ordering)
{
    const auto p = u.rows();
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            bool nz = false;
            for (Eigen::Index k = j; k < p && !nz; ++k) {
                nz = u(i, k) != 0.0 && u(j, k) != 0.0;
            }
            if (nz) {
                auto a = ordering[static_cast<std::size_t>(i)];
                auto b = ordering[static_cast<std::size_t>(j)];
                out.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double merged_objective(const DenseMatrix& x, const DenseMatrix& u, const Vector& d2, double lambda)
{
    const DenseMatrix r = x * u;
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        s += r.col(j).squaredNorm() / d2[j];
        for (Eigen::Index k = 0; k < j; ++k) {
            s += lambda * std::abs(u(k, j));
        }
    }
    return s;
}

CholeskyFit fit_cholesky(const DenseMatrix& x_in, const Ordering& ordering, const CholeskyOptions& opts)
{
    const auto n = static_cast<std::size_t>(x_in.rows());
    const auto p = static_cast<std::size_t>(x_in.cols());
    validate_ordering(ordering, p);
    if (n < 2 || p < 2) {
        fail(ErrorKind::dimension, "fit_cholesky: need n >= 2 and p >= 2");
    }
    const DenseMatrix x = permute_columns(opts.center ? estimator::center_columns(x_in) : x_in, ordering);
    const DenseMatrix gram = x.transpose() * x;
    const auto nd = static_cast<double>(n);
    Vector d2 = gram.diagonal() / nd;
    if (d2.minCoeff() <= 0.0) {
        fail(ErrorKind::degenerate_column, "fit_cholesky: constant column");
    }

    const std::vector<homotopy::LassoPath> subpaths = trace_subpaths(x, opts.stop);
    CholeskyFit fit;
    double frozen = 0.0;
    for (std::size_t it = 1; it <= std::max<std::size_t>(opts.max_iter, 1); ++it) {
        CholeskyPath path = merge_subpaths(subpaths, ordering, d2);
        DenseMatrix u_sel;
        Vector d2_sel;
        if (it <= opts.warmup || opts.warmup == 0) {
            std::vector<selection::Candidate> cands;
            std::vector<Vector> d2s;
            cands.reserve(path.merged_breakpoints.size());
            for (const auto& bp : path.merged_breakpoints) {
                Vector dk = residual_d2(x, bp.u);
                const DenseMatrix c = precision_from_cholesky(bp.u, dk);
                cands.push_back({bp.lambda, static_cast<double>(p + beta_nonzeros(bp.u)),
                                 selection::gaussian_neg_loglik_gram(gram, n, c)});
                d2s.push_back(std::move(dk));
            }
            const auto sel = selection::select_candidate(cands, opts.criterion, nd, opts.aicc_mode);
            u_sel = path.merged_breakpoints[sel.index].u;
            d2_sel = d2s[sel.index];
            fit.lambda = sel.lambda;
            fit.df = sel.df;
            fit.criterion_value = sel.criterion_value;
            frozen = sel.lambda;
        } else {
            u_sel = path.u_at(frozen);
            d2_sel = residual_d2(x, u_sel);
            fit.lambda = frozen;
            fit.df = static_cast<double>(p + beta_nonzeros(u_sel));
            fit.criterion_value =
                selection::gaussian_neg_loglik_gram(gram, n, precision_from_cholesky(u_sel, d2_sel));
            if (const auto k = selection::penalty(opts.criterion, nd, fit.df, opts.aicc_mode)) {
                fit.criterion_value += *k;
            }
        }
        const double change = (d2_sel.array() / d2.array()).log().abs().maxCoeff() / 2.0;
        fit.path = std::move(path);
        fit.u = u_sel;
        fit.d2 = d2_sel;
        fit.iterations_used = it;
        d2 = d2_sel;
        if (change < opts.tol) {
            fit.converged = true;
            break;
        }
    }
    fit.c = unpermute(precision_from_cholesky(fit.u, fit.d2), ordering);
    return fit;
}

} // namespace splice::cholesky
