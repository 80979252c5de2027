#include "splice/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splice/error.hpp"

namespace splice::ridge {

namespace {

using estimator::PairIndex;

void require_square_gram(const DenseMatrix& gram)
{
    if (gram.rows() != gram.cols() || gram.rows() < 2) {
        fail(ErrorKind::dimension, "ridge: Gram matrix must be square with p >= 2");
    }
    if (!gram.allFinite()) {
        fail(ErrorKind::input, "ridge: non-finite Gram matrix");
    }
}

Vector upper_of(const DenseMatrix& m, const PairIndex& pairs)
{
    Vector v(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t c = 0; c < pairs.size(); ++c) {
        const auto [j, k] = pairs.pair(c);
        v[static_cast<Eigen::Index>(c)] = m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }
    return v;
}

DenseMatrix symmetric_from(const Vector& v, const PairIndex& pairs)
{
    const auto p = static_cast<Eigen::Index>(pairs.p());
    DenseMatrix m = DenseMatrix::Zero(p, p);
    for (std::size_t c = 0; c < pairs.size(); ++c) {
        const auto [j, k] = pairs.pair(c);
        m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = v[static_cast<Eigen::Index>(c)];
        m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = v[static_cast<Eigen::Index>(c)];
    }
    return m;
}

// Z'Z b equals the upper triangle of G B~ + B~ G.
Vector apply_system(const DenseMatrix& gram, const PairIndex& pairs, const Vector& v, double shift)
{
    const DenseMatrix bt = symmetric_from(v, pairs);
    const DenseMatrix gb = gram * bt;
    return upper_of(gb + gb.transpose(), pairs) + shift * v;
}

Vector conjugate_gradient(const DenseMatrix& gram, const PairIndex& pairs, const Vector& rhs, double shift)
{
    Vector x = Vector::Zero(rhs.size());
    Vector r = rhs;
    Vector dir = r;
    double rr = r.squaredNorm();
    const double stop = 1e-28 * std::max(1.0, rhs.squaredNorm());
    const std::size_t max_iter = 10 * static_cast<std::size_t>(rhs.size()) + 100;
    for (std::size_t it = 0; it < max_iter && rr > stop; ++it) {
        const Vector ad = apply_system(gram, pairs, dir, shift);
        const double alpha = rr / dir.dot(ad);
        x += alpha * dir;
        r -= alpha * ad;
        const double rr_new = r.squaredNorm();
        dir = r + (rr_new / rr) * dir;
        rr = rr_new;
    }
    return x;
}

} // namespace

DenseMatrix merged_gram(const DenseMatrix& gram)
{
    require_square_gram(gram);
    const PairIndex pairs(static_cast<std::size_t>(gram.rows()));
    const auto q = static_cast<Eigen::Index>(pairs.size());
    DenseMatrix a = DenseMatrix::Zero(q, q);
    for (Eigen::Index c1 = 0; c1 < q; ++c1) {
        const auto [j, k] = pairs.pair(static_cast<std::size_t>(c1));
        for (Eigen::Index c2 = c1; c2 < q; ++c2) {
            const auto [l, m] = pairs.pair(static_cast<std::size_t>(c2));
            double v = 0.0;
            if (c1 == c2) {
                v = gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) +
                    gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
            } else if (j == l) {
                v = gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
            } else if (j == m) {
                v = gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
            } else if (k == l) {
                v = gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m));
            } else if (k == m) {
                v = gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l));
            }
            a(c1, c2) = v;
            a(c2, c1) = v;
        }
    }
    return a;
}

Vector merged_rhs(const DenseMatrix& gram)
{
    require_square_gram(gram);
    const PairIndex pairs(static_cast<std::size_t>(gram.rows()));
    return 2.0 * upper_of(gram, pairs);
}

RidgeEstimate fit_ridge_gram(const DenseMatrix& gram, double lambda2)
{
    if (!(lambda2 > 0.0) || !std::isfinite(lambda2)) {
        fail(ErrorKind::domain, "fit_ridge: lambda2 must be positive and finite");
    }
    require_square_gram(gram);
    const auto p = static_cast<std::size_t>(gram.rows());
    const PairIndex pairs(p);
    const Vector rhs = merged_rhs(gram);
    Vector sol;
    RidgeEstimate est;
    if (p <= kDirectSolveMaxP) {
        DenseMatrix a = merged_gram(gram);
        a.diagonal().array() += 2.0 * lambda2;
        const linalg::Cholesky chol(a);
        sol = chol.solve(rhs);
        // tr[(A + 2 l2 I)^{-1} A] = q - 2 l2 tr[(A + 2 l2 I)^{-1}]
        const DenseMatrix linv = chol.lower().triangularView<Eigen::Lower>().solve(
            DenseMatrix::Identity(a.rows(), a.cols()));
        est.effective_df = static_cast<double>(a.rows()) - 2.0 * lambda2 * linv.squaredNorm();
    } else {
        sol = conjugate_gradient(gram, pairs, rhs, 2.0 * lambda2);
        est.effective_df = std::numeric_limits<double>::quiet_NaN();
    }
    est.btilde = symmetric_from(sol, pairs);
    est.lambda2 = lambda2;
    return est;
}

RidgeEstimate fit_ridge(const DenseMatrix& xtilde, double lambda2)
{
    if (!xtilde.allFinite()) {
        fail(ErrorKind::input, "fit_ridge: non-finite data");
    }
    return fit_ridge_gram(xtilde.transpose() * xtilde, lambda2);
}

RidgeKkt ridge_kkt(const DenseMatrix& gram, const DenseMatrix& btilde, double lambda2)
{
    require_square_gram(gram);
    const auto p = gram.rows();
    if (btilde.rows() != p || btilde.cols() != p) {
        fail(ErrorKind::dimension, "ridge_kkt: dimension mismatch");
    }
    DenseMatrix v = gram;
    v.diagonal().array() += lambda2;
    const DenseMatrix m = v * (DenseMatrix::Identity(p, p) - btilde);
    RidgeKkt out;
    out.theta = -m.diagonal();
    out.omega = -0.5 * (m - m.transpose());
    DenseMatrix rest = m;
    rest.diagonal().setZero();
    rest += out.omega;
    out.residual = rest.cwiseAbs().maxCoeff();
    return out;
}

bool verify_psd_lemma(const DenseMatrix& u, const DenseMatrix& v, const DenseMatrix& w)
{
    const auto p = u.rows();
    if (u.cols() != p || v.rows() != p || v.cols() != p || w.rows() != p || w.cols() != p) {
        fail(ErrorKind::dimension, "verify_psd_lemma: dimension mismatch");
    }
    const DenseMatrix us = linalg::symmetrized(u);
    const DenseMatrix vs = linalg::symmetrized(v);
    const DenseMatrix ws = linalg::symmetrized(w);
    DenseMatrix lower;
    if (!linalg::try_cholesky(vs, lower)) {
        fail(ErrorKind::precondition, "verify_psd_lemma: v is not positive definite");
    }
    const double wscale = std::max(1.0, ws.cwiseAbs().maxCoeff());
    if (linalg::min_eigenvalue(ws) < -1e-9 * wscale) {
        fail(ErrorKind::precondition, "verify_psd_lemma: w is not positive semi-definite");
    }
    const DenseMatrix gap = us * vs + vs * us - ws;
    if (gap.cwiseAbs().maxCoeff() > 1e-8 * wscale) {
        fail(ErrorKind::precondition, "verify_psd_lemma: uv + vu != w");
    }
    return linalg::min_eigenvalue(us) >= -1e-9;
}

std::vector<double> default_lambda2_grid(const DenseMatrix& gram, std::size_t points, double lo, double hi)
{
    require_square_gram(gram);
    if (points < 1 || !(lo > 0.0) || !(hi >= lo)) {
        fail(ErrorKind::input, "default_lambda2_grid: invalid grid specification");
    }
    const double scale = gram.diagonal().mean();
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        grid[i] = scale * std::exp(std::log(hi) + t * (std::log(lo) - std::log(hi)));
    }
    return grid;
}

RidgeGrid fit_ridge_grid(const DenseMatrix& x_in, const RidgeSelectOptions& opts)
{
    const auto n = static_cast<std::size_t>(x_in.rows());
    const auto p = x_in.cols();
    if (n < 2 || p < 2) {
        fail(ErrorKind::dimension, "fit_ridge_grid: need n >= 2 and p >= 2");
    }
    const DenseMatrix x = opts.center ? estimator::center_columns(x_in) : x_in;
    const DenseMatrix gram_x = x.transpose() * x;
    const Vector d2_0 = gram_x.diagonal() / static_cast<double>(n);
    if (d2_0.minCoeff() <= 0.0) {
        fail(ErrorKind::degenerate_column, "fit_ridge_grid: constant column");
    }
    const auto scaled_gram = [&](const Vector& d2) {
        const Vector dinv = d2.array().sqrt().inverse();
        return DenseMatrix(dinv.asDiagonal() * gram_x * dinv.asDiagonal());
    };
    const std::vector<double> grid = default_lambda2_grid(scaled_gram(d2_0), opts.grid_points);

    RidgeGrid out;
    out.n = n;
    for (const double lambda2 : grid) {
        Vector d2 = d2_0;
        RidgeEstimate est;
        DenseMatrix gram;
        for (std::size_t it = 0; it < std::max<std::size_t>(opts.max_iter, 1); ++it) {
            gram = scaled_gram(d2);
            est = fit_ridge_gram(gram, lambda2);
            const Vector d = d2.array().sqrt();
            const DenseMatrix b = d.asDiagonal() * est.btilde * d.cwiseInverse().asDiagonal();
            Vector next(p);
            for (Eigen::Index j = 0; j < p; ++j) {
                Vector r = x.col(j);
                for (Eigen::Index k = 0; k < p; ++k) {
                    if (k != j) {
                        r.noalias() -= b(j, k) * x.col(k);
                    }
                }
                next[j] = std::max(r.squaredNorm() / static_cast<double>(n), 1e-12 * d2_0[j]);
            }
            const double change = (next.array() / d2.array()).log().abs().maxCoeff() / 2.0;
            est.d2 = next;
            d2 = next;
            if (change < opts.tol) {
                break;
            }
        }
        // Effective degrees of freedom of the final linear smoother.
        if (!std::isfinite(est.effective_df)) {
            const DenseMatrix a = merged_gram(gram);
            DenseMatrix shifted = a;
            shifted.diagonal().array() += 2.0 * lambda2;
            est.effective_df = linalg::Cholesky(shifted).solve(a).trace();
        }

        RidgeGridPoint pt;
        pt.lambda2 = lambda2;
        pt.params = estimator::RegressionParams::from_btilde(est.btilde, est.d2);
        pt.df = static_cast<double>(p) + est.effective_df;
        pt.nll = selection::exact_neg_loglik_gram(gram_x, n, est.btilde, est.d2);
        out.points.push_back(std::move(pt));
    }
    return out;
}

RidgeSelection select_ridge(const RidgeGrid& grid, selection::Criterion criterion, selection::AiccMode mode)
{
    std::vector<selection::Candidate> cands;
    cands.reserve(grid.points.size());
    for (const auto& pt : grid.points) {
        cands.push_back({pt.lambda2, pt.df, pt.nll});
    }
    const auto rec = selection::select_candidate(cands, criterion, static_cast<double>(grid.n), mode);
    RidgeSelection out;
    out.point = grid.points[rec.index];
    out.criterion_value = rec.criterion_value;
    out.c = estimator::precision_from_btilde(out.point.params.btilde(), out.point.params.d2);
    return out;
}

} // namespace splice::ridge
