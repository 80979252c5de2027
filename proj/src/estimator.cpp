#include "splice/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "splice/error.hpp"

namespace splice::estimator {

namespace {

constexpr double kResidualFloor = 1e-12;

void require_positive(const Vector& d2, const char* what)
{
    if (!d2.allFinite() || (d2.size() > 0 && d2.minCoeff() <= 0.0)) {
        fail(ErrorKind::domain, std::string(what) + ": d2 must be finite and strictly positive");
    }
}

// Residual variances with the degenerate-residual floor applied; returns the
// number of floored components.
std::size_t d2_update_floored(const DenseMatrix& x, const DenseMatrix& b, Vector& out)
{
    const auto n = x.rows();
    const auto p = x.cols();
    out.resize(p);
    std::size_t floored = 0;
    Vector r(n);
    for (Eigen::Index j = 0; j < p; ++j) {
        r = x.col(j);
        for (Eigen::Index k = 0; k < p; ++k) {
            if (k != j && b(j, k) != 0.0) {
                r.noalias() -= b(j, k) * x.col(k);
            }
        }
        const double marginal = x.col(j).squaredNorm() / static_cast<double>(n);
        const double value = r.squaredNorm() / static_cast<double>(n);
        const double floor = kResidualFloor * marginal;
        if (value <= floor) {
            out[j] = floor;
            ++floored;
        } else {
            out[j] = value;
        }
    }
    return floored;
}

} // namespace

RegressionParams RegressionParams::from_btilde(const DenseMatrix& btilde, const Vector& d2)
{
    require_positive(d2, "RegressionParams::from_btilde");
    const Vector d = d2.array().sqrt();
    RegressionParams out;
    out.b = d.asDiagonal() * btilde * d.cwiseInverse().asDiagonal();
    out.b.diagonal().setZero();
    out.d2 = d2;
    return out;
}

DenseMatrix RegressionParams::btilde() const
{
    const Vector d = d2.array().sqrt();
    DenseMatrix bt = d.cwiseInverse().asDiagonal() * b * d.asDiagonal();
    return 0.5 * (bt + bt.transpose());
}

double RegressionParams::symmetry_violation() const
{
    double worst = 0.0;
    const auto p = b.rows();
    // Entries far below the largest term are compared against a floor, so
    // rounding noise on structural zeros does not count as a violation.
    double largest = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index k = 0; k < p; ++k) {
            largest = std::max(largest, std::abs(d2[k] * b(j, k)));
        }
    }
    const double floor = std::max(1e-6 * largest, 1e-300);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index k = j + 1; k < p; ++k) {
            const double lhs = d2[k] * b(j, k);
            const double rhs = d2[j] * b(k, j);
            const double scale = std::max({std::abs(lhs), std::abs(rhs), floor});
            if (lhs != rhs) {
                worst = std::max(worst, std::abs(lhs - rhs) / scale);
            }
        }
    }
    return worst;
}

void RegressionParams::validate(double symmetry_tol) const
{
    const auto p = d2.size();
    if (b.rows() != p || b.cols() != p) {
        fail(ErrorKind::dimension, "RegressionParams: b must be p x p with p = len(d2)");
    }
    require_positive(d2, "RegressionParams");
    if (!b.allFinite()) {
        fail(ErrorKind::input, "RegressionParams: non-finite coefficients");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (b(j, j) != 0.0) {
            fail(ErrorKind::inconsistent_params, "RegressionParams: b must have a zero diagonal");
        }
    }
    if (symmetry_violation() > symmetry_tol) {
        fail(ErrorKind::inconsistent_params, "RegressionParams: symmetry constraint d2_k b_jk = d2_j b_kj violated");
    }
}

PartitionParameters partition_parameters(const DenseMatrix& sigma, std::size_t j)
{
    const DenseMatrix s = linalg::symmetrized(sigma);
    const auto p = static_cast<std::size_t>(s.rows());
    if (j >= p) {
        fail(ErrorKind::dimension, "partition_parameters: index out of range");
    }
    std::vector<Eigen::Index> rest;
    for (std::size_t k = 0; k < p; ++k) {
        if (k != j) {
            rest.push_back(static_cast<Eigen::Index>(k));
        }
    }
    const auto m = static_cast<Eigen::Index>(rest.size());
    const auto jj = static_cast<Eigen::Index>(j);
    DenseMatrix srr(m, m);
    Vector srj(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        srj[a] = s(rest[static_cast<std::size_t>(a)], jj);
        for (Eigen::Index c = 0; c < m; ++c) {
            srr(a, c) = s(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(c)]);
        }
    }
    PartitionParameters out;
    if (m == 0) {
        out.beta = Vector();
        out.d2 = s(jj, jj);
    } else {
        // Regression coefficients Sigma_{J*J*}^{-1} Sigma_{J*j}; the block of the
        // inverse is -beta / d2 with this sign choice.
        const Vector coef = linalg::solve_spd(srr, srj);
        out.beta = coef;
        out.d2 = s(jj, jj) - srj.dot(coef);
    }
    if (!(out.d2 > 0.0)) {
        fail(ErrorKind::singular, "partition_parameters: nonpositive conditional variance");
    }
    return out;
}

PrecisionEstimate precision_from_params(const RegressionParams& params)
{
    params.validate();
    const auto p = static_cast<Eigen::Index>(params.dim());
    const DenseMatrix raw = params.d2.cwiseInverse().asDiagonal() * (DenseMatrix::Identity(p, p) - params.b);
    const double scale = std::max(1e-300, raw.cwiseAbs().maxCoeff());
    PrecisionEstimate est;
    est.asymmetry = (raw - raw.transpose()).cwiseAbs().maxCoeff() / scale;
    if (est.asymmetry > 1e-8) {
        fail(ErrorKind::inconsistent_params, "precision_from_params: reconstructed precision is asymmetric");
    }
    est.c = 0.5 * (raw + raw.transpose());
    est.method = "splice";
    return est;
}

DenseMatrix precision_from_btilde(const DenseMatrix& btilde, const Vector& d2)
{
    require_positive(d2, "precision_from_btilde");
    const auto p = btilde.rows();
    const Vector dinv = d2.array().sqrt().inverse();
    DenseMatrix c = dinv.asDiagonal() * (DenseMatrix::Identity(p, p) - btilde) * dinv.asDiagonal();
    return 0.5 * (c + c.transpose());
}

PairIndex::PairIndex(std::size_t p) : p_(p)
{
    if (p >= 2) {
        pairs_.reserve(p * (p - 1) / 2);
    }
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j + 1; k < p; ++k) {
            pairs_.emplace_back(j, k);
        }
    }
}

std::size_t PairIndex::column(std::size_t j, std::size_t k) const
{
    if (j == k || j >= p_ || k >= p_) {
        fail(ErrorKind::out_of_range, "PairIndex::column: invalid pair");
    }
    if (j > k) {
        std::swap(j, k);
    }
    // Columns before row j: sum_{i<j} (p - 1 - i).
    return j * (2 * p_ - j - 1) / 2 + (k - j - 1);
}

SymmetricDesign build_symmetric_design(const DenseMatrix& x, const Vector& d2)
{
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());
    if (n < 2 || p < 2) {
        fail(ErrorKind::dimension, "build_symmetric_design: need n >= 2 and p >= 2");
    }
    if (static_cast<std::size_t>(d2.size()) != p) {
        fail(ErrorKind::dimension, "build_symmetric_design: d2 length must equal p");
    }
    require_positive(d2, "build_symmetric_design");
    if (!x.allFinite()) {
        fail(ErrorKind::input, "build_symmetric_design: non-finite data");
    }

    const Vector d = d2.array().sqrt();
    const DenseMatrix xt = x * d.cwiseInverse().asDiagonal();

    SymmetricDesign out;
    out.n = n;
    out.p = p;
    out.pairs = PairIndex(p);
    out.y.resize(static_cast<Eigen::Index>(n * p));
    for (std::size_t j = 0; j < p; ++j) {
        out.y.segment(static_cast<Eigen::Index>(j * n), static_cast<Eigen::Index>(n)) =
            xt.col(static_cast<Eigen::Index>(j));
    }
    out.z = SparseColumnMatrix(n * p, out.pairs.size());
    out.weights.resize(static_cast<Eigen::Index>(out.pairs.size()));
    for (std::size_t c = 0; c < out.pairs.size(); ++c) {
        const auto [j, k] = out.pairs.pair(c);
        std::vector<SparseColumnMatrix::Entry> entries;
        entries.reserve(2 * n);
        // Block j (regression of X~_j) carries X~_k; block k carries X~_j.
        for (std::size_t i = 0; i < n; ++i) {
            entries.push_back({j * n + i, xt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))});
        }
        for (std::size_t i = 0; i < n; ++i) {
            entries.push_back({k * n + i, xt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        }
        out.z.set_column(c, std::move(entries));
        // |b_jk| + |b_kj| = (d_j/d_k + d_k/d_j) |b~_jk| with unit base weights.
        const double dj = d[static_cast<Eigen::Index>(j)];
        const double dk = d[static_cast<Eigen::Index>(k)];
        out.weights[static_cast<Eigen::Index>(c)] = dj / dk + dk / dj;
    }
    return out;
}

DenseMatrix btilde_from_coefficients(const homotopy::SparseVector& coef, const PairIndex& pairs)
{
    const auto p = static_cast<Eigen::Index>(pairs.p());
    DenseMatrix bt = DenseMatrix::Zero(p, p);
    for (std::size_t k = 0; k < coef.indices.size(); ++k) {
        const auto [i, j] = pairs.pair(coef.indices[k]);
        bt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = coef.values[k];
        bt(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = coef.values[k];
    }
    return bt;
}

double weighted_l1(const DenseMatrix& b, const DenseMatrix& w)
{
    double s = 0.0;
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index k = 0; k < b.cols(); ++k) {
            if (j != k) {
                s += w(j, k) * std::abs(b(j, k));
            }
        }
    }
    return s;
}

Vector d2_update(const DenseMatrix& x, const DenseMatrix& b)
{
    if (b.rows() != x.cols() || b.cols() != x.cols()) {
        fail(ErrorKind::dimension, "d2_update: b must be p x p");
    }
    if (b.diagonal().cwiseAbs().maxCoeff() != 0.0) {
        fail(ErrorKind::input, "d2_update: b must have a zero diagonal");
    }
    Vector out;
    if (d2_update_floored(x, b, out) > 0) {
        fail(ErrorKind::degenerate_residual, "d2_update: zero residual variance");
    }
    return out;
}

double pseudo_neg_loglik(const DenseMatrix& x, const RegressionParams& params)
{
    const auto n = static_cast<double>(x.rows());
    const auto p = static_cast<Eigen::Index>(params.dim());
    if (x.cols() != p) {
        fail(ErrorKind::dimension, "pseudo_neg_loglik: dimension mismatch");
    }
    // Rows of the residual matrix R = X (I - B') are the regression residuals.
    const DenseMatrix r = x * (DenseMatrix::Identity(p, p) - params.b).transpose();
    double quad = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        quad += r.col(j).squaredNorm() / params.d2[j];
    }
    return 0.5 * n * static_cast<double>(p) * std::log(2.0 * std::numbers::pi) +
           0.5 * n * params.d2.array().log().sum() + 0.5 * quad;
}

DenseMatrix center_columns(const DenseMatrix& x)
{
    if (x.rows() == 0) {
        return x;
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    return x.rowwise() - mean;
}

DenseMatrix SplicePathResult::path_btilde(std::size_t k) const
{
    return btilde_from_coefficients(btilde_path.breakpoints.at(k).coefficients, pairs);
}

RegressionParams SplicePathResult::path_params(std::size_t k) const
{
    return RegressionParams::from_btilde(path_btilde(k), path_d2.at(k));
}

PrecisionEstimate SplicePathResult::precision() const
{
    PrecisionEstimate est = precision_from_params(final_params);
    est.lambda = lambda;
    est.iterations = iterations_used;
    return est;
}

SplicePathResult fit_splice_path(const DenseMatrix& x_in, const SpliceOptions& opts)
{
    const auto n = static_cast<std::size_t>(x_in.rows());
    const auto p = static_cast<std::size_t>(x_in.cols());
    if (n < 2 || p < 2) {
        fail(ErrorKind::dimension, "fit_splice_path: need n >= 2 and p >= 2");
    }
    if (!x_in.allFinite()) {
        fail(ErrorKind::input, "fit_splice_path: non-finite data");
    }
    if (opts.max_iter == 0) {
        fail(ErrorKind::input, "fit_splice_path: max_iter must be positive");
    }
    const DenseMatrix x = opts.center ? center_columns(x_in) : x_in;
    const DenseMatrix gram = x.transpose() * x;
    const auto nd = static_cast<double>(n);

    Vector d2 = gram.diagonal() / nd;
    for (Eigen::Index j = 0; j < d2.size(); ++j) {
        if (!(d2[j] > 0.0)) {
            fail(ErrorKind::degenerate_column, "fit_splice_path: column " + std::to_string(j) + " is constant");
        }
    }

    SplicePathResult result;
    result.pairs = PairIndex(p);
    double frozen_lambda = 0.0;
    std::size_t floored_total = 0;

    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        const SymmetricDesign design = build_symmetric_design(x, d2);
        homotopy::LassoPath path = homotopy::trace_path(design.problem(), opts.stop);
        const Vector d = d2.array().sqrt();

        std::vector<Vector> path_d2(path.breakpoints.size());
        IterationRecord rec;
        rec.iteration = it;
        rec.breakpoints = path.breakpoints.size();

        DenseMatrix selected_btilde;
        Vector selected_d2;

        auto d2_at = [&](const DenseMatrix& bt, Vector& out) {
            const DenseMatrix b = d.asDiagonal() * bt * d.cwiseInverse().asDiagonal();
            floored_total += d2_update_floored(x, b, out);
        };

        for (std::size_t k = 0; k < path.breakpoints.size(); ++k) {
            d2_at(btilde_from_coefficients(path.breakpoints[k].coefficients, design.pairs), path_d2[k]);
        }

        if (it <= opts.warmup || opts.warmup == 0) {
            std::vector<selection::Candidate> cands(path.breakpoints.size());
            for (std::size_t k = 0; k < path.breakpoints.size(); ++k) {
                const auto& bp = path.breakpoints[k];
                const DenseMatrix bt = btilde_from_coefficients(bp.coefficients, design.pairs);
                cands[k].lambda = bp.lambda;
                cands[k].df = static_cast<double>(p + bp.coefficients.indices.size());
                cands[k].nll = selection::exact_neg_loglik_gram(gram, n, bt, path_d2[k]);
            }
            const auto sel = selection::select_candidate(cands, opts.criterion, nd, opts.aicc_mode);
            rec.lambda_selected = sel.lambda;
            rec.df = sel.df;
            rec.criterion_value = sel.criterion_value;
            selected_btilde = btilde_from_coefficients(path.breakpoints[sel.index].coefficients, design.pairs);
            selected_d2 = path_d2[sel.index];
            frozen_lambda = sel.lambda;
        } else {
            const double lam = std::max(frozen_lambda, path.breakpoints.back().lambda);
            const auto coef = homotopy::interpolate(path, lam);
            selected_btilde = btilde_from_coefficients(coef, design.pairs);
            d2_at(selected_btilde, selected_d2);
            rec.lambda_selected = lam;
            rec.df = static_cast<double>(p + coef.indices.size());
            rec.criterion_value = selection::exact_neg_loglik_gram(gram, n, selected_btilde, selected_d2);
            if (const auto k = selection::penalty(opts.criterion, nd, rec.df, opts.aicc_mode)) {
                rec.criterion_value += *k;
            }
        }

        double change = 0.0;
        for (Eigen::Index j = 0; j < d2.size(); ++j) {
            change = std::max(change, std::abs(std::log(selected_d2[j] / d2[j])) / 2.0);
        }
        rec.change = change;
        rec.d2 = selected_d2;
        result.iterations.push_back(rec);

        result.btilde_path = std::move(path);
        result.design_d2 = d2;
        result.path_d2 = std::move(path_d2);
        result.lambda = rec.lambda_selected;
        result.final_params = RegressionParams::from_btilde(selected_btilde, selected_d2);
        result.iterations_used = it;

        d2 = selected_d2;
        if (change < opts.tol) {
            result.converged = true;
            break;
        }
    }
    if (floored_total > 0) {
        result.warnings.push_back("residual variance floored " + std::to_string(floored_total) +
                                  " times at 1e-12 of the marginal variance");
    }
    return result;
}

} // namespace splice::estimator
