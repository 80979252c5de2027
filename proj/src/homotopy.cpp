#include "splice/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "splice/error.hpp"

namespace splice::homotopy {

namespace {

constexpr double kTieTol = 1e-12;      // relative, in lambda
constexpr double kDriftTol = 1e-8;     // refactorization trigger
constexpr double kRankTol = 1e-10;     // relative pivot for the active Gram factor
constexpr double kReentryTol = 1e-9;   // relative, in lambda
constexpr double kNever = std::numeric_limits<double>::infinity();

using linalg::DenseMatrix;

// Maintains G_A = R'R for the active Gram matrix, R upper triangular, with
// column append and column delete (Givens) updates.
class ActiveFactor
{
public:
    ActiveFactor(const SparseColumnMatrix& z, std::size_t capacity)
        : z_(z), r_(DenseMatrix::Zero(capacity, capacity)), gram_(DenseMatrix::Zero(capacity, capacity))
    {
    }

    std::size_t size() const noexcept { return cols_.size(); }
    const std::vector<std::size_t>& columns() const noexcept { return cols_; }

    bool append(std::size_t col)
    {
        const auto a = static_cast<Eigen::Index>(cols_.size());
        if (a >= r_.rows()) {
            return false;
        }
        Vector g(a);
        for (Eigen::Index i = 0; i < a; ++i) {
            g[i] = z_.column_dot(cols_[static_cast<std::size_t>(i)], col);
        }
        const double gjj = z_.column_squared_norm(col);
        Vector rcol = Vector::Zero(a);
        if (a > 0) {
            rcol = r_.topLeftCorner(a, a).triangularView<Eigen::Upper>().transpose().solve(g);
        }
        const double rho2 = gjj - rcol.squaredNorm();
        if (!(rho2 > kRankTol * gjj)) {
            return false;
        }
        r_.block(0, a, a, 1) = rcol;
        r_(a, a) = std::sqrt(rho2);
        gram_.block(0, a, a, 1) = g;
        gram_.block(a, 0, 1, a) = g.transpose();
        gram_(a, a) = gjj;
        cols_.push_back(col);
        return true;
    }

    void remove(std::size_t pos)
    {
        const auto a = static_cast<Eigen::Index>(cols_.size());
        const auto p = static_cast<Eigen::Index>(pos);
        for (Eigen::Index j = p; j + 1 < a; ++j) {
            r_.col(j).head(a) = r_.col(j + 1).head(a);
        }
        r_.col(a - 1).setZero();
        // R is now upper Hessenberg from column p onwards.
        for (Eigen::Index k = p; k + 1 < a; ++k) {
            const double x = r_(k, k);
            const double y = r_(k + 1, k);
            const double h = std::hypot(x, y);
            if (h == 0.0) {
                continue;
            }
            const double c = x / h;
            const double s = y / h;
            for (Eigen::Index j = k; j + 1 < a; ++j) {
                const double u = r_(k, j);
                const double v = r_(k + 1, j);
                r_(k, j) = c * u + s * v;
                r_(k + 1, j) = -s * u + c * v;
            }
            r_(k + 1, k) = 0.0;
        }
        r_.row(a - 1).setZero();
        for (Eigen::Index j = p; j + 1 < a; ++j) {
            gram_.col(j).head(a) = gram_.col(j + 1).head(a);
        }
        for (Eigen::Index i = p; i + 1 < a; ++i) {
            gram_.row(i).head(a) = gram_.row(i + 1).head(a);
        }
        gram_.row(a - 1).setZero();
        gram_.col(a - 1).setZero();
        cols_.erase(cols_.begin() + static_cast<std::ptrdiff_t>(pos));
        // Diagonal entries of R are kept positive.
        for (Eigen::Index k = 0; k + 1 < a; ++k) {
            if (r_(k, k) < 0.0) {
                r_.row(k).head(a - 1) *= -1.0;
            }
        }
    }

    Vector solve(const Vector& rhs)
    {
        Vector x = solve_with_factor(rhs);
        const auto a = static_cast<Eigen::Index>(cols_.size());
        const double resid = (gram_.topLeftCorner(a, a) * x - rhs).cwiseAbs().maxCoeff();
        if (resid > kDriftTol * (1.0 + rhs.cwiseAbs().maxCoeff())) {
            refactorize();
            x = solve_with_factor(rhs);
        }
        return x;
    }

    std::size_t refactorizations() const noexcept { return refactorizations_; }

private:
    Vector solve_with_factor(const Vector& rhs) const
    {
        const auto a = static_cast<Eigen::Index>(cols_.size());
        const auto upper = r_.topLeftCorner(a, a).triangularView<Eigen::Upper>();
        Vector y = upper.transpose().solve(rhs);
        return upper.solve(y);
    }

    void refactorize()
    {
        const auto a = static_cast<Eigen::Index>(cols_.size());
        Eigen::LLT<DenseMatrix> llt(gram_.topLeftCorner(a, a));
        if (llt.info() == Eigen::Success) {
            r_.topLeftCorner(a, a) = llt.matrixU();
        }
        ++refactorizations_;
    }

    const SparseColumnMatrix& z_;
    DenseMatrix r_;
    DenseMatrix gram_;
    std::vector<std::size_t> cols_;
    std::size_t refactorizations_ = 0;
};

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<std::size_t> sorted(std::vector<std::size_t> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

std::string_view to_string(TerminationReason r) noexcept
{
    switch (r) {
    case TerminationReason::lambda_zero: return "lambda_zero";
    case TerminationReason::max_active: return "max_active";
    case TerminationReason::min_lambda: return "min_lambda";
    case TerminationReason::max_steps: return "max_steps";
    }
    return "unknown";
}

double SparseVector::at(std::size_t i) const
{
    const auto it = std::lower_bound(indices.begin(), indices.end(), i);
    if (it == indices.end() || *it != i) {
        return 0.0;
    }
    return values[static_cast<std::size_t>(it - indices.begin())];
}

Vector SparseVector::dense() const
{
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < indices.size(); ++k) {
        v[static_cast<Eigen::Index>(indices[k])] = values[k];
    }
    return v;
}

SparseVector SparseVector::from_dense(const Vector& v)
{
    SparseVector out;
    out.dim = static_cast<std::size_t>(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0) {
            out.indices.push_back(static_cast<std::size_t>(i));
            out.values.push_back(v[i]);
        }
    }
    return out;
}

void WeightedLassoProblem::validate() const
{
    if (static_cast<std::size_t>(response.size()) != design.rows()) {
        fail(ErrorKind::dimension, "lasso problem: response length " + std::to_string(response.size()) +
                                       " does not match design rows " + std::to_string(design.rows()));
    }
    if (static_cast<std::size_t>(weights.size()) != design.cols()) {
        fail(ErrorKind::dimension, "lasso problem: weight count does not match design columns");
    }
    if (!response.allFinite() || !weights.allFinite()) {
        fail(ErrorKind::input, "lasso problem: non-finite response or weights");
    }
    if (weights.size() > 0 && weights.minCoeff() <= 0.0) {
        fail(ErrorKind::input, "lasso problem: weights must be strictly positive");
    }
    for (std::size_t j = 0; j < design.cols(); ++j) {
        if (design.column(j).empty()) {
            fail(ErrorKind::degenerate_column, "lasso problem: design column " + std::to_string(j) +
                                                   " is identically zero");
        }
    }
}

Vector predict(const SparseColumnMatrix& design, const SparseVector& b)
{
    Vector out = Vector::Zero(static_cast<Eigen::Index>(design.rows()));
    for (std::size_t k = 0; k < b.indices.size(); ++k) {
        design.axpy_column(b.indices[k], b.values[k], out);
    }
    return out;
}

double objective(const WeightedLassoProblem& problem, const SparseVector& b, double lambda)
{
    const Vector r = problem.response - predict(problem.design, b);
    double penalty = 0.0;
    for (std::size_t k = 0; k < b.indices.size(); ++k) {
        penalty += problem.weights[static_cast<Eigen::Index>(b.indices[k])] * std::abs(b.values[k]);
    }
    return r.squaredNorm() + lambda * penalty;
}

LassoPath trace_path(const WeightedLassoProblem& problem, const StoppingRule& stop)
{
    problem.validate();
    const SparseColumnMatrix& z = problem.design;
    const Vector& y = problem.response;
    const Vector& w = problem.weights;
    const std::size_t q = z.cols();
    const std::size_t max_steps = stop.max_steps > 0 ? stop.max_steps : 10 * std::max<std::size_t>(q, 1);
    const double min_lambda = stop.min_lambda.value_or(0.0);
    if (min_lambda < 0.0 || !std::isfinite(min_lambda)) {
        fail(ErrorKind::input, "trace_path: min_lambda must be finite and nonnegative");
    }

    Vector zty(static_cast<Eigen::Index>(q));
    for (std::size_t j = 0; j < q; ++j) {
        zty[static_cast<Eigen::Index>(j)] = z.column_dot(j, y);
    }

    LassoPath path;
    Vector b = Vector::Zero(static_cast<Eigen::Index>(q));

    double lambda_max = 0.0;
    std::size_t first = q;
    for (std::size_t j = 0; j < q; ++j) {
        const double ratio = std::abs(2.0 * zty[static_cast<Eigen::Index>(j)]) / w[static_cast<Eigen::Index>(j)];
        if (ratio > lambda_max) {
            lambda_max = ratio;
        }
    }
    for (std::size_t j = 0; j < q && lambda_max > 0.0; ++j) {
        const double ratio = std::abs(2.0 * zty[static_cast<Eigen::Index>(j)]) / w[static_cast<Eigen::Index>(j)];
        if (ratio >= lambda_max * (1.0 - kTieTol)) {
            first = j;
            break;
        }
    }

    auto make_breakpoint = [&](double lambda, const std::vector<std::size_t>& active) {
        Breakpoint bp;
        bp.lambda = lambda;
        bp.active_set = sorted(active);
        bp.coefficients = SparseVector::from_dense(b);
        return bp;
    };

    if (first == q) {
        // y is orthogonal to every column: the zero vector solves the problem
        // for all lambda >= 0.
        path.breakpoints.push_back(make_breakpoint(0.0, {}));
        path.termination = TerminationReason::lambda_zero;
        return path;
    }

    if (min_lambda > 0.0 && min_lambda >= lambda_max) {
        path.breakpoints.push_back(make_breakpoint(lambda_max, {}));
        path.termination = TerminationReason::min_lambda;
        return path;
    }

    const std::size_t capacity = std::min(q, z.rows()) + 1;
    ActiveFactor factor(z, capacity);
    std::vector<double> signs;              // aligned with factor.columns()
    std::vector<char> is_active(q, 0);

    factor.append(first);
    signs.push_back(sign_of(zty[static_cast<Eigen::Index>(first)]));
    is_active[first] = 1;

    double lambda = lambda_max;
    path.breakpoints.push_back(make_breakpoint(lambda, factor.columns()));

    if (stop.max_active && factor.size() >= *stop.max_active) {
        path.termination = TerminationReason::max_active;
        return path;
    }

    auto exact_solve = [&](double lam) {
        const auto& cols = factor.columns();
        const auto a = static_cast<Eigen::Index>(cols.size());
        Vector rhs(a);
        for (Eigen::Index i = 0; i < a; ++i) {
            const auto j = static_cast<Eigen::Index>(cols[static_cast<std::size_t>(i)]);
            rhs[i] = zty[j] - 0.5 * lam * w[j] * signs[static_cast<std::size_t>(i)];
        }
        const Vector sol = a > 0 ? factor.solve(rhs) : Vector();
        for (Eigen::Index i = 0; i < a; ++i) {
            b[static_cast<Eigen::Index>(cols[static_cast<std::size_t>(i)])] = sol[i];
        }
    };

    auto drop_position = [&](std::size_t pos) {
        const std::size_t col = factor.columns()[pos];
        b[static_cast<Eigen::Index>(col)] = 0.0;
        is_active[col] = 0;
        factor.remove(pos);
        signs.erase(signs.begin() + static_cast<std::ptrdiff_t>(pos));
        return col;
    };

    std::size_t just_dropped = q;
    Vector residual(static_cast<Eigen::Index>(z.rows()));
    Vector u(static_cast<Eigen::Index>(z.rows()));

    while (true) {
        if (path.steps >= max_steps) {
            path.termination = TerminationReason::max_steps;
            break;
        }
        ++path.steps;

        const auto& cols = factor.columns();
        const std::size_t a = cols.size();

        // Direction of the active coefficients per unit decrease of lambda.
        Vector rhs(static_cast<Eigen::Index>(a));
        for (std::size_t i = 0; i < a; ++i) {
            rhs[static_cast<Eigen::Index>(i)] = w[static_cast<Eigen::Index>(cols[i])] * signs[i];
        }
        const Vector dir = 0.5 * factor.solve(rhs);

        residual = y;
        u.setZero();
        for (std::size_t i = 0; i < a; ++i) {
            z.axpy_column(cols[i], -b[static_cast<Eigen::Index>(cols[i])], residual);
            z.axpy_column(cols[i], dir[static_cast<Eigen::Index>(i)], u);
        }

        // Next activation.
        double step_add = std::numeric_limits<double>::infinity();
        std::size_t add_col = q;
        double add_sign = 0.0;
        for (std::size_t j = 0; j < q; ++j) {
            if (is_active[j]) {
                continue;
            }
            const double c = 2.0 * z.column_dot(j, residual);
            const double slope = 2.0 * z.column_dot(j, u);
            const double wj = w[static_cast<Eigen::Index>(j)];
            // A column dropped at this lambda sits on its bound; only a later
            // crossing may bring it back.
            const bool fresh = j == just_dropped;
            auto admissible = [&](double d) { return fresh ? (d > kReentryTol * lambda ? d : kNever) : std::max(0.0, d); };
            double best = std::numeric_limits<double>::infinity();
            double sgn = 0.0;
            // c - slope*d = +(lambda - d) * wj
            if (wj - slope > 0.0) {
                const double d = admissible((lambda * wj - c) / (wj - slope));
                if (d < best) {
                    best = d;
                    sgn = 1.0;
                }
            }
            // c - slope*d = -(lambda - d) * wj
            if (wj + slope > 0.0) {
                const double d = admissible((lambda * wj + c) / (wj + slope));
                if (d < best) {
                    best = d;
                    sgn = -1.0;
                }
            }
            if (best < step_add - kTieTol * lambda) {
                step_add = best;
                add_col = j;
                add_sign = sgn;
            }
        }

        // Next sign crossing among active coefficients.
        double step_drop = std::numeric_limits<double>::infinity();
        std::size_t drop_pos = a;
        for (std::size_t i = 0; i < a; ++i) {
            const double bi = b[static_cast<Eigen::Index>(cols[i])];
            const double di = dir[static_cast<Eigen::Index>(i)];
            if (bi == 0.0 || di == 0.0) {
                continue;
            }
            const double d = -bi / di;
            if (d > kTieTol * lambda && d < step_drop) {
                step_drop = d;
                drop_pos = i;
            }
        }

        enum class Event { add, drop, zero, floor } event = Event::zero;
        double step = lambda;
        if (lambda - min_lambda < step) {
            step = lambda - min_lambda;
            event = Event::floor;
        }
        if (step_drop <= step) {
            step = step_drop;
            event = Event::drop;
        }
        if (step_add < step - kTieTol * lambda) {
            step = step_add;
            event = Event::add;
        }
        if (step <= kTieTol * lambda) {
            step = 0.0;
        }
        if (event == Event::zero || (event == Event::floor && min_lambda == 0.0)) {
            step = lambda;
            event = Event::zero;
        }

        const double new_lambda = (event == Event::zero) ? 0.0 : (event == Event::floor ? min_lambda : lambda - step);
        just_dropped = q;

        bool rank_exhausted = false;
        if (step > 0.0) {
            exact_solve(new_lambda);
        }
        if (event == Event::drop) {
            just_dropped = drop_position(drop_pos);
            if (step > 0.0) {
                exact_solve(new_lambda);
            }
        } else if (event == Event::add) {
            if (factor.append(add_col)) {
                signs.push_back(add_sign);
                is_active[add_col] = 1;
                b[static_cast<Eigen::Index>(add_col)] = 0.0;
            } else {
                rank_exhausted = true;
            }
        }

        // Sign consistency: coefficients that crossed zero within round-off
        // are released.
        for (bool changed = true; changed && step > 0.0;) {
            changed = false;
            const auto& cur = factor.columns();
            for (std::size_t i = 0; i < cur.size(); ++i) {
                const double bi = b[static_cast<Eigen::Index>(cur[i])];
                if (bi * signs[i] < 0.0) {
                    drop_position(i);
                    exact_solve(new_lambda);
                    changed = true;
                    break;
                }
            }
        }

        Breakpoint bp = make_breakpoint(new_lambda, factor.columns());
        if (step == 0.0) {
            // Same lambda as the previous breakpoint: fold the active-set change in.
            bp.lambda = path.breakpoints.back().lambda;
            if (path.breakpoints.size() == 1) {
                bp.coefficients = SparseVector{q, {}, {}};
            }
            path.breakpoints.back() = std::move(bp);
        } else {
            path.breakpoints.push_back(std::move(bp));
        }
        lambda = path.breakpoints.back().lambda;

        if (rank_exhausted) {
            path.termination = TerminationReason::max_active;
            break;
        }
        if (event == Event::zero) {
            path.termination = TerminationReason::lambda_zero;
            break;
        }
        if (event == Event::floor) {
            path.termination = TerminationReason::min_lambda;
            break;
        }
        if (stop.max_active && factor.size() >= *stop.max_active) {
            path.termination = TerminationReason::max_active;
            break;
        }
    }
    return path;
}

SparseVector interpolate(const LassoPath& path, double lambda)
{
    if (path.breakpoints.empty()) {
        fail(ErrorKind::input, "interpolate: empty path");
    }
    if (!(lambda >= 0.0)) {
        fail(ErrorKind::domain, "interpolate: lambda must be nonnegative");
    }
    const auto& bps = path.breakpoints;
    const std::size_t dim = bps.front().coefficients.dim;
    if (lambda >= bps.front().lambda) {
        return SparseVector{dim, {}, {}};
    }
    if (lambda < bps.back().lambda) {
        fail(ErrorKind::out_of_range, "interpolate: lambda below the last traced breakpoint");
    }
    // First breakpoint with lambda_k <= lambda.
    const auto it = std::lower_bound(bps.begin(), bps.end(), lambda,
                                     [](const Breakpoint& bp, double l) { return bp.lambda > l; });
    const auto hi = static_cast<std::size_t>(it - bps.begin());
    if (bps[hi].lambda == lambda) {
        return bps[hi].coefficients;
    }
    const Breakpoint& upper = bps[hi - 1];
    const Breakpoint& lower = bps[hi];
    const double t = (upper.lambda - lambda) / (upper.lambda - lower.lambda);
    const Vector v = (1.0 - t) * upper.coefficients.dense() + t * lower.coefficients.dense();
    return SparseVector::from_dense(v);
}

KktReport check_kkt(const WeightedLassoProblem& problem, const Breakpoint& bp, double lambda_max)
{
    const auto& z = problem.design;
    const Vector r = predict(z, bp.coefficients) - problem.response;
    KktReport rep;
    rep.scale = std::max(1.0, lambda_max * problem.weights.maxCoeff());
    std::vector<char> active(z.cols(), 0);
    for (auto j : bp.active_set) {
        active[j] = 1;
    }
    for (std::size_t j = 0; j < z.cols(); ++j) {
        const double g = 2.0 * z.column_dot(j, r);
        const double bound = bp.lambda * problem.weights[static_cast<Eigen::Index>(j)];
        if (active[j]) {
            rep.active_violation = std::max(rep.active_violation, std::abs(std::abs(g) - bound));
            const double bj = bp.coefficients.at(j);
            if (bj != 0.0) {
                rep.sign_violation = std::max(rep.sign_violation, std::abs(g + sign_of(bj) * bound));
            }
        } else {
            rep.inactive_violation = std::max(rep.inactive_violation, std::max(0.0, std::abs(g) - bound));
            if (bp.coefficients.at(j) != 0.0) {
                rep.inactive_violation = std::numeric_limits<double>::infinity();
            }
        }
    }
    return rep;
}

} // namespace splice::homotopy
