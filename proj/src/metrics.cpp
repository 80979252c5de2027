#include "splice/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "splice/error.hpp"

namespace splice::metrics {

namespace {

void require_same_square(const DenseMatrix& a, const DenseMatrix& b, const char* what)
{
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        fail(ErrorKind::dimension, std::string(what) + ": matrices must be square of equal size");
    }
}

// Chat^{-1} C, whose trace and powers match those of C Chat^{-1}.
DenseMatrix relative(const DenseMatrix& c_true, const DenseMatrix& c_hat, const char* what)
{
    require_same_square(c_true, c_hat, what);
    const Eigen::FullPivLU<DenseMatrix> lu(c_hat);
    if (!lu.isInvertible()) {
        fail(ErrorKind::singular, std::string(what) + ": estimate is singular");
    }
    return lu.solve(c_true);
}

double min_eig_at(const DenseMatrix& a, const DenseMatrix& b, double t)
{
    // (1 - t) a + t b, with a and b the values of I - B~ at the segment ends.
    return linalg::min_eigenvalue((1.0 - t) * a + t * b);
}

} // namespace

double quadratic_loss(const DenseMatrix& c_true, const DenseMatrix& c_hat)
{
    const DenseMatrix m = relative(c_true, c_hat, "quadratic_loss") -
                          DenseMatrix::Identity(c_true.rows(), c_true.cols());
    return (m * m).trace();
}

double entropy_loss(const DenseMatrix& c_true, const DenseMatrix& c_hat)
{
    const DenseMatrix m = relative(c_true, c_hat, "entropy_loss");
    DenseMatrix l_true;
    DenseMatrix l_hat;
    if (!linalg::try_cholesky(0.5 * (c_true + c_true.transpose()), l_true)) {
        fail(ErrorKind::singular, "entropy_loss: true precision is not positive definite");
    }
    if (!linalg::try_cholesky(0.5 * (c_hat + c_hat.transpose()), l_hat)) {
        fail(ErrorKind::domain, "entropy_loss: estimate is not positive definite");
    }
    const double log_det_true = 2.0 * l_true.diagonal().array().log().sum();
    const double log_det_hat = 2.0 * l_hat.diagonal().array().log().sum();
    return m.trace() - (log_det_true - log_det_hat) - static_cast<double>(c_true.rows());
}

double spectral_norm(const DenseMatrix& a)
{
    if (a.size() == 0) {
        return 0.0;
    }
    const Eigen::JacobiSVD<DenseMatrix> svd(a);
    return svd.singularValues()(0);
}

Support true_support(const DenseMatrix& c, double tol)
{
    Support s;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < c.cols(); ++j) {
            if (std::abs(c(i, j)) > tol) {
                s.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            }
        }
    }
    return s;
}

const RocPoint* RocCurve::find(std::size_t tp) const
{
    for (const auto& pt : points) {
        if (pt.true_positives == tp) {
            return &pt;
        }
    }
    return nullptr;
}

RocCurve roc_curve(const std::vector<SupportPath>& paths, const Support& truth)
{
    if (paths.empty()) {
        fail(ErrorKind::domain, "roc_curve: no paths");
    }
    const std::size_t t_max_possible = truth.size();
    // best[r][t] = fewest false positives with at least t true positives.
    std::vector<std::vector<double>> best(paths.size());
    std::size_t max_tp = 0;
    for (std::size_t r = 0; r < paths.size(); ++r) {
        if (paths[r].empty()) {
            fail(ErrorKind::domain, "roc_curve: empty support path");
        }
        std::vector<double> row(t_max_possible + 1, std::numeric_limits<double>::infinity());
        for (const Support& s : paths[r]) {
            std::size_t tp = 0;
            for (const Edge& e : s) {
                if (std::binary_search(truth.begin(), truth.end(), e)) {
                    ++tp;
                }
            }
            const auto fp = static_cast<double>(s.size() - tp);
            row[tp] = std::min(row[tp], fp);
        }
        for (std::size_t t = t_max_possible; t-- > 0;) {
            row[t] = std::min(row[t], row[t + 1]);
        }
        for (std::size_t t = t_max_possible + 1; t-- > 0;) {
            if (std::isfinite(row[t])) {
                max_tp = std::max(max_tp, t);
                break;
            }
        }
        best[r] = std::move(row);
    }
    RocCurve curve;
    curve.max_true_positives = max_tp;
    for (std::size_t t = 1; t <= max_tp; ++t) {
        RocPoint pt;
        pt.true_positives = t;
        double sum = 0.0;
        double sum_sq = 0.0;
        for (const auto& row : best) {
            if (std::isfinite(row[t])) {
                sum += row[t];
                sum_sq += row[t] * row[t];
                ++pt.replications;
            } else {
                ++pt.excluded;
            }
        }
        const auto m = static_cast<double>(pt.replications);
        pt.min_false_positives = sum / m;
        if (pt.replications > 1) {
            const double var = std::max(0.0, (sum_sq - m * pt.min_false_positives * pt.min_false_positives) / (m - 1.0));
            pt.std_error = std::sqrt(var / m);
        }
        curve.points.push_back(pt);
    }
    return curve;
}

std::vector<EigenPathRecord> min_eigenvalue_path(const std::vector<std::pair<double, DenseMatrix>>& path)
{
    if (path.empty()) {
        fail(ErrorKind::input, "min_eigenvalue_path: empty path");
    }
    const double lambda_max = path.front().first;
    if (!(lambda_max > 0.0)) {
        fail(ErrorKind::domain, "min_eigenvalue_path: lambda_max must be positive");
    }
    std::vector<EigenPathRecord> out;
    out.reserve(path.size());
    for (const auto& [lambda, c] : path) {
        out.push_back({lambda / lambda_max, linalg::min_eigenvalue(c)});
    }
    return out;
}

double psd_fraction(const std::vector<std::pair<double, DenseMatrix>>& path, double tol)
{
    if (path.empty()) {
        fail(ErrorKind::input, "psd_fraction: empty path");
    }
    const double lambda_max = path.front().first;
    if (!(lambda_max > 0.0)) {
        fail(ErrorKind::domain, "psd_fraction: lambda_max must be positive");
    }
    const auto p = path.front().second.rows();
    const DenseMatrix eye = DenseMatrix::Identity(p, p);
    const double span = 1.0 - path.back().first / lambda_max;
    if (span <= 0.0) {
        return linalg::min_eigenvalue(eye - path.front().second) >= -tol ? 1.0 : 0.0;
    }
    constexpr int kIter = 60;
    double covered = 0.0;
    std::vector<DenseMatrix> u(path.size());
    std::vector<double> f(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
        u[k] = eye - path[k].second;
        f[k] = linalg::min_eigenvalue(u[k]) + tol;
    }
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double width = (path[k].first - path[k + 1].first) / lambda_max;
        if (width <= 0.0) {
            continue;
        }
        const double fa = f[k];
        const double fb = f[k + 1];
        if (fa >= 0.0 && fb >= 0.0) {
            covered += width;
            continue;
        }
        auto g = [&](double t) { return min_eig_at(u[k], u[k + 1], t) + tol; };
        // Maximizer of the concave function g on [0, 1].
        double lo = 0.0;
        double hi = 1.0;
        for (int i = 0; i < kIter; ++i) {
            const double m1 = lo + (hi - lo) / 3.0;
            const double m2 = hi - (hi - lo) / 3.0;
            if (g(m1) < g(m2)) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        const double t_star = 0.5 * (lo + hi);
        const double f_star = std::max({g(t_star), fa >= 0.0 ? fa : -1.0, fb >= 0.0 ? fb : -1.0});
        if (f_star < 0.0) {
            continue;
        }
        const double peak = fa >= 0.0 ? 0.0 : (fb >= 0.0 ? 1.0 : t_star);
        double left = 0.0;
        if (fa < 0.0) {
            double a = 0.0;
            double b = peak;
            for (int i = 0; i < kIter; ++i) {
                const double m = 0.5 * (a + b);
                (g(m) >= 0.0 ? b : a) = m;
            }
            left = b;
        }
        double right = 1.0;
        if (fb < 0.0) {
            double a = peak;
            double b = 1.0;
            for (int i = 0; i < kIter; ++i) {
                const double m = 0.5 * (a + b);
                (g(m) >= 0.0 ? a : b) = m;
            }
            right = a;
        }
        covered += width * std::max(0.0, right - left);
    }
    return std::min(1.0, covered / span);
}

} // namespace splice::metrics
