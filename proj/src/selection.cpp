#include "splice/selection.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "splice/error.hpp"
#include "splice/estimator.hpp"

namespace splice::selection {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_two_pi() { return std::log(2.0 * std::numbers::pi); }

} // namespace

std::string_view to_string(Criterion c) noexcept
{
    switch (c) {
    case Criterion::AIC: return "AIC";
    case Criterion::AICc: return "AICc";
    case Criterion::BIC: return "BIC";
    }
    return "unknown";
}

std::optional<Criterion> parse_criterion(std::string_view s) noexcept
{
    if (s == "AIC" || s == "aic") return Criterion::AIC;
    if (s == "AICc" || s == "aicc" || s == "AICC") return Criterion::AICc;
    if (s == "BIC" || s == "bic") return Criterion::BIC;
    return std::nullopt;
}

std::optional<double> penalty(Criterion c, double n, double df, AiccMode mode)
{
    switch (c) {
    case Criterion::AIC:
        return 2.0 * df;
    case Criterion::BIC:
        return std::log(n) * df;
    case Criterion::AICc:
        if (mode == AiccMode::printed) {
            if (df + 2.0 >= n) {
                return std::nullopt;
            }
            return (1.0 + df / n) / (1.0 - (df + 2.0) / n);
        }
        if (n - df - 1.0 <= 0.0) {
            return std::nullopt;
        }
        return 2.0 * df + 2.0 * df * (df + 1.0) / (n - df - 1.0);
    }
    return std::nullopt;
}

SelectionRecord select_candidate(const std::vector<Candidate>& candidates, Criterion c, double n,
                                 AiccMode mode)
{
    if (candidates.empty()) {
        fail(ErrorKind::input, "select_candidate: no candidates");
    }
    SelectionRecord best;
    best.criterion = c;
    best.criterion_value = kInf;
    bool found = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Candidate& cand = candidates[i];
        if (!std::isfinite(cand.nll)) {
            continue;
        }
        const auto k = penalty(c, n, cand.df, mode);
        if (!k) {
            continue;
        }
        const double value = cand.nll + *k;
        const bool better = !found || value < best.criterion_value ||
                            (value == best.criterion_value && cand.lambda > best.lambda);
        if (better) {
            best.lambda = cand.lambda;
            best.df = cand.df;
            best.exact_nll = cand.nll;
            best.criterion_value = value;
            best.index = i;
            found = true;
        }
    }
    if (!found) {
        fail(ErrorKind::no_valid_model, "select_candidate: no candidate has a finite criterion value");
    }
    return best;
}

double exact_neg_loglik_gram(const DenseMatrix& gram, std::size_t n, const DenseMatrix& btilde,
                             const Vector& d2)
{
    const auto p = d2.size();
    if (gram.rows() != p || gram.cols() != p || btilde.rows() != p || btilde.cols() != p) {
        fail(ErrorKind::dimension, "exact_neg_loglik: dimension mismatch");
    }
    const DenseMatrix u = DenseMatrix::Identity(p, p) - btilde;
    DenseMatrix lower;
    if (!linalg::try_cholesky(0.5 * (u + u.transpose()), lower)) {
        return kInf;
    }
    const double log_det_u = 2.0 * lower.diagonal().array().log().sum();
    const Vector d = d2.array().sqrt();
    double trace = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            trace += u(i, j) * gram(i, j) / (d[i] * d[j]);
        }
    }
    const double nd = static_cast<double>(n);
    return 0.5 * nd * static_cast<double>(p) * log_two_pi() - 0.5 * nd * log_det_u +
           0.5 * nd * d2.array().log().sum() + 0.5 * trace;
}

double exact_neg_loglik(const DenseMatrix& x, const estimator::RegressionParams& params)
{
    if (static_cast<std::size_t>(x.cols()) != params.dim()) {
        fail(ErrorKind::dimension, "exact_neg_loglik: data and parameter dimensions differ");
    }
    const DenseMatrix gram = x.transpose() * x;
    return exact_neg_loglik_gram(gram, static_cast<std::size_t>(x.rows()), params.btilde(), params.d2);
}

double gaussian_neg_loglik_gram(const DenseMatrix& gram, std::size_t n, const DenseMatrix& c)
{
    const auto p = c.rows();
    DenseMatrix lower;
    if (!linalg::try_cholesky(0.5 * (c + c.transpose()), lower)) {
        return kInf;
    }
    const double log_det = 2.0 * lower.diagonal().array().log().sum();
    const double trace = (c.array() * gram.array()).sum();
    const double nd = static_cast<double>(n);
    return 0.5 * nd * static_cast<double>(p) * log_two_pi() - 0.5 * nd * log_det + 0.5 * trace;
}

std::size_t degrees_of_freedom(const DenseMatrix& b, std::size_t p)
{
    if (static_cast<std::size_t>(b.rows()) != p || static_cast<std::size_t>(b.cols()) != p) {
        fail(ErrorKind::dimension, "degrees_of_freedom: b must be p x p");
    }
    std::size_t count = p;
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < b.cols(); ++j) {
            if (b(i, j) != 0.0) {
                ++count;
            }
        }
    }
    return count;
}

SelectionRecord select_lambda(const std::vector<std::pair<double, estimator::RegressionParams>>& records,
                              const DenseMatrix& x, Criterion c, std::size_t n, AiccMode mode)
{
    if (records.empty()) {
        fail(ErrorKind::input, "select_lambda: empty record list");
    }
    const DenseMatrix gram = x.transpose() * x;
    std::vector<Candidate> candidates;
    candidates.reserve(records.size());
    for (const auto& [lambda, params] : records) {
        Candidate cand;
        cand.lambda = lambda;
        cand.df = static_cast<double>(degrees_of_freedom(params.b, params.dim()));
        cand.nll = exact_neg_loglik_gram(gram, static_cast<std::size_t>(x.rows()), params.btilde(), params.d2);
        candidates.push_back(cand);
    }
    return select_candidate(candidates, c, static_cast<double>(n), mode);
}

} // namespace splice::selection
