#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "splice/linalg.hpp"

namespace splice::estimator {
struct RegressionParams;
}

namespace splice::selection {

using linalg::DenseMatrix;
using linalg::Vector;

enum class Criterion { AIC, AICc, BIC };

/// `printed`: K = (1 + df/n) / (1 - (df + 2)/n).
/// `standard`: K = 2 df + 2 df (df + 1) / (n - df - 1).
enum class AiccMode { printed, standard };

std::string_view to_string(Criterion c) noexcept;
std::optional<Criterion> parse_criterion(std::string_view s) noexcept;

struct SelectionRecord
{
    double lambda = 0.0;
    double df = 0.0;
    double exact_nll = 0.0;
    double criterion_value = 0.0;
    Criterion criterion = Criterion::AIC;
    std::size_t index = 0; // position in the candidate list
};

/// One scored point on a path.
struct Candidate
{
    double lambda = 0.0;
    double df = 0.0;
    double nll = 0.0;
};

/// Penalty K(n, df); nullopt when the formula is undefined for (n, df).
std::optional<double> penalty(Criterion c, double n, double df, AiccMode mode = AiccMode::printed);

/// Minimum of nll + K over candidates, ties toward the larger lambda.
/// Candidates with an infinite nll or an undefined penalty are skipped.
SelectionRecord select_candidate(const std::vector<Candidate>& candidates, Criterion c, double n,
                                 AiccMode mode = AiccMode::printed);

/// Negative Gaussian log-likelihood in the (D, B-tilde) form. Returns +inf
/// when I - B-tilde is not positive definite.
double exact_neg_loglik(const DenseMatrix& x, const estimator::RegressionParams& params);

/// Same quantity from the Gram matrix X'X of the (centered) data.
double exact_neg_loglik_gram(const DenseMatrix& gram, std::size_t n, const DenseMatrix& btilde,
                             const Vector& d2);

/// Negative Gaussian log-likelihood of a precision matrix, from X'X.
/// Returns +inf when c is not positive definite.
double gaussian_neg_loglik_gram(const DenseMatrix& gram, std::size_t n, const DenseMatrix& c);

/// p plus the number of exactly nonzero strictly-upper-triangular entries.
std::size_t degrees_of_freedom(const DenseMatrix& b, std::size_t p);

/// Scores each (lambda, params) record with the exact likelihood and the
/// criterion penalty and returns the minimizer.
SelectionRecord select_lambda(const std::vector<std::pair<double, estimator::RegressionParams>>& records,
                              const DenseMatrix& x, Criterion c, std::size_t n,
                              AiccMode mode = AiccMode::printed);

} // namespace splice::selection
