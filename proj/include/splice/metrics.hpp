#pragma once

#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "splice/linalg.hpp"

namespace splice::metrics {

using linalg::DenseMatrix;
using linalg::Vector;

/// tr[(C Chat^{-1} - I)^2].
double quadratic_loss(const DenseMatrix& c_true, const DenseMatrix& c_hat);

/// tr(C Chat^{-1}) - log det(C Chat^{-1}) - p. Requires both positive definite.
double entropy_loss(const DenseMatrix& c_true, const DenseMatrix& c_hat);

/// Largest singular value.
double spectral_norm(const DenseMatrix& a);

using Edge = std::pair<std::size_t, std::size_t>; // i < j
using Support = std::vector<Edge>;                // sorted, unique
using SupportPath = std::vector<Support>;          // one support per path point

/// {(i, j): i < j, |C_ij| > tol}.
Support true_support(const DenseMatrix& c, double tol = 1e-12);

struct RocPoint
{
    std::size_t true_positives = 0;
    double min_false_positives = 0.0; // mean over contributing replications
    double std_error = 0.0;           // standard error of that mean
    std::size_t replications = 0;     // contributing
    std::size_t excluded = 0;         // never reached this true-positive count
};

struct RocCurve
{
    std::vector<RocPoint> points;
    std::size_t max_true_positives = 0;

    const RocPoint* find(std::size_t tp) const;
};

/// For each true-positive count t reached by at least one replication, the
/// mean over replications of the fewest false positives among path points
/// with at least t true positives.
RocCurve roc_curve(const std::vector<SupportPath>& paths, const Support& truth);

struct EigenPathRecord
{
    double lambda_bar = 0.0;
    double min_eigenvalue = 0.0;
};

/// (lambda / lambda_max, min eigenvalue of C(lambda)) per path point; the
/// first entry must carry the largest lambda.
std::vector<EigenPathRecord> min_eigenvalue_path(const std::vector<std::pair<double, DenseMatrix>>& path);

/// Fraction of [lambda_last, lambda_max] in lambda-bar measure on which
/// I - B~(lambda) is positive semi-definite, for a path that is linear in
/// lambda between consecutive entries. Entries are (lambda, B~), decreasing
/// lambda. On each segment the minimum eigenvalue is concave in lambda, so
/// the nonnegative set is an interval found by bisection.
double psd_fraction(const std::vector<std::pair<double, DenseMatrix>>& btilde_path, double tol = 0.0);

} // namespace splice::metrics
