#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "splice/homotopy.hpp"
#include "splice/linalg.hpp"
#include "splice/selection.hpp"

// Sparse pseudo-likelihood precision estimation. The precision matrix is
// parametrized as C = D^{-2} (I - B), where row j of B holds the coefficients
// of the regression of X_j on the other variables and d_j^2 its residual
// variance. With X~ = X D^{-1} and B~ = D^{-1} B D, the symmetry of C is the
// symmetry of B~, which the merged design below enforces along the path.

namespace splice::estimator {

using linalg::DenseMatrix;
using linalg::SparseColumnMatrix;
using linalg::Vector;

struct RegressionParams
{
    DenseMatrix b;  // p x p, zero diagonal
    Vector d2;      // residual variances, strictly positive

    std::size_t dim() const noexcept { return static_cast<std::size_t>(d2.size()); }

    /// B = D B~ D^{-1}.
    static RegressionParams from_btilde(const DenseMatrix& btilde, const Vector& d2);
    /// B~ = D^{-1} B D.
    DenseMatrix btilde() const;

    /// Largest relative violation of d2_k b_jk = d2_j b_kj; the per-entry scale
    /// is floored at 1e-6 of the largest |d2_k b_jk|.
    double symmetry_violation() const;
    /// Throws on shape, diagonal, positivity or symmetry violations.
    void validate(double symmetry_tol = 1e-9) const;
};

struct PrecisionEstimate
{
    DenseMatrix c;
    std::string method;
    double lambda = 0.0;
    std::size_t iterations = 0;
    double asymmetry = 0.0; // before symmetrization, relative
};

struct PartitionParameters
{
    Vector beta; // length p-1, other variables in increasing index order
    double d2 = 0.0;
};

/// Regression of component j on the rest implied by covariance sigma.
PartitionParameters partition_parameters(const DenseMatrix& sigma, std::size_t j);

/// C = D^{-2}(I - B), symmetrized.
PrecisionEstimate precision_from_params(const RegressionParams& params);

/// Precision D^{-1}(I - B~)D^{-1} straight from the normalized form.
DenseMatrix precision_from_btilde(const DenseMatrix& btilde, const Vector& d2);

/// Column c of the merged design corresponds to the unordered pair
/// pairs[c] = {j, k}, j < k, enumerated row-major over the upper triangle.
class PairIndex
{
public:
    explicit PairIndex(std::size_t p);

    std::size_t p() const noexcept { return p_; }
    std::size_t size() const noexcept { return pairs_.size(); }
    const std::pair<std::size_t, std::size_t>& pair(std::size_t col) const { return pairs_.at(col); }
    std::size_t column(std::size_t j, std::size_t k) const;

private:
    std::size_t p_;
    std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

struct SymmetricDesign
{
    std::size_t n = 0;
    std::size_t p = 0;
    Vector y;                 // stacked X~_1, ..., X~_p
    SparseColumnMatrix z{0, 0};
    PairIndex pairs{0};
    Vector weights;           // merged penalty weights, one per pair

    homotopy::WeightedLassoProblem problem() const { return {z, y, weights}; }
};

/// Builds the merged regression whose single coefficient per pair {j, k}
/// carries both b~_jk and b~_kj.
SymmetricDesign build_symmetric_design(const DenseMatrix& x, const Vector& d2);

/// Symmetric B~ from merged-design coefficients.
DenseMatrix btilde_from_coefficients(const homotopy::SparseVector& coef, const PairIndex& pairs);

/// Penalty weights sum_{j != k} w_jk |b_jk| in B-space.
double weighted_l1(const DenseMatrix& b, const DenseMatrix& w);

/// d2_j = ||X_j - sum_k X_k b_jk||^2 / n.
Vector d2_update(const DenseMatrix& x, const DenseMatrix& b);

/// Pseudo negative log-likelihood.
double pseudo_neg_loglik(const DenseMatrix& x, const RegressionParams& params);

struct SpliceOptions
{
    selection::Criterion criterion = selection::Criterion::AIC;
    selection::AiccMode aicc_mode = selection::AiccMode::printed;
    std::size_t warmup = 6;      // rounds before lambda is frozen
    std::size_t max_iter = 100;
    double tol = 1e-2;           // on max_j |log(d_j' / d_j)|
    homotopy::StoppingRule stop;
    bool center = true;
};

struct IterationRecord
{
    std::size_t iteration = 0;
    Vector d2;                   // d2 selected at the end of this iteration
    double lambda_selected = 0.0;
    double df = 0.0;
    double criterion_value = 0.0;
    double change = 0.0;         // stopping metric
    std::size_t breakpoints = 0;
};

struct SplicePathResult
{
    std::vector<IterationRecord> iterations;
    RegressionParams final_params;
    double lambda = 0.0;
    homotopy::LassoPath btilde_path;       // last iteration
    Vector design_d2;                      // D used to build the last design
    std::vector<Vector> path_d2;           // d2 along the last path
    PairIndex pairs{0};
    bool converged = false;
    std::size_t iterations_used = 0;
    std::vector<std::string> warnings;

    std::size_t path_size() const noexcept { return btilde_path.breakpoints.size(); }
    DenseMatrix path_btilde(std::size_t k) const;
    RegressionParams path_params(std::size_t k) const;
    PrecisionEstimate precision() const;
};

SplicePathResult fit_splice_path(const DenseMatrix& x, const SpliceOptions& opts = {});

/// Column-centered copy.
DenseMatrix center_columns(const DenseMatrix& x);

} // namespace splice::estimator
