#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "splice/homotopy.hpp"
#include "splice/linalg.hpp"
#include "splice/selection.hpp"

// l1-penalized Cholesky covariance selection. With the columns permuted by
// `ordering`, X_j is regressed on X_1..X_{j-1}; U is unit upper triangular
// with u_kj = -beta_jk, and C = U D^{-2} U'. The merged problem separates into
// p-1 lasso subproblems, subproblem j traced in lambda' = lambda * d2_j.

namespace splice::cholesky {

using linalg::DenseMatrix;
using linalg::Vector;

/// Permutation as a list of zero-based source indices: column i of the
/// permuted data is column ordering[i] of the original.
using Ordering = std::vector<std::size_t>;

Ordering natural_ordering(std::size_t p);
/// (p-1, ..., 0).
Ordering inverted_ordering(std::size_t p);
void validate_ordering(const Ordering& ordering, std::size_t p);

struct MergedBreakpoint
{
    double lambda = 0.0;
    DenseMatrix u; // permuted coordinates
};

struct CholeskyPath
{
    Ordering ordering;
    Vector d2; // permuted coordinates
    /// subpaths[j - 1] regresses permuted column j on columns 0..j-1.
    std::vector<homotopy::LassoPath> subpaths;
    std::vector<MergedBreakpoint> merged_breakpoints;

    std::size_t p() const noexcept { return ordering.size(); }
    /// U at an arbitrary merged lambda.
    DenseMatrix u_at(double lambda) const;
};

/// Traces the p-1 subpaths of the permuted data. They do not depend on d2.
std::vector<homotopy::LassoPath> trace_subpaths(const DenseMatrix& x_permuted,
                                                const homotopy::StoppingRule& stop = {});

/// Merges subpaths on the union grid {lambda'_jk / d2_j}.
CholeskyPath merge_subpaths(std::vector<homotopy::LassoPath> subpaths, const Ordering& ordering,
                            const Vector& d2_permuted);

/// d2 is given in original coordinates.
CholeskyPath fit_cholesky_path(const DenseMatrix& x, const Ordering& ordering, const Vector& d2,
                               const homotopy::StoppingRule& stop = {});

/// C = U diag(1/d2) U'.
DenseMatrix precision_from_cholesky(const DenseMatrix& u, const Vector& d2);

/// Maps a matrix from permuted to original coordinates.
DenseMatrix unpermute(const DenseMatrix& m, const Ordering& ordering);
Vector permute(const Vector& v, const Ordering& ordering);

/// Off-diagonal structural support (i < j) of U D^{-2} U' in original
/// coordinates.
std::vector<std::pair<std::size_t, std::size_t>> structural_support(const DenseMatrix& u,
                                                                     const Ordering& ordering);

/// Merged objective sum_j ||X_j - X_{<j} beta_j||^2 / d2_j + lambda ||beta||_1
/// on permuted data.
double merged_objective(const DenseMatrix& x_permuted, const DenseMatrix& u, const Vector& d2_permuted,
                        double lambda);

struct CholeskyOptions
{
    selection::Criterion criterion = selection::Criterion::AIC;
    selection::AiccMode aicc_mode = selection::AiccMode::printed;
    std::size_t warmup = 6;
    std::size_t max_iter = 100;
    double tol = 1e-2;
    homotopy::StoppingRule stop;
    bool center = true;
};

struct CholeskyFit
{
    CholeskyPath path;           // merged at the d2 of the last iteration
    DenseMatrix u;               // selected, permuted coordinates
    Vector d2;                   // selected, permuted coordinates
    DenseMatrix c;               // original coordinates
    double lambda = 0.0;
    double df = 0.0;
    double criterion_value = 0.0;
    std::size_t iterations_used = 0;
    bool converged = false;
};

/// Alternates the merged path and per-subproblem residual variances,
/// selecting lambda among merged breakpoints by exact likelihood plus
/// criterion penalty. lambda is frozen after the warm-up rounds.
CholeskyFit fit_cholesky(const DenseMatrix& x, const Ordering& ordering, const CholeskyOptions& opts = {});

} // namespace splice::cholesky
