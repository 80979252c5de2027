#pragma once

#include <cstddef>
#include <vector>

#include "splice/estimator.hpp"
#include "splice/linalg.hpp"
#include "splice/selection.hpp"

// l2-penalized pseudo-likelihood in the normalized form
//
//     min_{B~ symmetric, diag 0}  tr[(I - B~)' G (I - B~)] + lambda2 tr[B~' B~],
//
// with G = X~' X~. The free variables are the p(p-1)/2 upper-triangular
// entries, and the program reduces to one SPD linear system.

namespace splice::ridge {

using linalg::DenseMatrix;
using linalg::Vector;

struct RidgeEstimate
{
    DenseMatrix btilde;
    double lambda2 = 0.0;
    Vector d2;               // scaling used to form X~ (empty when unknown)
    double effective_df = 0.0; // trace of the merged hat matrix; NaN when solved by CG
};

/// Size above which the system is solved by conjugate gradients.
inline constexpr std::size_t kDirectSolveMaxP = 60;

/// Merged Gram matrix Z'Z of the pair design, built from G.
DenseMatrix merged_gram(const DenseMatrix& gram);
/// Z'y = 2 G_jk per pair.
Vector merged_rhs(const DenseMatrix& gram);

RidgeEstimate fit_ridge(const DenseMatrix& xtilde, double lambda2);
RidgeEstimate fit_ridge_gram(const DenseMatrix& gram, double lambda2);

/// (G + lambda2 I)(I - B~) = -(Theta + Omega) with Theta diagonal and Omega
/// antisymmetric; `residual` is the largest symmetric off-diagonal remainder.
struct RidgeKkt
{
    Vector theta;
    DenseMatrix omega;
    double residual = 0.0;
};

RidgeKkt ridge_kkt(const DenseMatrix& gram, const DenseMatrix& btilde, double lambda2);

/// For symmetric u, SPD v and PSD w with uv + vu = w, reports whether u is
/// PSD (min eigenvalue >= -1e-9).
bool verify_psd_lemma(const DenseMatrix& u, const DenseMatrix& v, const DenseMatrix& w);

/// lambda2 grid spanning [lo, hi] * mean(diag G), log-spaced.
std::vector<double> default_lambda2_grid(const DenseMatrix& gram, std::size_t points = 25, double lo = 1e-3,
                                         double hi = 1e2);

struct RidgeSelectOptions
{
    std::size_t grid_points = 25;
    std::size_t max_iter = 20;
    double tol = 1e-2;
    bool center = true;
};

/// One grid value after the B~ / D alternation has settled.
struct RidgeGridPoint
{
    double lambda2 = 0.0;
    estimator::RegressionParams params;
    double df = 0.0;   // p + effective degrees of freedom
    double nll = 0.0;  // exact negative log-likelihood
};

struct RidgeGrid
{
    std::size_t n = 0;
    std::vector<RidgeGridPoint> points; // decreasing lambda2
};

/// Fits the ridge estimate on a lambda2 grid, alternating B~ and D at each
/// grid value.
RidgeGrid fit_ridge_grid(const DenseMatrix& x, const RidgeSelectOptions& opts = {});

struct RidgeSelection
{
    RidgeGridPoint point;
    DenseMatrix c;
    double criterion_value = 0.0;
};

/// Exact likelihood plus criterion penalty with the effective degrees of
/// freedom.
RidgeSelection select_ridge(const RidgeGrid& grid, selection::Criterion criterion,
                            selection::AiccMode mode = selection::AiccMode::printed);

} // namespace splice::ridge
