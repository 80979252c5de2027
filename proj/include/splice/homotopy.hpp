#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "splice/linalg.hpp"

// Weighted-l1 homotopy (LARS-LASSO) path solver for
//
//     min_b  ||y - Z b||^2 + lambda * sum_j w_j |b_j|
//
// over a sparse column design. Gradient convention: g = 2 Z'(Z b - y), so an
// active coefficient satisfies g_j = -sign(b_j) * lambda * w_j and an inactive
// one |g_j| <= lambda * w_j.

namespace splice::homotopy {

using linalg::SparseColumnMatrix;
using linalg::Vector;

struct SparseVector
{
    std::size_t dim = 0;
    std::vector<std::size_t> indices; // strictly increasing
    std::vector<double> values;

    double at(std::size_t i) const;
    Vector dense() const;
    static SparseVector from_dense(const Vector& v);
};

struct WeightedLassoProblem
{
    SparseColumnMatrix design;
    Vector response;
    Vector weights;

    /// Throws on length mismatch, nonpositive or non-finite weights, or
    /// non-finite response.
    void validate() const;
};

struct StoppingRule
{
    std::optional<std::size_t> max_active;
    std::optional<double> min_lambda;
    /// Zero selects the default of 10 * q.
    std::size_t max_steps = 0;
};

enum class TerminationReason { lambda_zero, max_active, min_lambda, max_steps };

std::string_view to_string(TerminationReason r) noexcept;

struct Breakpoint
{
    double lambda = 0.0;
    /// Active set in effect on the segment below this breakpoint, ascending.
    std::vector<std::size_t> active_set;
    SparseVector coefficients;
};

struct LassoPath
{
    std::vector<Breakpoint> breakpoints;
    TerminationReason termination = TerminationReason::lambda_zero;
    std::size_t steps = 0;

    double lambda_max() const { return breakpoints.empty() ? 0.0 : breakpoints.front().lambda; }
};

/// Traces the exact piecewise-linear solution path from lambda_max downwards.
LassoPath trace_path(const WeightedLassoProblem& problem, const StoppingRule& stop = {});

/// Coefficients at an arbitrary lambda by linear interpolation between the
/// surrounding breakpoints.
SparseVector interpolate(const LassoPath& path, double lambda);

/// Largest |g_j|/w_j - lambda violation of the KKT conditions at a
/// breakpoint, measured in gradient units.
struct KktReport
{
    double active_violation = 0.0;
    double inactive_violation = 0.0;
    double sign_violation = 0.0;
    double scale = 1.0; // magnitude of the gradient at lambda_max
};

KktReport check_kkt(const WeightedLassoProblem& problem, const Breakpoint& bp, double lambda_max);

/// Objective ||y - Zb||^2 + lambda * ||b||_{w,1}.
double objective(const WeightedLassoProblem& problem, const SparseVector& b, double lambda);

/// Z * b as a dense vector.
Vector predict(const SparseColumnMatrix& design, const SparseVector& b);

} // namespace splice::homotopy
