#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splice/error.hpp"
#include "splice/homotopy.hpp"

using namespace splice;
using namespace splice::homotopy;
using linalg::DenseMatrix;

namespace {

WeightedLassoProblem random_problem(std::mt19937_64& gen, long n, long q, bool unit_weights = false)
{
    const DenseMatrix z = oracle::random_matrix(gen, n, q);
    const Vector y = oracle::random_vector(gen, n);
    const Vector w = unit_weights ? Vector(Vector::Ones(q)) : oracle::random_positive(gen, q, 0.5, 2.0);
    return {linalg::SparseColumnMatrix::from_dense(z), y, w};
}

bool kkt_ok(const KktReport& r, double tol = 1e-8)
{
    return r.active_violation <= tol * r.scale && r.inactive_violation <= tol * r.scale &&
           r.sign_violation <= tol * r.scale;
}

} // namespace

TEST_CASE("orthonormal design: soft-threshold closed form at every breakpoint")
{
    std::mt19937_64 gen(1);
    const DenseMatrix a = oracle::random_matrix(gen, 12, 4);
    const Eigen::HouseholderQR<DenseMatrix> qr(a);
    const DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(12, 4);
    const Vector y = oracle::random_vector(gen, 12);
    const WeightedLassoProblem prob{linalg::SparseColumnMatrix::from_dense(q), y, Vector::Ones(4)};
    const LassoPath path = trace_path(prob);
    REQUIRE(path.termination == TerminationReason::lambda_zero);
    for (const auto& bp : path.breakpoints) {
        for (long j = 0; j < 4; ++j) {
            const double ref = oracle::soft_threshold(2.0 * q.col(j).dot(y), bp.lambda) / 2.0;
            CHECK(bp.coefficients.at(static_cast<std::size_t>(j)) == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("first breakpoint is lambda_max with zero coefficients")
{
    std::mt19937_64 gen(2);
    for (int rep = 0; rep < 10; ++rep) {
        const auto prob = random_problem(gen, 20, 6);
        const auto path = trace_path(prob);
        const DenseMatrix z = prob.design.dense();
        double lmax = 0.0;
        for (long j = 0; j < z.cols(); ++j) {
            lmax = std::max(lmax, std::abs(2.0 * z.col(j).dot(prob.response)) / prob.weights[j]);
        }
        CHECK(path.lambda_max() == doctest::Approx(lmax).epsilon(1e-12));
        CHECK(path.breakpoints.front().coefficients.indices.empty());
        CHECK(interpolate(path, 2.0 * lmax).indices.empty());
        CHECK(interpolate(path, path.lambda_max()).indices.empty());
    }
}

TEST_CASE("breakpoints: strictly decreasing lambda, support within active set, KKT")
{
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 30; ++rep) {
        const auto prob = random_problem(gen, 15 + rep, 3 + rep % 13);
        const auto path = trace_path(prob);
        for (std::size_t k = 0; k < path.breakpoints.size(); ++k) {
            const auto& bp = path.breakpoints[k];
            if (k > 0) {
                CHECK(bp.lambda < path.breakpoints[k - 1].lambda);
            }
            for (auto idx : bp.coefficients.indices) {
                CHECK(std::binary_search(bp.active_set.begin(), bp.active_set.end(), idx));
            }
            CHECK(kkt_ok(check_kkt(prob, bp, path.lambda_max())));
        }
    }
}

TEST_CASE("q=5, N=20: breakpoints match coordinate descent")
{
    std::mt19937_64 gen(4);
    for (int rep = 0; rep < 10; ++rep) {
        const auto prob = random_problem(gen, 20, 5);
        const DenseMatrix z = prob.design.dense();
        const auto path = trace_path(prob);
        for (const auto& bp : path.breakpoints) {
            if (bp.lambda <= 0.0) {
                continue;
            }
            const auto ref = oracle::lasso_cd(z, prob.response, prob.weights, bp.lambda);
            CHECK(ref.gap <= 1e-10);
            CHECK(oracle::max_abs(bp.coefficients.dense() - ref.b) <= 1e-6);
        }
    }
}

TEST_CASE("objective is nonincreasing as lambda decreases")
{
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 10; ++rep) {
        const auto prob = random_problem(gen, 25, 8);
        const auto path = trace_path(prob);
        double prev = objective(prob, path.breakpoints.front().coefficients, path.breakpoints.front().lambda);
        for (std::size_t k = 1; k < path.breakpoints.size(); ++k) {
            const auto& bp = path.breakpoints[k];
            const double cur = objective(prob, bp.coefficients, bp.lambda);
            CHECK(cur <= prev + 1e-9 * std::max(1.0, prev));
            prev = cur;
        }
    }
}

TEST_CASE("weight equivalence: scaling w_j and column j by c leaves predictions unchanged")
{
    std::mt19937_64 gen(6);
    for (int rep = 0; rep < 5; ++rep) {
        auto prob = random_problem(gen, 20, 6);
        const DenseMatrix z = prob.design.dense();
        const auto base = trace_path(prob);
        DenseMatrix z2 = z;
        Vector w2 = prob.weights;
        const Vector c = oracle::random_positive(gen, 6, 0.5, 2.0);
        for (long j = 0; j < 6; ++j) {
            z2.col(j) *= c[j];
            w2[j] *= c[j];
        }
        const WeightedLassoProblem prob2{linalg::SparseColumnMatrix::from_dense(z2), prob.response, w2};
        const auto other = trace_path(prob2);
        const double lmax = base.lambda_max();
        for (int t = 1; t <= 10; ++t) {
            const double lam = lmax * std::pow(10.0, -3.0 * t / 10.0);
            const Vector f1 = z * interpolate(base, lam).dense();
            const Vector f2 = z2 * interpolate(other, lam).dense();
            CHECK(oracle::max_abs(f1 - f2) <= 1e-9 * std::max(1.0, oracle::max_abs(f1)));
        }
    }
}

TEST_CASE("interpolate: exact at breakpoints, midpoint average, range check")
{
    std::mt19937_64 gen(7);
    const auto prob = random_problem(gen, 30, 6);
    const auto path = trace_path(prob);
    REQUIRE(path.breakpoints.size() >= 3);
    for (std::size_t k = 0; k + 1 < path.breakpoints.size(); ++k) {
        const auto& a = path.breakpoints[k];
        const auto& b = path.breakpoints[k + 1];
        CHECK(oracle::max_abs(interpolate(path, a.lambda).dense() - a.coefficients.dense()) == 0.0);
        const Vector mid = interpolate(path, (a.lambda + b.lambda) / 2.0).dense();
        const Vector avg = (a.coefficients.dense() + b.coefficients.dense()) / 2.0;
        CHECK(oracle::max_abs(mid - avg) <= 1e-12 * std::max(1.0, oracle::max_abs(avg)));
    }
    StoppingRule stop;
    stop.max_active = 2;
    const auto early = trace_path(prob, stop);
    CHECK(early.termination == TerminationReason::max_active);
    const double last = early.breakpoints.back().lambda;
    try {
        interpolate(early, last / 2.0);
        FAIL("expected out_of_range");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::out_of_range);
    }
}

TEST_CASE("stopping rules: min_lambda, max_active, max_steps")
{
    std::mt19937_64 gen(8);
    const auto prob = random_problem(gen, 30, 10);
    const auto full = trace_path(prob);
    StoppingRule s1;
    s1.min_lambda = full.lambda_max() / 10.0;
    const auto p1 = trace_path(prob, s1);
    CHECK(p1.termination == TerminationReason::min_lambda);
    CHECK(p1.breakpoints.back().lambda >= *s1.min_lambda * (1 - 1e-12));
    StoppingRule s2;
    s2.max_active = 3;
    const auto p2 = trace_path(prob, s2);
    CHECK(p2.termination == TerminationReason::max_active);
    CHECK(p2.breakpoints.back().active_set.size() <= 3);
    StoppingRule s3;
    s3.max_steps = 2;
    const auto p3 = trace_path(prob, s3);
    CHECK(p3.termination == TerminationReason::max_steps);
    StoppingRule s4;
    s4.min_lambda = full.lambda_max() * 2.0;
    const auto p4 = trace_path(prob, s4);
    CHECK(p4.breakpoints.size() == 1);
    CHECK(p4.breakpoints.front().coefficients.indices.empty());
}

TEST_CASE("drops: paths with sign crossings keep KKT")
{
    // Strongly correlated columns force coefficient drops along the path.
    std::mt19937_64 gen(9);
    std::size_t drops = 0;
    for (int rep = 0; rep < 40; ++rep) {
        DenseMatrix z = oracle::random_matrix(gen, 20, 6);
        z.col(1) = z.col(0) + 0.1 * z.col(1);
        z.col(3) = z.col(2) - 0.2 * z.col(3) + 0.3 * z.col(0);
        const Vector y = oracle::random_vector(gen, 20);
        const WeightedLassoProblem prob{linalg::SparseColumnMatrix::from_dense(z), y, Vector::Ones(6)};
        const auto path = trace_path(prob);
        for (std::size_t k = 1; k < path.breakpoints.size(); ++k) {
            if (path.breakpoints[k].active_set.size() < path.breakpoints[k - 1].active_set.size()) {
                ++drops;
            }
            CHECK(kkt_ok(check_kkt(prob, path.breakpoints[k], path.lambda_max())));
        }
    }
    CHECK(drops > 0);
}

TEST_CASE("input validation")
{
    DenseMatrix z = DenseMatrix::Ones(4, 2);
    z.col(1).setZero();
    const WeightedLassoProblem zero_col{linalg::SparseColumnMatrix::from_dense(z), Vector::Ones(4), Vector::Ones(2)};
    try {
        trace_path(zero_col);
        FAIL("expected degenerate column");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_column);
    }
    Vector y = Vector::Ones(4);
    y[0] = std::nan("");
    const WeightedLassoProblem bad{linalg::SparseColumnMatrix::from_dense(DenseMatrix::Ones(4, 1)), y, Vector::Ones(1)};
    try {
        trace_path(bad);
        FAIL("expected input error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::input);
    }
    const WeightedLassoProblem negw{linalg::SparseColumnMatrix::from_dense(DenseMatrix::Ones(4, 1)), Vector::Ones(4),
                                    -Vector::Ones(1)};
    CHECK_THROWS_AS(trace_path(negw), Error);
}

TEST_CASE("determinism: identical inputs give identical paths")
{
    std::mt19937_64 gen(10);
    const auto prob = random_problem(gen, 20, 8);
    const auto a = trace_path(prob);
    const auto b = trace_path(prob);
    REQUIRE(a.breakpoints.size() == b.breakpoints.size());
    for (std::size_t k = 0; k < a.breakpoints.size(); ++k) {
        CHECK(a.breakpoints[k].lambda == b.breakpoints[k].lambda);
        CHECK(a.breakpoints[k].coefficients.values == b.breakpoints[k].coefficients.values);
    }
}
