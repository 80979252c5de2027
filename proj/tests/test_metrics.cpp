#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splice/error.hpp"
#include "splice/metrics.hpp"

using namespace splice;
using namespace splice::metrics;
using linalg::DenseMatrix;

TEST_CASE("quadratic_loss examples and product oracle")
{
    std::mt19937_64 gen(71);
    const DenseMatrix c = oracle::random_spd(gen, 4);
    CHECK(quadratic_loss(c, c) == doctest::Approx(0.0));
    CHECK(quadratic_loss(c, 2.0 * c) == doctest::Approx(1.0).epsilon(1e-12));
    for (int rep = 0; rep < 10; ++rep) {
        const DenseMatrix a = oracle::random_spd(gen, 4);
        const DenseMatrix b = oracle::random_spd(gen, 4);
        const DenseMatrix m = a * b.inverse() - DenseMatrix::Identity(4, 4);
        CHECK(std::abs(quadratic_loss(a, b) - (m * m).trace()) <= 1e-10 * std::max(1.0, (m * m).trace()));
    }
    DenseMatrix sing = DenseMatrix::Ones(2, 2);
    CHECK_THROWS_AS(quadratic_loss(DenseMatrix::Identity(2, 2), sing), Error);
}

TEST_CASE("entropy_loss examples and nonnegativity")
{
    std::mt19937_64 gen(72);
    const DenseMatrix c = oracle::random_spd(gen, 5);
    CHECK(std::abs(entropy_loss(c, c)) <= 1e-12);
    for (double s : {0.5, 2.0, 3.0}) {
        CHECK(entropy_loss(c, s * c) == doctest::Approx(5.0 * (1.0 / s + std::log(s) - 1.0)).epsilon(1e-10));
    }
    for (int rep = 0; rep < 100; ++rep) {
        CHECK(entropy_loss(oracle::random_spd(gen, 4), oracle::random_spd(gen, 4)) >= -1e-12);
    }
    DenseMatrix indef = DenseMatrix::Identity(2, 2);
    indef(1, 1) = -1.0;
    CHECK_THROWS_AS(entropy_loss(DenseMatrix::Identity(2, 2), indef), Error);
}

TEST_CASE("losses vanish only at equality")
{
    std::mt19937_64 gen(73);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix c = oracle::random_spd(gen, 4, 1.0);
        DenseMatrix d = c;
        d(1, 2) += 0.01;
        d(2, 1) += 0.01;
        CHECK(quadratic_loss(c, d) > 1e-6);
        CHECK(entropy_loss(c, d) > 1e-8);
    }
}

TEST_CASE("spectral_norm examples, eigenvalue oracle, norm axioms")
{
    CHECK(spectral_norm(DenseMatrix::Identity(3, 3)) == doctest::Approx(1.0));
    DenseMatrix d = DenseMatrix::Zero(2, 2);
    d.diagonal() << 3.0, -7.0;
    CHECK(spectral_norm(d) == doctest::Approx(7.0));
    std::mt19937_64 gen(74);
    for (int rep = 0; rep < 20; ++rep) {
        const DenseMatrix s = oracle::random_symmetric(gen, 5);
        const auto ev = linalg::symmetric_eigenvalues(s);
        CHECK(spectral_norm(s) == doctest::Approx(std::max(std::abs(ev.front()), std::abs(ev.back()))).epsilon(1e-12));
        const DenseMatrix a = oracle::random_matrix(gen, 4, 4);
        const DenseMatrix b = oracle::random_matrix(gen, 4, 4);
        CHECK(spectral_norm(a + b) <= spectral_norm(a) + spectral_norm(b) + 1e-9);
        CHECK(std::abs(spectral_norm(-2.5 * a) - 2.5 * spectral_norm(a)) <= 1e-9 * spectral_norm(a));
    }
}

TEST_CASE("true_support threshold")
{
    DenseMatrix c = DenseMatrix::Identity(3, 3);
    c(0, 2) = c(2, 0) = 0.3;
    c(0, 1) = c(1, 0) = 1e-13;
    const Support s = true_support(c);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == Edge{0, 2});
}

TEST_CASE("roc_curve: perfect, single error, averaging, exclusions")
{
    const Support truth{{0, 1}, {1, 2}, {2, 3}};
    const SupportPath perfect{{}, {{0, 1}}, {{0, 1}, {1, 2}}, {{0, 1}, {1, 2}, {2, 3}}};
    const auto a = roc_curve({perfect}, truth);
    REQUIRE(a.points.size() == 3);
    for (const auto& pt : a.points) {
        CHECK(pt.min_false_positives == 0.0);
    }
    const SupportPath one_error{{}, {{0, 3}}, {{0, 1}, {0, 3}}, {{0, 1}, {0, 3}, {1, 2}},
                                {{0, 1}, {0, 3}, {1, 2}, {2, 3}}};
    const auto b = roc_curve({one_error}, truth);
    for (const auto& pt : b.points) {
        CHECK(pt.min_false_positives == 1.0);
    }
    const SupportPath two_errors{{}, {{0, 2}}, {{0, 2}, {0, 3}}, {{0, 1}, {0, 2}, {0, 3}}};
    const auto c = roc_curve({perfect, two_errors}, truth);
    const RocPoint* t1 = c.find(1);
    REQUIRE(t1 != nullptr);
    CHECK(t1->min_false_positives == doctest::Approx(1.0));
    CHECK(t1->replications == 2);
    const RocPoint* t3 = c.find(3);
    REQUIRE(t3 != nullptr);
    CHECK(t3->replications == 1);
    CHECK(t3->excluded == 1);
    CHECK(c.max_true_positives == 3);
    CHECK_THROWS_AS(roc_curve({}, truth), Error);
}

TEST_CASE("roc_curve invariants and monotonicity under extra path points")
{
    std::mt19937_64 gen(75);
    const Support truth{{0, 1}, {0, 2}, {1, 3}, {2, 4}};
    std::vector<Edge> all;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            all.emplace_back(i, j);
        }
    }
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<SupportPath> paths;
        for (int r = 0; r < 4; ++r) {
            std::shuffle(all.begin(), all.end(), gen);
            SupportPath sp;
            Support cur;
            sp.push_back(cur);
            for (const auto& e : all) {
                cur.push_back(e);
                std::sort(cur.begin(), cur.end());
                sp.push_back(cur);
            }
            paths.push_back(sp);
        }
        const auto curve = roc_curve(paths, truth);
        for (std::size_t k = 1; k < curve.points.size(); ++k) {
            CHECK(curve.points[k].true_positives > curve.points[k - 1].true_positives);
            CHECK(curve.points[k].min_false_positives >= curve.points[k - 1].min_false_positives);
        }
        auto richer = paths;
        richer[0].push_back(Support(truth.begin(), truth.end()));
        const auto curve2 = roc_curve(richer, truth);
        for (const auto& pt : curve.points) {
            const RocPoint* q = curve2.find(pt.true_positives);
            REQUIRE(q != nullptr);
            CHECK(q->min_false_positives <= pt.min_false_positives + 1e-15);
        }
    }
}

TEST_CASE("min_eigenvalue_path examples")
{
    std::vector<std::pair<double, DenseMatrix>> path;
    for (double l : {4.0, 2.0, 1.0, 0.0}) {
        path.emplace_back(l, DenseMatrix::Identity(3, 3));
    }
    const auto recs = min_eigenvalue_path(path);
    REQUIRE(recs.size() == 4);
    CHECK(recs.front().lambda_bar == 1.0);
    CHECK(recs.back().lambda_bar == 0.0);
    for (const auto& r : recs) {
        CHECK(r.min_eigenvalue == doctest::Approx(1.0));
    }
    std::mt19937_64 gen(76);
    std::vector<std::pair<double, DenseMatrix>> rp;
    for (int k = 0; k < 5; ++k) {
        rp.emplace_back(5.0 - k, oracle::random_symmetric(gen, 4));
    }
    const auto rr = min_eigenvalue_path(rp);
    for (std::size_t k = 0; k < rp.size(); ++k) {
        CHECK(rr[k].min_eigenvalue == doctest::Approx(linalg::symmetric_eigenvalues(rp[k].second).front()));
        CHECK(rr[k].lambda_bar == doctest::Approx(rp[k].first / 5.0));
    }
}

TEST_CASE("psd_fraction on a linear path with a known crossing")
{
    // B(lambda) = (1 - lambda) * 2 off-diagonal for p = 2: I - B PSD iff
    // 2 (1 - lambda) <= 1, i.e. lambda >= 0.5, so the fraction is 0.5.
    DenseMatrix b0 = DenseMatrix::Zero(2, 2);
    DenseMatrix b1 = DenseMatrix::Zero(2, 2);
    b1(0, 1) = b1(1, 0) = 2.0;
    const double f = psd_fraction({{1.0, b0}, {0.0, b1}});
    CHECK(f == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(psd_fraction({{1.0, b0}, {0.0, b0}}) == 1.0);
}
