#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "splice/linalg.hpp"

namespace splice::simgen {

using linalg::DenseMatrix;
using linalg::Vector;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of stream `stream` derived from a base seed:
/// mix64(seed + 0x9E3779B97F4A7C15 * (stream + 1)).
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// mt19937_64 seeded with mix64(seed).
class Rng
{
public:
    static constexpr std::string_view algorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }
    double normal();
    double uniform();
    double chi_squared(double dof);
    /// Uniform integer in [0, bound).
    std::size_t below(std::size_t bound);
    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// n i.i.d. rows from N(0, C^{-1}) for precision c.
DenseMatrix gaussian_sample(const DenseMatrix& c, std::size_t n, Rng& rng);
/// n i.i.d. rows from N(0, sigma).
DenseMatrix gaussian_sample_covariance(const DenseMatrix& sigma, std::size_t n, Rng& rng);

struct RandomPrecisionOptions
{
    std::size_t p = 15;
    std::size_t sample_size = 20;
    double rate = 0.05;  // geometric parameter
    double floor = 0.02; // minimum eigenvalue after the shift
};

struct RandomPrecisionDraw
{
    DenseMatrix c;
    std::size_t edges = 0; // kept off-diagonal pairs
};

/// Geometric on {1, 2, ...} with P(N = k) = rate (1 - rate)^{k-1}, conditioned
/// to N <= max_value by rejection.
std::size_t sample_truncated_geometric(double rate, std::size_t max_value, Rng& rng);
double truncated_geometric_mean(double rate, std::size_t max_value);

RandomPrecisionDraw sample_random_precision_draw(const RandomPrecisionOptions& opts, Rng& rng);
DenseMatrix sample_random_precision(std::size_t p, Rng& rng);

/// 0.5 / sqrt(p - 1): star eigenvalues are 1 +- 0.5.
double default_star_strength(std::size_t p);
/// Unit diagonal, hub row and column equal to `strength`.
DenseMatrix star_precision(std::size_t p, bool hub_first, double strength);

enum class ArVariant { ar1, ar2, ar_like };

std::string_view to_string(ArVariant v) noexcept;
std::optional<ArVariant> parse_ar_variant(std::string_view s) noexcept;

/// Default coefficients: ar1 {0.7}; ar2 {0.5, 0.25}; ar_like {0.7, 0.5}.
std::vector<double> default_ar_coefficients(ArVariant v);

/// Banded precision whose covariance has a unit diagonal.
///   ar1:     covariance rho^{|i-j|}, tridiagonal precision;
///   ar2:     precision diagonal 1, first band c0, second band c1, rescaled;
///   ar_like: ar1(rho) plus the edge (0, p-1) of value -c1 * lambda_min, rescaled.
DenseMatrix ar_precision(std::size_t p, ArVariant variant, const std::vector<double>& coefficients);

/// [Sigma-bar]_ij = rho^{|i-j|}.
DenseMatrix ar_covariance(std::size_t p, double rho);

/// Wishart(dof, scale) by the Bartlett decomposition; dof >= p.
DenseMatrix wishart(const DenseMatrix& scale, double dof, Rng& rng);

/// Wishart with dof degrees of freedom and scale Sigma-bar / dof, where
/// [Sigma-bar]_ij = 0.99^{|i-j|}; the expectation is Sigma-bar.
DenseMatrix wishart_near_singular(std::size_t dof, std::size_t p, Rng& rng, double rho = 0.99);

enum class TopologyKind { star_direct, star_inverted, ar1, ar2, ar_like, random };

std::string_view to_string(TopologyKind k) noexcept;
std::optional<TopologyKind> parse_topology(std::string_view s) noexcept;

struct TopologySpec
{
    TopologyKind kind = TopologyKind::star_direct;
    std::size_t p = 15;
    /// star: {strength}; ar*: coefficients; random: unused. Empty selects the
    /// defaults.
    std::vector<double> parameters;
    std::uint64_t seed = 0; // random topology only
};

/// Precision matrix of the topology; asserts positive definiteness.
DenseMatrix generate_precision(const TopologySpec& spec);

} // namespace splice::simgen
