#include "splice/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "splice/error.hpp"

namespace splice::simgen {

namespace {

void require_spd(const DenseMatrix& c, const char* what)
{
    if (linalg::min_eigenvalue(c) <= 0.0) {
        fail(ErrorKind::domain, std::string(what) + ": matrix is not positive definite");
    }
}

// Congruence that gives the implied covariance a unit diagonal.
DenseMatrix unit_variance(const DenseMatrix& c)
{
    const DenseMatrix sigma = linalg::inverse_spd(c);
    const Vector s = sigma.diagonal().array().sqrt();
    DenseMatrix out = s.asDiagonal() * c * s.asDiagonal();
    return 0.5 * (out + out.transpose());
}

} // namespace

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) noexcept
{
    return mix64(seed + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

double Rng::normal()
{
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
}

double Rng::uniform()
{
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
}

double Rng::chi_squared(double dof)
{
    std::chi_squared_distribution<double> dist(dof);
    return dist(engine_);
}

std::size_t Rng::below(std::size_t bound)
{
    std::uniform_int_distribution<std::size_t> dist(0, bound - 1);
    return dist(engine_);
}

DenseMatrix gaussian_sample_covariance(const DenseMatrix& sigma, std::size_t n, Rng& rng)
{
    const DenseMatrix l = linalg::Cholesky(linalg::symmetrized(sigma)).lower();
    const auto p = sigma.rows();
    DenseMatrix z(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            z(i, j) = rng.normal();
        }
    }
    return z * l.transpose();
}

DenseMatrix gaussian_sample(const DenseMatrix& c, std::size_t n, Rng& rng)
{
    const DenseMatrix l = linalg::Cholesky(linalg::symmetrized(c)).lower();
    const auto p = c.rows();
    DenseMatrix z(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            z(i, j) = rng.normal();
        }
    }
    if (n == 0) {
        return z;
    }
    // Rows x = L^{-T} z have covariance (L L')^{-1} = C^{-1}.
    const DenseMatrix zt = z.transpose();
    return l.transpose().triangularView<Eigen::Upper>().solve(zt).transpose();
}

std::size_t sample_truncated_geometric(double rate, std::size_t max_value, Rng& rng)
{
    if (!(rate > 0.0 && rate <= 1.0) || max_value < 1) {
        fail(ErrorKind::input, "sample_truncated_geometric: invalid parameters");
    }
    std::geometric_distribution<std::size_t> dist(rate); // failures before success
    while (true) {
        const std::size_t k = dist(rng.engine()) + 1;
        if (k <= max_value) {
            return k;
        }
    }
}

double truncated_geometric_mean(double rate, std::size_t max_value)
{
    double mass = 0.0;
    double first = 0.0;
    double pk = rate;
    for (std::size_t k = 1; k <= max_value; ++k) {
        mass += pk;
        first += static_cast<double>(k) * pk;
        pk *= 1.0 - rate;
    }
    return first / mass;
}

RandomPrecisionDraw sample_random_precision_draw(const RandomPrecisionOptions& opts, Rng& rng)
{
    const std::size_t p = opts.p;
    if (p < 2 || opts.sample_size < p) {
        fail(ErrorKind::input, "sample_random_precision: need p >= 2 and sample_size >= p");
    }
    const auto pp = static_cast<Eigen::Index>(p);
    DenseMatrix base = DenseMatrix::Ones(pp, pp);
    base.diagonal().array() += 1.0;
    const DenseMatrix x = gaussian_sample(base, opts.sample_size, rng);
    const DenseMatrix g = linalg::inverse_spd(x.transpose() * x);

    const std::size_t pairs = p * (p - 1) / 2;
    const std::size_t keep = sample_truncated_geometric(opts.rate, pairs, rng);
    std::vector<std::size_t> idx(pairs);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `keep` entries are a uniform subset.
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j = i + rng.below(pairs - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<char> selected(pairs, 0);
    for (std::size_t i = 0; i < keep; ++i) {
        selected[idx[i]] = 1;
    }
    DenseMatrix h = DenseMatrix::Zero(pp, pp);
    h.diagonal() = g.diagonal();
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < pp; ++i) {
        for (Eigen::Index j = i + 1; j < pp; ++j, ++c) {
            if (selected[c]) {
                h(i, j) = g(i, j);
                h(j, i) = g(i, j);
            }
        }
    }
    const double phi = linalg::min_eigenvalue(h);
    h.diagonal().array() += std::max(0.0, opts.floor - phi);
    return {h, keep};
}

DenseMatrix sample_random_precision(std::size_t p, Rng& rng)
{
    RandomPrecisionOptions opts;
    opts.p = p;
    opts.sample_size = std::max<std::size_t>(opts.sample_size, p + 5);
    return sample_random_precision_draw(opts, rng).c;
}

double default_star_strength(std::size_t p)
{
    if (p < 2) {
        fail(ErrorKind::input, "star: p must be at least 2");
    }
    return 0.5 / std::sqrt(static_cast<double>(p - 1));
}

DenseMatrix star_precision(std::size_t p, bool hub_first, double strength)
{
    if (p < 2) {
        fail(ErrorKind::input, "star_precision: p must be at least 2");
    }
    const auto pp = static_cast<Eigen::Index>(p);
    DenseMatrix c = DenseMatrix::Identity(pp, pp);
    const Eigen::Index hub = hub_first ? 0 : pp - 1;
    for (Eigen::Index k = 0; k < pp; ++k) {
        if (k != hub) {
            c(hub, k) = strength;
            c(k, hub) = strength;
        }
    }
    require_spd(c, "star_precision");
    return c;
}

std::string_view to_string(ArVariant v) noexcept
{
    switch (v) {
    case ArVariant::ar1: return "ar1";
    case ArVariant::ar2: return "ar2";
    case ArVariant::ar_like: return "ar_like";
    }
    return "unknown";
}

std::optional<ArVariant> parse_ar_variant(std::string_view s) noexcept
{
    if (s == "ar1") return ArVariant::ar1;
    if (s == "ar2") return ArVariant::ar2;
    if (s == "ar_like") return ArVariant::ar_like;
    return std::nullopt;
}

std::vector<double> default_ar_coefficients(ArVariant v)
{
    switch (v) {
    case ArVariant::ar1: return {0.7};
    case ArVariant::ar2: return {0.5, 0.25};
    case ArVariant::ar_like: return {0.7, 0.5};
    }
    return {};
}

DenseMatrix ar_covariance(std::size_t p, double rho)
{
    const auto pp = static_cast<Eigen::Index>(p);
    DenseMatrix s(pp, pp);
    for (Eigen::Index i = 0; i < pp; ++i) {
        for (Eigen::Index j = 0; j < pp; ++j) {
            s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
        }
    }
    return s;
}

DenseMatrix ar_precision(std::size_t p, ArVariant variant, const std::vector<double>& coefficients)
{
    if (p < 2) {
        fail(ErrorKind::input, "ar_precision: p must be at least 2");
    }
    const std::vector<double> coef = coefficients.empty() ? default_ar_coefficients(variant) : coefficients;
    const auto pp = static_cast<Eigen::Index>(p);
    auto ar1 = [&](double rho) {
        if (!(std::abs(rho) < 1.0)) {
            fail(ErrorKind::domain, "ar_precision: |rho| must be below 1");
        }
        DenseMatrix c = DenseMatrix::Zero(pp, pp);
        const double scale = 1.0 / (1.0 - rho * rho);
        for (Eigen::Index i = 0; i < pp; ++i) {
            c(i, i) = (i == 0 || i == pp - 1) ? scale : (1.0 + rho * rho) * scale;
            if (i + 1 < pp) {
                c(i, i + 1) = -rho * scale;
                c(i + 1, i) = -rho * scale;
            }
        }
        return c;
    };
    DenseMatrix c;
    switch (variant) {
    case ArVariant::ar1:
        if (coef.size() != 1) {
            fail(ErrorKind::input, "ar_precision: ar1 takes one coefficient");
        }
        c = ar1(coef[0]);
        break;
    case ArVariant::ar2:
        if (coef.size() != 2) {
            fail(ErrorKind::input, "ar_precision: ar2 takes two coefficients");
        }
        c = DenseMatrix::Identity(pp, pp);
        for (Eigen::Index i = 0; i < pp; ++i) {
            if (i + 1 < pp) {
                c(i, i + 1) = c(i + 1, i) = coef[0];
            }
            if (i + 2 < pp) {
                c(i, i + 2) = c(i + 2, i) = coef[1];
            }
        }
        require_spd(c, "ar_precision");
        c = unit_variance(c);
        break;
    case ArVariant::ar_like:
        if (coef.size() != 2) {
            fail(ErrorKind::input, "ar_precision: ar_like takes two coefficients");
        }
        c = ar1(coef[0]);
        if (pp > 2) {
            const double edge = coef[1] * linalg::min_eigenvalue(c);
            c(0, pp - 1) = c(pp - 1, 0) = -edge;
        }
        require_spd(c, "ar_precision");
        c = unit_variance(c);
        break;
    }
    require_spd(c, "ar_precision");
    return c;
}

DenseMatrix wishart(const DenseMatrix& scale, double dof, Rng& rng)
{
    const auto p = scale.rows();
    if (dof < static_cast<double>(p)) {
        fail(ErrorKind::singular, "wishart: degrees of freedom below the dimension");
    }
    const DenseMatrix l = linalg::Cholesky(linalg::symmetrized(scale)).lower();
    DenseMatrix a = DenseMatrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(dof - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) {
            a(i, j) = rng.normal();
        }
    }
    const DenseMatrix la = l * a;
    const DenseMatrix w = la * la.transpose();
    return 0.5 * (w + w.transpose());
}

DenseMatrix wishart_near_singular(std::size_t dof, std::size_t p, Rng& rng, double rho)
{
    if (dof < p) {
        fail(ErrorKind::singular, "wishart_near_singular: degrees of freedom below the dimension");
    }
    return wishart(ar_covariance(p, rho) / static_cast<double>(dof), static_cast<double>(dof), rng);
}

std::string_view to_string(TopologyKind k) noexcept
{
    switch (k) {
    case TopologyKind::star_direct: return "star_direct";
    case TopologyKind::star_inverted: return "star_inverted";
    case TopologyKind::ar1: return "ar1";
    case TopologyKind::ar2: return "ar2";
    case TopologyKind::ar_like: return "ar_like";
    case TopologyKind::random: return "random";
    }
    return "unknown";
}

std::optional<TopologyKind> parse_topology(std::string_view s) noexcept
{
    for (auto k : {TopologyKind::star_direct, TopologyKind::star_inverted, TopologyKind::ar1, TopologyKind::ar2,
                   TopologyKind::ar_like, TopologyKind::random}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

DenseMatrix generate_precision(const TopologySpec& spec)
{
    switch (spec.kind) {
    case TopologyKind::star_direct:
    case TopologyKind::star_inverted: {
        const double s = spec.parameters.empty() ? default_star_strength(spec.p) : spec.parameters.at(0);
        return star_precision(spec.p, spec.kind == TopologyKind::star_direct, s);
    }
    case TopologyKind::ar1: return ar_precision(spec.p, ArVariant::ar1, spec.parameters);
    case TopologyKind::ar2: return ar_precision(spec.p, ArVariant::ar2, spec.parameters);
    case TopologyKind::ar_like: return ar_precision(spec.p, ArVariant::ar_like, spec.parameters);
    case TopologyKind::random: {
        Rng rng(spec.seed);
        DenseMatrix c = sample_random_precision(spec.p, rng);
        require_spd(c, "generate_precision");
        return c;
    }
    }
    fail(ErrorKind::input, "generate_precision: unknown topology");
}

} // namespace splice::simgen
