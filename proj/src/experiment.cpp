#include "splice/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "splice/cholesky.hpp"
#include "splice/error.hpp"
#include "splice/estimator.hpp"
#include "splice/ridge.hpp"

namespace splice::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(',', start);
        const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!piece.empty()) {
            out.push_back(piece);
        }
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        fail(ErrorKind::config, "config: '" + key + "' expects a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        fail(ErrorKind::config, "config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    fail(ErrorKind::config, "config: '" + key + "' expects true or false, got '" + v + "'");
}

std::string_view kind_name(Kind k) { return k == Kind::psd ? "psd" : "accuracy"; }

std::string join(const std::vector<std::string>& items)
{
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        s += (i ? ", " : "") + items[i];
    }
    return s;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::filesystem, "cannot write " + path.string());
    }
    return out;
}

void write_text(const fs::path& path, const std::string& text)
{
    auto out = open_out(path);
    out << text;
    if (!out) {
        fail(ErrorKind::filesystem, "write failed: " + path.string());
    }
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::filesystem, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json number_json(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return format_number(v);
}

double json_number(const json& j)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        return parse_double("value", j.get<std::string>());
    }
    return kNaN;
}

// All outputs of one replication, merged in replication order.
struct ReplicationOutput
{
    std::vector<Record> records;
    std::vector<ErrorRecord> errors;
    std::vector<SupportPathRecord> support_paths;
    std::vector<EigenPathEntry> eigen_paths;
    std::vector<PsdReplication> psd;
};

Record blank_record(std::string method, std::string criterion, std::size_t r)
{
    Record rec;
    rec.method = std::move(method);
    rec.criterion = std::move(criterion);
    rec.replication = r;
    rec.lambda = rec.df = rec.quad_loss = rec.entropy_loss = kNaN;
    rec.spec_norm_c = rec.spec_norm_sigma = rec.min_eig = kNaN;
    rec.psd = 0;
    rec.runtime_ms = 0.0;
    return rec;
}

void fill_metrics(Record& rec, const DenseMatrix& c_true, const DenseMatrix& sigma_true, const DenseMatrix& c_hat,
                  ReplicationOutput& out)
{
    auto note = [&](const char* metric, const std::exception& e) {
        const auto* err = dynamic_cast<const Error*>(&e);
        out.errors.push_back({rec.method, rec.criterion, rec.replication,
                              err ? std::string(to_string(err->kind())) : "internal",
                              std::string(metric) + ": " + e.what()});
    };
    try {
        rec.quad_loss = metrics::quadratic_loss(c_true, c_hat);
    } catch (const std::exception& e) {
        note("quad_loss", e);
    }
    try {
        rec.entropy_loss = metrics::entropy_loss(c_true, c_hat);
    } catch (const std::exception& e) {
        note("entropy_loss", e);
    }
    rec.spec_norm_c = metrics::spectral_norm(c_hat - c_true);
    const Eigen::FullPivLU<DenseMatrix> lu(c_hat);
    if (lu.isInvertible()) {
        rec.spec_norm_sigma = metrics::spectral_norm(DenseMatrix(lu.inverse()) - sigma_true);
    }
    rec.min_eig = linalg::min_eigenvalue(c_hat);
    rec.psd = rec.min_eig >= 0.0 ? 1 : 0;
}

metrics::Support support_of(const homotopy::SparseVector& coef, const estimator::PairIndex& pairs)
{
    metrics::Support s;
    s.reserve(coef.indices.size());
    for (const auto c : coef.indices) {
        s.push_back(pairs.pair(c));
    }
    std::sort(s.begin(), s.end());
    return s;
}

estimator::SpliceOptions splice_options(const ExperimentSpec& spec, selection::Criterion c)
{
    estimator::SpliceOptions o;
    o.criterion = c;
    o.aicc_mode = spec.aicc_mode;
    o.warmup = spec.warmup;
    o.max_iter = spec.max_iter;
    o.tol = spec.tol;
    o.stop.max_active = spec.max_active;
    o.stop.min_lambda = spec.min_lambda;
    return o;
}

double elapsed_ms(std::chrono::steady_clock::time_point t0, bool timing)
{
    if (!timing) {
        return 0.0;
    }
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void record_failure(ReplicationOutput& out, Record rec, const std::exception& e)
{
    const auto* err = dynamic_cast<const Error*>(&e);
    out.errors.push_back({rec.method, rec.criterion, rec.replication,
                          err ? std::string(to_string(err->kind())) : "internal", e.what()});
    out.records.push_back(std::move(rec));
}

ReplicationOutput run_accuracy_replication(const ExperimentSpec& spec, const DenseMatrix& truth,
                                           const DenseMatrix& sigma, std::size_t r)
{
    ReplicationOutput out;
    DenseMatrix x;
    try {
        simgen::Rng rng(simgen::split_seed(spec.seed, r));
        x = simgen::gaussian_sample(truth, spec.n, rng);
    } catch (const std::exception& e) {
        for (const auto m : spec.methods) {
            for (const auto c : spec.criteria) {
                record_failure(out, blank_record(std::string(to_string(m)), std::string(selection::to_string(c)), r), e);
            }
        }
        return out;
    }
    const std::size_t p = static_cast<std::size_t>(truth.rows());

    for (const auto m : spec.methods) {
        const std::string mname(to_string(m));
        std::optional<ridge::RidgeGrid> grid;
        std::optional<std::string> grid_error;
        for (const auto c : spec.criteria) {
            const std::string cname(selection::to_string(c));
            Record rec = blank_record(mname, cname, r);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                DenseMatrix c_hat;
                switch (m) {
                case Method::splice: {
                    const auto fit = estimator::fit_splice_path(x, splice_options(spec, c));
                    const auto est = fit.precision();
                    c_hat = est.c;
                    rec.lambda = fit.lambda;
                    rec.df = fit.iterations.back().df;
                    if (spec.roc) {
                        SupportPathRecord sp{mname, cname, r, {}};
                        for (const auto& bp : fit.btilde_path.breakpoints) {
                            sp.path.push_back(support_of(bp.coefficients, fit.pairs));
                        }
                        out.support_paths.push_back(std::move(sp));
                    }
                    break;
                }
                case Method::cholesky:
                case Method::cholesky_inverted: {
                    cholesky::CholeskyOptions o;
                    o.criterion = c;
                    o.aicc_mode = spec.aicc_mode;
                    o.warmup = spec.warmup;
                    o.max_iter = spec.max_iter;
                    o.tol = spec.tol;
                    o.stop.max_active = spec.max_active;
                    const auto ordering = m == Method::cholesky ? cholesky::natural_ordering(p)
                                                                : cholesky::inverted_ordering(p);
                    const auto fit = cholesky::fit_cholesky(x, ordering, o);
                    c_hat = fit.c;
                    rec.lambda = fit.lambda;
                    rec.df = fit.df;
                    if (spec.roc) {
                        SupportPathRecord sp{mname, cname, r, {}};
                        for (const auto& bp : fit.path.merged_breakpoints) {
                            sp.path.push_back(cholesky::structural_support(bp.u, ordering));
                        }
                        out.support_paths.push_back(std::move(sp));
                    }
                    break;
                }
                case Method::ridge: {
                    if (!grid) {
                        ridge::RidgeSelectOptions o;
                        o.grid_points = spec.ridge_grid_points;
                        o.max_iter = std::min<std::size_t>(spec.max_iter, 20);
                        o.tol = spec.tol;
                        grid = ridge::fit_ridge_grid(x, o);
                    }
                    const auto sel = ridge::select_ridge(*grid, c, spec.aicc_mode);
                    c_hat = sel.c;
                    rec.lambda = sel.point.lambda2;
                    rec.df = sel.point.df;
                    break;
                }
                }
                rec.runtime_ms = elapsed_ms(t0, spec.timing);
                fill_metrics(rec, truth, sigma, c_hat, out);
                out.records.push_back(std::move(rec));
            } catch (const std::exception& e) {
                rec.runtime_ms = elapsed_ms(t0, spec.timing);
                record_failure(out, std::move(rec), e);
            }
        }
    }
    return out;
}

ReplicationOutput run_psd_replication(const ExperimentSpec& spec, std::size_t r)
{
    ReplicationOutput out;
    DenseMatrix x;
    DenseMatrix sigma;
    DenseMatrix truth;
    try {
        simgen::Rng rng(simgen::split_seed(spec.seed, r));
        sigma = simgen::wishart_near_singular(spec.wishart_dof, spec.topology.p, rng, spec.wishart_rho);
        x = simgen::gaussian_sample_covariance(sigma, spec.n, rng);
        truth = linalg::inverse_spd(sigma);
    } catch (const std::exception& e) {
        for (const auto c : spec.criteria) {
            record_failure(out, blank_record("splice", std::string(selection::to_string(c)), r), e);
        }
        return out;
    }
    bool first = true;
    for (const auto c : spec.criteria) {
        const std::string cname(selection::to_string(c));
        Record rec = blank_record("splice", cname, r);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const auto fit = estimator::fit_splice_path(x, splice_options(spec, c));
            const auto est = fit.precision();
            rec.lambda = fit.lambda;
            rec.df = fit.iterations.back().df;
            rec.runtime_ms = elapsed_ms(t0, spec.timing);

            std::vector<std::pair<double, DenseMatrix>> bt_path;
            std::vector<std::pair<double, DenseMatrix>> c_path;
            for (std::size_t k = 0; k < fit.path_size(); ++k) {
                const double lam = fit.btilde_path.breakpoints[k].lambda;
                DenseMatrix bt = fit.path_btilde(k);
                c_path.emplace_back(lam, estimator::precision_from_btilde(bt, fit.path_d2[k]));
                bt_path.emplace_back(lam, std::move(bt));
            }
            out.psd.push_back({r, cname, metrics::psd_fraction(bt_path), fit.path_size()});
            if (first) {
                for (const auto& e : metrics::min_eigenvalue_path(c_path)) {
                    out.eigen_paths.push_back({r, e.lambda_bar, e.min_eigenvalue});
                }
            }
            fill_metrics(rec, truth, sigma, est.c, out);
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            rec.runtime_ms = elapsed_ms(t0, spec.timing);
            record_failure(out, std::move(rec), e);
        }
        first = false;
    }
    return out;
}

template <class Fn>
std::vector<ReplicationOutput> run_replications(std::size_t count, std::size_t workers, Fn fn)
{
    std::vector<ReplicationOutput> outs(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < count; r = next++) {
            outs[r] = fn(r);
        }
    };
    const std::size_t w = std::max<std::size_t>(1, std::min(workers, count));
    if (w == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (std::size_t i = 0; i < w; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return outs;
}

void merge_into(ExperimentResult& result, std::vector<ReplicationOutput>&& outs)
{
    for (auto& o : outs) {
        std::move(o.records.begin(), o.records.end(), std::back_inserter(result.records));
        std::move(o.errors.begin(), o.errors.end(), std::back_inserter(result.errors));
        std::move(o.support_paths.begin(), o.support_paths.end(), std::back_inserter(result.support_paths));
        std::move(o.eigen_paths.begin(), o.eigen_paths.end(), std::back_inserter(result.eigen_paths));
        std::move(o.psd.begin(), o.psd.end(), std::back_inserter(result.psd));
    }
}

json support_json(const metrics::Support& s)
{
    json a = json::array();
    for (const auto& [i, j] : s) {
        a.push_back({i, j});
    }
    return a;
}

metrics::Support support_from_json(const json& a)
{
    metrics::Support s;
    for (const auto& e : a) {
        s.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    std::sort(s.begin(), s.end());
    return s;
}

json record_json(const Record& r)
{
    return json{{"method", r.method},
                {"criterion", r.criterion},
                {"replication", r.replication},
                {"lambda", number_json(r.lambda)},
                {"df", number_json(r.df)},
                {"quad_loss", number_json(r.quad_loss)},
                {"entropy_loss", number_json(r.entropy_loss)},
                {"spec_norm_C", number_json(r.spec_norm_c)},
                {"spec_norm_Sigma", number_json(r.spec_norm_sigma)},
                {"psd", r.psd},
                {"min_eig", number_json(r.min_eig)},
                {"runtime_ms", number_json(r.runtime_ms)}};
}

std::vector<Record> read_records_json(const fs::path& path)
{
    const json doc = json::parse(read_text(path));
    std::vector<Record> out;
    for (const auto& j : doc.at("records")) {
        Record r;
        r.method = j.at("method").get<std::string>();
        r.criterion = j.at("criterion").get<std::string>();
        r.replication = j.at("replication").get<std::size_t>();
        r.lambda = json_number(j.at("lambda"));
        r.df = json_number(j.at("df"));
        r.quad_loss = json_number(j.at("quad_loss"));
        r.entropy_loss = json_number(j.at("entropy_loss"));
        r.spec_norm_c = json_number(j.at("spec_norm_C"));
        r.spec_norm_sigma = json_number(j.at("spec_norm_Sigma"));
        r.psd = j.at("psd").get<int>();
        r.min_eig = json_number(j.at("min_eig"));
        r.runtime_ms = json_number(j.at("runtime_ms"));
        out.push_back(std::move(r));
    }
    return out;
}

MetricSummary summarize_values(std::vector<double> v)
{
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
    MetricSummary s;
    s.count = v.size();
    if (v.empty()) {
        s.mean = s.q1 = s.median = s.q3 = kNaN;
        return s;
    }
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (const double x : v) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(v.size());
    auto quantile = [&](double q) {
        const double h = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    return s;
}

json summary_json(const Summary& s, std::size_t count)
{
    json methods = json::object();
    for (const auto& [m, crit] : s) {
        for (const auto& [c, mets] : crit) {
            for (const auto& [metric, ms] : mets) {
                methods[m][c][metric] = json{{"count", ms.count},
                                             {"mean", number_json(ms.mean)},
                                             {"q1", number_json(ms.q1)},
                                             {"median", number_json(ms.median)},
                                             {"q3", number_json(ms.q3)}};
            }
        }
    }
    return json{{"records", count}, {"summary", methods}};
}

void write_roc_files(const fs::path& dir, const std::map<std::string, metrics::RocCurve>& curves)
{
    for (const auto& [key, curve] : curves) {
        std::ostringstream os;
        os << "# true_positives mean_min_false_positives std_error replications excluded\n";
        for (const auto& pt : curve.points) {
            os << pt.true_positives << ' ' << format_number(pt.min_false_positives) << ' '
               << format_number(pt.std_error) << ' ' << pt.replications << ' ' << pt.excluded << '\n';
        }
        write_text(dir / ("roc_" + key + ".dat"), os.str());
    }
}

} // namespace

std::string_view to_string(Method m) noexcept
{
    switch (m) {
    case Method::splice: return "splice";
    case Method::cholesky: return "cholesky";
    case Method::cholesky_inverted: return "cholesky_inverted";
    case Method::ridge: return "ridge";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view s) noexcept
{
    for (auto m : {Method::splice, Method::cholesky, Method::cholesky_inverted, Method::ridge}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    return std::nullopt;
}

std::optional<Format> parse_format(std::string_view s) noexcept
{
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    return std::nullopt;
}

void ExperimentSpec::validate() const
{
    if (replications < 1) {
        fail(ErrorKind::config, "config: replications must be at least 1");
    }
    if (methods.empty()) {
        fail(ErrorKind::config, "config: at least one method is required");
    }
    if (criteria.empty()) {
        fail(ErrorKind::config, "config: at least one criterion is required");
    }
    if (topology.p < 2) {
        fail(ErrorKind::config, "config: p must be at least 2");
    }
    if (n < 2) {
        fail(ErrorKind::config, "config: n must be at least 2");
    }
    if (kind == Kind::psd) {
        if (methods.size() != 1 || methods.front() != Method::splice) {
            fail(ErrorKind::config, "config: psd experiments run the splice method only");
        }
        if (wishart_dof < topology.p) {
            fail(ErrorKind::config, "config: wishart_dof must be at least p");
        }
    }
    if (max_iter < 1) {
        fail(ErrorKind::config, "config: max_iter must be at least 1");
    }
}

ExperimentSpec parse_config(const std::string& text)
{
    ExperimentSpec spec;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::config, "config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key == "name") {
            spec.name = value;
        } else if (key == "kind") {
            if (value == "accuracy") {
                spec.kind = Kind::accuracy;
            } else if (value == "psd") {
                spec.kind = Kind::psd;
            } else {
                fail(ErrorKind::config, "config: unknown kind '" + value + "'");
            }
        } else if (key == "topology") {
            const auto k = simgen::parse_topology(value);
            if (!k) {
                fail(ErrorKind::config, "config: unknown topology '" + value + "'");
            }
            spec.topology.kind = *k;
        } else if (key == "topology_parameters") {
            spec.topology.parameters.clear();
            for (const auto& v : split_list(value)) {
                spec.topology.parameters.push_back(parse_double(key, v));
            }
        } else if (key == "topology_seed") {
            spec.topology.seed = parse_u64(key, value);
            spec.topology_seed_pinned = true;
        } else if (key == "p") {
            spec.topology.p = parse_u64(key, value);
        } else if (key == "n") {
            spec.n = parse_u64(key, value);
        } else if (key == "replications") {
            spec.replications = parse_u64(key, value);
        } else if (key == "methods") {
            spec.methods.clear();
            for (const auto& v : split_list(value)) {
                const auto m = parse_method(v);
                if (!m) {
                    fail(ErrorKind::config, "config: unknown method '" + v + "'");
                }
                spec.methods.push_back(*m);
            }
        } else if (key == "criteria") {
            spec.criteria.clear();
            for (const auto& v : split_list(value)) {
                const auto c = selection::parse_criterion(v);
                if (!c) {
                    fail(ErrorKind::config, "config: unknown criterion '" + v + "'");
                }
                spec.criteria.push_back(*c);
            }
        } else if (key == "aicc_mode") {
            if (value == "printed") {
                spec.aicc_mode = selection::AiccMode::printed;
            } else if (value == "standard") {
                spec.aicc_mode = selection::AiccMode::standard;
            } else {
                fail(ErrorKind::config, "config: aicc_mode must be printed or standard");
            }
        } else if (key == "seed") {
            spec.seed = parse_u64(key, value);
        } else if (key == "warmup") {
            spec.warmup = parse_u64(key, value);
        } else if (key == "max_iter") {
            spec.max_iter = parse_u64(key, value);
        } else if (key == "tol") {
            spec.tol = parse_double(key, value);
        } else if (key == "max_active") {
            spec.max_active = value == "none" ? std::nullopt : std::optional<std::size_t>(parse_u64(key, value));
        } else if (key == "min_lambda") {
            spec.min_lambda = value == "none" ? std::nullopt : std::optional<double>(parse_double(key, value));
        } else if (key == "ridge_grid_points") {
            spec.ridge_grid_points = parse_u64(key, value);
        } else if (key == "wishart_dof") {
            spec.wishart_dof = parse_u64(key, value);
        } else if (key == "wishart_rho") {
            spec.wishart_rho = parse_double(key, value);
        } else if (key == "roc") {
            spec.roc = parse_bool(key, value);
        } else if (key == "output") {
            spec.output = value;
        } else if (key == "format") {
            const auto f = parse_format(value);
            if (!f) {
                fail(ErrorKind::config, "config: format must be csv or json");
            }
            spec.format = *f;
        } else if (key == "workers") {
            spec.workers = parse_u64(key, value);
        } else if (key == "timing") {
            spec.timing = parse_bool(key, value);
        } else {
            fail(ErrorKind::config, "config: unknown key '" + key + "'");
        }
    }
    if (!spec.topology_seed_pinned) {
        spec.topology.seed = spec.seed;
    }
    spec.validate();
    return spec;
}

ExperimentSpec load_config(const fs::path& path)
{
    return parse_config(read_text(path));
}

std::string render_config(const ExperimentSpec& spec)
{
    std::vector<std::string> methods;
    for (const auto m : spec.methods) {
        methods.emplace_back(to_string(m));
    }
    std::vector<std::string> criteria;
    for (const auto c : spec.criteria) {
        criteria.emplace_back(selection::to_string(c));
    }
    std::vector<std::string> params;
    for (const double v : spec.topology.parameters) {
        params.push_back(format_number(v));
    }
    std::ostringstream os;
    os << "name = " << spec.name << '\n'
       << "kind = " << kind_name(spec.kind) << '\n'
       << "topology = " << simgen::to_string(spec.topology.kind) << '\n'
       << "topology_parameters = " << join(params) << '\n'
       << "topology_seed = " << spec.topology.seed << '\n'
       << "p = " << spec.topology.p << '\n'
       << "n = " << spec.n << '\n'
       << "replications = " << spec.replications << '\n'
       << "methods = " << join(methods) << '\n'
       << "criteria = " << join(criteria) << '\n'
       << "aicc_mode = " << (spec.aicc_mode == selection::AiccMode::printed ? "printed" : "standard") << '\n'
       << "seed = " << spec.seed << '\n'
       << "warmup = " << spec.warmup << '\n'
       << "max_iter = " << spec.max_iter << '\n'
       << "tol = " << format_number(spec.tol) << '\n'
       << "max_active = " << (spec.max_active ? std::to_string(*spec.max_active) : "none") << '\n'
       << "min_lambda = " << (spec.min_lambda ? format_number(*spec.min_lambda) : "none") << '\n'
       << "ridge_grid_points = " << spec.ridge_grid_points << '\n'
       << "wishart_dof = " << spec.wishart_dof << '\n'
       << "wishart_rho = " << format_number(spec.wishart_rho) << '\n'
       << "roc = " << (spec.roc ? "true" : "false") << '\n'
       << "format = " << (spec.format == Format::csv ? "csv" : "json") << '\n'
       << "timing = " << (spec.timing ? "true" : "false") << '\n';
    return os.str();
}

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    if (spec.kind != Kind::accuracy) {
        fail(ErrorKind::config, "run_experiment: config describes a psd experiment");
    }
    ExperimentResult result;
    result.spec = spec;
    result.truth = simgen::generate_precision(spec.topology);
    result.true_support = metrics::true_support(result.truth);
    const DenseMatrix sigma = linalg::inverse_spd(result.truth);
    merge_into(result, run_replications(spec.replications, spec.workers, [&](std::size_t r) {
                   return run_accuracy_replication(spec, result.truth, sigma, r);
               }));
    return result;
}

ExperimentResult run_psd_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    if (spec.kind != Kind::psd) {
        fail(ErrorKind::config, "run_psd_experiment: config does not describe a psd experiment");
    }
    ExperimentResult result;
    result.spec = spec;
    merge_into(result, run_replications(spec.replications, spec.workers,
                                        [&](std::size_t r) { return run_psd_replication(spec, r); }));
    return result;
}

void emit_outputs(const ExperimentResult& result)
{
    const ExperimentSpec& spec = result.spec;
    const fs::path dir = spec.output;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        fail(ErrorKind::filesystem, "cannot create output directory " + dir.string());
    }

    if (spec.format == Format::csv) {
        std::ostringstream os;
        os << kRecordsHeader << '\n';
        for (const auto& r : result.records) {
            os << r.method << ',' << r.criterion << ',' << r.replication << ',' << format_number(r.lambda) << ','
               << format_number(r.df) << ',' << format_number(r.quad_loss) << ',' << format_number(r.entropy_loss)
               << ',' << format_number(r.spec_norm_c) << ',' << format_number(r.spec_norm_sigma) << ',' << r.psd
               << ',' << format_number(r.min_eig) << ',' << format_number(r.runtime_ms) << '\n';
        }
        write_text(dir / "records.csv", os.str());
    } else {
        json arr = json::array();
        for (const auto& r : result.records) {
            arr.push_back(record_json(r));
        }
        write_text(dir / "records.json", json{{"header", kRecordsHeader}, {"records", arr}}.dump(1) + "\n");
    }

    {
        std::ostringstream os;
        os << "method,criterion,replication,kind,message\n";
        for (const auto& e : result.errors) {
            std::string msg = e.message;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            os << e.method << ',' << e.criterion << ',' << e.replication << ',' << e.kind << ',' << msg << '\n';
        }
        write_text(dir / "errors.csv", os.str());
    }

    write_text(dir / "summary.json",
               summary_json(summarize_records(result.records), result.records.size()).dump(1) + "\n");
    write_text(dir / "config.resolved", render_config(spec));

    if (spec.kind == Kind::accuracy) {
        json truth{{"p", spec.topology.p},
                   {"topology", simgen::to_string(spec.topology.kind)},
                   {"support", support_json(result.true_support)}};
        json rows = json::array();
        for (Eigen::Index i = 0; i < result.truth.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < result.truth.cols(); ++j) {
                row.push_back(result.truth(i, j));
            }
            rows.push_back(row);
        }
        truth["precision"] = rows;
        write_text(dir / "truth.json", truth.dump(1) + "\n");
        if (spec.roc) {
            json paths = json::array();
            for (const auto& sp : result.support_paths) {
                json supports = json::array();
                for (const auto& s : sp.path) {
                    supports.push_back(support_json(s));
                }
                paths.push_back(json{{"method", sp.method},
                                     {"criterion", sp.criterion},
                                     {"replication", sp.replication},
                                     {"supports", supports}});
            }
            write_text(dir / "support_paths.json", json{{"paths", paths}}.dump() + "\n");
            write_roc_files(dir, roc_curves(result.support_paths, result.true_support));
        }
    } else {
        std::ostringstream os;
        os << "# replication lambda_bar min_eigenvalue\n";
        for (const auto& e : result.eigen_paths) {
            os << e.replication << ' ' << format_number(e.lambda_bar) << ' ' << format_number(e.min_eigenvalue)
               << '\n';
        }
        write_text(dir / "eigen_paths.dat", os.str());
        json reps = json::array();
        std::map<std::string, std::pair<double, std::size_t>> totals;
        for (const auto& ps : result.psd) {
            reps.push_back(json{{"replication", ps.replication},
                                {"criterion", ps.criterion},
                                {"psd_fraction", ps.psd_fraction},
                                {"breakpoints", ps.breakpoints}});
            totals[ps.criterion].first += ps.psd_fraction;
            totals[ps.criterion].second += 1;
        }
        json means = json::object();
        for (const auto& [c, t] : totals) {
            means[c] = t.first / static_cast<double>(t.second);
        }
        write_text(dir / "psd_summary.json", json{{"mean_psd_fraction", means}, {"replications", reps}}.dump(1) + "\n");
    }
}

std::vector<Record> read_records_csv(const fs::path& path)
{
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line) || trim(line) != kRecordsHeader) {
        fail(ErrorKind::input, "records file has an unexpected header: " + path.string());
    }
    std::vector<Record> out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find(',', start);
            f.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
            if (pos == std::string::npos) {
                break;
            }
            start = pos + 1;
        }
        if (f.size() != 12) {
            fail(ErrorKind::input, "records file: expected 12 fields in '" + line + "'");
        }
        Record r;
        r.method = f[0];
        r.criterion = f[1];
        r.replication = parse_u64("replication", f[2]);
        r.lambda = parse_double("lambda", f[3]);
        r.df = parse_double("df", f[4]);
        r.quad_loss = parse_double("quad_loss", f[5]);
        r.entropy_loss = parse_double("entropy_loss", f[6]);
        r.spec_norm_c = parse_double("spec_norm_C", f[7]);
        r.spec_norm_sigma = parse_double("spec_norm_Sigma", f[8]);
        r.psd = static_cast<int>(parse_u64("psd", f[9]));
        r.min_eig = parse_double("min_eig", f[10]);
        r.runtime_ms = parse_double("runtime_ms", trim(f[11]));
        out.push_back(std::move(r));
    }
    return out;
}

Summary summarize_records(const std::vector<Record>& records)
{
    std::map<std::string, std::map<std::string, std::map<std::string, std::vector<double>>>> values;
    for (const auto& r : records) {
        auto& m = values[r.method][r.criterion];
        m["lambda"].push_back(r.lambda);
        m["df"].push_back(r.df);
        m["quad_loss"].push_back(r.quad_loss);
        m["entropy_loss"].push_back(r.entropy_loss);
        m["spec_norm_C"].push_back(r.spec_norm_c);
        m["spec_norm_Sigma"].push_back(r.spec_norm_sigma);
        m["psd"].push_back(static_cast<double>(r.psd));
        m["min_eig"].push_back(r.min_eig);
        m["runtime_ms"].push_back(r.runtime_ms);
    }
    Summary s;
    for (auto& [m, crit] : values) {
        for (auto& [c, mets] : crit) {
            for (auto& [metric, v] : mets) {
                s[m][c][metric] = summarize_values(std::move(v));
            }
        }
    }
    return s;
}

Summary summarize_directory(const fs::path& dir)
{
    std::vector<Record> records;
    if (fs::exists(dir / "records.csv")) {
        records = read_records_csv(dir / "records.csv");
    } else if (fs::exists(dir / "records.json")) {
        records = read_records_json(dir / "records.json");
    } else {
        fail(ErrorKind::filesystem, "no records file in " + dir.string());
    }
    Summary s = summarize_records(records);
    write_text(dir / "summary.json", summary_json(s, records.size()).dump(1) + "\n");
    return s;
}

std::map<std::string, metrics::RocCurve> roc_curves(const std::vector<SupportPathRecord>& paths,
                                                   const metrics::Support& truth)
{
    std::map<std::string, std::vector<metrics::SupportPath>> grouped;
    for (const auto& sp : paths) {
        grouped[sp.method + "_" + sp.criterion].push_back(sp.path);
    }
    std::map<std::string, metrics::RocCurve> out;
    for (const auto& [key, ps] : grouped) {
        out[key] = metrics::roc_curve(ps, truth);
    }
    return out;
}

std::map<std::string, metrics::RocCurve> roc_directory(const fs::path& dir)
{
    const json truth = json::parse(read_text(dir / "truth.json"));
    const json doc = json::parse(read_text(dir / "support_paths.json"));
    std::vector<SupportPathRecord> paths;
    for (const auto& j : doc.at("paths")) {
        SupportPathRecord sp;
        sp.method = j.at("method").get<std::string>();
        sp.criterion = j.at("criterion").get<std::string>();
        sp.replication = j.at("replication").get<std::size_t>();
        for (const auto& s : j.at("supports")) {
            sp.path.push_back(support_from_json(s));
        }
        paths.push_back(std::move(sp));
    }
    auto curves = roc_curves(paths, support_from_json(truth.at("support")));
    write_roc_files(dir, curves);
    return curves;
}

} // namespace splice::experiment
