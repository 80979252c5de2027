#include "splice/splice.h"

#include <exception>
#include <new>
#include <sstream>
#include <string>

#include "splice/cholesky.hpp"
#include "splice/error.hpp"
#include "splice/estimator.hpp"
#include "splice/experiment.hpp"
#include "splice/ridge.hpp"

struct splice_data
{
    splice::linalg::DenseMatrix x;
};

struct splice_fit
{
    splice::estimator::SplicePathResult result;
    splice::linalg::DenseMatrix precision;
};

struct splice_experiment
{
    splice::experiment::ExperimentSpec spec;
    splice::experiment::ExperimentResult result;
    std::string output;
    bool ran = false;
};

struct splice_string
{
    std::string text;
};

namespace {

thread_local std::string g_last_error;

splice_status status_of(splice::ErrorKind k)
{
    using splice::ErrorKind;
    switch (k) {
    case ErrorKind::dimension: return SPLICE_ERR_DIMENSION;
    case ErrorKind::asymmetry: return SPLICE_ERR_ASYMMETRY;
    case ErrorKind::singular: return SPLICE_ERR_SINGULAR;
    case ErrorKind::domain: return SPLICE_ERR_DOMAIN;
    case ErrorKind::degenerate_column: return SPLICE_ERR_DEGENERATE_COLUMN;
    case ErrorKind::input: return SPLICE_ERR_INPUT;
    case ErrorKind::out_of_range: return SPLICE_ERR_OUT_OF_RANGE;
    case ErrorKind::inconsistent_params: return SPLICE_ERR_INCONSISTENT_PARAMS;
    case ErrorKind::degenerate_residual: return SPLICE_ERR_DEGENERATE_RESIDUAL;
    case ErrorKind::precondition: return SPLICE_ERR_PRECONDITION;
    case ErrorKind::no_valid_model: return SPLICE_ERR_NO_VALID_MODEL;
    case ErrorKind::filesystem: return SPLICE_ERR_FILESYSTEM;
    case ErrorKind::config: return SPLICE_ERR_CONFIG;
    }
    return SPLICE_ERR_INTERNAL;
}

template <class Fn>
splice_status guarded(Fn&& fn)
{
    try {
        fn();
        g_last_error.clear();
        return SPLICE_OK;
    } catch (const splice::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SPLICE_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SPLICE_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SPLICE_ERR_INTERNAL;
    }
}

splice_status null_argument(const char* what)
{
    g_last_error = std::string("null argument: ") + what;
    return SPLICE_ERR_NULL_ARGUMENT;
}

splice::selection::Criterion criterion_of(splice_criterion c)
{
    switch (c) {
    case SPLICE_AIC: return splice::selection::Criterion::AIC;
    case SPLICE_AICC: return splice::selection::Criterion::AICc;
    case SPLICE_BIC: return splice::selection::Criterion::BIC;
    }
    splice::fail(splice::ErrorKind::input, "unknown criterion");
}

splice::estimator::SpliceOptions options_of(const splice_options* o)
{
    splice::estimator::SpliceOptions out;
    if (!o) {
        return out;
    }
    out.criterion = criterion_of(o->criterion);
    out.aicc_mode = o->aicc_mode == SPLICE_AICC_STANDARD ? splice::selection::AiccMode::standard
                                                         : splice::selection::AiccMode::printed;
    out.warmup = o->warmup;
    out.max_iter = o->max_iter;
    out.tol = o->tol;
    if (o->max_active > 0) {
        out.stop.max_active = o->max_active;
    }
    if (o->min_lambda >= 0.0) {
        out.stop.min_lambda = o->min_lambda;
    }
    out.center = o->center != 0;
    return out;
}

void copy_row_major(const splice::linalg::DenseMatrix& m, double* out)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[i * m.cols() + j] = m(i, j);
        }
    }
}

} // namespace

extern "C" {

const char* splice_version(void) { return "0.1.0"; }

const char* splice_status_string(splice_status status)
{
    switch (status) {
    case SPLICE_OK: return "ok";
    case SPLICE_ERR_DIMENSION: return "dimension";
    case SPLICE_ERR_ASYMMETRY: return "asymmetry";
    case SPLICE_ERR_SINGULAR: return "singular";
    case SPLICE_ERR_DOMAIN: return "domain";
    case SPLICE_ERR_DEGENERATE_COLUMN: return "degenerate_column";
    case SPLICE_ERR_INPUT: return "input";
    case SPLICE_ERR_OUT_OF_RANGE: return "out_of_range";
    case SPLICE_ERR_INCONSISTENT_PARAMS: return "inconsistent_params";
    case SPLICE_ERR_DEGENERATE_RESIDUAL: return "degenerate_residual";
    case SPLICE_ERR_PRECONDITION: return "precondition";
    case SPLICE_ERR_NO_VALID_MODEL: return "no_valid_model";
    case SPLICE_ERR_FILESYSTEM: return "filesystem";
    case SPLICE_ERR_CONFIG: return "config";
    case SPLICE_ERR_NULL_ARGUMENT: return "null_argument";
    case SPLICE_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* splice_last_error(void) { return g_last_error.c_str(); }

splice_status splice_data_create(size_t n, size_t p, const double* row_major, splice_data** out)
{
    if (!out) return null_argument("out");
    if (!row_major && n * p > 0) return null_argument("row_major");
    *out = nullptr;
    return guarded([&] {
        auto d = std::make_unique<splice_data>();
        d->x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < p; ++j) {
                d->x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row_major[i * p + j];
            }
        }
        if (!d->x.allFinite()) {
            splice::fail(splice::ErrorKind::input, "splice_data_create: non-finite values");
        }
        *out = d.release();
    });
}

void splice_data_destroy(splice_data* data) { delete data; }

size_t splice_data_rows(const splice_data* data) { return data ? static_cast<size_t>(data->x.rows()) : 0; }
size_t splice_data_cols(const splice_data* data) { return data ? static_cast<size_t>(data->x.cols()) : 0; }

void splice_options_default(splice_options* opts)
{
    if (!opts) return;
    opts->criterion = SPLICE_AIC;
    opts->aicc_mode = SPLICE_AICC_PRINTED;
    opts->warmup = 6;
    opts->max_iter = 100;
    opts->tol = 1e-2;
    opts->max_active = 0;
    opts->min_lambda = -1.0;
    opts->center = 1;
}

splice_status splice_fit_path(const splice_data* data, const splice_options* opts, splice_fit** out)
{
    if (!data) return null_argument("data");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        auto f = std::make_unique<splice_fit>();
        f->result = splice::estimator::fit_splice_path(data->x, options_of(opts));
        f->precision = f->result.precision().c;
        *out = f.release();
    });
}

void splice_fit_destroy(splice_fit* fit) { delete fit; }

splice_status splice_fit_dim(const splice_fit* fit, size_t* p)
{
    if (!fit) return null_argument("fit");
    if (!p) return null_argument("p");
    *p = static_cast<size_t>(fit->precision.rows());
    g_last_error.clear();
    return SPLICE_OK;
}

splice_status splice_fit_precision(const splice_fit* fit, double* out)
{
    if (!fit) return null_argument("fit");
    if (!out) return null_argument("out");
    copy_row_major(fit->precision, out);
    g_last_error.clear();
    return SPLICE_OK;
}

splice_status splice_fit_lambda(const splice_fit* fit, double* lambda)
{
    if (!fit) return null_argument("fit");
    if (!lambda) return null_argument("lambda");
    *lambda = fit->result.lambda;
    g_last_error.clear();
    return SPLICE_OK;
}

splice_status splice_fit_iterations(const splice_fit* fit, size_t* iterations, int* converged)
{
    if (!fit) return null_argument("fit");
    if (iterations) *iterations = fit->result.iterations_used;
    if (converged) *converged = fit->result.converged ? 1 : 0;
    g_last_error.clear();
    return SPLICE_OK;
}

splice_status splice_fit_path_size(const splice_fit* fit, size_t* size)
{
    if (!fit) return null_argument("fit");
    if (!size) return null_argument("size");
    *size = fit->result.path_size();
    g_last_error.clear();
    return SPLICE_OK;
}

splice_status splice_fit_path_lambda(const splice_fit* fit, size_t k, double* lambda)
{
    if (!fit) return null_argument("fit");
    if (!lambda) return null_argument("lambda");
    return guarded([&] {
        if (k >= fit->result.path_size()) {
            splice::fail(splice::ErrorKind::out_of_range, "splice_fit_path_lambda: index out of range");
        }
        *lambda = fit->result.btilde_path.breakpoints[k].lambda;
    });
}

splice_status splice_fit_path_precision(const splice_fit* fit, size_t k, double* out)
{
    if (!fit) return null_argument("fit");
    if (!out) return null_argument("out");
    return guarded([&] {
        if (k >= fit->result.path_size()) {
            splice::fail(splice::ErrorKind::out_of_range, "splice_fit_path_precision: index out of range");
        }
        copy_row_major(splice::estimator::precision_from_btilde(fit->result.path_btilde(k), fit->result.path_d2[k]),
                       out);
    });
}

splice_status splice_fit_cholesky(const splice_data* data, const splice_options* opts, int inverted,
                                  double* precision_out, double* lambda_out)
{
    if (!data) return null_argument("data");
    if (!precision_out) return null_argument("precision_out");
    return guarded([&] {
        const auto so = options_of(opts);
        splice::cholesky::CholeskyOptions o;
        o.criterion = so.criterion;
        o.aicc_mode = so.aicc_mode;
        o.warmup = so.warmup;
        o.max_iter = so.max_iter;
        o.tol = so.tol;
        o.stop = so.stop;
        o.center = so.center;
        const auto p = static_cast<std::size_t>(data->x.cols());
        const auto ordering =
            inverted ? splice::cholesky::inverted_ordering(p) : splice::cholesky::natural_ordering(p);
        const auto fit = splice::cholesky::fit_cholesky(data->x, ordering, o);
        copy_row_major(fit.c, precision_out);
        if (lambda_out) {
            *lambda_out = fit.lambda;
        }
    });
}

splice_status splice_fit_ridge(const splice_data* data, splice_criterion criterion, size_t grid_points,
                               double* precision_out, double* lambda2_out)
{
    if (!data) return null_argument("data");
    if (!precision_out) return null_argument("precision_out");
    return guarded([&] {
        splice::ridge::RidgeSelectOptions o;
        if (grid_points > 0) {
            o.grid_points = grid_points;
        }
        const auto grid = splice::ridge::fit_ridge_grid(data->x, o);
        const auto sel = splice::ridge::select_ridge(grid, criterion_of(criterion));
        copy_row_major(sel.c, precision_out);
        if (lambda2_out) {
            *lambda2_out = sel.point.lambda2;
        }
    });
}

void splice_overrides_default(splice_overrides* ov)
{
    if (!ov) return;
    ov->has_seed = 0;
    ov->seed = 0;
    ov->replications = 0;
    ov->workers = 0;
    ov->output = nullptr;
    ov->format = SPLICE_FORMAT_KEEP;
    ov->timing = -1;
}

splice_status splice_experiment_load(const char* config_path, const splice_overrides* ov, splice_experiment** out)
{
    if (!config_path) return null_argument("config_path");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        auto e = std::make_unique<splice_experiment>();
        e->spec = splice::experiment::load_config(config_path);
        if (ov) {
            if (ov->has_seed) {
                if (!e->spec.topology_seed_pinned) {
                    e->spec.topology.seed = ov->seed;
                }
                e->spec.seed = ov->seed;
            }
            if (ov->replications > 0) e->spec.replications = ov->replications;
            if (ov->workers > 0) e->spec.workers = ov->workers;
            if (ov->output) e->spec.output = ov->output;
            if (ov->format == SPLICE_FORMAT_CSV) e->spec.format = splice::experiment::Format::csv;
            if (ov->format == SPLICE_FORMAT_JSON) e->spec.format = splice::experiment::Format::json;
            if (ov->timing >= 0) e->spec.timing = ov->timing != 0;
        }
        e->spec.validate();
        e->output = e->spec.output.string();
        *out = e.release();
    });
}

void splice_experiment_destroy(splice_experiment* exp) { delete exp; }

splice_status splice_experiment_kind(const splice_experiment* exp, splice_kind* kind)
{
    if (!exp) return null_argument("exp");
    if (!kind) return null_argument("kind");
    *kind = exp->spec.kind == splice::experiment::Kind::psd ? SPLICE_KIND_PSD : SPLICE_KIND_ACCURACY;
    g_last_error.clear();
    return SPLICE_OK;
}

splice_status splice_experiment_run(splice_experiment* exp)
{
    if (!exp) return null_argument("exp");
    return guarded([&] {
        exp->result = exp->spec.kind == splice::experiment::Kind::psd
                          ? splice::experiment::run_psd_experiment(exp->spec)
                          : splice::experiment::run_experiment(exp->spec);
        splice::experiment::emit_outputs(exp->result);
        exp->ran = true;
    });
}

splice_status splice_experiment_counts(const splice_experiment* exp, size_t* records, size_t* errors)
{
    if (!exp) return null_argument("exp");
    if (records) *records = exp->result.records.size();
    if (errors) *errors = exp->result.errors.size();
    g_last_error.clear();
    return SPLICE_OK;
}

const char* splice_experiment_output(const splice_experiment* exp) { return exp ? exp->output.c_str() : ""; }

splice_status splice_experiment_psd_fraction(const splice_experiment* exp, double* mean)
{
    if (!exp) return null_argument("exp");
    if (!mean) return null_argument("mean");
    return guarded([&] {
        if (!exp->ran || exp->spec.kind != splice::experiment::Kind::psd) {
            splice::fail(splice::ErrorKind::precondition, "splice_experiment_psd_fraction: no psd results");
        }
        const std::string first(splice::selection::to_string(exp->spec.criteria.front()));
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& ps : exp->result.psd) {
            if (ps.criterion == first) {
                sum += ps.psd_fraction;
                ++count;
            }
        }
        if (count == 0) {
            splice::fail(splice::ErrorKind::no_valid_model, "splice_experiment_psd_fraction: every replication failed");
        }
        *mean = sum / static_cast<double>(count);
    });
}

splice_status splice_summarize(const char* result_dir, splice_string** out)
{
    if (!result_dir) return null_argument("result_dir");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        const auto summary = splice::experiment::summarize_directory(result_dir);
        std::ostringstream os;
        os << "method,criterion,metric,count,mean,q1,median,q3\n";
        for (const auto& [m, crit] : summary) {
            for (const auto& [c, mets] : crit) {
                for (const auto& [metric, s] : mets) {
                    using splice::experiment::format_number;
                    os << m << ',' << c << ',' << metric << ',' << s.count << ',' << format_number(s.mean) << ','
                       << format_number(s.q1) << ',' << format_number(s.median) << ',' << format_number(s.q3)
                       << '\n';
                }
            }
        }
        *out = new splice_string{os.str()};
    });
}

splice_status splice_roc(const char* result_dir, splice_string** out)
{
    if (!result_dir) return null_argument("result_dir");
    if (!out) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        const auto curves = splice::experiment::roc_directory(result_dir);
        std::ostringstream os;
        os << "curve,true_positives,mean_min_false_positives,std_error,replications,excluded\n";
        for (const auto& [key, curve] : curves) {
            for (const auto& pt : curve.points) {
                using splice::experiment::format_number;
                os << key << ',' << pt.true_positives << ',' << format_number(pt.min_false_positives) << ','
                   << format_number(pt.std_error) << ',' << pt.replications << ',' << pt.excluded << '\n';
            }
        }
        *out = new splice_string{os.str()};
    });
}

const char* splice_string_data(const splice_string* s) { return s ? s->text.c_str() : ""; }

void splice_string_destroy(splice_string* s) { delete s; }

} // extern "C"
