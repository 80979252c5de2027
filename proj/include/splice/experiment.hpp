#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "splice/metrics.hpp"
#include "splice/selection.hpp"
#include "splice/simgen.hpp"

namespace splice::experiment {

using linalg::DenseMatrix;

enum class Method { splice, cholesky, cholesky_inverted, ridge };

std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view s) noexcept;

enum class Kind { accuracy, psd };
enum class Format { csv, json };

std::optional<Format> parse_format(std::string_view s) noexcept;

struct ExperimentSpec
{
    std::string name = "experiment";
    Kind kind = Kind::accuracy;
    simgen::TopologySpec topology;
    bool topology_seed_pinned = false; // otherwise the topology seed follows `seed`
    std::size_t n = 20;
    std::size_t replications = 20;
    std::vector<Method> methods{Method::splice};
    std::vector<selection::Criterion> criteria{selection::Criterion::AIC};
    selection::AiccMode aicc_mode = selection::AiccMode::printed;
    std::uint64_t seed = 1;
    std::size_t warmup = 6;
    std::size_t max_iter = 100;
    double tol = 1e-2;
    std::optional<std::size_t> max_active;
    std::optional<double> min_lambda;
    std::size_t ridge_grid_points = 25;
    std::size_t wishart_dof = 40;
    double wishart_rho = 0.99;
    bool roc = true;
    std::filesystem::path output = "results";
    Format format = Format::csv;
    std::size_t workers = 1;
    bool timing = false;

    /// Throws config errors for empty method/criterion lists, zero
    /// replications and other inconsistencies.
    void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec load_config(const std::filesystem::path& path);
/// Canonical `key = value` rendering of every field.
std::string render_config(const ExperimentSpec& spec);

struct Record
{
    std::string method;
    std::string criterion;
    std::size_t replication = 0;
    double lambda = 0.0;
    double df = 0.0;
    double quad_loss = 0.0;
    double entropy_loss = 0.0;
    double spec_norm_c = 0.0;
    double spec_norm_sigma = 0.0;
    int psd = 0;
    double min_eig = 0.0;
    double runtime_ms = 0.0;
};

struct ErrorRecord
{
    std::string method;
    std::string criterion;
    std::size_t replication = 0;
    std::string kind;
    std::string message;
};

struct SupportPathRecord
{
    std::string method;
    std::string criterion;
    std::size_t replication = 0;
    metrics::SupportPath path;
};

struct EigenPathEntry
{
    std::size_t replication = 0;
    double lambda_bar = 0.0;
    double min_eigenvalue = 0.0;
};

struct PsdReplication
{
    std::size_t replication = 0;
    std::string criterion;
    double psd_fraction = 0.0;
    std::size_t breakpoints = 0;
};

struct ExperimentResult
{
    ExperimentSpec spec;
    DenseMatrix truth; // precision; empty for psd experiments (per replication)
    metrics::Support true_support;
    std::vector<Record> records;
    std::vector<ErrorRecord> errors;
    std::vector<SupportPathRecord> support_paths;
    std::vector<EigenPathEntry> eigen_paths;
    std::vector<PsdReplication> psd;
};

/// Header of the records file.
inline constexpr const char* kRecordsHeader =
    "method,criterion,replication,lambda,df,quad_loss,entropy_loss,spec_norm_C,spec_norm_Sigma,psd,min_eig,runtime_ms";

ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_psd_experiment(const ExperimentSpec& spec);

/// Writes records, errors, summary, support paths, truth, ROC and eigen-path
/// plot data, and the resolved config into spec.output.
void emit_outputs(const ExperimentResult& result);

/// 17 significant digits in general notation; "nan", "inf" and "-inf"
/// for non-finite values.
std::string format_number(double v);

std::vector<Record> read_records_csv(const std::filesystem::path& path);

struct MetricSummary
{
    std::size_t count = 0;
    double mean = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

/// method -> criterion -> metric -> summary.
using Summary = std::map<std::string, std::map<std::string, std::map<std::string, MetricSummary>>>;

Summary summarize_records(const std::vector<Record>& records);

/// Re-reads records from a result directory and rewrites summary.json.
Summary summarize_directory(const std::filesystem::path& dir);

/// ROC curve per (method, criterion) key "method_criterion".
std::map<std::string, metrics::RocCurve> roc_curves(const std::vector<SupportPathRecord>& paths,
                                                   const metrics::Support& truth);

/// Re-reads support paths and truth from a result directory and rewrites the
/// ROC plot data files.
std::map<std::string, metrics::RocCurve> roc_directory(const std::filesystem::path& dir);

} // namespace splice::experiment
