// Command-line front end over the C interface.
//
//   splice run <config>         accuracy experiment
//   splice psd-run <config>     positive-definiteness path experiment
//   splice summarize <dir>      recompute summary.json from the records
//   splice roc <dir>            recompute ROC plot data from the support paths

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "splice/splice.h"

namespace {

struct RunFlags
{
    std::optional<std::uint64_t> seed;
    std::size_t replications = 0;
    std::size_t workers = 0;
    std::string output;
    std::string format;
    bool timing = false;
};

int report(splice_status st)
{
    std::fprintf(stderr, "error (%s): %s\n", splice_status_string(st), splice_last_error());
    return 1;
}

int run_config(const std::string& path, const RunFlags& flags, splice_kind expected)
{
    splice_overrides ov;
    splice_overrides_default(&ov);
    if (flags.seed) {
        ov.has_seed = 1;
        ov.seed = *flags.seed;
    }
    ov.replications = flags.replications;
    ov.workers = flags.workers;
    if (!flags.output.empty()) {
        ov.output = flags.output.c_str();
    }
    if (flags.format == "csv") {
        ov.format = SPLICE_FORMAT_CSV;
    } else if (flags.format == "json") {
        ov.format = SPLICE_FORMAT_JSON;
    }
    if (flags.timing) {
        ov.timing = 1;
    }

    splice_experiment* exp = nullptr;
    splice_status st = splice_experiment_load(path.c_str(), &ov, &exp);
    if (st != SPLICE_OK) {
        return report(st);
    }
    splice_kind kind{};
    splice_experiment_kind(exp, &kind);
    if (kind != expected) {
        std::fprintf(stderr, "error: %s describes a%s experiment; use `%s`\n", path.c_str(),
                     kind == SPLICE_KIND_PSD ? " psd" : "n accuracy", kind == SPLICE_KIND_PSD ? "psd-run" : "run");
        splice_experiment_destroy(exp);
        return 2;
    }
    st = splice_experiment_run(exp);
    if (st != SPLICE_OK) {
        splice_experiment_destroy(exp);
        return report(st);
    }
    std::size_t records = 0;
    std::size_t errors = 0;
    splice_experiment_counts(exp, &records, &errors);
    std::printf("wrote %zu records (%zu errors) to %s\n", records, errors, splice_experiment_output(exp));
    if (kind == SPLICE_KIND_PSD) {
        double mean = 0.0;
        if (splice_experiment_psd_fraction(exp, &mean) == SPLICE_OK) {
            std::printf("mean psd path fraction: %.6f\n", mean);
        }
    }
    splice_experiment_destroy(exp);
    return 0;
}

int print_text(splice_status st, splice_string* s)
{
    if (st != SPLICE_OK) {
        return report(st);
    }
    std::fputs(splice_string_data(s), stdout);
    splice_string_destroy(s);
    return 0;
}

void add_run_flags(CLI::App* cmd, RunFlags& flags)
{
    cmd->add_option("--seed", flags.seed, "Base seed (overrides the config)");
    cmd->add_option("--replications", flags.replications, "Number of replications (overrides the config)");
    cmd->add_option("--workers", flags.workers, "Replication worker threads");
    cmd->add_option("--output", flags.output, "Result directory (overrides the config)");
    cmd->add_option("--format", flags.format, "Records file format")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_flag("--timing", flags.timing, "Record wall-clock runtime_ms instead of 0");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse pseudo-likelihood precision estimation experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", splice_version());

    RunFlags run_flags;
    std::string run_path;
    auto* run = app.add_subcommand("run", "Run an accuracy experiment");
    run->add_option("config", run_path, "Experiment config")->required()->check(CLI::ExistingFile);
    add_run_flags(run, run_flags);

    RunFlags psd_flags;
    std::string psd_path;
    auto* psd = app.add_subcommand("psd-run", "Run a positive-definiteness path experiment");
    psd->add_option("config", psd_path, "Experiment config")->required()->check(CLI::ExistingFile);
    add_run_flags(psd, psd_flags);

    std::string summarize_dir;
    auto* summarize = app.add_subcommand("summarize", "Summarize a result directory");
    summarize->add_option("result-dir", summarize_dir, "Result directory")->required()->check(CLI::ExistingDirectory);

    std::string roc_dir;
    auto* roc = app.add_subcommand("roc", "Compute ROC curves for a result directory");
    roc->add_option("result-dir", roc_dir, "Result directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return run_config(run_path, run_flags, SPLICE_KIND_ACCURACY);
    }
    if (psd->parsed()) {
        return run_config(psd_path, psd_flags, SPLICE_KIND_PSD);
    }
    if (summarize->parsed()) {
        splice_string* s = nullptr;
        const splice_status st = splice_summarize(summarize_dir.c_str(), &s);
        return print_text(st, s);
    }
    if (roc->parsed()) {
        splice_string* s = nullptr;
        const splice_status st = splice_roc(roc_dir.c_str(), &s);
        return print_text(st, s);
    }
    return 0;
}
