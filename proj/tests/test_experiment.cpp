#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "splice/error.hpp"
#include "splice/experiment.hpp"

using namespace splice;
using namespace splice::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("splice_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentSpec small_spec()
{
    ExperimentSpec spec;
    spec.topology.kind = simgen::TopologyKind::ar1;
    spec.topology.p = 3;
    spec.n = 50;
    spec.replications = 1;
    spec.methods = {Method::splice};
    spec.criteria = {selection::Criterion::AIC};
    return spec;
}

} // namespace

TEST_CASE("smoke: one replication, one record with finite metrics")
{
    const auto res = run_experiment(small_spec());
    REQUIRE(res.records.size() == 1);
    const Record& r = res.records[0];
    CHECK(r.method == "splice");
    CHECK(std::isfinite(r.quad_loss));
    CHECK(std::isfinite(r.entropy_loss));
    CHECK(std::isfinite(r.spec_norm_c));
    CHECK(std::isfinite(r.spec_norm_sigma));
    CHECK(r.df >= 3.0);
}

TEST_CASE("record count equals replications x methods x criteria")
{
    ExperimentSpec spec = small_spec();
    spec.topology.p = 5;
    spec.replications = 3;
    spec.methods = {Method::splice, Method::cholesky, Method::cholesky_inverted, Method::ridge};
    spec.criteria = {selection::Criterion::AIC, selection::Criterion::AICc, selection::Criterion::BIC};
    spec.output = scratch("count");
    const auto res = run_experiment(spec);
    CHECK(res.records.size() + res.errors.size() == 36);
    CHECK(res.records.size() == 36);
    emit_outputs(res);
    const auto back = read_records_csv(spec.output / "records.csv");
    CHECK(back.size() == 36);
}

TEST_CASE("records round-trip at full precision")
{
    ExperimentSpec spec = small_spec();
    spec.replications = 2;
    spec.methods = {Method::splice, Method::ridge};
    spec.output = scratch("roundtrip");
    auto res = run_experiment(spec);
    res.spec.output = spec.output;
    emit_outputs(res);
    const auto back = read_records_csv(spec.output / "records.csv");
    REQUIRE(back.size() == res.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].lambda == res.records[i].lambda);
        CHECK(back[i].quad_loss == res.records[i].quad_loss);
        CHECK(back[i].entropy_loss == res.records[i].entropy_loss);
        CHECK(back[i].min_eig == res.records[i].min_eig);
        CHECK(back[i].df == res.records[i].df);
    }
    const std::string text = slurp(spec.output / "records.csv");
    CHECK(text.substr(0, text.find('\n')) == kRecordsHeader);
}

TEST_CASE("identical spec twice gives byte-identical files, with any worker count")
{
    ExperimentSpec spec = small_spec();
    spec.topology.p = 5;
    spec.replications = 4;
    spec.methods = {Method::splice, Method::cholesky};
    spec.criteria = {selection::Criterion::BIC};
    spec.output = scratch("det_a");
    emit_outputs(run_experiment(spec));
    ExperimentSpec other = spec;
    other.output = scratch("det_b");
    other.workers = 3;
    emit_outputs(run_experiment(other));
    for (const char* f : {"records.csv", "summary.json", "support_paths.json", "errors.csv"}) {
        CHECK(slurp(spec.output / f) == slurp(other.output / f));
    }
}

TEST_CASE("config parsing: keys, comments, unknown keys, validation")
{
    const auto spec = parse_config("# comment\nname = x\nkind = accuracy\ntopology = star_inverted\np = 7\n"
                                   "n = 30\nreplications = 2\nmethods = splice, ridge\ncriteria = AIC, BIC\n"
                                   "seed = 9\nmin_lambda = none\nformat = json\n");
    CHECK(spec.topology.kind == simgen::TopologyKind::star_inverted);
    CHECK(spec.topology.p == 7);
    CHECK(spec.methods.size() == 2);
    CHECK(spec.criteria.size() == 2);
    CHECK(spec.format == Format::json);
    CHECK_FALSE(spec.topology_seed_pinned);
    CHECK_THROWS_AS(parse_config("bogus = 1\n"), Error);
    CHECK_THROWS_AS(parse_config("methods = splice, magic\n"), Error);
    CHECK_THROWS_AS(parse_config("replications = 0\n").validate(), Error);
    CHECK_THROWS_AS(parse_config("methods = \n").validate(), Error);
    const auto rendered = parse_config(render_config(spec));
    CHECK(render_config(rendered) == render_config(spec));
}

TEST_CASE("summary quartiles follow the records")
{
    std::vector<Record> recs;
    for (int i = 0; i < 5; ++i) {
        Record r;
        r.method = "splice";
        r.criterion = "AIC";
        r.replication = static_cast<std::size_t>(i);
        r.quad_loss = static_cast<double>(i + 1);
        recs.push_back(r);
    }
    recs[4].entropy_loss = std::nan("");
    const auto s = summarize_records(recs);
    const auto& q = s.at("splice").at("AIC").at("quad_loss");
    CHECK(q.count == 5);
    CHECK(q.mean == doctest::Approx(3.0));
    CHECK(q.q1 == doctest::Approx(2.0));
    CHECK(q.median == doctest::Approx(3.0));
    CHECK(q.q3 == doctest::Approx(4.0));
    CHECK(s.at("splice").at("AIC").at("entropy_loss").count == 4);
}

TEST_CASE("summarize and roc directories reproduce emitted data")
{
    ExperimentSpec spec = small_spec();
    spec.topology.kind = simgen::TopologyKind::star_direct;
    spec.topology.p = 6;
    spec.n = 200;
    spec.replications = 3;
    spec.methods = {Method::splice, Method::cholesky};
    spec.output = scratch("dirs");
    const auto res = run_experiment(spec);
    emit_outputs(res);
    const std::string summary = slurp(spec.output / "summary.json");
    summarize_directory(spec.output);
    CHECK(slurp(spec.output / "summary.json") == summary);
    const std::string roc = slurp(spec.output / "roc_splice_AIC.dat");
    const auto curves = roc_directory(spec.output);
    CHECK(curves.count("splice_AIC") == 1);
    CHECK(curves.count("cholesky_AIC") == 1);
    CHECK(slurp(spec.output / "roc_splice_AIC.dat") == roc);
}

TEST_CASE("psd experiment: lambda-bar in [0, 1], diagonal endpoint")
{
    ExperimentSpec spec;
    spec.kind = Kind::psd;
    spec.topology.p = 6;
    spec.n = 10;
    spec.wishart_dof = 8;
    spec.replications = 2;
    spec.methods = {Method::splice};
    spec.criteria = {selection::Criterion::BIC};
    const auto res = run_psd_experiment(spec);
    REQUIRE_FALSE(res.eigen_paths.empty());
    for (const auto& e : res.eigen_paths) {
        CHECK(e.lambda_bar >= 0.0);
        CHECK(e.lambda_bar <= 1.0);
        if (e.lambda_bar == 1.0) {
            CHECK(e.min_eigenvalue > 0.0);
        }
    }
    REQUIRE(res.psd.size() == 2);
    for (const auto& ps : res.psd) {
        CHECK(ps.psd_fraction >= 0.0);
        CHECK(ps.psd_fraction <= 1.0);
    }
    ExperimentSpec bad = spec;
    bad.methods = {Method::ridge};
    CHECK_THROWS_AS(run_psd_experiment(bad), Error);
}

TEST_CASE("unwritable output directory raises a filesystem error")
{
    ExperimentSpec spec = small_spec();
    const fs::path file = scratch("blocker");
    {
        std::ofstream(file) << "x";
    }
    spec.output = file / "sub";
    auto res = run_experiment(spec);
    res.spec.output = spec.output;
    try {
        emit_outputs(res);
        FAIL("expected filesystem error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::filesystem);
    }
}

TEST_CASE("failing replications are recorded, not fatal")
{
    // n = 2 with p = 4 leaves a rank-deficient design; every method either
    // returns a record or an error entry, and the batch completes.
    ExperimentSpec spec = small_spec();
    spec.topology.p = 4;
    spec.n = 2;
    spec.replications = 3;
    spec.methods = {Method::splice, Method::cholesky, Method::ridge};
    spec.criteria = {selection::Criterion::AIC};
    const auto res = run_experiment(spec);
    std::size_t nan_rows = 0;
    for (const auto& r : res.records) {
        nan_rows += !std::isfinite(r.quad_loss);
    }
    CHECK(res.records.size() + res.errors.size() >= 9);
    CHECK(res.errors.size() >= nan_rows);
}
