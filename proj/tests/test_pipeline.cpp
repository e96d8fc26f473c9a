#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rankseg/error.hpp"
#include "rankseg/pipeline.hpp"
#include "rankseg/synth.hpp"

using namespace rankseg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Workspace {
    fs::path dir;
    PipelineConfig config;

    explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        auto g = GeneratorConfig::survey_like();
        g.n = 120;
        g.seed = 3;
        write_synthetic(dir, generate(g));
        config = read_pipeline_config(dir / "config.json");
        config.g_max = 5;
        config.rf.n_trees = 40;
    }
    ~Workspace() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("config parsing") {
    const auto c = PipelineConfig::from_json(
        nlohmann::json::parse(R"({"data":"d.csv","schema":"/abs/s.json","categories":["tv","coffee"],"seed":9})"),
        "/base");
    CHECK(c.data == fs::path("/base/d.csv"));
    CHECK(c.schema == fs::path("/abs/s.json"));
    CHECK(c.categories == "tv,coffee");
    CHECK(c.seed == 9);
    CHECK(PipelineConfig::from_json(c.to_json(), "/base").to_json() == c.to_json());
    CHECK_FALSE(c.to_json().contains("out"));

    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"gmax":3})")), InvalidArgument);
    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"g_min":4,"g_max":3})")), InvalidArgument);
    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"scores":[3,2,1]})")), InvalidArgument);
    CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::parse(R"({"delimiter":";;"})")), InvalidArgument);
}

TEST_CASE("two runs give byte-identical outputs, independent of threads") {
    Workspace w("rankseg_test_pipeline_det");
    w.config.out = w.dir / "a";
    const auto first = run_pipeline(w.config);
    w.config.out = w.dir / "b";
    run_pipeline(w.config, 3);
    for (const char* f : {"report.json", "distances.csv", "clusters.json", "validation.csv", "mlr_tests.csv",
                          "rf_importance.csv", "rf_error.csv", "mds.csv", "diagnostics.json"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(w.dir / "a" / f));
        CHECK(slurp(w.dir / "a" / f) == slurp(w.dir / "b" / f));
    }
    REQUIRE(first.entries.size() == 4);
    CHECK(first.entries.front().validation.G == 2);
    CHECK(first.provenance["seed"] == 1);
    CHECK(first.provenance["dataset_hash"].get<std::string>().size() == 16);

    w.config.seed = 2;
    w.config.out = w.dir / "c";
    run_pipeline(w.config);
    CHECK(slurp(w.dir / "a" / "rf_importance.csv") != slurp(w.dir / "c" / "rf_importance.csv"));
    CHECK(slurp(w.dir / "a" / "clusters.json") == slurp(w.dir / "c" / "clusters.json"));
}

TEST_CASE("stages composed by hand reproduce the pipeline") {
    Workspace w("rankseg_test_pipeline_stages");
    w.config.out = w.dir / "out";
    const auto report = run_pipeline(w.config);

    const auto data = load_inputs(w.config).dataset;
    const auto d = compute_distances(data, w.config);
    const auto path = cluster_stage(d, w.config);
    REQUIRE(path.size() == report.entries.size());
    for (const auto& e : report.entries) {
        const auto& s = path.at(e.validation.G);
        const auto v = validate_stage(d, s);
        CHECK(v.objective == e.validation.objective);
        CHECK(v.asw == e.validation.asw);
        const auto m = explain_mlr_stage(data, s, w.config);
        CHECK(mlr_to_json(m) == mlr_to_json(e.mlr));
        const auto r = explain_rf_stage(data, s, w.config);
        CHECK(rf_to_json(r) == rf_to_json(e.rf));
    }
    std::ostringstream validation;
    std::vector<ValidationEntry> rows;
    for (const auto& e : report.entries) rows.push_back(e.validation);
    write_validation_csv(validation, rows);
    CHECK(validation.str() == slurp(w.dir / "out" / "validation.csv"));

    const auto clusters = path_from_json(read_json_file(w.dir / "out" / "clusters.json"), report.ids);
    CHECK(clusters == path);
}

TEST_CASE("stage failures carry the stage name") {
    Workspace w("rankseg_test_pipeline_fail");
    w.config.g_max = 500;
    w.config.out = w.dir / "out";
    try {
        run_pipeline(w.config);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "cluster");
        CHECK(e.G() == 500);
    }
    auto stage_of = [&] {
        try {
            run_pipeline(w.config);
        } catch (const StageError& e) {
            return e.stage();
        }
        return std::string("none");
    };
    w.config.g_max = 5;
    w.config.scores = {1, 2, 3};
    CHECK(stage_of() == "distances");
    w.config.scores = {1, 5, 7, 8, 9};
    w.config.data = w.dir / "missing.csv";
    CHECK(stage_of() == "ingest");
}
