#include "rankseg/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/version.hpp>

#include "rankseg/csv.hpp"
#include "rankseg/design_matrix.hpp"
#include "rankseg/error.hpp"
#include "rankseg/random.hpp"

namespace rankseg {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

template <typename Fn>
auto stage(const char* name, int G, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const DataError& e) {
        throw StageError(name, G, e.what(), StageError::Cause::data);
    } catch (const InvalidArgument& e) {
        throw StageError(name, G, e.what(), StageError::Cause::invalid_argument);
    } catch (const std::exception& e) {
        throw StageError(name, G, e.what());
    }
}

std::string join_sizes(const std::vector<std::size_t>& sizes) {
    std::string s;
    for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? ";" : "") + std::to_string(sizes[i]);
    return s;
}

json test_to_json(const DevianceTest& t) {
    return {{"test", t.name}, {"df", t.df}, {"deviance_diff", t.deviance_diff}, {"p", t.p_value}};
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j, const std::filesystem::path& base) {
    static const std::set<std::string> known{"data", "schema", "scores", "categories", "g_min", "g_max", "mlr", "rf",
                                             "pam_restarts", "seed", "out", "delimiter"};
    if (!j.is_object()) throw InvalidArgument("config: expected a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InvalidArgument("config: unknown key '" + key + "'");

    PipelineConfig c;
    if (j.contains("data")) c.data = resolve(base, j["data"].get<std::string>());
    if (j.contains("schema")) c.schema = resolve(base, j["schema"].get<std::string>());
    if (j.contains("scores")) c.scores = j["scores"].get<std::vector<double>>();
    if (j.contains("categories")) {
        const auto& v = j["categories"];
        if (v.is_string()) {
            c.categories = v.get<std::string>();
        } else {
            c.categories.clear();
            for (const auto& name : v) c.categories += (c.categories.empty() ? "" : ",") + name.get<std::string>();
        }
    }
    c.g_min = j.value("g_min", c.g_min);
    c.g_max = j.value("g_max", c.g_max);
    if (j.contains("mlr")) {
        const auto& m = j["mlr"];
        c.mlr.max_iterations = m.value("max_iterations", c.mlr.max_iterations);
        c.mlr.tol_loglik = m.value("tol_loglik", c.mlr.tol_loglik);
        c.mlr.tol_gradient = m.value("tol_gradient", c.mlr.tol_gradient);
        c.mlr.tol_step = m.value("tol_step", c.mlr.tol_step);
    }
    if (j.contains("rf")) {
        const auto& r = j["rf"];
        c.rf.n_trees = r.value("n_trees", c.rf.n_trees);
        c.rf.mtry = r.value("mtry", c.rf.mtry);
        c.rf.min_node_size = r.value("min_node_size", c.rf.min_node_size);
    }
    c.pam_restarts = j.value("pam_restarts", c.pam_restarts);
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = resolve(base, j["out"].get<std::string>());
    if (j.contains("delimiter")) {
        const auto d = j["delimiter"].get<std::string>();
        if (d.size() != 1) throw InvalidArgument("config: delimiter must be a single character");
        c.delimiter = d[0];
    }
    c.check();
    return c;
}

json PipelineConfig::to_json() const {
    return {{"data", data.generic_string()},
            {"schema", schema.generic_string()},
            {"scores", scores},
            {"categories", categories},
            {"g_min", g_min},
            {"g_max", g_max},
            {"mlr",
             {{"max_iterations", mlr.max_iterations},
              {"tol_loglik", mlr.tol_loglik},
              {"tol_gradient", mlr.tol_gradient},
              {"tol_step", mlr.tol_step}}},
            {"rf", {{"n_trees", rf.n_trees}, {"mtry", rf.mtry}, {"min_node_size", rf.min_node_size}}},
            {"pam_restarts", pam_restarts},
            {"seed", seed},
            {"delimiter", std::string(1, delimiter)}};
}

void PipelineConfig::check() const {
    if (g_min < 2 || g_max < g_min)
        throw InvalidArgument("config: need 2 <= g_min <= g_max, got " + std::to_string(g_min) + ".." +
                              std::to_string(g_max));
    if (scores.empty()) throw InvalidArgument("config: empty score vector");
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] < scores[i - 1]) throw InvalidArgument("config: scores must be nondecreasing");
    if (rf.n_trees < 1) throw InvalidArgument("config: rf.n_trees must be positive");
    if (mlr.max_iterations < 1) throw InvalidArgument("config: mlr.max_iterations must be positive");
    if (pam_restarts < 0) throw InvalidArgument("config: pam_restarts must be >= 0");
}

PipelineConfig read_pipeline_config(const std::filesystem::path& path) {
    return PipelineConfig::from_json(read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------

LoadResult load_inputs(const PipelineConfig& config) {
    return stage("ingest", 0, [&] {
        if (config.data.empty()) throw InvalidArgument("no data file configured");
        const VariableSchema schema = config.schema.empty() ? VariableSchema{} : read_schema_file(config.schema);
        LoadOptions opts;
        opts.delimiter = config.delimiter;
        return load_survey_file(config.data, schema, opts);
    });
}

DistanceMatrix<double> compute_distances(const Dataset& data, const PipelineConfig& config, unsigned threads) {
    return stage("distances", 0, [&] {
        Vector<double> s(static_cast<Eigen::Index>(config.scores.size()));
        for (std::size_t i = 0; i < config.scores.size(); ++i) s(static_cast<Eigen::Index>(i)) = config.scores[i];
        const ScoreFunction<double> sf(s);
        if (!data.empty() && sf.size() != data[0].profile.brands())
            throw InvalidArgument("score vector has " + std::to_string(sf.size()) + " entries for " +
                                  std::to_string(data[0].profile.brands()) + " brands");
        return distance_matrix(data, sf, CategorySubset::parse(config.categories, data.categories()), threads);
    });
}

SolutionPath cluster_stage(const DistanceMatrix<double>& d, const PipelineConfig& config, unsigned threads) {
    SolutionPath path;
    PamOptions opts;
    opts.restarts = config.pam_restarts;
    opts.seed = config.seed;
    opts.threads = threads;
    for (int G = config.g_min; G <= config.g_max; ++G)
        path[G] = stage("cluster", G, [&] { return pam(d.matrix(), G, opts); });
    return path;
}

ValidationEntry validate_stage(const DistanceMatrix<double>& d, const ClusterSolution& s) {
    return stage("validate", s.G, [&] {
        ValidationEntry e;
        e.G = s.G;
        e.objective = s.objective;
        e.asw = asw(d.matrix(), s.assignment);
        try {
            e.pearson_gamma = pearson_gamma(d.matrix(), s.assignment);
        } catch (const ZeroVarianceError&) {
        }
        e.sizes = cluster_size_summary(s.assignment, s.G);
        return e;
    });
}

MlrEntry explain_mlr_stage(const Dataset& data, const ClusterSolution& s, const PipelineConfig& config) {
    const int G = s.G;
    const DesignMatrix x = stage("explain_mlr", G, [&] { return DesignMatrix::from_dataset(data); });
    const auto y = restrict_assignment(s.assignment, x.rows());

    MlrEntry e;
    e.G = G;
    e.n = static_cast<std::size_t>(x.n());
    const auto params = static_cast<std::size_t>(x.cols()) * static_cast<std::size_t>(G - 1);
    if (e.n <= params)
        e.diagnostics.push_back("only " + std::to_string(e.n) + " complete cases for " + std::to_string(params) +
                                " parameters");
    MlrFit full;
    try {
        full = fit_mlr(x, y, G, config.mlr);
    } catch (const Error& err) {
        e.diagnostics.push_back(std::string("full model: ") + err.what());
        return e;
    }
    e.converged = full.converged;
    e.iterations = full.iterations;
    e.deviance = full.deviance;
    for (const auto& w : full.warnings) e.diagnostics.push_back("full model: " + w);
    if (!full.converged) {
        e.diagnostics.push_back("full model did not converge; tests withheld");
        return e;
    }

    const auto personality = x.groups_with_role(VariableRole::personality);
    if (!personality.empty()) {
        try {
            e.block = lrt_groups(x, y, G, full, personality, "personality", config.mlr);
        } catch (const Error& err) {
            e.diagnostics.push_back(std::string("personality block: ") + err.what());
        }
    }
    for (std::size_t g = 0; g < x.groups().size(); ++g) {
        const std::size_t one[] = {g};
        try {
            e.per_variable.push_back(lrt_groups(x, y, G, full, one, x.groups()[g].variable, config.mlr));
        } catch (const Error& err) {
            e.diagnostics.push_back(x.groups()[g].variable + ": " + err.what());
        }
    }
    return e;
}

RfEntry explain_rf_stage(const Dataset& data, const ClusterSolution& s, const PipelineConfig& config,
                         unsigned threads) {
    const int G = s.G;
    return stage("explain_rf", G, [&] {
        const DesignMatrix x = DesignMatrix::from_dataset(data);
        const auto y = restrict_assignment(s.assignment, x.rows());
        ForestParams params = config.rf;
        params.threads = threads;
        const auto model = fit_forest(x, y, G, params, derive_seed(config.seed, {static_cast<std::uint64_t>(G)}));
        const Eigen::MatrixXd predictors = x.predictors();
        const auto oob = oob_error(model, predictors, y);

        RfEntry e;
        e.G = G;
        e.n = static_cast<std::size_t>(x.n());
        e.oob_error = oob.error;
        e.excluded = oob.excluded;
        e.baseline_error = baseline_error(y);
        e.importance =
            permutation_importance(model, x, y, derive_seed(config.seed, {static_cast<std::uint64_t>(G), 1}));
        e.diagnostics = model.warnings;
        if (oob.excluded > 0)
            e.diagnostics.push_back(std::to_string(oob.excluded) + " observations never out of bag; excluded");
        return e;
    });
}

// ---------------------------------------------------------------------------

ExplainReport run_pipeline(const PipelineConfig& config, unsigned threads) {
    config.check();
    const LoadResult loaded = load_inputs(config);
    const Dataset& data = loaded.dataset;

    ExplainReport report;
    report.data = validate_dataset(data, loaded.rejected);
    for (const auto& r : data.records()) report.ids.push_back(r.id);
    if (static_cast<int>(data.size()) < config.g_max)
        throw StageError("cluster", config.g_max,
                         "g_max=" + std::to_string(config.g_max) + " exceeds n=" + std::to_string(data.size()));

    const auto d = compute_distances(data, config, threads);
    const auto path = cluster_stage(d, config, threads);
    report.mds = stage("mds", 0, [&] { return classical_mds(d.matrix()); });

    std::vector<ValidationEntry> validation;
    std::vector<MlrEntry> mlr;
    std::vector<RfEntry> rf;
    for (const auto& [G, s] : path) {
        GEntry e;
        e.validation = validate_stage(d, s);
        e.mlr = explain_mlr_stage(data, s, config);
        e.rf = explain_rf_stage(data, s, config, threads);
        validation.push_back(e.validation);
        mlr.push_back(e.mlr);
        rf.push_back(e.rf);
        report.entries.push_back(std::move(e));
    }

    const json cfg = config.to_json();
    report.provenance = {{"tool", "rankseg"},
                         {"version", version},
                         {"config", cfg},
                         {"config_hash", fnv1a_hex(cfg.dump())},
                         {"seed", config.seed},
                         {"dataset_hash", d.provenance().dataset_hash},
                         {"categories", d.provenance().categories},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"boost", BOOST_LIB_VERSION}};

    stage("report", 0, [&] {
        std::filesystem::create_directories(config.out);
        auto file = [&](const char* name) { return open_out(config.out / name); };
        {
            auto f = file("distances.csv");
            write_distance_csv(f, d);
        }
        write_json_file(config.out / "clusters.json", path_to_json(path, report.ids));
        {
            auto f = file("validation.csv");
            write_validation_csv(f, validation);
        }
        {
            auto f = file("mlr_tests.csv");
            write_mlr_csv(f, mlr);
        }
        {
            auto f = file("rf_importance.csv");
            write_rf_importance_csv(f, rf);
        }
        {
            auto f = file("rf_error.csv");
            write_rf_error_csv(f, rf);
        }
        {
            auto f = file("mds.csv");
            write_mds_csv(f, report.mds, report.ids);
        }
        write_json_file(config.out / "diagnostics.json", rankseg::report_to_json(report.data));
        write_json_file(config.out / "report.json", report_to_json(report));
        return 0;
    });
    return report;
}

// ---------------------------------------------------------------------------

json validation_to_json(const ValidationEntry& e) {
    return {{"G", e.G},
            {"objective", e.objective},
            {"asw", e.asw},
            {"pearson_gamma", e.pearson_gamma ? json(*e.pearson_gamma) : json(nullptr)},
            {"sizes", e.sizes.sizes},
            {"imbalance", e.sizes.imbalance}};
}

json mlr_to_json(const MlrEntry& e) {
    json vars = json::array();
    for (const auto& t : e.per_variable) vars.push_back(test_to_json(t));
    return {{"G", e.G},
            {"n", e.n},
            {"converged", e.converged},
            {"iterations", e.iterations},
            {"deviance", e.deviance},
            {"block", e.block ? test_to_json(*e.block) : json(nullptr)},
            {"variables", vars},
            {"diagnostics", e.diagnostics}};
}

json rf_to_json(const RfEntry& e) {
    json imp = json::array();
    for (std::size_t v = 0; v < e.importance.variables.size(); ++v)
        imp.push_back({{"variable", e.importance.variables[v]}, {"importance", e.importance.importance[v]}});
    return {{"G", e.G},
            {"n", e.n},
            {"oob_error", e.oob_error},
            {"baseline_error", e.baseline_error},
            {"excluded", e.excluded},
            {"importance", imp},
            {"diagnostics", e.diagnostics}};
}

json mds_to_json(const MdsEmbedding& mds, std::span<const std::string> ids) {
    json coords = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i)
        coords.push_back({{"id", ids[i]},
                          {"x", mds.coordinates(static_cast<Eigen::Index>(i), 0)},
                          {"y", mds.coordinates(static_cast<Eigen::Index>(i), 1)}});
    std::vector<double> eig(mds.eigenvalues.data(), mds.eigenvalues.data() + mds.eigenvalues.size());
    return {{"goodness_of_fit", mds.goodness_of_fit}, {"eigenvalues", eig}, {"coordinates", coords}};
}

json report_to_json(const ExplainReport& report) {
    json entries = json::array();
    for (const auto& e : report.entries) {
        json v = validation_to_json(e.validation);
        v["mlr"] = mlr_to_json(e.mlr);
        v["rf"] = rf_to_json(e.rf);
        v["mlr"].erase("G");
        v["rf"].erase("G");
        entries.push_back(std::move(v));
    }
    return {{"provenance", report.provenance},
            {"data", report_to_json(report.data)},
            {"entries", entries},
            {"mds", mds_to_json(report.mds, report.ids)}};
}

void write_validation_csv(std::ostream& out, const std::vector<ValidationEntry>& rows) {
    out << "G,objective,asw,pearson_gamma,imbalance,sizes\n";
    for (const auto& e : rows)
        out << e.G << ',' << csv::number(e.objective) << ',' << csv::number(e.asw) << ','
            << (e.pearson_gamma ? csv::number(*e.pearson_gamma) : "NA") << ',' << csv::number(e.sizes.imbalance)
            << ',' << join_sizes(e.sizes.sizes) << '\n';
}

void write_mlr_csv(std::ostream& out, const std::vector<MlrEntry>& rows) {
    out << "G,test,df,deviance_diff,p,log10_p\n";
    auto line = [&](int G, const DevianceTest& t) {
        out << G << ',' << csv::escape(t.name) << ',' << t.df << ',' << csv::number(t.deviance_diff) << ','
            << csv::number(t.p_value) << ',' << csv::number(std::log10(t.p_value)) << '\n';
    };
    for (const auto& e : rows) {
        if (e.block) line(e.G, *e.block);
        for (const auto& t : e.per_variable) line(e.G, t);
    }
}

void write_rf_importance_csv(std::ostream& out, const std::vector<RfEntry>& rows) {
    out << "G,variable,importance\n";
    for (const auto& e : rows)
        for (std::size_t v = 0; v < e.importance.variables.size(); ++v)
            out << e.G << ',' << csv::escape(e.importance.variables[v]) << ','
                << csv::number(e.importance.importance[v]) << '\n';
}

void write_rf_error_csv(std::ostream& out, const std::vector<RfEntry>& rows) {
    out << "G,oob_error,baseline_error,excluded\n";
    for (const auto& e : rows)
        out << e.G << ',' << csv::number(e.oob_error) << ',' << csv::number(e.baseline_error) << ',' << e.excluded
            << '\n';
}

void write_mds_csv(std::ostream& out, const MdsEmbedding& mds, std::span<const std::string> ids) {
    out << "id,x,y\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << csv::escape(ids[i]) << ',' << csv::number(mds.coordinates(static_cast<Eigen::Index>(i), 0)) << ','
            << csv::number(mds.coordinates(static_cast<Eigen::Index>(i), 1)) << '\n';
}

json path_to_json(const SolutionPath& path, std::span<const std::string> ids) {
    json solutions = json::array();
    for (const auto& [G, s] : path) solutions.push_back(solution_to_json(s, ids));
    return {{"solutions", solutions}};
}

SolutionPath path_from_json(const json& j, std::span<const std::string> ids) {
    SolutionPath path;
    for (const auto& s : j.at("solutions")) {
        auto sol = solution_from_json(s, ids);
        path[sol.G] = std::move(sol);
    }
    return path;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace rankseg
