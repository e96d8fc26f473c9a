// rankseg command line: stage subcommands plus the full pipeline.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "rankseg/error.hpp"
#include "rankseg/pipeline.hpp"
#include "rankseg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rankseg;

namespace {

struct Common {
    std::string config;
    std::string data;
    std::string schema;
    std::optional<std::uint64_t> seed;
    std::optional<int> g_min;
    std::optional<int> g_max;
    std::string categories;
    std::string out;
    std::string format;  // empty: the format the pipeline writes for this stage
    std::string distances;
    std::string clusters;
    unsigned threads = 1;
};

void add_common(CLI::App* app, Common& c, bool stage_inputs) {
    app->add_option("--config", c.config, "pipeline config JSON")->check(CLI::ExistingFile);
    app->add_option("--data", c.data, "survey CSV")->check(CLI::ExistingFile);
    app->add_option("--schema", c.schema, "schema JSON")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--g-min", c.g_min, "smallest number of clusters");
    app->add_option("--g-max", c.g_max, "largest number of clusters");
    app->add_option("--categories", c.categories, "'combined' or comma-separated category names");
    app->add_option("--out", c.out, "output directory (stdout when omitted)");
    app->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app->add_option("--threads", c.threads, "worker threads (results do not depend on it)");
    if (stage_inputs) {
        app->add_option("--distances", c.distances, "distance CSV from 'distances'")->check(CLI::ExistingFile);
        app->add_option("--clusters", c.clusters, "clusters.json from 'cluster'")->check(CLI::ExistingFile);
    }
}

PipelineConfig make_config(const Common& c) {
    PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : read_pipeline_config(c.config);
    if (!c.data.empty()) cfg.data = c.data;
    if (!c.schema.empty()) cfg.schema = c.schema;
    if (c.seed) cfg.seed = *c.seed;
    if (c.g_min) cfg.g_min = *c.g_min;
    if (c.g_max) cfg.g_max = *c.g_max;
    if (!c.categories.empty()) cfg.categories = c.categories;
    if (!c.out.empty()) cfg.out = c.out;
    cfg.check();
    return cfg;
}

/// Writes `content` to out/name, or to stdout when no output directory was given.
void emit(const Common& c, const std::string& name, const std::string& content) {
    if (c.out.empty()) {
        std::cout << content;
        return;
    }
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / name, std::ios::binary);
    if (!f) throw Error("cannot write " + (fs::path(c.out) / name).string());
    f << content;
}

/// Renders a stream writer into a string so every writer can also target stdout.
template <typename Writer>
std::string render(Writer&& write) {
    std::ostringstream os;
    write(os);
    return os.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Context {
    PipelineConfig config;
    std::optional<LoadResult> loaded;
    std::optional<DistanceMatrix<double>> d;

    const Dataset& data() {
        if (!loaded) loaded = load_inputs(config);
        return loaded->dataset;
    }
};

const DistanceMatrix<double>& distances(Context& ctx, const Common& c) {
    if (!ctx.d) {
        if (!c.distances.empty())
            ctx.d = read_distance_csv_file(c.distances);
        else
            ctx.d = compute_distances(ctx.data(), ctx.config, c.threads);
    }
    return *ctx.d;
}

SolutionPath clusters(Context& ctx, const Common& c, std::span<const std::string> ids) {
    SolutionPath path;
    if (!c.clusters.empty())
        path = path_from_json(read_json_file(c.clusters), ids);
    else
        path = cluster_stage(distances(ctx, c), ctx.config, c.threads);
    SolutionPath selected;
    for (auto& [G, s] : path)
        if (G >= ctx.config.g_min && G <= ctx.config.g_max) selected[G] = std::move(s);
    if (selected.empty()) throw InvalidArgument("no clustering solution in the requested G range");
    return selected;
}

std::vector<std::string> dataset_ids(const Dataset& data) {
    std::vector<std::string> ids;
    for (const auto& r : data.records()) ids.push_back(r.id);
    return ids;
}

int cmd_ingest(const Common& c) {
    Context ctx{make_config(c)};
    const auto report = validate_dataset(ctx.data(), ctx.loaded->rejected);
    json j = rankseg::report_to_json(report);
    j["rejected"] = json::array();
    for (const auto& r : ctx.loaded->rejected)
        j["rejected"].push_back({{"line", r.line}, {"id", r.id}, {"message", r.message}});
    j["ignored_columns"] = ctx.loaded->ignored_columns;
    if (c.format == "json") {
        emit(c, "diagnostics.json", dump(j));
    } else {
        std::ostringstream os;
        write_survey(os, ctx.data());
        emit(c, "survey.csv", os.str());
    }
    return 0;
}

int cmd_distances(const Common& c) {
    Context ctx{make_config(c)};
    const auto& d = distances(ctx, c);
    if (c.format == "csv") {
        std::ostringstream os;
        write_distance_csv(os, d);
        emit(c, "distances.csv", os.str());
    } else {
        json rows = json::array();
        for (Eigen::Index i = 0; i < d.size(); ++i) {
            std::vector<double> row(d.matrix().row(i).data(), d.matrix().row(i).data() + d.size());
            rows.push_back(row);
        }
        emit(c, "distances.json",
             dump({{"ids", d.ids()},
                   {"scores", d.provenance().scores},
                   {"categories", d.provenance().categories},
                   {"dataset_hash", d.provenance().dataset_hash},
                   {"matrix", rows}}));
    }
    return 0;
}

int cmd_cluster(const Common& c) {
    Context ctx{make_config(c)};
    const auto& d = distances(ctx, c);
    const auto path = cluster_stage(d, ctx.config, c.threads);
    if (c.format == "json") {
        emit(c, "clusters.json", dump(path_to_json(path, d.ids())));
    } else {
        std::ostringstream os;
        os << "id";
        for (const auto& [G, s] : path) os << ",G" << G;
        os << '\n';
        for (std::size_t i = 0; i < d.ids().size(); ++i) {
            os << d.ids()[i];
            for (const auto& [G, s] : path) os << ',' << s.assignment[i] + 1;
            os << '\n';
        }
        emit(c, "clusters.csv", os.str());
    }
    return 0;
}

int cmd_validate(const Common& c) {
    Context ctx{make_config(c)};
    const auto& d = distances(ctx, c);
    std::vector<ValidationEntry> rows;
    for (const auto& [G, s] : clusters(ctx, c, d.ids())) rows.push_back(validate_stage(d, s));
    if (c.format == "csv") {
        emit(c, "validation.csv", render([&](std::ostream& os) { write_validation_csv(os, rows); }));
    } else {
        json j = json::array();
        for (const auto& r : rows) j.push_back(validation_to_json(r));
        emit(c, "validation.json", dump(j));
    }
    return 0;
}

int cmd_mds(const Common& c) {
    Context ctx{make_config(c)};
    const auto& d = distances(ctx, c);
    const auto mds = classical_mds(d.matrix());
    if (c.format == "csv")
        emit(c, "mds.csv", render([&](std::ostream& os) { write_mds_csv(os, mds, d.ids()); }));
    else
        emit(c, "mds.json", dump(mds_to_json(mds, d.ids())));
    return 0;
}

int cmd_explain_mlr(const Common& c) {
    Context ctx{make_config(c)};
    const auto ids = dataset_ids(ctx.data());
    std::vector<MlrEntry> rows;
    for (const auto& [G, s] : clusters(ctx, c, ids)) rows.push_back(explain_mlr_stage(ctx.data(), s, ctx.config));
    if (c.format == "csv") {
        emit(c, "mlr_tests.csv", render([&](std::ostream& os) { write_mlr_csv(os, rows); }));
    } else {
        json j = json::array();
        for (const auto& r : rows) j.push_back(mlr_to_json(r));
        emit(c, "mlr.json", dump(j));
    }
    return 0;
}

int cmd_explain_rf(const Common& c) {
    Context ctx{make_config(c)};
    const auto ids = dataset_ids(ctx.data());
    std::vector<RfEntry> rows;
    for (const auto& [G, s] : clusters(ctx, c, ids))
        rows.push_back(explain_rf_stage(ctx.data(), s, ctx.config, c.threads));
    if (c.format == "csv") {
        emit(c, "rf_importance.csv", render([&](std::ostream& os) { write_rf_importance_csv(os, rows); }));
        emit(c, "rf_error.csv", render([&](std::ostream& os) { write_rf_error_csv(os, rows); }));
    } else {
        json j = json::array();
        for (const auto& r : rows) j.push_back(rf_to_json(r));
        emit(c, "rf.json", dump(j));
    }
    return 0;
}

int cmd_pipeline(const Common& c) {
    const auto cfg = make_config(c);
    const auto report = run_pipeline(cfg, c.threads);
    json summary = {{"status", "ok"}, {"out", cfg.out.generic_string()}, {"G", json::array()}};
    for (const auto& e : report.entries) summary["G"].push_back(e.validation.G);
    std::cout << summary.dump() << '\n';
    return 0;
}

struct SynthOptions {
    std::size_t n = 343;
    int g_true = 8;
    std::vector<int> branching{2, 2, 2};
    std::vector<int> resampled{2, 1};
    double noise = 0.5;
    double personality_effect = 0;
    double gender_effect = 0;
    double imbalance = 0;
};

int cmd_synth(const Common& c, const SynthOptions& o) {
    if (c.out.empty()) throw InvalidArgument("synth: --out is required");
    GeneratorConfig g = GeneratorConfig::survey_like();
    g.n = o.n;
    g.g_true = o.g_true;
    g.branching = o.branching;
    g.resampled = o.resampled;
    if (o.branching.size() == 1 && o.branching[0] == 0) {
        g.branching.clear();
        g.resampled.clear();
    }
    g.noise = o.noise;
    g.imbalance = o.imbalance;
    g.seed = c.seed.value_or(1);
    for (auto& cov : g.covariates) {
        if (cov.variable.role == VariableRole::personality) {
            cov.effect = o.personality_effect;
            cov.scope = EffectScope::within_super;
        } else if (cov.variable.name == "gender") {
            cov.effect = o.gender_effect;
            cov.scope = EffectScope::super_cluster;
        }
    }
    const auto data = generate(g);
    write_synthetic(c.out, data);
    std::cout << json{{"status", "ok"}, {"out", c.out}, {"n", data.dataset.size()}}.dump() << '\n';
    return 0;
}

int report_error(const std::string& type, const std::string& message, int code, const json& extra = {}) {
    json e = {{"type", type}, {"message", message}};
    if (extra.is_object())
        for (const auto& [k, v] : extra.items()) e[k] = v;
    std::cerr << json{{"error", e}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rankseg: clustering of brand rankings and their explanation by background variables"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rankseg::version));

    Common common;
    SynthOptions synth;
    struct Sub {
        const char* name;
        const char* help;
        bool stage_inputs;
        const char* format;
    };
    const Sub subs[] = {
        {"ingest", "validate a survey file and report diagnostics", false, "json"},
        {"distances", "scored footrule distance matrix", false, "csv"},
        {"cluster", "PAM solutions over the G range", true, "json"},
        {"validate", "ASW and Pearson gamma per G", true, "csv"},
        {"mds", "classical MDS coordinates", true, "csv"},
        {"explain-mlr", "multinomial logit deviance tests per G", true, "csv"},
        {"explain-rf", "random forest OOB error and importance per G", true, "csv"},
        {"pipeline", "run every stage and write the report", false, "json"},
        {"synth", "generate a synthetic survey", false, "csv"},
    };
    std::map<std::string, CLI::App*> cmds;
    for (const auto& s : subs) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, common, s.stage_inputs);
        cmds[s.name] = cmd;
    }
    auto* sy = cmds["synth"];
    sy->add_option("--n", synth.n, "respondents");
    sy->add_option("--g-true", synth.g_true, "generating clusters");
    sy->add_option("--branching", synth.branching, "prototype tree branching per level (0 = flat)")->delimiter(',');
    sy->add_option("--resampled", synth.resampled, "categories redrawn per level below the roots")->delimiter(',');
    sy->add_option("--noise", synth.noise, "expected adjacent transpositions per category");
    sy->add_option("--personality-effect", synth.personality_effect, "effect within super-clusters");
    sy->add_option("--gender-effect", synth.gender_effect, "effect across super-clusters");
    sy->add_option("--imbalance", synth.imbalance, "cluster weight decay");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("usage", e.what(), 2);
    }
    if (common.format.empty())
        for (const auto& s : subs)
            if (cmds[s.name]->parsed()) common.format = s.format;

    try {
        if (cmds["ingest"]->parsed()) return cmd_ingest(common);
        if (cmds["distances"]->parsed()) return cmd_distances(common);
        if (cmds["cluster"]->parsed()) return cmd_cluster(common);
        if (cmds["validate"]->parsed()) return cmd_validate(common);
        if (cmds["mds"]->parsed()) return cmd_mds(common);
        if (cmds["explain-mlr"]->parsed()) return cmd_explain_mlr(common);
        if (cmds["explain-rf"]->parsed()) return cmd_explain_rf(common);
        if (cmds["pipeline"]->parsed()) return cmd_pipeline(common);
        if (cmds["synth"]->parsed()) return cmd_synth(common, synth);
    } catch (const StageError& e) {
        const json where = {{"stage", e.stage()}, {"G", e.G()}};
        switch (e.cause()) {
            case StageError::Cause::data: return report_error("data", e.what(), 3, where);
            case StageError::Cause::invalid_argument: return report_error("invalid_argument", e.what(), 2, where);
            case StageError::Cause::computation: break;
        }
        return report_error("stage", e.what(), 4, where);
    } catch (const InvalidArgument& e) {
        return report_error("invalid_argument", e.what(), 2);
    } catch (const DataError& e) {
        return report_error("data", e.what(), 3);
    } catch (const std::exception& e) {
        return report_error("error", e.what(), 1);
    }
    return 1;
}
