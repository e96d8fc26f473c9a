#ifndef RANKSEG_PIPELINE_HPP
#define RANKSEG_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankseg/cluster.hpp"
#include "rankseg/data_model.hpp"
#include "rankseg/distance.hpp"
#include "rankseg/forest.hpp"
#include "rankseg/mlr.hpp"
#include "rankseg/validate.hpp"

namespace rankseg {

inline constexpr const char* version = "0.1.0";

struct PipelineConfig {
    std::filesystem::path data;
    std::filesystem::path schema;
    std::vector<double> scores{1, 5, 7, 8, 9};
    std::string categories = "combined";
    int g_min = 2;
    int g_max = 10;
    MlrOptions mlr;
    ForestParams rf;
    int pam_restarts = 0;
    std::uint64_t seed = 1;
    std::filesystem::path out = "results";
    char delimiter = ',';

    /// Relative paths inside the JSON resolve against `base`. Unknown keys are rejected.
    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});

    /// Every setting, including defaults. Thread counts are left out since they never
    /// change results.
    nlohmann::json to_json() const;

    void check() const;
};

PipelineConfig read_pipeline_config(const std::filesystem::path& path);

/// Per-G validation indices.
struct ValidationEntry {
    int G = 0;
    double objective = 0;
    double asw = 0;
    std::optional<double> pearson_gamma;  // undefined for constant distances
    ClusterSizeSummary sizes;
};

struct MlrEntry {
    int G = 0;
    std::size_t n = 0;
    bool converged = false;
    int iterations = 0;
    double deviance = 0;
    std::optional<DevianceTest> block;
    std::vector<DevianceTest> per_variable;
    std::vector<std::string> diagnostics;
};

struct RfEntry {
    int G = 0;
    std::size_t n = 0;
    double oob_error = 0;
    double baseline_error = 0;
    std::size_t excluded = 0;
    ImportanceReport importance;
    std::vector<std::string> diagnostics;
};

struct GEntry {
    ValidationEntry validation;
    MlrEntry mlr;
    RfEntry rf;
};

struct ExplainReport {
    nlohmann::json provenance;
    DatasetReport data;
    std::vector<GEntry> entries;  // one per G, ascending
    MdsEmbedding mds;
    std::vector<std::string> ids;
};

// Stages. Each takes only what it needs so the CLI can run them one at a time.
LoadResult load_inputs(const PipelineConfig& config);
DistanceMatrix<double> compute_distances(const Dataset& data, const PipelineConfig& config, unsigned threads = 1);
SolutionPath cluster_stage(const DistanceMatrix<double>& d, const PipelineConfig& config, unsigned threads = 1);
ValidationEntry validate_stage(const DistanceMatrix<double>& d, const ClusterSolution& s);

/// Design matrix errors (rank deficiency, no complete cases) raise StageError; problems
/// with a single fit are recorded as diagnostics and leave gaps.
MlrEntry explain_mlr_stage(const Dataset& data, const ClusterSolution& s, const PipelineConfig& config);
RfEntry explain_rf_stage(const Dataset& data, const ClusterSolution& s, const PipelineConfig& config,
                         unsigned threads = 1);

/// Runs every stage and writes all outputs below config.out.
ExplainReport run_pipeline(const PipelineConfig& config, unsigned threads = 1);

nlohmann::json report_to_json(const ExplainReport& report);

// Long-format writers shared by the pipeline and the stage subcommands.
void write_validation_csv(std::ostream& out, const std::vector<ValidationEntry>& rows);
void write_mlr_csv(std::ostream& out, const std::vector<MlrEntry>& rows);
void write_rf_importance_csv(std::ostream& out, const std::vector<RfEntry>& rows);
void write_rf_error_csv(std::ostream& out, const std::vector<RfEntry>& rows);
void write_mds_csv(std::ostream& out, const MdsEmbedding& mds, std::span<const std::string> ids);
nlohmann::json path_to_json(const SolutionPath& path, std::span<const std::string> ids);
SolutionPath path_from_json(const nlohmann::json& j, std::span<const std::string> ids);

nlohmann::json validation_to_json(const ValidationEntry& e);
nlohmann::json mlr_to_json(const MlrEntry& e);
nlohmann::json rf_to_json(const RfEntry& e);
nlohmann::json mds_to_json(const MdsEmbedding& mds, std::span<const std::string> ids);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace rankseg

#endif  // RANKSEG_PIPELINE_HPP
