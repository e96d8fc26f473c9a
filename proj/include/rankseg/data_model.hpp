#ifndef RANKSEG_DATA_MODEL_HPP
#define RANKSEG_DATA_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace rankseg {

/// J x K matrix of ranks; row j holds the ranks given to the K brands of category j.
using RankMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One respondent's complete brand rankings. Every row is a permutation of 1..K.
class RankingProfile {
public:
    RankingProfile() = default;

    /// Throws InvalidArgument when a row is not a permutation of 1..K.
    explicit RankingProfile(RankMatrix ranks);

    /// Returns a description of the first permutation violation, or nothing. Categories
    /// are named from `category_names` when given, by 1-based position otherwise.
    static std::optional<std::string> violation(const RankMatrix& ranks,
                                                std::span<const std::string> category_names = {});

    Eigen::Index categories() const noexcept { return ranks_.rows(); }
    Eigen::Index brands() const noexcept { return ranks_.cols(); }
    int rank(Eigen::Index category, Eigen::Index brand) const { return ranks_(category, brand); }
    const RankMatrix& ranks() const noexcept { return ranks_; }

    friend bool operator==(const RankingProfile& a, const RankingProfile& b) {
        return a.ranks_.rows() == b.ranks_.rows() && a.ranks_.cols() == b.ranks_.cols() &&
               a.ranks_ == b.ranks_;
    }

private:
    RankMatrix ranks_;
};

enum class VariableKind { categorical, numeric };
enum class VariableRole { sociodemographic, personality };

struct VariableSpec {
    std::string name;
    VariableKind kind = VariableKind::numeric;
    VariableRole role = VariableRole::sociodemographic;
    std::vector<std::string> levels;  // categorical only; the first level is the reference

    std::optional<std::size_t> level_index(std::string_view level) const;
    bool operator==(const VariableSpec&) const = default;
};

/// A ranked product category and its brand labels (column order of the rank matrix).
struct CategorySpec {
    std::string name;
    std::vector<std::string> brands;

    bool operator==(const CategorySpec&) const = default;
};

/// Declares the explanatory variables of a survey and, optionally, its categories.
class VariableSchema {
public:
    VariableSchema() = default;
    VariableSchema(std::vector<VariableSpec> variables, std::vector<CategorySpec> categories = {},
                   std::string id_column = "id");

    const std::vector<VariableSpec>& variables() const noexcept { return variables_; }
    const std::vector<CategorySpec>& categories() const noexcept { return categories_; }
    const std::string& id_column() const noexcept { return id_column_; }
    std::size_t size() const noexcept { return variables_.size(); }
    const VariableSpec& operator[](std::size_t i) const { return variables_.at(i); }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t count(VariableRole role) const;

    /// Same variables and id column, with the category list replaced.
    VariableSchema with_categories(std::vector<CategorySpec> categories) const;

    bool operator==(const VariableSchema&) const = default;

private:
    std::vector<VariableSpec> variables_;
    std::vector<CategorySpec> categories_;
    std::string id_column_ = "id";
};

VariableSchema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const VariableSchema& schema);
VariableSchema read_schema_file(const std::filesystem::path& path);
void write_schema_file(const std::filesystem::path& path, const VariableSchema& schema);

/// Covariates are aligned with the schema's variables. Categorical values hold the
/// level index; an empty optional marks a missing value.
struct RespondentRecord {
    std::string id;
    RankingProfile profile;
    std::vector<std::optional<double>> covariates;

    bool complete() const;
    bool operator==(const RespondentRecord&) const = default;
};

/// Immutable collection of validated respondents sharing one category/brand layout.
class Dataset {
public:
    Dataset() = default;
    Dataset(VariableSchema schema, std::vector<RespondentRecord> records);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const RespondentRecord& operator[](std::size_t i) const { return records_.at(i); }
    const std::vector<RespondentRecord>& records() const noexcept { return records_; }
    const VariableSchema& schema() const noexcept { return schema_; }
    const std::vector<CategorySpec>& categories() const noexcept { return schema_.categories(); }

    /// Index of a category by name.
    std::optional<std::size_t> category_index(std::string_view name) const;

    /// Indices of records with every covariate present.
    std::vector<std::size_t> complete_cases() const;

    bool operator==(const Dataset&) const = default;

private:
    VariableSchema schema_;
    std::vector<RespondentRecord> records_;
};

struct LoadOptions {
    char delimiter = ',';
    bool strict = false;  // throw on the first rejected row instead of collecting diagnostics
};

struct RowDiagnostic {
    std::size_t line = 0;  // 1-based line in the source, header is line 1
    std::string id;
    std::string message;
};

struct LoadResult {
    Dataset dataset;
    std::vector<RowDiagnostic> rejected;
    std::vector<std::string> ignored_columns;
};

/// Reads a delimited survey table. Rows with missing or invalid rankings, unknown
/// categorical levels or unparsable values are rejected with a diagnostic; rows with
/// missing covariates are kept. Throws DataError on a malformed header or duplicated id.
LoadResult load_survey(std::istream& in, const VariableSchema& schema, const LoadOptions& options = {});
LoadResult load_survey_file(const std::filesystem::path& path, const VariableSchema& schema,
                            const LoadOptions& options = {});

void write_survey(std::ostream& out, const Dataset& dataset, char delimiter = ',');
void write_survey_file(const std::filesystem::path& path, const Dataset& dataset, char delimiter = ',');

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// fnv1a_hex of the canonical CSV serialization.
std::string dataset_hash(const Dataset& dataset);

struct VariableDiagnostics {
    std::string name;
    std::size_t missing = 0;
    std::map<std::string, std::size_t> level_counts;  // categorical only
    std::optional<double> min, max, mean;              // numeric only, over present values
};

struct DatasetReport {
    std::size_t n = 0;
    std::size_t complete_rankings = 0;
    std::size_t rejected_rows = 0;
    std::vector<VariableDiagnostics> variables;
    std::vector<std::string> flagged_ids;  // records excluded from explanation fits
    std::vector<std::string> warnings;
};

DatasetReport validate_dataset(const Dataset& dataset, std::span<const RowDiagnostic> rejected = {});
nlohmann::json report_to_json(const DatasetReport& report);

}  // namespace rankseg

#endif  // RANKSEG_DATA_MODEL_HPP
