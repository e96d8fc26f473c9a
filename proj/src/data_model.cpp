#include "rankseg/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rankseg/csv.hpp"
#include "rankseg/error.hpp"

namespace rankseg {

namespace {

bool is_missing_token(std::string_view s) { return s.empty() || s == "NA" || s == "na" || s == "NaN"; }

std::optional<double> parse_double(std::string_view s) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string kind_name(VariableKind k) { return k == VariableKind::categorical ? "categorical" : "numeric"; }
std::string role_name(VariableRole r) {
    return r == VariableRole::personality ? "personality" : "sociodemographic";
}

}  // namespace

// ---------------------------------------------------------------------------

RankingProfile::RankingProfile(RankMatrix ranks) : ranks_(std::move(ranks)) {
    if (auto v = violation(ranks_)) throw InvalidArgument(*v);
}

std::optional<std::string> RankingProfile::violation(const RankMatrix& ranks,
                                                    std::span<const std::string> category_names) {
    if (ranks.rows() == 0 || ranks.cols() == 0) return "empty ranking profile";
    const Eigen::Index k = ranks.cols();
    auto category = [&](Eigen::Index j) {
        const auto u = static_cast<std::size_t>(j);
        return u < category_names.size() ? category_names[u] : std::to_string(j + 1);
    };
    std::vector<bool> seen(static_cast<std::size_t>(k) + 1);
    for (Eigen::Index j = 0; j < ranks.rows(); ++j) {
        std::fill(seen.begin(), seen.end(), false);
        for (Eigen::Index b = 0; b < k; ++b) {
            const int r = ranks(j, b);
            if (r < 1 || r > k) return "rank " + std::to_string(r) + " out of range in category " + category(j);
            if (seen[static_cast<std::size_t>(r)])
                return "duplicate rank " + std::to_string(r) + " in category " + category(j);
            seen[static_cast<std::size_t>(r)] = true;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> VariableSpec::level_index(std::string_view level) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == level) return i;
    return std::nullopt;
}

VariableSchema::VariableSchema(std::vector<VariableSpec> variables, std::vector<CategorySpec> categories,
                               std::string id_column)
    : variables_(std::move(variables)), categories_(std::move(categories)), id_column_(std::move(id_column)) {
    if (id_column_.empty()) throw InvalidArgument("schema: empty id column name");
    std::unordered_set<std::string> names{id_column_};
    for (const auto& v : variables_) {
        if (v.name.empty()) throw InvalidArgument("schema: empty variable name");
        if (!names.insert(v.name).second) throw InvalidArgument("schema: duplicate variable name '" + v.name + "'");
        if (v.role == VariableRole::personality && v.kind != VariableKind::numeric)
            throw InvalidArgument("schema: personality variable '" + v.name + "' must be numeric");
        if (v.kind == VariableKind::categorical) {
            if (v.levels.empty()) throw InvalidArgument("schema: variable '" + v.name + "' has no levels");
            std::set<std::string> lv(v.levels.begin(), v.levels.end());
            if (lv.size() != v.levels.size())
                throw InvalidArgument("schema: duplicate level in variable '" + v.name + "'");
        } else if (!v.levels.empty()) {
            throw InvalidArgument("schema: numeric variable '" + v.name + "' declares levels");
        }
    }
    std::unordered_set<std::string> cats;
    for (const auto& c : categories_) {
        if (!cats.insert(c.name).second) throw InvalidArgument("schema: duplicate category '" + c.name + "'");
        if (c.brands.empty()) throw InvalidArgument("schema: category '" + c.name + "' has no brands");
        if (c.brands.size() != categories_.front().brands.size())
            throw InvalidArgument("schema: all categories must list the same number of brands");
        std::set<std::string> br(c.brands.begin(), c.brands.end());
        if (br.size() != c.brands.size())
            throw InvalidArgument("schema: duplicate brand in category '" + c.name + "'");
    }
}

std::optional<std::size_t> VariableSchema::find(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
        if (variables_[i].name == name) return i;
    return std::nullopt;
}

std::size_t VariableSchema::count(VariableRole role) const {
    return static_cast<std::size_t>(
        std::count_if(variables_.begin(), variables_.end(), [&](const auto& v) { return v.role == role; }));
}

VariableSchema VariableSchema::with_categories(std::vector<CategorySpec> categories) const {
    return VariableSchema(variables_, std::move(categories), id_column_);
}

VariableSchema schema_from_json(const nlohmann::json& j) {
    std::vector<VariableSpec> vars;
    for (const auto& jv : j.at("variables")) {
        VariableSpec v;
        v.name = jv.at("name").get<std::string>();
        const auto kind = jv.at("kind").get<std::string>();
        if (kind == "categorical") v.kind = VariableKind::categorical;
        else if (kind == "numeric") v.kind = VariableKind::numeric;
        else throw InvalidArgument("schema: unknown kind '" + kind + "' for variable '" + v.name + "'");
        const auto role = jv.value("role", std::string("sociodemographic"));
        if (role == "personality") v.role = VariableRole::personality;
        else if (role == "sociodemographic") v.role = VariableRole::sociodemographic;
        else throw InvalidArgument("schema: unknown role '" + role + "' for variable '" + v.name + "'");
        if (jv.contains("levels")) v.levels = jv.at("levels").get<std::vector<std::string>>();
        vars.push_back(std::move(v));
    }
    std::vector<CategorySpec> cats;
    if (j.contains("categories")) {
        for (const auto& jc : j.at("categories"))
            cats.push_back({jc.at("name").get<std::string>(), jc.at("brands").get<std::vector<std::string>>()});
    }
    return VariableSchema(std::move(vars), std::move(cats), j.value("id_column", std::string("id")));
}

nlohmann::json schema_to_json(const VariableSchema& schema) {
    nlohmann::json j;
    j["id_column"] = schema.id_column();
    j["categories"] = nlohmann::json::array();
    for (const auto& c : schema.categories()) j["categories"].push_back({{"name", c.name}, {"brands", c.brands}});
    j["variables"] = nlohmann::json::array();
    for (const auto& v : schema.variables()) {
        nlohmann::json jv{{"name", v.name}, {"kind", kind_name(v.kind)}, {"role", role_name(v.role)}};
        if (v.kind == VariableKind::categorical) jv["levels"] = v.levels;
        j["variables"].push_back(std::move(jv));
    }
    return j;
}

VariableSchema read_schema_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file " + path.string());
    try {
        return schema_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("schema file " + path.string() + ": " + e.what());
    }
}

void write_schema_file(const std::filesystem::path& path, const VariableSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << schema_to_json(schema).dump(2) << '\n';
}

bool RespondentRecord::complete() const {
    return std::all_of(covariates.begin(), covariates.end(), [](const auto& c) { return c.has_value(); });
}

// ---------------------------------------------------------------------------

Dataset::Dataset(VariableSchema schema, std::vector<RespondentRecord> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
    const auto& cats = schema_.categories();
    if (cats.empty() && !records_.empty()) throw InvalidArgument("dataset: schema declares no categories");
    const auto j = static_cast<Eigen::Index>(cats.size());
    const auto k = cats.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(cats.front().brands.size());
    std::unordered_set<std::string> ids;
    for (const auto& r : records_) {
        if (r.profile.categories() != j || r.profile.brands() != k)
            throw InvalidArgument("dataset: record '" + r.id + "' has a profile of the wrong shape");
        if (r.covariates.size() != schema_.size())
            throw InvalidArgument("dataset: record '" + r.id + "' has the wrong number of covariates");
        if (!ids.insert(r.id).second) throw DataError("duplicated respondent id '" + r.id + "'");
    }
}

std::optional<std::size_t> Dataset::category_index(std::string_view name) const {
    const auto& cats = categories();
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i].name == name) return i;
    return std::nullopt;
}

std::vector<std::size_t> Dataset::complete_cases() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < records_.size(); ++i)
        if (records_[i].complete()) rows.push_back(i);
    return rows;
}

// ---------------------------------------------------------------------------

namespace {

struct ColumnMap {
    std::size_t id = 0;
    std::vector<std::vector<std::size_t>> rank_columns;  // [category][brand] -> field index
    std::vector<std::size_t> variable_columns;           // [variable] -> field index
};

ColumnMap map_header(const std::vector<std::string>& header, VariableSchema& schema,
                     std::vector<std::string>& ignored) {
    if (header.empty() || (header.size() == 1 && header[0].empty())) throw DataError("malformed header: empty");
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].empty()) throw DataError("malformed header: empty column name at position " + std::to_string(i + 1));
        if (!pos.emplace(header[i], i).second) throw DataError("malformed header: duplicate column '" + header[i] + "'");
    }
    ColumnMap map;
    const auto id_it = pos.find(schema.id_column());
    if (id_it == pos.end()) throw DataError("malformed header: missing id column '" + schema.id_column() + "'");
    map.id = id_it->second;

    std::vector<bool> used(header.size());
    used[map.id] = true;
    for (const auto& v : schema.variables()) {
        const auto it = pos.find(v.name);
        if (it == pos.end()) throw DataError("malformed header: missing variable column '" + v.name + "'");
        map.variable_columns.push_back(it->second);
        used[it->second] = true;
    }

    if (schema.categories().empty()) {
        // Infer <category>_<brand> columns in order of appearance.
        std::vector<CategorySpec> cats;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (used[i]) continue;
            const auto us = header[i].find('_');
            if (us == std::string::npos || us == 0 || us + 1 == header[i].size())
                throw DataError("malformed header: column '" + header[i] + "' is not <category>_<brand>");
            const auto cat = header[i].substr(0, us);
            const auto brand = header[i].substr(us + 1);
            auto it = std::find_if(cats.begin(), cats.end(), [&](const auto& c) { return c.name == cat; });
            if (it == cats.end()) {
                cats.push_back({cat, {}});
                it = std::prev(cats.end());
            }
            it->brands.push_back(brand);
        }
        if (cats.empty()) throw DataError("malformed header: no ranking columns");
        for (const auto& c : cats)
            if (c.brands.size() != cats.front().brands.size())
                throw DataError("malformed header: categories have different numbers of brands");
        schema = schema.with_categories(std::move(cats));
    }

    for (const auto& c : schema.categories()) {
        std::vector<std::size_t> cols;
        for (const auto& b : c.brands) {
            const auto name = c.name + "_" + b;
            const auto it = pos.find(name);
            if (it == pos.end()) throw DataError("malformed header: missing ranking column '" + name + "'");
            cols.push_back(it->second);
            used[it->second] = true;
        }
        map.rank_columns.push_back(std::move(cols));
    }
    for (std::size_t i = 0; i < header.size(); ++i)
        if (!used[i]) ignored.push_back(header[i]);
    return map;
}

}  // namespace

LoadResult load_survey(std::istream& in, const VariableSchema& schema_in, const LoadOptions& options) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("malformed header: empty input");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    LoadResult result;
    VariableSchema schema = schema_in;
    const auto header = csv::split_line(line, options.delimiter);
    const ColumnMap map = map_header(header, schema, result.ignored_columns);

    const auto n_cat = static_cast<Eigen::Index>(schema.categories().size());
    const auto n_brand = static_cast<Eigen::Index>(schema.categories().front().brands.size());
    std::vector<std::string> category_names;
    for (const auto& c : schema.categories()) category_names.push_back(c.name);

    std::vector<RespondentRecord> records;
    std::unordered_set<std::string> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty() || csv::trim(line) == "\r") continue;
        const auto f = csv::split_line(line, options.delimiter);
        const std::string id = map.id < f.size() ? csv::trim(f[map.id]) : std::string{};

        auto reject = [&](std::string message) {
            if (options.strict) throw DataError("line " + std::to_string(line_no) + ": " + message);
            result.rejected.push_back({line_no, id, std::move(message)});
        };

        if (f.size() != header.size()) {
            reject("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
            continue;
        }
        if (id.empty()) {
            reject("missing respondent id");
            continue;
        }
        if (!ids.insert(id).second) throw DataError("duplicated respondent id '" + id + "' at line " + std::to_string(line_no));

        RankMatrix ranks(n_cat, n_brand);
        std::optional<std::string> problem;
        for (Eigen::Index j = 0; j < n_cat && !problem; ++j) {
            for (Eigen::Index k = 0; k < n_brand && !problem; ++k) {
                const std::size_t col = map.rank_columns[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                const auto cell = csv::trim(f[col]);
                if (is_missing_token(cell)) {
                    problem = "missing rank in column '" + header[col] + "'";
                } else if (auto r = parse_int(cell)) {
                    ranks(j, k) = *r;
                } else {
                    problem = "invalid rank '" + cell + "' in column '" + header[col] + "'";
                }
            }
        }
        if (!problem) problem = RankingProfile::violation(ranks, category_names);
        if (problem) {
            reject(*problem);
            continue;
        }

        std::vector<std::optional<double>> covariates(schema.size());
        for (std::size_t v = 0; v < schema.size() && !problem; ++v) {
            const auto& spec = schema[v];
            const auto cell = csv::trim(f[map.variable_columns[v]]);
            if (is_missing_token(cell)) continue;
            if (spec.kind == VariableKind::categorical) {
                if (auto lv = spec.level_index(cell)) covariates[v] = static_cast<double>(*lv);
                else problem = "categorical level '" + cell + "' not in schema for variable '" + spec.name + "'";
            } else if (auto x = parse_double(cell)) {
                if (spec.role == VariableRole::personality && (*x < 1.0 || *x > 7.0))
                    problem = "personality score " + cell + " outside [1,7] for variable '" + spec.name + "'";
                else
                    covariates[v] = *x;
            } else {
                problem = "invalid numeric value '" + cell + "' for variable '" + spec.name + "'";
            }
        }
        if (problem) {
            reject(*problem);
            continue;
        }
        records.push_back({id, RankingProfile(std::move(ranks)), std::move(covariates)});
    }
    result.dataset = Dataset(std::move(schema), std::move(records));
    return result;
}

LoadResult load_survey_file(const std::filesystem::path& path, const VariableSchema& schema,
                            const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    return load_survey(in, schema, options);
}

void write_survey(std::ostream& out, const Dataset& dataset, char delimiter) {
    const auto& schema = dataset.schema();
    out << csv::escape(schema.id_column(), delimiter);
    for (const auto& c : schema.categories())
        for (const auto& b : c.brands) out << delimiter << csv::escape(c.name + "_" + b, delimiter);
    for (const auto& v : schema.variables()) out << delimiter << csv::escape(v.name, delimiter);
    out << '\n';
    for (const auto& r : dataset.records()) {
        out << csv::escape(r.id, delimiter);
        const auto& ranks = r.profile.ranks();
        for (Eigen::Index j = 0; j < ranks.rows(); ++j)
            for (Eigen::Index k = 0; k < ranks.cols(); ++k) out << delimiter << ranks(j, k);
        for (std::size_t v = 0; v < schema.size(); ++v) {
            out << delimiter;
            const auto& c = r.covariates[v];
            if (!c) {
                out << "NA";
            } else if (schema[v].kind == VariableKind::categorical) {
                out << csv::escape(schema[v].levels.at(static_cast<std::size_t>(*c)), delimiter);
            } else {
                out << csv::number(*c);
            }
        }
        out << '\n';
    }
}

void write_survey_file(const std::filesystem::path& path, const Dataset& dataset, char delimiter) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_survey(out, dataset, delimiter);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string dataset_hash(const Dataset& dataset) {
    std::ostringstream os;
    write_survey(os, dataset);
    return fnv1a_hex(os.str());
}

// ---------------------------------------------------------------------------

DatasetReport validate_dataset(const Dataset& dataset, std::span<const RowDiagnostic> rejected) {
    DatasetReport report;
    report.n = dataset.size();
    report.rejected_rows = rejected.size();
    const auto& schema = dataset.schema();
    for (const auto& r : dataset.records())
        if (!RankingProfile::violation(r.profile.ranks())) ++report.complete_rankings;

    for (std::size_t v = 0; v < schema.size(); ++v) {
        VariableDiagnostics d;
        d.name = schema[v].name;
        double sum = 0;
        std::size_t present = 0;
        if (schema[v].kind == VariableKind::categorical)
            for (const auto& lv : schema[v].levels) d.level_counts[lv] = 0;
        for (const auto& r : dataset.records()) {
            const auto& c = r.covariates[v];
            if (!c) {
                ++d.missing;
                continue;
            }
            if (schema[v].kind == VariableKind::categorical) {
                ++d.level_counts[schema[v].levels.at(static_cast<std::size_t>(*c))];
            } else {
                d.min = d.min ? std::min(*d.min, *c) : *c;
                d.max = d.max ? std::max(*d.max, *c) : *c;
                sum += *c;
                ++present;
            }
        }
        if (present > 0) d.mean = sum / static_cast<double>(present);
        if (d.missing > 0)
            report.warnings.push_back("variable '" + d.name + "' has " + std::to_string(d.missing) + " missing values");
        report.variables.push_back(std::move(d));
    }
    for (const auto& r : dataset.records())
        if (!r.complete()) report.flagged_ids.push_back(r.id);
    if (report.n == 0) report.warnings.insert(report.warnings.begin(), "dataset is empty");
    if (!rejected.empty())
        report.warnings.push_back(std::to_string(rejected.size()) + " rows were rejected at load time");
    return report;
}

nlohmann::json report_to_json(const DatasetReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["complete_rankings"] = report.complete_rankings;
    j["rejected_rows"] = report.rejected_rows;
    j["flagged_ids"] = report.flagged_ids;
    j["warnings"] = report.warnings;
    j["variables"] = nlohmann::json::array();
    for (const auto& v : report.variables) {
        nlohmann::json jv{{"name", v.name}, {"missing", v.missing}};
        if (!v.level_counts.empty()) jv["level_counts"] = v.level_counts;
        if (v.min) jv["min"] = *v.min;
        if (v.max) jv["max"] = *v.max;
        if (v.mean) jv["mean"] = *v.mean;
        j["variables"].push_back(std::move(jv));
    }
    return j;
}

}  // namespace rankseg
