#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rankseg/data_model.hpp"
#include "rankseg/error.hpp"
#include "rankseg/tipi.hpp"

using namespace rankseg;

namespace {

std::vector<CategorySpec> five_by_five() {
    std::vector<CategorySpec> cats;
    for (const char* c : {"phone", "choc", "cloth", "coffee", "tv"}) cats.push_back({c, {"a", "b", "c", "d", "e"}});
    return cats;
}

VariableSchema small_schema(bool with_categories = false) {
    std::vector<VariableSpec> vars = {
        {"gender", VariableKind::categorical, VariableRole::sociodemographic, {"female", "male"}},
        {"income", VariableKind::numeric, VariableRole::sociodemographic, {}},
        {"openness", VariableKind::numeric, VariableRole::personality, {}},
    };
    return VariableSchema(vars, with_categories ? five_by_five() : std::vector<CategorySpec>{});
}

std::string header() {
    std::string h = "id";
    for (const auto& c : five_by_five())
        for (const auto& b : c.brands) h += "," + c.name + "_" + b;
    return h + ",gender,income,openness\n";
}

std::string row(const std::string& id, const std::vector<std::string>& cats, const std::string& rest) {
    std::string r = id;
    for (const auto& c : cats) r += "," + c;
    return r + "," + rest + "\n";
}

const std::string identity = "1,2,3,4,5";

std::vector<std::string> same(const std::string& c) { return {c, c, c, c, c}; }

}  // namespace

TEST_CASE("identity rankings with complete covariates give one valid record") {
    std::istringstream in(header() + row("p1", same(identity), "female,3,4.5"));
    const auto res = load_survey(in, small_schema());
    REQUIRE(res.dataset.size() == 1);
    CHECK(res.rejected.empty());
    CHECK(res.dataset[0].complete());
    CHECK(res.dataset[0].profile.rank(2, 4) == 5);
    CHECK(res.dataset.categories().size() == 5);
    CHECK(res.dataset.categories()[0].name == "phone");
    CHECK(*res.dataset[0].covariates[0] == 0.0);
    CHECK(*res.dataset[0].covariates[1] == 3.0);
}

TEST_CASE("duplicate rank rejects the row with a diagnostic") {
    auto cats = same(identity);
    cats[2] = "1,1,3,4,5";
    std::istringstream in(header() + row("p1", cats, "female,3,4.5") + row("p2", same(identity), "male,2,5"));
    const auto res = load_survey(in, small_schema());
    REQUIRE(res.dataset.size() == 1);
    REQUIRE(res.rejected.size() == 1);
    CHECK(res.rejected[0].line == 2);
    CHECK(res.rejected[0].id == "p1");
    CHECK(res.rejected[0].message.find("duplicate rank 1 in category") == 0);
    CHECK(res.rejected[0].message.find("cloth") != std::string::npos);
}

TEST_CASE("invalid rows are rejected, missing covariates retained and flagged") {
    auto gap = same(identity);
    gap[0] = "1,2,,4,5";
    auto out_of_range = same(identity);
    out_of_range[4] = "1,2,3,4,6";
    std::istringstream in(header() + row("ok", same(identity), "female,3,4.5") + row("gap", gap, "male,1,2") +
                          row("range", out_of_range, "male,1,2") + row("level", same(identity), "other,1,2") +
                          row("tipi", same(identity), "male,1,7.5") + row("na", same(identity), "male,NA,3"));
    const auto res = load_survey(in, small_schema());
    CHECK(res.rejected.size() == 4);
    REQUIRE(res.dataset.size() == 2);
    CHECK_FALSE(res.dataset[1].complete());
    CHECK(res.dataset.complete_cases() == std::vector<std::size_t>{0});

    const auto report = validate_dataset(res.dataset, res.rejected);
    CHECK(report.n == 2);
    CHECK(report.rejected_rows == 4);
    CHECK(report.flagged_ids == std::vector<std::string>{"na"});
    CHECK(report.variables[1].missing == 1);
    CHECK(report.variables[0].level_counts.at("male") == 1);
}

TEST_CASE("strict mode throws on the first invalid row") {
    auto cats = same(identity);
    cats[0] = "2,2,3,4,5";
    std::istringstream in(header() + row("p1", cats, "female,3,4.5"));
    LoadOptions opts;
    opts.strict = true;
    CHECK_THROWS_AS(load_survey(in, small_schema(), opts), DataError);
}

TEST_CASE("header and id errors") {
    SUBCASE("missing variable column") {
        std::istringstream in("id,phone_a,phone_b,gender\nx,1,2,male\n");
        CHECK_THROWS_AS(load_survey(in, small_schema()), DataError);
    }
    SUBCASE("column that is not category_brand") {
        std::istringstream in("id,phone_a,phone_b,weird,gender,income,openness\n");
        CHECK_THROWS_AS(load_survey(in, small_schema()), DataError);
    }
    SUBCASE("empty input") {
        std::istringstream in("");
        CHECK_THROWS_AS(load_survey(in, small_schema()), DataError);
    }
    SUBCASE("duplicated id") {
        std::istringstream in(header() + row("p1", same(identity), "female,3,4.5") +
                              row("p1", same(identity), "male,3,4.5"));
        CHECK_THROWS_AS(load_survey(in, small_schema()), DataError);
    }
    SUBCASE("declared categories must be present") {
        std::istringstream in("id,phone_a,gender,income,openness\n");
        CHECK_THROWS_AS(load_survey(in, small_schema(true)), DataError);
    }
}

TEST_CASE("343 valid rows with one missing income: 343 records, one flagged") {
    std::ostringstream os;
    os << header();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 343; ++i) {
        const auto r = oracle::random_ranks(5, 5, rng);
        std::vector<std::string> cats;
        for (const auto& c : r) {
            std::string s;
            for (std::size_t k = 0; k < c.size(); ++k) s += (k ? "," : "") + std::to_string(c[k]);
            cats.push_back(s);
        }
        os << row("s" + std::to_string(i), cats, std::string(i % 2 ? "male" : "female") + "," + (i == 100 ? "NA" : "2") + ",4");
    }
    std::istringstream in(os.str());
    const auto res = load_survey(in, small_schema());
    CHECK(res.dataset.size() == 343);
    const auto report = validate_dataset(res.dataset);
    CHECK(report.flagged_ids == std::vector<std::string>{"s100"});
    CHECK(res.dataset.complete_cases().size() == 342);
}

TEST_CASE("empty dataset report warns") {
    const auto report = validate_dataset(Dataset{});
    CHECK(report.n == 0);
    CHECK_FALSE(report.warnings.empty());
}

TEST_CASE("write then reload yields an identical dataset") {
    std::ostringstream os;
    os << header();
    std::mt19937_64 rng(11);
    for (int i = 0; i < 40; ++i) {
        const auto r = oracle::random_ranks(5, 5, rng);
        std::vector<std::string> cats;
        for (const auto& c : r) {
            std::string s;
            for (std::size_t k = 0; k < c.size(); ++k) s += (k ? "," : "") + std::to_string(c[k]);
            cats.push_back(s);
        }
        const double income = 1000.0 / (i + 3);
        os << row("id" + std::to_string(i), cats,
                  std::string(i % 3 ? "male" : "female") + "," + (i % 7 ? std::to_string(income) : "NA") + ",3.5");
    }
    std::istringstream in(os.str());
    const auto first = load_survey(in, small_schema()).dataset;

    std::ostringstream written;
    write_survey(written, first);
    std::istringstream back(written.str());
    const auto second = load_survey(back, small_schema()).dataset;
    CHECK(second == first);
    CHECK(dataset_hash(second) == dataset_hash(first));

    std::ostringstream semi;
    write_survey(semi, first, ';');
    std::istringstream back_semi(semi.str());
    LoadOptions opts;
    opts.delimiter = ';';
    CHECK(load_survey(back_semi, small_schema(), opts).dataset == first);
}

TEST_CASE("schema JSON round trip and validation") {
    const auto schema = small_schema(true);
    CHECK(schema_from_json(schema_to_json(schema)) == schema);

    std::vector<VariableSpec> dup = {{"x", VariableKind::numeric, VariableRole::sociodemographic, {}},
                                     {"x", VariableKind::numeric, VariableRole::sociodemographic, {}}};
    CHECK_THROWS_AS(VariableSchema{dup}, InvalidArgument);
    std::vector<VariableSpec> cat_personality = {
        {"o", VariableKind::categorical, VariableRole::personality, {"lo", "hi"}}};
    CHECK_THROWS_AS(VariableSchema{cat_personality}, InvalidArgument);
    std::vector<VariableSpec> no_levels = {{"g", VariableKind::categorical, VariableRole::sociodemographic, {}}};
    CHECK_THROWS_AS(VariableSchema{no_levels}, InvalidArgument);
}

TEST_CASE("ranking profile invariant") {
    RankMatrix ok(2, 3);
    ok << 1, 2, 3, 3, 1, 2;
    CHECK_NOTHROW(RankingProfile{ok});
    RankMatrix gap(1, 3);
    gap << 1, 2, 4;
    CHECK_THROWS_AS(RankingProfile{gap}, InvalidArgument);
    CHECK(RankingProfile::violation(gap).has_value());
}

TEST_CASE("score_tipi") {
    SUBCASE("all fours") {
        const std::vector<int> items(10, 4);
        for (double s : score_tipi(items)) CHECK(s == 4.0);
    }
    SUBCASE("direct 7 with reversed 1") {
        std::vector<int> items(10, 4);
        items[0] = 7;  // extraversion direct
        items[5] = 1;  // extraversion reversed
        CHECK(score_tipi(items)[0] == 7.0);
    }
    SUBCASE("hand evaluation against the shipped keying table") {
        const std::vector<int> items = {5, 2, 6, 3, 4, 4, 7, 1, 5, 2};
        // E (5 + 8-4)/2, A (7 + 8-2)/2, C (6 + 8-1)/2, ES (5 + 8-3)/2, O (4 + 8-2)/2
        const std::array<double, 5> hand = {4.5, 6.5, 6.5, 5.0, 5.0};
        CHECK(score_tipi(items) == hand);
        const auto shipped = TipiKeying::from_csv_file(std::filesystem::path(RANKSEG_DATA_DIR) / "tipi_keying.csv");
        CHECK(shipped == TipiKeying::standard());
        CHECK(score_tipi(items, shipped) == hand);
    }
    SUBCASE("shifting a direct item up and its reversed partner up keeps the mean") {
        std::vector<int> items = {3, 4, 4, 4, 4, 3, 4, 4, 4, 4};
        const auto base = score_tipi(items);
        items[0] += 2;  // direct +2
        items[5] += 2;  // reversed recoding 8-r drops by 2
        CHECK(score_tipi(items) == base);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(score_tipi(std::vector<int>(9, 4)), InvalidArgument);
        std::vector<int> items(10, 4);
        items[3] = 8;
        CHECK_THROWS_AS(score_tipi(items), InvalidArgument);
    }
}
