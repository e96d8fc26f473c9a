#include <doctest.h>

#include <filesystem>

#include "rankseg/cluster.hpp"
#include "rankseg/distance.hpp"
#include "rankseg/error.hpp"
#include "rankseg/synth.hpp"

using namespace rankseg;

namespace {

double mean_distance_to_prototype(const SyntheticData& s) {
    const ScoreFunction<int> sf;
    double total = 0;
    for (std::size_t i = 0; i < s.dataset.size(); ++i)
        total += footrule_distance(s.dataset[i].profile, s.prototypes[static_cast<std::size_t>(s.truth[i])], sf);
    return total / static_cast<double>(s.dataset.size());
}

}  // namespace

TEST_CASE("adjacent transpositions keep a permutation") {
    RankMatrix r(2, 5);
    r << 1, 2, 3, 4, 5, 5, 4, 3, 2, 1;
    Rng rng(3);
    adjacent_transpositions(r, 1, 0, rng);
    CHECK(r.row(1) == (Eigen::RowVector<int, 5>() << 5, 4, 3, 2, 1).finished());
    adjacent_transpositions(r, 0, 1, rng);
    int moved = 0;
    for (Eigen::Index k = 0; k < 5; ++k) moved += r(0, k) != k + 1;
    CHECK(moved == 2);
    adjacent_transpositions(r, 0, 25, rng);
    CHECK_NOTHROW(RankingProfile{r});
}

TEST_CASE("noise-free data is recovered exactly by PAM") {
    GeneratorConfig c;
    c.n = 120;
    c.g_true = 4;
    c.noise = 0;
    c.seed = 5;
    const auto s = generate(c);
    const auto d = distance_matrix<double>(s.dataset, ScoreFunction<double>{});
    CHECK(adjusted_rand(pam(d.matrix(), 4).assignment, s.truth) == 1.0);
    CHECK(mean_distance_to_prototype(s) == 0.0);
}

TEST_CASE("generation is a pure function of the config") {
    auto c = GeneratorConfig::survey_like();
    c.seed = 77;
    const auto a = generate(c);
    const auto b = generate(c);
    CHECK(a.dataset == b.dataset);
    CHECK(a.truth == b.truth);
    CHECK(a.dataset.size() == 343);
    CHECK(a.dataset.categories().size() == 5);
    CHECK(a.super_of.size() == 8);
    c.seed = 78;
    CHECK_FALSE(generate(c).dataset == a.dataset);
}

TEST_CASE("cluster sizes follow the imbalance weights") {
    GeneratorConfig c;
    c.n = 301;
    c.g_true = 3;
    const auto balanced = generate(c);
    const auto sizes = cluster_size_summary(balanced.truth, 3).sizes;
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    c.imbalance = 1.0;
    const auto skewed = cluster_size_summary(generate(c).truth, 3).sizes;
    CHECK(skewed[0] > skewed[1]);
    CHECK(skewed[1] > skewed[2]);
}

TEST_CASE("more noise moves respondents further from their prototype") {
    GeneratorConfig c;
    c.n = 400;
    c.g_true = 3;
    double last = -1;
    for (double noise : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        c.noise = noise;
        const double m = mean_distance_to_prototype(generate(c));
        CHECK(m > last);
        last = m;
    }
}

TEST_CASE("nested prototypes share categories with their parent") {
    GeneratorConfig c;
    c.n = 80;
    c.g_true = 4;
    c.branching = {2, 2};
    c.resampled = {1};
    c.noise = 0;
    const auto s = generate(c);
    REQUIRE(s.prototypes.size() == 4);
    CHECK(s.super_of[0] == s.super_of[1]);
    CHECK(s.super_of[2] == s.super_of[3]);
    CHECK(s.super_of[0] != s.super_of[2]);
    // each sibling redraws one category of the shared parent
    int same = 0;
    for (Eigen::Index j = 0; j < 5; ++j) same += s.prototypes[0].ranks().row(j) == s.prototypes[1].ranks().row(j);
    CHECK(same >= 3);

    c.branching = {2, 3};
    CHECK_THROWS_AS(generate(c), InvalidArgument);
    c.branching = {2, 2};
    c.resampled = {};
    CHECK_THROWS_AS(generate(c), InvalidArgument);
}

TEST_CASE("covariate effects shift cluster means only when requested") {
    GeneratorConfig c;
    c.n = 600;
    c.g_true = 2;
    CovariateSpec x;
    x.variable = {"x", VariableKind::numeric, VariableRole::personality, {}};
    x.effect = 2.0;
    c.covariates = {x};
    x.variable.name = "flat";
    x.effect = 0;
    c.covariates.push_back(x);
    const auto s = generate(c);
    double mean[2][2] = {{0, 0}, {0, 0}};
    double count[2] = {0, 0};
    for (std::size_t i = 0; i < s.dataset.size(); ++i) {
        const auto g = static_cast<std::size_t>(s.truth[i]);
        mean[g][0] += *s.dataset[i].covariates[0];
        mean[g][1] += *s.dataset[i].covariates[1];
        count[g] += 1;
    }
    const double shift = std::abs(mean[0][0] / count[0] - mean[1][0] / count[1]);
    const double flat = std::abs(mean[0][1] / count[0] - mean[1][1] / count[1]);
    CHECK(shift > 1.0);
    CHECK(flat < 0.3);
}

TEST_CASE("written files reload to the same dataset") {
    auto c = GeneratorConfig::survey_like();
    c.n = 50;
    c.covariates[2].missing_rate = 0.2;
    const auto s = generate(c);
    const auto dir = std::filesystem::temp_directory_path() / "rankseg_test_synth";
    std::filesystem::remove_all(dir);
    write_synthetic(dir, s);
    const auto schema = read_schema_file(dir / "schema.json");
    const auto back = load_survey_file(dir / "survey.csv", schema);
    CHECK(back.rejected.empty());
    CHECK(back.dataset == s.dataset);
    CHECK(std::filesystem::exists(dir / "truth.csv"));
    CHECK(std::filesystem::exists(dir / "config.json"));
    std::filesystem::remove_all(dir);
}
