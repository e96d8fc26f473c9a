#include <doctest.h>

#include <random>

#include "rankseg/error.hpp"
#include "rankseg/forest.hpp"

using namespace rankseg;

namespace {

std::vector<ColumnGroup> one_group_per_column(Eigen::Index p) {
    std::vector<ColumnGroup> g;
    for (Eigen::Index c = 0; c < p; ++c) g.push_back({"v" + std::to_string(c), VariableRole::sociodemographic, {c}});
    return g;
}

ForestParams small(int trees = 100) {
    ForestParams p;
    p.n_trees = trees;
    return p;
}

}  // namespace

TEST_CASE("baseline error") {
    CHECK(baseline_error(std::vector<int>{0, 0, 1, 2, 2, 2}) == 0.5);
    CHECK(baseline_error(std::vector<int>{1, 1}) == 0.0);
    CHECK_THROWS_AS(baseline_error(std::vector<int>{}), InvalidArgument);
}

TEST_CASE("separable classes are learned") {
    std::mt19937_64 rng(401);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(150, 3);
    std::vector<int> y;
    for (int i = 0; i < 150; ++i) {
        const int c = i % 3;
        y.push_back(c);
        x(i, 0) = 10.0 * c + 0.5 * z(rng);
        x(i, 1) = z(rng);
        x(i, 2) = z(rng);
    }
    const auto model = fit_forest(x, y, 3, small(), 7);
    const auto oob = oob_error(model, x, y);
    CHECK(oob.error <= 0.05);
    CHECK(oob.excluded == 0);
    for (int i = 0; i < 150; ++i) CHECK(model.predict(x.row(i)) == y[static_cast<std::size_t>(i)]);

    const auto imp = permutation_importance(model, x, y, one_group_per_column(3), 3);
    CHECK(imp.variables == std::vector<std::string>{"v0", "v1", "v2"});
    CHECK(imp.importance[0] > 0.5);
    CHECK(std::abs(imp.importance[1]) < 0.05);
}

TEST_CASE("trees are pure in-bag and structurally sound") {
    std::mt19937_64 rng(403);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(80, 2);
    std::vector<int> y;
    for (int i = 0; i < 80; ++i) {
        x(i, 0) = z(rng);
        x(i, 1) = z(rng);
        y.push_back(x(i, 0) + x(i, 1) > 0 ? 1 : 0);
    }
    const auto model = fit_forest(x, y, 2, small(20), 11);
    REQUIRE(model.trees.size() == 20);
    for (const auto& tree : model.trees) {
        int inbag = 0;
        for (auto m : tree.inbag) inbag += m;
        CHECK(inbag == 80);
        CHECK(tree.nodes[0].size == 80);
        for (const auto& nd : tree.nodes)
            if (nd.feature >= 0) CHECK(nd.size == tree.nodes[static_cast<std::size_t>(nd.left)].size +
                                                     tree.nodes[static_cast<std::size_t>(nd.right)].size);
        // distinct inputs, so fully grown trees reproduce every in-bag label
        for (int i = 0; i < 80; ++i)
            if (tree.inbag[static_cast<std::size_t>(i)]) CHECK(tree.predict(x.row(i)) == y[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("results do not depend on the thread count") {
    std::mt19937_64 rng(405);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd x(120, 4);
    std::vector<int> y;
    for (int i = 0; i < 120; ++i) {
        for (int c = 0; c < 4; ++c) x(i, c) = z(rng);
        y.push_back(static_cast<int>(rng() % 3));
    }
    auto p = small(60);
    const auto a = fit_forest(x, y, 3, p, 21);
    p.threads = 3;
    const auto b = fit_forest(x, y, 3, p, 21);
    const auto oa = oob_error(a, x, y), ob = oob_error(b, x, y);
    CHECK(oa.error == ob.error);
    CHECK(oa.predictions == ob.predictions);
    const auto groups = one_group_per_column(4);
    CHECK(permutation_importance(a, x, y, groups, 5).importance == permutation_importance(b, x, y, groups, 5).importance);
    const auto c = fit_forest(x, y, 3, small(60), 22);
    CHECK(oob_error(c, x, y).predictions != oa.predictions);
}

TEST_CASE("degenerate inputs") {
    Eigen::MatrixXd x(30, 2);
    std::vector<int> y(30, 1);
    for (int i = 0; i < 30; ++i) {
        x(i, 0) = i;
        x(i, 1) = 5.0;
    }
    SUBCASE("single class") {
        const auto model = fit_forest(x, y, 2, small(10), 1);
        CHECK_FALSE(model.warnings.empty());
        CHECK(oob_error(model, x, y).error == 0.0);
    }
    SUBCASE("a constant column never splits and has zero importance") {
        for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = i < 15 ? 0 : 1;
        const auto model = fit_forest(x, y, 2, small(30), 2);
        for (const auto& tree : model.trees)
            for (const auto& nd : tree.nodes) CHECK(nd.feature != 1);
        CHECK(permutation_importance(model, x, y, one_group_per_column(2), 3).importance[1] == 0.0);
    }
    SUBCASE("argument errors") {
        CHECK_THROWS_AS(fit_forest(x.topRows(5), std::vector<int>(5, 0), 1, small(), 1), InvalidArgument);
        CHECK_THROWS_AS(fit_forest(x, std::vector<int>(30, 3), 2, small(), 1), InvalidArgument);
        auto p = small();
        p.n_trees = 0;
        CHECK_THROWS_AS(fit_forest(x, y, 2, p, 1), InvalidArgument);
    }
}
