#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rankseg/cluster.hpp"
#include "rankseg/distance.hpp"
#include "rankseg/error.hpp"
#include "support.hpp"

using namespace rankseg;

namespace {

void check_invariants(const Eigen::MatrixXd& d, const ClusterSolution& s) {
    REQUIRE(static_cast<int>(s.medoids.size()) == s.G);
    CHECK(std::is_sorted(s.medoids.begin(), s.medoids.end()));
    double objective = 0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const int g = s.assignment[static_cast<std::size_t>(i)];
        REQUIRE(g >= 0);
        REQUIRE(g < s.G);
        double nearest = d(i, s.medoids[0]);
        for (auto m : s.medoids) nearest = std::min(nearest, d(i, m));
        CHECK(d(i, s.medoids[static_cast<std::size_t>(g)]) == nearest);
        objective += d(i, s.medoids[static_cast<std::size_t>(g)]);
    }
    for (int g = 0; g < s.G; ++g) CHECK(s.assignment[static_cast<std::size_t>(s.medoids[static_cast<std::size_t>(g)])] == g);
    CHECK(s.objective == objective);
}

Eigen::MatrixXd line(const std::vector<double>& x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = std::abs(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]);
    return d;
}

}  // namespace

TEST_CASE("PAM never beats exhaustive search and ends at a swap-local optimum") {
    std::mt19937_64 rng(101);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = 6 + rep % 7;
        const int G = 2 + rep % 2;
        const auto d = support::random_dissimilarity(n, rng);
        const auto s = pam(d, G);
        check_invariants(d, s);
        CHECK(s.objective >= oracle::best_medoid_objective(support::to_dist(d), G));
        for (int g = 0; g < G; ++g)
            for (Eigen::Index h = 0; h < n; ++h) {
                auto m = s.medoids;
                if (std::find(m.begin(), m.end(), h) != m.end()) continue;
                m[static_cast<std::size_t>(g)] = h;
                double objective = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double nearest = d(i, m[0]);
                    for (auto x : m) nearest = std::min(nearest, d(i, x));
                    objective += nearest;
                }
                CHECK(objective >= s.objective);
            }
    }
}

TEST_CASE("PAM reaches the exhaustive optimum on planted groups") {
    std::mt19937_64 rng(102);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 6 + rep % 7;
        const int G = 2 + rep % 2;
        std::vector<double> x;
        for (int i = 0; i < n; ++i) x.push_back(100.0 * (i % G) + static_cast<double>(rng() % 10));
        const auto d = line(x);
        CHECK(pam(d, G).objective == oracle::best_medoid_objective(support::to_dist(d), G));
    }
}

TEST_CASE("no within-cluster distance exceeds the two largest distances to the medoid") {
    std::mt19937_64 rng(104);
    std::vector<RankingProfile> profiles;
    for (int i = 0; i < 80; ++i) profiles.push_back(support::to_profile(oracle::random_ranks(5, 5, rng)));
    const auto d = distance_matrix<double>(profiles, ScoreFunction<double>{});
    for (int G : {2, 4, 7}) {
        const auto s = pam(d, G);
        for (int g = 0; g < G; ++g) {
            const auto m = s.medoids[static_cast<std::size_t>(g)];
            std::vector<double> to_medoid;
            double widest = 0;
            for (Eigen::Index i = 0; i < 80; ++i) {
                if (s.assignment[static_cast<std::size_t>(i)] != g) continue;
                to_medoid.push_back(d(i, m));
                for (Eigen::Index j = 0; j < 80; ++j)
                    if (s.assignment[static_cast<std::size_t>(j)] == g) widest = std::max(widest, d(i, j));
            }
            std::sort(to_medoid.rbegin(), to_medoid.rend());
            const double bound = to_medoid[0] + (to_medoid.size() > 1 ? to_medoid[1] : 0.0);
            CHECK(widest <= bound);
        }
    }
}

TEST_CASE("PAM recovers well separated groups") {
    const auto d = line({0, 1, 2, 50, 51, 52, 100, 101});
    const auto s = pam(d, 3);
    CHECK(s.assignment == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2});
    CHECK(s.medoids == std::vector<Eigen::Index>{1, 4, 6});
    CHECK(s.objective == 5);
}

TEST_CASE("PAM edge cases") {
    std::mt19937_64 rng(103);
    SUBCASE("G = n puts every point in its own cluster") {
        const auto d = support::random_dissimilarity(7, rng);
        const auto s = pam(d, 7);
        check_invariants(d, s);
        CHECK(s.objective == 0);
    }
    SUBCASE("identical points") {
        const Eigen::MatrixXd d = Eigen::MatrixXd::Zero(5, 5);
        const auto s = pam(d, 2);
        check_invariants(d, s);
        CHECK(s.objective == 0);
    }
    SUBCASE("duplicated observations keep their medoid") {
        const auto d = line({0, 0, 0, 10, 10});
        const auto s = pam(d, 3);
        check_invariants(d, s);
    }
    SUBCASE("argument errors") {
        const auto d = support::random_dissimilarity(4, rng);
        CHECK_THROWS_AS(pam(d, 1), InvalidArgument);
        CHECK_THROWS_AS(pam(d, 5), InvalidArgument);
        CHECK_THROWS_AS(pam(Eigen::MatrixXd(3, 4), 2), InvalidArgument);
        CHECK_THROWS_AS(solution_path(d, 3, 2), InvalidArgument);
    }
}

TEST_CASE("PAM is independent of threads and scalar type; restarts never hurt") {
    std::mt19937_64 rng(107);
    const auto d = support::random_dissimilarity(60, rng, 40);
    const Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> di = d.cast<std::int64_t>();
    for (int G : {2, 5, 9}) {
        const auto one = pam(d, G);
        PamOptions opts;
        opts.threads = 4;
        CHECK(pam(d, G, opts) == one);
        CHECK(pam(di, G) == one);
        opts.restarts = 3;
        opts.seed = 9;
        const auto restarted = pam(d, G, opts);
        check_invariants(d, restarted);
        CHECK(restarted.objective <= one.objective);
        CHECK(pam(d, G, opts) == restarted);
    }
    const auto path = solution_path(d, 2, 6);
    CHECK(path.size() == 5);
    CHECK(path.at(4) == pam(d, 4));
}

TEST_CASE("linkage on points of a line") {
    const auto d = line({0, 1, 3, 7});
    const auto avg = hierarchical_linkage(d, Linkage::average);
    REQUIRE(avg.merges.size() == 3);
    CHECK(avg.merges[0].height == 1);
    CHECK(avg.merges[1].height == 2.5);
    CHECK(avg.merges[2].height == doctest::Approx(17.0 / 3).epsilon(1e-15));
    CHECK(avg.merges[2].size == 4);

    const auto comp = hierarchical_linkage(d, Linkage::complete);
    CHECK(comp.merges[1].height == 3);
    CHECK(comp.merges[2].height == 7);

    CHECK(cut_tree(avg, 2) == std::vector<int>{0, 0, 0, 1});
    CHECK(cut_tree(avg, 4) == std::vector<int>{0, 1, 2, 3});
    CHECK(cut_tree(avg, 1) == std::vector<int>{0, 0, 0, 0});

    const auto cut = linkage_cut(d, Linkage::complete, 2);
    // pairs inside {0,1,3}: 1, 3, 2
    CHECK(cut.average_within == 2);
}

TEST_CASE("adjusted Rand index") {
    const std::vector<int> a = {0, 0, 0, 1, 1, 1};
    const std::vector<int> b = {0, 0, 1, 1, 2, 2};
    CHECK(adjusted_rand(a, a) == 1.0);
    CHECK(adjusted_rand(a, b) == doctest::Approx(8.0 / 33).epsilon(1e-12));
    CHECK(std::abs(adjusted_rand(a, b) - oracle::pair_count_ari(a, b)) < 1e-12);
    const std::vector<int> relabelled = {7, 7, 3, 3, -1, -1};
    CHECK(adjusted_rand(a, relabelled) == adjusted_rand(a, b));
    CHECK(adjusted_rand(b, a) == adjusted_rand(a, b));

    std::mt19937_64 rng(109);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> p(30), q(30);
        for (auto& x : p) x = static_cast<int>(rng() % 4);
        for (auto& x : q) x = static_cast<int>(rng() % 3);
        CHECK(std::abs(adjusted_rand(p, q) - oracle::pair_count_ari(p, q)) < 1e-12);
    }
    CHECK_THROWS_AS(adjusted_rand(a, std::vector<int>{0, 1}), InvalidArgument);
}

TEST_CASE("cluster sizes and JSON round trip") {
    const std::vector<int> assignment = {0, 1, 1, 2, 1, 0};
    const auto sizes = cluster_size_summary(assignment, 3);
    CHECK(sizes.sizes == std::vector<std::size_t>{2, 3, 1});
    CHECK(sizes.imbalance == 3.0);
    CHECK(std::isinf(cluster_size_summary(assignment, 4).imbalance));
    CHECK_THROWS_AS(cluster_size_summary(assignment, 2), InvalidArgument);

    std::mt19937_64 rng(113);
    const auto d = support::random_dissimilarity(9, rng);
    const auto s = pam(d, 3);
    std::vector<std::string> ids;
    for (int i = 0; i < 9; ++i) ids.push_back("x" + std::to_string(i));
    const auto j = solution_to_json(s, ids);
    CHECK(j["assignment"][0]["cluster"].get<int>() == s.assignment[0] + 1);
    CHECK(solution_from_json(j, ids) == s);
    ids[0] = "other";
    CHECK_THROWS_AS(solution_from_json(j, ids), DataError);
}
