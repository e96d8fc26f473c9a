#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rankseg/error.hpp"
#include "rankseg/validate.hpp"
#include "support.hpp"

using namespace rankseg;

namespace {

Eigen::MatrixXd euclidean(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
    return d;
}

}  // namespace

TEST_CASE("silhouette and Pearson gamma on two tight pairs") {
    // points 0, 1, 10, 11
    Eigen::MatrixXd d(4, 4);
    d << 0, 1, 10, 11, 1, 0, 9, 10, 10, 9, 0, 1, 11, 10, 1, 0;
    const std::vector<int> p = {0, 0, 1, 1};
    // s = 1 - 1/b with b = 10.5, 9.5, 9.5, 10.5
    const double expected = (2 * (1 - 1 / 10.5) + 2 * (1 - 1 / 9.5)) / 4;
    CHECK(asw(d, p) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(pearson_gamma(d, p) > 0.99);
}

TEST_CASE("silhouette conventions") {
    Eigen::MatrixXd d(3, 3);
    d << 0, 1, 5, 1, 0, 4, 5, 4, 0;
    // singleton {2} contributes 0; s(0) = 1 - 1/5, s(1) = 1 - 1/4
    CHECK(asw(d, std::vector<int>{0, 0, 1}) == doctest::Approx((0.8 + 0.75) / 3).epsilon(1e-15));
    CHECK_THROWS_AS(asw(d, std::vector<int>{1, 1, 1}), InvalidArgument);
    CHECK_THROWS_AS(asw(d, std::vector<int>{0, 1}), InvalidArgument);
    CHECK_THROWS_AS(pearson_gamma(Eigen::MatrixXd::Ones(3, 3), std::vector<int>{0, 0, 1}), ZeroVarianceError);
    CHECK_THROWS_AS(pearson_gamma(d, std::vector<int>{0, 1, 2}), ZeroVarianceError);
}

TEST_CASE("indices against naive oracles on random instances") {
    std::mt19937_64 rng(201);
    for (int rep = 0; rep < 100; ++rep) {
        const auto d = support::random_dissimilarity(8, rng);
        std::vector<int> p(8);
        do {
            for (auto& x : p) x = static_cast<int>(rng() % 3) * 5 - 2;
        } while (std::all_of(p.begin(), p.end(), [&](int x) { return x == p[0]; }));
        const auto dist = support::to_dist(d);
        CHECK(std::abs(asw(d, p) - oracle::silhouette(dist, p)) < 1e-12);
        CHECK(std::abs(pearson_gamma(d, p) - oracle::pearson_gamma(dist, p)) < 1e-12);
    }
}

TEST_CASE("classical MDS") {
    std::mt19937_64 rng(203);
    std::normal_distribution<double> z(0.0, 3.0);

    SUBCASE("planted planar configuration is reproduced") {
        Eigen::MatrixXd pts(30, 2);
        for (Eigen::Index i = 0; i < 30; ++i) pts.row(i) << z(rng), z(rng);
        const auto d = euclidean(pts);
        const auto e = classical_mds(d);
        const auto back = euclidean(e.coordinates);
        for (Eigen::Index i = 0; i < 30; ++i)
            for (Eigen::Index j = i + 1; j < 30; ++j) CHECK(std::abs(back(i, j) - d(i, j)) <= 1e-9 * d(i, j));
        CHECK(e.goodness_of_fit == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(e.eigenvalues.size() == 30);
    }
    SUBCASE("collinear points give a zero second coordinate") {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(6, 2);
        for (Eigen::Index i = 0; i < 6; ++i) pts(i, 0) = static_cast<double>(i * i);
        const auto e = classical_mds(euclidean(pts));
        CHECK(e.coordinates.col(1).cwiseAbs().maxCoeff() == 0.0);
        CHECK(std::abs(e.coordinates(5, 0) - e.coordinates(0, 0)) == doctest::Approx(25.0).epsilon(1e-12));
    }
    SUBCASE("non-Euclidean input keeps a negative eigenvalue") {
        // violates the triangle inequality: d(0,2) > d(0,1) + d(1,2)
        Eigen::MatrixXd d(4, 4);
        d << 0, 1, 5, 1, 1, 0, 1, 1, 5, 1, 0, 1, 1, 1, 1, 0;
        const auto e = classical_mds(d);
        CHECK(e.eigenvalues.minCoeff() < -1e-6);
        CHECK(std::is_sorted(e.eigenvalues.data(), e.eigenvalues.data() + 4, std::greater<>()));
        CHECK(e.goodness_of_fit <= 1.0);
        CHECK(e.coordinates.allFinite());
    }
    SUBCASE("deterministic sign") {
        const auto d = support::random_dissimilarity(12, rng);
        const auto e = classical_mds(d);
        for (Eigen::Index k = 0; k < 2; ++k) {
            Eigen::Index arg = 0;
            e.coordinates.col(k).cwiseAbs().maxCoeff(&arg);
            CHECK(e.coordinates(arg, k) >= 0);
        }
    }
    CHECK_THROWS_AS(classical_mds(Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
}
