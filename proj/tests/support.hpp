// Conversions between oracle containers and library types.
#ifndef RANKSEG_TESTS_SUPPORT_HPP
#define RANKSEG_TESTS_SUPPORT_HPP

#include <Eigen/Core>

#include "oracles.hpp"
#include "rankseg/data_model.hpp"

namespace support {

inline rankseg::RankingProfile to_profile(const oracle::Ranks& r) {
    rankseg::RankMatrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r[0].size()));
    for (std::size_t j = 0; j < r.size(); ++j)
        for (std::size_t k = 0; k < r[j].size(); ++k)
            m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = r[j][k];
    return rankseg::RankingProfile(m);
}

template <typename Derived>
oracle::Dist to_dist(const Eigen::MatrixBase<Derived>& d) {
    oracle::Dist out(static_cast<std::size_t>(d.rows()), std::vector<double>(static_cast<std::size_t>(d.cols())));
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<double>(d(i, j));
    return out;
}

/// Random symmetric matrix with zero diagonal and integer entries in [1, hi].
inline Eigen::MatrixXd random_dissimilarity(int n, std::mt19937_64& rng, int hi = 20) {
    std::uniform_int_distribution<int> u(1, hi);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
    return d;
}

}  // namespace support

#endif  // RANKSEG_TESTS_SUPPORT_HPP
