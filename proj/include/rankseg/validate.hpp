#ifndef RANKSEG_VALIDATE_HPP
#define RANKSEG_VALIDATE_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "rankseg/distance.hpp"
#include "rankseg/error.hpp"

namespace rankseg {

namespace detail {

/// Maps arbitrary labels onto 0..G-1 in order of first appearance.
inline std::vector<int> compact_labels(std::span<const int> labels, int& groups) {
    std::map<int, int> code;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = code.emplace(labels[i], static_cast<int>(code.size()));
        out[i] = it->second;
    }
    groups = static_cast<int>(code.size());
    return out;
}

}  // namespace detail

/// Average silhouette width. Observations in singleton clusters contribute s(i) = 0.
template <typename Derived>
double asw(const Eigen::MatrixBase<Derived>& d, std::span<const int> partition) {
    const auto n = static_cast<Eigen::Index>(partition.size());
    if (d.rows() != n || d.cols() != n) throw InvalidArgument("asw: partition length differs from matrix size");
    if (n < 3) throw InvalidArgument("asw: n >= 3 required");
    int G = 0;
    const auto label = detail::compact_labels(partition, G);
    if (G < 2) throw InvalidArgument("asw: partition has a single cluster");

    std::vector<double> size(static_cast<std::size_t>(G), 0.0);
    for (int c : label) size[static_cast<std::size_t>(c)] += 1;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n, G);  // distance of i to every cluster
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) sums(i, label[static_cast<std::size_t>(j)]) += static_cast<double>(d(i, j));

    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int own = label[static_cast<std::size_t>(i)];
        if (size[static_cast<std::size_t>(own)] <= 1) continue;
        const double a = sums(i, own) / (size[static_cast<std::size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int g = 0; g < G; ++g)
            if (g != own) b = std::min(b, sums(i, g) / size[static_cast<std::size_t>(g)]);
        const double m = std::max(a, b);
        if (m > 0) total += (b - a) / m;
    }
    return total / static_cast<double>(n);
}

/// Pearson correlation between pairwise distances and the 0/1 "different cluster" indicator.
template <typename Derived>
double pearson_gamma(const Eigen::MatrixBase<Derived>& d, std::span<const int> partition) {
    const auto n = static_cast<Eigen::Index>(partition.size());
    if (d.rows() != n || d.cols() != n) throw InvalidArgument("pearson_gamma: partition length differs from matrix size");
    if (n < 3) throw InvalidArgument("pearson_gamma: n >= 3 required");
    Vector<double> dist = upper_triangle(d);
    Vector<double> apart(dist.size());
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            apart(idx++) = partition[static_cast<std::size_t>(i)] != partition[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    try {
        return pearson_correlation(dist, apart);
    } catch (const ZeroVarianceError&) {
        throw ZeroVarianceError(dist.maxCoeff() == dist.minCoeff()
                                    ? "pearson_gamma: zero distance variance"
                                    : "pearson_gamma: all pairs share the same cluster relation");
    }
}

struct MdsEmbedding {
    Eigen::MatrixXd coordinates;  // n x 2
    Eigen::VectorXd eigenvalues;  // full spectrum of the doubly centred matrix, descending
    double goodness_of_fit = 1;   // (positive part of the two leading eigenvalues) / (sum of positive eigenvalues)
};

/// Classical (Torgerson) scaling into two dimensions. Negative eigenvalues stay in the
/// spectrum but never enter the coordinates.
template <typename Derived>
MdsEmbedding classical_mds(const Eigen::MatrixBase<Derived>& d) {
    const Eigen::Index n = d.rows();
    if (d.cols() != n) throw InvalidArgument("classical_mds: distance matrix must be square");
    if (n < 3) throw InvalidArgument("classical_mds: n >= 3 required");

    const Eigen::MatrixXd sq = d.template cast<double>().array().square().matrix();
    const Eigen::VectorXd row_mean = sq.rowwise().mean();
    const Eigen::VectorXd col_mean = sq.colwise().mean().transpose();
    const double grand = sq.mean();
    Eigen::MatrixXd b = -0.5 * ((sq.colwise() - row_mean).rowwise() - col_mean.transpose()).array() - 0.5 * grand;
    b = 0.5 * (b + b.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success) throw Error("classical_mds: eigendecomposition failed");

    MdsEmbedding e;
    e.eigenvalues = solver.eigenvalues().reverse();
    const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
    const double scale = e.eigenvalues.cwiseAbs().maxCoeff();
    const double tol = 1e-10 * std::max(scale, 1e-300);

    e.coordinates = Eigen::MatrixXd::Zero(n, 2);
    double leading = 0, positive = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double lambda = e.eigenvalues(k);
        if (lambda <= tol) continue;
        positive += lambda;
        if (k < 2) {
            Eigen::VectorXd v = vectors.col(k);
            Eigen::Index arg = 0;
            v.cwiseAbs().maxCoeff(&arg);
            if (v(arg) < 0) v = -v;
            e.coordinates.col(k) = v * std::sqrt(lambda);
            leading += lambda;
        }
    }
    e.goodness_of_fit = positive > 0 ? leading / positive : 1.0;
    return e;
}

}  // namespace rankseg

#endif  // RANKSEG_VALIDATE_HPP
