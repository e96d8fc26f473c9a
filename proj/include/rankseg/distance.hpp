#ifndef RANKSEG_DISTANCE_HPP
#define RANKSEG_DISTANCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "rankseg/data_model.hpp"
#include "rankseg/error.hpp"

namespace rankseg {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Maps rank r (1-based) to a score s(r). Scores must be nondecreasing in rank.
template <typename Scalar>
class ScoreFunction {
public:
    using VectorType = Vector<Scalar>;

    /// The top-weighted default s = (1, 5, 7, 8, 9): the first preference counts most.
    ScoreFunction() : ScoreFunction(top_weighted()) {}

    explicit ScoreFunction(VectorType scores) : scores_(std::move(scores)) {
        if (scores_.size() == 0) throw InvalidArgument("score function: empty score vector");
        for (Eigen::Index i = 1; i < scores_.size(); ++i)
            if (scores_(i) < scores_(i - 1)) throw InvalidArgument("score function: scores must be nondecreasing in rank");
    }

    static ScoreFunction top_weighted() {
        VectorType s(5);
        s << Scalar(1), Scalar(5), Scalar(7), Scalar(8), Scalar(9);
        return ScoreFunction(std::move(s));
    }

    /// s(r) = r; the scored distance then reduces to Spearman's footrule.
    static ScoreFunction identity(int k) {
        if (k < 1) throw InvalidArgument("score function: k must be positive");
        return ScoreFunction(VectorType::LinSpaced(k, Scalar(1), Scalar(k)));
    }

    Scalar operator()(int rank) const {
        if (rank < 1 || rank > scores_.size())
            throw InvalidArgument("score_rank: rank " + std::to_string(rank) + " outside 1.." +
                                  std::to_string(scores_.size()));
        return scores_(rank - 1);
    }

    Eigen::Index size() const noexcept { return scores_.size(); }
    const VectorType& scores() const noexcept { return scores_; }

    std::vector<double> as_doubles() const {
        std::vector<double> out(static_cast<std::size_t>(scores_.size()));
        for (Eigen::Index i = 0; i < scores_.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(scores_(i));
        return out;
    }

private:
    VectorType scores_;
};

template <typename Scalar>
Scalar score_rank(int rank, const ScoreFunction<Scalar>& sf) {
    return sf(rank);
}

/// Which categories enter the distance: all of them ("combined") or a named subset.
class CategorySubset {
public:
    CategorySubset() = default;  // all categories
    static CategorySubset all() { return {}; }
    static CategorySubset of(std::vector<Eigen::Index> indices);

    /// Parses "combined" or a comma-separated list of category names.
    static CategorySubset parse(const std::string& spec, const std::vector<CategorySpec>& categories);

    bool is_all() const noexcept { return indices_.empty(); }

    /// Indices into 0..J-1; throws InvalidArgument when out of range.
    std::vector<Eigen::Index> resolve(Eigen::Index categories) const;

    /// "combined" or the selected names joined by ';'.
    std::string label(const std::vector<CategorySpec>& categories) const;

    bool operator==(const CategorySubset&) const = default;

private:
    std::vector<Eigen::Index> indices_;
};

/// Rank profile mapped through the score function (J x K).
template <typename Scalar>
Matrix<Scalar> score_profile(const RankingProfile& profile, const ScoreFunction<Scalar>& sf) {
    if (profile.brands() != sf.size())
        throw InvalidArgument("score function has " + std::to_string(sf.size()) + " scores but profile has " +
                              std::to_string(profile.brands()) + " brands");
    return profile.ranks().unaryExpr([&](int r) { return sf(r); }).template cast<Scalar>();
}

/// Scored footrule distance: sum over the selected categories and all brands of
/// |s(a_jk) - s(b_jk)|.
template <typename Scalar>
Scalar footrule_distance(const RankingProfile& a, const RankingProfile& b, const ScoreFunction<Scalar>& sf,
                         const CategorySubset& categories = {}) {
    if (a.categories() != b.categories() || a.brands() != b.brands())
        throw InvalidArgument("footrule_distance: profile dimension mismatch");
    if (a.brands() != sf.size()) throw InvalidArgument("footrule_distance: score function length differs from K");
    Scalar total(0);
    for (Eigen::Index j : categories.resolve(a.categories())) {
        for (Eigen::Index k = 0; k < a.brands(); ++k) {
            const Scalar d = sf(a.rank(j, k)) - sf(b.rank(j, k));
            total += d < Scalar(0) ? -d : d;
        }
    }
    return total;
}

struct DistanceProvenance {
    std::vector<double> scores;
    std::string categories = "combined";
    std::string dataset_hash;

    bool operator==(const DistanceProvenance&) const = default;
};

/// Dense symmetric distance matrix with zero diagonal, labelled by respondent id.
template <typename Scalar>
class DistanceMatrix {
public:
    using MatrixType = Matrix<Scalar>;

    DistanceMatrix() = default;
    DistanceMatrix(MatrixType values, std::vector<std::string> ids, DistanceProvenance provenance)
        : values_(std::move(values)), ids_(std::move(ids)), provenance_(std::move(provenance)) {
        if (values_.rows() != values_.cols()) throw InvalidArgument("distance matrix must be square");
        if (static_cast<Eigen::Index>(ids_.size()) != values_.rows())
            throw InvalidArgument("distance matrix: one id per row required");
    }

    Eigen::Index size() const noexcept { return values_.rows(); }
    Scalar operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
    const MatrixType& matrix() const noexcept { return values_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const DistanceProvenance& provenance() const noexcept { return provenance_; }

    template <typename Other>
    DistanceMatrix<Other> cast() const {
        return DistanceMatrix<Other>(values_.template cast<Other>(), ids_, provenance_);
    }

private:
    MatrixType values_;
    std::vector<std::string> ids_;
    DistanceProvenance provenance_;
};

/// All pairwise scored footrule distances. Rows may be computed on several threads;
/// the result does not depend on the thread count.
template <typename Scalar>
Matrix<Scalar> distance_matrix(std::span<const RankingProfile> profiles, const ScoreFunction<Scalar>& sf,
                               const CategorySubset& categories = {}, unsigned threads = 1) {
    const auto n = static_cast<Eigen::Index>(profiles.size());
    Matrix<Scalar> d = Matrix<Scalar>::Zero(n, n);
    if (n == 0) return d;

    const auto cats = categories.resolve(profiles.front().categories());
    // Scored rows of the selected categories, flattened: one column per profile.
    const Eigen::Index width = static_cast<Eigen::Index>(cats.size()) * profiles.front().brands();
    Matrix<Scalar> scored(width, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = profiles[static_cast<std::size_t>(i)];
        if (p.categories() != profiles.front().categories() || p.brands() != profiles.front().brands())
            throw InvalidArgument("distance_matrix: profile dimension mismatch");
        const Matrix<Scalar> s = score_profile(p, sf);
        Eigen::Index row = 0;
        for (Eigen::Index j : cats)
            for (Eigen::Index k = 0; k < s.cols(); ++k) scored(row++, i) = s(j, k);
    }

    auto fill_rows = [&](unsigned worker, unsigned workers) {
        for (Eigen::Index i = worker; i < n; i += workers)
            for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = (scored.col(i) - scored.col(j)).cwiseAbs().sum();
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        fill_rows(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(fill_rows, t, threads);
    }
    d.template triangularView<Eigen::StrictlyLower>() = d.transpose();
    return d;
}

template <typename Scalar>
DistanceMatrix<Scalar> distance_matrix(const Dataset& data, const ScoreFunction<Scalar>& sf,
                                       const CategorySubset& categories = {}, unsigned threads = 1) {
    std::vector<RankingProfile> profiles;
    std::vector<std::string> ids;
    profiles.reserve(data.size());
    for (const auto& r : data.records()) {
        profiles.push_back(r.profile);
        ids.push_back(r.id);
    }
    DistanceProvenance prov{sf.as_doubles(), categories.label(data.categories()), dataset_hash(data)};
    return DistanceMatrix<Scalar>(distance_matrix<Scalar>(profiles, sf, categories, threads), std::move(ids),
                                  std::move(prov));
}

/// Upper triangle (i < j), row by row.
template <typename Derived>
Vector<double> upper_triangle(const Eigen::MatrixBase<Derived>& d) {
    const Eigen::Index n = d.rows();
    Vector<double> v(n * (n - 1) / 2);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) v(idx++) = static_cast<double>(d(i, j));
    return v;
}

/// Pearson correlation between two vectors; throws ZeroVarianceError when either is constant.
double pearson_correlation(const Vector<double>& x, const Vector<double>& y);

/// Pearson correlation of the upper-triangle distance vectors of two matrices.
template <typename DerivedA, typename DerivedB>
double distance_vector_correlation(const Eigen::MatrixBase<DerivedA>& d1, const Eigen::MatrixBase<DerivedB>& d2) {
    if (d1.rows() != d2.rows() || d1.rows() != d1.cols() || d2.rows() != d2.cols())
        throw InvalidArgument("distance_vector_correlation: matrices must be square and of equal size");
    if (d1.rows() < 3) throw InvalidArgument("distance_vector_correlation: n >= 3 required");
    return pearson_correlation(upper_triangle(d1), upper_triangle(d2));
}

/// CSV with '#'-prefixed provenance lines, an id header row and one labelled row per observation.
template <typename Scalar>
void write_distance_csv(std::ostream& out, const DistanceMatrix<Scalar>& d);

DistanceMatrix<double> read_distance_csv(std::istream& in);
DistanceMatrix<double> read_distance_csv_file(const std::filesystem::path& path);

extern template void write_distance_csv<double>(std::ostream&, const DistanceMatrix<double>&);
extern template void write_distance_csv<std::int64_t>(std::ostream&, const DistanceMatrix<std::int64_t>&);

}  // namespace rankseg

#endif  // RANKSEG_DISTANCE_HPP
