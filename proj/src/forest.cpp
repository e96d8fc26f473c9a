#include "rankseg/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "rankseg/error.hpp"
#include "rankseg/random.hpp"

namespace rankseg {

namespace {

int majority(std::span<const int> counts) {
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

/// Split quality sum_c L_c^2 / N_L + sum_c R_c^2 / N_R kept as an exact fraction so
/// that equal splits compare equal and ties resolve by index.
struct SplitScore {
    __int128 num = 0;
    __int128 den = 1;
    bool operator>(const SplitScore& o) const { return num * o.den > o.num * den; }
};

struct Candidate {
    bool valid = false;
    int feature = -1;
    double threshold = 0;
    SplitScore score;
};

class TreeGrower {
public:
    TreeGrower(const Eigen::MatrixXd& x, std::span<const int> y, int G, int mtry, int min_node_size)
        : x_(x), y_(y), G_(G), mtry_(mtry), min_node_size_(min_node_size) {}

    ClassificationTree grow(Rng& rng) {
        const auto n = static_cast<std::size_t>(x_.rows());
        ClassificationTree tree;
        tree.inbag.assign(n, 0);
        std::vector<int> sample(n);
        for (auto& s : sample) {
            s = static_cast<int>(uniform_index(rng, n));
            ++tree.inbag[static_cast<std::size_t>(s)];
        }

        struct Pending {
            int node;
            std::vector<int> cases;
        };
        std::vector<Pending> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, std::move(sample)});
        while (!stack.empty()) {
            Pending work = std::move(stack.back());
            stack.pop_back();
            std::vector<int> counts(static_cast<std::size_t>(G_), 0);
            for (int c : work.cases) ++counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(c)])];
            {
                auto& nd = tree.nodes[static_cast<std::size_t>(work.node)];
                nd.label = majority(counts);
                nd.size = static_cast<int>(work.cases.size());
            }
            const bool pure = std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) <= 1;
            if (pure || static_cast<int>(work.cases.size()) <= min_node_size_) continue;

            const Candidate best = find_split(work.cases, counts, rng);
            if (!best.valid) continue;

            std::vector<int> left, right;
            for (int c : work.cases) (x_(c, best.feature) <= best.threshold ? left : right).push_back(c);

            __int128 parent_sq = 0;
            for (int c : counts) parent_sq += static_cast<__int128>(c) * c;
            const double total = static_cast<double>(work.cases.size());
            const int l = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& nd = tree.nodes[static_cast<std::size_t>(work.node)];
            nd.feature = best.feature;
            nd.threshold = best.threshold;
            nd.left = l;
            nd.right = l + 1;
            nd.gain = static_cast<double>(best.score.num) / static_cast<double>(best.score.den) -
                      static_cast<double>(parent_sq) / total;
            stack.push_back({l + 1, std::move(right)});
            stack.push_back({l, std::move(left)});
        }
        return tree;
    }

private:
    Candidate find_split(const std::vector<int>& cases, const std::vector<int>& counts, Rng& rng) {
        const auto p = static_cast<int>(x_.cols());
        std::vector<int> order(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), 0);
        const int m = std::min(mtry_, p);
        for (int i = 0; i < m; ++i) {
            const auto j = static_cast<std::size_t>(i) + uniform_index(rng, static_cast<std::uint64_t>(p - i));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }
        std::sort(order.begin(), order.begin() + m);
        Candidate best;
        for (int i = 0; i < m; ++i) scan(order[static_cast<std::size_t>(i)], cases, counts, best);
        if (!best.valid && m < p) {
            std::sort(order.begin() + m, order.end());
            for (int i = m; i < p; ++i) scan(order[static_cast<std::size_t>(i)], cases, counts, best);
        }
        return best;
    }

    void scan(int feature, const std::vector<int>& cases, const std::vector<int>& counts, Candidate& best) {
        values_.clear();
        for (int c : cases) values_.emplace_back(x_(c, feature), y_[static_cast<std::size_t>(c)]);
        std::sort(values_.begin(), values_.end());
        if (values_.front().first == values_.back().first) return;

        std::vector<std::int64_t> left(static_cast<std::size_t>(G_), 0);
        std::vector<std::int64_t> right(counts.begin(), counts.end());
        __int128 left_sq = 0, right_sq = 0;
        for (auto r : right) right_sq += static_cast<__int128>(r) * r;
        const auto total = static_cast<std::int64_t>(values_.size());
        for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
            const auto cls = static_cast<std::size_t>(values_[i].second);
            left_sq += 2 * left[cls] + 1;
            right_sq -= 2 * right[cls] - 1;
            ++left[cls];
            --right[cls];
            if (values_[i].first == values_[i + 1].first) continue;
            const std::int64_t nl = static_cast<std::int64_t>(i) + 1;
            const std::int64_t nr = total - nl;
            SplitScore s{left_sq * nr + right_sq * nl, static_cast<__int128>(nl) * nr};
            if (!best.valid || s > best.score) {
                double t = 0.5 * (values_[i].first + values_[i + 1].first);
                if (!(t < values_[i + 1].first)) t = values_[i].first;
                best = Candidate{true, feature, t, s};
            }
        }
    }

    const Eigen::MatrixXd& x_;
    std::span<const int> y_;
    int G_;
    int mtry_;
    int min_node_size_;
    std::vector<std::pair<double, int>> values_;
};

template <typename Fn>
void parallel_for(int count, unsigned threads, Fn&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1))));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (int i = static_cast<int>(t); i < count; i += static_cast<int>(threads)) fn(i);
        });
}

}  // namespace

int ForestModel::resolved_mtry() const {
    if (params.mtry > 0) return std::min<int>(params.mtry, static_cast<int>(features));
    return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(features)))));
}

int ForestModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(x))];
    return majority(votes);
}

ForestModel fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, int G, const ForestParams& params,
                       std::uint64_t seed) {
    if (x.cols() == 0) throw InvalidArgument("fit_forest: design has no predictor columns");
    if (x.rows() < 10) throw InvalidArgument("fit_forest: at least 10 complete cases required");
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw InvalidArgument("fit_forest: one label per row required");
    if (G < 1) throw InvalidArgument("fit_forest: G must be positive");
    if (params.n_trees < 1) throw InvalidArgument("fit_forest: n_trees must be positive");
    std::vector<int> counts(static_cast<std::size_t>(G), 0);
    for (int c : y) {
        if (c < 0 || c >= G) throw InvalidArgument("fit_forest: label outside 0..G-1");
        ++counts[static_cast<std::size_t>(c)];
    }

    ForestModel model;
    model.params = params;
    model.seed = seed;
    model.classes = G;
    model.features = x.cols();
    model.observations = x.rows();
    if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) == 1)
        model.warnings.push_back("single class present; the forest is a constant classifier");

    const int mtry = model.resolved_mtry();
    model.trees.resize(static_cast<std::size_t>(params.n_trees));
    parallel_for(params.n_trees, params.threads, [&](int t) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        TreeGrower grower(x, y, G, mtry, params.min_node_size);
        model.trees[static_cast<std::size_t>(t)] = grower.grow(rng);
    });
    return model;
}

ForestModel fit_forest(const DesignMatrix& x, std::span<const int> y, int G, const ForestParams& params,
                       std::uint64_t seed) {
    return fit_forest(x.predictors(), y, G, params, seed);
}

OobResult oob_error(const ForestModel& model, const Eigen::MatrixXd& x, std::span<const int> y) {
    if (x.rows() != model.observations || static_cast<Eigen::Index>(y.size()) != x.rows())
        throw InvalidArgument("oob_error: data does not match the fitted model");
    OobResult r;
    const auto n = static_cast<std::size_t>(x.rows());
    r.predictions.assign(n, -1);
    std::size_t wrong = 0, used = 0;
    std::vector<int> votes(static_cast<std::size_t>(model.classes));
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(votes.begin(), votes.end(), 0);
        int total = 0;
        for (const auto& t : model.trees) {
            if (t.inbag[i] != 0) continue;
            ++votes[static_cast<std::size_t>(t.predict(x.row(static_cast<Eigen::Index>(i))))];
            ++total;
        }
        if (total == 0) {
            ++r.excluded;
            continue;
        }
        r.predictions[i] = majority(votes);
        ++used;
        if (r.predictions[i] != y[i]) ++wrong;
    }
    r.error = used ? static_cast<double>(wrong) / static_cast<double>(used) : 0.0;
    return r;
}

ImportanceReport permutation_importance(const ForestModel& model, const Eigen::MatrixXd& x, std::span<const int> y,
                                        const std::vector<ColumnGroup>& groups, std::uint64_t seed) {
    if (x.rows() != model.observations || static_cast<Eigen::Index>(y.size()) != x.rows())
        throw InvalidArgument("permutation_importance: data does not match the fitted model");
    for (const auto& g : groups)
        for (auto c : g.columns)
            if (c < 0 || c >= x.cols()) throw InvalidArgument("permutation_importance: group column out of range");

    const auto n_trees = static_cast<int>(model.trees.size());
    const auto n_groups = groups.size();
    // decrease(t, g): accuracy drop of tree t when group g is permuted; NaN when t has no OOB cases.
    Eigen::MatrixXd decrease(n_trees, static_cast<Eigen::Index>(n_groups));

    parallel_for(n_trees, model.params.threads, [&](int t) {
        const auto& tree = model.trees[static_cast<std::size_t>(t)];
        std::vector<Eigen::Index> oob;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (tree.inbag[static_cast<std::size_t>(i)] == 0) oob.push_back(i);
        if (oob.empty()) {
            decrease.row(t).setConstant(std::numeric_limits<double>::quiet_NaN());
            return;
        }
        int correct = 0;
        for (auto i : oob) correct += tree.predict(x.row(i)) == y[static_cast<std::size_t>(i)];
        Eigen::RowVectorXd row(x.cols());
        for (std::size_t g = 0; g < n_groups; ++g) {
            Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(g)}));
            std::vector<Eigen::Index> perm = oob;
            for (std::size_t k = perm.size(); k > 1; --k) std::swap(perm[k - 1], perm[uniform_index(rng, k)]);
            int permuted_correct = 0;
            for (std::size_t k = 0; k < oob.size(); ++k) {
                row = x.row(oob[k]);
                for (auto c : groups[g].columns) row(c) = x(perm[k], c);
                permuted_correct += tree.predict(row) == y[static_cast<std::size_t>(oob[k])];
            }
            decrease(t, static_cast<Eigen::Index>(g)) =
                static_cast<double>(correct - permuted_correct) / static_cast<double>(oob.size());
        }
    });

    ImportanceReport report;
    for (std::size_t g = 0; g < n_groups; ++g) {
        double sum = 0;
        int used = 0;
        for (int t = 0; t < n_trees; ++t) {
            const double v = decrease(t, static_cast<Eigen::Index>(g));
            if (std::isnan(v)) continue;
            sum += v;
            ++used;
        }
        report.variables.push_back(groups[g].variable);
        report.importance.push_back(used ? sum / used : 0.0);
    }
    return report;
}

ImportanceReport permutation_importance(const ForestModel& model, const DesignMatrix& x, std::span<const int> y,
                                        std::uint64_t seed) {
    std::vector<ColumnGroup> groups = x.groups();
    for (auto& g : groups)
        for (auto& c : g.columns) --c;
    return permutation_importance(model, x.predictors(), y, groups, seed);
}

double baseline_error(std::span<const int> y) {
    if (y.empty()) throw InvalidArgument("baseline_error: no observations");
    std::map<int, std::size_t> counts;
    std::size_t largest = 0;
    for (int c : y) largest = std::max(largest, ++counts[c]);
    return 1.0 - static_cast<double>(largest) / static_cast<double>(y.size());
}

}  // namespace rankseg
