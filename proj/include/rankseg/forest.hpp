#ifndef RANKSEG_FOREST_HPP
#define RANKSEG_FOREST_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rankseg/design_matrix.hpp"

namespace rankseg {

struct ForestParams {
    int n_trees = 500;
    int mtry = 0;           // 0 selects floor(sqrt(columns))
    int min_node_size = 1;  // nodes of this size or smaller are not split
    unsigned threads = 1;
};

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0;   // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    int label = 0;          // majority in-bag class (leaf prediction)
    double gain = 0;        // weighted Gini decrease of the split
    int size = 0;           // in-bag cases reaching the node (with multiplicity)
};

struct ClassificationTree {
    std::vector<TreeNode> nodes;       // nodes[0] is the root
    std::vector<std::uint16_t> inbag;  // bootstrap multiplicity of every observation

    template <typename Row>
    int predict(const Row& x) const {
        int k = 0;
        while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(k)];
            k = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(k)].label;
    }
};

class ForestModel {
public:
    ForestParams params;
    std::uint64_t seed = 0;
    int classes = 0;
    Eigen::Index features = 0;
    Eigen::Index observations = 0;
    std::vector<ClassificationTree> trees;
    std::vector<std::string> warnings;

    int resolved_mtry() const;

    /// Majority vote over all trees, ties to the lowest class.
    int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Bagged CART classification trees with Gini splits and mtry random candidate columns
/// per node. If no sampled column can split a node, the remaining columns are tried.
/// Trees grow until pure or no split exists. Tree t draws from its own sub-seed of `seed`.
ForestModel fit_forest(const Eigen::MatrixXd& x, std::span<const int> y, int G, const ForestParams& params,
                       std::uint64_t seed);
ForestModel fit_forest(const DesignMatrix& x, std::span<const int> y, int G, const ForestParams& params,
                       std::uint64_t seed);

struct OobResult {
    double error = 0;
    std::size_t excluded = 0;       // observations that were in-bag for every tree
    std::vector<int> predictions;   // -1 for excluded observations
};

OobResult oob_error(const ForestModel& model, const Eigen::MatrixXd& x, std::span<const int> y);

struct ImportanceReport {
    std::vector<std::string> variables;
    std::vector<double> importance;  // mean decrease of per-tree OOB accuracy
};

/// Permutation importance. `groups` index columns of x; every group is permuted jointly
/// among each tree's OOB cases.
ImportanceReport permutation_importance(const ForestModel& model, const Eigen::MatrixXd& x, std::span<const int> y,
                                        const std::vector<ColumnGroup>& groups, std::uint64_t seed);

/// Groups from the design matrix, shifted to predictor columns (intercept removed).
ImportanceReport permutation_importance(const ForestModel& model, const DesignMatrix& x, std::span<const int> y,
                                        std::uint64_t seed);

/// Error of assigning everyone to the largest cluster.
double baseline_error(std::span<const int> y);

}  // namespace rankseg

#endif  // RANKSEG_FOREST_HPP
