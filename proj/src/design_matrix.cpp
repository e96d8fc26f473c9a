#include "rankseg/design_matrix.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/QR>

#include "rankseg/error.hpp"

namespace rankseg {

std::vector<Eigen::Index> dependent_columns(const Eigen::MatrixXd& x) {
    std::vector<Eigen::Index> dependent;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Eigen::MatrixXd trial(x.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
        for (std::size_t k = 0; k < kept.size(); ++k) trial.col(static_cast<Eigen::Index>(k)) = x.col(kept[k]);
        trial.col(trial.cols() - 1) = x.col(c);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
        qr.setThreshold(1e-10);
        if (qr.rank() == trial.cols()) kept.push_back(c);
        else dependent.push_back(c);
    }
    return dependent;
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names,
                           std::vector<ColumnGroup> groups, std::vector<std::size_t> rows)
    : values_(std::move(values)), names_(std::move(column_names)), groups_(std::move(groups)), rows_(std::move(rows)) {
    if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
        throw InvalidArgument("design matrix: one name per column required");
    if (static_cast<Eigen::Index>(rows_.size()) != values_.rows())
        throw InvalidArgument("design matrix: one dataset row index per row required");
    if (values_.cols() == 0) throw InvalidArgument("design matrix: no columns");

    std::vector<int> owner(static_cast<std::size_t>(values_.cols()), 0);
    for (const auto& g : groups_) {
        if (g.columns.empty()) throw InvalidArgument("design matrix: variable '" + g.variable + "' has no columns");
        for (auto c : g.columns) {
            if (c < 1 || c >= values_.cols()) throw InvalidArgument("design matrix: group column out of range");
            ++owner[static_cast<std::size_t>(c)];
        }
    }
    for (std::size_t c = 1; c < owner.size(); ++c)
        if (owner[c] != 1) throw InvalidArgument("design matrix: column '" + names_[c] + "' must belong to exactly one variable");

    if (values_.rows() > 0) {
        const auto dep = dependent_columns(values_);
        if (!dep.empty()) {
            std::vector<std::string> cols;
            std::string list;
            for (auto c : dep) {
                cols.push_back(names_[static_cast<std::size_t>(c)]);
                list += (list.empty() ? "" : ", ") + cols.back();
            }
            throw RankDeficientError("design matrix is rank deficient; dependent columns: " + list, std::move(cols));
        }
    }
}

DesignMatrix DesignMatrix::from_dataset(const Dataset& data, const DesignOptions& options) {
    const auto& schema = data.schema();
    const auto rows = data.complete_cases();
    const auto n = static_cast<Eigen::Index>(rows.size());

    std::vector<std::string> names{"(intercept)"};
    std::vector<ColumnGroup> groups;
    Eigen::Index m = 1;
    for (const auto& v : schema.variables()) {
        ColumnGroup g{v.name, v.role, {}};
        if (v.kind == VariableKind::numeric) {
            g.columns.push_back(m++);
            names.push_back(v.name);
        } else {
            for (std::size_t l = 1; l < v.levels.size(); ++l) {
                g.columns.push_back(m++);
                names.push_back(v.name + "=" + v.levels[l]);
            }
        }
        // A single-level categorical variable has no columns and carries no information.
        if (!g.columns.empty()) groups.push_back(std::move(g));
    }

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, m);
    x.col(0).setOnes();
    std::size_t gi = 0;
    for (std::size_t v = 0; v < schema.size(); ++v) {
        const auto& spec = schema[v];
        if (spec.kind == VariableKind::categorical && spec.levels.size() < 2) continue;
        const auto& g = groups[gi++];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double value = *data[rows[static_cast<std::size_t>(i)]].covariates[v];
            if (spec.kind == VariableKind::numeric) {
                x(i, g.columns.front()) = value;
            } else {
                const auto level = static_cast<std::size_t>(value);
                if (level > 0) x(i, g.columns[level - 1]) = 1.0;
            }
        }
        if (spec.kind == VariableKind::numeric && options.standardize_numeric && n > 1) {
            auto col = x.col(g.columns.front());
            const double mean = col.mean();
            const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(n - 1));
            if (sd > 0) col = (col.array() - mean) / sd;
        }
    }
    return DesignMatrix(std::move(x), std::move(names), std::move(groups), rows);
}

std::vector<std::size_t> DesignMatrix::groups_with_role(VariableRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < groups_.size(); ++g)
        if (groups_[g].role == role) out.push_back(g);
    return out;
}

DesignMatrix DesignMatrix::drop(std::span<const std::size_t> group_indices) const {
    std::vector<bool> dropped_group(groups_.size(), false);
    for (auto g : group_indices) {
        if (g >= groups_.size()) throw InvalidArgument("design matrix: group index out of range");
        dropped_group[g] = true;
    }
    std::vector<Eigen::Index> keep{0};
    std::vector<ColumnGroup> groups;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (dropped_group[g]) continue;
        ColumnGroup ng{groups_[g].variable, groups_[g].role, {}};
        for (auto c : groups_[g].columns) {
            ng.columns.push_back(static_cast<Eigen::Index>(keep.size()));
            keep.push_back(c);
        }
        groups.push_back(std::move(ng));
    }
    Eigen::MatrixXd x(values_.rows(), static_cast<Eigen::Index>(keep.size()));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        x.col(static_cast<Eigen::Index>(k)) = values_.col(keep[k]);
        names.push_back(names_[static_cast<std::size_t>(keep[k])]);
    }
    return DesignMatrix(std::move(x), std::move(names), std::move(groups), rows_);
}

std::vector<int> restrict_assignment(std::span<const int> assignment, std::span<const std::size_t> rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        if (r >= assignment.size()) throw InvalidArgument("restrict_assignment: row index out of range");
        out.push_back(assignment[r]);
    }
    return out;
}

}  // namespace rankseg
