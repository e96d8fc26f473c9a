#ifndef RANKSEG_DESIGN_MATRIX_HPP
#define RANKSEG_DESIGN_MATRIX_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rankseg/data_model.hpp"

namespace rankseg {

/// Encoded columns of one original explanatory variable.
struct ColumnGroup {
    std::string variable;
    VariableRole role = VariableRole::sociodemographic;
    std::vector<Eigen::Index> columns;
};

struct DesignOptions {
    bool standardize_numeric = false;
};

/// Complete-case design matrix: column 0 is the intercept, numeric variables enter as one
/// column, categorical variables as dummies against their first level. Full column rank
/// is enforced at construction.
class DesignMatrix {
public:
    DesignMatrix() = default;

    /// Throws RankDeficientError naming the columns that are linear combinations of
    /// earlier ones, InvalidArgument when the groups do not partition columns 1..m-1.
    DesignMatrix(Eigen::MatrixXd values, std::vector<std::string> column_names, std::vector<ColumnGroup> groups,
                 std::vector<std::size_t> rows);

    static DesignMatrix from_dataset(const Dataset& data, const DesignOptions& options = {});

    Eigen::Index n() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }
    const std::vector<ColumnGroup>& groups() const noexcept { return groups_; }

    /// Dataset record index of every row.
    const std::vector<std::size_t>& rows() const noexcept { return rows_; }

    std::vector<std::size_t> groups_with_role(VariableRole role) const;

    /// The same rows without the listed column groups.
    DesignMatrix drop(std::span<const std::size_t> group_indices) const;

    /// Columns 1..m-1 (no intercept), as used by tree models.
    Eigen::MatrixXd predictors() const { return values_.rightCols(values_.cols() - 1); }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> names_;
    std::vector<ColumnGroup> groups_;
    std::vector<std::size_t> rows_;
};

/// Indices of columns that do not increase the rank when appended left to right.
std::vector<Eigen::Index> dependent_columns(const Eigen::MatrixXd& x);

/// Picks `assignment[rows[i]]` for every design row.
std::vector<int> restrict_assignment(std::span<const int> assignment, std::span<const std::size_t> rows);

}  // namespace rankseg

#endif  // RANKSEG_DESIGN_MATRIX_HPP
