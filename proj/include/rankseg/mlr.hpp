#ifndef RANKSEG_MLR_HPP
#define RANKSEG_MLR_HPP

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rankseg/design_matrix.hpp"

namespace rankseg {

struct MlrOptions {
    int max_iterations = 200;
    double tol_loglik = 1e-10;  // relative change of the log-likelihood
    double tol_gradient = 1e-6; // max absolute score component
    double tol_step = 1e-4;     // max Newton step, relative to 1 + max |beta|
};

/// Multinomial logit fit with cluster 0 as the reference category.
struct MlrFit {
    Eigen::MatrixXd coefficients;  // (G-1) x m; row g-1 holds the log-odds of cluster g vs cluster 0
    double log_likelihood = 0;
    double deviance = 0;           // -2 log-likelihood
    bool converged = false;
    int iterations = 0;
    double max_gradient = 0;
    std::vector<std::string> warnings;
};

/// n x G matrix of fitted class probabilities.
Eigen::MatrixXd mlr_probabilities(const Eigen::MatrixXd& x, const Eigen::MatrixXd& coefficients);

double mlr_log_likelihood(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::MatrixXd& coefficients);

/// Score vector: (G-1) x m, same layout as the coefficients.
Eigen::MatrixXd mlr_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::MatrixXd& coefficients);

/// Unpenalised maximum likelihood by damped Newton-Raphson. Labels must lie in 0..G-1 and
/// every cluster must be present. A fit that does not meet all convergence criteria within
/// the iteration budget is returned with converged = false (typically separation).
MlrFit fit_mlr(const DesignMatrix& x, std::span<const int> y, int G, const MlrOptions& options = {});

/// Likelihood-ratio (deviance) test of a nested submodel.
struct DevianceTest {
    std::string name;
    int df = 0;
    double deviance_diff = 0;
    double p_value = 1;
};

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, int df);

/// Drops the given column groups and compares against the full fit. Throws
/// ConvergenceError when either fit is flagged.
DevianceTest lrt_groups(const DesignMatrix& x, std::span<const int> y, int G, const MlrFit& full,
                        std::span<const std::size_t> groups, std::string name, const MlrOptions& options = {});

/// Joint test of all personality columns.
DevianceTest lrt_block(const DesignMatrix& x, std::span<const int> y, int G, const MlrFit& full,
                       VariableRole role = VariableRole::personality, const MlrOptions& options = {});
DevianceTest lrt_block(const DesignMatrix& x, std::span<const int> y, int G,
                       VariableRole role = VariableRole::personality, const MlrOptions& options = {});

/// One test per original variable, all of its dummy columns dropped jointly.
std::vector<DevianceTest> lrt_per_variable(const DesignMatrix& x, std::span<const int> y, int G, const MlrFit& full,
                                           const MlrOptions& options = {});
std::vector<DevianceTest> lrt_per_variable(const DesignMatrix& x, std::span<const int> y, int G,
                                           const MlrOptions& options = {});

}  // namespace rankseg

#endif  // RANKSEG_MLR_HPP
