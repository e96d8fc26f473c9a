#include "rankseg/mlr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <boost/math/special_functions/gamma.hpp>

#include "rankseg/error.hpp"

namespace rankseg {

namespace {

/// Row-wise log-probabilities, n x G, computed with a stable log-sum-exp.
Eigen::MatrixXd log_probabilities(const Eigen::MatrixXd& x, const Eigen::MatrixXd& coefficients) {
    const Eigen::Index n = x.rows();
    const Eigen::Index G = coefficients.rows() + 1;
    Eigen::MatrixXd logits(n, G);
    logits.col(0).setZero();
    if (G > 1) logits.rightCols(G - 1) = x * coefficients.transpose();
    const Eigen::VectorXd top = logits.rowwise().maxCoeff();
    const Eigen::VectorXd lse =
        top.array() + (logits.colwise() - top).array().exp().rowwise().sum().log();
    return logits.colwise() - lse;
}

void check_labels(std::span<const int> y, Eigen::Index n, int G) {
    if (G < 2) throw InvalidArgument("mlr: G >= 2 required");
    if (static_cast<Eigen::Index>(y.size()) != n) throw InvalidArgument("mlr: one label per design row required");
    std::vector<std::size_t> counts(static_cast<std::size_t>(G), 0);
    for (int c : y) {
        if (c < 0 || c >= G) throw InvalidArgument("mlr: label outside 0..G-1");
        ++counts[static_cast<std::size_t>(c)];
    }
    for (int g = 0; g < G; ++g)
        if (counts[static_cast<std::size_t>(g)] == 0)
            throw InvalidArgument("mlr: cluster " + std::to_string(g + 1) + " has no complete cases");
}

}  // namespace

Eigen::MatrixXd mlr_probabilities(const Eigen::MatrixXd& x, const Eigen::MatrixXd& coefficients) {
    return log_probabilities(x, coefficients).array().exp();
}

double mlr_log_likelihood(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::MatrixXd& coefficients) {
    const Eigen::MatrixXd lp = log_probabilities(x, coefficients);
    double ll = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) ll += lp(i, y[static_cast<std::size_t>(i)]);
    return ll;
}

Eigen::MatrixXd mlr_gradient(const Eigen::MatrixXd& x, std::span<const int> y, const Eigen::MatrixXd& coefficients) {
    const Eigen::MatrixXd p = mlr_probabilities(x, coefficients);
    const Eigen::Index G = coefficients.rows() + 1;
    Eigen::MatrixXd residual = -p.rightCols(G - 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int c = y[static_cast<std::size_t>(i)];
        if (c > 0) residual(i, c - 1) += 1.0;
    }
    return residual.transpose() * x;
}

MlrFit fit_mlr(const DesignMatrix& design, std::span<const int> y, int G, const MlrOptions& options) {
    const Eigen::MatrixXd& x = design.values();
    const Eigen::Index n = x.rows();
    const Eigen::Index m = x.cols();
    check_labels(y, n, G);
    const Eigen::Index k = G - 1;
    const Eigen::Index dim = k * m;

    MlrFit fit;
    if (n <= dim)
        fit.warnings.push_back("only " + std::to_string(n) + " complete cases for " + std::to_string(dim) +
                               " coefficients");

    // Start from the intercept-only optimum.
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(k, m);
    std::vector<double> counts(static_cast<std::size_t>(G), 0.0);
    for (int c : y) counts[static_cast<std::size_t>(c)] += 1;
    for (Eigen::Index g = 1; g < G; ++g)
        beta(g - 1, 0) = std::log(counts[static_cast<std::size_t>(g)] / counts[0]);

    double ll = mlr_log_likelihood(x, y, beta);
    Eigen::MatrixXd grad = mlr_gradient(x, y, beta);

    for (int it = 1; it <= options.max_iterations; ++it) {
        fit.iterations = it;
        const Eigen::MatrixXd p = mlr_probabilities(x, beta);

        // Fisher information, blocks (g, h) = X' diag(p_g (delta_gh - p_h)) X.
        Eigen::MatrixXd info(dim, dim);
        for (Eigen::Index g = 0; g < k; ++g) {
            for (Eigen::Index h = g; h < k; ++h) {
                Eigen::VectorXd w = -p.col(g + 1).cwiseProduct(p.col(h + 1));
                if (g == h) w += p.col(g + 1);
                const Eigen::MatrixXd block = x.transpose() * w.asDiagonal() * x;
                info.block(g * m, h * m, m, m) = block;
                info.block(h * m, g * m, m, m) = block.transpose();
            }
        }
        Eigen::VectorXd score(dim);
        for (Eigen::Index g = 0; g < k; ++g) score.segment(g * m, m) = grad.row(g).transpose();

        const Eigen::VectorXd step_vec = info.ldlt().solve(score);
        if (!step_vec.allFinite()) {
            fit.warnings.push_back("singular information matrix at iteration " + std::to_string(it));
            break;
        }
        Eigen::MatrixXd step(k, m);
        for (Eigen::Index g = 0; g < k; ++g) step.row(g) = step_vec.segment(g * m, m).transpose();

        double t = 1.0;
        Eigen::MatrixXd candidate = beta + step;
        double ll_new = mlr_log_likelihood(x, y, candidate);
        int halvings = 0;
        while (!(ll_new >= ll - 1e-12 * (1.0 + std::abs(ll))) && halvings < 40) {
            t *= 0.5;
            candidate = beta + t * step;
            ll_new = mlr_log_likelihood(x, y, candidate);
            ++halvings;
        }
        if (!(ll_new >= ll - 1e-12 * (1.0 + std::abs(ll)))) {
            fit.warnings.push_back("line search failed at iteration " + std::to_string(it));
            break;
        }

        const double rel_change = std::abs(ll_new - ll) / std::max(std::abs(ll_new), 1.0);
        const double step_size = step.cwiseAbs().maxCoeff() / (1.0 + candidate.cwiseAbs().maxCoeff());
        beta = std::move(candidate);
        ll = ll_new;
        grad = mlr_gradient(x, y, beta);
        const double max_grad = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;

        if (rel_change < options.tol_loglik && max_grad < options.tol_gradient && step_size < options.tol_step) {
            // an optimum on the rounding floor of the likelihood is a separated fit
            const Eigen::MatrixXd lp = log_probabilities(x, beta);
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < n; ++i) best = std::max(best, lp(i, y[static_cast<std::size_t>(i)]));
            if (best > -1e-10) {
                fit.warnings.push_back("fitted probabilities numerically 0 or 1");
                break;
            }
            fit.converged = true;
            break;
        }
    }

    fit.coefficients = std::move(beta);
    fit.log_likelihood = ll;
    fit.deviance = -2.0 * ll;
    fit.max_gradient = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (!fit.converged)
        fit.warnings.push_back("no convergence after " + std::to_string(fit.iterations) +
                               " iterations; coefficients may be diverging (separation)");
    return fit;
}

double chi_square_sf(double x, int df) {
    if (df < 1) throw InvalidArgument("chi_square_sf: df must be >= 1");
    if (!(x >= 0.0)) throw InvalidArgument("chi_square_sf: x must be >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

DevianceTest lrt_groups(const DesignMatrix& x, std::span<const int> y, int G, const MlrFit& full,
                        std::span<const std::size_t> groups, std::string name, const MlrOptions& options) {
    if (groups.empty()) throw InvalidArgument("lrt: no variables to test for '" + name + "'");
    if (!full.converged) throw ConvergenceError("lrt: full model did not converge; refusing test '" + name + "'");
    std::size_t dropped = 0;
    for (auto g : groups) dropped += x.groups().at(g).columns.size();
    const DesignMatrix reduced = x.drop(groups);
    const MlrFit sub = fit_mlr(reduced, y, G, options);
    if (!sub.converged) throw ConvergenceError("lrt: reduced model did not converge; refusing test '" + name + "'");

    DevianceTest t;
    t.name = std::move(name);
    t.df = (G - 1) * static_cast<int>(dropped);
    t.deviance_diff = sub.deviance - full.deviance;
    t.p_value = chi_square_sf(std::max(t.deviance_diff, 0.0), t.df);
    return t;
}

DevianceTest lrt_block(const DesignMatrix& x, std::span<const int> y, int G, const MlrFit& full, VariableRole role,
                       const MlrOptions& options) {
    const auto groups = x.groups_with_role(role);
    return lrt_groups(x, y, G, full, groups, role == VariableRole::personality ? "personality" : "sociodemographic",
                      options);
}

DevianceTest lrt_block(const DesignMatrix& x, std::span<const int> y, int G, VariableRole role,
                       const MlrOptions& options) {
    return lrt_block(x, y, G, fit_mlr(x, y, G, options), role, options);
}

std::vector<DevianceTest> lrt_per_variable(const DesignMatrix& x, std::span<const int> y, int G, const MlrFit& full,
                                           const MlrOptions& options) {
    std::vector<DevianceTest> tests;
    for (std::size_t g = 0; g < x.groups().size(); ++g) {
        const std::size_t one[] = {g};
        tests.push_back(lrt_groups(x, y, G, full, one, x.groups()[g].variable, options));
    }
    return tests;
}

std::vector<DevianceTest> lrt_per_variable(const DesignMatrix& x, std::span<const int> y, int G,
                                           const MlrOptions& options) {
    return lrt_per_variable(x, y, G, fit_mlr(x, y, G, options), options);
}

}  // namespace rankseg
