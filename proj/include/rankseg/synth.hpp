#ifndef RANKSEG_SYNTH_HPP
#define RANKSEG_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "rankseg/data_model.hpp"
#include "rankseg/random.hpp"

namespace rankseg {

/// Which grouping of the generating clusters a covariate effect follows. A super-cluster
/// is the set of prototypes sharing a parent in the prototype tree.
enum class EffectScope {
    cluster,        // independent offset per cluster
    super_cluster,  // shared by all clusters of a super-cluster
    within_super,   // offsets centred within each super-cluster: invisible at the coarse level
};

struct CovariateSpec {
    VariableSpec variable;
    double effect = 0;  // 0 = independent of the clusters
    EffectScope scope = EffectScope::cluster;
    // numeric: value = mean + sd * (effect * offset + N(0,1)), clipped and optionally rounded
    double mean = 0;
    double sd = 1;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    double round_to = 0;
    // categorical: P(level l) proportional to weight_l * exp(effect * offset_l); empty = uniform
    std::vector<double> level_weights;
    double missing_rate = 0;
};

struct GeneratorConfig {
    std::size_t n = 300;
    int g_true = 3;
    int categories = 5;
    int brands = 5;
    double noise = 1.0;          // expected adjacent transpositions per category and respondent
    // Nested prototypes: branching {2, 2, 2} draws 2 uniform roots, gives each 2 children
    // and each child 2 leaves (g_true = 8). A child copies its parent and redraws
    // resampled[l - 1] of its categories at level l. Empty branching: g_true uniform prototypes.
    std::vector<int> branching;
    std::vector<int> resampled;
    double imbalance = 0;        // cluster weights proportional to exp(-imbalance * g)
    std::vector<CovariateSpec> covariates;
    std::uint64_t seed = 1;

    /// Paper-like survey layout: five categories of five brands, six socio-demographic
    /// variables and five personality scores, all independent of the clusters.
    static GeneratorConfig survey_like();
};

struct SyntheticData {
    Dataset dataset;
    std::vector<int> truth;  // generating cluster (0-based) per respondent
    std::vector<RankingProfile> prototypes;
    std::vector<int> super_of;  // parent node of every prototype (0 when flat)
};

/// Draws prototypes, assigns respondents, perturbs every category ranking by a
/// Poisson(noise) number of random adjacent transpositions and samples covariates.
/// Respondent i uses its own sub-seed, so the output depends only on the config.
SyntheticData generate(const GeneratorConfig& config);

/// Applies `moves` random adjacent transpositions (swap the brands holding ranks r and r+1)
/// to one category row of a rank matrix.
void adjacent_transpositions(RankMatrix& ranks, Eigen::Index category, int moves, Rng& rng);

/// Survey CSV, schema JSON, truth.csv (id,cluster with 1-based clusters) and a pipeline
/// config.json pointing at them.
void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data);

}  // namespace rankseg

#endif  // RANKSEG_SYNTH_HPP
