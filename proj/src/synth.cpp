#include "rankseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "rankseg/error.hpp"

namespace rankseg {

namespace {

RankMatrix random_ranks(int J, int K, Rng& rng) {
    RankMatrix r(J, K);
    std::vector<int> perm(static_cast<std::size_t>(K));
    for (int j = 0; j < J; ++j) {
        std::iota(perm.begin(), perm.end(), 1);
        for (int i = K - 1; i > 0; --i)
            std::swap(perm[static_cast<std::size_t>(i)],
                      perm[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
        for (int k = 0; k < K; ++k) r(j, k) = perm[static_cast<std::size_t>(k)];
    }
    return r;
}

void redraw_category(RankMatrix& r, int j, Rng& rng) {
    const RankMatrix fresh = random_ranks(1, static_cast<int>(r.cols()), rng);
    r.row(j) = fresh.row(0);
}

// log of the number of distinct profiles, (K!)^J
double log_profile_count(int J, int K) { return J * std::lgamma(K + 1.0); }

std::vector<std::size_t> cluster_counts(std::size_t n, int G, double imbalance) {
    std::vector<double> w(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) w[static_cast<std::size_t>(g)] = std::exp(-imbalance * g);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<std::size_t> counts(w.size());
    std::vector<std::pair<double, int>> rest;
    std::size_t used = 0;
    for (std::size_t g = 0; g < w.size(); ++g) {
        const double exact = static_cast<double>(n) * w[g] / total;
        counts[g] = static_cast<std::size_t>(std::floor(exact));
        used += counts[g];
        rest.emplace_back(-(exact - std::floor(exact)), static_cast<int>(g));
    }
    std::sort(rest.begin(), rest.end());
    for (std::size_t i = 0; used < n; ++i, ++used) ++counts[static_cast<std::size_t>(rest[i % rest.size()].second)];
    return counts;
}

// Offsets per cluster for one scalar effect direction.
std::vector<double> scoped_offsets(EffectScope scope, const std::vector<int>& super_of, int supers, Rng& rng) {
    const auto G = super_of.size();
    std::vector<double> out(G);
    if (scope == EffectScope::cluster) {
        for (auto& o : out) o = standard_normal(rng);
        return out;
    }
    std::vector<double> z(static_cast<std::size_t>(supers));
    if (scope == EffectScope::super_cluster) {
        for (auto& v : z) v = standard_normal(rng);
        for (std::size_t g = 0; g < G; ++g) out[g] = z[static_cast<std::size_t>(super_of[g])];
        return out;
    }
    for (auto& o : out) o = standard_normal(rng);
    std::vector<double> sum(static_cast<std::size_t>(supers), 0.0);
    std::vector<int> size(static_cast<std::size_t>(supers), 0);
    for (std::size_t g = 0; g < G; ++g) {
        sum[static_cast<std::size_t>(super_of[g])] += out[g];
        ++size[static_cast<std::size_t>(super_of[g])];
    }
    for (std::size_t g = 0; g < G; ++g) {
        const auto s = static_cast<std::size_t>(super_of[g]);
        out[g] -= sum[s] / size[s];
    }
    return out;
}

void check(const GeneratorConfig& c) {
    if (c.n == 0) throw InvalidArgument("generate: n must be positive");
    if (c.g_true < 1) throw InvalidArgument("generate: g_true must be positive");
    if (c.categories < 1 || c.brands < 2) throw InvalidArgument("generate: need at least one category and two brands");
    if (!(c.noise >= 0)) throw InvalidArgument("generate: noise must be >= 0");
    if (!c.branching.empty()) {
        long long leaves = 1;
        for (int b : c.branching) {
            if (b < 1) throw InvalidArgument("generate: branching factors must be positive");
            leaves *= b;
        }
        if (leaves != c.g_true) throw InvalidArgument("generate: branching must multiply to g_true");
        if (c.resampled.size() + 1 != c.branching.size())
            throw InvalidArgument("generate: one resampled count per level below the roots required");
        for (int r : c.resampled)
            if (r < 0 || r > c.categories) throw InvalidArgument("generate: resampled counts must lie in [0, categories]");
    }
    if (!(c.imbalance >= 0)) throw InvalidArgument("generate: imbalance must be >= 0");
    if (std::log(static_cast<double>(c.g_true)) > log_profile_count(c.categories, c.brands) + 1e-9)
        throw InvalidArgument("generate: g_true exceeds the number of distinct profiles");
    for (const auto& cov : c.covariates) {
        if (!(cov.effect >= 0)) throw InvalidArgument("generate: effect sizes must be >= 0 (" + cov.variable.name + ")");
        if (!(cov.sd >= 0)) throw InvalidArgument("generate: sd must be >= 0 (" + cov.variable.name + ")");
        if (cov.missing_rate < 0 || cov.missing_rate >= 1)
            throw InvalidArgument("generate: missing_rate must lie in [0,1) (" + cov.variable.name + ")");
        if (cov.variable.kind == VariableKind::categorical && !cov.level_weights.empty() &&
            cov.level_weights.size() != cov.variable.levels.size())
            throw InvalidArgument("generate: one weight per level required (" + cov.variable.name + ")");
    }
}

}  // namespace

void adjacent_transpositions(RankMatrix& ranks, Eigen::Index category, int moves, Rng& rng) {
    const auto K = ranks.cols();
    if (K < 2) return;
    for (int m = 0; m < moves; ++m) {
        const int r = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(K - 1))) + 1;
        Eigen::Index a = -1, b = -1;
        for (Eigen::Index k = 0; k < K; ++k) {
            if (ranks(category, k) == r) a = k;
            else if (ranks(category, k) == r + 1) b = k;
        }
        std::swap(ranks(category, a), ranks(category, b));
    }
}

GeneratorConfig GeneratorConfig::survey_like() {
    GeneratorConfig c;
    c.n = 343;
    c.g_true = 8;
    c.branching = {2, 2, 2};
    c.resampled = {2, 1};
    c.noise = 0.5;

    auto categorical = [](std::string name, std::vector<std::string> levels, std::vector<double> weights) {
        CovariateSpec s;
        s.variable = {std::move(name), VariableKind::categorical, VariableRole::sociodemographic, std::move(levels)};
        s.level_weights = std::move(weights);
        return s;
    };
    auto numeric = [](std::string name, VariableRole role, double mean, double sd, double lo, double hi, double step) {
        CovariateSpec s;
        s.variable = {std::move(name), VariableKind::numeric, role, {}};
        s.mean = mean;
        s.sd = sd;
        s.min = lo;
        s.max = hi;
        s.round_to = step;
        return s;
    };
    c.covariates = {
        categorical("gender", {"female", "male"}, {0.577, 0.423}),
        numeric("age", VariableRole::sociodemographic, 23.18, 3.48, 18, 34, 1),
        categorical("education", {"gcse", "alevels", "degree"}, {0.15, 0.44, 0.41}),
        numeric("income", VariableRole::sociodemographic, 2.5, 1.2, 1, 4, 1),
        categorical("dwelling", {"rent", "own", "family"}, {0.67, 0.13, 0.20}),
        categorical("relationship", {"single", "partner"}, {0.5, 0.5}),
    };
    for (const auto& name : {"extraversion", "agreeableness", "conscientiousness", "emotional_stability", "openness"})
        c.covariates.push_back(numeric(name, VariableRole::personality, 4.5, 1.2, 1, 7, 0.5));
    return c;
}

SyntheticData generate(const GeneratorConfig& config) {
    check(config);
    const int J = config.categories;
    const int K = config.brands;
    const int G = config.g_true;

    std::vector<CategorySpec> cats;
    static const char* const default_names[] = {"smartphone", "chocolate", "clothing", "coffee", "tv"};
    for (int j = 0; j < J; ++j) {
        CategorySpec c;
        c.name = J <= 5 ? default_names[j] : "cat" + std::to_string(j + 1);
        for (int k = 0; k < K; ++k) c.brands.push_back("b" + std::to_string(k + 1));
        cats.push_back(std::move(c));
    }

    SyntheticData out;
    {
        Rng rng(derive_seed(config.seed, {0}));
        std::vector<RankMatrix> protos;
        auto distinct = [&](auto&& draw) {
            RankMatrix r = draw();
            for (int attempt = 0; attempt < 1000; ++attempt) {
                if (std::none_of(protos.begin(), protos.end(), [&](const RankMatrix& p) { return p == r; })) break;
                r = draw();
            }
            return r;
        };
        if (config.branching.empty()) {
            for (int g = 0; g < G; ++g) protos.push_back(distinct([&] { return random_ranks(J, K, rng); }));
            out.super_of.assign(static_cast<std::size_t>(G), 0);
        } else {
            std::vector<RankMatrix> level;
            for (int b = 0; b < config.branching[0]; ++b) level.push_back(random_ranks(J, K, rng));
            std::vector<int> parent(level.size(), 0);
            for (std::size_t l = 1; l < config.branching.size(); ++l) {
                std::vector<RankMatrix> next;
                parent.clear();
                for (std::size_t p = 0; p < level.size(); ++p) {
                    for (int b = 0; b < config.branching[l]; ++b) {
                        protos = next;
                        next.push_back(distinct([&] {
                            RankMatrix r = level[p];
                            std::vector<int> order(static_cast<std::size_t>(J));
                            std::iota(order.begin(), order.end(), 0);
                            for (int i = 0; i < config.resampled[l - 1]; ++i) {
                                const auto pick = static_cast<std::size_t>(i) +
                                                  uniform_index(rng, static_cast<std::uint64_t>(J - i));
                                std::swap(order[static_cast<std::size_t>(i)], order[pick]);
                                redraw_category(r, order[static_cast<std::size_t>(i)], rng);
                            }
                            return r;
                        }));
                        parent.push_back(static_cast<int>(p));
                    }
                }
                level = std::move(next);
            }
            protos = std::move(level);
            out.super_of = parent;
        }
        for (auto& p : protos) out.prototypes.emplace_back(std::move(p));
    }
    const int supers = *std::max_element(out.super_of.begin(), out.super_of.end()) + 1;

    const auto counts = cluster_counts(config.n, G, config.imbalance);
    out.truth.reserve(config.n);
    for (int g = 0; g < G; ++g) out.truth.insert(out.truth.end(), counts[static_cast<std::size_t>(g)], g);
    {
        Rng rng(derive_seed(config.seed, {1}));
        for (std::size_t i = out.truth.size(); i > 1; --i) std::swap(out.truth[i - 1], out.truth[uniform_index(rng, i)]);
    }

    // per covariate: offsets per cluster (numeric) or per cluster and level (categorical)
    std::vector<std::vector<std::vector<double>>> offsets;
    for (std::size_t v = 0; v < config.covariates.size(); ++v) {
        const auto& cov = config.covariates[v];
        Rng rng(derive_seed(config.seed, {2, v}));
        const std::size_t dirs = cov.variable.kind == VariableKind::categorical ? cov.variable.levels.size() : 1;
        std::vector<std::vector<double>> per_dir;
        for (std::size_t l = 0; l < dirs; ++l) per_dir.push_back(scoped_offsets(cov.scope, out.super_of, supers, rng));
        offsets.push_back(std::move(per_dir));
    }

    std::vector<VariableSpec> vars;
    for (const auto& cov : config.covariates) vars.push_back(cov.variable);
    VariableSchema schema(vars, cats);

    std::vector<RespondentRecord> records(config.n);
    const int width = static_cast<int>(std::to_string(config.n).size());
    for (std::size_t i = 0; i < config.n; ++i) {
        Rng rng(derive_seed(config.seed, {3, i}));
        const auto g = static_cast<std::size_t>(out.truth[i]);
        RankMatrix r = out.prototypes[g].ranks();
        for (int j = 0; j < J; ++j) adjacent_transpositions(r, j, poisson(rng, config.noise), rng);

        auto& rec = records[i];
        std::string id = std::to_string(i + 1);
        rec.id = "r" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
        rec.profile = RankingProfile(std::move(r));
        for (std::size_t v = 0; v < config.covariates.size(); ++v) {
            const auto& cov = config.covariates[v];
            std::optional<double> value;
            if (cov.variable.kind == VariableKind::numeric) {
                double x = cov.mean + cov.sd * (cov.effect * offsets[v][0][g] + standard_normal(rng));
                if (cov.round_to > 0) x = cov.round_to * std::round(x / cov.round_to);
                value = std::clamp(x, cov.min, cov.max);
            } else {
                const auto L = cov.variable.levels.size();
                std::vector<double> p(L);
                for (std::size_t l = 0; l < L; ++l) {
                    const double w = cov.level_weights.empty() ? 1.0 : cov.level_weights[l];
                    p[l] = w * std::exp(cov.effect * offsets[v][l][g]);
                }
                double u = uniform01(rng) * std::accumulate(p.begin(), p.end(), 0.0);
                std::size_t l = 0;
                while (l + 1 < L && u >= p[l]) u -= p[l++];
                value = static_cast<double>(l);
            }
            if (cov.missing_rate > 0 && uniform01(rng) < cov.missing_rate) value.reset();
            rec.covariates.push_back(value);
        }
    }
    out.dataset = Dataset(std::move(schema), std::move(records));
    return out;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticData& data) {
    std::filesystem::create_directories(dir);
    write_survey_file(dir / "survey.csv", data.dataset);
    write_schema_file(dir / "schema.json", data.dataset.schema());
    std::ofstream truth(dir / "truth.csv");
    if (!truth) throw Error("cannot write " + (dir / "truth.csv").string());
    truth << "id,cluster\n";
    for (std::size_t i = 0; i < data.truth.size(); ++i)
        truth << data.dataset[i].id << ',' << data.truth[i] + 1 << '\n';
    nlohmann::json config = {{"data", "survey.csv"}, {"schema", "schema.json"}, {"out", "results"}};
    std::ofstream(dir / "config.json") << config.dump(2) << '\n';
}

}  // namespace rankseg
