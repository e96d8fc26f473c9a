#ifndef RANKSEG_CLUSTER_HPP
#define RANKSEG_CLUSTER_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rankseg/error.hpp"
#include "rankseg/random.hpp"

namespace rankseg {

/// A medoid partition. Cluster g (0-based) is represented by observation medoids[g];
/// medoids are stored in ascending order.
struct ClusterSolution {
    int G = 0;
    std::vector<Eigen::Index> medoids;
    std::vector<int> assignment;  // 0-based cluster per observation
    double objective = 0;         // sum of distances to the assigned medoid
    int swaps = 0;                // SWAP moves applied

    bool operator==(const ClusterSolution&) const = default;
};

/// PAM solutions keyed by G over a contiguous range.
using SolutionPath = std::map<int, ClusterSolution>;

struct PamOptions {
    int restarts = 0;         // extra seeded random starts; 0 keeps the deterministic BUILD only
    std::uint64_t seed = 0;
    unsigned threads = 1;     // swap candidates evaluated in parallel
};

namespace detail {

template <typename Scalar>
Scalar swap_tolerance(Scalar objective) {
    if constexpr (std::is_integral_v<Scalar>) {
        return Scalar(0);
    } else {
        return Scalar(16) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), objective);
    }
}

/// Assigns every observation to its nearest medoid (ties to the lowest cluster index);
/// each medoid keeps its own cluster.
template <typename Derived>
ClusterSolution assign_to_medoids(const Eigen::MatrixBase<Derived>& d, std::vector<Eigen::Index> medoids) {
    std::sort(medoids.begin(), medoids.end());
    const Eigen::Index n = d.rows();
    ClusterSolution s;
    s.G = static_cast<int>(medoids.size());
    s.assignment.assign(static_cast<std::size_t>(n), 0);
    double objective = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int best = 0;
        for (int g = 0; g < s.G; ++g) {
            if (medoids[static_cast<std::size_t>(g)] == i) {
                best = g;
                break;
            }
            if (d(i, medoids[static_cast<std::size_t>(g)]) < d(i, medoids[static_cast<std::size_t>(best)])) best = g;
        }
        s.assignment[static_cast<std::size_t>(i)] = best;
        objective += static_cast<double>(d(i, medoids[static_cast<std::size_t>(best)]));
    }
    s.medoids = std::move(medoids);
    s.objective = objective;
    return s;
}

/// Deterministic greedy BUILD: the first medoid minimises the total distance, each
/// further medoid maximises the decrease of the objective. Ties go to the lowest index.
template <typename Derived>
std::vector<Eigen::Index> pam_build(const Eigen::MatrixBase<Derived>& d, int G) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = d.rows();
    std::vector<Eigen::Index> medoids;
    std::vector<bool> is_medoid(static_cast<std::size_t>(n), false);
    std::vector<Scalar> nearest(static_cast<std::size_t>(n));

    Eigen::Index first = 0;
    Scalar best_total{};
    for (Eigen::Index j = 0; j < n; ++j) {
        Scalar total(0);
        for (Eigen::Index i = 0; i < n; ++i) total += d(i, j);
        if (j == 0 || total < best_total) {
            best_total = total;
            first = j;
        }
    }
    medoids.push_back(first);
    is_medoid[static_cast<std::size_t>(first)] = true;
    for (Eigen::Index i = 0; i < n; ++i) nearest[static_cast<std::size_t>(i)] = d(i, first);

    while (static_cast<int>(medoids.size()) < G) {
        Eigen::Index pick = -1;
        Scalar best_gain(0);
        for (Eigen::Index c = 0; c < n; ++c) {
            if (is_medoid[static_cast<std::size_t>(c)]) continue;
            Scalar gain(0);
            for (Eigen::Index i = 0; i < n; ++i) {
                const Scalar diff = nearest[static_cast<std::size_t>(i)] - d(i, c);
                if (diff > Scalar(0)) gain += diff;
            }
            if (pick < 0 || gain > best_gain) {
                best_gain = gain;
                pick = c;
            }
        }
        medoids.push_back(pick);
        is_medoid[static_cast<std::size_t>(pick)] = true;
        for (Eigen::Index i = 0; i < n; ++i)
            nearest[static_cast<std::size_t>(i)] = std::min(nearest[static_cast<std::size_t>(i)], d(i, pick));
    }
    return medoids;
}

/// Best-improvement SWAP from the given medoids until no exchange strictly lowers the
/// objective. Among equally good exchanges the lowest (medoid, candidate) indices win.
template <typename Derived>
std::vector<Eigen::Index> pam_swap(const Eigen::MatrixBase<Derived>& d, std::vector<Eigen::Index> medoids,
                                   unsigned threads, int& swaps) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = d.rows();
    const auto G = medoids.size();
    std::vector<Scalar> dn(static_cast<std::size_t>(n)), ds(static_cast<std::size_t>(n));
    std::vector<std::size_t> slot(static_cast<std::size_t>(n));
    std::vector<bool> is_medoid(static_cast<std::size_t>(n));

    auto refresh = [&] {
        std::sort(medoids.begin(), medoids.end());
        std::fill(is_medoid.begin(), is_medoid.end(), false);
        for (auto m : medoids) is_medoid[static_cast<std::size_t>(m)] = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            std::size_t best = 0;
            for (std::size_t g = 1; g < G; ++g)
                if (d(i, medoids[g]) < d(i, medoids[best])) best = g;
            Scalar second = std::numeric_limits<Scalar>::max();
            for (std::size_t g = 0; g < G; ++g)
                if (g != best) second = std::min(second, d(i, medoids[g]));
            slot[u] = best;
            dn[u] = d(i, medoids[best]);
            ds[u] = second;
        }
    };

    struct Move {
        Scalar delta;
        Eigen::Index medoid;
        Eigen::Index candidate;
        std::size_t slot;
        bool better_than(const Move& o) const {
            return std::tie(delta, medoid, candidate) < std::tie(o.delta, o.medoid, o.candidate);
        }
    };

    auto evaluate = [&](unsigned worker, unsigned workers, Move& best) {
        bool have = false;
        for (Eigen::Index h = worker; h < n; h += workers) {
            if (is_medoid[static_cast<std::size_t>(h)]) continue;
            for (std::size_t g = 0; g < G; ++g) {
                Scalar delta(0);
                for (Eigen::Index j = 0; j < n; ++j) {
                    const auto u = static_cast<std::size_t>(j);
                    const Scalar djh = d(j, h);
                    if (slot[u] == g) {
                        delta += std::min(djh, ds[u]) - dn[u];
                    } else if (djh < dn[u]) {
                        delta += djh - dn[u];
                    }
                }
                Move m{delta, medoids[g], h, g};
                if (!have || m.better_than(best)) {
                    best = m;
                    have = true;
                }
            }
        }
        if (!have) best = Move{std::numeric_limits<Scalar>::max(), n, n, 0};
    };

    refresh();
    if (static_cast<Eigen::Index>(G) >= n) return medoids;
    threads = std::max(1u, threads);
    for (;;) {
        std::vector<Move> best(threads);
        if (threads == 1) {
            evaluate(0, 1, best[0]);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t) pool.emplace_back([&, t] { evaluate(t, threads, best[t]); });
        }
        Move top = best[0];
        for (unsigned t = 1; t < threads; ++t)
            if (best[t].better_than(top)) top = best[t];

        Scalar objective(0);
        for (Eigen::Index i = 0; i < n; ++i) objective += dn[static_cast<std::size_t>(i)];
        if (!(top.delta < -swap_tolerance(objective))) break;
        medoids[top.slot] = top.candidate;
        ++swaps;
        refresh();
    }
    return medoids;
}

}  // namespace detail

/// Partitioning around medoids: deterministic BUILD followed by best-improvement SWAP.
/// With options.restarts > 0, additional SWAP runs from seeded random medoid sets are
/// tried and the lowest objective wins (the BUILD start wins ties).
template <typename Derived>
ClusterSolution pam(const Eigen::MatrixBase<Derived>& d, int G, const PamOptions& options = {}) {
    const Eigen::Index n = d.rows();
    if (n == 0) throw InvalidArgument("pam: empty distance matrix");
    if (d.cols() != n) throw InvalidArgument("pam: distance matrix must be square");
    if (G < 2 || G > n)
        throw InvalidArgument("pam: G=" + std::to_string(G) + " outside 2.." + std::to_string(n));

    int swaps = 0;
    auto medoids = detail::pam_swap(d, detail::pam_build(d, G), options.threads, swaps);
    ClusterSolution best = detail::assign_to_medoids(d, std::move(medoids));
    best.swaps = swaps;

    for (int r = 0; r < options.restarts; ++r) {
        Rng rng(derive_seed(options.seed, {static_cast<std::uint64_t>(r)}));
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        for (int g = 0; g < G; ++g) {
            const auto pick = static_cast<std::size_t>(g) + uniform_index(rng, static_cast<std::uint64_t>(n - g));
            std::swap(all[static_cast<std::size_t>(g)], all[pick]);
        }
        std::vector<Eigen::Index> start(all.begin(), all.begin() + G);
        int s = 0;
        auto sol = detail::assign_to_medoids(d, detail::pam_swap(d, std::move(start), options.threads, s));
        sol.swaps = s;
        if (sol.objective < best.objective) best = std::move(sol);
    }
    return best;
}

/// Independent PAM runs for every G in [g_min, g_max].
template <typename Derived>
SolutionPath solution_path(const Eigen::MatrixBase<Derived>& d, int g_min = 2, int g_max = 10,
                           const PamOptions& options = {}) {
    if (g_min < 2 || g_min > g_max || g_max > d.rows())
        throw InvalidArgument("solution_path: need 2 <= g_min <= g_max <= n");
    SolutionPath path;
    for (int g = g_min; g <= g_max; ++g) path.emplace(g, pam(d, g, options));
    return path;
}

enum class Linkage { average, complete };

struct Merge {
    Eigen::Index left;   // cluster ids: 0..n-1 are observations, n+k is the k-th merge
    Eigen::Index right;
    double height;
    Eigen::Index size;
};

/// Agglomerative clustering; n-1 merges in order of increasing step.
struct Dendrogram {
    Eigen::Index n = 0;
    std::vector<Merge> merges;
};

template <typename Derived>
Dendrogram hierarchical_linkage(const Eigen::MatrixBase<Derived>& d, Linkage method) {
    const Eigen::Index n = d.rows();
    if (n == 0 || d.cols() != n) throw InvalidArgument("linkage: distance matrix must be square and nonempty");
    Eigen::MatrixXd dist = d.template cast<double>();
    std::vector<bool> active(static_cast<std::size_t>(n), true);
    std::vector<Eigen::Index> id(static_cast<std::size_t>(n)), size(static_cast<std::size_t>(n), 1);
    std::iota(id.begin(), id.end(), Eigen::Index{0});

    Dendrogram tree;
    tree.n = n;
    for (Eigen::Index step = 0; step + 1 < n; ++step) {
        Eigen::Index bi = -1, bj = -1;
        double best = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (bi < 0 || dist(i, j) < best) {
                    best = dist(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const auto ui = static_cast<std::size_t>(bi), uj = static_cast<std::size_t>(bj);
        tree.merges.push_back({id[ui], id[uj], best, size[ui] + size[uj]});
        for (Eigen::Index k = 0; k < n; ++k) {
            if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
            double v;
            if (method == Linkage::complete) {
                v = std::max(dist(k, bi), dist(k, bj));
            } else {
                v = (static_cast<double>(size[ui]) * dist(k, bi) + static_cast<double>(size[uj]) * dist(k, bj)) /
                    static_cast<double>(size[ui] + size[uj]);
            }
            dist(k, bi) = dist(bi, k) = v;
        }
        active[uj] = false;
        size[ui] += size[uj];
        id[ui] = n + step;
    }
    return tree;
}

/// Cuts a dendrogram into exactly G clusters. Labels are numbered by the smallest
/// observation index of each cluster.
std::vector<int> cut_tree(const Dendrogram& tree, int G);

/// Mean distance over all pairs of observations that share a cluster; 0 when every
/// cluster is a singleton.
template <typename Derived>
double average_within_distance(const Eigen::MatrixBase<Derived>& d, std::span<const int> assignment) {
    const auto n = static_cast<Eigen::Index>(assignment.size());
    double total = 0;
    std::size_t pairs = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (assignment[static_cast<std::size_t>(i)] == assignment[static_cast<std::size_t>(j)]) {
                total += static_cast<double>(d(i, j));
                ++pairs;
            }
    return pairs ? total / static_cast<double>(pairs) : 0.0;
}

struct LinkagePartition {
    int G = 0;
    std::vector<int> assignment;
    double average_within = 0;
};

template <typename Derived>
LinkagePartition linkage_cut(const Eigen::MatrixBase<Derived>& d, Linkage method, int G) {
    if (G < 2 || G > d.rows())
        throw InvalidArgument("linkage_cut: G=" + std::to_string(G) + " outside 2.." + std::to_string(d.rows()));
    LinkagePartition p;
    p.G = G;
    p.assignment = cut_tree(hierarchical_linkage(d, method), G);
    p.average_within = average_within_distance(d, p.assignment);
    return p;
}

/// Hubert-Arabie adjusted Rand index. Labels are arbitrary integers.
double adjusted_rand(std::span<const int> a, std::span<const int> b);

struct ClusterSizeSummary {
    std::vector<std::size_t> sizes;
    double imbalance = 1.0;  // largest / smallest size
};

ClusterSizeSummary cluster_size_summary(std::span<const int> assignment, int G);

nlohmann::json solution_to_json(const ClusterSolution& s, std::span<const std::string> ids);
ClusterSolution solution_from_json(const nlohmann::json& j, std::span<const std::string> ids);

}  // namespace rankseg

#endif  // RANKSEG_CLUSTER_HPP
