#include "rankseg/cluster.hpp"

#include <map>
#include <unordered_map>

namespace rankseg {

std::vector<int> cut_tree(const Dendrogram& tree, int G) {
    const Eigen::Index n = tree.n;
    if (G < 1 || G > n) throw InvalidArgument("cut_tree: G outside 1..n");
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(2 * n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    auto find = [&](Eigen::Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    const auto merges = static_cast<std::size_t>(n - G);
    for (std::size_t k = 0; k < merges; ++k) {
        const auto& m = tree.merges.at(k);
        const Eigen::Index node = n + static_cast<Eigen::Index>(k);
        parent[static_cast<std::size_t>(find(m.left))] = node;
        parent[static_cast<std::size_t>(find(m.right))] = node;
    }
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::unordered_map<Eigen::Index, int> root_label;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto root = find(i);
        auto [it, inserted] = root_label.emplace(root, static_cast<int>(root_label.size()));
        labels[static_cast<std::size_t>(i)] = it->second;
    }
    return labels;
}

double adjusted_rand(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw InvalidArgument("adjusted_rand: partitions differ in length");
    if (a.size() < 2) throw InvalidArgument("adjusted_rand: at least two observations required");
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cells[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto comb2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sum_rows = 0, sum_cols = 0;
    for (const auto& [k, v] : cells) index += comb2(v);
    for (const auto& [k, v] : rows) sum_rows += comb2(v);
    for (const auto& [k, v] : cols) sum_cols += comb2(v);
    const double total = comb2(static_cast<double>(a.size()));
    const double expected = sum_rows * sum_cols / total;
    const double maximum = (sum_rows + sum_cols) / 2;
    if (maximum == expected) {
        // Both partitions are trivial (one cluster, or all singletons).
        return index == maximum ? 1.0 : 0.0;
    }
    return (index - expected) / (maximum - expected);
}

ClusterSizeSummary cluster_size_summary(std::span<const int> assignment, int G) {
    if (G < 1) throw InvalidArgument("cluster_size_summary: G must be positive");
    ClusterSizeSummary s;
    s.sizes.assign(static_cast<std::size_t>(G), 0);
    for (int c : assignment) {
        if (c < 0 || c >= G) throw InvalidArgument("cluster_size_summary: label outside 0..G-1");
        ++s.sizes[static_cast<std::size_t>(c)];
    }
    const auto [mn, mx] = std::minmax_element(s.sizes.begin(), s.sizes.end());
    s.imbalance = *mn == 0 ? std::numeric_limits<double>::infinity()
                           : static_cast<double>(*mx) / static_cast<double>(*mn);
    return s;
}

nlohmann::json solution_to_json(const ClusterSolution& s, std::span<const std::string> ids) {
    if (ids.size() != s.assignment.size()) throw InvalidArgument("solution_to_json: one id per observation required");
    nlohmann::json j;
    j["G"] = s.G;
    j["objective"] = s.objective;
    j["swaps"] = s.swaps;
    j["medoids"] = nlohmann::json::array();
    for (auto m : s.medoids) j["medoids"].push_back(ids[static_cast<std::size_t>(m)]);
    j["assignment"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ids.size(); ++i)
        j["assignment"].push_back({{"id", ids[i]}, {"cluster", s.assignment[i] + 1}});
    return j;
}

ClusterSolution solution_from_json(const nlohmann::json& j, std::span<const std::string> ids) {
    std::unordered_map<std::string, Eigen::Index> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<Eigen::Index>(i));
    ClusterSolution s;
    s.G = j.at("G").get<int>();
    s.objective = j.at("objective").get<double>();
    s.swaps = j.value("swaps", 0);
    for (const auto& m : j.at("medoids")) {
        const auto it = index.find(m.get<std::string>());
        if (it == index.end()) throw DataError("solution: unknown medoid id '" + m.get<std::string>() + "'");
        s.medoids.push_back(it->second);
    }
    s.assignment.assign(ids.size(), -1);
    for (const auto& a : j.at("assignment")) {
        const auto it = index.find(a.at("id").get<std::string>());
        if (it == index.end()) throw DataError("solution: unknown id '" + a.at("id").get<std::string>() + "'");
        const int c = a.at("cluster").get<int>() - 1;
        if (c < 0 || c >= s.G) throw DataError("solution: cluster label outside 1..G");
        s.assignment[static_cast<std::size_t>(it->second)] = c;
    }
    for (int c : s.assignment)
        if (c < 0) throw DataError("solution: not every observation is assigned");
    return s;
}

}  // namespace rankseg
