#include "rankseg/distance.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "rankseg/csv.hpp"

namespace rankseg {

CategorySubset CategorySubset::of(std::vector<Eigen::Index> indices) {
    if (indices.empty()) throw InvalidArgument("category subset must not be empty");
    std::set<Eigen::Index> uniq(indices.begin(), indices.end());
    if (uniq.size() != indices.size()) throw InvalidArgument("category subset lists a category twice");
    CategorySubset s;
    s.indices_ = std::move(indices);
    return s;
}

CategorySubset CategorySubset::parse(const std::string& spec, const std::vector<CategorySpec>& categories) {
    if (spec.empty() || spec == "combined" || spec == "all") return all();
    std::vector<Eigen::Index> idx;
    for (const auto& raw : csv::split_line(spec, ',')) {
        const auto name = csv::trim(raw);
        Eigen::Index found = -1;
        for (std::size_t i = 0; i < categories.size(); ++i)
            if (categories[i].name == name) found = static_cast<Eigen::Index>(i);
        if (found < 0) throw InvalidArgument("unknown category '" + name + "'");
        idx.push_back(found);
    }
    return of(std::move(idx));
}

std::vector<Eigen::Index> CategorySubset::resolve(Eigen::Index categories) const {
    if (indices_.empty()) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(categories));
        for (Eigen::Index j = 0; j < categories; ++j) all[static_cast<std::size_t>(j)] = j;
        return all;
    }
    for (Eigen::Index j : indices_)
        if (j < 0 || j >= categories)
            throw InvalidArgument("category index " + std::to_string(j) + " outside 0.." + std::to_string(categories - 1));
    return indices_;
}

std::string CategorySubset::label(const std::vector<CategorySpec>& categories) const {
    if (indices_.empty()) return "combined";
    std::string out;
    for (Eigen::Index j : indices_) {
        if (!out.empty()) out += ';';
        const auto u = static_cast<std::size_t>(j);
        out += u < categories.size() ? categories[u].name : std::to_string(j + 1);
    }
    return out;
}

double pearson_correlation(const Vector<double>& x, const Vector<double>& y) {
    if (x.size() != y.size()) throw InvalidArgument("pearson_correlation: length mismatch");
    if (x.size() < 2) throw InvalidArgument("pearson_correlation: at least two values required");
    const Vector<double> xc = x.array() - x.mean();
    const Vector<double> yc = y.array() - y.mean();
    const double sxx = xc.squaredNorm();
    const double syy = yc.squaredNorm();
    if (sxx == 0.0 || syy == 0.0) throw ZeroVarianceError("pearson_correlation: zero variance");
    return xc.dot(yc) / std::sqrt(sxx * syy);
}

namespace {

template <typename Scalar>
std::string format_value(Scalar v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

template <typename Scalar>
void write_distance_csv(std::ostream& out, const DistanceMatrix<Scalar>& d) {
    const auto& p = d.provenance();
    out << "# rankseg distance matrix v1\n# scores=";
    for (std::size_t i = 0; i < p.scores.size(); ++i) out << (i ? "," : "") << format_value(p.scores[i]);
    out << "\n# categories=" << p.categories << "\n# dataset_hash=" << p.dataset_hash << '\n';
    out << "id";
    for (const auto& id : d.ids()) out << ',' << csv::escape(id);
    out << '\n';
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        out << csv::escape(d.ids()[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < d.size(); ++j) out << ',' << format_value(d(i, j));
        out << '\n';
    }
}

template void write_distance_csv<double>(std::ostream&, const DistanceMatrix<double>&);
template void write_distance_csv<std::int64_t>(std::ostream&, const DistanceMatrix<std::int64_t>&);

DistanceMatrix<double> read_distance_csv(std::istream& in) {
    DistanceProvenance prov;
    prov.categories.clear();
    std::string line;
    std::vector<std::string> ids;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const auto key = csv::trim(line.substr(1, eq - 1));
            const auto value = line.substr(eq + 1);
            if (key == "scores") {
                for (const auto& f : csv::split_line(value)) prov.scores.push_back(std::stod(f));
            } else if (key == "categories") {
                prov.categories = value;
            } else if (key == "dataset_hash") {
                prov.dataset_hash = value;
            }
            continue;
        }
        auto header = csv::split_line(line);
        if (header.empty() || header[0] != "id") throw DataError("distance csv: expected 'id' header row");
        ids.assign(header.begin() + 1, header.end());
        break;
    }
    const auto n = static_cast<Eigen::Index>(ids.size());
    Matrix<double> m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw DataError("distance csv: truncated matrix");
        const auto f = csv::split_line(line);
        if (static_cast<Eigen::Index>(f.size()) != n + 1 || f[0] != ids[static_cast<std::size_t>(i)])
            throw DataError("distance csv: malformed row " + std::to_string(i + 1));
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& cell = f[static_cast<std::size_t>(j + 1)];
            double v = 0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw DataError("distance csv: invalid value '" + cell + "'");
            m(i, j) = v;
        }
    }
    if (n > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 0.0)
        throw DataError("distance csv: matrix is not symmetric");
    return DistanceMatrix<double>(std::move(m), std::move(ids), std::move(prov));
}

DistanceMatrix<double> read_distance_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open distance file " + path.string());
    return read_distance_csv(in);
}

}  // namespace rankseg
