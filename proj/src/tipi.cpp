#include "rankseg/tipi.hpp"

#include <fstream>
#include <istream>
#include <string>

#include "rankseg/csv.hpp"
#include "rankseg/error.hpp"

namespace rankseg {

TipiKeying TipiKeying::standard() {
    return TipiKeying{{1, 7, 3, 9, 5}, {6, 2, 8, 4, 10}};
}

TipiKeying TipiKeying::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("tipi keying: empty table");
    const auto header = csv::split_line(line);
    if (header.size() != 3 || header[0] != "dimension" || header[1] != "direct" || header[2] != "reversed")
        throw DataError("tipi keying: expected header dimension,direct,reversed");

    TipiKeying keying{};
    std::array<bool, 5> seen{};
    std::array<bool, 11> used{};
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        const auto f = csv::split_line(line);
        if (f.size() != 3) throw DataError("tipi keying: expected 3 fields in '" + line + "'");
        std::size_t dim = big_five_names.size();
        for (std::size_t d = 0; d < big_five_names.size(); ++d)
            if (f[0] == big_five_names[d]) dim = d;
        if (dim == big_five_names.size()) throw DataError("tipi keying: unknown dimension '" + f[0] + "'");
        if (seen[dim]) throw DataError("tipi keying: dimension '" + f[0] + "' listed twice");
        seen[dim] = true;
        const int direct = std::stoi(f[1]);
        const int reversed = std::stoi(f[2]);
        for (int item : {direct, reversed}) {
            if (item < 1 || item > 10 || used[item])
                throw DataError("tipi keying: item " + std::to_string(item) + " invalid or reused");
            used[item] = true;
        }
        keying.direct[dim] = direct;
        keying.reversed[dim] = reversed;
    }
    for (bool s : seen)
        if (!s) throw DataError("tipi keying: not all five dimensions are listed");
    return keying;
}

TipiKeying TipiKeying::from_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return from_csv(in);
}

std::array<double, 5> score_tipi(std::span<const int> responses, const TipiKeying& keying) {
    if (responses.size() != 10)
        throw InvalidArgument("score_tipi: expected 10 responses, got " + std::to_string(responses.size()));
    for (std::size_t i = 0; i < responses.size(); ++i)
        if (responses[i] < 1 || responses[i] > 7)
            throw InvalidArgument("score_tipi: response " + std::to_string(i + 1) + " outside [1,7]");

    std::array<double, 5> scores{};
    for (std::size_t d = 0; d < 5; ++d) {
        const int direct = responses[keying.direct[d] - 1];
        const int reversed = 8 - responses[keying.reversed[d] - 1];
        scores[d] = (direct + reversed) / 2.0;
    }
    return scores;
}

}  // namespace rankseg
