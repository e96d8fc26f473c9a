#ifndef RANKSEG_TIPI_HPP
#define RANKSEG_TIPI_HPP

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>

namespace rankseg {

enum class BigFive { extraversion, agreeableness, conscientiousness, emotional_stability, openness };

inline constexpr std::array<const char*, 5> big_five_names = {
    "extraversion", "agreeableness", "conscientiousness", "emotional_stability", "openness"};

/// Item -> dimension map of the Ten Item Personality Inventory. Each dimension has
/// one direct item and one reverse-keyed item (1-based item numbers).
struct TipiKeying {
    std::array<int, 5> direct;
    std::array<int, 5> reversed;

    /// Standard published keying: E 1,6R; A 2R,7; C 3,8R; ES 4R,9; O 5,10R.
    static TipiKeying standard();

    /// Reads the CSV table shipped as data/tipi_keying.csv (dimension,direct,reversed).
    static TipiKeying from_csv(std::istream& in);
    static TipiKeying from_csv_file(const std::filesystem::path& path);

    bool operator==(const TipiKeying&) const = default;
};

/// Scores ten responses on a 1..7 scale into the five dimension averages, in the order
/// extraversion, agreeableness, conscientiousness, emotional stability, openness.
/// Reverse-keyed responses r are recoded as 8 - r before averaging.
std::array<double, 5> score_tipi(std::span<const int> responses,
                                 const TipiKeying& keying = TipiKeying::standard());

}  // namespace rankseg

#endif  // RANKSEG_TIPI_HPP
