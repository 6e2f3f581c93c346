#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wavecaster/catalog.hpp"

namespace wavecaster::adserve {

/// Impressions at which an ad drops out of genre-targeted selections.
inline constexpr std::uint64_t kImpressionCap = 10;
inline constexpr std::size_t kSlots = 5;

/// Ad ids eligible for a listener, in ad-store order.
using AdSelection = std::vector<std::string>;

/// Targets ads at a listener's liked genres.
///
/// With liked genres: ads whose target genre matches one of them and whose
/// impression count is below the cap. Without liked genres: every ad. When
/// the targeted pass comes back empty: every ad, cap ignored.
AdSelection select_ads(std::span<const Ad> ads, std::span<const std::string> liked_genres);

/// Five display-slot cursors, advanced by a stride of five per tick.
struct RotationState {
  std::array<std::size_t, kSlots> counters{0, 1, 2, 3, 4};
  bool fair = false;          // uniform round-robin instead of stride/reset
  std::size_t ticks = 0;
};

/// Returns the ad index shown in each slot for this tick, then advances.
/// A cursor that runs off the end of the selection resets to its slot's
/// base offset. Indices are always reduced into [0, length).
std::array<std::size_t, kSlots> rotation_step(RotationState& state, std::size_t length);

class UnknownLabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One survey cross-table: rows x genre columns of respondent counts.
struct AffinityTable {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<int>> counts;  // [row][column]
  // Published marginals, when the table carries them.
  std::vector<int> row_sums;
  std::vector<int> column_sums;
  int total = 0;

  std::size_t column_index(const std::string& label) const;
  std::size_t row_index(const std::string& label) const;
};

struct AffinityTables {
  AffinityTable products_by_genre;  // rows: product categories
  AffinityTable secondary_genre;    // rows: primary genre, columns: secondary genre

  static AffinityTables load(const std::filesystem::path& file);
};

using LabelCount = std::pair<std::string, int>;

/// Product categories for a genre column, by count descending, ties by name.
std::vector<LabelCount> rank_products(const AffinityTables& tables, const std::string& genre);

/// Most frequent secondary genre for a primary genre, ties by name.
LabelCount top_secondary_genre(const AffinityTables& tables, const std::string& primary);

}  // namespace wavecaster::adserve
