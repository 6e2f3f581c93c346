#include "wavecaster/adserve.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace wavecaster::adserve {

AdSelection select_ads(std::span<const Ad> ads, std::span<const std::string> liked_genres) {
  AdSelection selection;
  if (!liked_genres.empty()) {
    for (const auto& ad : ads) {
      for (const auto& genre : liked_genres) {
        if (ad.target_genre == genre && ad.impressions < kImpressionCap) {
          selection.push_back(ad.id);
        }
      }
    }
  } else {
    for (const auto& ad : ads) selection.push_back(ad.id);
  }
  if (selection.empty()) {
    for (const auto& ad : ads) selection.push_back(ad.id);
  }
  return selection;
}

std::array<std::size_t, kSlots> rotation_step(RotationState& state, std::size_t length) {
  if (length == 0) throw std::invalid_argument("rotation over an empty selection");
  std::array<std::size_t, kSlots> shown{};
  if (state.fair) {
    for (std::size_t i = 0; i < kSlots; ++i) shown[i] = (state.ticks * kSlots + i) % length;
    ++state.ticks;
    return shown;
  }
  for (std::size_t i = 0; i < kSlots; ++i) shown[i] = state.counters[i] % length;
  for (std::size_t i = 0; i < kSlots; ++i) {
    state.counters[i] += kSlots;
    if (state.counters[i] >= length) state.counters[i] = i;
  }
  ++state.ticks;
  return shown;
}

std::size_t AffinityTable::column_index(const std::string& label) const {
  auto it = std::find(columns.begin(), columns.end(), label);
  if (it == columns.end()) throw UnknownLabelError("unknown genre: " + label);
  return static_cast<std::size_t>(it - columns.begin());
}

std::size_t AffinityTable::row_index(const std::string& label) const {
  auto it = std::find(rows.begin(), rows.end(), label);
  if (it == rows.end()) throw UnknownLabelError("unknown row: " + label);
  return static_cast<std::size_t>(it - rows.begin());
}

namespace {

AffinityTable table_from_json(const nlohmann::json& j) {
  AffinityTable t;
  t.title = j.value("title", "");
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    t.rows.push_back(row.at("label").get<std::string>());
    auto counts = row.at("counts").get<std::vector<int>>();
    if (counts.size() != t.columns.size()) {
      throw std::runtime_error("row '" + t.rows.back() + "' has wrong column count");
    }
    if (std::any_of(counts.begin(), counts.end(), [](int c) { return c < 0; })) {
      throw std::runtime_error("negative count in row '" + t.rows.back() + "'");
    }
    t.counts.push_back(std::move(counts));
    if (row.contains("sum")) t.row_sums.push_back(row.at("sum").get<int>());
  }
  if (j.contains("column_sums")) t.column_sums = j.at("column_sums").get<std::vector<int>>();
  t.total = j.value("total", 0);
  return t;
}

}  // namespace

AffinityTables AffinityTables::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  const auto doc = nlohmann::json::parse(in);
  return {table_from_json(doc.at("products_by_genre")),
          table_from_json(doc.at("secondary_genre"))};
}

std::vector<LabelCount> rank_products(const AffinityTables& tables, const std::string& genre) {
  const auto& t = tables.products_by_genre;
  const std::size_t col = t.column_index(genre);
  std::vector<LabelCount> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.emplace_back(t.rows[r], t.counts[r][col]);
  std::sort(out.begin(), out.end(), [](const LabelCount& a, const LabelCount& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

LabelCount top_secondary_genre(const AffinityTables& tables, const std::string& primary) {
  const auto& t = tables.secondary_genre;
  const auto& row = t.counts[t.row_index(primary)];
  LabelCount best{t.columns.front(), row.front()};
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > best.second || (row[c] == best.second && t.columns[c] < best.first)) {
      best = {t.columns[c], row[c]};
    }
  }
  return best;
}

}  // namespace wavecaster::adserve
