#pragma once

// Rank-based fusion of feature-importance lists. Each method's importances
// become ranks, features missing from a method get that method's list
// length + 1, and the final order follows the mean rank.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "netforest/core.hpp"

namespace netforest {

struct RankedFeature {
  std::string feature;
  double importance = 0;
  std::size_t rank = 0;  ///< 1 = most important
};

struct ImportanceRanking {
  std::string method;
  std::vector<RankedFeature> entries;  ///< in rank order

  const RankedFeature* find(std::string_view feature) const {
    for (const auto& e : entries)
      if (e.feature == feature) return &e;
    return nullptr;
  }
};

/// Descending importance; equal importances fall back to feature name.
inline ImportanceRanking rank_importances(const std::map<std::string, double>& importances, std::string method) {
  if (importances.empty()) throw Error("cannot rank an empty importance list for method '" + method + "'");
  ImportanceRanking out{std::move(method), {}};
  for (const auto& [feature, value] : importances) {
    if (!std::isfinite(value)) throw Error("non-finite importance for feature '" + feature + "'");
    out.entries.push_back({feature, value, 0});
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.feature < b.feature;
  });
  for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i].rank = i + 1;
  return out;
}

struct FusedEntry {
  std::string feature;
  std::vector<std::size_t> method_ranks;              ///< rank, or penalty when absent
  std::vector<std::optional<double>> importances;     ///< nullopt when absent
  double mean_rank = 0;
  std::size_t final_rank = 0;
};

struct FusedRanking {
  std::vector<std::string> methods;
  std::vector<FusedEntry> entries;  ///< in final-rank order

  /// Columns: feature, then importance and rank per method, mean_rank,
  /// final_rank. Absent importances are left blank.
  std::string to_csv() const {
    std::ostringstream out;
    out << "feature";
    for (const auto& m : methods) out << ',' << m << "_importance," << m << "_rank";
    out << ",mean_rank,final_rank\n";
    for (const auto& e : entries) {
      out << e.feature;
      for (std::size_t m = 0; m < methods.size(); ++m) {
        out << ',';
        if (e.importances[m]) out << *e.importances[m];
        out << ',' << e.method_ranks[m];
      }
      out << ',' << e.mean_rank << ',' << e.final_rank << '\n';
    }
    return out.str();
  }
};

/// Orders `universe` by mean rank across methods. Ties go to the better
/// rank in the second method, then to the feature name.
inline FusedRanking fuse_ranks(std::span<const ImportanceRanking> rankings, std::span<const std::string> universe) {
  if (rankings.size() < 2) throw Error("rank fusion needs at least two rankings");
  if (universe.empty()) throw Error("rank fusion needs a non-empty feature universe");
  std::set<std::string, std::less<>> unique(universe.begin(), universe.end());
  if (unique.size() != universe.size()) throw Error("feature universe contains duplicates");

  FusedRanking out;
  for (const auto& r : rankings) out.methods.push_back(r.method);
  for (const auto& feature : universe) {
    FusedEntry e{feature, {}, {}, 0, 0};
    for (const auto& r : rankings) {
      const auto* hit = r.find(feature);
      e.method_ranks.push_back(hit ? hit->rank : r.entries.size() + 1);
      e.importances.push_back(hit ? std::optional<double>(hit->importance) : std::nullopt);
    }
    double sum = 0;
    for (auto rk : e.method_ranks) sum += static_cast<double>(rk);
    e.mean_rank = sum / static_cast<double>(rankings.size());
    out.entries.push_back(std::move(e));
  }
  std::sort(out.entries.begin(), out.entries.end(), [](const FusedEntry& a, const FusedEntry& b) {
    if (a.mean_rank != b.mean_rank) return a.mean_rank < b.mean_rank;
    if (a.method_ranks[1] != b.method_ranks[1]) return a.method_ranks[1] < b.method_ranks[1];
    return a.feature < b.feature;
  });
  for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i].final_rank = i + 1;
  return out;
}

/// Union of the features named by any ranking, sorted.
inline std::vector<std::string> ranking_universe(std::span<const ImportanceRanking> rankings) {
  std::set<std::string> all;
  for (const auto& r : rankings)
    for (const auto& e : r.entries) all.insert(e.feature);
  return {all.begin(), all.end()};
}

inline std::vector<std::string> select_top_k(const FusedRanking& fused, std::size_t k) {
  if (k < 1 || k > fused.entries.size())
    throw Error("top-k must lie in [1, " + std::to_string(fused.entries.size()) + "], got " + std::to_string(k));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(fused.entries[i].feature);
  return out;
}

/// "feature,importance" per line; a header line is skipped when its second
/// field is not numeric.
inline std::map<std::string, double> read_importances_csv(std::istream& in) {
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("importance CSV line " + std::to_string(line_no) + " lacks a comma");
    const std::string feature = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      if (line_no == 1) continue;
      throw Error("importance CSV line " + std::to_string(line_no) + ": bad value '" + value + "'");
    }
    if (!out.emplace(feature, v).second) throw Error("importance CSV lists '" + feature + "' twice");
  }
  return out;
}

}  // namespace netforest
