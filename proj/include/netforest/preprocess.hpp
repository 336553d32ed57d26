#pragma once

// Flow records -> numeric Dataset: label encoding of categorical fields,
// integer IP addresses, UTC timestamp parts, and robust scaling.

#include <arpa/inet.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/flow.hpp"

namespace netforest {

enum class CategoricalColumn : std::size_t { protocol = 0, service, conn_state, history };
inline constexpr std::size_t kNumCategorical = 4;

inline const char* categorical_name(CategoricalColumn c) {
  static constexpr const char* names[] = {"protocol", "service", "conn_state", "history"};
  return names[static_cast<std::size_t>(c)];
}

/// Fixed column order of encoded flows.
inline const std::vector<std::string>& flow_feature_names() {
  static const std::vector<std::string> names = {
      "origin_host_numeric", "response_host_binary", "origin_port", "response_port", "protocol",
      "service", "conn_state", "history", "duration", "orig_bytes",
      "resp_bytes", "missed_bytes", "orig_pkts", "orig_ip_bytes", "resp_pkts",
      "resp_ip_bytes", "year", "month", "day", "hour"};
  return names;
}

/// Label encoder for the categorical flow columns. "unknown" is code 0;
/// the other categories seen at fit time follow in lexicographic order.
/// Immutable once constructed.
class EncoderVocab {
 public:
  using Table = std::map<std::string, std::int64_t, std::less<>>;

  EncoderVocab() { tables_.fill(Table{{kUnknownCategory, 0}}); }

  explicit EncoderVocab(std::array<Table, kNumCategorical> tables) : tables_(std::move(tables)) {
    for (auto& t : tables_) {
      auto it = t.find(kUnknownCategory);
      if (it == t.end() || it->second != 0) throw Error("vocabulary must map 'unknown' to code 0");
      std::vector<bool> used(t.size(), false);
      for (auto& [k, v] : t) {
        if (v < 0 || static_cast<std::size_t>(v) >= t.size() || used[static_cast<std::size_t>(v)])
          throw Error("vocabulary codes must be dense 0..k");
        used[static_cast<std::size_t>(v)] = true;
      }
    }
  }

  static EncoderVocab fit(std::span<const FlowRecord> records) {
    std::array<std::set<std::string, std::less<>>, kNumCategorical> seen;
    for (const auto& r : records) {
      const std::optional<std::string>* fields[] = {&r.protocol, &r.service, &r.conn_state, &r.history};
      for (std::size_t c = 0; c < kNumCategorical; ++c)
        seen[c].insert(fields[c]->value_or(kUnknownCategory));
    }
    std::array<Table, kNumCategorical> tables;
    for (std::size_t c = 0; c < kNumCategorical; ++c) {
      tables[c].emplace(kUnknownCategory, 0);
      std::int64_t next = 1;
      for (const auto& s : seen[c])
        if (s != kUnknownCategory) tables[c].emplace(s, next++);
    }
    return EncoderVocab(std::move(tables));
  }

  /// Unseen categories map to the "unknown" code.
  std::int64_t code(CategoricalColumn column, std::string_view value) const {
    const auto& t = tables_[static_cast<std::size_t>(column)];
    auto it = t.find(value);
    return it == t.end() ? 0 : it->second;
  }

  const Table& table(CategoricalColumn column) const { return tables_[static_cast<std::size_t>(column)]; }
  const std::array<Table, kNumCategorical>& tables() const { return tables_; }

  friend bool operator==(const EncoderVocab&, const EncoderVocab&) = default;

 private:
  std::array<Table, kNumCategorical> tables_;
};

/// Integer value of an IPv4 address; IPv6 addresses map to their 128-bit
/// value rounded to double.
inline double ip_to_number(const std::string& ip) {
  in_addr v4{};
  if (inet_pton(AF_INET, ip.c_str(), &v4) == 1) return static_cast<double>(ntohl(v4.s_addr));
  in6_addr v6{};
  if (inet_pton(AF_INET6, ip.c_str(), &v6) == 1) {
    double value = 0.0;
    for (unsigned char byte : v6.s6_addr) value = value * 256.0 + byte;
    return value;
  }
  throw Error("invalid IP address '" + ip + "'");
}

struct UtcParts {
  int year, month, day, hour;
};

inline UtcParts utc_parts(double epoch_seconds) {
  using namespace std::chrono;
  const auto secs = sys_seconds{seconds{static_cast<std::int64_t>(std::floor(epoch_seconds))}};
  const auto days = floor<std::chrono::days>(secs);
  const year_month_day ymd{days};
  const auto hour = duration_cast<hours>(secs - days).count();
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
          static_cast<int>(static_cast<unsigned>(ymd.day())), static_cast<int>(hour)};
}

/// Encodes imputed records. `origins` (optional) tags each row with its
/// index in the ingested log.
inline Dataset encode(std::span<const FlowRecord> records, const EncoderVocab& vocab,
                      std::vector<std::uint64_t> origins = {}) {
  const std::size_t d = flow_feature_names().size();
  std::vector<double> values;
  values.reserve(records.size() * d);
  std::vector<ClassLabel> labels;
  labels.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.fully_populated()) throw Error("record " + std::to_string(i) + " has missing fields; impute first");
    double orig_ip = 0, resp_ip = 0;
    try {
      orig_ip = ip_to_number(r.orig_host);
      resp_ip = ip_to_number(r.resp_host);
    } catch (const Error& e) {
      throw Error("row " + std::to_string(i) + ": " + e.what());
    }
    const auto t = utc_parts(r.ts);
    const double row[] = {orig_ip,
                          resp_ip,
                          static_cast<double>(r.orig_port),
                          static_cast<double>(r.resp_port),
                          static_cast<double>(vocab.code(CategoricalColumn::protocol, *r.protocol)),
                          static_cast<double>(vocab.code(CategoricalColumn::service, *r.service)),
                          static_cast<double>(vocab.code(CategoricalColumn::conn_state, *r.conn_state)),
                          static_cast<double>(vocab.code(CategoricalColumn::history, *r.history)),
                          *r.duration,
                          static_cast<double>(*r.orig_bytes),
                          static_cast<double>(*r.resp_bytes),
                          static_cast<double>(*r.missed_bytes),
                          static_cast<double>(*r.orig_pkts),
                          static_cast<double>(*r.orig_ip_bytes),
                          static_cast<double>(*r.resp_pkts),
                          static_cast<double>(*r.resp_ip_bytes),
                          static_cast<double>(t.year),
                          static_cast<double>(t.month),
                          static_cast<double>(t.day),
                          static_cast<double>(t.hour)};
    static_assert(std::size(row) == 20);
    values.insert(values.end(), std::begin(row), std::end(row));
    labels.push_back(r.label);
  }
  return Dataset(std::move(values), std::move(labels), flow_feature_names(), std::move(origins));
}

/// Quantile of sorted data by linear interpolation between order statistics.
inline double interpolated_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error("quantile of empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Per-column (x - median) / IQR. A zero IQR is stored as 1.
class RobustScaler {
 public:
  RobustScaler() = default;
  RobustScaler(std::vector<double> medians, std::vector<double> iqrs)
      : medians_(std::move(medians)), iqrs_(std::move(iqrs)), fitted_(true) {
    if (medians_.size() != iqrs_.size()) throw Error("scaler median/IQR length mismatch");
    for (double q : iqrs_)
      if (!(q > 0) || !std::isfinite(q)) throw Error("scaler IQR must be positive and finite");
  }

  bool fitted() const { return fitted_; }
  const std::vector<double>& medians() const { return medians_; }
  const std::vector<double>& iqrs() const { return iqrs_; }

  double apply(std::size_t column, double x) const { return (x - medians_[column]) / iqrs_[column]; }

  friend bool operator==(const RobustScaler&, const RobustScaler&) = default;

 private:
  std::vector<double> medians_;
  std::vector<double> iqrs_;
  bool fitted_ = false;
};

inline RobustScaler robust_fit(const Dataset& train) {
  if (train.empty()) throw Error("cannot fit a scaler on an empty dataset");
  std::vector<double> medians(train.cols()), iqrs(train.cols());
  std::vector<double> column(train.rows());
  for (std::size_t j = 0; j < train.cols(); ++j) {
    for (std::size_t i = 0; i < train.rows(); ++i) column[i] = train.at(i, j);
    std::sort(column.begin(), column.end());
    medians[j] = interpolated_quantile(column, 0.5);
    const double iqr = interpolated_quantile(column, 0.75) - interpolated_quantile(column, 0.25);
    iqrs[j] = iqr > 0 ? iqr : 1.0;
  }
  return RobustScaler(std::move(medians), std::move(iqrs));
}

inline Dataset robust_apply(const RobustScaler& scaler, const Dataset& ds) {
  if (!scaler.fitted()) throw Error("robust scaler applied before fit");
  if (scaler.medians().size() != ds.cols())
    throw Error("scaler fitted on " + std::to_string(scaler.medians().size()) + " columns, dataset has " +
                std::to_string(ds.cols()));
  std::vector<double> out(ds.values().begin(), ds.values().end());
  for (std::size_t i = 0; i < ds.rows(); ++i)
    for (std::size_t j = 0; j < ds.cols(); ++j) out[i * ds.cols() + j] = scaler.apply(j, ds.at(i, j));
  return ds.with_features(std::move(out), ds.feature_names());
}

/// Shortest round-trip decimal form.
inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// CSV with a header row: one column per feature, then 'label' (0/1).
inline void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  for (const auto& n : ds.feature_names()) out << n << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (double v : ds.row(i)) out << format_real(v) << ',';
    out << code(ds.label(i)) << '\n';
  }
}

}  // namespace netforest
