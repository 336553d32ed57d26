#pragma once

// Zeek conn.log flow records: parsing of labeled TSV logs and imputation
// of missing fields.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netforest/core.hpp"

namespace netforest {

struct FlowRecord {
  double ts = 0.0;
  std::string orig_host;
  std::string resp_host;
  std::uint16_t orig_port = 0;
  std::uint16_t resp_port = 0;
  std::optional<std::string> protocol;
  std::optional<std::string> service;
  std::optional<std::string> conn_state;
  std::optional<std::string> history;
  std::optional<double> duration;
  std::optional<std::uint64_t> orig_bytes;
  std::optional<std::uint64_t> resp_bytes;
  std::optional<std::uint64_t> missed_bytes;
  std::optional<std::uint64_t> orig_pkts;
  std::optional<std::uint64_t> orig_ip_bytes;
  std::optional<std::uint64_t> resp_pkts;
  std::optional<std::uint64_t> resp_ip_bytes;
  ClassLabel label = ClassLabel::Benign;

  bool fully_populated() const {
    return protocol && service && conn_state && history && duration && orig_bytes && resp_bytes &&
           missed_bytes && orig_pkts && orig_ip_bytes && resp_pkts && resp_ip_bytes;
  }

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

struct SkippedLine {
  std::size_t line = 0;
  std::string reason;
};

struct ParseResult {
  std::vector<FlowRecord> records;
  std::vector<SkippedLine> skipped;
};

namespace detail {

inline bool is_missing(std::string_view f) { return f.empty() || f == "-" || f == "(empty)"; }

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

/// IoT-23 logs separate the trailing tunnel_parents/label/detailed-label
/// columns with spaces instead of tabs; fall back to whitespace splitting
/// when tab splitting does not produce the declared column count.
inline std::vector<std::string_view> split_fields(std::string_view line, std::size_t expected) {
  auto fields = split_tabs(line);
  if (fields.size() != expected) {
    auto ws = split_whitespace(line);
    if (ws.size() == expected) return ws;
  }
  return fields;
}

template <class T>
T parse_unsigned(std::string_view f, std::string_view column, T max) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size() || v > static_cast<std::uint64_t>(max))
    throw Error("unparseable " + std::string(column) + " '" + std::string(f) + "'");
  return static_cast<T>(v);
}

inline double parse_real(std::string_view f, std::string_view column) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(v) || v < 0)
    throw Error("unparseable " + std::string(column) + " '" + std::string(f) + "'");
  return v;
}

inline bool contains_benign(std::string_view s) {
  constexpr std::string_view needle = "benign";
  auto it = std::search(s.begin(), s.end(), needle.begin(), needle.end(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == b;
  });
  return it != s.end();
}

}  // namespace detail

/// Parses a labeled conn.log. A '#fields' header must precede data lines;
/// other '#' lines are ignored. Lines with bad ports, counts or field
/// counts are skipped and reported; a missing header is a format error.
inline ParseResult parse_conn_log(std::istream& in) {
  ParseResult result;
  std::map<std::string, std::size_t, std::less<>> column;
  std::size_t n_columns = 0;
  std::string line;
  std::size_t line_no = 0;

  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };
  std::optional<std::size_t> c_ts, c_oh, c_op, c_rh, c_rp, c_proto, c_service, c_duration, c_ob, c_rb,
      c_state, c_missed, c_history, c_opk, c_oipb, c_rpk, c_ripb, c_label;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view sv(line);
      if (sv.starts_with("#fields")) {
        column.clear();
        auto names = detail::split_whitespace(sv.substr(7));
        for (std::size_t i = 0; i < names.size(); ++i) column.emplace(std::string(names[i]), i);
        n_columns = names.size();
        for (const char* req : {"ts", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p", "label"})
          if (!column.contains(std::string_view(req)))
            throw Error("format error at line " + std::to_string(line_no) + ": #fields header lacks column '" +
                        req + "'");
        c_ts = find("ts");
        c_oh = find("id.orig_h");
        c_op = find("id.orig_p");
        c_rh = find("id.resp_h");
        c_rp = find("id.resp_p");
        c_proto = find("proto");
        c_service = find("service");
        c_duration = find("duration");
        c_ob = find("orig_bytes");
        c_rb = find("resp_bytes");
        c_state = find("conn_state");
        c_missed = find("missed_bytes");
        c_history = find("history");
        c_opk = find("orig_pkts");
        c_oipb = find("orig_ip_bytes");
        c_rpk = find("resp_pkts");
        c_ripb = find("resp_ip_bytes");
        c_label = find("label");
      }
      continue;
    }
    if (n_columns == 0)
      throw Error("format error at line " + std::to_string(line_no) + ": data line before #fields header");

    auto fields = detail::split_fields(line, n_columns);
    try {
      if (fields.size() != n_columns)
        throw Error("expected " + std::to_string(n_columns) + " fields, found " + std::to_string(fields.size()));
      auto text = [&](const std::optional<std::size_t>& c) -> std::optional<std::string> {
        if (!c || detail::is_missing(fields[*c])) return std::nullopt;
        return std::string(fields[*c]);
      };
      auto count = [&](const std::optional<std::size_t>& c, std::string_view name) -> std::optional<std::uint64_t> {
        if (!c || detail::is_missing(fields[*c])) return std::nullopt;
        return detail::parse_unsigned<std::uint64_t>(fields[*c], name, UINT64_MAX);
      };
      FlowRecord r;
      r.ts = detail::parse_real(fields[*c_ts], "ts");
      if (detail::is_missing(fields[*c_oh]) || detail::is_missing(fields[*c_rh])) throw Error("missing host address");
      r.orig_host = std::string(fields[*c_oh]);
      r.resp_host = std::string(fields[*c_rh]);
      r.orig_port = detail::parse_unsigned<std::uint16_t>(fields[*c_op], "id.orig_p", 65535);
      r.resp_port = detail::parse_unsigned<std::uint16_t>(fields[*c_rp], "id.resp_p", 65535);
      r.protocol = text(c_proto);
      r.service = text(c_service);
      r.conn_state = text(c_state);
      r.history = text(c_history);
      if (c_duration && !detail::is_missing(fields[*c_duration]))
        r.duration = detail::parse_real(fields[*c_duration], "duration");
      r.orig_bytes = count(c_ob, "orig_bytes");
      r.resp_bytes = count(c_rb, "resp_bytes");
      r.missed_bytes = count(c_missed, "missed_bytes");
      r.orig_pkts = count(c_opk, "orig_pkts");
      r.orig_ip_bytes = count(c_oipb, "orig_ip_bytes");
      r.resp_pkts = count(c_rpk, "resp_pkts");
      r.resp_ip_bytes = count(c_ripb, "resp_ip_bytes");
      auto label = fields[*c_label];
      if (detail::is_missing(label)) throw Error("missing label");
      r.label = detail::contains_benign(label) ? ClassLabel::Benign : ClassLabel::Malicious;
      result.records.push_back(std::move(r));
    } catch (const Error& e) {
      result.skipped.push_back({line_no, e.what()});
    }
  }
  if (n_columns == 0) throw Error("format error at line " + std::to_string(line_no) + ": no #fields header found");
  return result;
}

inline constexpr const char* kUnknownCategory = "unknown";

/// Missing categorical fields become "unknown", missing numeric fields 0.
inline FlowRecord impute(FlowRecord r) {
  for (auto* cat : {&r.protocol, &r.service, &r.conn_state, &r.history})
    if (!*cat) *cat = kUnknownCategory;
  if (!r.duration) r.duration = 0.0;
  for (auto* n : {&r.orig_bytes, &r.resp_bytes, &r.missed_bytes, &r.orig_pkts, &r.orig_ip_bytes, &r.resp_pkts,
                  &r.resp_ip_bytes})
    if (!*n) *n = 0;
  return r;
}

}  // namespace netforest
