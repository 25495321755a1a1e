#include "sentinel/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "sentinel/common.hpp"

namespace sentinel {
namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view field, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) fail_at(path, line, "bad numeric field \"" + std::string(field) + "\"");
  if (!std::isfinite(v)) fail_at(path, line, "non-finite value \"" + std::string(field) + "\"");
  return v;
}

std::int64_t parse_int(std::string_view field, const std::string& path, std::size_t line) {
  std::int64_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    fail_at(path, line, "bad integer field \"" + std::string(field) + "\"");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

void write_telemetry_csv(const std::string& path, const Signal2D& x, const std::vector<std::uint8_t>* labels) {
  require_nonempty(x, "write_telemetry_csv");
  if (x.channels.size() != static_cast<std::size_t>(x.d))
    throw ValidationError("write_telemetry_csv: signal carries " + std::to_string(x.channels.size()) +
                          " channel names for " + std::to_string(x.d) + " channels");
  if (labels && static_cast<std::int64_t>(labels->size()) != x.T)
    throw ValidationError("write_telemetry_csv: got " + std::to_string(labels->size()) + " labels for " +
                          std::to_string(x.T) + " samples");

  std::string out;
  out.reserve(static_cast<std::size_t>(x.T) * (static_cast<std::size_t>(x.d) + 1) * 12 + 256);
  out += "t";
  for (const std::string& name : x.channels) {
    out += ',';
    out += name;
  }
  if (labels) out += ",Anomaly";
  out += '\n';
  for (std::int64_t t = 0; t < x.T; ++t) {
    out += std::to_string(t);
    for (int c = 0; c < x.d; ++c) {
      out += ',';
      append_double(out, x.at(t, c));
    }
    if (labels) {
      out += ',';
      out += (*labels)[static_cast<std::size_t>(t)] ? '1' : '0';
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

TelemetryCsv read_telemetry_csv(const std::string& path) {
  const std::string text = read_text(path);
  std::size_t pos = 0, line_no = 0;

  auto next_line = [&](std::string_view* line) {
    if (pos >= text.size()) return false;
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string::npos ? text.size() : nl;
    *line = std::string_view(text).substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    return true;
  };

  std::string_view header;
  if (!next_line(&header) || header.empty()) throw ValidationError(path + ": empty file");
  std::vector<std::string_view> head = split_fields(header);
  if (head.empty() || head[0] != "t") fail_at(path, 1, "header must start with column \"t\"");

  TelemetryCsv out;
  out.has_labels = head.size() > 1 && head.back() == "Anomaly";
  const std::size_t d = head.size() - 1 - (out.has_labels ? 1 : 0);
  if (d == 0) fail_at(path, 1, "header names no data channels");
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t c = 0; c < d; ++c) names.emplace_back(head[c + 1]);

  std::vector<double> data;
  std::string_view line;
  std::int64_t t = 0;
  while (next_line(&line)) {
    if (line.empty()) fail_at(path, line_no, "blank line inside the data section");
    const std::vector<std::string_view> f = split_fields(line);
    if (f.size() != head.size())
      fail_at(path, line_no, "expected " + std::to_string(head.size()) + " fields, got " + std::to_string(f.size()));
    if (parse_int(f[0], path, line_no) != t)
      fail_at(path, line_no, "row index " + std::string(f[0]) + " does not match row " + std::to_string(t));
    for (std::size_t c = 0; c < d; ++c) data.push_back(parse_double(f[c + 1], path, line_no));
    if (out.has_labels) {
      const std::int64_t lb = parse_int(f.back(), path, line_no);
      if (lb != 0 && lb != 1) fail_at(path, line_no, "Anomaly label must be 0 or 1");
      out.labels.push_back(static_cast<std::uint8_t>(lb));
    }
    ++t;
  }
  if (t == 0) throw ValidationError(path + ": no data rows");

  out.x = Signal2D(t, static_cast<int>(d));
  out.x.data = std::move(data);
  out.x.channels = std::move(names);
  return out;
}

}  // namespace sentinel
