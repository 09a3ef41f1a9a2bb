#include "fetcpm/threshold_table.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

namespace fetcpm {
namespace {

constexpr const char* kRequiredKeys[] = {"alpha",     "lambda",    "n_streams", "length",
                                         "seed",      "generator", "t_min"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// line 0 refers to the metadata block as a whole.
[[noreturn]] void fail(std::size_t line, const std::string& what) {
  if (line == 0) throw ParseError("threshold table metadata: " + what);
  throw ParseError("threshold table line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view text, std::size_t line, const char* what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) fail(line, std::string("bad ") + what + " '" + std::string(text) + "'");
  return value;
}

std::uint64_t parse_uint(std::string_view text, std::size_t line, const char* what) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) fail(line, std::string("bad ") + what + " '" + std::string(text) + "'");
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

ThresholdTable::ThresholdTable(ThresholdMetadata metadata, std::vector<ThresholdEntry> entries)
    : meta_(std::move(metadata)), entries_(std::move(entries)) {
  if (!(meta_.alpha > 0.0 && meta_.alpha <= 1.0)) {
    throw std::invalid_argument("ThresholdTable: alpha must lie in (0, 1]");
  }
  if (!(meta_.lambda >= 0.0 && meta_.lambda <= 1.0)) {
    throw std::invalid_argument("ThresholdTable: lambda must lie in [0, 1]");
  }
  if (entries_.empty()) throw std::invalid_argument("ThresholdTable: no entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!(e.h >= 0.0 && e.h <= 1.0)) {
      throw std::invalid_argument("ThresholdTable: h at t=" + std::to_string(e.t) +
                                  " outside [0, 1]");
    }
    if (i > 0 && e.t <= entries_[i - 1].t) {
      throw std::invalid_argument("ThresholdTable: t must be strictly increasing (t=" +
                                  std::to_string(e.t) + ")");
    }
  }
}

std::optional<double> ThresholdTable::threshold_at(std::uint64_t t) const noexcept {
  const auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                                   [](std::uint64_t v, const ThresholdEntry& e) { return v < e.t; });
  if (it == entries_.begin()) return std::nullopt;
  return std::prev(it)->h;
}

void write_threshold_table(std::ostream& out, const ThresholdTable& table) {
  const auto& m = table.metadata();
  out << "# alpha=" << format_double(m.alpha) << '\n';
  out << "# lambda=" << format_double(m.lambda) << '\n';
  out << "# n_streams=" << m.n_streams << '\n';
  out << "# length=" << m.length << '\n';
  out << "# seed=" << (m.seed ? std::to_string(*m.seed) : std::string("none")) << '\n';
  out << "# generator=" << m.generator << '\n';
  out << "# t_min=" << m.t_min << '\n';
  for (const auto& [key, value] : m.extra) out << "# " << key << '=' << value << '\n';
  out << "t,h\n";
  for (const auto& e : table.entries()) out << e.t << ',' << format_double(e.h) << '\n';
}

void write_threshold_table(const std::filesystem::path& path, const ThresholdTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_threshold_table(out, table);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ThresholdTable read_threshold_table(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::vector<ThresholdEntry> entries;
  bool header_seen = false;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (header_seen) fail(line, "metadata after the header");
      const std::string_view body = trim(text.substr(1));
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) fail(line, "expected key=value");
      const std::string key(trim(body.substr(0, eq)));
      if (kv.contains(key)) fail(line, "duplicate key '" + key + "'");
      kv[key] = std::string(trim(body.substr(eq + 1)));
      continue;
    }
    if (!header_seen) {
      if (text != "t,h") fail(line, "expected header 't,h'");
      header_seen = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) fail(line, "expected 't,h'");
    const auto t = parse_uint(trim(text.substr(0, comma)), line, "t");
    const double h = parse_double(trim(text.substr(comma + 1)), line, "h");
    if (!(h >= 0.0 && h <= 1.0)) fail(line, "h outside [0, 1]");
    if (!entries.empty() && t <= entries.back().t) fail(line, "t not strictly increasing");
    entries.push_back({t, h});
  }
  if (!header_seen) fail(line, "missing header 't,h'");
  if (entries.empty()) fail(line, "no threshold rows");

  for (const char* key : kRequiredKeys) {
    if (!kv.contains(key)) fail(0, std::string("missing metadata '") + key + "'");
  }
  ThresholdMetadata meta;
  meta.alpha = parse_double(kv.at("alpha"), 0, "alpha");
  meta.lambda = parse_double(kv.at("lambda"), 0, "lambda");
  meta.n_streams = parse_uint(kv.at("n_streams"), 0, "n_streams");
  meta.length = parse_uint(kv.at("length"), 0, "length");
  if (kv.at("seed") != "none") meta.seed = parse_uint(kv.at("seed"), 0, "seed");
  meta.generator = kv.at("generator");
  meta.t_min = parse_uint(kv.at("t_min"), 0, "t_min");
  for (const char* key : kRequiredKeys) kv.erase(key);
  meta.extra = std::move(kv);
  try {
    return ThresholdTable(std::move(meta), std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("threshold table: ") + e.what());
  }
}

ThresholdTable read_threshold_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open threshold table " + path.string());
  try {
    return read_threshold_table(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace fetcpm
