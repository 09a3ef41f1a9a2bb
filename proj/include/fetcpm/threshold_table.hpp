#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fetcpm {

/// Thrown for malformed input files; the message names the offending line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThresholdEntry {
  std::uint64_t t;
  double h;
  bool operator==(const ThresholdEntry&) const = default;
};

/// Provenance of a calibrated threshold sequence.
struct ThresholdMetadata {
  double alpha = 0.002;  // per-step conditional false-alarm rate; ARL0 = 1 / alpha
  double lambda = 0.1;   // smoothing weight the sequence was calibrated for
  std::uint64_t n_streams = 0;
  std::uint64_t length = 0;
  std::optional<std::uint64_t> seed;  // absent for tables of external origin
  std::string generator;
  std::uint64_t t_min = 20;
  // Any further key=value pairs (e.g. source=...), kept for round-tripping.
  std::map<std::string, std::string> extra;

  bool operator==(const ThresholdMetadata&) const = default;
};

/// The sequence h_t a CPM detector compares its smoothed statistic against.
///
/// Entries are strictly increasing in t. Lookups between entries hold the
/// value of the nearest entry at or below t; beyond the horizon the last
/// value is reused.
class ThresholdTable {
 public:
  ThresholdTable(ThresholdMetadata metadata, std::vector<ThresholdEntry> entries);

  const ThresholdMetadata& metadata() const noexcept { return meta_; }
  const std::vector<ThresholdEntry>& entries() const noexcept { return entries_; }
  double alpha() const noexcept { return meta_.alpha; }
  double lambda() const noexcept { return meta_.lambda; }
  double arl0() const noexcept { return 1.0 / meta_.alpha; }
  std::uint64_t first_time() const noexcept { return entries_.front().t; }
  std::uint64_t horizon() const noexcept { return entries_.back().t; }

  /// h_t, or nothing when t precedes the first entry.
  std::optional<double> threshold_at(std::uint64_t t) const noexcept;

  bool operator==(const ThresholdTable&) const = default;

 private:
  ThresholdMetadata meta_;
  std::vector<ThresholdEntry> entries_;
};

/// Text format: `# key=value` metadata lines, then the header `t,h`, then one
/// `t,h` row per entry. Doubles are written in shortest round-trip form.
void write_threshold_table(std::ostream& out, const ThresholdTable& table);
void write_threshold_table(const std::filesystem::path& path, const ThresholdTable& table);
ThresholdTable read_threshold_table(std::istream& in);
ThresholdTable read_threshold_table(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace fetcpm
