#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace fetcpm {

/// Pulls 0/1 observations from whitespace- or newline-separated text.
/// Any other token raises ParseError naming its line.
class ObservationReader {
 public:
  explicit ObservationReader(std::istream& in) : in_(in) {}

  /// Next observation, or nothing at end of input.
  std::optional<int> next();
  /// 1-based line of the most recently read observation.
  std::uint64_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t pos_ = 0;
  std::uint64_t line_ = 0;
};

std::vector<int> read_observations(std::istream& in);

}  // namespace fetcpm
