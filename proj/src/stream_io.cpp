#include "fetcpm/stream_io.hpp"

#include "fetcpm/threshold_table.hpp"

namespace fetcpm {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

}  // namespace

std::optional<int> ObservationReader::next() {
  for (;;) {
    while (pos_ < buffer_.size() && is_space(buffer_[pos_])) ++pos_;
    if (pos_ < buffer_.size()) break;
    if (!std::getline(in_, buffer_)) return std::nullopt;
    ++line_;
    pos_ = 0;
  }
  const std::size_t start = pos_;
  while (pos_ < buffer_.size() && !is_space(buffer_[pos_])) ++pos_;
  const std::string_view token(buffer_.data() + start, pos_ - start);
  if (token == "0") return 0;
  if (token == "1") return 1;
  throw ParseError("input line " + std::to_string(line_) + ": expected 0 or 1, got '" +
                   std::string(token) + "'");
}

std::vector<int> read_observations(std::istream& in) {
  ObservationReader reader(in);
  std::vector<int> xs;
  while (const auto x = reader.next()) xs.push_back(*x);
  return xs;
}

}  // namespace fetcpm
