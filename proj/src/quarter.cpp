#include "ewm/quarter.hpp"

#include "ewm/types.hpp"

#include <charconv>

namespace ewm {

Quarter Quarter::parse(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r'))
    text.remove_suffix(1);
  const auto pos = text.find_first_of("Qq");
  if (pos == std::string_view::npos || pos + 2 != text.size())
    throw DataError("malformed quarter '" + std::string(text) + "', expected YYYYQn");
  int year = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + pos, year);
  if (ec != std::errc() || ptr != text.data() + pos)
    throw DataError("malformed quarter year in '" + std::string(text) + "'");
  const int q = text[pos + 1] - '0';
  if (q < 1 || q > 4) throw DataError("quarter must be 1..4 in '" + std::string(text) + "'");
  return Quarter(year, q);
}

std::string Quarter::str() const {
  return std::to_string(year()) + "Q" + std::to_string(quarter());
}

}  // namespace ewm
