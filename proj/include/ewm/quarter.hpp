#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace ewm {

/// Calendar quarter stored as a single integer index (year * 4 + quarter - 1),
/// so that quarter arithmetic is plain integer arithmetic.
class Quarter {
 public:
  constexpr Quarter() = default;
  constexpr Quarter(int year, int q) : index_(year * 4 + (q - 1)) {}

  static constexpr Quarter from_index(int index) {
    Quarter out;
    out.index_ = index;
    return out;
  }
  /// Parses "YYYYQn" (also accepts lowercase q). Throws DataError.
  static Quarter parse(std::string_view text);

  constexpr int index() const { return index_; }
  constexpr int year() const { return index_ >= 0 ? index_ / 4 : (index_ - 3) / 4; }
  constexpr int quarter() const { return index_ - year() * 4 + 1; }
  std::string str() const;

  constexpr Quarter operator+(int n) const { return from_index(index_ + n); }
  constexpr Quarter operator-(int n) const { return from_index(index_ - n); }
  constexpr int operator-(Quarter other) const { return index_ - other.index_; }
  constexpr auto operator<=>(const Quarter&) const = default;

 private:
  int index_ = 0;
};

}  // namespace ewm
