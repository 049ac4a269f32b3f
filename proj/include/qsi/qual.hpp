#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsi {

/// Raised when text input (model files, state files, tokens) cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a documented precondition of an operation is violated.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Sign of a real quantity: (-inf,0), 0, (0,inf).
enum class Sign : std::uint8_t { neg = 0, zero = 1, pos = 2 };

/// Direction of change; numerically identical to the sign of the derivative.
enum class Dir : std::uint8_t { dec = 0, std = 1, inc = 2 };

/// Small bitset over the three signs.
class SignSet {
 public:
  constexpr SignSet() = default;
  constexpr SignSet(std::initializer_list<Sign> signs) {
    for (auto s : signs) insert(s);
  }
  static constexpr SignSet all() { return SignSet{Sign::neg, Sign::zero, Sign::pos}; }

  constexpr void insert(Sign s) { bits_ |= bit(s); }
  [[nodiscard]] constexpr bool contains(Sign s) const { return (bits_ & bit(s)) != 0; }
  [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
  [[nodiscard]] constexpr std::uint8_t bits() const { return bits_; }
  constexpr SignSet& operator|=(SignSet o) {
    bits_ |= o.bits_;
    return *this;
  }
  friend constexpr bool operator==(SignSet, SignSet) = default;

 private:
  static constexpr std::uint8_t bit(Sign s) { return static_cast<std::uint8_t>(1U << static_cast<unsigned>(s)); }
  std::uint8_t bits_ = 0;
};

constexpr Sign negate(Sign s) { return static_cast<Sign>(2 - static_cast<int>(s)); }
constexpr Dir negate(Dir d) { return static_cast<Dir>(2 - static_cast<int>(d)); }
constexpr Sign as_sign(Dir d) { return static_cast<Sign>(static_cast<int>(d)); }
constexpr Dir as_dir(Sign s) { return static_cast<Dir>(static_cast<int>(s)); }

/// Possible signs of x + y given sign(x) = a and sign(y) = b.
constexpr SignSet sign_add(Sign a, Sign b) {
  if (a == Sign::zero) return SignSet{b};
  if (b == Sign::zero) return SignSet{a};
  if (a == b) return SignSet{a};
  return SignSet::all();
}

/// Set-lifted addition: every sign reachable by adding a member of each set.
constexpr SignSet sign_add(SignSet a, SignSet b) {
  SignSet out;
  for (int i = 0; i < 3; ++i) {
    if (!a.contains(static_cast<Sign>(i))) continue;
    for (int j = 0; j < 3; ++j) {
      if (b.contains(static_cast<Sign>(j))) out |= sign_add(static_cast<Sign>(i), static_cast<Sign>(j));
    }
  }
  return out;
}

/// Sign of x * y; always a single sign.
constexpr Sign sign_mul(Sign a, Sign b) {
  if (a == Sign::zero || b == Sign::zero) return Sign::zero;
  return a == b ? Sign::pos : Sign::neg;
}

/// A qualitative value <qmag, qdir>. Exactly nine values exist; `code()` enumerates them 0..8.
struct QualValue {
  Sign mag = Sign::zero;
  Dir dir = Dir::std;

  [[nodiscard]] constexpr int code() const { return 3 * static_cast<int>(mag) + static_cast<int>(dir); }
  static constexpr QualValue from_code(int c) {
    return QualValue{static_cast<Sign>(c / 3), static_cast<Dir>(c % 3)};
  }
  friend constexpr bool operator==(QualValue, QualValue) = default;
  friend constexpr auto operator<=>(QualValue a, QualValue b) { return a.code() <=> b.code(); }
};

inline constexpr int kQualValueCount = 9;

std::string_view to_string(Sign s);
std::string_view to_string(Dir d);
/// Token form `pos/inc`, `zero/std`, ...
std::string to_string(QualValue v);

Sign parse_sign(std::string_view text);
Dir parse_dir(std::string_view text);
QualValue parse_qual_value(std::string_view token);

}  // namespace qsi
