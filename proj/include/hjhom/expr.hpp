#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hjhom {

/// Variable slots understood by Expression. Layout of the slot array passed
/// to Expression::eval: x1, x2, y1, y2, p1, p2, r1, ..., rM.
namespace slot {
inline constexpr std::size_t x1 = 0;
inline constexpr std::size_t x2 = 1;
inline constexpr std::size_t y1 = 2;
inline constexpr std::size_t y2 = 3;
inline constexpr std::size_t p1 = 4;
inline constexpr std::size_t p2 = 5;
inline constexpr std::size_t r1 = 6;
inline constexpr std::size_t count(std::size_t m) { return r1 + m; }
}  // namespace slot

/// Small arithmetic expression compiled to postfix code.
///
/// Grammar: numbers, `pi`, `e`, variables x1 x2 y1 y2 p1 p2 r1..rM (and the
/// 1-D aliases x, y, p, r for x1, y1, p1, r1), binary + - * /, unary minus,
/// parentheses and the functions abs, min, max, sin, cos, exp.
class Expression {
 public:
  Expression() = default;

  /// Throws std::invalid_argument on syntax errors or unknown names.
  static Expression parse(std::string_view text);
  static Expression constant(double value);

  double eval(std::span<const double> slots) const;

  const std::string& text() const { return text_; }
  bool empty() const { return code_.empty(); }

  /// True if the expression reads the given slot.
  bool uses(std::size_t slot_index) const;
  /// True if the expression reads any slot in [first, last).
  bool uses_range(std::size_t first, std::size_t last) const;
  /// Largest slot index read plus one (0 for constants).
  std::size_t slots_required() const { return slots_required_; }

  bool is_constant() const { return slots_required_ == 0 && !code_.empty(); }

 private:
  enum class Op : unsigned char {
    Push, Load, Add, Sub, Mul, Div, Neg, Abs, Min, Max, Sin, Cos, Exp
  };
  struct Instr {
    Op op;
    std::size_t index = 0;
    double value = 0.0;
  };

  friend class ExprParser;

  std::string text_;
  std::vector<Instr> code_;
  std::size_t slots_required_ = 0;
  std::size_t max_depth_ = 0;
};

}  // namespace hjhom
