#include "hjhom/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hjhom {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expression run() {
    Expression out;
    out.text_ = std::string(text_);
    code_ = &out.code_;
    expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    if (out.code_.empty()) fail("empty expression");
    finalize(out);
    return out;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression '" + std::string(text_) + "': " + what +
                                " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void emit(Op op, std::size_t index = 0, double value = 0.0) {
    code_->push_back({op, index, value});
  }

  void expression() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit(Op::Add);
      } else if (accept('-')) {
        term();
        emit(Op::Sub);
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit(Op::Mul);
      } else if (accept('/')) {
        unary();
        emit(Op::Div);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      emit(Op::Neg);
    } else if (accept('+')) {
      unary();
    } else {
      primary();
    }
  }

  void primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      expression();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      identifier();
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  void number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      fail("bad number '" + token + "'");
    }
    if (used != token.size()) fail("bad number '" + token + "'");
    emit(Op::Push, 0, value);
  }

  void identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    static constexpr std::array<std::pair<std::string_view, Op>, 4> unary_fns{
        {{"abs", Op::Abs}, {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}}};
    for (const auto& [fn, op] : unary_fns) {
      if (name == fn) {
        expect('(');
        expression();
        expect(')');
        emit(op);
        return;
      }
    }
    if (name == "min" || name == "max") {
      expect('(');
      expression();
      expect(',');
      expression();
      expect(')');
      emit(name == "min" ? Op::Min : Op::Max);
      return;
    }
    if (name == "pi") {
      emit(Op::Push, 0, std::numbers::pi);
      return;
    }
    if (name == "e") {
      emit(Op::Push, 0, std::numbers::e);
      return;
    }
    emit(Op::Load, variable_slot(name));
  }

  std::size_t variable_slot(const std::string& name) const {
    if (name == "x" || name == "x1") return slot::x1;
    if (name == "x2") return slot::x2;
    if (name == "y" || name == "y1") return slot::y1;
    if (name == "y2") return slot::y2;
    if (name == "p" || name == "p1") return slot::p1;
    if (name == "p2") return slot::p2;
    if (name == "r") return slot::r1;
    if (name.size() >= 2 && name[0] == 'r' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      const int k = std::stoi(name.substr(1));
      if (k >= 1) return slot::r1 + static_cast<std::size_t>(k - 1);
    }
    fail("unknown identifier '" + name + "'");
  }

  static void finalize(Expression& out) {
    std::size_t depth = 0;
    for (const auto& ins : out.code_) {
      switch (ins.op) {
        case Op::Push:
          ++depth;
          break;
        case Op::Load:
          ++depth;
          out.slots_required_ = std::max(out.slots_required_, ins.index + 1);
          break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Min:
        case Op::Max:
          --depth;
          break;
        default:
          break;
      }
      out.max_depth_ = std::max(out.max_depth_, depth);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Expression::Instr>* code_ = nullptr;
};

Expression Expression::parse(std::string_view text) { return ExprParser(text).run(); }

Expression Expression::constant(double value) {
  Expression out;
  out.text_ = std::to_string(value);
  out.code_.push_back({Op::Push, 0, value});
  out.max_depth_ = 1;
  return out;
}

double Expression::eval(std::span<const double> slots) const {
  if (slots.size() < slots_required_)
    throw std::invalid_argument("expression '" + text_ + "' needs " +
                                std::to_string(slots_required_) + " variable slots");
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> inline_stack{};
  std::vector<double> heap_stack;
  double* stack = inline_stack.data();
  if (max_depth_ > kInline) {
    heap_stack.resize(max_depth_);
    stack = heap_stack.data();
  }
  std::size_t top = 0;
  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::Push:
        stack[top++] = ins.value;
        break;
      case Op::Load:
        stack[top++] = slots[ins.index];
        break;
      case Op::Add:
        --top;
        stack[top - 1] += stack[top];
        break;
      case Op::Sub:
        --top;
        stack[top - 1] -= stack[top];
        break;
      case Op::Mul:
        --top;
        stack[top - 1] *= stack[top];
        break;
      case Op::Div:
        --top;
        stack[top - 1] /= stack[top];
        break;
      case Op::Min:
        --top;
        stack[top - 1] = std::min(stack[top - 1], stack[top]);
        break;
      case Op::Max:
        --top;
        stack[top - 1] = std::max(stack[top - 1], stack[top]);
        break;
      case Op::Neg:
        stack[top - 1] = -stack[top - 1];
        break;
      case Op::Abs:
        stack[top - 1] = std::abs(stack[top - 1]);
        break;
      case Op::Sin:
        stack[top - 1] = std::sin(stack[top - 1]);
        break;
      case Op::Cos:
        stack[top - 1] = std::cos(stack[top - 1]);
        break;
      case Op::Exp:
        stack[top - 1] = std::exp(stack[top - 1]);
        break;
    }
  }
  return stack[0];
}

bool Expression::uses(std::size_t slot_index) const {
  return std::any_of(code_.begin(), code_.end(), [&](const Instr& ins) {
    return ins.op == Op::Load && ins.index == slot_index;
  });
}

bool Expression::uses_range(std::size_t first, std::size_t last) const {
  return std::any_of(code_.begin(), code_.end(), [&](const Instr& ins) {
    return ins.op == Op::Load && ins.index >= first && ins.index < last;
  });
}

}  // namespace hjhom
