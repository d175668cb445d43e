#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "cellseg/image.hpp"

namespace cellseg {

// Grammar (whitespace ignored, case-sensitive):
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := number | func '(' var ')' | '(' expr ')' | '-' factor
//   func   := mean | median | min | max | sum | std | count
//   var    := R | G | B
// Numbers are unsigned decimals with an optional exponent ("0.5", ".25", "3e-2").

enum class Reduction { Mean, Median, Min, Max, Sum, Std, Count };
enum class Variable { R, G, B };
enum class BinaryOp { Add, Sub, Mul, Div };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct NumberLit {
    double value;
};
struct Call {
    Reduction fn;
    Variable var;
};
struct Negate {
    ExprPtr operand;
};
struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

struct ExprNode {
    std::variant<NumberLit, Call, Negate, Binary> node;
};

ExprPtr make_number(double v);
ExprPtr make_call(Reduction fn, Variable var);
ExprPtr make_negate(ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

/// Structural equality of two trees.
bool same_tree(const ExprNode& a, const ExprNode& b);

/// Parse failure; `position` is the 0-based character offset of the offending token.
class ExprError : public InvalidArgument {
public:
    ExprError(std::string message, std::size_t position, std::string source);
    std::size_t position() const { return position_; }
    const std::string& message() const { return message_; }
    /// Source line followed by a caret under the error position.
    std::string caret_diagnostic() const;

private:
    std::string message_;
    std::size_t position_;
    std::string source_;
};

struct EvalResult {
    double value = 0.0;
    bool division_by_zero = false;  // value is then +-inf or NaN
};

/// Parsed classification function f(R, G, B).
class ClassifierExpr {
public:
    explicit ClassifierExpr(ExprPtr root);

    const ExprNode& root() const { return *root_; }
    ExprPtr root_ptr() const { return root_; }

    /// Canonical text with the minimum parentheses needed to reparse to the same tree.
    std::string to_string() const;

    /// Evaluates over three equal-length, non-empty channel lists.
    EvalResult evaluate(std::span<const double> r, std::span<const double> g,
                        std::span<const double> b) const;

    bool operator==(const ClassifierExpr& other) const { return same_tree(*root_, *other.root_); }

private:
    ExprPtr root_;
};

ClassifierExpr parse_expr(std::string_view text);

inline EvalResult eval_expr(const ClassifierExpr& e, std::span<const double> r,
                            std::span<const double> g, std::span<const double> b) {
    return e.evaluate(r, g, b);
}

/// Reduction applied to one list; std is the sample deviation (0 for a single value).
double reduce(Reduction fn, std::span<const double> values);

std::string_view reduction_name(Reduction fn);

}  // namespace cellseg
