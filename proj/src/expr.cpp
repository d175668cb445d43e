#include "cellseg/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

#include "cellseg/io.hpp"

namespace cellseg {

namespace {

constexpr std::array<std::pair<std::string_view, Reduction>, 7> kReductions{{
    {"mean", Reduction::Mean},
    {"median", Reduction::Median},
    {"min", Reduction::Min},
    {"max", Reduction::Max},
    {"sum", Reduction::Sum},
    {"std", Reduction::Std},
    {"count", Reduction::Count},
}};

enum class Tok { Number, Ident, LParen, RParen, Plus, Minus, Star, Slash, End };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string_view text;
    double number = 0.0;
};

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) { advance(); }

    ExprPtr parse() {
        if (cur_.kind == Tok::End) fail("empty expression", cur_.pos);
        ExprPtr e = expr();
        if (cur_.kind != Tok::End) fail("unexpected '" + std::string(cur_.text) + "'", cur_.pos);
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg, std::size_t pos) const {
        throw ExprError(msg, pos, std::string(src_));
    }

    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= src_.size()) {
            cur_ = {Tok::End, start, {}};
            return;
        }
        const char c = src_[pos_];
        auto single = [&](Tok k) {
            ++pos_;
            cur_ = {k, start, src_.substr(start, 1)};
        };
        switch (c) {
            case '(': return single(Tok::LParen);
            case ')': return single(Tok::RParen);
            case '+': return single(Tok::Plus);
            case '-': return single(Tok::Minus);
            case '*': return single(Tok::Star);
            case '/': return single(Tok::Slash);
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = pos_;
            auto digits = [&] {
                std::size_t n = 0;
                while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) {
                    ++end;
                    ++n;
                }
                return n;
            };
            std::size_t mantissa = digits();
            if (end < src_.size() && src_[end] == '.') {
                ++end;
                mantissa += digits();
            }
            if (mantissa == 0) fail("malformed number", start);
            if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
                std::size_t save = end;
                ++end;
                if (end < src_.size() && (src_[end] == '+' || src_[end] == '-')) ++end;
                if (digits() == 0) end = save;
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + end, v);
            if (ec != std::errc() || ptr != src_.data() + end) fail("malformed number", start);
            pos_ = end;
            cur_ = {Tok::Number, start, src_.substr(start, end - start), v};
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_')) {
                ++end;
            }
            pos_ = end;
            cur_ = {Tok::Ident, start, src_.substr(start, end - start)};
            return;
        }
        fail(std::string("unexpected character '") + c + "'", start);
    }

    ExprPtr expr() {
        ExprPtr lhs = term();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            const BinaryOp op = cur_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
            advance();
            lhs = make_binary(op, lhs, term());
        }
        return lhs;
    }

    ExprPtr term() {
        ExprPtr lhs = factor();
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            const BinaryOp op = cur_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
            advance();
            lhs = make_binary(op, lhs, factor());
        }
        return lhs;
    }

    ExprPtr factor() {
        switch (cur_.kind) {
            case Tok::Number: {
                const double v = cur_.number;
                advance();
                return make_number(v);
            }
            case Tok::Minus:
                advance();
                return make_negate(factor());
            case Tok::LParen: {
                advance();
                ExprPtr e = expr();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: return call();
            case Tok::End: fail("unexpected end of expression", cur_.pos);
            default: fail("unexpected '" + std::string(cur_.text) + "'", cur_.pos);
        }
    }

    ExprPtr call() {
        const Token name = cur_;
        if (name.text == "R" || name.text == "G" || name.text == "B") {
            fail("bare variable '" + std::string(name.text) +
                     "' must be wrapped in a reduction such as mean(" + std::string(name.text) + ")",
                 name.pos);
        }
        auto it = std::find_if(kReductions.begin(), kReductions.end(),
                               [&](const auto& kv) { return kv.first == name.text; });
        if (it == kReductions.end()) fail("unknown function '" + std::string(name.text) + "'", name.pos);
        advance();
        expect(Tok::LParen, "'(' after " + std::string(name.text));
        if (cur_.kind != Tok::Ident) fail("expected variable R, G or B", cur_.pos);
        Variable var;
        if (cur_.text == "R") var = Variable::R;
        else if (cur_.text == "G") var = Variable::G;
        else if (cur_.text == "B") var = Variable::B;
        else fail("unknown variable '" + std::string(cur_.text) + "' (expected R, G or B)", cur_.pos);
        advance();
        expect(Tok::RParen, "')'");
        return make_call(it->second, var);
    }

    void expect(Tok kind, const std::string& what) {
        if (cur_.kind != kind) {
            fail("expected " + what + (cur_.kind == Tok::End ? " before end of expression"
                                                             : ", found '" + std::string(cur_.text) + "'"),
                 cur_.pos);
        }
        advance();
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token cur_{Tok::End, 0, {}};
};

int precedence(const ExprNode& n) {
    if (const auto* b = std::get_if<Binary>(&n.node)) {
        return (b->op == BinaryOp::Add || b->op == BinaryOp::Sub) ? 1 : 2;
    }
    return 3;
}

void print(const ExprNode& n, std::string& out) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, NumberLit>) {
                out += format_real(v.value);
            } else if constexpr (std::is_same_v<T, Call>) {
                out += reduction_name(v.fn);
                out += '(';
                out += v.var == Variable::R ? 'R' : v.var == Variable::G ? 'G' : 'B';
                out += ')';
            } else if constexpr (std::is_same_v<T, Negate>) {
                out += '-';
                const bool paren = precedence(*v.operand) < 3;
                if (paren) out += '(';
                print(*v.operand, out);
                if (paren) out += ')';
            } else {
                const int prec = precedence(n);
                const bool lparen = precedence(*v.lhs) < prec;
                const bool rparen = precedence(*v.rhs) <= prec;
                if (lparen) out += '(';
                print(*v.lhs, out);
                if (lparen) out += ')';
                static constexpr const char* kOps[] = {" + ", " - ", " * ", " / "};
                out += kOps[static_cast<int>(v.op)];
                if (rparen) out += '(';
                print(*v.rhs, out);
                if (rparen) out += ')';
            }
        },
        n.node);
}

struct Channels {
    std::span<const double> r, g, b;
};

EvalResult eval_node(const ExprNode& n, const Channels& ch) {
    return std::visit(
        [&](const auto& v) -> EvalResult {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, NumberLit>) {
                return {v.value, false};
            } else if constexpr (std::is_same_v<T, Call>) {
                const auto list = v.var == Variable::R ? ch.r : v.var == Variable::G ? ch.g : ch.b;
                return {reduce(v.fn, list), false};
            } else if constexpr (std::is_same_v<T, Negate>) {
                EvalResult e = eval_node(*v.operand, ch);
                e.value = -e.value;
                return e;
            } else {
                const EvalResult a = eval_node(*v.lhs, ch);
                const EvalResult b = eval_node(*v.rhs, ch);
                EvalResult out{0.0, a.division_by_zero || b.division_by_zero};
                switch (v.op) {
                    case BinaryOp::Add: out.value = a.value + b.value; break;
                    case BinaryOp::Sub: out.value = a.value - b.value; break;
                    case BinaryOp::Mul: out.value = a.value * b.value; break;
                    case BinaryOp::Div:
                        if (b.value == 0.0) out.division_by_zero = true;
                        out.value = a.value / b.value;
                        break;
                }
                return out;
            }
        },
        n.node);
}

}  // namespace

ExprPtr make_number(double v) { return std::make_shared<ExprNode>(ExprNode{NumberLit{v}}); }
ExprPtr make_call(Reduction fn, Variable var) { return std::make_shared<ExprNode>(ExprNode{Call{fn, var}}); }
ExprPtr make_negate(ExprPtr operand) {
    return std::make_shared<ExprNode>(ExprNode{Negate{std::move(operand)}});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<ExprNode>(ExprNode{Binary{op, std::move(lhs), std::move(rhs)}});
}

bool same_tree(const ExprNode& a, const ExprNode& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
            using T = std::decay_t<decltype(x)>;
            const auto& y = std::get<T>(b.node);
            if constexpr (std::is_same_v<T, NumberLit>) {
                return x.value == y.value;
            } else if constexpr (std::is_same_v<T, Call>) {
                return x.fn == y.fn && x.var == y.var;
            } else if constexpr (std::is_same_v<T, Negate>) {
                return same_tree(*x.operand, *y.operand);
            } else {
                return x.op == y.op && same_tree(*x.lhs, *y.lhs) && same_tree(*x.rhs, *y.rhs);
            }
        },
        a.node);
}

ExprError::ExprError(std::string message, std::size_t position, std::string source)
    : InvalidArgument(message + " at position " + std::to_string(position)),
      message_(std::move(message)),
      position_(position),
      source_(std::move(source)) {}

std::string ExprError::caret_diagnostic() const {
    return source_ + "\n" + std::string(position_, ' ') + "^ " + message_;
}

ClassifierExpr::ClassifierExpr(ExprPtr root) : root_(std::move(root)) {
    if (!root_) throw InvalidArgument("null expression");
}

std::string ClassifierExpr::to_string() const {
    std::string out;
    print(*root_, out);
    return out;
}

EvalResult ClassifierExpr::evaluate(std::span<const double> r, std::span<const double> g,
                                    std::span<const double> b) const {
    if (r.empty() || g.empty() || b.empty()) throw InvalidArgument("classification over empty pixel lists");
    if (r.size() != g.size() || r.size() != b.size()) {
        throw InvalidArgument("channel pixel lists differ in length");
    }
    return eval_node(*root_, Channels{r, g, b});
}

ClassifierExpr parse_expr(std::string_view text) { return ClassifierExpr(Parser(text).parse()); }

double reduce(Reduction fn, std::span<const double> v) {
    if (v.empty()) throw InvalidArgument("reduction over an empty list");
    const auto n = static_cast<double>(v.size());
    auto sum = [&] {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    };
    switch (fn) {
        case Reduction::Mean: return sum() / n;
        case Reduction::Sum: return sum();
        case Reduction::Count: return n;
        case Reduction::Min: return *std::min_element(v.begin(), v.end());
        case Reduction::Max: return *std::max_element(v.begin(), v.end());
        case Reduction::Median: {
            std::vector<double> s(v.begin(), v.end());
            std::sort(s.begin(), s.end());
            const std::size_t m = s.size() / 2;
            return s.size() % 2 == 1 ? s[m] : 0.5 * (s[m - 1] + s[m]);
        }
        case Reduction::Std: {
            if (v.size() == 1) return 0.0;
            const double mean = sum() / n;
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            return std::sqrt(ss / (n - 1.0));
        }
    }
    return 0.0;
}

std::string_view reduction_name(Reduction fn) {
    for (const auto& [name, r] : kReductions) {
        if (r == fn) return name;
    }
    return "?";
}

}  // namespace cellseg
