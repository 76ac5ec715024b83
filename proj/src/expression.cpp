#include "fbsde/expression.hpp"

#include "fbsde/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace fbsde {

namespace {
constexpr int kMaxStack = 64;
}

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, std::string_view allowed, Expression& out)
        : text_(text), allowed_(allowed), out_(out) {}

    void run() {
        skip_ws();
        if (pos_ >= text_.size()) fail("empty expression");
        expr();
        skip_ws();
        if (pos_ < text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
        if (out_.max_depth_ > kMaxStack) fail("expression nests too deeply");
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& what) const {
        raise(ErrorKind::Parse, "column " + std::to_string(pos_ + 1) + ": " + what +
                                    " in \"" + std::string(text_) + "\"");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    void emit(Op op, int var = 0, double value = 0.0) {
        out_.code_.push_back({op, var, value});
        switch (op) {
        case Op::Const:
        case Op::Var: ++depth_; break;
        case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: --depth_; break;
        default: break;
        }
        if (depth_ > out_.max_depth_) out_.max_depth_ = depth_;
    }

    void expr() {
        term();
        for (;;) {
            if (accept('+')) { term(); emit(Op::Add); }
            else if (accept('-')) { term(); emit(Op::Sub); }
            else break;
        }
    }

    void term() {
        unary();
        for (;;) {
            if (accept('*')) { unary(); emit(Op::Mul); }
            else if (accept('/')) { unary(); emit(Op::Div); }
            else break;
        }
    }

    void unary() {
        if (accept('-')) { unary(); emit(Op::Neg); return; }
        if (accept('+')) { unary(); return; }
        power();
    }

    void power() {
        primary();
        if (accept('^')) { unary(); emit(Op::Pow); }
    }

    void primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            expr();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            identifier();
            return;
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    void number() {
        std::string buf(text_.substr(pos_));
        char* end = nullptr;
        double v = std::strtod(buf.c_str(), &end);
        if (end == buf.c_str()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - buf.c_str());
        emit(Op::Const, 0, v);
    }

    void identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));

        skip_ws();
        bool call = pos_ < text_.size() && text_[pos_] == '(';
        if (!call) {
            if (name == "pi") { emit(Op::Const, 0, std::numbers::pi); return; }
            static const std::string vars = "txyz";
            if (name.size() == 1 && vars.find(name[0]) != std::string::npos) {
                if (allowed_.find(name[0]) == std::string_view::npos) {
                    pos_ = start;
                    fail("variable '" + name + "' is not allowed here");
                }
                int idx = static_cast<int>(vars.find(name[0]));
                out_.used_ |= 1u << idx;
                emit(Op::Var, idx);
                return;
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }

        ++pos_;
        if (name == "pow") {
            expr();
            expect(',');
            expr();
            expect(')');
            emit(Op::Pow);
            return;
        }
        Op op;
        if (name == "exp") op = Op::Exp;
        else if (name == "log") op = Op::Log;
        else if (name == "sqrt") op = Op::Sqrt;
        else if (name == "abs") op = Op::Abs;
        else if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "tanh") op = Op::Tanh;
        else {
            pos_ = start;
            fail("unknown function '" + name + "'");
        }
        expr();
        expect(')');
        emit(op);
    }

    std::string_view text_;
    std::string_view allowed_;
    Expression& out_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

Expression Expression::parse(std::string_view text, std::string_view allowed) {
    Expression e;
    e.source_ = std::string(text);
    ExpressionParser(text, allowed, e).run();
    return e;
}

double Expression::eval(double t, double x, double y, double z) const {
    const double vars[4] = {t, x, y, z};
    double st[kMaxStack];
    int sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Const: st[sp++] = in.value; break;
        case Op::Var: st[sp++] = vars[in.var]; break;
        case Op::Add: --sp; st[sp - 1] += st[sp]; break;
        case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
        case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
        case Op::Div: --sp; st[sp - 1] /= st[sp]; break;
        case Op::Pow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
        case Op::Log: st[sp - 1] = std::log(st[sp - 1]); break;
        case Op::Sqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
        case Op::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
        case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case Op::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
        }
    }
    return sp == 1 ? st[0] : 0.0;
}

} // namespace fbsde
