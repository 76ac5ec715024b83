// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace fbsde {

/// Compiled arithmetic expression over the variables t, x, y, z.
///
/// Grammar: numbers, the four operators, `^`, unary minus, parentheses,
/// the constant `pi` and the functions pow, exp, log, sqrt, abs, sin, cos, tanh.
class Expression {
public:
    enum Var { T = 0, X = 1, Y = 2, Z = 3 };

    Expression() = default;

    /// Throws Error(ErrorKind::Parse) with the offending column on failure.
    /// `allowed` lists the variable names the expression may reference.
    static Expression parse(std::string_view text, std::string_view allowed = "txyz");

    double eval(double t, double x, double y, double z) const;
    double eval(const std::array<double, 4>& v) const { return eval(v[0], v[1], v[2], v[3]); }

    const std::string& source() const noexcept { return source_; }
    bool uses(Var v) const noexcept { return (used_ >> v) & 1u; }

private:
    enum class Op : unsigned char {
        Const, Var, Add, Sub, Mul, Div, Pow, Neg,
        Exp, Log, Sqrt, Abs, Sin, Cos, Tanh,
    };
    struct Instr {
        Op op;
        int var = 0;
        double value = 0.0;
    };

    friend class ExpressionParser;

    std::string source_;
    std::vector<Instr> code_;
    unsigned used_ = 0;
    int max_depth_ = 0;
};

} // namespace fbsde
