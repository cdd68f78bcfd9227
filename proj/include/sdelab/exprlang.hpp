#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sdelab/fields.hpp"

namespace sdelab::expr {

// Grammar, loosest to tightest binding:
//   comparison : additive (('<'|'<='|'>'|'>='|'==') additive)?
//   additive   : multiplicative (('+'|'-') multiplicative)*    left-assoc
//   multiplicative : unary (('*'|'/') unary)*                  left-assoc
//   unary      : '-' unary | power
//   power      : primary ('^' unary)?                          right-assoc
//   primary    : number | x '[' int ']' | norm '(' x ')'
//              | name '(' args ')' | '(' comparison ')'
// so '^' binds tighter than unary '-' ("-2^2" is -(2^2)), and "2^3^2"
// is 2^(3^2) = 512. Functions: abs, sqrt, exp, log, pow, min, max, step,
// and the conditional if(cond, a, b); norm(x) is the Euclidean norm of
// the evaluation point. step(t) is 1 for t >= 0, else 0.

enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class CmpOp { Lt, Le, Gt, Ge, Eq };
enum class Func { Abs, Sqrt, Exp, Log, Pow, Min, Max, Step };

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
    enum class Kind { Number, Coord, Norm, Neg, Binary, Compare, Call, If };
    Kind kind;
    double number = 0.0;  // Kind::Number
    int coord = 0;        // Kind::Coord
    BinOp bin{};          // Kind::Binary
    CmpOp cmp{};          // Kind::Compare
    Func func{};          // Kind::Call
    std::vector<NodePtr> args;
};

struct ExprAst {
    int dim = 0;
    NodePtr root;
};

ExprAst parse(std::string_view source, int dim);

// Canonical text form; parse(print(ast)) is structurally identical to ast.
std::string print(const ExprAst& ast);

bool structurally_equal(const Node& a, const Node& b);
bool structurally_equal(const ExprAst& a, const ExprAst& b);

ExprAst clone(const ExprAst& ast);

// Reference tree-walking evaluation. IEEE double, no fused operations.
double interpret(const ExprAst& ast, const Vec& x);

// Compile to a flat stack program. The compiled field performs the exact
// floating-point operations of interpret() in the same order, so both
// routes agree bitwise; only the untaken branch of if() is skipped.
ScalarField compile(const ExprAst& ast);

ScalarField compile(std::string_view source, int dim);

}  // namespace sdelab::expr
