#include <doctest.h>

#include <cmath>
#include <cstring>

#include "random_ast.hpp"
#include "sdelab/errors.hpp"
#include "sdelab/exprlang.hpp"

using namespace sdelab;
using namespace sdelab::expr;

namespace {

double eval(const char* src, double x0 = 0.0, double x1 = 0.0) {
    Vec x(2);
    x << x0, x1;
    return interpret(parse(src, 2), x);
}

bool same_bits(double a, double b) {
    return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_CASE("precedence and associativity goldens") {
    CHECK(eval("1+2*3") == 7.0);
    CHECK(eval("(1+2)*3") == 9.0);
    CHECK(eval("2^3^2") == 512.0);  // right-assoc: 2^(3^2)
    CHECK(eval("-2^2") == -4.0);    // ^ binds tighter than unary -
    CHECK(eval("2^-2") == 0.25);    // unary minus allowed in the exponent
    CHECK(eval("6-3-2") == 1.0);    // left-assoc
    CHECK(eval("12/6/2") == 1.0);
    CHECK(eval("2*3^2") == 18.0);
    CHECK(eval("1 - -2") == 3.0);
}

TEST_CASE("coordinates, norm, comparisons, functions") {
    CHECK(eval("x[0]", 5.0, -1.0) == 5.0);
    CHECK(eval("x[1]", 5.0, -1.0) == -1.0);
    CHECK(eval("norm(x)", 3.0, 4.0) == 5.0);
    CHECK(eval("1 < 2") == 1.0);
    CHECK(eval("1 > 2") == 0.0);
    CHECK(eval("2 >= 2") == 1.0);
    CHECK(eval("2 <= 1") == 0.0);
    CHECK(eval("3 == 3") == 1.0);
    CHECK(eval("abs(-2)") == 2.0);
    CHECK(eval("sqrt(9)") == 3.0);
    CHECK(eval("exp(0)") == 1.0);
    CHECK(eval("log(exp(1))") == 1.0);
    CHECK(eval("pow(2, 10)") == 1024.0);
    CHECK(eval("min(1, 2)") == 1.0);
    CHECK(eval("max(1, 2)") == 2.0);
    CHECK(eval("step(0)") == 1.0);
    CHECK(eval("step(-0.5)") == 0.0);
    CHECK(eval("if(x[0] >= 0, 10, 20)", 1.0) == 10.0);
    CHECK(eval("if(x[0] >= 0, 10, 20)", -1.0) == 20.0);
    CHECK(eval("norm(x) <= 1", 0.5, 0.5) == 1.0);
}

TEST_CASE("parse errors carry a source offset") {
    CHECK_THROWS_AS(parse("1 +", 2), SyntaxError);
    CHECK_THROWS_AS(parse("(1", 2), SyntaxError);
    CHECK_THROWS_AS(parse("nope(1)", 2), SyntaxError);
    CHECK_THROWS_AS(parse("", 2), SyntaxError);
    CHECK_THROWS_AS(parse("1 2", 2), SyntaxError);
    CHECK_THROWS_AS(parse("min(1)", 2), ArityError);
    CHECK_THROWS_AS(parse("sqrt(1, 2)", 2), ArityError);
    CHECK_THROWS_AS(parse("x[2]", 2), IndexOutOfRangeError);
    CHECK_THROWS_AS(parse("x[-1]", 2), SyntaxError);
    try {
        parse("1 + * 2", 2);
        CHECK(false);
    } catch (const SyntaxError& e) {
        CHECK(e.offset == 4);
    }
}

TEST_CASE("untaken if branch is not evaluated, taken bad branch throws") {
    CHECK(eval("if(1 < 2, 5, log(-1))") == 5.0);
    CHECK_THROWS_AS(eval("if(1 > 2, 5, log(-1))"), DomainError);
    CHECK_THROWS_AS(eval("1 / 0"), DomainError);
    CHECK_THROWS_AS(eval("sqrt(-4)"), DomainError);
    CHECK_THROWS_AS(eval("(-2) ^ 0.5"), DomainError);
    CHECK_THROWS_AS(eval("0 ^ -1"), DomainError);
}

TEST_CASE("print then parse reproduces the tree, 1000 random ASTs") {
    CounterRng rng(2024, 0);
    for (int i = 0; i < 1000; ++i) {
        const ExprAst ast = testgen::random_ast(rng, 3, 5);
        const std::string text = print(ast);
        const ExprAst back = parse(text, 3);
        CHECK(structurally_equal(ast, back));
        if (!structurally_equal(ast, back)) {
            MESSAGE("round trip failed for: ", text);
            break;
        }
    }
}

TEST_CASE("interpreter and compiled program agree bitwise") {
    CounterRng rng(77, 1);
    Vec x(3);
    int finite_seen = 0;
    for (int i = 0; i < 300; ++i) {
        const ExprAst ast = testgen::random_ast(rng, 3, 4);
        const ScalarField field = compile(ast);
        for (int k = 0; k < 3; ++k) {
            for (int j = 0; j < 3; ++j)
                x[j] = static_cast<double>(rng.next_below(801)) / 100.0 - 4.0;
            // Domain violations (log(-1), 1/0, ...) must throw identically
            // from both evaluators; values must agree to the bit.
            bool a_threw = false, b_threw = false;
            double a = 0.0, b = 0.0;
            try {
                a = interpret(ast, x);
            } catch (const DomainError&) {
                a_threw = true;
            }
            try {
                b = field.eval(x);
            } catch (const DomainError&) {
                b_threw = true;
            }
            CHECK(a_threw == b_threw);
            if (!a_threw && !b_threw) {
                CHECK(same_bits(a, b));
                if (std::isfinite(a)) ++finite_seen;
            }
        }
    }
    CHECK(finite_seen > 300);  // the generator produces plenty of real values
}

TEST_CASE("clone is deep and structurally equal") {
    CounterRng rng(5, 5);
    const ExprAst ast = testgen::random_ast(rng, 2, 4);
    const ExprAst copy = clone(ast);
    CHECK(structurally_equal(ast, copy));
    CHECK(ast.root.get() != copy.root.get());
}

TEST_CASE("compiled constants are flagged") {
    CHECK(expr::compile("1 + 2", 2).constant);
    CHECK(!expr::compile("x[0]", 2).constant);
    CHECK(!expr::compile("norm(x)", 2).constant);
}
