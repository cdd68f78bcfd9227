#include "sdelab/exprlang.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>

#include "sdelab/errors.hpp"

namespace sdelab::expr {

namespace {

// Shared elementary operations. Both evaluation routes call exactly these,
// which is what makes their results bit-identical.
inline double op_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero");
    return a / b;
}

inline double op_pow(double a, double b) {
    if (a == 0.0 && b < 0.0) {
        throw DomainError("0 raised to a negative power");
    }
    const double r = std::pow(a, b);
    if (std::isnan(r)) throw DomainError("pow produced NaN");
    return r;
}

inline double op_log(double a) {
    if (!(a > 0.0)) throw DomainError("log of a non-positive value");
    return std::log(a);
}

inline double op_sqrt(double a) {
    if (a < 0.0) throw DomainError("sqrt of a negative value");
    return std::sqrt(a);
}

inline double point_norm(const Vec& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += x(i) * x(i);
    return std::sqrt(s);
}

inline double apply_bin(BinOp op, double a, double b) {
    switch (op) {
        case BinOp::Add: return a + b;
        case BinOp::Sub: return a - b;
        case BinOp::Mul: return a * b;
        case BinOp::Div: return op_div(a, b);
        case BinOp::Pow: return op_pow(a, b);
    }
    throw Error("unreachable binary op");
}

inline double apply_cmp(CmpOp op, double a, double b) {
    switch (op) {
        case CmpOp::Lt: return a < b ? 1.0 : 0.0;
        case CmpOp::Le: return a <= b ? 1.0 : 0.0;
        case CmpOp::Gt: return a > b ? 1.0 : 0.0;
        case CmpOp::Ge: return a >= b ? 1.0 : 0.0;
        case CmpOp::Eq: return a == b ? 1.0 : 0.0;
    }
    throw Error("unreachable comparison op");
}

inline double apply_func1(Func f, double a) {
    switch (f) {
        case Func::Abs: return std::fabs(a);
        case Func::Sqrt: return op_sqrt(a);
        case Func::Exp: return std::exp(a);
        case Func::Log: return op_log(a);
        case Func::Step: return a >= 0.0 ? 1.0 : 0.0;
        default: throw Error("unreachable unary function");
    }
}

inline double apply_func2(Func f, double a, double b) {
    switch (f) {
        case Func::Pow: return op_pow(a, b);
        case Func::Min: return std::fmin(a, b);
        case Func::Max: return std::fmax(a, b);
        default: throw Error("unreachable binary function");
    }
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
    Number, Ident, LParen, RParen, LBracket, RBracket, Comma,
    Plus, Minus, Star, Slash, Caret, Lt, Le, Gt, Ge, EqEq, End,
};

struct Token {
    Tok kind;
    double number = 0.0;
    bool integral = false;  // literal had no '.' and no exponent
    std::string_view text;
    std::size_t offset = 0;
};

class Lexer {
  public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                src_[pos_] == '\n' || src_[pos_] == '\r')) {
            ++pos_;
        }
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            return;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                    src_[pos_] == '_')) {
                ++pos_;
            }
            tok_.kind = Tok::Ident;
            tok_.text = src_.substr(start, pos_ - start);
            return;
        }
        ++pos_;
        switch (c) {
            case '(': tok_.kind = Tok::LParen; return;
            case ')': tok_.kind = Tok::RParen; return;
            case '[': tok_.kind = Tok::LBracket; return;
            case ']': tok_.kind = Tok::RBracket; return;
            case ',': tok_.kind = Tok::Comma; return;
            case '+': tok_.kind = Tok::Plus; return;
            case '-': tok_.kind = Tok::Minus; return;
            case '*': tok_.kind = Tok::Star; return;
            case '/': tok_.kind = Tok::Slash; return;
            case '^': tok_.kind = Tok::Caret; return;
            case '<':
                if (pos_ < src_.size() && src_[pos_] == '=') {
                    ++pos_;
                    tok_.kind = Tok::Le;
                } else {
                    tok_.kind = Tok::Lt;
                }
                return;
            case '>':
                if (pos_ < src_.size() && src_[pos_] == '=') {
                    ++pos_;
                    tok_.kind = Tok::Ge;
                } else {
                    tok_.kind = Tok::Gt;
                }
                return;
            case '=':
                if (pos_ < src_.size() && src_[pos_] == '=') {
                    ++pos_;
                    tok_.kind = Tok::EqEq;
                    return;
                }
                throw SyntaxError("expected '==' ", tok_.offset);
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'",
                          tok_.offset);
    }

    void lex_number() {
        const std::size_t start = pos_;
        bool integral = true;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
        if (pos_ < src_.size() && src_[pos_] == '.') {
            integral = false;
            ++pos_;
            if (pos_ >= src_.size() ||
                !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                throw SyntaxError("expected digit after decimal point", pos_);
            }
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            integral = false;
            ++pos_;
            if (pos_ < src_.size() &&
                (src_[pos_] == '+' || src_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ >= src_.size() ||
                !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                throw SyntaxError("expected digit in exponent", pos_);
            }
            while (pos_ < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
        }
        const std::string_view span = src_.substr(start, pos_ - start);
        double value = 0.0;
        const auto res =
            std::from_chars(span.data(), span.data() + span.size(), value);
        if (res.ec != std::errc{} || res.ptr != span.data() + span.size()) {
            throw SyntaxError("malformed number literal", start);
        }
        tok_.kind = Tok::Number;
        tok_.number = value;
        tok_.integral = integral;
        tok_.text = span;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Parser

NodePtr make_node(Node::Kind kind) {
    auto n = std::make_unique<Node>();
    n->kind = kind;
    return n;
}

class Parser {
  public:
    Parser(std::string_view src, int dim) : lex_(src), dim_(dim) {}

    NodePtr parse_all() {
        NodePtr root = parse_comparison();
        const Token& t = lex_.peek();
        if (t.kind != Tok::End) {
            throw SyntaxError("unexpected trailing input", t.offset);
        }
        return root;
    }

  private:
    NodePtr parse_comparison() {
        NodePtr lhs = parse_additive();
        CmpOp op;
        if (!peek_cmp(&op)) return lhs;
        const Token t = lex_.take();
        NodePtr rhs = parse_additive();
        CmpOp chained;
        if (peek_cmp(&chained)) {
            throw SyntaxError("chained comparisons are not supported",
                              lex_.peek().offset);
        }
        (void)t;
        auto n = make_node(Node::Kind::Compare);
        n->cmp = op;
        n->args.push_back(std::move(lhs));
        n->args.push_back(std::move(rhs));
        return n;
    }

    bool peek_cmp(CmpOp* op) const {
        switch (lex_.peek().kind) {
            case Tok::Lt: *op = CmpOp::Lt; return true;
            case Tok::Le: *op = CmpOp::Le; return true;
            case Tok::Gt: *op = CmpOp::Gt; return true;
            case Tok::Ge: *op = CmpOp::Ge; return true;
            case Tok::EqEq: *op = CmpOp::Eq; return true;
            default: return false;
        }
    }

    NodePtr parse_additive() {
        NodePtr lhs = parse_multiplicative();
        for (;;) {
            const Tok k = lex_.peek().kind;
            if (k != Tok::Plus && k != Tok::Minus) return lhs;
            lex_.take();
            NodePtr rhs = parse_multiplicative();
            auto n = make_node(Node::Kind::Binary);
            n->bin = (k == Tok::Plus) ? BinOp::Add : BinOp::Sub;
            n->args.push_back(std::move(lhs));
            n->args.push_back(std::move(rhs));
            lhs = std::move(n);
        }
    }

    NodePtr parse_multiplicative() {
        NodePtr lhs = parse_unary();
        for (;;) {
            const Tok k = lex_.peek().kind;
            if (k != Tok::Star && k != Tok::Slash) return lhs;
            lex_.take();
            NodePtr rhs = parse_unary();
            auto n = make_node(Node::Kind::Binary);
            n->bin = (k == Tok::Star) ? BinOp::Mul : BinOp::Div;
            n->args.push_back(std::move(lhs));
            n->args.push_back(std::move(rhs));
            lhs = std::move(n);
        }
    }

    NodePtr parse_unary() {
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            auto n = make_node(Node::Kind::Neg);
            n->args.push_back(parse_unary());
            return n;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (lex_.peek().kind != Tok::Caret) return base;
        lex_.take();
        NodePtr exponent = parse_unary();
        auto n = make_node(Node::Kind::Binary);
        n->bin = BinOp::Pow;
        n->args.push_back(std::move(base));
        n->args.push_back(std::move(exponent));
        return n;
    }

    NodePtr parse_primary() {
        const Token t = lex_.take();
        switch (t.kind) {
            case Tok::Number: {
                auto n = make_node(Node::Kind::Number);
                n->number = t.number;
                return n;
            }
            case Tok::LParen: {
                NodePtr inner = parse_comparison();
                expect(Tok::RParen, "expected ')'");
                return inner;
            }
            case Tok::Ident:
                return parse_ident(t);
            case Tok::End:
                throw SyntaxError("unexpected end of input", t.offset);
            default:
                throw SyntaxError("unexpected token", t.offset);
        }
    }

    NodePtr parse_ident(const Token& t) {
        if (t.text == "x") {
            expect(Tok::LBracket, "expected '[' after x");
            const Token idx = lex_.take();
            if (idx.kind != Tok::Number || !idx.integral) {
                throw SyntaxError("coordinate index must be an integer literal",
                                  idx.offset);
            }
            expect(Tok::RBracket, "expected ']'");
            const double v = idx.number;
            if (!(v >= 0.0) || v >= static_cast<double>(dim_)) {
                throw IndexOutOfRangeError(
                    "coordinate index " + std::to_string(v) +
                    " outside dimension " + std::to_string(dim_));
            }
            auto n = make_node(Node::Kind::Coord);
            n->coord = static_cast<int>(v);
            return n;
        }
        if (t.text == "norm") {
            expect(Tok::LParen, "expected '(' after norm");
            const Token arg = lex_.take();
            if (arg.kind != Tok::Ident || arg.text != "x") {
                throw SyntaxError("norm takes the point itself: norm(x)",
                                  arg.offset);
            }
            expect(Tok::RParen, "expected ')'");
            return make_node(Node::Kind::Norm);
        }
        if (t.text == "if") {
            expect(Tok::LParen, "expected '(' after if");
            auto n = make_node(Node::Kind::If);
            n->args.push_back(parse_comparison());
            expect(Tok::Comma, "expected ','");
            n->args.push_back(parse_comparison());
            expect(Tok::Comma, "expected ','");
            n->args.push_back(parse_comparison());
            expect(Tok::RParen, "expected ')'");
            return n;
        }
        static const std::map<std::string_view, std::pair<Func, int>> kFuncs = {
            {"abs", {Func::Abs, 1}},  {"sqrt", {Func::Sqrt, 1}},
            {"exp", {Func::Exp, 1}},  {"log", {Func::Log, 1}},
            {"pow", {Func::Pow, 2}},  {"min", {Func::Min, 2}},
            {"max", {Func::Max, 2}},  {"step", {Func::Step, 1}},
        };
        const auto it = kFuncs.find(t.text);
        if (it == kFuncs.end()) {
            throw SyntaxError("unknown identifier '" + std::string(t.text) + "'",
                              t.offset);
        }
        expect(Tok::LParen, "expected '('");
        auto n = make_node(Node::Kind::Call);
        n->func = it->second.first;
        n->args.push_back(parse_comparison());
        while (lex_.peek().kind == Tok::Comma) {
            lex_.take();
            n->args.push_back(parse_comparison());
        }
        expect(Tok::RParen, "expected ')'");
        if (static_cast<int>(n->args.size()) != it->second.second) {
            throw ArityError(std::string(t.text) + " expects " +
                             std::to_string(it->second.second) +
                             " argument(s), got " +
                             std::to_string(n->args.size()));
        }
        return n;
    }

    void expect(Tok kind, const char* msg) {
        const Token t = lex_.take();
        if (t.kind != kind) throw SyntaxError(msg, t.offset);
    }

    Lexer lex_;
    int dim_;
};

// ---------------------------------------------------------------------------
// Printer

int prec(const Node& n) {
    switch (n.kind) {
        case Node::Kind::Compare: return 1;
        case Node::Kind::Binary:
            switch (n.bin) {
                case BinOp::Add:
                case BinOp::Sub: return 2;
                case BinOp::Mul:
                case BinOp::Div: return 3;
                case BinOp::Pow: return 5;
            }
            return 2;
        case Node::Kind::Neg: return 4;
        default: return 6;
    }
}

void print_number(double v, std::string& out) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

const char* func_name(Func f) {
    switch (f) {
        case Func::Abs: return "abs";
        case Func::Sqrt: return "sqrt";
        case Func::Exp: return "exp";
        case Func::Log: return "log";
        case Func::Pow: return "pow";
        case Func::Min: return "min";
        case Func::Max: return "max";
        case Func::Step: return "step";
    }
    return "?";
}

const char* cmp_text(CmpOp c) {
    switch (c) {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "==";
    }
    return "?";
}

void print_node(const Node& n, std::string& out);

void print_wrapped(const Node& child, bool wrap, std::string& out) {
    if (wrap) out.push_back('(');
    print_node(child, out);
    if (wrap) out.push_back(')');
}

void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case Node::Kind::Number:
            print_number(n.number, out);
            return;
        case Node::Kind::Coord:
            out += "x[" + std::to_string(n.coord) + "]";
            return;
        case Node::Kind::Norm:
            out += "norm(x)";
            return;
        case Node::Kind::Neg:
            out.push_back('-');
            print_wrapped(*n.args[0], prec(*n.args[0]) < 4, out);
            return;
        case Node::Kind::Binary: {
            const int p = prec(n);
            if (n.bin == BinOp::Pow) {
                // base slot is primary, exponent slot is unary
                print_wrapped(*n.args[0], prec(*n.args[0]) < 6, out);
                out.push_back('^');
                print_wrapped(*n.args[1], prec(*n.args[1]) < 4, out);
                return;
            }
            print_wrapped(*n.args[0], prec(*n.args[0]) < p, out);
            switch (n.bin) {
                case BinOp::Add: out.push_back('+'); break;
                case BinOp::Sub: out.push_back('-'); break;
                case BinOp::Mul: out.push_back('*'); break;
                case BinOp::Div: out.push_back('/'); break;
                case BinOp::Pow: break;
            }
            print_wrapped(*n.args[1], prec(*n.args[1]) <= p, out);
            return;
        }
        case Node::Kind::Compare:
            print_wrapped(*n.args[0], prec(*n.args[0]) <= 1, out);
            out += cmp_text(n.cmp);
            print_wrapped(*n.args[1], prec(*n.args[1]) <= 1, out);
            return;
        case Node::Kind::Call: {
            out += func_name(n.func);
            out.push_back('(');
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out.push_back(',');
                print_node(*n.args[i], out);
            }
            out.push_back(')');
            return;
        }
        case Node::Kind::If:
            out += "if(";
            print_node(*n.args[0], out);
            out.push_back(',');
            print_node(*n.args[1], out);
            out.push_back(',');
            print_node(*n.args[2], out);
            out.push_back(')');
            return;
    }
}

// ---------------------------------------------------------------------------
// Stack program

enum class Op : std::uint8_t {
    PushNumber, PushCoord, PushNorm, Neg,
    Add, Sub, Mul, Div, Pow,
    Lt, Le, Gt, Ge, Eq,
    Abs, Sqrt, Exp, Log, Step, FPow, Min, Max,
    JumpIfZero, Jump,
};

struct Instr {
    Op op;
    double number = 0.0;
    int arg = 0;  // coordinate index or jump target
};

struct Program {
    std::vector<Instr> code;
    int dim = 0;
    int max_stack = 0;
    bool constant = true;
};

void emit(const Node& n, Program& prog, int& depth) {
    auto push = [&](Instr in, int delta) {
        prog.code.push_back(in);
        depth += delta;
        if (depth > prog.max_stack) prog.max_stack = depth;
    };
    switch (n.kind) {
        case Node::Kind::Number:
            push({Op::PushNumber, n.number, 0}, +1);
            return;
        case Node::Kind::Coord:
            prog.constant = false;
            push({Op::PushCoord, 0.0, n.coord}, +1);
            return;
        case Node::Kind::Norm:
            prog.constant = false;
            push({Op::PushNorm, 0.0, 0}, +1);
            return;
        case Node::Kind::Neg:
            emit(*n.args[0], prog, depth);
            push({Op::Neg, 0.0, 0}, 0);
            return;
        case Node::Kind::Binary: {
            emit(*n.args[0], prog, depth);
            emit(*n.args[1], prog, depth);
            Op op = Op::Add;
            switch (n.bin) {
                case BinOp::Add: op = Op::Add; break;
                case BinOp::Sub: op = Op::Sub; break;
                case BinOp::Mul: op = Op::Mul; break;
                case BinOp::Div: op = Op::Div; break;
                case BinOp::Pow: op = Op::Pow; break;
            }
            push({op, 0.0, 0}, -1);
            return;
        }
        case Node::Kind::Compare: {
            emit(*n.args[0], prog, depth);
            emit(*n.args[1], prog, depth);
            Op op = Op::Lt;
            switch (n.cmp) {
                case CmpOp::Lt: op = Op::Lt; break;
                case CmpOp::Le: op = Op::Le; break;
                case CmpOp::Gt: op = Op::Gt; break;
                case CmpOp::Ge: op = Op::Ge; break;
                case CmpOp::Eq: op = Op::Eq; break;
            }
            push({op, 0.0, 0}, -1);
            return;
        }
        case Node::Kind::Call: {
            for (const auto& a : n.args) emit(*a, prog, depth);
            Op op = Op::Abs;
            int delta = 0;
            switch (n.func) {
                case Func::Abs: op = Op::Abs; break;
                case Func::Sqrt: op = Op::Sqrt; break;
                case Func::Exp: op = Op::Exp; break;
                case Func::Log: op = Op::Log; break;
                case Func::Step: op = Op::Step; break;
                case Func::Pow: op = Op::FPow; delta = -1; break;
                case Func::Min: op = Op::Min; delta = -1; break;
                case Func::Max: op = Op::Max; delta = -1; break;
            }
            push({op, 0.0, 0}, delta);
            return;
        }
        case Node::Kind::If: {
            emit(*n.args[0], prog, depth);
            const int jz = static_cast<int>(prog.code.size());
            push({Op::JumpIfZero, 0.0, 0}, -1);
            emit(*n.args[1], prog, depth);
            const int jmp = static_cast<int>(prog.code.size());
            push({Op::Jump, 0.0, 0}, 0);
            // The two branches leave one value each but only one runs.
            depth -= 1;
            prog.code[jz].arg = static_cast<int>(prog.code.size());
            emit(*n.args[2], prog, depth);
            prog.code[jmp].arg = static_cast<int>(prog.code.size());
            return;
        }
    }
}

double run_program(const Program& prog, const Vec& x) {
    thread_local std::vector<double> stack;
    if (static_cast<int>(stack.size()) < prog.max_stack) {
        stack.resize(prog.max_stack);
    }
    int sp = 0;
    const Instr* code = prog.code.data();
    const int n = static_cast<int>(prog.code.size());
    for (int ip = 0; ip < n; ++ip) {
        const Instr& in = code[ip];
        switch (in.op) {
            case Op::PushNumber: stack[sp++] = in.number; break;
            case Op::PushCoord: stack[sp++] = x(in.arg); break;
            case Op::PushNorm: stack[sp++] = point_norm(x); break;
            case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::Add: stack[sp - 2] = stack[sp - 2] + stack[sp - 1]; --sp; break;
            case Op::Sub: stack[sp - 2] = stack[sp - 2] - stack[sp - 1]; --sp; break;
            case Op::Mul: stack[sp - 2] = stack[sp - 2] * stack[sp - 1]; --sp; break;
            case Op::Div: stack[sp - 2] = op_div(stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Pow:
            case Op::FPow: stack[sp - 2] = op_pow(stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Lt: stack[sp - 2] = apply_cmp(CmpOp::Lt, stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Le: stack[sp - 2] = apply_cmp(CmpOp::Le, stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Gt: stack[sp - 2] = apply_cmp(CmpOp::Gt, stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Ge: stack[sp - 2] = apply_cmp(CmpOp::Ge, stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Eq: stack[sp - 2] = apply_cmp(CmpOp::Eq, stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Abs: stack[sp - 1] = std::fabs(stack[sp - 1]); break;
            case Op::Sqrt: stack[sp - 1] = op_sqrt(stack[sp - 1]); break;
            case Op::Exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::Log: stack[sp - 1] = op_log(stack[sp - 1]); break;
            case Op::Step: stack[sp - 1] = stack[sp - 1] >= 0.0 ? 1.0 : 0.0; break;
            case Op::Min: stack[sp - 2] = std::fmin(stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::Max: stack[sp - 2] = std::fmax(stack[sp - 2], stack[sp - 1]); --sp; break;
            case Op::JumpIfZero:
                if (stack[--sp] == 0.0) ip = in.arg - 1;
                break;
            case Op::Jump:
                ip = in.arg - 1;
                break;
        }
    }
    return stack[0];
}

double interpret_node(const Node& n, const Vec& x) {
    switch (n.kind) {
        case Node::Kind::Number: return n.number;
        case Node::Kind::Coord: return x(n.coord);
        case Node::Kind::Norm: return point_norm(x);
        case Node::Kind::Neg: return -interpret_node(*n.args[0], x);
        case Node::Kind::Binary:
            return apply_bin(n.bin, interpret_node(*n.args[0], x),
                             interpret_node(*n.args[1], x));
        case Node::Kind::Compare:
            return apply_cmp(n.cmp, interpret_node(*n.args[0], x),
                             interpret_node(*n.args[1], x));
        case Node::Kind::Call:
            if (n.args.size() == 1) {
                return apply_func1(n.func, interpret_node(*n.args[0], x));
            }
            return apply_func2(n.func, interpret_node(*n.args[0], x),
                               interpret_node(*n.args[1], x));
        case Node::Kind::If:
            return interpret_node(*n.args[0], x) != 0.0
                       ? interpret_node(*n.args[1], x)
                       : interpret_node(*n.args[2], x);
    }
    throw Error("unreachable node kind");
}

NodePtr clone_node(const Node& n) {
    auto out = std::make_unique<Node>();
    out->kind = n.kind;
    out->number = n.number;
    out->coord = n.coord;
    out->bin = n.bin;
    out->cmp = n.cmp;
    out->func = n.func;
    out->args.reserve(n.args.size());
    for (const auto& a : n.args) out->args.push_back(clone_node(*a));
    return out;
}

}  // namespace

ExprAst parse(std::string_view source, int dim) {
    if (source.empty()) throw SyntaxError("empty expression", 0);
    if (dim < 1) throw ConfigError("dimension must be >= 1");
    Parser p(source, dim);
    ExprAst ast;
    ast.dim = dim;
    ast.root = p.parse_all();
    return ast;
}

std::string print(const ExprAst& ast) {
    std::string out;
    print_node(*ast.root, out);
    return out;
}

bool structurally_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    switch (a.kind) {
        case Node::Kind::Number:
            if (a.number != b.number) return false;
            break;
        case Node::Kind::Coord:
            if (a.coord != b.coord) return false;
            break;
        case Node::Kind::Binary:
            if (a.bin != b.bin) return false;
            break;
        case Node::Kind::Compare:
            if (a.cmp != b.cmp) return false;
            break;
        case Node::Kind::Call:
            if (a.func != b.func) return false;
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (!structurally_equal(*a.args[i], *b.args[i])) return false;
    }
    return true;
}

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
    return a.dim == b.dim && structurally_equal(*a.root, *b.root);
}

ExprAst clone(const ExprAst& ast) {
    ExprAst out;
    out.dim = ast.dim;
    out.root = clone_node(*ast.root);
    return out;
}

double interpret(const ExprAst& ast, const Vec& x) {
    return interpret_node(*ast.root, x);
}

ScalarField compile(const ExprAst& ast) {
    auto prog = std::make_shared<Program>();
    prog->dim = ast.dim;
    int depth = 0;
    emit(*ast.root, *prog, depth);

    ScalarField field;
    field.dim = ast.dim;
    field.constant = prog->constant;
    field.eval = [prog](const Vec& x) { return run_program(*prog, x); };
    return field;
}

ScalarField compile(std::string_view source, int dim) {
    return compile(parse(source, dim));
}

}  // namespace sdelab::expr
