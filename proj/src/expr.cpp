#include "avgsde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>

namespace avgsde::expr {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

ExprPtr make_const(double v) {
  auto n = std::make_unique<ExprNode>();
  n->kind = NodeKind::Constant;
  n->value = v;
  return n;
}

ExprPtr make_var(Var v) {
  auto n = std::make_unique<ExprNode>();
  n->kind = NodeKind::Variable;
  n->var = v;
  return n;
}

ExprPtr make_unary(UnaryOp op, ExprPtr child) {
  auto n = std::make_unique<ExprNode>();
  n->kind = NodeKind::Unary;
  n->uop = op;
  n->lhs = std::move(child);
  return n;
}

ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
  auto n = std::make_unique<ExprNode>();
  n->kind = NodeKind::Binary;
  n->bop = op;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } kind;
  double value = 0.0;
  std::string text;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& current() const { return tok_; }

  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_.pos = pos_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      tok_.text = "<end of input>";
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': single(Token::Plus, c); return;
      case '-': single(Token::Minus, c); return;
      case '*': single(Token::Star, c); return;
      case '/': single(Token::Slash, c); return;
      case '^': single(Token::Caret, c); return;
      case '(': single(Token::LParen, c); return;
      case ')': single(Token::RParen, c); return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Ident;
      tok_.text.assign(src_.substr(start, pos_ - start));
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

 private:
  void single(Token::Kind k, char c) {
    tok_.kind = k;
    tok_.text.assign(1, c);
    ++pos_;
  }

  void lex_number() {
    const std::size_t start = pos_;
    bool digits = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
      digits = true;
    }
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        digits = true;
      }
    }
    if (!digits) throw ParseError("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // "2e" is the number 2 followed by an identifier
      }
    }
    tok_.kind = Token::Number;
    tok_.text.assign(src_.substr(start, pos_ - start));
    tok_.value = std::strtod(tok_.text.c_str(), nullptr);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

bool lookup_function(const std::string& name, UnaryOp& op) {
  if (name == "sin") op = UnaryOp::Sin;
  else if (name == "cos") op = UnaryOp::Cos;
  else if (name == "exp") op = UnaryOp::Exp;
  else if (name == "tanh") op = UnaryOp::Tanh;
  else if (name == "sqrt") op = UnaryOp::Sqrt;
  else if (name == "abs") op = UnaryOp::Abs;
  else return false;
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  ExprPtr parse() {
    ExprPtr e = parse_expr();
    if (lex_.current().kind != Token::End)
      throw ParseError("unexpected token '" + lex_.current().text + "'", lex_.current().pos);
    return e;
  }

 private:
  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    while (lex_.current().kind == Token::Plus || lex_.current().kind == Token::Minus) {
      const BinaryOp op = lex_.current().kind == Token::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lex_.advance();
      lhs = make_binary(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    while (lex_.current().kind == Token::Star || lex_.current().kind == Token::Slash) {
      const BinaryOp op = lex_.current().kind == Token::Star ? BinaryOp::Mul : BinaryOp::Div;
      lex_.advance();
      lhs = make_binary(op, std::move(lhs), parse_factor());
    }
    return lhs;
  }

  ExprPtr parse_factor() {
    if (lex_.current().kind == Token::Minus) {
      lex_.advance();
      return make_unary(UnaryOp::Neg, parse_factor());
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr lhs = parse_atom();
    while (lex_.current().kind == Token::Caret) {
      lex_.advance();
      lhs = make_binary(BinaryOp::Pow, std::move(lhs), parse_atom());
    }
    return lhs;
  }

  ExprPtr parse_atom() {
    const Token tok = lex_.current();
    switch (tok.kind) {
      case Token::Number:
        lex_.advance();
        return make_const(tok.value);
      case Token::Ident: {
        lex_.advance();
        if (tok.text == "pi") return make_const(kPi);
        if (tok.text == "x") return make_var(Var::X);
        if (tok.text == "m") return make_var(Var::M);
        UnaryOp op;
        if (lookup_function(tok.text, op)) {
          if (lex_.current().kind != Token::LParen)
            throw ParseError("function '" + tok.text + "' requires parentheses",
                             lex_.current().pos);
          lex_.advance();
          ExprPtr arg = parse_expr();
          expect(Token::RParen, "')'");
          return make_unary(op, std::move(arg));
        }
        throw ParseError("unknown identifier '" + tok.text + "'", tok.pos);
      }
      case Token::LParen: {
        lex_.advance();
        ExprPtr e = parse_expr();
        expect(Token::RParen, "')'");
        return e;
      }
      default:
        throw ParseError("unexpected token '" + tok.text + "'", tok.pos);
    }
  }

  void expect(Token::Kind kind, const char* what) {
    if (lex_.current().kind != kind)
      throw ParseError(std::string("expected ") + what + ", got '" + lex_.current().text + "'",
                       lex_.current().pos);
    lex_.advance();
  }

  Lexer lex_;
};

const char* function_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Tanh: return "tanh";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Abs: return "abs";
  }
  return "?";
}

// Precedence levels used by both parser and printer.
int precedence(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Constant:
    case NodeKind::Variable:
      return 5;
    case NodeKind::Unary:
      return n.uop == UnaryOp::Neg ? 3 : 5;  // named functions print their own parens
    case NodeKind::Binary:
      switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
  }
  return 0;
}

void print_node(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, int parent_prec, bool needs_parens_on_tie,
                 std::string& out) {
  const int cp = precedence(child);
  const bool parens = cp < parent_prec || (cp == parent_prec && needs_parens_on_tie);
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    }
    case NodeKind::Variable:
      out += (n.var == Var::X) ? 'x' : 'm';
      return;
    case NodeKind::Unary:
      if (n.uop == UnaryOp::Neg) {
        out += '-';
        print_child(*n.lhs, precedence(n), false, out);
      } else {
        out += function_name(n.uop);
        out += '(';
        print_node(*n.lhs, out);
        out += ')';
      }
      return;
    case NodeKind::Binary: {
      const char* sym = nullptr;
      switch (n.bop) {
        case BinaryOp::Add: sym = "+"; break;
        case BinaryOp::Sub: sym = "-"; break;
        case BinaryOp::Mul: sym = "*"; break;
        case BinaryOp::Div: sym = "/"; break;
        case BinaryOp::Pow: sym = "^"; break;
      }
      const int p = precedence(n);
      print_child(*n.lhs, p, false, out);
      out += sym;
      // left-associative: a-(b-c), a/(b/c), a^(b^c) keep parens on the right
      print_child(*n.rhs, p, true, out);
      return;
    }
  }
}

[[noreturn]] void throw_domain(const char* what, const ExprNode& node) {
  throw DomainError(what, to_string(node));
}

double apply_unary(UnaryOp op, double v, const ExprNode& node) {
  double r;
  switch (op) {
    case UnaryOp::Neg: r = -v; break;
    case UnaryOp::Sin: r = std::sin(v); break;
    case UnaryOp::Cos: r = std::cos(v); break;
    case UnaryOp::Exp: r = std::exp(v); break;
    case UnaryOp::Tanh: r = std::tanh(v); break;
    case UnaryOp::Sqrt:
      if (v < 0.0) throw_domain("sqrt of negative value", node);
      r = std::sqrt(v);
      break;
    case UnaryOp::Abs: r = std::fabs(v); break;
    default: r = 0.0; break;
  }
  if (!std::isfinite(r)) throw_domain("non-finite result", node);
  return r;
}

double apply_binary(BinaryOp op, double a, double b, const ExprNode& node) {
  double r;
  switch (op) {
    case BinaryOp::Add: r = a + b; break;
    case BinaryOp::Sub: r = a - b; break;
    case BinaryOp::Mul: r = a * b; break;
    case BinaryOp::Div:
      if (b == 0.0) throw_domain("division by zero", node);
      r = a / b;
      break;
    case BinaryOp::Pow:
      r = std::pow(a, b);
      if (!std::isfinite(r)) throw_domain("non-finite pow result", node);
      break;
    default: r = 0.0; break;
  }
  if (!std::isfinite(r)) throw_domain("non-finite result", node);
  return r;
}

}  // namespace

ExprPtr parse_expression(std::string_view text) {
  if (text.empty()) throw ParseError("empty expression", 0);
  return Parser(text).parse();
}

std::string to_string(const ExprNode& node) {
  std::string out;
  print_node(node, out);
  return out;
}

double evaluate_node(const ExprNode& node, double x, double m) {
  switch (node.kind) {
    case NodeKind::Constant: return node.value;
    case NodeKind::Variable: return node.var == Var::X ? x : m;
    case NodeKind::Unary:
      return apply_unary(node.uop, evaluate_node(*node.lhs, x, m), node);
    case NodeKind::Binary:
      return apply_binary(node.bop, evaluate_node(*node.lhs, x, m),
                          evaluate_node(*node.rhs, x, m), node);
  }
  return 0.0;
}

ExprPtr clone(const ExprNode& node) {
  auto n = std::make_unique<ExprNode>();
  n->kind = node.kind;
  n->value = node.value;
  n->var = node.var;
  n->uop = node.uop;
  n->bop = node.bop;
  if (node.lhs) n->lhs = clone(*node.lhs);
  if (node.rhs) n->rhs = clone(*node.rhs);
  return n;
}

CoefficientFn CoefficientFn::parse(std::string_view text) {
  auto impl = std::make_shared<Impl>();
  impl->root = parse_expression(text);
  impl->source.assign(text);

  // Postfix tape, same operation order as the recursive walk.
  struct Builder {
    Impl& impl;
    int depth = 0;
    void build(const ExprNode& n) {
      switch (n.kind) {
        case NodeKind::Constant:
          impl.tape.push_back({Op::PushConst, n.value, &n});
          bump(1);
          return;
        case NodeKind::Variable:
          impl.tape.push_back({n.var == Var::X ? Op::PushX : Op::PushM, 0.0, &n});
          if (n.var == Var::X) impl.uses_x = true;
          else impl.uses_m = true;
          bump(1);
          return;
        case NodeKind::Unary: {
          build(*n.lhs);
          Op op;
          switch (n.uop) {
            case UnaryOp::Neg: op = Op::Neg; break;
            case UnaryOp::Sin: op = Op::Sin; break;
            case UnaryOp::Cos: op = Op::Cos; break;
            case UnaryOp::Exp: op = Op::Exp; break;
            case UnaryOp::Tanh: op = Op::Tanh; break;
            case UnaryOp::Sqrt: op = Op::Sqrt; break;
            default: op = Op::Abs; break;
          }
          impl.tape.push_back({op, 0.0, &n});
          return;
        }
        case NodeKind::Binary: {
          build(*n.lhs);
          build(*n.rhs);
          Op op;
          switch (n.bop) {
            case BinaryOp::Add: op = Op::Add; break;
            case BinaryOp::Sub: op = Op::Sub; break;
            case BinaryOp::Mul: op = Op::Mul; break;
            case BinaryOp::Div: op = Op::Div; break;
            default: op = Op::Pow; break;
          }
          impl.tape.push_back({op, 0.0, &n});
          bump(-1);
          return;
        }
      }
    }
    void bump(int d) {
      depth += d;
      if (depth > impl.stack_depth) impl.stack_depth = depth;
    }
  };
  Builder{*impl}.build(*impl->root);
  return CoefficientFn(std::move(impl));
}

double CoefficientFn::eval_raw(double x, double m) const {
  double local[32];
  std::vector<double> heap;
  double* stack = local;
  if (impl_->stack_depth > 32) {
    heap.resize(static_cast<std::size_t>(impl_->stack_depth));
    stack = heap.data();
  }
  int top = 0;
  for (const Instr& ins : impl_->tape) {
    switch (ins.op) {
      case Op::PushConst: stack[top++] = ins.value; break;
      case Op::PushX: stack[top++] = x; break;
      case Op::PushM: stack[top++] = m; break;
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::Exp:
        stack[top - 1] = apply_unary(UnaryOp::Exp, stack[top - 1], *ins.node);
        break;
      case Op::Tanh: stack[top - 1] = std::tanh(stack[top - 1]); break;
      case Op::Sqrt:
        stack[top - 1] = apply_unary(UnaryOp::Sqrt, stack[top - 1], *ins.node);
        break;
      case Op::Abs: stack[top - 1] = std::fabs(stack[top - 1]); break;
      case Op::Add:
        --top;
        stack[top - 1] += stack[top];
        if (!std::isfinite(stack[top - 1])) throw_domain("non-finite result", *ins.node);
        break;
      case Op::Sub:
        --top;
        stack[top - 1] -= stack[top];
        if (!std::isfinite(stack[top - 1])) throw_domain("non-finite result", *ins.node);
        break;
      case Op::Mul:
        --top;
        stack[top - 1] *= stack[top];
        if (!std::isfinite(stack[top - 1])) throw_domain("non-finite result", *ins.node);
        break;
      case Op::Div:
        --top;
        stack[top - 1] = apply_binary(BinaryOp::Div, stack[top - 1], stack[top], *ins.node);
        break;
      case Op::Pow:
        --top;
        stack[top - 1] = apply_binary(BinaryOp::Pow, stack[top - 1], stack[top], *ins.node);
        break;
    }
  }
  const double r = stack[0];
  if (!std::isfinite(r)) throw_domain("non-finite result", *impl_->root);
  return r;
}

double CoefficientFn::eval(double x, double m) const {
  return eval_raw(x - std::floor(x), m);
}

PeriodicityReport check_periodicity(const CoefficientFn& f, int grid_size, double tol) {
  if (grid_size < 8) throw std::invalid_argument("check_periodicity: grid_size must be >= 8");
  static constexpr double kProbes[] = {-3.0, -1.0, 0.0, 1.0, 3.0};
  PeriodicityReport report;
  report.tolerance = tol;
  for (int i = 0; i < grid_size; ++i) {
    const double x = static_cast<double>(i) / grid_size;
    for (double m : kProbes) {
      const double d = std::fabs(f.eval_raw(x, m) - f.eval_raw(x + 1.0, m));
      if (d > report.max_deviation) {
        report.max_deviation = d;
        report.worst_x = x;
        report.worst_m = m;
      }
    }
  }
  report.passed = report.max_deviation <= tol;
  return report;
}

}  // namespace avgsde::expr
