#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "avgsde/errors.hpp"

namespace avgsde::expr {

enum class NodeKind { Constant, Variable, Unary, Binary };
enum class Var { X, M };
enum class UnaryOp { Neg, Sin, Cos, Exp, Tanh, Sqrt, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

// AST node. Finite acyclic tree: unary nodes own one child, binary two.
struct ExprNode {
  NodeKind kind;
  double value = 0.0;  // Constant
  Var var = Var::X;    // Variable
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  std::unique_ptr<ExprNode> lhs;
  std::unique_ptr<ExprNode> rhs;
};

using ExprPtr = std::unique_ptr<ExprNode>;

// Recursive-descent parse of the grammar
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' atom)*
//   atom   := number | 'pi' | 'x' | 'm' | func '(' expr ')' | '(' expr ')'
// Precedence pow > unary minus > mul/div > add/sub, left-associative within
// a level. Function application requires parentheses.
// Throws ParseError with the offending position.
ExprPtr parse_expression(std::string_view text);

// Precedence-aware printer; parse(to_string(t)) rebuilds a structurally
// identical tree (constants printed round-trip exact).
std::string to_string(const ExprNode& node);

// Tree-walking evaluation. Throws DomainError naming the subexpression on
// division by zero, sqrt of a negative, or any non-finite intermediate.
double evaluate_node(const ExprNode& node, double x, double m);

ExprPtr clone(const ExprNode& node);

// Immutable parsed expression in the variables x and m. Copies share the
// underlying tree; safe for concurrent evaluation.
class CoefficientFn {
 public:
  static CoefficientFn parse(std::string_view text);

  // Spec contract for coefficients on the torus: x is reduced modulo 1
  // before substitution.
  double eval(double x, double m) const;

  // Evaluation on the real line, no wrapping (test functions phi(y,z)).
  double eval_raw(double x, double m) const;

  bool uses_x() const { return impl_->uses_x; }
  bool uses_m() const { return impl_->uses_m; }
  const std::string& source() const { return impl_->source; }
  const ExprNode& root() const { return *impl_->root; }

  // Printed form of the current tree (not the original source text).
  std::string printed() const { return to_string(*impl_->root); }

 private:
  enum class Op : unsigned char {
    PushConst, PushX, PushM,
    Neg, Sin, Cos, Exp, Tanh, Sqrt, Abs,
    Add, Sub, Mul, Div, Pow,
  };
  struct Instr {
    Op op;
    double value;
    const ExprNode* node;  // for domain-error reporting
  };
  struct Impl {
    ExprPtr root;
    std::string source;
    std::vector<Instr> tape;
    int stack_depth = 0;
    bool uses_x = false;
    bool uses_m = false;
  };

  explicit CoefficientFn(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;
};

struct PeriodicityReport {
  bool passed = false;
  double max_deviation = 0.0;
  double worst_x = 0.0;
  double worst_m = 0.0;
  double tolerance = 0.0;
};

// Numeric 1-periodicity check in x: |f(x,m) - f(x+1,m)| over grid_size
// x-values in [0,1) and probe m in {-3,-1,0,1,3}. grid_size >= 8.
PeriodicityReport check_periodicity(const CoefficientFn& f, int grid_size = 64,
                                    double tol = 1e-9);

}  // namespace avgsde::expr
