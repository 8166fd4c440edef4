//! Symbolic expressions over positional variables `x1..xd`.
//!
//! The grammar is deliberately small: `+ - * /`, `^` with a constant
//! integer exponent, and the functions `exp ln sin cos sqrt tanh`.
//! Everything the rest of the crate needs from a potential or a drift
//! field (gradients, Hessians, Jacobians, divergences) is produced by
//! exact symbolic differentiation, so no finite differencing enters the
//! computational paths.
//!
//! Expressions are immutable after construction and can be shared and
//! evaluated concurrently. For hot loops, [`Expression::compile`]
//! flattens the tree into a postfix [`Program`] evaluated on a reusable
//! stack.

mod parser;
mod program;

pub use parser::ParseError;
pub use program::{Program, VectorProgram};

use std::fmt;
use thiserror::Error;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Sqrt => v.sqrt(),
            Func::Tanh => v.tanh(),
        }
    }
}

/// Expression tree node. Constructed through the smart constructors on
/// [`Expression`], which constant-fold the trivial cases (`0*u`, `u+0`,
/// `u^1`, ...).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    /// Power with a constant integer exponent. Non-integer exponents are
    /// desugared to `exp(p*ln(base))` by the parser.
    Pow(Box<Node>, i32),
    Fun(Func, Box<Node>),
}

/// Evaluation fault: the offending point is carried so callers can report
/// where an input function left its domain.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero at {point:?}")]
    DivisionByZero { point: Vec<f64> },
    #[error("ln of non-positive argument at {point:?}")]
    LogNonPositive { point: Vec<f64> },
    #[error("sqrt of negative argument at {point:?}")]
    SqrtNegative { point: Vec<f64> },
    #[error("non-finite result ({value}) at {point:?}")]
    NonFinite { value: f64, point: Vec<f64> },
    #[error("expression over {expected} variables evaluated at a {got}-dimensional point")]
    DimensionMismatch { expected: usize, got: usize },
}

/// An immutable symbolic expression in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    dim: usize,
    root: Node,
}

impl Expression {
    /// Parse `source` as an expression over variables `x1..x<dim>`.
    pub fn parse(source: &str, dim: usize) -> Result<Expression, ParseError> {
        parser::parse(source, dim)
    }

    pub fn constant(dim: usize, value: f64) -> Expression {
        Expression { dim, root: Node::Const(value) }
    }

    /// Variable `x<index+1>`. Panics if `index >= dim`.
    pub fn var(dim: usize, index: usize) -> Expression {
        assert!(index < dim, "variable index {index} out of range for dimension {dim}");
        Expression { dim, root: Node::Var(index) }
    }

    pub(crate) fn from_node(dim: usize, root: Node) -> Expression {
        Expression { dim, root }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// True if the expression constant-folds to exactly zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Evaluate at `x` by tree walking. Domain faults and non-finite
    /// results are reported, never silently propagated.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        let v = eval_node(&self.root, x)?;
        if v.is_nan() {
            return Err(EvalError::NonFinite { value: v, point: x.to_vec() });
        }
        Ok(v)
    }

    /// Exact symbolic partial derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Expression {
        assert!(var < self.dim, "derivative index {var} out of range for dimension {}", self.dim);
        Expression { dim: self.dim, root: diff_node(&self.root, var) }
    }

    /// All `d` partial derivatives.
    pub fn gradient(&self) -> VectorExpression {
        let comps = (0..self.dim).map(|i| self.differentiate(i)).collect();
        VectorExpression { components: comps }
    }

    /// Matrix of second partials, `hess[i][j] = d2f/dxi dxj`.
    pub fn hessian(&self) -> Vec<Vec<Expression>> {
        (0..self.dim)
            .map(|i| {
                let di = self.differentiate(i);
                (0..self.dim).map(|j| di.differentiate(j)).collect()
            })
            .collect()
    }

    /// Replace every variable `xi` by `subs[i]`. All substitutes must share
    /// one dimension, which becomes the dimension of the result.
    pub fn substitute(&self, subs: &[Expression]) -> Expression {
        assert_eq!(subs.len(), self.dim, "substitution arity mismatch");
        let dim = subs.first().map_or(0, |e| e.dim);
        assert!(subs.iter().all(|e| e.dim == dim), "substitutes disagree on dimension");
        Expression { dim, root: subst_node(&self.root, subs) }
    }

    /// Flatten into a postfix program for fast repeated evaluation.
    pub fn compile(&self) -> Program {
        program::compile(self)
    }

    // ---- smart constructors (best-effort constant folding) ----

    pub fn neg(e: Expression) -> Expression {
        let dim = e.dim;
        Expression { dim, root: neg_node(e.root) }
    }

    pub fn add(a: Expression, b: Expression) -> Expression {
        let dim = join_dim(&a, &b);
        Expression { dim, root: add_node(a.root, b.root) }
    }

    pub fn sub(a: Expression, b: Expression) -> Expression {
        let dim = join_dim(&a, &b);
        Expression { dim, root: sub_node(a.root, b.root) }
    }

    pub fn mul(a: Expression, b: Expression) -> Expression {
        let dim = join_dim(&a, &b);
        Expression { dim, root: mul_node(a.root, b.root) }
    }

    pub fn div(a: Expression, b: Expression) -> Expression {
        let dim = join_dim(&a, &b);
        Expression { dim, root: div_node(a.root, b.root) }
    }

    pub fn pow(base: Expression, exponent: i32) -> Expression {
        let dim = base.dim;
        Expression { dim, root: pow_node(base.root, exponent) }
    }

    pub fn fun(f: Func, arg: Expression) -> Expression {
        let dim = arg.dim;
        Expression { dim, root: fun_node(f, arg.root) }
    }
}

fn join_dim(a: &Expression, b: &Expression) -> usize {
    assert_eq!(a.dim, b.dim, "mixing expressions of different dimension");
    a.dim
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root)
    }
}

/// A `d`-component vector of expressions in `d` variables (a vector field
/// on R^d): the transverse field, a gradient, a drift.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorExpression {
    components: Vec<Expression>,
}

/// Construction error for [`VectorExpression`].
#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("vector field needs {dim} components, got {got}")]
    ComponentCount { dim: usize, got: usize },
    #[error("component {index} has dimension {got}, expected {dim}")]
    ComponentDim { index: usize, dim: usize, got: usize },
}

impl VectorExpression {
    /// The component count must equal the common variable dimension.
    pub fn new(components: Vec<Expression>) -> Result<VectorExpression, VectorError> {
        let dim = components.len();
        for (i, c) in components.iter().enumerate() {
            if c.dim != dim {
                return Err(if c.dim == dim {
                    unreachable!()
                } else {
                    VectorError::ComponentDim { index: i, dim, got: c.dim }
                });
            }
        }
        if components.is_empty() {
            return Err(VectorError::ComponentCount { dim: 0, got: 0 });
        }
        Ok(VectorExpression { components })
    }

    /// The zero field in `dim` variables.
    pub fn zero(dim: usize) -> VectorExpression {
        VectorExpression {
            components: (0..dim).map(|_| Expression::constant(dim, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expression] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expression {
        &self.components[i]
    }

    /// `div v = sum_i dv_i/dx_i`.
    pub fn divergence(&self) -> Expression {
        let dim = self.dim();
        let mut acc = Expression::constant(dim, 0.0);
        for (i, c) in self.components.iter().enumerate() {
            acc = Expression::add(acc, c.differentiate(i));
        }
        acc
    }

    /// `jac[i][j] = dv_i/dx_j`.
    pub fn jacobian(&self) -> Vec<Vec<Expression>> {
        self.components
            .iter()
            .map(|c| (0..self.dim()).map(|j| c.differentiate(j)).collect())
            .collect()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        assert_eq!(out.len(), self.dim());
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x)?;
        }
        Ok(())
    }

    pub fn compile(&self) -> VectorProgram {
        VectorProgram::new(self.components.iter().map(|c| c.compile()).collect())
    }

    /// Component-wise `a + b`.
    pub fn add(a: &VectorExpression, b: &VectorExpression) -> VectorExpression {
        assert_eq!(a.dim(), b.dim());
        VectorExpression {
            components: a
                .components
                .iter()
                .zip(&b.components)
                .map(|(x, y)| Expression::add(x.clone(), y.clone()))
                .collect(),
        }
    }

    /// Component-wise negation.
    pub fn neg(v: &VectorExpression) -> VectorExpression {
        VectorExpression {
            components: v.components.iter().map(|c| Expression::neg(c.clone())).collect(),
        }
    }

    /// Component-wise `a - b`.
    pub fn sub(a: &VectorExpression, b: &VectorExpression) -> VectorExpression {
        assert_eq!(a.dim(), b.dim());
        VectorExpression {
            components: a
                .components
                .iter()
                .zip(&b.components)
                .map(|(x, y)| Expression::sub(x.clone(), y.clone()))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// node-level implementation
// ---------------------------------------------------------------------------

fn eval_node(node: &Node, x: &[f64]) -> Result<f64, EvalError> {
    match node {
        Node::Const(c) => Ok(*c),
        Node::Var(i) => Ok(x[*i]),
        Node::Neg(a) => Ok(-eval_node(a, x)?),
        Node::Add(a, b) => Ok(eval_node(a, x)? + eval_node(b, x)?),
        Node::Sub(a, b) => Ok(eval_node(a, x)? - eval_node(b, x)?),
        Node::Mul(a, b) => Ok(eval_node(a, x)? * eval_node(b, x)?),
        Node::Div(a, b) => {
            let num = eval_node(a, x)?;
            let den = eval_node(b, x)?;
            if den == 0.0 {
                return Err(EvalError::DivisionByZero { point: x.to_vec() });
            }
            Ok(num / den)
        }
        Node::Pow(a, n) => Ok(eval_node(a, x)?.powi(*n)),
        Node::Fun(f, a) => {
            let v = eval_node(a, x)?;
            match f {
                Func::Ln if v <= 0.0 => Err(EvalError::LogNonPositive { point: x.to_vec() }),
                Func::Sqrt if v < 0.0 => Err(EvalError::SqrtNegative { point: x.to_vec() }),
                _ => Ok(f.apply(v)),
            }
        }
    }
}

fn boxed(n: Node) -> Box<Node> {
    Box::new(n)
}

fn neg_node(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(boxed(other)),
    }
}

fn add_node(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x + y),
        (Node::Const(c), other) if c == 0.0 => other,
        (other, Node::Const(c)) if c == 0.0 => other,
        (a, b) => Node::Add(boxed(a), boxed(b)),
    }
}

fn sub_node(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x - y),
        (other, Node::Const(c)) if c == 0.0 => other,
        (Node::Const(c), other) if c == 0.0 => neg_node(other),
        (a, b) => Node::Sub(boxed(a), boxed(b)),
    }
}

fn mul_node(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) => Node::Const(x * y),
        (Node::Const(c), _) | (_, Node::Const(c)) if c == 0.0 => Node::Const(0.0),
        (Node::Const(c), other) if c == 1.0 => other,
        (other, Node::Const(c)) if c == 1.0 => other,
        (a, b) => Node::Mul(boxed(a), boxed(b)),
    }
}

fn div_node(a: Node, b: Node) -> Node {
    match (a, b) {
        (Node::Const(x), Node::Const(y)) if y != 0.0 => Node::Const(x / y),
        (other, Node::Const(c)) if c == 1.0 => other,
        (a, b) => Node::Div(boxed(a), boxed(b)),
    }
}

fn pow_node(base: Node, n: i32) -> Node {
    match (base, n) {
        (_, 0) => Node::Const(1.0),
        (b, 1) => b,
        (Node::Const(c), n) => Node::Const(c.powi(n)),
        (b, n) => Node::Pow(boxed(b), n),
    }
}

fn fun_node(f: Func, a: Node) -> Node {
    if let Node::Const(c) = a {
        let v = f.apply(c);
        if v.is_finite() {
            return Node::Const(v);
        }
    }
    Node::Fun(f, boxed(a))
}

fn diff_node(node: &Node, var: usize) -> Node {
    match node {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg_node(diff_node(a, var)),
        Node::Add(a, b) => add_node(diff_node(a, var), diff_node(b, var)),
        Node::Sub(a, b) => sub_node(diff_node(a, var), diff_node(b, var)),
        Node::Mul(a, b) => add_node(
            mul_node(diff_node(a, var), (**b).clone()),
            mul_node((**a).clone(), diff_node(b, var)),
        ),
        Node::Div(a, b) => {
            // (a'b - ab') / b^2
            let num = sub_node(
                mul_node(diff_node(a, var), (**b).clone()),
                mul_node((**a).clone(), diff_node(b, var)),
            );
            div_node(num, pow_node((**b).clone(), 2))
        }
        Node::Pow(a, n) => {
            // n * a^(n-1) * a'
            let da = diff_node(a, var);
            mul_node(
                mul_node(Node::Const(f64::from(*n)), pow_node((**a).clone(), n - 1)),
                da,
            )
        }
        Node::Fun(f, a) => {
            let da = diff_node(a, var);
            let outer = match f {
                Func::Exp => fun_node(Func::Exp, (**a).clone()),
                Func::Ln => div_node(Node::Const(1.0), (**a).clone()),
                Func::Sin => fun_node(Func::Cos, (**a).clone()),
                Func::Cos => neg_node(fun_node(Func::Sin, (**a).clone())),
                Func::Sqrt => div_node(
                    Node::Const(0.5),
                    fun_node(Func::Sqrt, (**a).clone()),
                ),
                Func::Tanh => sub_node(
                    Node::Const(1.0),
                    pow_node(fun_node(Func::Tanh, (**a).clone()), 2),
                ),
            };
            mul_node(outer, da)
        }
    }
}

fn subst_node(node: &Node, subs: &[Expression]) -> Node {
    match node {
        Node::Const(c) => Node::Const(*c),
        Node::Var(i) => subs[*i].root.clone(),
        Node::Neg(a) => neg_node(subst_node(a, subs)),
        Node::Add(a, b) => add_node(subst_node(a, subs), subst_node(b, subs)),
        Node::Sub(a, b) => sub_node(subst_node(a, subs), subst_node(b, subs)),
        Node::Mul(a, b) => mul_node(subst_node(a, subs), subst_node(b, subs)),
        Node::Div(a, b) => div_node(subst_node(a, subs), subst_node(b, subs)),
        Node::Pow(a, n) => pow_node(subst_node(a, subs), *n),
        Node::Fun(f, a) => fun_node(*f, subst_node(a, subs)),
    }
}

// ---------------------------------------------------------------------------
// printing (round-trips through the parser)
// ---------------------------------------------------------------------------

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(..) => 3,
        Node::Pow(..) => 4,
        Node::Const(_) | Node::Var(_) | Node::Fun(..) => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Node, min_prec: u8) -> fmt::Result {
    // Negative constants print like "-1", which the parser lexes as a
    // negated atom, so parenthesize them wherever a bare atom is expected.
    let needs_parens = precedence(child) < min_prec
        || matches!(child, Node::Const(c) if *c < 0.0 && min_prec > 1);
    if needs_parens {
        write!(f, "(")?;
        write_node(f, child)?;
        write!(f, ")")
    } else {
        write_node(f, child)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node) -> fmt::Result {
    match node {
        Node::Const(c) => {
            if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                // Print through the unary-minus production so that
                // re-parsing reconstructs Const(c) via sign folding.
                write!(f, "-{}", -c)
            } else {
                write!(f, "{c}")
            }
        }
        Node::Var(i) => write!(f, "x{}", i + 1),
        Node::Neg(a) => {
            write!(f, "-")?;
            // Don't let "-1" or "-x1^2" re-associate: parenthesize
            // anything that is not a plain variable or function call.
            match **a {
                Node::Var(_) | Node::Fun(..) => write_node(f, a),
                _ => {
                    write!(f, "(")?;
                    write_node(f, a)?;
                    write!(f, ")")
                }
            }
        }
        Node::Add(a, b) => {
            write_child(f, a, 1)?;
            write!(f, " + ")?;
            write_child(f, b, 2)
        }
        Node::Sub(a, b) => {
            write_child(f, a, 1)?;
            write!(f, " - ")?;
            write_child(f, b, 2)
        }
        Node::Mul(a, b) => {
            write_child(f, a, 2)?;
            write!(f, " * ")?;
            write_child(f, b, 3)
        }
        Node::Div(a, b) => {
            write_child(f, a, 2)?;
            write!(f, " / ")?;
            write_child(f, b, 3)
        }
        Node::Pow(a, n) => {
            // Base must be an atom for the parser; exponent may carry a sign.
            match **a {
                Node::Var(_) | Node::Fun(..) => write_node(f, a)?,
                Node::Const(c) if c >= 0.0 => write_node(f, a)?,
                _ => {
                    write!(f, "(")?;
                    write_node(f, a)?;
                    write!(f, ")")?;
                }
            }
            write!(f, "^{n}")
        }
        Node::Fun(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a)?;
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests;
