//! Postfix compilation of expression trees.
//!
//! Monte Carlo stepping and ODE right-hand sides evaluate the same small
//! expressions hundreds of millions of times; a flat instruction vector
//! with an explicit value stack avoids the tree-walk overhead while
//! keeping the checked-arithmetic semantics of [`Expression::eval`].

use super::{EvalError, Expression, Func, Node};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Const(f64),
    Var(u32),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Fun(Func),
}

/// A compiled expression. Evaluation needs a scratch stack, which callers
/// own and reuse across calls (and keep per worker thread).
#[derive(Debug, Clone)]
pub struct Program {
    code: Vec<Instr>,
    max_stack: usize,
}

impl Program {
    pub fn max_stack(&self) -> usize {
        self.max_stack
    }

    pub fn eval(&self, x: &[f64], stack: &mut Vec<f64>) -> Result<f64, EvalError> {
        stack.clear();
        stack.reserve(self.max_stack);
        for instr in &self.code {
            match *instr {
                Instr::Const(c) => stack.push(c),
                Instr::Var(i) => stack.push(x[i as usize]),
                Instr::Neg => {
                    let a = stack.last_mut().expect("stack underflow");
                    *a = -*a;
                }
                Instr::Add => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.last_mut().expect("stack underflow");
                    *a += b;
                }
                Instr::Sub => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.last_mut().expect("stack underflow");
                    *a -= b;
                }
                Instr::Mul => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.last_mut().expect("stack underflow");
                    *a *= b;
                }
                Instr::Div => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.last_mut().expect("stack underflow");
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero { point: x.to_vec() });
                    }
                    *a /= b;
                }
                Instr::Pow(n) => {
                    let a = stack.last_mut().expect("stack underflow");
                    *a = a.powi(n);
                }
                Instr::Fun(f) => {
                    let a = stack.last_mut().expect("stack underflow");
                    match f {
                        Func::Ln if *a <= 0.0 => {
                            return Err(EvalError::LogNonPositive { point: x.to_vec() })
                        }
                        Func::Sqrt if *a < 0.0 => {
                            return Err(EvalError::SqrtNegative { point: x.to_vec() })
                        }
                        _ => *a = f.apply(*a),
                    }
                }
            }
        }
        let v = stack.pop().expect("program leaves one value");
        if v.is_nan() {
            return Err(EvalError::NonFinite { value: v, point: x.to_vec() });
        }
        Ok(v)
    }
}

pub(super) fn compile(expr: &Expression) -> Program {
    let mut code = Vec::new();
    let mut depth = 0usize;
    let mut max_stack = 0usize;
    emit(expr.root(), &mut code, &mut depth, &mut max_stack);
    debug_assert_eq!(depth, 1);
    Program { code, max_stack }
}

fn emit(node: &Node, code: &mut Vec<Instr>, depth: &mut usize, max: &mut usize) {
    let push = |code: &mut Vec<Instr>, i: Instr, depth: &mut usize, max: &mut usize| {
        match i {
            Instr::Const(_) | Instr::Var(_) => {
                *depth += 1;
                *max = (*max).max(*depth);
            }
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Div => *depth -= 1,
            Instr::Neg | Instr::Pow(_) | Instr::Fun(_) => {}
        }
        code.push(i);
    };
    match node {
        Node::Const(c) => push(code, Instr::Const(*c), depth, max),
        Node::Var(i) => push(code, Instr::Var(*i as u32), depth, max),
        Node::Neg(a) => {
            emit(a, code, depth, max);
            push(code, Instr::Neg, depth, max);
        }
        Node::Add(a, b) => {
            emit(a, code, depth, max);
            emit(b, code, depth, max);
            push(code, Instr::Add, depth, max);
        }
        Node::Sub(a, b) => {
            emit(a, code, depth, max);
            emit(b, code, depth, max);
            push(code, Instr::Sub, depth, max);
        }
        Node::Mul(a, b) => {
            emit(a, code, depth, max);
            emit(b, code, depth, max);
            push(code, Instr::Mul, depth, max);
        }
        Node::Div(a, b) => {
            emit(a, code, depth, max);
            emit(b, code, depth, max);
            push(code, Instr::Div, depth, max);
        }
        Node::Pow(a, n) => {
            emit(a, code, depth, max);
            push(code, Instr::Pow(*n), depth, max);
        }
        Node::Fun(f, a) => {
            emit(a, code, depth, max);
            push(code, Instr::Fun(*f), depth, max);
        }
    }
}

/// Compiled vector field: one program per component, sharing a stack.
#[derive(Debug, Clone)]
pub struct VectorProgram {
    programs: Vec<Program>,
}

impl VectorProgram {
    pub(crate) fn new(programs: Vec<Program>) -> VectorProgram {
        VectorProgram { programs }
    }

    pub fn dim(&self) -> usize {
        self.programs.len()
    }

    pub fn eval_into(
        &self,
        x: &[f64],
        out: &mut [f64],
        stack: &mut Vec<f64>,
    ) -> Result<(), EvalError> {
        debug_assert_eq!(out.len(), self.programs.len());
        for (o, p) in out.iter_mut().zip(&self.programs) {
            *o = p.eval(x, stack)?;
        }
        Ok(())
    }
}
