//! Guard, output and update expressions, and their evaluation.
//!
//! Expressions are evaluated against a register file plus the parameter
//! bindings of the event being fired. Arithmetic is checked: overflow is an
//! error, not a wrap. Reading an unassigned register (or comparing against
//! one) is an error too, so a machine whose behaviour would depend on an
//! uninitialised register fails loudly rather than defaulting to anything.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

/// Comparison operator inside a guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// An expression over registers and the firing event's parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Int(i64),
    Sym(String),
    Bool(bool),
    /// Current value of a register.
    Reg(String),
    /// Value of a parameter of the event being fired.
    Param(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("read of unassigned register `{0}`")]
    Unassigned(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("integer overflow in `{0}`")]
    Overflow(String),
}

/// Result of evaluating an expression: either a value or a truth value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evaluated {
    Val(Value),
    Truth(bool),
}

impl Evaluated {
    fn as_value(&self, ctx: &Expr) -> Result<Value, EvalError> {
        match self {
            Evaluated::Val(v) => Ok(v.clone()),
            Evaluated::Truth(_) => Err(EvalError::Type(format!(
                "boolean used as a value in `{ctx}`"
            ))),
        }
    }

    fn as_truth(&self, ctx: &Expr) -> Result<bool, EvalError> {
        match self {
            Evaluated::Truth(b) => Ok(*b),
            Evaluated::Val(v) => Err(EvalError::Type(format!(
                "value `{v}` used as a condition in `{ctx}`"
            ))),
        }
    }
}

impl Expr {
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }
    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }
    pub fn reg(name: &str) -> Expr {
        Expr::Reg(name.to_string())
    }
    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    /// Evaluate against a register file and the event's parameter bindings.
    pub fn eval(
        &self,
        regs: &BTreeMap<String, Value>,
        params: &BTreeMap<String, Value>,
    ) -> Result<Evaluated, EvalError> {
        match self {
            Expr::Int(n) => Ok(Evaluated::Val(Value::Int(*n))),
            Expr::Sym(s) => Ok(Evaluated::Val(Value::Sym(s.clone()))),
            Expr::Bool(b) => Ok(Evaluated::Truth(*b)),
            Expr::Reg(name) => match regs.get(name) {
                Some(Value::Bottom) => Err(EvalError::Unassigned(name.clone())),
                Some(v) => Ok(Evaluated::Val(v.clone())),
                None => Err(EvalError::UnknownRegister(name.clone())),
            },
            Expr::Param(name) => match params.get(name) {
                Some(Value::Bottom) => Err(EvalError::Unassigned(name.clone())),
                Some(v) => Ok(Evaluated::Val(v.clone())),
                None => Err(EvalError::UnknownParameter(name.clone())),
            },
            Expr::Add(a, b) => self.arith(a, b, regs, params, i64::checked_add),
            Expr::Sub(a, b) => self.arith(a, b, regs, params, i64::checked_sub),
            Expr::Mul(a, b) => self.arith(a, b, regs, params, i64::checked_mul),
            Expr::Cmp(op, a, b) => {
                let va = a.eval(regs, params)?.as_value(self)?;
                let vb = b.eval(regs, params)?.as_value(self)?;
                let truth = match (op, &va, &vb) {
                    (CmpOp::Eq, _, _) => va == vb,
                    (CmpOp::Ne, _, _) => va != vb,
                    (_, Value::Int(x), Value::Int(y)) => match op {
                        CmpOp::Lt => x < y,
                        CmpOp::Le => x <= y,
                        CmpOp::Gt => x > y,
                        CmpOp::Ge => x >= y,
                        CmpOp::Eq | CmpOp::Ne => unreachable!(),
                    },
                    _ => {
                        return Err(EvalError::Type(format!(
                            "ordered comparison of non-integers `{va}` {} `{vb}`",
                            op.symbol()
                        )))
                    }
                };
                Ok(Evaluated::Truth(truth))
            }
            Expr::And(a, b) => {
                let ta = a.eval(regs, params)?.as_truth(self)?;
                if !ta {
                    // Still evaluate the right side so errors surface
                    // deterministically regardless of short-circuit order.
                    let _ = b.eval(regs, params)?.as_truth(self)?;
                    return Ok(Evaluated::Truth(false));
                }
                let tb = b.eval(regs, params)?.as_truth(self)?;
                Ok(Evaluated::Truth(tb))
            }
            Expr::Or(a, b) => {
                let ta = a.eval(regs, params)?.as_truth(self)?;
                if ta {
                    let _ = b.eval(regs, params)?.as_truth(self)?;
                    return Ok(Evaluated::Truth(true));
                }
                let tb = b.eval(regs, params)?.as_truth(self)?;
                Ok(Evaluated::Truth(tb))
            }
            Expr::Not(a) => {
                let t = a.eval(regs, params)?.as_truth(self)?;
                Ok(Evaluated::Truth(!t))
            }
        }
    }

    fn arith(
        &self,
        a: &Expr,
        b: &Expr,
        regs: &BTreeMap<String, Value>,
        params: &BTreeMap<String, Value>,
        op: fn(i64, i64) -> Option<i64>,
    ) -> Result<Evaluated, EvalError> {
        let va = a.eval(regs, params)?.as_value(self)?;
        let vb = b.eval(regs, params)?.as_value(self)?;
        match (&va, &vb) {
            (Value::Int(x), Value::Int(y)) => match op(*x, *y) {
                Some(r) => Ok(Evaluated::Val(Value::Int(r))),
                None => Err(EvalError::Overflow(self.to_string())),
            },
            _ => Err(EvalError::Type(format!(
                "arithmetic on non-integers in `{self}` (got `{va}` and `{vb}`)"
            ))),
        }
    }

    /// Evaluate as a value; a boolean result is a type error.
    pub fn eval_value(
        &self,
        regs: &BTreeMap<String, Value>,
        params: &BTreeMap<String, Value>,
    ) -> Result<Value, EvalError> {
        self.eval(regs, params)?.as_value(self)
    }

    /// Evaluate as a condition; a non-boolean result is a type error.
    pub fn eval_truth(
        &self,
        regs: &BTreeMap<String, Value>,
        params: &BTreeMap<String, Value>,
    ) -> Result<bool, EvalError> {
        self.eval(regs, params)?.as_truth(self)
    }

    /// All register names read anywhere in the expression.
    pub fn registers(&self, out: &mut Vec<String>) {
        match self {
            Expr::Reg(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Int(_) | Expr::Sym(_) | Expr::Bool(_) | Expr::Param(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Cmp(_, a, b) => {
                a.registers(out);
                b.registers(out);
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.registers(out);
                b.registers(out);
            }
            Expr::Not(a) => a.registers(out),
        }
    }

    /// All parameter names read anywhere in the expression.
    pub fn parameters(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(name) => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Expr::Int(_) | Expr::Sym(_) | Expr::Bool(_) | Expr::Reg(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Cmp(_, a, b) => {
                a.parameters(out);
                b.parameters(out);
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.parameters(out);
                b.parameters(out);
            }
            Expr::Not(a) => a.parameters(out),
        }
    }

    /// Render with a caller-supplied rule for when a register reference must
    /// be written `last(name)` to avoid capture by a same-named parameter.
    pub fn render(&self, needs_last: &dyn Fn(&str) -> bool) -> String {
        self.render_prec(0, needs_last)
    }

    // Precedence levels: 1 or, 2 and, 3 not, 4 cmp, 5 add/sub, 6 mul, 7 atom.
    fn render_prec(&self, parent: u8, needs_last: &dyn Fn(&str) -> bool) -> String {
        let (prec, body) = match self {
            Expr::Int(n) => (7, n.to_string()),
            Expr::Sym(s) => (7, s.clone()),
            Expr::Bool(b) => (7, b.to_string()),
            Expr::Reg(name) => {
                let body = if needs_last(name) {
                    format!("last({name})")
                } else {
                    name.clone()
                };
                (7, body)
            }
            Expr::Param(name) => (7, name.clone()),
            Expr::Add(a, b) => (
                5,
                format!(
                    "{} + {}",
                    a.render_prec(5, needs_last),
                    b.render_prec(6, needs_last)
                ),
            ),
            Expr::Sub(a, b) => (
                5,
                format!(
                    "{} - {}",
                    a.render_prec(5, needs_last),
                    b.render_prec(6, needs_last)
                ),
            ),
            Expr::Mul(a, b) => (
                6,
                format!(
                    "{} * {}",
                    a.render_prec(6, needs_last),
                    b.render_prec(7, needs_last)
                ),
            ),
            Expr::Cmp(op, a, b) => (
                4,
                format!(
                    "{} {} {}",
                    a.render_prec(5, needs_last),
                    op.symbol(),
                    b.render_prec(5, needs_last)
                ),
            ),
            Expr::And(a, b) => (
                2,
                format!(
                    "{} && {}",
                    a.render_prec(2, needs_last),
                    b.render_prec(3, needs_last)
                ),
            ),
            Expr::Or(a, b) => (
                1,
                format!(
                    "{} || {}",
                    a.render_prec(1, needs_last),
                    b.render_prec(2, needs_last)
                ),
            ),
            Expr::Not(a) => (3, format!("!{}", a.render_prec(7, needs_last))),
        };
        if prec < parent {
            format!("({body})")
        } else {
            body
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|_| false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regs(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn sum_of_register_and_parameter() {
        // A running total: register 50, incoming parameter 50 -> 100.
        let e = Expr::add(Expr::reg("b"), Expr::param("i"));
        let r = regs(&[("b", Value::Int(50))]);
        let p = regs(&[("i", Value::Int(50))]);
        assert_eq!(e.eval_value(&r, &p), Ok(Value::Int(100)));
    }

    #[test]
    fn product_with_negative_register() {
        let e = Expr::mul(Expr::param("ia"), Expr::reg("rb"));
        let r = regs(&[("rb", Value::Int(-5))]);
        let p = regs(&[("ia", Value::Int(3))]);
        assert_eq!(e.eval_value(&r, &p), Ok(Value::Int(-15)));
    }

    #[test]
    fn guard_on_two_registers() {
        let e = Expr::cmp(CmpOp::Ge, Expr::reg("ra"), Expr::reg("rb"));
        let r = regs(&[("ra", Value::Int(0)), ("rb", Value::Int(0))]);
        let p = BTreeMap::new();
        assert_eq!(e.eval_truth(&r, &p), Ok(true));
        let r2 = regs(&[("ra", Value::Int(-1)), ("rb", Value::Int(0))]);
        assert_eq!(e.eval_truth(&r2, &p), Ok(false));
    }

    #[test]
    fn unassigned_register_is_an_error() {
        let e = Expr::cmp(CmpOp::Ge, Expr::reg("b"), Expr::Int(100));
        let r = regs(&[("b", Value::Bottom)]);
        assert_eq!(
            e.eval_truth(&r, &BTreeMap::new()),
            Err(EvalError::Unassigned("b".into()))
        );
    }

    #[test]
    fn overflow_is_an_error() {
        let e = Expr::add(Expr::reg("b"), Expr::Int(1));
        let r = regs(&[("b", Value::Int(i64::MAX))]);
        assert!(matches!(
            e.eval_value(&r, &BTreeMap::new()),
            Err(EvalError::Overflow(_))
        ));
    }

    #[test]
    fn symbol_equality() {
        let e = Expr::cmp(CmpOp::Eq, Expr::param("d"), Expr::Sym("coffee".into()));
        let p = regs(&[("d", Value::sym("coffee"))]);
        assert_eq!(e.eval_truth(&BTreeMap::new(), &p), Ok(true));
        let p2 = regs(&[("d", Value::sym("tea"))]);
        assert_eq!(e.eval_truth(&BTreeMap::new(), &p2), Ok(false));
    }

    #[test]
    fn symbols_do_not_order() {
        let e = Expr::cmp(CmpOp::Lt, Expr::param("d"), Expr::Sym("tea".into()));
        let p = regs(&[("d", Value::sym("coffee"))]);
        assert!(matches!(
            e.eval_truth(&BTreeMap::new(), &p),
            Err(EvalError::Type(_))
        ));
    }

    #[test]
    fn rendering_respects_precedence() {
        let e = Expr::mul(
            Expr::add(Expr::reg("a"), Expr::Int(1)),
            Expr::reg("b"),
        );
        assert_eq!(e.to_string(), "(a + 1) * b");
        let e2 = Expr::add(Expr::reg("a"), Expr::mul(Expr::Int(2), Expr::reg("b")));
        assert_eq!(e2.to_string(), "a + 2 * b");
        let g = Expr::cmp(CmpOp::Ge, Expr::reg("b"), Expr::Int(100));
        assert_eq!(g.to_string(), "b >= 100");
    }

    #[test]
    fn render_with_last_escape() {
        let e = Expr::add(Expr::reg("i"), Expr::param("i"));
        let shadowed = e.render(&|name| name == "i");
        assert_eq!(shadowed, "last(i) + i");
    }

    #[test]
    fn register_and_parameter_collection() {
        let e = Expr::And(
            Box::new(Expr::cmp(CmpOp::Ge, Expr::reg("ra"), Expr::reg("rb"))),
            Box::new(Expr::cmp(CmpOp::Lt, Expr::param("x"), Expr::Int(3))),
        );
        let mut rs = Vec::new();
        e.registers(&mut rs);
        assert_eq!(rs, vec!["ra".to_string(), "rb".to_string()]);
        let mut ps = Vec::new();
        e.parameters(&mut ps);
        assert_eq!(ps, vec!["x".to_string()]);
    }
}
