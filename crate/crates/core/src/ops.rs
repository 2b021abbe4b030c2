//! Registry of partial primitive operations.
//!
//! Each operation has an arity, a numeric evaluator defined on an open domain,
//! and for every argument position a fine-grain computation computing the
//! corresponding partial derivative. Derivative templates have free variables
//! `x1 … xn` of type `real`, which [`crate::ad`] instantiates by substitution.

use std::fmt;

use thiserror::Error;

use crate::ast::{Comp, Val};

/// A primitive operation. Real constants are the 0-ary operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prim {
    Const(f64),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Sigmoid,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("{op} is undefined at {args:?}")]
    Domain { op: String, args: Vec<f64> },
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("{op} expects {expected} argument(s), got {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("{op} has no partial derivative with index {index}")]
    IndexOutOfRange { op: String, index: usize },
}

/// Static description of a registered operation.
#[derive(Clone, Copy, Debug)]
pub struct OpSpec {
    pub name: &'static str,
    pub arity: usize,
    /// Human-readable description of the open domain of definition.
    pub domain: &'static str,
    eval: fn(&[f64]) -> f64,
    in_domain: fn(&[f64]) -> bool,
}

fn total(_: &[f64]) -> bool {
    true
}

const NAMED: [OpSpec; 8] = [
    OpSpec {
        name: "add",
        arity: 2,
        domain: "total",
        eval: |a| a[0] + a[1],
        in_domain: total,
    },
    OpSpec {
        name: "sub",
        arity: 2,
        domain: "total",
        eval: |a| a[0] - a[1],
        in_domain: total,
    },
    OpSpec {
        name: "mul",
        arity: 2,
        domain: "total",
        eval: |a| a[0] * a[1],
        in_domain: total,
    },
    OpSpec {
        name: "div",
        arity: 2,
        domain: "y != 0",
        eval: |a| a[0] / a[1],
        in_domain: |a| a[1] != 0.0,
    },
    OpSpec {
        name: "neg",
        arity: 1,
        domain: "total",
        eval: |a| -a[0],
        in_domain: total,
    },
    OpSpec {
        name: "exp",
        arity: 1,
        domain: "total",
        eval: |a| a[0].exp(),
        in_domain: total,
    },
    OpSpec {
        name: "log",
        arity: 1,
        domain: "x > 0",
        eval: |a| a[0].ln(),
        in_domain: |a| a[0] > 0.0,
    },
    OpSpec {
        name: "sigmoid",
        arity: 1,
        domain: "total",
        eval: |a| 1.0 / (1.0 + (-a[0]).exp()),
        in_domain: total,
    },
];

const CONST_SPEC: OpSpec = OpSpec {
    name: "const",
    arity: 0,
    domain: "total",
    eval: |_| 0.0,
    in_domain: total,
};

/// Summary row returned by [`registered_ops`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpSummary {
    pub name: String,
    pub arity: usize,
    pub domain: String,
}

impl Prim {
    /// Every named (non-constant) operation, in registry order.
    pub const NAMED: [Prim; 8] = [
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Div,
        Prim::Neg,
        Prim::Exp,
        Prim::Log,
        Prim::Sigmoid,
    ];

    pub fn spec(&self) -> &'static OpSpec {
        match self {
            Prim::Const(_) => &CONST_SPEC,
            Prim::Add => &NAMED[0],
            Prim::Sub => &NAMED[1],
            Prim::Mul => &NAMED[2],
            Prim::Div => &NAMED[3],
            Prim::Neg => &NAMED[4],
            Prim::Exp => &NAMED[5],
            Prim::Log => &NAMED[6],
            Prim::Sigmoid => &NAMED[7],
        }
    }

    pub fn arity(&self) -> usize {
        self.spec().arity
    }

    /// Registry name; constants are named `const_<c>`.
    pub fn name(&self) -> String {
        match self {
            Prim::Const(c) => format!("const_{c:?}"),
            other => other.spec().name.to_string(),
        }
    }

    /// Looks up a registry name, accepting `const_<c>` for any finite `c`.
    pub fn from_name(name: &str) -> Result<Prim, OpError> {
        if let Some(lit) = name.strip_prefix("const_") {
            return match lit.parse::<f64>() {
                Ok(c) if c.is_finite() => Ok(Prim::Const(c)),
                _ => Err(OpError::UnknownOp(name.to_string())),
            };
        }
        Prim::NAMED
            .iter()
            .copied()
            .find(|p| p.spec().name == name)
            .ok_or_else(|| OpError::UnknownOp(name.to_string()))
    }

    /// Structural identity; constants compare by bit pattern.
    pub fn same_as(&self, other: &Prim) -> bool {
        match (self, other) {
            (Prim::Const(a), Prim::Const(b)) => a.to_bits() == b.to_bits(),
            (a, b) => a == b,
        }
    }

    pub fn in_domain(&self, args: &[f64]) -> bool {
        args.len() == self.arity() && (self.spec().in_domain)(args)
    }

    pub fn summary(&self) -> OpSummary {
        OpSummary {
            name: self.name(),
            arity: self.arity(),
            domain: self.spec().domain.to_string(),
        }
    }

    /// Evaluates the operation. Out-of-domain arguments, as well as results
    /// that overflow to a non-finite value, are domain errors.
    pub fn eval(&self, args: &[f64]) -> Result<f64, OpError> {
        if args.len() != self.arity() {
            return Err(OpError::Arity {
                op: self.name(),
                expected: self.arity(),
                found: args.len(),
            });
        }
        let domain_error = || OpError::Domain {
            op: self.name(),
            args: args.to_vec(),
        };
        if !(self.spec().in_domain)(args) {
            return Err(domain_error());
        }
        let value = match self {
            Prim::Const(c) => *c,
            _ => (self.spec().eval)(args),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(domain_error())
        }
    }

    /// The `index`-th (1-based) partial derivative as a computation over the
    /// free variables `x1 … xn`.
    pub fn partial(&self, index: usize) -> Result<Comp, OpError> {
        if index == 0 || index > self.arity() {
            return Err(OpError::IndexOutOfRange {
                op: self.name(),
                index,
            });
        }
        let x = |i: usize| Val::Var(template_var(i));
        let ret = |c: f64| Comp::Return(Val::Const(c));
        Ok(match (self, index) {
            (Prim::Const(_), _) => unreachable!("constants have no arguments"),
            (Prim::Add, _) => ret(1.0),
            (Prim::Sub, 1) => ret(1.0),
            (Prim::Sub, _) => ret(-1.0),
            (Prim::Mul, 1) => Comp::Return(x(2)),
            (Prim::Mul, _) => Comp::Return(x(1)),
            (Prim::Div, 1) => Comp::Prim(Prim::Div, vec![Val::Const(1.0), x(2)]),
            (Prim::Div, _) => Comp::bind(
                "s",
                Comp::Prim(Prim::Mul, vec![x(2), x(2)]),
                Comp::bind(
                    "q",
                    Comp::Prim(Prim::Div, vec![x(1), Val::var("s")]),
                    Comp::Prim(Prim::Neg, vec![Val::var("q")]),
                ),
            ),
            (Prim::Neg, _) => ret(-1.0),
            (Prim::Exp, _) => Comp::Prim(Prim::Exp, vec![x(1)]),
            (Prim::Log, _) => Comp::Prim(Prim::Div, vec![Val::Const(1.0), x(1)]),
            (Prim::Sigmoid, _) => Comp::bind(
                "y",
                Comp::Prim(Prim::Sigmoid, vec![x(1)]),
                Comp::bind(
                    "z",
                    Comp::Prim(Prim::Sub, vec![Val::Const(1.0), Val::var("y")]),
                    Comp::Prim(Prim::Mul, vec![Val::var("y"), Val::var("z")]),
                ),
            ),
        })
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Name of the `i`-th (1-based) free variable of a derivative template.
pub fn template_var(i: usize) -> String {
    format!("x{i}")
}

/// Evaluates a registered operation by name.
pub fn op_eval(name: &str, args: &[f64]) -> Result<f64, OpError> {
    Prim::from_name(name)?.eval(args)
}

/// The registered partial-derivative computation `∂ᵢop`, 1-based.
pub fn op_partial(name: &str, index: usize) -> Result<Comp, OpError> {
    Prim::from_name(name)?.partial(index)
}

/// Deterministic listing of the built-in registry. The constant family is
/// listed once, schematically, as `const_c`.
pub fn registered_ops() -> Vec<OpSummary> {
    std::iter::once(OpSummary {
        name: "const_c".to_string(),
        arity: 0,
        domain: "total".to_string(),
    })
    .chain(Prim::NAMED.iter().map(Prim::summary))
    .collect()
}
