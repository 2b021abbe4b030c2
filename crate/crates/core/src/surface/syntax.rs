use serde::Serialize;

use crate::ast::Ty;
use crate::ops::Prim;

/// 1-based source position of the first character of a node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// Coarse-grain surface term. Equality ignores spans.
#[derive(Clone, Debug)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        self.kind == other.kind
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TermKind {
    Var(String),
    Lit(f64),
    Unit,
    Inl(Option<Ty>, Box<Term>),
    Inr(Option<Ty>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    Fun(String, Ty, Box<Term>),
    Roll(Option<Ty>, Box<Term>),
    /// Primitive application, including 0-ary `const(c)`.
    Op(Prim, Vec<Term>),
    CaseVoid(Box<Term>, Ty),
    CaseSum {
        scrutinee: Box<Term>,
        left_var: String,
        left: Box<Term>,
        right_var: String,
        right: Box<Term>,
    },
    CaseUnit(Box<Term>, Box<Term>),
    CasePair {
        scrutinee: Box<Term>,
        fst: String,
        snd: String,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    Iterate {
        body: Box<Term>,
        var: String,
        start: Box<Term>,
    },
    Sign(Box<Term>),
    Unroll {
        scrutinee: Box<Term>,
        var: String,
        body: Box<Term>,
    },
    /// `rec f : τ -> σ = body`; the ascription is always a function type.
    Rec {
        name: String,
        ty: Ty,
        body: Box<Term>,
    },
    Let(String, Box<Term>, Box<Term>),
    /// Conditional on a `unit + unit` scrutinee; `inl` selects `then`.
    If(Box<Term>, Box<Term>, Box<Term>),
    /// Real conditional through `sign`: `then` when the scrutinee is positive.
    IfPos(Box<Term>, Box<Term>, Box<Term>),
    /// `a < b`, of type `unit + unit`, undefined when `a = b`.
    Less(Box<Term>, Box<Term>),
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Term {
        Term { kind, span }
    }

    /// A node with a default span, for generated syntax.
    pub fn synth(kind: TermKind) -> Term {
        Term {
            kind,
            span: Span::default(),
        }
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::synth(TermKind::Var(name.into()))
    }

    /// Every identifier occurring in the term, bound or free.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents(&self, out: &mut Vec<String>) {
        use TermKind::*;
        match &self.kind {
            Var(x) => out.push(x.clone()),
            Lit(_) | Unit => {}
            Inl(_, t) | Inr(_, t) | Roll(_, t) | Sign(t) | CaseVoid(t, _) => t.collect_idents(out),
            Pair(a, b) | App(a, b) | CaseUnit(a, b) | Less(a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Fun(x, _, t) => {
                out.push(x.clone());
                t.collect_idents(out);
            }
            Op(_, args) => args.iter().for_each(|a| a.collect_idents(out)),
            CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                scrutinee.collect_idents(out);
                out.push(left_var.clone());
                out.push(right_var.clone());
                left.collect_idents(out);
                right.collect_idents(out);
            }
            CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => {
                scrutinee.collect_idents(out);
                out.push(fst.clone());
                out.push(snd.clone());
                body.collect_idents(out);
            }
            Iterate { body, var, start } => {
                out.push(var.clone());
                body.collect_idents(out);
                start.collect_idents(out);
            }
            Unroll {
                scrutinee,
                var,
                body,
            } => {
                out.push(var.clone());
                scrutinee.collect_idents(out);
                body.collect_idents(out);
            }
            Rec { name, body, .. } => {
                out.push(name.clone());
                body.collect_idents(out);
            }
            Let(x, a, b) => {
                out.push(x.clone());
                a.collect_idents(out);
                b.collect_idents(out);
            }
            If(c, a, b) | IfPos(c, a, b) => {
                c.collect_idents(out);
                a.collect_idents(out);
                b.collect_idents(out);
            }
        }
    }
}

/// A parsed program: typed parameters, declared result type and a body.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceProgram {
    pub params: Vec<(String, Ty)>,
    pub ret: Ty,
    pub body: Term,
}
