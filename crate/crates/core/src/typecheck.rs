//! Syntax-directed type checking for values and computations.
//!
//! Every construct either synthesizes its type from its parts or carries an
//! ascription (injections, `roll`, empty case, lambda parameters), so checking
//! is synthesis followed by α-equality of types. Recursive types are
//! iso-recursive: `μα.τ` is only ever unfolded by an explicit `unroll`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Comp, Ty, Val};

/// Typing context: term variables (later entries shadow earlier ones) and the
/// type variables in scope.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ctx {
    vars: Vec<(String, Ty)>,
    ty_vars: Vec<String>,
}

impl Ctx {
    pub fn new() -> Ctx {
        Ctx::default()
    }

    pub fn from_bindings<I, S>(bindings: I) -> Ctx
    where
        I: IntoIterator<Item = (S, Ty)>,
        S: Into<String>,
    {
        Ctx {
            vars: bindings.into_iter().map(|(x, t)| (x.into(), t)).collect(),
            ty_vars: Vec::new(),
        }
    }

    pub fn with(&self, x: impl Into<String>, ty: Ty) -> Ctx {
        let mut out = self.clone();
        out.push(x, ty);
        out
    }

    pub fn push(&mut self, x: impl Into<String>, ty: Ty) {
        self.vars.push((x.into(), ty));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn with_ty_var(&self, a: impl Into<String>) -> Ctx {
        let mut out = self.clone();
        out.ty_vars.push(a.into());
        out
    }

    pub fn lookup(&self, x: &str) -> Option<&Ty> {
        self.vars.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn bindings(&self) -> &[(String, Ty)] {
        &self.vars
    }

    pub fn ty_vars(&self) -> &[String] {
        &self.ty_vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TypeErrorKind {
    #[error("expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("unbound type variable `{0}`")]
    UnboundTyVar(String),
    #[error("`{op}` expects {expected} argument(s), found {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
}

/// A typing failure, located by a path of syntax-node labels from the root of
/// the checked term.
#[derive(Clone, Debug, PartialEq, Error)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    path: Vec<&'static str>,
}

impl TypeError {
    pub fn new(kind: TypeErrorKind) -> TypeError {
        TypeError {
            kind,
            path: Vec::new(),
        }
    }

    fn mismatch(expected: impl fmt::Display, found: impl fmt::Display) -> TypeError {
        TypeError::new(TypeErrorKind::Mismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }

    fn at(mut self, segment: &'static str) -> TypeError {
        self.path.push(segment);
        self
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self.kind {
            TypeErrorKind::Mismatch { .. } => "TYPE_MISMATCH",
            TypeErrorKind::UnboundVar(_) => "UNBOUND_VAR",
            TypeErrorKind::UnboundTyVar(_) => "UNBOUND_TYVAR",
            TypeErrorKind::Arity { .. } => "ARITY",
        }
    }

    /// Dotted path from the root, e.g. `body.bind.rest.case.left`.
    pub fn location(&self) -> String {
        let mut segs: Vec<&str> = self.path.iter().rev().copied().collect();
        if segs.is_empty() {
            segs.push("root");
        }
        segs.join(".")
    }

    pub fn diagnostic(&self) -> Diagnostic {
        Diagnostic {
            code: self.code(),
            message: self.kind.to_string(),
            location: self.location(),
        }
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code(), self.location(), self.kind)
    }
}

/// Serializable form used in JSON diagnostics.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    pub location: String,
}

type Result<T> = std::result::Result<T, TypeError>;

/// Every type variable in `ty` must be in `delta` or bound by an enclosing `μ`.
pub fn kind_check(delta: &[String], ty: &Ty) -> Result<()> {
    match ty.free_ty_vars().into_iter().find(|a| !delta.contains(a)) {
        Some(a) => Err(TypeError::new(TypeErrorKind::UnboundTyVar(a))),
        None => Ok(()),
    }
}

pub fn is_first_order(ty: &Ty) -> bool {
    ty.is_first_order()
}

fn expect_eq(expected: &Ty, found: &Ty) -> Result<()> {
    if expected.alpha_eq(found) {
        Ok(())
    } else {
        Err(TypeError::mismatch(expected, found))
    }
}

pub fn check_val(ctx: &Ctx, v: &Val, ty: &Ty) -> Result<()> {
    let found = synth_val(ctx, v)?;
    expect_eq(ty, &found)
}

pub fn check_comp(ctx: &Ctx, t: &Comp, ty: &Ty) -> Result<()> {
    let found = synth_comp(ctx, t)?;
    expect_eq(ty, &found)
}

/// The unique type of `v` in `ctx`.
pub fn synth_val(ctx: &Ctx, v: &Val) -> Result<Ty> {
    match v {
        Val::Var(x) => ctx
            .lookup(x)
            .cloned()
            .ok_or_else(|| TypeError::new(TypeErrorKind::UnboundVar(x.clone()))),
        Val::Const(c) => {
            if c.is_finite() {
                Ok(Ty::Real)
            } else {
                Err(TypeError::mismatch("a finite real literal", c))
            }
        }
        Val::Unit => Ok(Ty::Unit),
        Val::Inl(p, asc) | Val::Inr(p, asc) => {
            kind_check(ctx.ty_vars(), asc).map_err(|e| e.at("ascription"))?;
            let Ty::Sum(l, r) = asc else {
                return Err(TypeError::mismatch("a sum type", asc));
            };
            let payload = if matches!(v, Val::Inl(..)) { l } else { r };
            check_val(ctx, p, payload).map_err(|e| e.at("inj"))?;
            Ok(asc.clone())
        }
        Val::Pair(a, b) => {
            let ta = synth_val(ctx, a).map_err(|e| e.at("fst"))?;
            let tb = synth_val(ctx, b).map_err(|e| e.at("snd"))?;
            Ok(Ty::prod(ta, tb))
        }
        Val::Lam(x, param, body) => {
            kind_check(ctx.ty_vars(), param).map_err(|e| e.at("param"))?;
            let result = synth_comp(&ctx.with(x.clone(), param.clone()), body)
                .map_err(|e| e.at("lam"))?;
            Ok(Ty::arrow(param.clone(), result))
        }
        Val::Roll(p, asc) => {
            kind_check(ctx.ty_vars(), asc).map_err(|e| e.at("ascription"))?;
            let unfolded = asc
                .unfold()
                .ok_or_else(|| TypeError::mismatch("a recursive type", asc))?;
            check_val(ctx, p, &unfolded).map_err(|e| e.at("roll"))?;
            Ok(asc.clone())
        }
    }
}

/// The unique type of `t` in `ctx`.
pub fn synth_comp(ctx: &Ctx, t: &Comp) -> Result<Ty> {
    match t {
        Comp::Return(v) => synth_val(ctx, v).map_err(|e| e.at("return")),
        Comp::Bind(x, first, rest) => {
            let tx = synth_comp(ctx, first).map_err(|e| e.at("bind.first"))?;
            synth_comp(&ctx.with(x.clone(), tx), rest).map_err(|e| e.at("bind.rest"))
        }
        Comp::CaseVoid(v, result) => {
            check_val(ctx, v, &Ty::Void).map_err(|e| e.at("absurd"))?;
            kind_check(ctx.ty_vars(), result).map_err(|e| e.at("absurd"))?;
            Ok(result.clone())
        }
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => {
            let ts = synth_val(ctx, scrutinee).map_err(|e| e.at("case.scrutinee"))?;
            let Ty::Sum(l, r) = ts else {
                return Err(TypeError::mismatch("a sum type", ts).at("case.scrutinee"));
            };
            let tl = synth_comp(&ctx.with(left_var.clone(), (*l).clone()), left)
                .map_err(|e| e.at("case.left"))?;
            let tr = synth_comp(&ctx.with(right_var.clone(), (*r).clone()), right)
                .map_err(|e| e.at("case.right"))?;
            expect_eq(&tl, &tr).map_err(|e| e.at("case.right"))?;
            Ok(tl)
        }
        Comp::CaseUnit(v, body) => {
            check_val(ctx, v, &Ty::Unit).map_err(|e| e.at("case.scrutinee"))?;
            synth_comp(ctx, body).map_err(|e| e.at("case.body"))
        }
        Comp::CasePair {
            scrutinee,
            fst,
            snd,
            body,
        } => {
            let ts = synth_val(ctx, scrutinee).map_err(|e| e.at("case.scrutinee"))?;
            let Ty::Prod(a, b) = ts else {
                return Err(TypeError::mismatch("a product type", ts).at("case.scrutinee"));
            };
            let inner = ctx.with(fst.clone(), (*a).clone()).with(snd.clone(), (*b).clone());
            synth_comp(&inner, body).map_err(|e| e.at("case.body"))
        }
        Comp::App(f, a) => {
            let tf = synth_val(ctx, f).map_err(|e| e.at("app.fn"))?;
            let Ty::Arrow(dom, cod) = tf else {
                return Err(TypeError::mismatch("a function type", tf).at("app.fn"));
            };
            check_val(ctx, a, &dom).map_err(|e| e.at("app.arg"))?;
            Ok((*cod).clone())
        }
        Comp::Prim(op, args) => {
            if args.len() != op.arity() {
                return Err(TypeError::new(TypeErrorKind::Arity {
                    op: op.name(),
                    expected: op.arity(),
                    found: args.len(),
                }));
            }
            for a in args {
                check_val(ctx, a, &Ty::Real).map_err(|e| e.at("op.arg"))?;
            }
            Ok(Ty::Real)
        }
        Comp::Sign(v) => {
            check_val(ctx, v, &Ty::Real).map_err(|e| e.at("sign"))?;
            Ok(Ty::bool())
        }
        Comp::Iterate { body, var, start } => {
            let state = synth_val(ctx, start).map_err(|e| e.at("iterate.start"))?;
            let tb = synth_comp(&ctx.with(var.clone(), state.clone()), body)
                .map_err(|e| e.at("iterate.body"))?;
            let Ty::Sum(again, done) = tb else {
                return Err(TypeError::mismatch(
                    format!("{state} + <result>"),
                    tb,
                )
                .at("iterate.body"));
            };
            expect_eq(&state, &again).map_err(|e| e.at("iterate.body"))?;
            Ok((*done).clone())
        }
        Comp::CaseRoll {
            scrutinee,
            var,
            body,
        } => {
            let ts = synth_val(ctx, scrutinee).map_err(|e| e.at("unroll.scrutinee"))?;
            let unfolded = ts.unfold().ok_or_else(|| {
                TypeError::mismatch("a recursive type", &ts).at("unroll.scrutinee")
            })?;
            synth_comp(&ctx.with(var.clone(), unfolded), body).map_err(|e| e.at("unroll.body"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::Prim;

    fn list() -> Ty {
        Ty::real_list()
    }

    #[test]
    fn kind_check_examples() {
        assert!(kind_check(&[], &list()).is_ok());
        let err = kind_check(&[], &Ty::var("b")).unwrap_err();
        assert_eq!(err.kind, TypeErrorKind::UnboundTyVar("b".into()));
        assert_eq!(err.code(), "UNBOUND_TYVAR");
        assert!(kind_check(&["a".into()], &Ty::arrow(Ty::var("a"), Ty::Real)).is_ok());
    }

    #[test]
    fn check_val_examples() {
        assert!(check_val(&Ctx::new(), &Val::Const(3.0), &Ty::Real).is_ok());
        let ctx = Ctx::new().with("x", Ty::Real);
        let sum = Ty::sum(Ty::Real, Ty::Unit);
        assert!(check_val(&ctx, &Val::inl(Val::var("x"), sum.clone()), &sum).is_ok());
        let l = list();
        let body = l.unfold().unwrap();
        let nil = Val::roll(Val::inl(Val::Unit, body), l.clone());
        assert!(check_val(&Ctx::new(), &nil, &l).is_ok());
        // the binder name of the mu type is irrelevant
        let renamed = Ty::mu("b", Ty::sum(Ty::Unit, Ty::prod(Ty::Real, Ty::var("b"))));
        assert!(check_val(&Ctx::new(), &nil, &renamed).is_ok());
    }

    #[test]
    fn check_comp_examples() {
        let ctx = Ctx::new().with("x", Ty::Real);
        assert!(check_comp(&ctx, &Comp::Sign(Val::var("x")), &Ty::bool()).is_ok());

        let rr = Ty::sum(Ty::Real, Ty::Real);
        let body = Comp::bind(
            "y",
            Comp::Prim(Prim::Sub, vec![Val::var("x0"), Val::Const(1.0)]),
            Comp::bind(
                "z",
                Comp::Sign(Val::var("y")),
                Comp::case_sum(
                    Val::var("z"),
                    "_",
                    Comp::Return(Val::inr(Val::var("x0"), rr.clone())),
                    "_",
                    Comp::Return(Val::inl(Val::var("x0"), rr.clone())),
                ),
            ),
        );
        let it = Comp::iterate(body, "x0", Val::var("x"));
        assert!(check_comp(&ctx, &it, &Ty::Real).is_ok());

        let err = check_comp(&Ctx::new(), &Comp::Prim(Prim::Mul, vec![Val::Const(2.0)]), &Ty::Real)
            .unwrap_err();
        assert_eq!(err.code(), "ARITY");
    }

    #[test]
    fn errors_carry_codes_and_locations() {
        let t = Comp::bind("a", Comp::Return(Val::Unit), Comp::Sign(Val::var("a")));
        let err = check_comp(&Ctx::new(), &t, &Ty::bool()).unwrap_err();
        assert_eq!(err.code(), "TYPE_MISMATCH");
        assert_eq!(err.location(), "bind.rest.sign");

        let err = check_comp(&Ctx::new(), &Comp::Return(Val::var("q")), &Ty::Real).unwrap_err();
        assert_eq!(err.code(), "UNBOUND_VAR");
    }

    #[test]
    fn injection_ascription_must_be_a_sum() {
        let v = Val::inl(Val::Unit, Ty::Real);
        assert!(synth_val(&Ctx::new(), &v).is_err());
        let r = Val::roll(Val::Unit, Ty::Unit);
        assert!(synth_val(&Ctx::new(), &r).is_err());
    }

    #[test]
    fn first_order() {
        assert!(is_first_order(&Ty::prod(Ty::Real, Ty::sum(Ty::Unit, Ty::Real))));
        assert!(!is_first_order(&Ty::arrow(Ty::Real, Ty::Real)));
        assert!(is_first_order(&list()));
        assert!(!is_first_order(&Ty::mu("a", Ty::arrow(Ty::Unit, Ty::var("a")))));
    }

    #[test]
    fn case_branches_must_agree() {
        let t = Comp::case_sum(
            Val::inl(Val::Unit, Ty::bool()),
            "a",
            Comp::Return(Val::Unit),
            "b",
            Comp::Return(Val::Const(1.0)),
        );
        assert!(synth_comp(&Ctx::new(), &t).is_err());
    }
}
