//! The forward-mode AD macro ⅅ on types, contexts, values and computations.
//!
//! ⅅ sends `real` to `real × real` (primal, tangent) and is homomorphic on
//! every other type former, including `μ`. On terms it is structural except
//! at primitive operations, which pair their result with the chain-rule
//! tangent, and at `sign`, which inspects only the primal.

use crate::ast::{Comp, Fresh, Ty, Val};
use crate::ops::{template_var, Prim};
use crate::program::Program;
use crate::typecheck::Ctx;

pub fn d_type(ty: &Ty) -> Ty {
    match ty {
        Ty::Real => Ty::prod(Ty::Real, Ty::Real),
        Ty::Unit | Ty::Void | Ty::Var(_) => ty.clone(),
        Ty::Sum(a, b) => Ty::sum(d_type(a), d_type(b)),
        Ty::Prod(a, b) => Ty::prod(d_type(a), d_type(b)),
        Ty::Arrow(a, b) => Ty::arrow(d_type(a), d_type(b)),
        Ty::Mu(a, body) => Ty::mu(a.clone(), d_type(body)),
    }
}

/// Pointwise [`d_type`], keeping names, order and type variables.
pub fn d_ctx(ctx: &Ctx) -> Ctx {
    let mut out = Ctx::from_bindings(ctx.bindings().iter().map(|(x, t)| (x.clone(), d_type(t))));
    for a in ctx.ty_vars() {
        out = out.with_ty_var(a.clone());
    }
    out
}

pub fn d_val(v: &Val) -> Val {
    Macro::new(v.identifiers()).val(v)
}

/// ⅅ on a computation. Fresh names avoid every identifier of `t` and are
/// numbered deterministically, so the output is stable across runs.
pub fn d_comp(t: &Comp) -> Comp {
    Macro::new(t.identifiers()).comp(t)
}

/// Transforms a whole program: parameters and result type go through
/// [`d_type`], the body through [`d_comp`].
pub fn d_program(p: &Program) -> Program {
    let mut m = Macro::new(p.body.identifiers());
    m.fresh.reserve_all(p.params.iter().map(|(x, _)| x.clone()));
    Program {
        params: p.params.iter().map(|(x, t)| (x.clone(), d_type(t))).collect(),
        ret: d_type(&p.ret),
        body: m.comp(&p.body),
    }
}

struct Macro {
    fresh: Fresh,
}

impl Macro {
    fn new(used: std::collections::HashSet<String>) -> Macro {
        Macro {
            fresh: Fresh::with_used(used),
        }
    }

    fn val(&mut self, v: &Val) -> Val {
        match v {
            Val::Var(_) | Val::Unit => v.clone(),
            // literals elaborate to values, so they need a rule of their own
            Val::Const(c) => Val::pair(Val::Const(*c), Val::Const(0.0)),
            Val::Inl(p, ty) => Val::inl(self.val(p), d_type(ty)),
            Val::Inr(p, ty) => Val::inr(self.val(p), d_type(ty)),
            Val::Roll(p, ty) => Val::roll(self.val(p), d_type(ty)),
            Val::Pair(a, b) => Val::pair(self.val(a), self.val(b)),
            Val::Lam(x, ty, body) => Val::lam(x.clone(), d_type(ty), self.comp(body)),
        }
    }

    fn comp(&mut self, t: &Comp) -> Comp {
        match t {
            Comp::Return(v) => Comp::Return(self.val(v)),
            Comp::Bind(x, first, rest) => Comp::bind(x.clone(), self.comp(first), self.comp(rest)),
            Comp::CaseVoid(v, ty) => Comp::CaseVoid(self.val(v), d_type(ty)),
            Comp::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => Comp::case_sum(
                self.val(scrutinee),
                left_var.clone(),
                self.comp(left),
                right_var.clone(),
                self.comp(right),
            ),
            Comp::CaseUnit(v, body) => Comp::CaseUnit(self.val(v), Box::new(self.comp(body))),
            Comp::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => Comp::case_pair(self.val(scrutinee), fst.clone(), snd.clone(), self.comp(body)),
            Comp::App(f, a) => Comp::App(self.val(f), self.val(a)),
            Comp::Prim(op, args) => self.op(*op, args),
            Comp::Sign(v) => {
                let scrutinee = self.val(v);
                let x = self.fresh.name("x");
                let dx = self.fresh.name("dx");
                Comp::case_pair(scrutinee, x.clone(), dx, Comp::Sign(Val::Var(x)))
            }
            Comp::Iterate { body, var, start } => {
                Comp::iterate(self.comp(body), var.clone(), self.val(start))
            }
            Comp::CaseRoll {
                scrutinee,
                var,
                body,
            } => Comp::case_roll(self.val(scrutinee), var.clone(), self.comp(body)),
        }
    }

    /// ```text
    /// case ⅅv₁ of (x₁, x₁') → … case ⅅvₙ of (xₙ, xₙ') →
    /// y ← op(x₁, …, xₙ); z₁ ← ∂₁op; …; zₙ ← ∂ₙop;
    /// return ⟨y, ((x₁'·z₁) + x₂'·z₂) + …⟩
    /// ```
    fn op(&mut self, op: Prim, args: &[Val]) -> Comp {
        let dargs: Vec<Val> = args.iter().map(|a| self.val(a)).collect();
        let mut splits = Vec::new();
        for _ in args {
            splits.push((self.fresh.name("x"), self.fresh.name("dx")));
        }
        let y = self.fresh.name("y");
        let inst: Vec<(String, Val)> = splits
            .iter()
            .enumerate()
            .map(|(i, (x, _))| (template_var(i + 1), Val::var(x.clone())))
            .collect();
        let mut partials = Vec::new();
        for i in 1..=args.len() {
            let template = op.partial(i).expect("index within arity");
            let body = self.rename_binders(&template).subst_many(&inst);
            partials.push((self.fresh.name("z"), body));
        }
        // tangent accumulation, innermost bind last
        let mut tail_binds: Vec<(String, Comp)> = Vec::new();
        let mut acc: Option<Val> = None;
        for ((_, dx), (z, _)) in splits.iter().zip(&partials) {
            let m = self.fresh.name("m");
            tail_binds.push((
                m.clone(),
                Comp::Prim(Prim::Mul, vec![Val::var(dx.clone()), Val::var(z.clone())]),
            ));
            acc = Some(match acc {
                None => Val::var(m),
                Some(prev) => {
                    let s = self.fresh.name("s");
                    tail_binds.push((s.clone(), Comp::Prim(Prim::Add, vec![prev, Val::var(m)])));
                    Val::var(s)
                }
            });
        }
        let tangent = acc.unwrap_or(Val::Const(0.0));
        let mut out = Comp::Return(Val::pair(Val::var(y.clone()), tangent));
        for (x, rhs) in tail_binds.into_iter().rev() {
            out = Comp::bind(x, rhs, out);
        }
        for (z, body) in partials.into_iter().rev() {
            out = Comp::bind(z, body, out);
        }
        let primals = splits.iter().map(|(x, _)| Val::var(x.clone())).collect();
        out = Comp::bind(y, Comp::Prim(op, primals), out);
        for (d, (x, dx)) in dargs.into_iter().zip(splits).rev() {
            out = Comp::case_pair(d, x, dx, out);
        }
        out
    }

    /// Gives the internal binders of a derivative template fresh names so
    /// that macro output never repeats a binder.
    fn rename_binders(&mut self, t: &Comp) -> Comp {
        match t {
            Comp::Bind(b, first, rest) => {
                let n = self.fresh.name(b);
                let rest = rest.subst(b, &Val::var(n.clone()));
                Comp::bind(n, self.rename_binders(first), self.rename_binders(&rest))
            }
            other => other.clone(),
        }
    }
}

/// Applies the let-return β-law `(x ← return v; t) = t[v/x]` everywhere.
pub fn beta_simplify(t: &Comp) -> Comp {
    let go = beta_simplify;
    let gv = beta_simplify_val;
    match t {
        Comp::Bind(x, first, rest) => {
            let first = go(first);
            let rest = go(rest);
            match first {
                Comp::Return(v) => rest.subst(x, &v),
                first => Comp::bind(x.clone(), first, rest),
            }
        }
        Comp::Return(v) => Comp::Return(gv(v)),
        Comp::CaseVoid(v, ty) => Comp::CaseVoid(gv(v), ty.clone()),
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => Comp::case_sum(gv(scrutinee), left_var.clone(), go(left), right_var.clone(), go(right)),
        Comp::CaseUnit(v, body) => Comp::CaseUnit(gv(v), Box::new(go(body))),
        Comp::CasePair {
            scrutinee,
            fst,
            snd,
            body,
        } => Comp::case_pair(gv(scrutinee), fst.clone(), snd.clone(), go(body)),
        Comp::App(f, a) => Comp::App(gv(f), gv(a)),
        Comp::Prim(op, args) => Comp::Prim(*op, args.iter().map(gv).collect()),
        Comp::Sign(v) => Comp::Sign(gv(v)),
        Comp::Iterate { body, var, start } => Comp::iterate(go(body), var.clone(), gv(start)),
        Comp::CaseRoll {
            scrutinee,
            var,
            body,
        } => Comp::case_roll(gv(scrutinee), var.clone(), go(body)),
    }
}

fn beta_simplify_val(v: &Val) -> Val {
    match v {
        Val::Var(_) | Val::Const(_) | Val::Unit => v.clone(),
        Val::Inl(p, ty) => Val::inl(beta_simplify_val(p), ty.clone()),
        Val::Inr(p, ty) => Val::inr(beta_simplify_val(p), ty.clone()),
        Val::Roll(p, ty) => Val::roll(beta_simplify_val(p), ty.clone()),
        Val::Pair(a, b) => Val::pair(beta_simplify_val(a), beta_simplify_val(b)),
        Val::Lam(x, ty, body) => Val::lam(x.clone(), ty.clone(), beta_simplify(body)),
    }
}

pub fn beta_simplify_program(p: &Program) -> Program {
    Program {
        params: p.params.clone(),
        ret: p.ret.clone(),
        body: beta_simplify(&p.body),
    }
}
