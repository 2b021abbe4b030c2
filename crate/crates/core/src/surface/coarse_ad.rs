//! Forward-mode AD directly on coarse-grain surface terms.
//!
//! Elaborating its output agrees with applying [`crate::ad::d_comp`] to the
//! elaborated input, up to let-return β and associativity of binds. Sugar
//! without a row of its own (`if`, `ifpos`, `<`) is differentiated through
//! its definition, and `sign` first projects the primal out of the pair.

use super::print::lift_comp;
use super::syntax::{Term, TermKind};
use crate::ad::d_type;
use crate::ast::{Fresh, Val};
use crate::ops::{template_var, Prim};

pub fn d_surface(t: &Term) -> Term {
    let mut fresh = Fresh::default();
    fresh.reserve_all(t.identifiers());
    CoarseAd { fresh }.term(t)
}

struct CoarseAd {
    fresh: Fresh,
}

fn node(kind: TermKind) -> Box<Term> {
    Box::new(Term::synth(kind))
}

impl CoarseAd {
    fn b(&mut self, t: &Term) -> Box<Term> {
        Box::new(self.term(t))
    }

    /// `case ⅅt of (x, _) -> k(x)`
    fn primal(&mut self, t: &Term, k: impl FnOnce(&mut Self, Term) -> Term) -> Term {
        let x = self.fresh.name("x");
        let dropped = self.fresh.name("dx");
        let scrutinee = self.b(t);
        let body = k(self, Term::var(x.clone()));
        Term::synth(TermKind::CasePair {
            scrutinee,
            fst: x,
            snd: dropped,
            body: Box::new(body),
        })
    }

    fn term(&mut self, t: &Term) -> Term {
        use TermKind as K;
        let kind = match &t.kind {
            K::Var(x) => K::Var(x.clone()),
            K::Lit(c) => K::Pair(node(K::Lit(*c)), node(K::Lit(0.0))),
            K::Unit => K::Unit,
            K::Inl(asc, p) => K::Inl(asc.as_ref().map(d_type), self.b(p)),
            K::Inr(asc, p) => K::Inr(asc.as_ref().map(d_type), self.b(p)),
            K::Roll(asc, p) => K::Roll(asc.as_ref().map(d_type), self.b(p)),
            K::Pair(a, b) => K::Pair(self.b(a), self.b(b)),
            K::Fun(x, ty, body) => K::Fun(x.clone(), d_type(ty), self.b(body)),
            K::Op(op, args) => return self.op(*op, args),
            K::CaseVoid(s, ty) => K::CaseVoid(self.b(s), d_type(ty)),
            K::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => K::CaseSum {
                scrutinee: self.b(scrutinee),
                left_var: left_var.clone(),
                left: self.b(left),
                right_var: right_var.clone(),
                right: self.b(right),
            },
            K::CaseUnit(s, body) => K::CaseUnit(self.b(s), self.b(body)),
            K::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => K::CasePair {
                scrutinee: self.b(scrutinee),
                fst: fst.clone(),
                snd: snd.clone(),
                body: self.b(body),
            },
            K::App(f, a) => K::App(self.b(f), self.b(a)),
            K::Iterate { body, var, start } => K::Iterate {
                body: self.b(body),
                var: var.clone(),
                start: self.b(start),
            },
            K::Sign(s) => return self.primal(s, |_, x| Term::synth(K::Sign(Box::new(x)))),
            K::Unroll {
                scrutinee,
                var,
                body,
            } => K::Unroll {
                scrutinee: self.b(scrutinee),
                var: var.clone(),
                body: self.b(body),
            },
            K::Rec { name, ty, body } => K::Rec {
                name: name.clone(),
                ty: d_type(ty),
                body: self.b(body),
            },
            K::Let(x, a, b) => K::Let(x.clone(), self.b(a), self.b(b)),
            K::If(c, a, b) => K::If(self.b(c), self.b(a), self.b(b)),
            K::IfPos(v, a, b) => {
                let cond = Term::synth(K::Sign(v.clone()));
                K::If(self.b(&cond), self.b(a), self.b(b))
            }
            // a < b  :=  let p = a in let q = b in let d = q - p in sign d
            K::Less(a, b) => {
                let p = self.fresh.name("p");
                let q = self.fresh.name("q");
                let d = self.fresh.name("d");
                let diff = Term::synth(K::Op(Prim::Sub, vec![Term::var(q.clone()), Term::var(p.clone())]));
                let sign = Term::synth(K::Sign(Box::new(Term::var(d.clone()))));
                let def = let_in(p, (**a).clone(), let_in(q, (**b).clone(), let_in(d, diff, sign)));
                return self.term(&def);
            }
        };
        Term::synth(kind)
    }

    /// ```text
    /// let a₁ = ⅅt₁ in … let aₙ = ⅅtₙ in
    /// case a₁ of (x₁, x₁') -> … case aₙ of (xₙ, xₙ') ->
    /// let y = op(x₁, …, xₙ) in let z₁ = ∂₁op in … let m₁ = x₁' * z₁ in …
    /// (y, ((m₁ + m₂) + …))
    /// ```
    fn op(&mut self, op: Prim, args: &[Term]) -> Term {
        let mut lets = Vec::new();
        let mut splits = Vec::new();
        for a in args {
            let slot = self.fresh.name("a");
            lets.push((slot.clone(), self.term(a)));
            splits.push((slot, self.fresh.name("x"), self.fresh.name("dx")));
        }
        let y = self.fresh.name("y");
        let inst: Vec<(String, Val)> = splits
            .iter()
            .enumerate()
            .map(|(i, (_, x, _))| (template_var(i + 1), Val::var(x.clone())))
            .collect();
        let mut body_lets: Vec<(String, Term)> = vec![(
            y.clone(),
            Term::synth(TermKind::Op(
                op,
                splits.iter().map(|(_, x, _)| Term::var(x.clone())).collect(),
            )),
        )];
        let mut partials = Vec::new();
        for i in 1..=args.len() {
            let partial = op.partial(i).expect("index within arity").subst_many(&inst);
            let z = self.fresh.name("z");
            body_lets.push((z.clone(), lift_comp(&partial)));
            partials.push(z);
        }
        let mut acc: Option<Term> = None;
        for ((_, _, dx), z) in splits.iter().zip(&partials) {
            let m = self.fresh.name("m");
            body_lets.push((
                m.clone(),
                Term::synth(TermKind::Op(Prim::Mul, vec![Term::var(dx.clone()), Term::var(z.clone())])),
            ));
            acc = Some(match acc {
                None => Term::var(m),
                Some(prev) => {
                    let s = self.fresh.name("s");
                    body_lets.push((s.clone(), Term::synth(TermKind::Op(Prim::Add, vec![prev, Term::var(m)]))));
                    Term::var(s)
                }
            });
        }
        let tangent = acc.unwrap_or_else(|| Term::synth(TermKind::Lit(0.0)));
        let mut out = Term::synth(TermKind::Pair(Box::new(Term::var(y)), Box::new(tangent)));
        for (x, rhs) in body_lets.into_iter().rev() {
            out = let_in(x, rhs, out);
        }
        for (slot, x, dx) in splits.into_iter().rev() {
            out = Term::synth(TermKind::CasePair {
                scrutinee: Box::new(Term::var(slot)),
                fst: x,
                snd: dx,
                body: Box::new(out),
            });
        }
        for (slot, rhs) in lets.into_iter().rev() {
            out = let_in(slot, rhs, out);
        }
        out
    }
}

fn let_in(x: String, rhs: Term, body: Term) -> Term {
    Term::synth(TermKind::Let(x, Box::new(rhs), Box::new(body)))
}
