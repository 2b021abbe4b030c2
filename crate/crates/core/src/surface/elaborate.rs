//! Translation of coarse-grain surface terms into fine-grain computations.
//!
//! Every intermediate result is named by a fresh binder; fresh names avoid
//! every identifier of the input so user variables are never captured.

use super::syntax::{Span, SurfaceProgram, Term, TermKind};
use super::ElabError;
use crate::ast::{Comp, Fresh, Ty, Val};
use crate::desugar::rec_encoding;
use crate::ops::Prim;
use crate::program::Program;

pub struct Elaborator {
    fresh: Fresh,
}

type EResult<T> = Result<T, ElabError>;

impl Elaborator {
    /// An elaborator whose fresh names avoid every identifier in `terms`.
    pub fn avoiding<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Elaborator {
        let mut fresh = Fresh::default();
        for t in terms {
            fresh.reserve_all(t.identifiers());
        }
        Elaborator { fresh }
    }

    pub fn fresh_mut(&mut self) -> &mut Fresh {
        &mut self.fresh
    }

    fn ascribed(asc: &Option<Ty>, span: Span) -> EResult<Ty> {
        asc.clone().ok_or(ElabError::MissingAscription(span))
    }

    /// `x ← t†; k(x)`.
    fn bind_to(&mut self, hint: &str, t: &Term, k: impl FnOnce(&mut Self, Val) -> EResult<Comp>) -> EResult<Comp> {
        let first = self.comp(t)?;
        let x = self.fresh.name(hint);
        let rest = k(self, Val::Var(x.clone()))?;
        Ok(Comp::bind(x, first, rest))
    }

    pub fn comp(&mut self, t: &Term) -> EResult<Comp> {
        use TermKind as K;
        Ok(match &t.kind {
            K::Var(x) => Comp::Return(Val::Var(x.clone())),
            K::Lit(c) => Comp::Return(Val::Const(*c)),
            K::Unit => Comp::Return(Val::Unit),
            K::Inl(asc, p) => {
                let asc = Self::ascribed(asc, t.span)?;
                self.bind_to("x", p, |_, x| Ok(Comp::Return(Val::inl(x, asc))))?
            }
            K::Inr(asc, p) => {
                let asc = Self::ascribed(asc, t.span)?;
                self.bind_to("x", p, |_, x| Ok(Comp::Return(Val::inr(x, asc))))?
            }
            K::Roll(asc, p) => {
                let asc = Self::ascribed(asc, t.span)?;
                self.bind_to("x", p, |_, x| Ok(Comp::Return(Val::roll(x, asc))))?
            }
            K::Pair(a, b) => self.bind_to("x", a, |el, x| {
                el.bind_to("y", b, |_, y| Ok(Comp::Return(Val::pair(x, y))))
            })?,
            K::Fun(x, ty, body) => Comp::Return(Val::lam(x.clone(), ty.clone(), self.comp(body)?)),
            K::Op(op, args) => self.op(*op, args, Vec::new())?,
            K::CaseVoid(s, ty) => {
                let ty = ty.clone();
                self.bind_to("z", s, |_, z| Ok(Comp::CaseVoid(z, ty)))?
            }
            K::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => self.bind_to("z", scrutinee, |el, z| {
                Ok(Comp::case_sum(
                    z,
                    left_var.clone(),
                    el.comp(left)?,
                    right_var.clone(),
                    el.comp(right)?,
                ))
            })?,
            K::CaseUnit(s, body) => self.bind_to("z", s, |el, z| {
                Ok(Comp::CaseUnit(z, Box::new(el.comp(body)?)))
            })?,
            K::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => self.bind_to("z", scrutinee, |el, z| {
                Ok(Comp::case_pair(z, fst.clone(), snd.clone(), el.comp(body)?))
            })?,
            K::App(f, a) => self.bind_to("f", f, |el, f| {
                el.bind_to("a", a, |_, a| Ok(Comp::App(f, a)))
            })?,
            K::Iterate { body, var, start } => self.bind_to("s", start, |el, s| {
                Ok(Comp::iterate(el.comp(body)?, var.clone(), s))
            })?,
            K::Sign(s) => self.bind_to("x", s, |_, x| Ok(Comp::Sign(x)))?,
            K::Unroll {
                scrutinee,
                var,
                body,
            } => self.bind_to("r", scrutinee, |el, r| {
                Ok(Comp::case_roll(r, var.clone(), el.comp(body)?))
            })?,
            K::Rec { name, ty, body } => self.rec(name, ty, body)?,
            K::Let(x, rhs, body) => Comp::bind(x.clone(), self.comp(rhs)?, self.comp(body)?),
            K::If(c, a, b) => self.branch(c, a, b)?,
            K::IfPos(v, a, b) => {
                let cond = Term::new(TermKind::Sign(v.clone()), v.span);
                self.branch(&cond, a, b)?
            }
            K::Less(a, b) => self.bind_to("x", a, |el, x| {
                el.bind_to("y", b, |el, y| {
                    let d = el.fresh.name("d");
                    Ok(Comp::bind(
                        d.clone(),
                        Comp::Prim(Prim::Sub, vec![y, x]),
                        Comp::Sign(Val::Var(d)),
                    ))
                })
            })?,
        })
    }

    fn op(&mut self, op: Prim, rest: &[Term], mut done: Vec<Val>) -> EResult<Comp> {
        match rest.split_first() {
            None => Ok(Comp::Prim(op, done)),
            Some((first, rest)) => self.bind_to("x", first, |el, x| {
                done.push(x);
                el.op(op, rest, done)
            }),
        }
    }

    /// `w ← c†; case w of inl _ → a† | inr _ → b†`
    fn branch(&mut self, c: &Term, a: &Term, b: &Term) -> EResult<Comp> {
        self.bind_to("w", c, |el, w| {
            let then_var = el.fresh.name("u");
            let else_var = el.fresh.name("u");
            Ok(Comp::case_sum(w, then_var, el.comp(a)?, else_var, el.comp(b)?))
        })
    }

    /// Term recursion through a recursive type; see [`rec_encoding`].
    pub fn rec(&mut self, name: &str, ty: &Ty, body: &Term) -> EResult<Comp> {
        let body = self.comp(body)?;
        Ok(rec_encoding(&mut self.fresh, name, ty, body))
    }
}

/// Elaborates a closed or open surface term.
pub fn elaborate(t: &Term) -> Result<Comp, ElabError> {
    Elaborator::avoiding([t]).comp(t)
}

/// `rec f : ty = body`, elaborated on its own.
pub fn desugar_rec(name: &str, ty: &Ty, body: &Term) -> Result<Comp, ElabError> {
    let mut el = Elaborator::avoiding([body]);
    el.fresh_mut().reserve(name);
    el.rec(name, ty, body)
}

pub fn elaborate_program(p: &SurfaceProgram) -> Result<Program, ElabError> {
    let mut el = Elaborator::avoiding([&p.body]);
    el.fresh_mut().reserve_all(p.params.iter().map(|(x, _)| x.clone()));
    Ok(Program {
        params: p.params.clone(),
        ret: p.ret.clone(),
        body: el.comp(&p.body)?,
    })
}
