//! Pretty-printer emitting parseable surface syntax, for surface terms and
//! (via [`lift_comp`]) for fine-grain computations.

use std::fmt::{self, Write};

use super::syntax::{SurfaceProgram, Term, TermKind};
use crate::ast::{Comp, Ty, Val};
use crate::ops::Prim;
use crate::program::Program;

pub fn write_ty(f: &mut impl Write, ty: &Ty) -> fmt::Result {
    write_ty_at(f, ty, 0)
}

// levels: 0 arrow / mu, 1 sum, 2 product, 3 atom
fn write_ty_at(f: &mut impl Write, ty: &Ty, level: u8) -> fmt::Result {
    let (own, open) = match ty {
        Ty::Arrow(..) | Ty::Mu(..) => (0, true),
        Ty::Sum(..) => (1, true),
        Ty::Prod(..) => (2, true),
        _ => (3, false),
    };
    let parens = open && own < level;
    if parens {
        f.write_char('(')?;
    }
    match ty {
        Ty::Real => f.write_str("real")?,
        Ty::Unit => f.write_str("unit")?,
        Ty::Void => f.write_str("void")?,
        Ty::Var(a) => f.write_str(a)?,
        Ty::Arrow(a, b) => {
            write_ty_at(f, a, 1)?;
            f.write_str(" -> ")?;
            write_ty_at(f, b, 0)?;
        }
        Ty::Sum(a, b) => {
            write_ty_at(f, a, 1)?;
            f.write_str(" + ")?;
            write_ty_at(f, b, 2)?;
        }
        Ty::Prod(a, b) => {
            write_ty_at(f, a, 2)?;
            f.write_str(" * ")?;
            write_ty_at(f, b, 3)?;
        }
        Ty::Mu(a, body) => {
            write!(f, "mu {a}. ")?;
            write_ty_at(f, body, 0)?;
        }
    }
    if parens {
        f.write_char(')')?;
    }
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_num(c: f64) -> String {
    format!("{c:?}")
}

// Term levels.
const OPEN: u8 = 0;
const CMP: u8 = 1;
const ARITH: u8 = 2;
const HEAD: u8 = 5;
const ARG: u8 = 6;

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn nl(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push(' ');
        }
    }

    fn s(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn ty(&mut self, ty: &Ty) {
        write_ty(&mut self.out, ty).expect("writing to a String");
    }

    fn indented(&mut self, by: usize, f: impl FnOnce(&mut Self)) {
        self.indent += by;
        f(self);
        self.indent -= by;
    }

    fn term(&mut self, t: &Term, level: u8) {
        use TermKind as K;
        let own = match &t.kind {
            K::Var(_) | K::Unit | K::Pair(..) | K::Op(..) => ARG,
            K::Lit(c) => {
                if c.is_sign_negative() {
                    ARITH
                } else {
                    ARG
                }
            }
            K::Inl(..) | K::Inr(..) | K::Roll(..) | K::Sign(_) | K::App(..) => HEAD,
            K::Less(..) => CMP,
            _ => OPEN,
        };
        if own < level {
            self.s("(");
            self.term(t, OPEN);
            self.s(")");
            return;
        }
        match &t.kind {
            K::Var(x) => self.s(x),
            K::Lit(c) => self.s(&fmt_num(*c)),
            K::Unit => self.s("()"),
            K::Inl(asc, p) | K::Inr(asc, p) | K::Roll(asc, p) => {
                self.s(match &t.kind {
                    K::Inl(..) => "inl",
                    K::Inr(..) => "inr",
                    _ => "roll",
                });
                if let Some(asc) = asc {
                    self.s("[");
                    self.ty(asc);
                    self.s("]");
                }
                self.s(" ");
                self.term(p, ARG);
            }
            K::Pair(a, b) => {
                self.s("(");
                self.term(a, OPEN);
                self.s(", ");
                self.term(b, OPEN);
                self.s(")");
            }
            K::Fun(x, ty, body) => {
                self.s(&format!("fun ({x} : "));
                self.ty(ty);
                self.s(") -> ");
                self.term(body, OPEN);
            }
            K::Op(Prim::Const(c), _) => self.s(&format!("const({})", fmt_num(*c))),
            K::Op(op, args) => {
                self.s(&op.name());
                self.s("(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.s(", ");
                    }
                    self.term(a, OPEN);
                }
                self.s(")");
            }
            K::CaseVoid(s, ty) => {
                self.s("case ");
                self.term(s, OPEN);
                self.s(" of {} : ");
                self.ty(ty);
            }
            K::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                self.s("case ");
                self.term(scrutinee, OPEN);
                self.s(" of");
                self.indented(2, |p| {
                    p.nl();
                    p.s(&format!("inl {left_var} -> "));
                    p.indented(2, |p| p.term(left, OPEN));
                    p.nl();
                    p.s(&format!("| inr {right_var} -> "));
                    p.indented(2, |p| p.term(right, OPEN));
                });
            }
            K::CaseUnit(s, body) => {
                self.s("case ");
                self.term(s, OPEN);
                self.s(" of () ->");
                self.nl();
                self.term(body, OPEN);
            }
            K::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => {
                self.s("case ");
                self.term(scrutinee, OPEN);
                self.s(&format!(" of ({fst}, {snd}) ->"));
                self.nl();
                self.term(body, OPEN);
            }
            K::App(f, a) => {
                self.term(f, HEAD);
                self.s(" ");
                self.term(a, ARG);
            }
            K::Iterate { body, var, start } => {
                self.s("iterate");
                self.indented(2, |p| {
                    p.nl();
                    p.term(body, OPEN);
                });
                self.nl();
                self.s(&format!("from {var} = "));
                self.term(start, OPEN);
            }
            K::Sign(s) => {
                self.s("sign ");
                self.term(s, ARG);
            }
            K::Unroll {
                scrutinee,
                var,
                body,
            } => {
                self.s("unroll ");
                self.term(scrutinee, OPEN);
                self.s(&format!(" as {var} in"));
                self.nl();
                self.term(body, OPEN);
            }
            K::Rec { name, ty, body } => {
                self.s(&format!("rec {name} : "));
                self.ty(ty);
                self.s(" =");
                self.indented(2, |p| {
                    p.nl();
                    p.term(body, OPEN);
                });
            }
            K::Let(x, rhs, body) => {
                self.s(&format!("let {x} = "));
                self.indented(2, |p| p.term(rhs, OPEN));
                self.s(" in");
                self.nl();
                self.term(body, OPEN);
            }
            K::If(c, a, b) | K::IfPos(c, a, b) => {
                self.s(if matches!(t.kind, K::If(..)) { "if " } else { "ifpos " });
                self.term(c, OPEN);
                self.indented(2, |p| {
                    p.nl();
                    p.s("then ");
                    p.indented(2, |p| p.term(a, OPEN));
                    p.nl();
                    p.s("else ");
                    p.indented(2, |p| p.term(b, OPEN));
                });
            }
            K::Less(a, b) => {
                self.term(a, ARITH);
                self.s(" < ");
                self.term(b, ARITH);
            }
        }
    }
}

pub fn print_term(t: &Term) -> String {
    let mut p = Printer {
        out: String::new(),
        indent: 0,
    };
    p.term(t, OPEN);
    p.out
}

pub fn print_ty(ty: &Ty) -> String {
    let mut s = String::new();
    write_ty(&mut s, ty).expect("writing to a String");
    s
}

pub fn print_surface_program(p: &SurfaceProgram) -> String {
    let params: Vec<String> = p
        .params
        .iter()
        .map(|(x, t)| format!("{x}: {}", print_ty(t)))
        .collect();
    format!(
        "params {};\nreturns {};\nbody\n{}\n",
        params.join(", "),
        print_ty(&p.ret),
        print_term(&p.body)
    )
}

pub fn print_program(p: &Program) -> String {
    print_surface_program(&SurfaceProgram {
        params: p.params.clone(),
        ret: p.ret.clone(),
        body: lift_comp(&p.body),
    })
}

pub fn print_comp(t: &Comp) -> String {
    print_term(&lift_comp(t))
}

pub fn print_val(v: &Val) -> String {
    print_term(&lift_val(v))
}

/// Reads a fine-grain value back as a surface term.
pub fn lift_val(v: &Val) -> Term {
    Term::synth(match v {
        Val::Var(x) => TermKind::Var(x.clone()),
        Val::Const(c) => TermKind::Lit(*c),
        Val::Unit => TermKind::Unit,
        Val::Inl(p, ty) => TermKind::Inl(Some(ty.clone()), Box::new(lift_val(p))),
        Val::Inr(p, ty) => TermKind::Inr(Some(ty.clone()), Box::new(lift_val(p))),
        Val::Roll(p, ty) => TermKind::Roll(Some(ty.clone()), Box::new(lift_val(p))),
        Val::Pair(a, b) => TermKind::Pair(Box::new(lift_val(a)), Box::new(lift_val(b))),
        Val::Lam(x, ty, body) => TermKind::Fun(x.clone(), ty.clone(), Box::new(lift_comp(body))),
    })
}

/// Reads a fine-grain computation back as a surface term; binds become `let`.
pub fn lift_comp(t: &Comp) -> Term {
    let b = |c: &Comp| Box::new(lift_comp(c));
    let v = |v: &Val| Box::new(lift_val(v));
    match t {
        Comp::Return(val) => lift_val(val),
        other => Term::synth(match other {
            Comp::Return(_) => unreachable!(),
            Comp::Bind(x, first, rest) => TermKind::Let(x.clone(), b(first), b(rest)),
            Comp::CaseVoid(s, ty) => TermKind::CaseVoid(v(s), ty.clone()),
            Comp::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => TermKind::CaseSum {
                scrutinee: v(scrutinee),
                left_var: left_var.clone(),
                left: b(left),
                right_var: right_var.clone(),
                right: b(right),
            },
            Comp::CaseUnit(s, body) => TermKind::CaseUnit(v(s), b(body)),
            Comp::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => TermKind::CasePair {
                scrutinee: v(scrutinee),
                fst: fst.clone(),
                snd: snd.clone(),
                body: b(body),
            },
            Comp::App(f, a) => TermKind::App(v(f), v(a)),
            Comp::Prim(op, args) => TermKind::Op(*op, args.iter().map(lift_val).collect()),
            Comp::Sign(s) => TermKind::Sign(v(s)),
            Comp::Iterate { body, var, start } => TermKind::Iterate {
                body: b(body),
                var: var.clone(),
                start: v(start),
            },
            Comp::CaseRoll {
                scrutinee,
                var,
                body,
            } => TermKind::Unroll {
                scrutinee: v(scrutinee),
                var: var.clone(),
                body: b(body),
            },
        }),
    }
}
