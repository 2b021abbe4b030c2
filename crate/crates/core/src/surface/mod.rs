//! Coarse-grain surface language: lexer, parser, elaboration into the core,
//! pretty-printing, and the coarse-grain AD table.

pub mod coarse_ad;
pub mod elaborate;
pub mod lexer;
pub mod parser;
pub mod print;
pub mod syntax;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Ty, Val};
use crate::program::Program;
use crate::typecheck::{synth_comp, Ctx, Diagnostic, TypeError};
pub use elaborate::{desugar_rec, elaborate, elaborate_program};
use parser::Parser;
pub use print::{lift_comp, lift_val, print_comp, print_program, print_term, print_ty, print_val};
pub use syntax::{Span, SurfaceProgram, Term, TermKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParseError {
    pub span: Span,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub fn at(span: Span, expected: &str, found: &str) -> ParseError {
        ParseError {
            span,
            expected: vec![expected.to_string()],
            found: found.to_string(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.span.line,
            self.span.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ElabError {
    #[error("{}:{}: injection or roll needs a type ascription here", .0.line, .0.col)]
    MissingAscription(Span),
}

/// Anything that can go wrong between source text and a checked program.
#[derive(Clone, Debug, Error)]
pub enum FrontendError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Elab(#[from] ElabError),
    #[error("type error: {0}")]
    Type(#[from] TypeError),
    #[error("bad argument: {0}")]
    Arg(String),
}

impl FrontendError {
    pub fn diagnostic(&self) -> Diagnostic {
        match self {
            FrontendError::Parse(e) => Diagnostic {
                code: "PARSE",
                message: e.to_string(),
                location: format!("{}:{}", e.span.line, e.span.col),
            },
            FrontendError::Elab(ElabError::MissingAscription(span)) => Diagnostic {
                code: "MISSING_ASCRIPTION",
                message: self.to_string(),
                location: format!("{}:{}", span.line, span.col),
            },
            FrontendError::Type(e) => e.diagnostic(),
            FrontendError::Arg(msg) => Diagnostic {
                code: "BAD_ARGUMENT",
                message: msg.clone(),
                location: String::new(),
            },
        }
    }
}

pub fn parse_program(src: &str) -> Result<SurfaceProgram, ParseError> {
    Parser::new(src, true)?.program()
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, true)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_ty(src: &str) -> Result<Ty, ParseError> {
    let mut p = Parser::new(src, false)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Comma-separated argument terms; ascriptions on injections and rolls may
/// be omitted since [`value_from_surface`] recovers them from the parameter type.
pub fn parse_args(src: &str) -> Result<Vec<Term>, ParseError> {
    Parser::new(src, false)?.term_list()
}

/// Parses, elaborates and typechecks a program file.
pub fn load_program(src: &str) -> Result<Program, FrontendError> {
    let surface = parse_program(src)?;
    let program = elaborate_program(&surface)?;
    program.check()?;
    Ok(program)
}

/// Converts a closed surface term into a value of type `ty`, filling in
/// missing ascriptions from `ty`.
pub fn value_from_surface(t: &Term, ty: &Ty) -> Result<Val, FrontendError> {
    let bad = |what: &str| FrontendError::Arg(format!("expected a value of type {ty}, found {what}"));
    let check_asc = |asc: &Option<Ty>| match asc {
        Some(a) if !a.alpha_eq(ty) => Err(FrontendError::Arg(format!(
            "ascription {a} does not match the expected type {ty}"
        ))),
        _ => Ok(()),
    };
    match (&t.kind, ty) {
        (TermKind::Lit(c), Ty::Real) => Ok(Val::Const(*c)),
        (TermKind::Op(crate::ops::Prim::Neg, args), Ty::Real) if args.len() == 1 => {
            match value_from_surface(&args[0], ty)? {
                Val::Const(c) => Ok(Val::Const(-c)),
                _ => Err(bad("a non-literal")),
            }
        }
        (TermKind::Op(crate::ops::Prim::Const(c), _), Ty::Real) => Ok(Val::Const(*c)),
        (TermKind::Unit, Ty::Unit) => Ok(Val::Unit),
        (TermKind::Pair(a, b), Ty::Prod(ta, tb)) => {
            Ok(Val::pair(value_from_surface(a, ta)?, value_from_surface(b, tb)?))
        }
        (TermKind::Inl(asc, p), Ty::Sum(l, _)) => {
            check_asc(asc)?;
            Ok(Val::inl(value_from_surface(p, l)?, ty.clone()))
        }
        (TermKind::Inr(asc, p), Ty::Sum(_, r)) => {
            check_asc(asc)?;
            Ok(Val::inr(value_from_surface(p, r)?, ty.clone()))
        }
        (TermKind::Roll(asc, p), Ty::Mu(..)) => {
            check_asc(asc)?;
            let unfolded = ty.unfold().expect("mu type unfolds");
            Ok(Val::roll(value_from_surface(p, &unfolded)?, ty.clone()))
        }
        (TermKind::Fun(x, pty, body), Ty::Arrow(..)) => {
            let body = elaborate(body)?;
            let lam = Val::lam(x.clone(), pty.clone(), body);
            let found = crate::typecheck::synth_val(&Ctx::new(), &lam)?;
            if !found.alpha_eq(ty) {
                return Err(bad(&format!("a function of type {found}")));
            }
            Ok(lam)
        }
        (TermKind::Var(x), _) => Err(bad(&format!("the free variable `{x}`"))),
        _ => Err(bad(&print_term(t))),
    }
}

/// Parses `src` as arguments for `params`, one per parameter.
pub fn args_for(src: &str, params: &[(String, Ty)]) -> Result<Vec<Val>, FrontendError> {
    let terms = parse_args(src)?;
    if terms.len() != params.len() {
        return Err(FrontendError::Arg(format!(
            "expected {} argument(s), found {}",
            params.len(),
            terms.len()
        )));
    }
    terms
        .iter()
        .zip(params)
        .map(|(t, (_, ty))| value_from_surface(t, ty))
        .collect()
}

/// Elaborates and synthesizes the type of a closed surface term.
pub fn check_term(t: &Term) -> Result<Ty, FrontendError> {
    Ok(synth_comp(&Ctx::new(), &elaborate(t)?)?)
}
