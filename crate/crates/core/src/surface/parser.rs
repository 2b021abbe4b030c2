//! Recursive-descent parser for the surface language.
//!
//! ```text
//! program := ('type' IDENT '=' ty ';')* 'params' (IDENT ':' ty),* ';'
//!            'returns' ty ';' 'body' term
//! ty      := sum ('->' ty)?          sum := prod ('+' prod)*
//! prod    := aty ('*' aty)*          aty := real | unit | void | IDENT
//!                                         | 'mu' IDENT '.' ty | '(' ty ')'
//! term    := 'fun' '(' IDENT ':' ty ')' '->' term
//!          | 'let' IDENT '=' term 'in' term
//!          | 'let' '(' IDENT ',' IDENT ')' '=' term 'in' term
//!          | 'if' term 'then' term 'else' term
//!          | 'ifpos' term 'then' term 'else' term
//!          | 'case' term 'of' branches
//!          | 'iterate' term 'from' IDENT '=' term
//!          | 'unroll' term 'as' IDENT 'in' term
//!          | 'rec' IDENT ':' ty '=' term
//!          | cmp
//! branches := 'inl' IDENT '->' term '|' 'inr' IDENT '->' term
//!           | '(' IDENT ',' IDENT ')' '->' term | '(' ')' '->' term
//!           | '{' '}' ':' ty
//! cmp     := arith (('<' | '>') arith)?
//! arith   := mul (('+' | '-') mul)*     mul := unary (('*' | '/') unary)*
//! unary   := '-' unary | atom atom*
//! atom    := IDENT | NUM | '(' ')' | '(' term ')' | '(' term ',' term ')'
//!          | OP '(' term,* ')' | 'const' '(' '-'? NUM ')'
//!          | 'sign' atom | ('inl' | 'inr' | 'roll') ('[' ty ']')? atom
//! ```

use std::collections::HashMap;

use super::lexer::{tokenize, Tok};
use super::syntax::{Span, SurfaceProgram, Term, TermKind};
use super::ParseError;
use crate::ast::Ty;
use crate::ops::Prim;

const KEYWORDS: [&str; 19] = [
    "fun", "case", "of", "let", "in", "if", "then", "else", "ifpos", "iterate", "from", "sign",
    "roll", "unroll", "as", "rec", "inl", "inr", "const",
];

fn op_named(word: &str) -> Option<Prim> {
    Prim::NAMED.iter().copied().find(|p| p.spec().name == word)
}

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || op_named(word).is_some()
}

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    aliases: HashMap<String, Ty>,
    require_ascriptions: bool,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    pub fn new(src: &str, require_ascriptions: bool) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(src)?,
            pos: 0,
            aliases: HashMap::new(),
            require_ascriptions,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == w)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{w}`")])
        }
    }

    /// A binder or variable name: any identifier that is not reserved.
    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Tok::Ident(w) if !is_reserved(w) => {
                let w = w.clone();
                self.bump();
                Ok(w)
            }
            _ => self.error(&["an identifier"]),
        }
    }

    pub fn expect_eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    pub fn program(&mut self) -> PResult<SurfaceProgram> {
        while self.is_word("type") {
            self.bump();
            let name = self.ident()?;
            self.expect_sym("=")?;
            let ty = self.ty()?;
            self.expect_sym(";")?;
            self.aliases.insert(name, ty);
        }
        self.expect_word("params")?;
        let mut params = Vec::new();
        if !self.is_sym(";") {
            loop {
                let x = self.ident()?;
                self.expect_sym(":")?;
                params.push((x, self.ty()?));
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(";")?;
        self.expect_word("returns")?;
        let ret = self.ty()?;
        self.expect_sym(";")?;
        self.expect_word("body")?;
        let body = self.term()?;
        self.expect_eof()?;
        Ok(SurfaceProgram { params, ret, body })
    }

    pub fn ty(&mut self) -> PResult<Ty> {
        let lhs = self.sum_ty()?;
        if self.eat_sym("->") {
            Ok(Ty::arrow(lhs, self.ty()?))
        } else {
            Ok(lhs)
        }
    }

    fn sum_ty(&mut self) -> PResult<Ty> {
        let mut t = self.prod_ty()?;
        while self.eat_sym("+") {
            t = Ty::sum(t, self.prod_ty()?);
        }
        Ok(t)
    }

    fn prod_ty(&mut self) -> PResult<Ty> {
        let mut t = self.atom_ty()?;
        while self.eat_sym("*") {
            t = Ty::prod(t, self.atom_ty()?);
        }
        Ok(t)
    }

    fn atom_ty(&mut self) -> PResult<Ty> {
        match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Ident(w) => {
                self.bump();
                match w.as_str() {
                    "real" => Ok(Ty::Real),
                    "unit" => Ok(Ty::Unit),
                    "void" => Ok(Ty::Void),
                    "mu" => {
                        let a = self.ident()?;
                        self.expect_sym(".")?;
                        // the binder shadows any alias of the same name
                        let shadowed = self.aliases.remove(&a);
                        let body = self.ty();
                        if let Some(s) = shadowed {
                            self.aliases.insert(a.clone(), s);
                        }
                        Ok(Ty::mu(a, body?))
                    }
                    _ => Ok(self.aliases.get(&w).cloned().unwrap_or(Ty::Var(w))),
                }
            }
            _ => self.error(&["a type"]),
        }
    }

    pub fn term(&mut self) -> PResult<Term> {
        let span = self.span();
        let word = match self.peek() {
            Tok::Ident(w) => w.clone(),
            _ => return self.cmp(),
        };
        let node = |kind| Ok(Term::new(kind, span));
        match word.as_str() {
            "fun" => {
                self.bump();
                self.expect_sym("(")?;
                let x = self.ident()?;
                self.expect_sym(":")?;
                let ty = self.ty()?;
                self.expect_sym(")")?;
                self.expect_sym("->")?;
                let body = self.term()?;
                node(TermKind::Fun(x, ty, Box::new(body)))
            }
            "let" => {
                self.bump();
                if self.eat_sym("(") {
                    let a = self.ident()?;
                    self.expect_sym(",")?;
                    let b = self.ident()?;
                    self.expect_sym(")")?;
                    self.expect_sym("=")?;
                    let rhs = self.term()?;
                    self.expect_word("in")?;
                    let body = self.term()?;
                    return node(TermKind::CasePair {
                        scrutinee: Box::new(rhs),
                        fst: a,
                        snd: b,
                        body: Box::new(body),
                    });
                }
                let x = self.ident()?;
                self.expect_sym("=")?;
                let rhs = self.term()?;
                self.expect_word("in")?;
                let body = self.term()?;
                node(TermKind::Let(x, Box::new(rhs), Box::new(body)))
            }
            "if" | "ifpos" => {
                self.bump();
                let c = self.term()?;
                self.expect_word("then")?;
                let a = self.term()?;
                self.expect_word("else")?;
                let b = self.term()?;
                let (c, a, b) = (Box::new(c), Box::new(a), Box::new(b));
                node(if word == "if" {
                    TermKind::If(c, a, b)
                } else {
                    TermKind::IfPos(c, a, b)
                })
            }
            "case" => {
                self.bump();
                let scrutinee = Box::new(self.term()?);
                self.expect_word("of")?;
                self.case_branches(scrutinee, span)
            }
            "iterate" => {
                self.bump();
                let body = self.term()?;
                self.expect_word("from")?;
                let var = self.ident()?;
                self.expect_sym("=")?;
                let start = self.term()?;
                node(TermKind::Iterate {
                    body: Box::new(body),
                    var,
                    start: Box::new(start),
                })
            }
            "unroll" => {
                self.bump();
                let scrutinee = self.term()?;
                self.expect_word("as")?;
                let var = self.ident()?;
                self.expect_word("in")?;
                let body = self.term()?;
                node(TermKind::Unroll {
                    scrutinee: Box::new(scrutinee),
                    var,
                    body: Box::new(body),
                })
            }
            "rec" => {
                self.bump();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let ty_span = self.span();
                let ty = self.ty()?;
                if !matches!(ty, Ty::Arrow(..)) {
                    return Err(ParseError::at(ty_span, "a function type for `rec`", &ty.to_string()));
                }
                self.expect_sym("=")?;
                let body = self.term()?;
                node(TermKind::Rec {
                    name,
                    ty,
                    body: Box::new(body),
                })
            }
            _ => self.cmp(),
        }
    }

    fn case_branches(&mut self, scrutinee: Box<Term>, span: Span) -> PResult<Term> {
        let node = |kind| Ok(Term::new(kind, span));
        if self.is_word("inl") {
            self.bump();
            let left_var = self.ident()?;
            self.expect_sym("->")?;
            let left = Box::new(self.term()?);
            self.expect_sym("|")?;
            self.expect_word("inr")?;
            let right_var = self.ident()?;
            self.expect_sym("->")?;
            let right = Box::new(self.term()?);
            return node(TermKind::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            });
        }
        if self.eat_sym("{") {
            self.expect_sym("}")?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            return node(TermKind::CaseVoid(scrutinee, ty));
        }
        if self.eat_sym("(") {
            if self.eat_sym(")") {
                self.expect_sym("->")?;
                let body = self.term()?;
                return node(TermKind::CaseUnit(scrutinee, Box::new(body)));
            }
            let fst = self.ident()?;
            self.expect_sym(",")?;
            let snd = self.ident()?;
            self.expect_sym(")")?;
            self.expect_sym("->")?;
            let body = Box::new(self.term()?);
            return node(TermKind::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            });
        }
        self.error(&["`inl`", "`(`", "`{`"])
    }

    fn cmp(&mut self) -> PResult<Term> {
        let span = self.span();
        let lhs = self.arith()?;
        if self.eat_sym("<") {
            let rhs = self.arith()?;
            return Ok(Term::new(TermKind::Less(Box::new(lhs), Box::new(rhs)), span));
        }
        if self.eat_sym(">") {
            let rhs = self.arith()?;
            return Ok(Term::new(TermKind::Less(Box::new(rhs), Box::new(lhs)), span));
        }
        Ok(lhs)
    }

    fn arith(&mut self) -> PResult<Term> {
        let span = self.span();
        let mut t = self.mul()?;
        loop {
            let op = if self.eat_sym("+") {
                Prim::Add
            } else if self.eat_sym("-") {
                Prim::Sub
            } else {
                return Ok(t);
            };
            let rhs = self.mul()?;
            t = Term::new(TermKind::Op(op, vec![t, rhs]), span);
        }
    }

    fn mul(&mut self) -> PResult<Term> {
        let span = self.span();
        let mut t = self.unary()?;
        loop {
            let op = if self.eat_sym("*") {
                Prim::Mul
            } else if self.eat_sym("/") {
                Prim::Div
            } else {
                return Ok(t);
            };
            let rhs = self.unary()?;
            t = Term::new(TermKind::Op(op, vec![t, rhs]), span);
        }
    }

    fn unary(&mut self) -> PResult<Term> {
        let span = self.span();
        if self.eat_sym("-") {
            if let Tok::Num(n) = *self.peek() {
                self.bump();
                return Ok(Term::new(TermKind::Lit(-n), span));
            }
            let inner = self.unary()?;
            return Ok(Term::new(TermKind::Op(Prim::Neg, vec![inner]), span));
        }
        let mut t = self.atom()?;
        while self.starts_atom() {
            let arg = self.atom()?;
            t = Term::new(TermKind::App(Box::new(t), Box::new(arg)), span);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Num(_) | Tok::Sym("(") => true,
            Tok::Ident(w) => {
                !is_reserved(w) || matches!(w.as_str(), "sign" | "inl" | "inr" | "roll" | "const") || op_named(w).is_some()
            }
            _ => false,
        }
    }

    fn ascription(&mut self) -> PResult<Option<Ty>> {
        if self.eat_sym("[") {
            let t = self.ty()?;
            self.expect_sym("]")?;
            Ok(Some(t))
        } else if self.require_ascriptions {
            self.error(&["`[` type ascription"])
        } else {
            Ok(None)
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        let span = self.span();
        let node = |kind| Ok(Term::new(kind, span));
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                node(TermKind::Lit(n))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat_sym(")") {
                    return node(TermKind::Unit);
                }
                let first = self.term()?;
                if self.eat_sym(",") {
                    let second = self.term()?;
                    self.expect_sym(")")?;
                    return node(TermKind::Pair(Box::new(first), Box::new(second)));
                }
                self.expect_sym(")")?;
                Ok(first)
            }
            Tok::Ident(w) => match w.as_str() {
                "sign" => {
                    self.bump();
                    let arg = self.atom()?;
                    node(TermKind::Sign(Box::new(arg)))
                }
                "inl" | "inr" | "roll" => {
                    self.bump();
                    let asc = self.ascription()?;
                    let arg = Box::new(self.atom()?);
                    node(match w.as_str() {
                        "inl" => TermKind::Inl(asc, arg),
                        "inr" => TermKind::Inr(asc, arg),
                        _ => TermKind::Roll(asc, arg),
                    })
                }
                "const" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let neg = self.eat_sym("-");
                    let Tok::Num(n) = *self.peek() else {
                        return self.error(&["a number"]);
                    };
                    self.bump();
                    self.expect_sym(")")?;
                    node(TermKind::Op(Prim::Const(if neg { -n } else { n }), vec![]))
                }
                _ => {
                    if let Some(op) = op_named(&w) {
                        self.bump();
                        self.expect_sym("(")?;
                        let mut args = Vec::new();
                        if !self.is_sym(")") {
                            loop {
                                args.push(self.term()?);
                                if !self.eat_sym(",") {
                                    break;
                                }
                            }
                        }
                        self.expect_sym(")")?;
                        return node(TermKind::Op(op, args));
                    }
                    let x = self.ident()?;
                    node(TermKind::Var(x))
                }
            },
            _ => self.error(&["a term"]),
        }
    }

    /// Comma-separated terms up to end of input.
    pub fn term_list(&mut self) -> PResult<Vec<Term>> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Eof) {
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_eof()?;
        Ok(out)
    }
}
