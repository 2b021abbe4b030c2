//! Small-step operational semantics with a step budget.
//!
//! Evaluation contexts are nested binds only, so the machine keeps them as an
//! explicit frame stack: descending into `x ← t; s` pushes `(x, s)` and is not
//! a step; every contraction (including popping a frame when `t` has become
//! `return v`) is one step.
//!
//! `iterate` and `case () of` have no rule in the source table; their rules
//! here are the forced ones. `iterate t from x = v` unrolls to
//! `y ← t[v/x]; case y of inl x' → iterate t from x = x' | inr r → return r`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{Comp, Val};
use crate::program::Program;
use crate::surface::print::{fmt_num, print_val};
use crate::typecheck::TypeError;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    max_steps: u64,
}

impl Budget {
    /// Budgets below one step are raised to one.
    pub fn new(max_steps: u64) -> Budget {
        Budget {
            max_steps: max_steps.max(1),
        }
    }

    pub fn max_steps(&self) -> u64 {
        self.max_steps
    }
}

impl Default for Budget {
    fn default() -> Budget {
        Budget::new(DEFAULT_BUDGET)
    }
}

/// The step rules, named for traces and the determinism audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    LetReturn,
    CaseInl,
    CaseInr,
    CasePair,
    CaseUnit,
    AppLam,
    CaseRoll,
    Prim,
    SignPos,
    SignNeg,
    Iterate,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::LetReturn,
        Rule::CaseInl,
        Rule::CaseInr,
        Rule::CasePair,
        Rule::CaseUnit,
        Rule::AppLam,
        Rule::CaseRoll,
        Rule::Prim,
        Rule::SignPos,
        Rule::SignNeg,
        Rule::Iterate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Rule::LetReturn => "let-return",
            Rule::CaseInl => "case-inl",
            Rule::CaseInr => "case-inr",
            Rule::CasePair => "case-pair",
            Rule::CaseUnit => "case-unit",
            Rule::AppLam => "app-lam",
            Rule::CaseRoll => "case-roll",
            Rule::Prim => "prim",
            Rule::SignPos => "sign-pos",
            Rule::SignNeg => "sign-neg",
            Rule::Iterate => "iterate",
        }
    }
}

/// An operation applied outside its domain (including `sign 0`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainInfo {
    pub op: String,
    pub args: Vec<f64>,
}

/// A state with no rule that is not a domain error. Unreachable from checked
/// programs.
#[derive(Clone, Debug, PartialEq, Error)]
#[error("ill-typed state: {0}")]
pub struct IllTyped(pub String);

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Stepped(Comp, Rule),
    Done(Val),
    DomainStuck(DomainInfo),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Value(Val),
    DomainError { op: String, args: Vec<f64>, step: u64 },
    OutOfFuel { steps: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OutcomeClass {
    Value,
    DomainError,
    OutOfFuel,
}

impl OutcomeClass {
    pub fn is_bottom(&self) -> bool {
        !matches!(self, OutcomeClass::Value)
    }
}

impl Outcome {
    pub fn class(&self) -> OutcomeClass {
        match self {
            Outcome::Value(_) => OutcomeClass::Value,
            Outcome::DomainError { .. } => OutcomeClass::DomainError,
            Outcome::OutOfFuel { .. } => OutcomeClass::OutOfFuel,
        }
    }

    /// Divergence and domain errors are both ⊥.
    pub fn is_bottom(&self) -> bool {
        self.class().is_bottom()
    }

    pub fn value(&self) -> Option<&Val> {
        match self {
            Outcome::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "Value {}", print_val(v)),
            Outcome::DomainError { op, args, step } => {
                let args: Vec<String> = args.iter().map(|a| fmt_num(*a)).collect();
                write!(f, "DomainError {op}({}) at step {step}", args.join(", "))
            }
            Outcome::OutOfFuel { steps } => write!(f, "OutOfFuel after {steps} steps"),
        }
    }
}

/// Result of a budgeted run together with the steps it used.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub outcome: Outcome,
    pub steps: u64,
}

enum Contract {
    To(Comp, Rule),
    Domain(DomainInfo),
}

const ITER_RESULT: &str = "iter_y";
const ITER_NEXT: &str = "iter_next";
const ITER_OUT: &str = "iter_out";

/// Whether `t` is a redex whose rule can fire or report a domain error.
fn is_redex(t: &Comp) -> bool {
    match t {
        Comp::CaseSum { scrutinee, .. } => matches!(scrutinee, Val::Inl(..) | Val::Inr(..)),
        Comp::CaseUnit(v, _) => matches!(v, Val::Unit),
        Comp::CasePair { scrutinee, .. } => matches!(scrutinee, Val::Pair(..)),
        Comp::App(f, _) => matches!(f, Val::Lam(..)),
        Comp::CaseRoll { scrutinee, .. } => matches!(scrutinee, Val::Roll(..)),
        Comp::Prim(_, args) => args.iter().all(|a| matches!(a, Val::Const(_))),
        Comp::Sign(v) => matches!(v, Val::Const(_)),
        Comp::Iterate { .. } => true,
        Comp::Return(_) | Comp::Bind(..) | Comp::CaseVoid(..) => false,
    }
}

/// Contracts a redex at the root, consuming it. `Return` and `Bind` are not
/// redexes.
fn contract(t: Comp) -> Result<Contract, IllTyped> {
    if !is_redex(&t) {
        return Err(IllTyped(crate::surface::print::print_comp(&t)));
    }
    Ok(match t {
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => match scrutinee {
            Val::Inl(v, _) => Contract::To(left.subst_owned(&left_var, &v), Rule::CaseInl),
            Val::Inr(v, _) => Contract::To(right.subst_owned(&right_var, &v), Rule::CaseInr),
            _ => unreachable!(),
        },
        Comp::CaseUnit(_, body) => Contract::To(*body, Rule::CaseUnit),
        Comp::CasePair {
            scrutinee: Val::Pair(a, b),
            fst,
            snd,
            body,
        } => {
            let pairs = if fst == snd {
                // the second binder shadows the first
                vec![(snd, *b)]
            } else {
                vec![(fst, *a), (snd, *b)]
            };
            Contract::To(body.subst_many_owned(pairs), Rule::CasePair)
        }
        Comp::App(Val::Lam(x, _, body), arg) => Contract::To(body.subst_owned(&x, &arg), Rule::AppLam),
        Comp::CaseRoll {
            scrutinee: Val::Roll(v, _),
            var,
            body,
        } => Contract::To(body.subst_owned(&var, &v), Rule::CaseRoll),
        Comp::Prim(op, args) => {
            let xs: Vec<f64> = args
                .iter()
                .map(|a| match a {
                    Val::Const(c) => *c,
                    _ => unreachable!(),
                })
                .collect();
            match op.eval(&xs) {
                Ok(c) => Contract::To(Comp::Return(Val::Const(c)), Rule::Prim),
                Err(_) => Contract::Domain(DomainInfo {
                    op: op.name(),
                    args: xs,
                }),
            }
        }
        Comp::Sign(Val::Const(c)) => {
            if c > 0.0 {
                Contract::To(Comp::Return(Val::bool(true)), Rule::SignPos)
            } else if c < 0.0 {
                Contract::To(Comp::Return(Val::bool(false)), Rule::SignNeg)
            } else {
                Contract::Domain(DomainInfo {
                    op: "sign".into(),
                    args: vec![c],
                })
            }
        }
        Comp::Iterate { body, var, start } => Contract::To(unroll_iterate(&body, &var, &start), Rule::Iterate),
        _ => unreachable!("checked by is_redex"),
    })
}

/// One unrolling of `iterate body from var = start`. The binders introduced
/// here are only in scope of closed subterms, so fixed names cannot capture.
pub fn unroll_iterate(body: &Comp, var: &str, start: &Val) -> Comp {
    Comp::bind(
        ITER_RESULT,
        body.subst(var, start),
        Comp::case_sum(
            Val::var(ITER_RESULT),
            ITER_NEXT,
            Comp::iterate(body.clone(), var, Val::var(ITER_NEXT)),
            ITER_OUT,
            Comp::Return(Val::var(ITER_OUT)),
        ),
    )
}

/// One small step of a closed computation.
pub fn step(t: &Comp) -> Result<Step, IllTyped> {
    match t {
        Comp::Return(v) => Ok(Step::Done(v.clone())),
        Comp::Bind(x, first, rest) => match &**first {
            Comp::Return(v) => Ok(Step::Stepped(rest.subst(x, v), Rule::LetReturn)),
            _ => Ok(match step(first)? {
                Step::Stepped(first, rule) => Step::Stepped(Comp::bind(x.clone(), first, (**rest).clone()), rule),
                Step::DomainStuck(info) => Step::DomainStuck(info),
                Step::Done(_) => unreachable!("first is not a return"),
            }),
        },
        _ => Ok(match contract(t.clone())? {
            Contract::To(t, rule) => Step::Stepped(t, rule),
            Contract::Domain(info) => Step::DomainStuck(info),
        }),
    }
}

/// Every rule whose left-hand side matches `t` at some evaluation-context
/// position, found by matching each rule's pattern separately rather than
/// through [`step`].
pub fn applicable_rules(t: &Comp) -> Vec<Rule> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        for rule in Rule::ALL {
            if matches_at_root(rule, cur) {
                out.push(rule);
            }
        }
        match cur {
            Comp::Bind(_, first, _) => cur = first,
            _ => return out,
        }
    }
}

fn matches_at_root(rule: Rule, t: &Comp) -> bool {
    match rule {
        Rule::LetReturn => matches!(t, Comp::Bind(_, first, _) if matches!(**first, Comp::Return(_))),
        Rule::CaseInl => matches!(t, Comp::CaseSum { scrutinee: Val::Inl(..), .. }),
        Rule::CaseInr => matches!(t, Comp::CaseSum { scrutinee: Val::Inr(..), .. }),
        Rule::CasePair => matches!(t, Comp::CasePair { scrutinee: Val::Pair(..), .. }),
        Rule::CaseUnit => matches!(t, Comp::CaseUnit(Val::Unit, _)),
        Rule::AppLam => matches!(t, Comp::App(Val::Lam(..), _)),
        Rule::CaseRoll => matches!(t, Comp::CaseRoll { scrutinee: Val::Roll(..), .. }),
        Rule::Prim => match t {
            Comp::Prim(op, args) => {
                let xs: Option<Vec<f64>> = args
                    .iter()
                    .map(|a| if let Val::Const(c) = a { Some(*c) } else { None })
                    .collect();
                xs.is_some_and(|xs| args.len() == op.arity() && op.eval(&xs).is_ok())
            }
            _ => false,
        },
        Rule::SignPos => matches!(t, Comp::Sign(Val::Const(c)) if *c > 0.0),
        Rule::SignNeg => matches!(t, Comp::Sign(Val::Const(c)) if *c < 0.0),
        Rule::Iterate => matches!(t, Comp::Iterate { .. }),
    }
}

/// True for `return v` and for states whose redex is a domain error.
pub fn is_terminal(t: &Comp) -> bool {
    let mut cur = t;
    loop {
        match cur {
            Comp::Return(_) => return std::ptr::eq(cur, t),
            Comp::Bind(_, first, _) => cur = first,
            Comp::Prim(op, args) => {
                let xs: Option<Vec<f64>> = args
                    .iter()
                    .map(|a| if let Val::Const(c) = a { Some(*c) } else { None })
                    .collect();
                return xs.is_some_and(|xs| op.eval(&xs).is_err());
            }
            Comp::Sign(Val::Const(c)) => return *c == 0.0,
            _ => return false,
        }
    }
}

/// The frame-stack machine. Exposed so that observers can inspect states.
pub struct Machine {
    frames: Vec<(String, Comp)>,
    focus: Comp,
    steps: u64,
}

impl Machine {
    pub fn new(t: Comp) -> Machine {
        Machine {
            frames: Vec::new(),
            focus: t,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// The full current computation, with frames plugged back in.
    pub fn state(&self) -> Comp {
        let mut t = self.focus.clone();
        for (x, rest) in self.frames.iter().rev() {
            t = Comp::bind(x.clone(), t, rest.clone());
        }
        t
    }

    /// Advances by one rule, descending into binds for free.
    fn advance(&mut self) -> Result<Step, IllTyped> {
        loop {
            match std::mem::replace(&mut self.focus, Comp::Return(Val::Unit)) {
                Comp::Bind(x, first, rest) => {
                    self.frames.push((x, *rest));
                    self.focus = *first;
                }
                Comp::Return(v) => {
                    return Ok(match self.frames.pop() {
                        None => {
                            self.focus = Comp::Return(v.clone());
                            Step::Done(v)
                        }
                        Some((x, rest)) => {
                            self.focus = rest.subst_owned(&x, &v);
                            self.steps += 1;
                            Step::Stepped(Comp::Return(Val::Unit), Rule::LetReturn)
                        }
                    });
                }
                redex => {
                    // only these can get stuck, and they are small
                    let kept = matches!(redex, Comp::Prim(..) | Comp::Sign(_)).then(|| redex.clone());
                    return match contract(redex) {
                        Ok(Contract::To(next, rule)) => {
                            self.focus = next;
                            self.steps += 1;
                            Ok(Step::Stepped(Comp::Return(Val::Unit), rule))
                        }
                        Ok(Contract::Domain(info)) => {
                            self.focus = kept.expect("domain errors come from primitives");
                            Ok(Step::DomainStuck(info))
                        }
                        Err(e) => Err(e),
                    };
                }
            }
        }
    }

    /// Whether the next action is a contraction (rather than completion or a
    /// domain error), without performing it.
    fn next_is_step(&self) -> bool {
        let mut cur = &self.focus;
        while let Comp::Bind(_, first, _) = cur {
            cur = first;
        }
        match cur {
            Comp::Return(_) => !self.frames.is_empty() || !matches!(self.focus, Comp::Return(_)),
            _ => !is_terminal(cur),
        }
    }

    /// Runs to completion or until `budget` contractions have been made,
    /// calling `observe` after each contraction.
    pub fn run_observed(
        &mut self,
        budget: Budget,
        observe: &mut dyn FnMut(u64, Rule, &Machine),
    ) -> Result<Outcome, IllTyped> {
        loop {
            if self.steps >= budget.max_steps() && self.next_is_step() {
                return Ok(Outcome::OutOfFuel { steps: self.steps });
            }
            match self.advance()? {
                Step::Done(v) => return Ok(Outcome::Value(v)),
                Step::DomainStuck(DomainInfo { op, args }) => {
                    return Ok(Outcome::DomainError {
                        op,
                        args,
                        step: self.steps + 1,
                    })
                }
                Step::Stepped(_, rule) => observe(self.steps, rule, self),
            }
        }
    }
}

pub fn try_run(t: &Comp, budget: Budget) -> Result<Run, IllTyped> {
    let mut m = Machine::new(t.clone());
    let outcome = m.run_observed(budget, &mut |_, _, _| {})?;
    Ok(Run {
        outcome,
        steps: m.steps(),
    })
}

/// Runs a closed, well-typed computation.
///
/// # Panics
/// If evaluation reaches a stuck state that is not a domain error, which
/// cannot happen for checked input.
pub fn run_counted(t: &Comp, budget: Budget) -> Run {
    try_run(t, budget).unwrap_or_else(|e| panic!("{e}"))
}

pub fn run(t: &Comp, budget: Budget) -> Outcome {
    run_counted(t, budget).outcome
}

/// Runs and reports each step as `(index, rule)`.
pub fn run_traced(t: &Comp, budget: Budget, trace: &mut dyn FnMut(u64, Rule)) -> Result<Outcome, IllTyped> {
    Machine::new(t.clone()).run_observed(budget, &mut |i, rule, _| trace(i, rule))
}

/// Reference evaluator that iterates [`step`] on whole terms. Slower than
/// the machine; used to cross-check it.
pub fn run_by_steps(t: &Comp, budget: Budget) -> Result<Run, IllTyped> {
    let mut cur = t.clone();
    let mut steps = 0;
    loop {
        match step(&cur)? {
            Step::Done(v) => {
                return Ok(Run {
                    outcome: Outcome::Value(v),
                    steps,
                })
            }
            Step::DomainStuck(DomainInfo { op, args }) => {
                return Ok(Run {
                    outcome: Outcome::DomainError {
                        op,
                        args,
                        step: steps + 1,
                    },
                    steps,
                })
            }
            Step::Stepped(next, _) => {
                if steps >= budget.max_steps() {
                    return Ok(Run {
                        outcome: Outcome::OutOfFuel { steps },
                        steps,
                    });
                }
                steps += 1;
                cur = next;
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    IllTyped(#[from] IllTyped),
}

/// Substitutes `args` for the parameters of `p` and runs the body.
pub fn apply_program(p: &Program, args: &[Val], budget: Budget) -> Result<Run, ApplyError> {
    let t = p.apply(args)?;
    Ok(try_run(&t, budget)?)
}

/// Evaluates a primitive on constant arguments through the interpreter,
/// mostly useful for derivative templates.
pub fn eval_closed_real(t: &Comp, budget: Budget) -> Option<f64> {
    match run(t, budget) {
        Outcome::Value(Val::Const(c)) => Some(c),
        _ => None,
    }
}
