//! Finite-difference oracle for the AD macro.
//!
//! A closed value of a first-order type is a constructor skeleton (its
//! [`Shape`]) plus a vector of real leaves. Seeding pairs each leaf with a
//! tangent entry; decomposing a value of `ⅅτ` splits it back. The oracle runs
//! the primal program under central differences and compares the result with
//! the tangent produced by the transformed program.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ad::d_type;
use crate::ast::{Ty, Val};
use crate::eval::{apply_program, Budget, Machine, Outcome, OutcomeClass, Rule};
use crate::program::Program;

pub const DIRECTION_SEED: u64 = 0xD1FF_C0DE;

/// FD step sizes, largest first; successive ratios are 10.
pub const STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Shape {
    Real,
    Unit,
    Pair(Box<Shape>, Box<Shape>),
    Inl(Box<Shape>),
    Inr(Box<Shape>),
    Roll(Box<Shape>),
}

impl Shape {
    pub fn leaf_count(&self) -> usize {
        match self {
            Shape::Real => 1,
            Shape::Unit => 0,
            Shape::Pair(a, b) => a.leaf_count() + b.leaf_count(),
            Shape::Inl(s) | Shape::Inr(s) | Shape::Roll(s) => s.leaf_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("type {0} is not first-order")]
    NotFirstOrder(String),
    #[error("value does not have type {0}")]
    Malformed(String),
    #[error("expected {expected} direction entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("signature mismatch: {0}")]
    Signature(String),
    #[error("cannot run program: {0}")]
    Apply(String),
}

type OResult<T> = Result<T, OracleError>;

fn malformed(ty: &Ty) -> OracleError {
    OracleError::Malformed(ty.to_string())
}

/// Shape and real leaves (left to right) of a closed first-order value.
pub fn flatten(v: &Val, ty: &Ty) -> OResult<(Shape, Vec<f64>)> {
    if !ty.is_first_order() {
        return Err(OracleError::NotFirstOrder(ty.to_string()));
    }
    let mut leaves = Vec::new();
    let shape = flatten_into(v, ty, &mut leaves)?;
    Ok((shape, leaves))
}

fn flatten_into(v: &Val, ty: &Ty, out: &mut Vec<f64>) -> OResult<Shape> {
    Ok(match (v, ty) {
        (Val::Const(c), Ty::Real) => {
            out.push(*c);
            Shape::Real
        }
        (Val::Unit, Ty::Unit) => Shape::Unit,
        (Val::Pair(a, b), Ty::Prod(ta, tb)) => {
            Shape::Pair(Box::new(flatten_into(a, ta, out)?), Box::new(flatten_into(b, tb, out)?))
        }
        (Val::Inl(p, _), Ty::Sum(l, _)) => Shape::Inl(Box::new(flatten_into(p, l, out)?)),
        (Val::Inr(p, _), Ty::Sum(_, r)) => Shape::Inr(Box::new(flatten_into(p, r, out)?)),
        (Val::Roll(p, _), Ty::Mu(..)) => {
            let unfolded = ty.unfold().ok_or_else(|| malformed(ty))?;
            Shape::Roll(Box::new(flatten_into(p, &unfolded, out)?))
        }
        _ => return Err(malformed(ty)),
    })
}

/// Rebuilds a value of type `ty` from a shape and leaves.
pub fn unflatten(shape: &Shape, ty: &Ty, leaves: &[f64]) -> OResult<Val> {
    if leaves.len() != shape.leaf_count() {
        return Err(OracleError::LengthMismatch {
            expected: shape.leaf_count(),
            found: leaves.len(),
        });
    }
    let mut it = leaves.iter().copied();
    unflatten_from(shape, ty, &mut it)
}

fn unflatten_from(shape: &Shape, ty: &Ty, it: &mut impl Iterator<Item = f64>) -> OResult<Val> {
    Ok(match (shape, ty) {
        (Shape::Real, Ty::Real) => Val::Const(it.next().expect("leaf count checked")),
        (Shape::Unit, Ty::Unit) => Val::Unit,
        (Shape::Pair(a, b), Ty::Prod(ta, tb)) => {
            Val::pair(unflatten_from(a, ta, it)?, unflatten_from(b, tb, it)?)
        }
        (Shape::Inl(s), Ty::Sum(l, _)) => Val::inl(unflatten_from(s, l, it)?, ty.clone()),
        (Shape::Inr(s), Ty::Sum(_, r)) => Val::inr(unflatten_from(s, r, it)?, ty.clone()),
        (Shape::Roll(s), Ty::Mu(..)) => {
            let unfolded = ty.unfold().ok_or_else(|| malformed(ty))?;
            Val::roll(unflatten_from(s, &unfolded, it)?, ty.clone())
        }
        _ => return Err(malformed(ty)),
    })
}

/// Pairs each real leaf of `v : ty` with the matching direction entry,
/// giving a value of `ⅅty`.
pub fn seed(v: &Val, ty: &Ty, direction: &[f64]) -> OResult<Val> {
    let (shape, _) = flatten(v, ty)?;
    if direction.len() != shape.leaf_count() {
        return Err(OracleError::LengthMismatch {
            expected: shape.leaf_count(),
            found: direction.len(),
        });
    }
    let mut it = direction.iter().copied();
    seed_from(v, ty, &mut it)
}

fn seed_from(v: &Val, ty: &Ty, it: &mut impl Iterator<Item = f64>) -> OResult<Val> {
    Ok(match (v, ty) {
        (Val::Const(c), Ty::Real) => Val::pair(Val::Const(*c), Val::Const(it.next().expect("length checked"))),
        (Val::Unit, Ty::Unit) => Val::Unit,
        (Val::Pair(a, b), Ty::Prod(ta, tb)) => Val::pair(seed_from(a, ta, it)?, seed_from(b, tb, it)?),
        (Val::Inl(p, _), Ty::Sum(l, _)) => Val::inl(seed_from(p, l, it)?, d_type(ty)),
        (Val::Inr(p, _), Ty::Sum(_, r)) => Val::inr(seed_from(p, r, it)?, d_type(ty)),
        (Val::Roll(p, _), Ty::Mu(..)) => {
            let unfolded = ty.unfold().ok_or_else(|| malformed(ty))?;
            Val::roll(seed_from(p, &unfolded, it)?, d_type(ty))
        }
        _ => return Err(malformed(ty)),
    })
}

/// Splits `w : ⅅty` into its primal value of type `ty` and its tangent
/// vector, the inverse of [`seed`].
pub fn tangent_decompose(w: &Val, ty: &Ty) -> OResult<(Val, Vec<f64>)> {
    if !ty.is_first_order() {
        return Err(OracleError::NotFirstOrder(ty.to_string()));
    }
    let mut tangent = Vec::new();
    let primal = decompose_into(w, ty, &mut tangent)?;
    Ok((primal, tangent))
}

fn decompose_into(w: &Val, ty: &Ty, out: &mut Vec<f64>) -> OResult<Val> {
    Ok(match (w, ty) {
        (Val::Pair(x, dx), Ty::Real) => match (&**x, &**dx) {
            (Val::Const(x), Val::Const(dx)) => {
                out.push(*dx);
                Val::Const(*x)
            }
            _ => return Err(malformed(&d_type(ty))),
        },
        (Val::Unit, Ty::Unit) => Val::Unit,
        (Val::Pair(a, b), Ty::Prod(ta, tb)) => Val::pair(decompose_into(a, ta, out)?, decompose_into(b, tb, out)?),
        (Val::Inl(p, _), Ty::Sum(l, _)) => Val::inl(decompose_into(p, l, out)?, ty.clone()),
        (Val::Inr(p, _), Ty::Sum(_, r)) => Val::inr(decompose_into(p, r, out)?, ty.clone()),
        (Val::Roll(p, _), Ty::Mu(..)) => {
            let unfolded = ty.unfold().ok_or_else(|| malformed(ty))?;
            Val::roll(decompose_into(p, &unfolded, out)?, ty.clone())
        }
        _ => return Err(malformed(&d_type(ty))),
    })
}

/// Inputs to a program as one flat point: per-argument shapes plus all
/// leaves concatenated.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub shapes: Vec<Shape>,
    pub leaves: Vec<f64>,
}

impl Point {
    pub fn of_args(args: &[Val], tys: &[Ty]) -> OResult<Point> {
        if args.len() != tys.len() {
            return Err(OracleError::Signature(format!(
                "{} argument(s) for {} parameter(s)",
                args.len(),
                tys.len()
            )));
        }
        let mut shapes = Vec::new();
        let mut leaves = Vec::new();
        for (a, t) in args.iter().zip(tys) {
            let (s, l) = flatten(a, t)?;
            shapes.push(s);
            leaves.extend(l);
        }
        Ok(Point { shapes, leaves })
    }

    /// Arguments for the given leaves, with this point's shapes.
    pub fn args_at(&self, tys: &[Ty], leaves: &[f64]) -> OResult<Vec<Val>> {
        let mut rest = leaves;
        let mut out = Vec::new();
        for (s, t) in self.shapes.iter().zip(tys) {
            let n = s.leaf_count();
            out.push(unflatten(s, t, &rest[..n])?);
            rest = &rest[n..];
        }
        Ok(out)
    }
}

/// Why finite differences cannot estimate a derivative at a point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum NotDifferentiable {
    /// Some stencil point produced a differently shaped result.
    ShapeChange,
    /// Same shape, but some `sign` went the other way: the stencil crosses a
    /// kink that does not show in the output.
    BranchChange,
    /// Some stencil point diverged or hit a domain error.
    OutcomeChange,
    /// No two successive step sizes agree.
    NoAgreement,
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-3 * a.abs().max(b.abs()) || (a - b).abs() <= 1e-8
}

/// A defined run: output shape and leaves, plus the branch path, i.e. the
/// outcome of every `sign` taken along the way.
struct Sampled {
    shape: Shape,
    leaves: Vec<f64>,
    path: Vec<bool>,
}

fn run_leaves(p: &Program, args: &[Val], budget: Budget) -> OResult<Option<Sampled>> {
    let t = p.apply(args).map_err(|e| OracleError::Apply(e.to_string()))?;
    let mut path = Vec::new();
    let outcome = Machine::new(t)
        .run_observed(budget, &mut |_, rule, _| match rule {
            Rule::SignPos => path.push(true),
            Rule::SignNeg => path.push(false),
            _ => {}
        })
        .map_err(|e| OracleError::Apply(e.to_string()))?;
    match outcome {
        Outcome::Value(v) => {
            let (shape, leaves) = flatten(&v, &p.ret)?;
            Ok(Some(Sampled { shape, leaves, path }))
        }
        _ => Ok(None),
    }
}

/// Central differences of `p` at `args` along `direction`, Richardson
/// extrapolated from the two smallest step sizes that agree. Every stencil
/// point must be defined, keep the output shape and take the same branches.
pub fn finite_diff(
    p: &Program,
    args: &[Val],
    direction: &[f64],
    budget: Budget,
) -> OResult<Result<(Shape, Vec<f64>), NotDifferentiable>> {
    let tys = p.param_types();
    let point = Point::of_args(args, &tys)?;
    if direction.len() != point.leaves.len() {
        return Err(OracleError::LengthMismatch {
            expected: point.leaves.len(),
            found: direction.len(),
        });
    }
    let Some(center) = run_leaves(p, args, budget)? else {
        return Ok(Err(NotDifferentiable::OutcomeChange));
    };
    let mut estimates = Vec::new();
    for h in STEPS {
        let mut sides = Vec::new();
        for sgn in [1.0, -1.0] {
            let moved: Vec<f64> = point
                .leaves
                .iter()
                .zip(direction)
                .map(|(x, d)| x + sgn * h * d)
                .collect();
            let args = point.args_at(&tys, &moved)?;
            match run_leaves(p, &args, budget)? {
                None => return Ok(Err(NotDifferentiable::OutcomeChange)),
                Some(s) if s.shape != center.shape => return Ok(Err(NotDifferentiable::ShapeChange)),
                Some(s) if s.path != center.path => return Ok(Err(NotDifferentiable::BranchChange)),
                Some(s) => sides.push(s.leaves),
            }
        }
        let d: Vec<f64> = sides[0]
            .iter()
            .zip(&sides[1])
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect();
        estimates.push(d);
    }
    for (big, small) in [(1, 2), (0, 1)] {
        let (db, ds) = (&estimates[big], &estimates[small]);
        if db.iter().zip(ds).all(|(a, b)| agree(*a, *b)) {
            let r = db.iter().zip(ds).map(|(b, s)| (100.0 * s - b) / 99.0).collect();
            return Ok(Ok((center.shape, r)));
        }
    }
    Ok(Err(NotDifferentiable::NoAgreement))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "skipped(near-kink)")]
    SkippedNearKink,
    #[serde(rename = "skipped(outcome-mismatch)")]
    SkippedOutcomeMismatch,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::SkippedNearKink => "skipped(near-kink)",
            Verdict::SkippedOutcomeMismatch => "skipped(outcome-mismatch)",
        }
    }

    pub fn is_skip(&self) -> bool {
        matches!(self, Verdict::SkippedNearKink | Verdict::SkippedOutcomeMismatch)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentReport {
    pub point: Vec<f64>,
    pub direction: Vec<f64>,
    pub primal_outcome: OutcomeClass,
    pub deriv_outcome: OutcomeClass,
    pub ad_tangent: Option<Vec<f64>>,
    pub fd_tangent: Option<Vec<f64>>,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub verdict: Verdict,
    /// Human-readable reason for a fail or skip.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub budget: Budget,
    /// The derivative run gets this many times the primal's steps.
    pub deriv_factor: u64,
}

impl Default for GradCheckConfig {
    fn default() -> GradCheckConfig {
        GradCheckConfig {
            tol_abs: 1e-5,
            tol_rel: 1e-4,
            budget: Budget::default(),
            deriv_factor: 10,
        }
    }
}

/// Compares the transformed program `pd` with finite differences of `p` at
/// `args` along `direction`.
pub fn grad_check(
    p: &Program,
    pd: &Program,
    args: &[Val],
    direction: &[f64],
    cfg: &GradCheckConfig,
) -> OResult<TangentReport> {
    if !p.is_first_order() {
        return Err(OracleError::NotFirstOrder(p.ret.to_string()));
    }
    let expected: Vec<Ty> = p.params.iter().map(|(_, t)| d_type(t)).collect();
    let sig_ok = pd.params.len() == expected.len()
        && pd.params.iter().zip(&expected).all(|((_, a), b)| a.alpha_eq(b))
        && pd.ret.alpha_eq(&d_type(&p.ret));
    if !sig_ok {
        return Err(OracleError::Signature("derivative program does not have the transformed signature".into()));
    }
    let tys = p.param_types();
    let point = Point::of_args(args, &tys)?;
    if direction.len() != point.leaves.len() {
        return Err(OracleError::LengthMismatch {
            expected: point.leaves.len(),
            found: direction.len(),
        });
    }
    let mut seeded = Vec::new();
    let mut offset = 0;
    for ((a, t), s) in args.iter().zip(&tys).zip(&point.shapes) {
        let n = s.leaf_count();
        seeded.push(seed(a, t, &direction[offset..offset + n])?);
        offset += n;
    }

    let apply = |prog: &Program, a: &[Val], b: Budget| {
        apply_program(prog, a, b).map_err(|e| OracleError::Apply(e.to_string()))
    };
    let primal = apply(p, args, cfg.budget)?;
    let deriv_budget = Budget::new(primal.steps.max(1).saturating_mul(cfg.deriv_factor));
    let deriv = apply(pd, &seeded, deriv_budget)?;

    let mut report = TangentReport {
        point: point.leaves.clone(),
        direction: direction.to_vec(),
        primal_outcome: primal.outcome.class(),
        deriv_outcome: deriv.outcome.class(),
        ad_tangent: None,
        fd_tangent: None,
        max_abs_err: 0.0,
        max_rel_err: 0.0,
        verdict: Verdict::Pass,
        note: None,
    };
    let fail = |mut r: TangentReport, why: String| {
        r.verdict = Verdict::Fail;
        r.note = Some(why);
        Ok(r)
    };

    let (pv, dv) = match (&primal.outcome, &deriv.outcome) {
        (Outcome::Value(pv), Outcome::Value(dv)) => (pv, dv),
        (a, b) if a.is_bottom() && b.is_bottom() => {
            report.note = Some("both runs undefined".into());
            return Ok(report);
        }
        (a, b) => return fail(report, format!("definedness differs: primal {a}, derivative {b}")),
    };
    let (p_shape, p_leaves) = flatten(pv, &p.ret)?;
    let (d_primal, ad) = tangent_decompose(dv, &p.ret)?;
    let (d_shape, d_leaves) = flatten(&d_primal, &p.ret)?;
    report.ad_tangent = Some(ad.clone());
    if d_shape != p_shape || d_leaves.iter().zip(&p_leaves).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return fail(report, "primal part of the derivative differs from the primal".into());
    }

    match finite_diff(p, args, direction, cfg.budget)? {
        Err(NotDifferentiable::OutcomeChange) => {
            report.verdict = Verdict::SkippedOutcomeMismatch;
            report.note = Some("a stencil point is undefined".into());
        }
        Err(why) => {
            report.verdict = Verdict::SkippedNearKink;
            report.note = Some(format!("{why:?}"));
        }
        Ok((_, fd)) => {
            let mut bad = false;
            for (a, f) in ad.iter().zip(&fd) {
                let err = (a - f).abs();
                report.max_abs_err = report.max_abs_err.max(err);
                if f.abs() > 0.0 {
                    report.max_rel_err = report.max_rel_err.max(err / f.abs());
                }
                if err > cfg.tol_abs.max(cfg.tol_rel * f.abs()) || err.is_nan() {
                    bad = true;
                }
            }
            report.fd_tangent = Some(fd);
            if bad {
                report.verdict = Verdict::Fail;
                report.note = Some("tangent differs from finite differences".into());
            }
        }
    }
    Ok(report)
}

/// Unit-length directions drawn from a seeded normal distribution.
pub struct DirectionSampler {
    rng: ChaCha20Rng,
}

impl DirectionSampler {
    pub fn new(seed: u64) -> DirectionSampler {
        DirectionSampler {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self, n: usize) -> Vec<f64> {
        if n == 0 {
            return Vec::new();
        }
        loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

impl Default for DirectionSampler {
    fn default() -> DirectionSampler {
        DirectionSampler::new(DIRECTION_SEED)
    }
}

/// One grad-check job.
#[derive(Clone, Debug)]
pub struct Case {
    pub args: Vec<Val>,
    pub direction: Vec<f64>,
}

/// Runs independent grad checks in parallel; reports come back in input order.
pub fn grad_check_batch(
    p: &Program,
    pd: &Program,
    cases: &[Case],
    cfg: &GradCheckConfig,
) -> Vec<OResult<TangentReport>> {
    cases
        .par_iter()
        .map(|c| grad_check(p, pd, &c.args, &c.direction, cfg))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

impl Summary {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a TangentReport>) -> Summary {
        let mut s = Summary::default();
        for r in reports {
            s.total += 1;
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                _ => s.skipped += 1,
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list() -> Ty {
        Ty::real_list()
    }

    #[test]
    fn flatten_examples() {
        let rr = Ty::prod(Ty::Real, Ty::Real);
        let (s, l) = flatten(&Val::pair(Val::Const(1.0), Val::Const(2.0)), &rr).unwrap();
        assert_eq!(s, Shape::Pair(Box::new(Shape::Real), Box::new(Shape::Real)));
        assert_eq!(l, vec![1.0, 2.0]);
        let (s, l) = flatten(&Val::bool(true), &Ty::bool()).unwrap();
        assert_eq!(s, Shape::Inl(Box::new(Shape::Unit)));
        assert!(l.is_empty());
        let (s, l) = flatten(&Val::real_list(&[3.0]), &list()).unwrap();
        assert_eq!(l, vec![3.0]);
        assert_eq!(s.leaf_count(), 1);
    }

    #[test]
    fn seed_examples() {
        assert_eq!(
            seed(&Val::Const(3.0), &Ty::Real, &[1.0]).unwrap(),
            Val::pair(Val::Const(3.0), Val::Const(1.0))
        );
        let ty = Ty::prod(Ty::Real, Ty::bool());
        let v = Val::pair(Val::Const(3.0), Val::bool(true));
        assert_eq!(
            seed(&v, &ty, &[1.0]).unwrap(),
            Val::pair(Val::pair(Val::Const(3.0), Val::Const(1.0)), Val::bool(true))
        );
        assert_eq!(seed(&Val::bool(false), &Ty::bool(), &[]).unwrap(), Val::bool(false));
        assert!(matches!(
            seed(&Val::Const(3.0), &Ty::Real, &[]),
            Err(OracleError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn decompose_examples() {
        let w = Val::pair(Val::Const(9.0), Val::Const(6.0));
        assert_eq!(tangent_decompose(&w, &Ty::Real).unwrap(), (Val::Const(9.0), vec![6.0]));
        assert_eq!(
            tangent_decompose(&Val::bool(true), &Ty::bool()).unwrap(),
            (Val::bool(true), vec![])
        );
        let v = Val::real_list(&[1.0, -2.0, 3.5]);
        let d = [0.1, 0.2, 0.3];
        let w = seed(&v, &list(), &d).unwrap();
        assert_eq!(tangent_decompose(&w, &list()).unwrap(), (v, d.to_vec()));
    }

    #[test]
    fn directions_are_unit_and_reproducible() {
        let a = DirectionSampler::default().sample(3);
        let b = DirectionSampler::default().sample(3);
        assert_eq!(a, b);
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(DirectionSampler::default().sample(0).is_empty());
    }

    #[test]
    fn verdict_serializes_as_text() {
        assert_eq!(serde_json::to_string(&Verdict::SkippedNearKink).unwrap(), "\"skipped(near-kink)\"");
        assert_eq!(Verdict::Fail.as_str(), "fail");
    }
}
