//! Shared test support: random well-typed terms, β-law instances and a
//! normal form for comparing generated code.
#![allow(dead_code)]

use diffcbv::ast::{Comp, Fresh, Ty, Val};
use diffcbv::eval::Machine;
use diffcbv::ops::Prim;
use diffcbv::typecheck::Ctx;
use diffcbv::{corpus, Budget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Binder names. Several look like generated names on purpose, to provoke
/// collisions with fresh-name supplies.
pub const NAMES: [&str; 10] = ["x", "y", "z", "f", "g", "w", "x_1", "dx_2", "y_3", "m_1"];

pub struct Gen {
    pub rng: ChaCha20Rng,
    pub allow_iterate: bool,
    /// Keeps `real` out of every generated type and term.
    pub no_real: bool,
}

pub fn list_ty() -> Ty {
    Ty::real_list()
}

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen {
            rng: ChaCha20Rng::seed_from_u64(seed),
            allow_iterate: true,
            no_real: false,
        }
    }

    /// Terms without `iterate` always terminate, since the only recursive
    /// type generated is covariant.
    pub fn terminating(seed: u64) -> Gen {
        Gen {
            allow_iterate: false,
            ..Gen::new(seed)
        }
    }

    pub fn name(&mut self) -> String {
        NAMES[self.rng.random_range(0..NAMES.len())].to_string()
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    pub fn real_free(seed: u64) -> Gen {
        Gen {
            no_real: true,
            ..Gen::new(seed)
        }
    }

    /// A random type of bounded size; `void` appears only as a function domain.
    pub fn ty(&mut self, depth: u32) -> Ty {
        let t = self.any_ty(depth);
        if self.no_real && mentions_real(&t) {
            return Ty::Unit;
        }
        t
    }

    fn any_ty(&mut self, depth: u32) -> Ty {
        let pick = if depth == 0 {
            self.rng.random_range(0..3)
        } else {
            self.rng.random_range(0..9)
        };
        match pick {
            0 | 1 => Ty::Real,
            2 => Ty::Unit,
            3 => Ty::bool(),
            4 => Ty::prod(self.ty(depth - 1), self.ty(depth - 1)),
            5 => Ty::sum(self.ty(depth - 1), self.ty(depth - 1)),
            6 => Ty::arrow(self.ty(depth - 1), self.ty(depth - 1)),
            7 => list_ty(),
            _ => {
                if self.chance(0.3) {
                    Ty::arrow(Ty::Void, self.ty(depth - 1))
                } else {
                    Ty::Real
                }
            }
        }
    }

    fn vars_of(&self, ctx: &Ctx, ty: &Ty) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (x, _) in ctx.bindings() {
            if !out.contains(x) && ctx.lookup(x).is_some_and(|t| t.alpha_eq(ty)) {
                out.push(x.clone());
            }
        }
        out
    }

    fn constant(&mut self) -> f64 {
        (self.rng.random_range(-300..300) as f64) / 100.0
    }

    pub fn val(&mut self, ctx: &Ctx, ty: &Ty, depth: u32) -> Val {
        let vars = self.vars_of(ctx, ty);
        if !vars.is_empty() && (depth == 0 || self.chance(0.35)) {
            return Val::var(vars[self.rng.random_range(0..vars.len())].clone());
        }
        let d = depth.saturating_sub(1);
        match ty {
            Ty::Real => Val::Const(self.constant()),
            Ty::Unit => Val::Unit,
            Ty::Prod(a, b) => Val::pair(self.val(ctx, a, d), self.val(ctx, b, d)),
            Ty::Sum(a, b) => {
                let left = if depth == 0 {
                    !contains_mu_var(a) || contains_mu_var(b)
                } else {
                    self.chance(0.5)
                };
                let left = if matches!(**a, Ty::Void) {
                    false
                } else if matches!(**b, Ty::Void) {
                    true
                } else {
                    left
                };
                if left {
                    Val::inl(self.val(ctx, a, d), ty.clone())
                } else {
                    Val::inr(self.val(ctx, b, d), ty.clone())
                }
            }
            Ty::Arrow(a, b) => {
                let x = self.name();
                let inner = ctx.with(x.clone(), (**a).clone());
                Val::lam(x, (**a).clone(), self.comp(&inner, b, d))
            }
            Ty::Mu(..) => {
                let unfolded = ty.unfold().expect("mu type");
                // structural depth, so recursion bottoms out in the base case
                let payload = if depth == 0 {
                    self.val(ctx, &unfolded, 0)
                } else {
                    self.val(ctx, &unfolded, d)
                };
                Val::roll(payload, ty.clone())
            }
            Ty::Void | Ty::Var(_) => panic!("no closed values of type {ty}"),
        }
    }

    pub fn comp(&mut self, ctx: &Ctx, ty: &Ty, depth: u32) -> Comp {
        if depth == 0 {
            return Comp::Return(self.val(ctx, ty, 0));
        }
        let d = depth - 1;
        let void_vars = self.vars_of(ctx, &Ty::Void);
        loop {
            match self.rng.random_range(0..12) {
                0 => return Comp::Return(self.val(ctx, ty, d)),
                1 | 2 => {
                    let x = self.name();
                    let s = self.ty(1);
                    let first = self.comp(ctx, &s, d);
                    let rest = self.comp(&ctx.with(x.clone(), s), ty, d);
                    return Comp::bind(x, first, rest);
                }
                3 if *ty == Ty::Real => {
                    let op = match self.rng.random_range(0..Prim::NAMED.len() + 1) {
                        i if i < Prim::NAMED.len() => Prim::NAMED[i],
                        _ => Prim::Const(self.constant()),
                    };
                    let args = (0..op.arity()).map(|_| self.val(ctx, &Ty::Real, d)).collect();
                    return Comp::Prim(op, args);
                }
                4 if !self.no_real && ty.alpha_eq(&Ty::bool()) => return Comp::Sign(self.val(ctx, &Ty::Real, d)),
                5 => {
                    let (a, b) = (self.ty(1), self.ty(1));
                    let s = Ty::sum(a.clone(), b.clone());
                    let scrutinee = self.val(ctx, &s, d);
                    let (l, r) = (self.name(), self.name());
                    let left = self.comp(&ctx.with(l.clone(), a), ty, d);
                    let right = self.comp(&ctx.with(r.clone(), b), ty, d);
                    return Comp::case_sum(scrutinee, l, left, r, right);
                }
                6 => {
                    let (a, b) = (self.ty(1), self.ty(1));
                    let scrutinee = self.val(ctx, &Ty::prod(a.clone(), b.clone()), d);
                    let (x, y) = (self.name(), self.name());
                    let body = self.comp(&ctx.with(x.clone(), a).with(y.clone(), b), ty, d);
                    return Comp::case_pair(scrutinee, x, y, body);
                }
                7 => {
                    let scrutinee = self.val(ctx, &Ty::Unit, d);
                    return Comp::CaseUnit(scrutinee, Box::new(self.comp(ctx, ty, d)));
                }
                8 | 9 => {
                    let s = self.ty(1);
                    let f = self.val(ctx, &Ty::arrow(s.clone(), ty.clone()), d);
                    let a = self.val(ctx, &s, d);
                    return Comp::App(f, a);
                }
                10 if self.allow_iterate => {
                    let s = self.ty(1);
                    let var = self.name();
                    let body = self.comp(&ctx.with(var.clone(), s.clone()), &Ty::sum(s.clone(), ty.clone()), d);
                    let start = self.val(ctx, &s, d);
                    return Comp::iterate(body, var, start);
                }
                11 => {
                    if !void_vars.is_empty() && self.chance(0.5) {
                        let v = void_vars[self.rng.random_range(0..void_vars.len())].clone();
                        return Comp::CaseVoid(Val::var(v), ty.clone());
                    }
                    if self.no_real {
                        continue;
                    }
                    let l = list_ty();
                    let scrutinee = self.val(ctx, &l, d);
                    let x = self.name();
                    let body = self.comp(&ctx.with(x.clone(), l.unfold().unwrap()), ty, d);
                    return Comp::case_roll(scrutinee, x, body);
                }
                _ => continue,
            }
        }
    }

    /// A context of up to three variables of random types.
    pub fn ctx(&mut self) -> Ctx {
        let mut ctx = Ctx::new();
        for _ in 0..self.rng.random_range(0..=3) {
            let x = self.name();
            let t = self.ty(2);
            ctx = ctx.with(x, t);
        }
        ctx
    }

    /// A well-typed `(Γ, t, τ)` with `t` of depth at most `depth`.
    pub fn typed_comp(&mut self, depth: u32) -> (Ctx, Comp, Ty) {
        let ctx = self.ctx();
        let ty = self.ty(2);
        let t = self.comp(&ctx, &ty, depth);
        (ctx, t, ty)
    }
}

pub fn mentions_real(t: &Ty) -> bool {
    match t {
        Ty::Real => true,
        Ty::Sum(a, b) | Ty::Prod(a, b) | Ty::Arrow(a, b) => mentions_real(a) || mentions_real(b),
        Ty::Mu(_, b) => mentions_real(b),
        _ => false,
    }
}

fn contains_mu_var(t: &Ty) -> bool {
    !t.free_ty_vars().is_empty()
        || match t {
            Ty::Mu(..) => true,
            Ty::Sum(a, b) | Ty::Prod(a, b) => contains_mu_var(a) || contains_mu_var(b),
            _ => false,
        }
}

/// Renames every bound term variable to a fresh name, giving an α-variant.
pub fn rename_bound(t: &Comp, fresh: &mut Fresh) -> Comp {
    let rn = |x: &str, body: &Comp, fresh: &mut Fresh| {
        let n = fresh.name(x);
        (n.clone(), body.subst(x, &Val::var(n)))
    };
    match t {
        Comp::Return(v) => Comp::Return(rename_bound_val(v, fresh)),
        Comp::Bind(x, first, rest) => {
            let first = rename_bound(first, fresh);
            let (n, rest) = rn(x, rest, fresh);
            Comp::bind(n, first, rename_bound(&rest, fresh))
        }
        Comp::CaseVoid(v, ty) => Comp::CaseVoid(rename_bound_val(v, fresh), ty.clone()),
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => {
            let s = rename_bound_val(scrutinee, fresh);
            let (l, left) = rn(left_var, left, fresh);
            let (r, right) = rn(right_var, right, fresh);
            Comp::case_sum(s, l, rename_bound(&left, fresh), r, rename_bound(&right, fresh))
        }
        Comp::CaseUnit(v, body) => Comp::CaseUnit(rename_bound_val(v, fresh), Box::new(rename_bound(body, fresh))),
        Comp::CasePair {
            scrutinee,
            fst,
            snd,
            body,
        } => {
            let s = rename_bound_val(scrutinee, fresh);
            if fst == snd {
                // only the second binder is visible
                let a = fresh.name(fst);
                let (b, body) = rn(snd, body, fresh);
                return Comp::case_pair(s, a, b, rename_bound(&body, fresh));
            }
            let a = fresh.name(fst);
            let b = fresh.name(snd);
            let body = body.subst_many(&[(fst.clone(), Val::var(a.clone())), (snd.clone(), Val::var(b.clone()))]);
            Comp::case_pair(s, a, b, rename_bound(&body, fresh))
        }
        Comp::App(f, a) => Comp::App(rename_bound_val(f, fresh), rename_bound_val(a, fresh)),
        Comp::Prim(op, args) => Comp::Prim(*op, args.iter().map(|a| rename_bound_val(a, fresh)).collect()),
        Comp::Sign(v) => Comp::Sign(rename_bound_val(v, fresh)),
        Comp::Iterate { body, var, start } => {
            let start = rename_bound_val(start, fresh);
            let (n, body) = rn(var, body, fresh);
            Comp::iterate(rename_bound(&body, fresh), n, start)
        }
        Comp::CaseRoll {
            scrutinee,
            var,
            body,
        } => {
            let s = rename_bound_val(scrutinee, fresh);
            let (n, body) = rn(var, body, fresh);
            Comp::case_roll(s, n, rename_bound(&body, fresh))
        }
    }
}

pub fn rename_bound_val(v: &Val, fresh: &mut Fresh) -> Val {
    match v {
        Val::Var(_) | Val::Const(_) | Val::Unit => v.clone(),
        Val::Inl(p, t) => Val::inl(rename_bound_val(p, fresh), t.clone()),
        Val::Inr(p, t) => Val::inr(rename_bound_val(p, fresh), t.clone()),
        Val::Roll(p, t) => Val::roll(rename_bound_val(p, fresh), t.clone()),
        Val::Pair(a, b) => Val::pair(rename_bound_val(a, fresh), rename_bound_val(b, fresh)),
        Val::Lam(x, t, body) => {
            let n = fresh.name(x);
            let body = body.subst(x, &Val::var(n.clone()));
            Val::lam(n, t.clone(), rename_bound(&body, fresh))
        }
    }
}

/// Binders are renamed to names unused anywhere in `t`.
pub fn alpha_variant(t: &Comp) -> Comp {
    let mut fresh = Fresh::for_comp(t);
    rename_bound(t, &mut fresh)
}

/// Outcomes agree when their classes match, values are α-equal and domain
/// errors name the same operation at the same arguments. Step counts are
/// ignored.
pub fn outcomes_agree(a: &diffcbv::Outcome, b: &diffcbv::Outcome) -> bool {
    use diffcbv::Outcome;
    match (a, b) {
        (Outcome::Value(v), Outcome::Value(w)) => v.alpha_eq(w),
        (Outcome::DomainError { op: o1, args: a1, .. }, Outcome::DomainError { op: o2, args: a2, .. }) => {
            o1 == o2 && a1.iter().zip(a2).all(|(x, y)| x.to_bits() == y.to_bits()) && a1.len() == a2.len()
        }
        (Outcome::OutOfFuel { .. }, Outcome::OutOfFuel { .. }) => true,
        _ => false,
    }
}

/// Normal form modulo let-return β and bind associativity: no bind has a
/// `return` or another bind as its first component.
pub fn normalize(t: &Comp) -> Comp {
    let mut cur = diffcbv::ad::beta_simplify(t);
    loop {
        let mut fresh = Fresh::for_comp(&cur);
        let next = diffcbv::ad::beta_simplify(&reassoc(&cur, &mut fresh));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn reassoc(t: &Comp, fresh: &mut Fresh) -> Comp {
    match t {
        Comp::Bind(x, first, rest) => {
            let first = reassoc(first, fresh);
            let rest = reassoc(rest, fresh);
            rebind(x.clone(), first, rest, fresh)
        }
        Comp::Return(v) => Comp::Return(reassoc_val(v, fresh)),
        Comp::CaseVoid(..) | Comp::App(..) | Comp::Prim(..) | Comp::Sign(..) => {
            map_vals(t, &mut |v| reassoc_val(v, fresh))
        }
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => Comp::case_sum(
            reassoc_val(scrutinee, fresh),
            left_var.clone(),
            reassoc(left, fresh),
            right_var.clone(),
            reassoc(right, fresh),
        ),
        Comp::CaseUnit(v, body) => Comp::CaseUnit(reassoc_val(v, fresh), Box::new(reassoc(body, fresh))),
        Comp::CasePair {
            scrutinee,
            fst,
            snd,
            body,
        } => Comp::case_pair(reassoc_val(scrutinee, fresh), fst.clone(), snd.clone(), reassoc(body, fresh)),
        Comp::Iterate { body, var, start } => {
            Comp::iterate(reassoc(body, fresh), var.clone(), reassoc_val(start, fresh))
        }
        Comp::CaseRoll {
            scrutinee,
            var,
            body,
        } => Comp::case_roll(reassoc_val(scrutinee, fresh), var.clone(), reassoc(body, fresh)),
    }
}

/// `x ← (y ← a; b); c` becomes `y ← a; x ← b; c`, renaming `y` when `c`
/// mentions it.
fn rebind(x: String, first: Comp, rest: Comp, fresh: &mut Fresh) -> Comp {
    match first {
        Comp::Bind(y, a, b) => {
            let (y, b) = if y != x && rest.free_vars().contains(&y) {
                let y2 = fresh.name(&y);
                let b = b.subst(&y, &Val::var(y2.clone()));
                (y2, b)
            } else {
                (y, *b)
            };
            let inner = rebind(x, b, rest, fresh);
            Comp::bind(y, *a, inner)
        }
        first => Comp::bind(x, first, rest),
    }
}

fn reassoc_val(v: &Val, fresh: &mut Fresh) -> Val {
    match v {
        Val::Var(_) | Val::Const(_) | Val::Unit => v.clone(),
        Val::Inl(p, ty) => Val::inl(reassoc_val(p, fresh), ty.clone()),
        Val::Inr(p, ty) => Val::inr(reassoc_val(p, fresh), ty.clone()),
        Val::Roll(p, ty) => Val::roll(reassoc_val(p, fresh), ty.clone()),
        Val::Pair(a, b) => Val::pair(reassoc_val(a, fresh), reassoc_val(b, fresh)),
        Val::Lam(x, ty, body) => Val::lam(x.clone(), ty.clone(), reassoc(body, fresh)),
    }
}

fn map_vals(t: &Comp, f: &mut impl FnMut(&Val) -> Val) -> Comp {
    match t {
        Comp::CaseVoid(v, ty) => Comp::CaseVoid(f(v), ty.clone()),
        Comp::App(a, b) => Comp::App(f(a), f(b)),
        Comp::Prim(op, args) => Comp::Prim(*op, args.iter().map(&mut *f).collect()),
        Comp::Sign(v) => Comp::Sign(f(v)),
        other => other.clone(),
    }
}

/// A random point inside the domain of `op`, kept away from its boundary so
/// that a central difference with a small step stays inside too.
pub fn op_point(rng: &mut ChaCha20Rng, op: Prim) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..op.arity()).map(|_| rng.random_range(-5.0..5.0)).collect();
    match op {
        Prim::Log => xs[0] = rng.random_range(0.1..10.0),
        Prim::Div => {
            let m = rng.random_range(0.5..5.0);
            xs[1] = if rng.random_bool(0.5) { m } else { -m };
        }
        _ => {}
    }
    xs
}

/// `(∂ᵢop interpreted at xs, central difference of op_eval, tolerance)`.
pub fn partial_against_fd(op: Prim, i: usize, xs: &[f64]) -> (f64, f64, f64) {
    let inst: Vec<(String, Val)> = xs
        .iter()
        .enumerate()
        .map(|(j, x)| (diffcbv::ops::template_var(j + 1), Val::Const(*x)))
        .collect();
    let t = op.partial(i).unwrap().subst_many(&inst);
    let ad = diffcbv::eval::eval_closed_real(&t, diffcbv::Budget::new(1_000)).expect("partial evaluates");
    let h = 1e-5 * xs[i - 1].abs().max(1.0);
    let at = |d: f64| {
        let mut p = xs.to_vec();
        p[i - 1] += d;
        op.eval(&p).unwrap()
    };
    let fd = (at(h) - at(-h)) / (2.0 * h);
    (ad, fd, 1e-6_f64.max(1e-5 * ad.abs()))
}

/// Runs every corpus program on sampled inputs and hands each reached state
/// to `visit` together with its type.
pub fn corpus_states(mut visit: impl FnMut(&str, &Comp, &Ty)) {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for e in corpus::all() {
        let p = e.program();
        for _ in 0..3 {
            let t = p.apply(&(e.sample)(&mut rng)).unwrap();
            visit(e.name, &t, &p.ret);
            let mut m = Machine::new(t);
            m.run_observed(Budget::new(3_000), &mut |_, _, m| visit(e.name, &m.state(), &p.ret))
                .unwrap();
        }
    }
}

/// The β-law instances exercised below.
#[derive(Clone, Copy, Debug)]
pub enum Law {
    LetReturn,
    AppLam,
    CaseInl,
    CaseInr,
    CasePair,
    CaseUnit,
    CaseRoll,
    BindAssoc,
}

pub const LAWS: [Law; 8] = [
    Law::LetReturn,
    Law::AppLam,
    Law::CaseInl,
    Law::CaseInr,
    Law::CasePair,
    Law::CaseUnit,
    Law::CaseRoll,
    Law::BindAssoc,
];

/// A closed instance `(lhs, rhs, type)` of `law`.
pub fn beta_instance(g: &mut Gen, law: Law) -> (Comp, Comp, Ty) {
    let empty = Ctx::new();
    let ty = g.ty(2);
    let depth = 5;
    match law {
        Law::LetReturn | Law::AppLam => {
            let (x, s) = (g.name(), g.ty(2));
            let v = g.val(&empty, &s, 3);
            let body = g.comp(&empty.with(x.clone(), s.clone()), &ty, depth);
            let rhs = body.subst(&x, &v);
            let lhs = match law {
                Law::LetReturn => Comp::bind(x, Comp::Return(v), body),
                _ => Comp::App(Val::lam(x, s, body), v),
            };
            (lhs, rhs, ty)
        }
        Law::CaseInl | Law::CaseInr => {
            let (a, b) = (g.ty(2), g.ty(2));
            let sum = Ty::sum(a.clone(), b.clone());
            let (x, y) = (g.name(), g.name());
            let left = g.comp(&empty.with(x.clone(), a.clone()), &ty, depth);
            let right = g.comp(&empty.with(y.clone(), b.clone()), &ty, depth);
            let (scrutinee, rhs) = if matches!(law, Law::CaseInl) {
                let v = g.val(&empty, &a, 3);
                (Val::inl(v.clone(), sum), left.subst(&x, &v))
            } else {
                let v = g.val(&empty, &b, 3);
                (Val::inr(v.clone(), sum), right.subst(&y, &v))
            };
            (Comp::case_sum(scrutinee, x, left, y, right), rhs, ty)
        }
        Law::CasePair => {
            let (a, b) = (g.ty(2), g.ty(2));
            let x = g.name();
            let mut y = g.name();
            while y == x {
                y = g.name();
            }
            let body = g.comp(&empty.with(x.clone(), a.clone()).with(y.clone(), b.clone()), &ty, depth);
            let (v, w) = (g.val(&empty, &a, 3), g.val(&empty, &b, 3));
            // closed values, so sequential substitution is simultaneous
            let rhs = body.subst(&x, &v).subst(&y, &w);
            (Comp::case_pair(Val::pair(v, w), x, y, body), rhs, ty)
        }
        Law::CaseUnit => {
            let body = g.comp(&empty, &ty, depth);
            (Comp::CaseUnit(Val::Unit, Box::new(body.clone())), body, ty)
        }
        Law::CaseRoll => {
            let l = Ty::real_list();
            let unfolded = l.unfold().unwrap();
            let x = g.name();
            let v = g.val(&empty, &unfolded, 3);
            let body = g.comp(&empty.with(x.clone(), unfolded), &ty, depth);
            let rhs = body.subst(&x, &v);
            (Comp::case_roll(Val::roll(v, l), x, body), rhs, ty)
        }
        Law::BindAssoc => {
            let (s1, s2) = (g.ty(2), g.ty(2));
            let x = g.name();
            let mut y = g.name();
            while y == x {
                y = g.name();
            }
            let t = g.comp(&empty, &s1, depth);
            let s = g.comp(&empty.with(x.clone(), s1), &s2, depth);
            let r = g.comp(&empty.with(y.clone(), s2), &ty, depth);
            let lhs = Comp::bind(y.clone(), Comp::bind(x.clone(), t.clone(), s.clone()), r.clone());
            let rhs = Comp::bind(x, t, Comp::bind(y, s, r));
            (lhs, rhs, ty)
        }
    }
}
