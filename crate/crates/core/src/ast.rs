//! Abstract syntax of the fine-grain call-by-value core: types, values and
//! computations, together with free variables, capture-avoiding
//! substitution and α-equivalence.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::ops::Prim;

/// Types, including type variables and iso-recursive `μ`-types. Children are
/// shared, since ascriptions get copied by every substitution.
#[derive(Clone, Debug, PartialEq)]
pub enum Ty {
    Real,
    Unit,
    Void,
    Sum(Arc<Ty>, Arc<Ty>),
    Prod(Arc<Ty>, Arc<Ty>),
    Arrow(Arc<Ty>, Arc<Ty>),
    Var(String),
    Mu(String, Arc<Ty>),
}

impl Ty {
    pub fn sum(left: Ty, right: Ty) -> Ty {
        Ty::Sum(Arc::new(left), Arc::new(right))
    }

    pub fn prod(left: Ty, right: Ty) -> Ty {
        Ty::Prod(Arc::new(left), Arc::new(right))
    }

    pub fn arrow(domain: Ty, codomain: Ty) -> Ty {
        Ty::Arrow(Arc::new(domain), Arc::new(codomain))
    }

    pub fn mu(binder: impl Into<String>, body: Ty) -> Ty {
        Ty::Mu(binder.into(), Arc::new(body))
    }

    pub fn var(name: impl Into<String>) -> Ty {
        Ty::Var(name.into())
    }

    /// `unit + unit`, the type of booleans produced by `sign`.
    pub fn bool() -> Ty {
        Ty::sum(Ty::Unit, Ty::Unit)
    }

    /// `μα. unit + real × α`.
    pub fn real_list() -> Ty {
        Ty::mu("a", Ty::sum(Ty::Unit, Ty::prod(Ty::Real, Ty::var("a"))))
    }

    /// True iff no arrow occurs anywhere in the type, including under `μ`.
    pub fn is_first_order(&self) -> bool {
        match self {
            Ty::Real | Ty::Unit | Ty::Void | Ty::Var(_) => true,
            Ty::Sum(a, b) | Ty::Prod(a, b) => a.is_first_order() && b.is_first_order(),
            Ty::Arrow(_, _) => false,
            Ty::Mu(_, body) => body.is_first_order(),
        }
    }

    pub fn free_ty_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_ty_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_ty_vars(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Ty::Real | Ty::Unit | Ty::Void => {}
            Ty::Sum(a, b) | Ty::Prod(a, b) | Ty::Arrow(a, b) => {
                a.collect_free_ty_vars(bound, out);
                b.collect_free_ty_vars(bound, out);
            }
            Ty::Var(name) => {
                if !bound.contains(name) {
                    out.insert(name.clone());
                }
            }
            Ty::Mu(binder, body) => {
                bound.push(binder.clone());
                body.collect_free_ty_vars(bound, out);
                bound.pop();
            }
        }
    }

    fn collect_ty_names(&self, out: &mut HashSet<String>) {
        match self {
            Ty::Real | Ty::Unit | Ty::Void => {}
            Ty::Sum(a, b) | Ty::Prod(a, b) | Ty::Arrow(a, b) => {
                a.collect_ty_names(out);
                b.collect_ty_names(out);
            }
            Ty::Var(name) => {
                out.insert(name.clone());
            }
            Ty::Mu(binder, body) => {
                out.insert(binder.clone());
                body.collect_ty_names(out);
            }
        }
    }

    /// Capture-avoiding substitution `self[replacement/var]`.
    pub fn subst(&self, var: &str, replacement: &Ty) -> Ty {
        let fv = replacement.free_ty_vars();
        self.subst_inner(var, replacement, &fv)
    }

    fn subst_inner(&self, var: &str, replacement: &Ty, fv: &BTreeSet<String>) -> Ty {
        match self {
            Ty::Real | Ty::Unit | Ty::Void => self.clone(),
            Ty::Sum(a, b) => Ty::sum(
                a.subst_inner(var, replacement, fv),
                b.subst_inner(var, replacement, fv),
            ),
            Ty::Prod(a, b) => Ty::prod(
                a.subst_inner(var, replacement, fv),
                b.subst_inner(var, replacement, fv),
            ),
            Ty::Arrow(a, b) => Ty::arrow(
                a.subst_inner(var, replacement, fv),
                b.subst_inner(var, replacement, fv),
            ),
            Ty::Var(name) if name == var => replacement.clone(),
            Ty::Var(_) => self.clone(),
            Ty::Mu(binder, _) if binder == var => self.clone(),
            Ty::Mu(binder, body) => {
                if fv.contains(binder) && body.free_ty_vars().contains(var) {
                    let mut used = HashSet::new();
                    body.collect_ty_names(&mut used);
                    replacement.collect_ty_names(&mut used);
                    used.insert(var.to_string());
                    let mut fresh = Fresh::with_used(used);
                    let renamed = fresh.name(binder);
                    let body = body.subst(binder, &Ty::Var(renamed.clone()));
                    Ty::mu(renamed, body.subst_inner(var, replacement, fv))
                } else {
                    Ty::mu(binder.clone(), body.subst_inner(var, replacement, fv))
                }
            }
        }
    }

    /// One-step unfolding of a `μ`-type: `μα.τ ↦ τ[μα.τ/α]`.
    pub fn unfold(&self) -> Option<Ty> {
        match self {
            Ty::Mu(binder, body) => Some(body.subst(binder, self)),
            _ => None,
        }
    }

    /// Equality up to renaming of `μ`-bound type variables.
    pub fn alpha_eq(&self, other: &Ty) -> bool {
        ty_alpha(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

fn ty_alpha(a: &Ty, b: &Ty, env_a: &mut Vec<String>, env_b: &mut Vec<String>) -> bool {
    match (a, b) {
        (Ty::Real, Ty::Real) | (Ty::Unit, Ty::Unit) | (Ty::Void, Ty::Void) => true,
        (Ty::Sum(a1, a2), Ty::Sum(b1, b2))
        | (Ty::Prod(a1, a2), Ty::Prod(b1, b2))
        | (Ty::Arrow(a1, a2), Ty::Arrow(b1, b2)) => {
            ty_alpha(a1, b1, env_a, env_b) && ty_alpha(a2, b2, env_a, env_b)
        }
        (Ty::Var(x), Ty::Var(y)) => match (position(env_a, x), position(env_b, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Ty::Mu(x, ba), Ty::Mu(y, bb)) => {
            env_a.push(x.clone());
            env_b.push(y.clone());
            let eq = ty_alpha(ba, bb, env_a, env_b);
            env_a.pop();
            env_b.pop();
            eq
        }
        _ => false,
    }
}

/// Index of the innermost binding of `name`, counted from the innermost end.
fn position(env: &[String], name: &str) -> Option<usize> {
    env.iter().rev().position(|n| n == name)
}

/// Values: the pure, already-evaluated fragment.
#[derive(Clone, Debug, PartialEq)]
pub enum Val {
    Var(String),
    Const(f64),
    /// Left injection; the ascription is the full sum type.
    Inl(Box<Val>, Ty),
    /// Right injection; the ascription is the full sum type.
    Inr(Box<Val>, Ty),
    Unit,
    Pair(Box<Val>, Box<Val>),
    Lam(String, Ty, Box<Comp>),
    /// Fold into a recursive type; the ascription is the full `μ`-type.
    Roll(Box<Val>, Ty),
}

/// Computations: everything that may step, fail or diverge.
#[derive(Clone, Debug, PartialEq)]
pub enum Comp {
    Return(Val),
    /// `x ← first; rest`
    Bind(String, Box<Comp>, Box<Comp>),
    CaseVoid(Val, Ty),
    CaseSum {
        scrutinee: Val,
        left_var: String,
        left: Box<Comp>,
        right_var: String,
        right: Box<Comp>,
    },
    CaseUnit(Val, Box<Comp>),
    CasePair {
        scrutinee: Val,
        fst: String,
        snd: String,
        body: Box<Comp>,
    },
    App(Val, Val),
    Prim(Prim, Vec<Val>),
    Sign(Val),
    /// `iterate body from var = start`
    Iterate {
        body: Box<Comp>,
        var: String,
        start: Val,
    },
    /// `unroll scrutinee as var in body`
    CaseRoll {
        scrutinee: Val,
        var: String,
        body: Box<Comp>,
    },
}

impl Val {
    pub fn var(name: impl Into<String>) -> Val {
        Val::Var(name.into())
    }

    pub fn pair(a: Val, b: Val) -> Val {
        Val::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(v: Val, ty: Ty) -> Val {
        Val::Inl(Box::new(v), ty)
    }

    pub fn inr(v: Val, ty: Ty) -> Val {
        Val::Inr(Box::new(v), ty)
    }

    pub fn roll(v: Val, ty: Ty) -> Val {
        Val::Roll(Box::new(v), ty)
    }

    pub fn lam(param: impl Into<String>, ty: Ty, body: Comp) -> Val {
        Val::Lam(param.into(), ty, Box::new(body))
    }

    /// `true` is `inl ()`, matching the convention of `sign` and `<`.
    pub fn bool(b: bool) -> Val {
        if b {
            Val::inl(Val::Unit, Ty::bool())
        } else {
            Val::inr(Val::Unit, Ty::bool())
        }
    }

    /// Builds a `μα. unit + real × α` list value.
    pub fn real_list(items: &[f64]) -> Val {
        let list = Ty::real_list();
        let body = list.unfold().expect("list type is a mu type");
        items.iter().rev().fold(
            Val::roll(Val::inl(Val::Unit, body.clone()), list.clone()),
            |tail, &x| {
                Val::roll(
                    Val::inr(Val::pair(Val::Const(x), tail), body.clone()),
                    list.clone(),
                )
            },
        )
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fv_val(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn alpha_eq(&self, other: &Val) -> bool {
        Alpha::default().val(self, other)
    }

    pub fn subst(&self, var: &str, v: &Val) -> Val {
        let mut out = self.clone();
        Subst::single(var, v).val(&mut out);
        out
    }
}

impl Comp {
    pub fn bind(x: impl Into<String>, first: Comp, rest: Comp) -> Comp {
        Comp::Bind(x.into(), Box::new(first), Box::new(rest))
    }

    pub fn case_sum(
        scrutinee: Val,
        left_var: impl Into<String>,
        left: Comp,
        right_var: impl Into<String>,
        right: Comp,
    ) -> Comp {
        Comp::CaseSum {
            scrutinee,
            left_var: left_var.into(),
            left: Box::new(left),
            right_var: right_var.into(),
            right: Box::new(right),
        }
    }

    pub fn case_pair(
        scrutinee: Val,
        fst: impl Into<String>,
        snd: impl Into<String>,
        body: Comp,
    ) -> Comp {
        Comp::CasePair {
            scrutinee,
            fst: fst.into(),
            snd: snd.into(),
            body: Box::new(body),
        }
    }

    pub fn case_roll(scrutinee: Val, var: impl Into<String>, body: Comp) -> Comp {
        Comp::CaseRoll {
            scrutinee,
            var: var.into(),
            body: Box::new(body),
        }
    }

    pub fn iterate(body: Comp, var: impl Into<String>, start: Val) -> Comp {
        Comp::Iterate {
            body: Box::new(body),
            var: var.into(),
            start,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fv_comp(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn alpha_eq(&self, other: &Comp) -> bool {
        Alpha::default().comp(self, other)
    }

    /// Capture-avoiding substitution `self[v/var]`.
    pub fn subst(&self, var: &str, v: &Val) -> Comp {
        self.clone().subst_owned(var, v)
    }

    /// [`Comp::subst`] reusing the storage of `self`.
    pub fn subst_owned(mut self, var: &str, v: &Val) -> Comp {
        Subst::single(var, v).comp(&mut self);
        self
    }

    /// Simultaneous capture-avoiding substitution.
    pub fn subst_many(&self, pairs: &[(String, Val)]) -> Comp {
        self.clone().subst_many_owned(pairs.to_vec())
    }

    pub fn subst_many_owned(mut self, pairs: Vec<(String, Val)>) -> Comp {
        Subst::new(pairs).comp(&mut self);
        self
    }

    /// Every term identifier occurring in the computation, bound or free.
    pub fn identifiers(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        idents_comp(self, &mut out);
        out
    }

    /// Number of syntax nodes, used to bound generated terms.
    pub fn size(&self) -> usize {
        match self {
            Comp::Return(v) | Comp::CaseVoid(v, _) | Comp::Sign(v) => 1 + v.size(),
            Comp::Bind(_, a, b) => 1 + a.size() + b.size(),
            Comp::CaseSum {
                scrutinee,
                left,
                right,
                ..
            } => 1 + scrutinee.size() + left.size() + right.size(),
            Comp::CaseUnit(v, body)
            | Comp::CasePair {
                scrutinee: v, body, ..
            }
            | Comp::CaseRoll {
                scrutinee: v, body, ..
            } => 1 + v.size() + body.size(),
            Comp::App(f, a) => 1 + f.size() + a.size(),
            Comp::Prim(_, args) => 1 + args.iter().map(Val::size).sum::<usize>(),
            Comp::Iterate { body, start, .. } => 1 + body.size() + start.size(),
        }
    }
}

impl Val {
    pub fn size(&self) -> usize {
        match self {
            Val::Var(_) | Val::Const(_) | Val::Unit => 1,
            Val::Inl(v, _) | Val::Inr(v, _) | Val::Roll(v, _) => 1 + v.size(),
            Val::Pair(a, b) => 1 + a.size() + b.size(),
            Val::Lam(_, _, body) => 1 + body.size(),
        }
    }

    pub fn identifiers(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        idents_val(self, &mut out);
        out
    }
}

fn fv_val<'a>(v: &'a Val, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match v {
        Val::Var(x) => {
            if !bound.contains(&x.as_str()) {
                out.insert(x.clone());
            }
        }
        Val::Const(_) | Val::Unit => {}
        Val::Inl(v, _) | Val::Inr(v, _) | Val::Roll(v, _) => fv_val(v, bound, out),
        Val::Pair(a, b) => {
            fv_val(a, bound, out);
            fv_val(b, bound, out);
        }
        Val::Lam(x, _, body) => under(bound, &[x], |bound| fv_comp(body, bound, out)),
    }
}

fn under<'a, R>(bound: &mut Vec<&'a str>, names: &[&'a String], f: impl FnOnce(&mut Vec<&'a str>) -> R) -> R {
    for n in names {
        bound.push(n.as_str());
    }
    let r = f(bound);
    for _ in names {
        bound.pop();
    }
    r
}

fn fv_comp<'a>(t: &'a Comp, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match t {
        Comp::Return(v) | Comp::CaseVoid(v, _) | Comp::Sign(v) => fv_val(v, bound, out),
        Comp::Bind(x, first, rest) => {
            fv_comp(first, bound, out);
            under(bound, &[x], |bound| fv_comp(rest, bound, out));
        }
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => {
            fv_val(scrutinee, bound, out);
            under(bound, &[left_var], |bound| fv_comp(left, bound, out));
            under(bound, &[right_var], |bound| fv_comp(right, bound, out));
        }
        Comp::CaseUnit(v, body) => {
            fv_val(v, bound, out);
            fv_comp(body, bound, out);
        }
        Comp::CasePair {
            scrutinee,
            fst,
            snd,
            body,
        } => {
            fv_val(scrutinee, bound, out);
            under(bound, &[fst, snd], |bound| fv_comp(body, bound, out));
        }
        Comp::App(f, a) => {
            fv_val(f, bound, out);
            fv_val(a, bound, out);
        }
        Comp::Prim(_, args) => args.iter().for_each(|a| fv_val(a, bound, out)),
        Comp::Iterate { body, var, start } => {
            under(bound, &[var], |bound| fv_comp(body, bound, out));
            fv_val(start, bound, out);
        }
        Comp::CaseRoll {
            scrutinee,
            var,
            body,
        } => {
            fv_val(scrutinee, bound, out);
            under(bound, &[var], |bound| fv_comp(body, bound, out));
        }
    }
}

fn idents_val(v: &Val, out: &mut HashSet<String>) {
    match v {
        Val::Var(x) => {
            out.insert(x.clone());
        }
        Val::Const(_) | Val::Unit => {}
        Val::Inl(v, _) | Val::Inr(v, _) | Val::Roll(v, _) => idents_val(v, out),
        Val::Pair(a, b) => {
            idents_val(a, out);
            idents_val(b, out);
        }
        Val::Lam(x, _, body) => {
            out.insert(x.clone());
            idents_comp(body, out);
        }
    }
}

fn idents_comp(t: &Comp, out: &mut HashSet<String>) {
    match t {
        Comp::Return(v) | Comp::CaseVoid(v, _) | Comp::Sign(v) => idents_val(v, out),
        Comp::Bind(x, a, b) => {
            out.insert(x.clone());
            idents_comp(a, out);
            idents_comp(b, out);
        }
        Comp::CaseSum {
            scrutinee,
            left_var,
            left,
            right_var,
            right,
        } => {
            idents_val(scrutinee, out);
            out.insert(left_var.clone());
            out.insert(right_var.clone());
            idents_comp(left, out);
            idents_comp(right, out);
        }
        Comp::CaseUnit(v, body) => {
            idents_val(v, out);
            idents_comp(body, out);
        }
        Comp::CasePair {
            scrutinee,
            fst,
            snd,
            body,
        } => {
            idents_val(scrutinee, out);
            out.insert(fst.clone());
            out.insert(snd.clone());
            idents_comp(body, out);
        }
        Comp::App(f, a) => {
            idents_val(f, out);
            idents_val(a, out);
        }
        Comp::Prim(_, args) => args.iter().for_each(|a| idents_val(a, out)),
        Comp::Iterate { body, var, start } => {
            out.insert(var.clone());
            idents_comp(body, out);
            idents_val(start, out);
        }
        Comp::CaseRoll {
            scrutinee,
            var,
            body,
        } => {
            idents_val(scrutinee, out);
            out.insert(var.clone());
            idents_comp(body, out);
        }
    }
}

/// Deterministic fresh-name supply.
///
/// Names are `stem_N` with a counter that only grows within one pass, skipping
/// anything already in the used set. Every name handed out is added to the
/// used set.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    used: HashSet<String>,
    counter: u64,
}

impl Fresh {
    pub fn with_used(used: HashSet<String>) -> Fresh {
        Fresh { used, counter: 0 }
    }

    pub fn for_comp(t: &Comp) -> Fresh {
        Fresh::with_used(t.identifiers())
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn reserve_all<I: IntoIterator<Item = String>>(&mut self, names: I) {
        self.used.extend(names);
    }

    pub fn name(&mut self, hint: &str) -> String {
        let stem = stem_of(hint);
        loop {
            self.counter += 1;
            let candidate = format!("{stem}_{}", self.counter);
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

fn stem_of(hint: &str) -> &str {
    let trimmed = match hint.rfind('_') {
        Some(i) if i > 0 && hint[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < hint.len() => {
            &hint[..i]
        }
        _ => hint,
    };
    if trimmed.is_empty() || trimmed == "_" {
        "v"
    } else {
        trimmed
    }
}

/// Simultaneous capture-avoiding substitution of values for variables,
/// performed in place.
struct Subst {
    /// Few entries at a time, so a vector beats hashing.
    map: Vec<(String, Val)>,
    /// Free variables of every value in the range; a binder needs renaming
    /// only when it is in this set.
    range_fv: BTreeSet<String>,
    fresh: Option<Fresh>,
}

impl Subst {
    fn new(map: Vec<(String, Val)>) -> Subst {
        let mut range_fv = BTreeSet::new();
        for (_, v) in &map {
            fv_val(v, &mut Vec::new(), &mut range_fv);
        }
        Subst {
            map,
            range_fv,
            fresh: None,
        }
    }

    fn single(var: &str, v: &Val) -> Subst {
        Subst::new(vec![(var.to_string(), v.clone())])
    }

    fn lookup(&self, x: &str) -> Option<&Val> {
        self.map.iter().rev().find(|(k, _)| k == x).map(|(_, v)| v)
    }

    fn fresh(&mut self, avoid: &Comp) -> &mut Fresh {
        let fresh = self.fresh.get_or_insert_with(Fresh::default);
        fresh.reserve_all(avoid.identifiers());
        fresh.reserve_all(self.range_fv.iter().cloned());
        fresh.reserve_all(self.map.iter().map(|(k, _)| k.clone()));
        fresh
    }

    /// Substitutes into `body` with `binders` in scope, renaming those that
    /// would capture a free variable of the substituted values.
    fn under_binders(&mut self, binders: &mut [&mut String], body: &mut Comp) {
        // Shadowed entries go back where they were: callers truncate the map
        // to its earlier length, so its order matters.
        let mut saved = Vec::new();
        let mut i = 0;
        while i < self.map.len() {
            if binders.iter().any(|b| **b == self.map[i].0) {
                saved.push((i + saved.len(), self.map.remove(i)));
            } else {
                i += 1;
            }
        }
        if !self.map.is_empty() {
            let live = if binders.iter().any(|b| self.range_fv.contains(b.as_str())) {
                let fv = body.free_vars();
                self.map.iter().any(|(k, _)| fv.contains(k))
            } else {
                true
            };
            let base = self.map.len();
            for b in binders.iter_mut() {
                if live && self.range_fv.contains(b.as_str()) {
                    let new = self.fresh(body).name(b);
                    // The renaming is itself part of the substitution for the body.
                    let old = std::mem::replace(&mut **b, new.clone());
                    self.map.push((old, Val::Var(new)));
                }
            }
            self.comp(body);
            self.map.truncate(base);
        }
        for (at, entry) in saved {
            self.map.insert(at, entry);
        }
    }

    fn val(&mut self, v: &mut Val) {
        match v {
            Val::Var(x) => {
                if let Some(r) = self.lookup(x) {
                    *v = r.clone();
                }
            }
            Val::Const(_) | Val::Unit => {}
            Val::Inl(p, _) | Val::Inr(p, _) | Val::Roll(p, _) => self.val(p),
            Val::Pair(a, b) => {
                self.val(a);
                self.val(b);
            }
            Val::Lam(x, _, body) => self.under_binders(&mut [x], body),
        }
    }

    fn comp(&mut self, t: &mut Comp) {
        match t {
            Comp::Return(v) | Comp::CaseVoid(v, _) | Comp::Sign(v) => self.val(v),
            Comp::Bind(x, first, rest) => {
                self.comp(first);
                self.under_binders(&mut [x], rest);
            }
            Comp::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                self.val(scrutinee);
                self.under_binders(&mut [left_var], left);
                self.under_binders(&mut [right_var], right);
            }
            Comp::CaseUnit(v, body) => {
                self.val(v);
                self.comp(body);
            }
            Comp::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => {
                self.val(scrutinee);
                if fst == snd && self.range_fv.contains(fst.as_str()) {
                    // The shadowed binder is dead, but once `snd` is renamed
                    // it would capture the substituted value.
                    *fst = self.fresh(body).name(fst);
                }
                if fst == snd {
                    self.under_binders(&mut [snd], body);
                } else {
                    self.under_binders(&mut [fst, snd], body);
                }
            }
            Comp::App(f, a) => {
                self.val(f);
                self.val(a);
            }
            Comp::Prim(_, args) => args.iter_mut().for_each(|a| self.val(a)),
            Comp::Iterate { body, var, start } => {
                self.val(start);
                self.under_binders(&mut [var], body);
            }
            Comp::CaseRoll {
                scrutinee,
                var,
                body,
            } => {
                self.val(scrutinee);
                self.under_binders(&mut [var], body);
            }
        }
    }
}

/// α-equivalence via paired binder environments.
#[derive(Default)]
struct Alpha {
    env_a: Vec<String>,
    env_b: Vec<String>,
}

impl Alpha {
    fn var(&self, x: &str, y: &str) -> bool {
        match (position(&self.env_a, x), position(&self.env_b, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        }
    }

    fn under(&mut self, xs: &[&String], ys: &[&String], f: impl FnOnce(&mut Self) -> bool) -> bool {
        for x in xs {
            self.env_a.push((*x).clone());
        }
        for y in ys {
            self.env_b.push((*y).clone());
        }
        let r = f(self);
        for _ in xs {
            self.env_a.pop();
        }
        for _ in ys {
            self.env_b.pop();
        }
        r
    }

    fn val(&mut self, a: &Val, b: &Val) -> bool {
        match (a, b) {
            (Val::Var(x), Val::Var(y)) => self.var(x, y),
            (Val::Const(x), Val::Const(y)) => x.to_bits() == y.to_bits(),
            (Val::Unit, Val::Unit) => true,
            (Val::Inl(p, s), Val::Inl(q, t))
            | (Val::Inr(p, s), Val::Inr(q, t))
            | (Val::Roll(p, s), Val::Roll(q, t)) => s.alpha_eq(t) && self.val(p, q),
            (Val::Pair(a1, a2), Val::Pair(b1, b2)) => self.val(a1, b1) && self.val(a2, b2),
            (Val::Lam(x, s, m), Val::Lam(y, t, n)) => {
                s.alpha_eq(t) && self.under(&[x], &[y], |al| al.comp(m, n))
            }
            _ => false,
        }
    }

    fn comp(&mut self, a: &Comp, b: &Comp) -> bool {
        match (a, b) {
            (Comp::Return(v), Comp::Return(w)) | (Comp::Sign(v), Comp::Sign(w)) => self.val(v, w),
            (Comp::Bind(x, a1, a2), Comp::Bind(y, b1, b2)) => {
                self.comp(a1, b1) && self.under(&[x], &[y], |al| al.comp(a2, b2))
            }
            (Comp::CaseVoid(v, s), Comp::CaseVoid(w, t)) => s.alpha_eq(t) && self.val(v, w),
            (
                Comp::CaseSum {
                    scrutinee: v,
                    left_var: x1,
                    left: l1,
                    right_var: y1,
                    right: r1,
                },
                Comp::CaseSum {
                    scrutinee: w,
                    left_var: x2,
                    left: l2,
                    right_var: y2,
                    right: r2,
                },
            ) => {
                self.val(v, w)
                    && self.under(&[x1], &[x2], |al| al.comp(l1, l2))
                    && self.under(&[y1], &[y2], |al| al.comp(r1, r2))
            }
            (Comp::CaseUnit(v, m), Comp::CaseUnit(w, n)) => self.val(v, w) && self.comp(m, n),
            (
                Comp::CasePair {
                    scrutinee: v,
                    fst: x1,
                    snd: y1,
                    body: m,
                },
                Comp::CasePair {
                    scrutinee: w,
                    fst: x2,
                    snd: y2,
                    body: n,
                },
            ) => self.val(v, w) && self.under(&[x1, y1], &[x2, y2], |al| al.comp(m, n)),
            (Comp::App(f, a), Comp::App(g, b)) => self.val(f, g) && self.val(a, b),
            (Comp::Prim(p, xs), Comp::Prim(q, ys)) => {
                p.same_as(q)
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.val(x, y))
            }
            (
                Comp::Iterate {
                    body: m,
                    var: x,
                    start: v,
                },
                Comp::Iterate {
                    body: n,
                    var: y,
                    start: w,
                },
            ) => self.val(v, w) && self.under(&[x], &[y], |al| al.comp(m, n)),
            (
                Comp::CaseRoll {
                    scrutinee: v,
                    var: x,
                    body: m,
                },
                Comp::CaseRoll {
                    scrutinee: w,
                    var: y,
                    body: n,
                },
            ) => self.val(v, w) && self.under(&[x], &[y], |al| al.comp(m, n)),
            _ => false,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::surface::print::write_ty(f, self)
    }
}
