//! Term recursion and iteration encoded through recursive types.

use crate::ast::{Comp, Fresh, Ty, Val};
use crate::typecheck::{synth_comp, synth_val, Ctx, TypeError};

/// Encodes `rec f : τ → σ = body` by self-application through
/// `R = μα. α → (τ → σ)`:
///
/// ```text
/// helper = λ(x:R). return λ(y:τ).
///            unroll x as x' in (f ← x' x; g ← body; g y)
/// result = h ← return helper; h (roll[R] h)
/// ```
///
/// Each recursive call re-derives `f` with one unroll-and-apply step, which
/// returns a lambda immediately, so the encoding is a call-by-value fixpoint.
/// `fn_ty` must be an arrow type.
pub fn rec_encoding(fresh: &mut Fresh, f: &str, fn_ty: &Ty, body: Comp) -> Comp {
    let Ty::Arrow(arg_ty, _) = fn_ty else {
        panic!("rec_encoding requires a function type, got {fn_ty}");
    };
    let free = fn_ty.free_ty_vars();
    let mut alpha = String::from("r");
    while free.contains(&alpha) {
        alpha.push('\'');
    }
    let rec_ty = Ty::mu(
        alpha.clone(),
        Ty::arrow(Ty::Var(alpha), fn_ty.clone()),
    );
    fresh.reserve(f);
    let x = fresh.name("self");
    let y = fresh.name("arg");
    let unrolled = fresh.name("self");
    let g = fresh.name("g");
    let h = fresh.name("h");
    let inner = Comp::case_roll(
        Val::var(x.clone()),
        unrolled.clone(),
        Comp::bind(
            f,
            Comp::App(Val::var(unrolled), Val::var(x.clone())),
            Comp::bind(
                g.clone(),
                body,
                Comp::App(Val::var(g), Val::var(y.clone())),
            ),
        ),
    );
    let helper = Val::lam(
        x,
        rec_ty.clone(),
        Comp::Return(Val::lam(y, (**arg_ty).clone(), inner)),
    );
    Comp::bind(
        h.clone(),
        Comp::Return(helper),
        Comp::App(Val::var(h.clone()), Val::roll(Val::var(h), rec_ty)),
    )
}

/// Replaces every `iterate` by its encoding as a recursive function:
///
/// ```text
/// iterate t from x = v  ≝  (rec z : σ → τ = λ(x:σ). y ← t;
///                              case y of inl a → z a | inr b → return b) v
/// ```
///
/// Needs the typing context to recover `σ` and `τ`.
pub fn iterate_via_rec(ctx: &Ctx, t: &Comp) -> Result<Comp, TypeError> {
    synth_comp(ctx, t)?;
    let mut fresh = Fresh::for_comp(t);
    fresh.reserve_all(ctx.bindings().iter().map(|(x, _)| x.clone()));
    IterToRec { fresh }.comp(ctx, t)
}

struct IterToRec {
    fresh: Fresh,
}

impl IterToRec {
    fn val(&mut self, ctx: &Ctx, v: &Val) -> Result<Val, TypeError> {
        Ok(match v {
            Val::Var(_) | Val::Const(_) | Val::Unit => v.clone(),
            Val::Inl(p, ty) => Val::inl(self.val(ctx, p)?, ty.clone()),
            Val::Inr(p, ty) => Val::inr(self.val(ctx, p)?, ty.clone()),
            Val::Roll(p, ty) => Val::roll(self.val(ctx, p)?, ty.clone()),
            Val::Pair(a, b) => Val::pair(self.val(ctx, a)?, self.val(ctx, b)?),
            Val::Lam(x, ty, body) => {
                Val::lam(x.clone(), ty.clone(), self.comp(&ctx.with(x.clone(), ty.clone()), body)?)
            }
        })
    }

    fn comp(&mut self, ctx: &Ctx, t: &Comp) -> Result<Comp, TypeError> {
        Ok(match t {
            Comp::Return(v) => Comp::Return(self.val(ctx, v)?),
            Comp::Bind(x, first, rest) => {
                let tx = synth_comp(ctx, first)?;
                Comp::bind(
                    x.clone(),
                    self.comp(ctx, first)?,
                    self.comp(&ctx.with(x.clone(), tx), rest)?,
                )
            }
            Comp::CaseVoid(v, ty) => Comp::CaseVoid(self.val(ctx, v)?, ty.clone()),
            Comp::CaseSum {
                scrutinee,
                left_var,
                left,
                right_var,
                right,
            } => {
                let Ty::Sum(l, r) = synth_val(ctx, scrutinee)? else {
                    unreachable!("checked by synth_comp")
                };
                Comp::case_sum(
                    self.val(ctx, scrutinee)?,
                    left_var.clone(),
                    self.comp(&ctx.with(left_var.clone(), (*l).clone()), left)?,
                    right_var.clone(),
                    self.comp(&ctx.with(right_var.clone(), (*r).clone()), right)?,
                )
            }
            Comp::CaseUnit(v, body) => Comp::CaseUnit(self.val(ctx, v)?, Box::new(self.comp(ctx, body)?)),
            Comp::CasePair {
                scrutinee,
                fst,
                snd,
                body,
            } => {
                let Ty::Prod(a, b) = synth_val(ctx, scrutinee)? else {
                    unreachable!("checked by synth_comp")
                };
                let inner = ctx.with(fst.clone(), (*a).clone()).with(snd.clone(), (*b).clone());
                Comp::case_pair(self.val(ctx, scrutinee)?, fst.clone(), snd.clone(), self.comp(&inner, body)?)
            }
            Comp::App(f, a) => Comp::App(self.val(ctx, f)?, self.val(ctx, a)?),
            Comp::Prim(op, args) => Comp::Prim(
                *op,
                args.iter().map(|a| self.val(ctx, a)).collect::<Result<_, _>>()?,
            ),
            Comp::Sign(v) => Comp::Sign(self.val(ctx, v)?),
            Comp::CaseRoll {
                scrutinee,
                var,
                body,
            } => {
                let unfolded = synth_val(ctx, scrutinee)?
                    .unfold()
                    .expect("checked by synth_comp");
                Comp::case_roll(
                    self.val(ctx, scrutinee)?,
                    var.clone(),
                    self.comp(&ctx.with(var.clone(), unfolded), body)?,
                )
            }
            Comp::Iterate { body, var, start } => {
                // validates the whole iterate before rewriting it
                let result_ty = synth_comp(ctx, t)?;
                let state_ty = synth_val(ctx, start)?;
                let body = self.comp(&ctx.with(var.clone(), state_ty.clone()), body)?;
                let start = self.val(ctx, start)?;
                let z = self.fresh.name("loop");
                let y = self.fresh.name("y");
                let again = self.fresh.name("next");
                let done = self.fresh.name("out");
                let step = Comp::Return(Val::lam(
                    var.clone(),
                    state_ty.clone(),
                    Comp::bind(
                        y.clone(),
                        body,
                        Comp::case_sum(
                            Val::var(y),
                            again.clone(),
                            Comp::App(Val::var(z.clone()), Val::var(again)),
                            done.clone(),
                            Comp::Return(Val::var(done)),
                        ),
                    ),
                ));
                let fn_ty = Ty::arrow(state_ty, result_ty);
                let looped = rec_encoding(&mut self.fresh, &z, &fn_ty, step);
                let l = self.fresh.name("loop");
                Comp::bind(l.clone(), looped, Comp::App(Val::var(l), start))
            }
        })
    }
}
