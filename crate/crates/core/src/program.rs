use crate::ast::{Comp, Ty, Val};
use crate::typecheck::{check_comp, check_val, kind_check, Ctx, TypeError, TypeErrorKind};

/// A program with a declared signature `x₁:τ₁, …, xₙ:τₙ ⊢ body : ret`.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub params: Vec<(String, Ty)>,
    pub ret: Ty,
    pub body: Comp,
}

impl Program {
    pub fn ctx(&self) -> Ctx {
        Ctx::from_bindings(self.params.iter().cloned())
    }

    pub fn param_types(&self) -> Vec<Ty> {
        self.params.iter().map(|(_, t)| t.clone()).collect()
    }

    /// Kind-checks the signature, then checks the body at `ret`.
    pub fn check(&self) -> Result<(), TypeError> {
        for (_, ty) in &self.params {
            kind_check(&[], ty)?;
        }
        kind_check(&[], &self.ret)?;
        check_comp(&self.ctx(), &self.body, &self.ret)
    }

    /// True when every parameter and the result are first-order.
    pub fn is_first_order(&self) -> bool {
        self.ret.is_first_order() && self.params.iter().all(|(_, t)| t.is_first_order())
    }

    /// Substitutes closed arguments for the parameters, checking them against
    /// the declared types.
    pub fn apply(&self, args: &[Val]) -> Result<Comp, TypeError> {
        if args.len() != self.params.len() {
            return Err(TypeError::new(TypeErrorKind::Arity {
                op: "program".into(),
                expected: self.params.len(),
                found: args.len(),
            }));
        }
        let empty = Ctx::new();
        for (arg, (_, ty)) in args.iter().zip(&self.params) {
            check_val(&empty, arg, ty)?;
        }
        let pairs: Vec<(String, Val)> = self
            .params
            .iter()
            .zip(args)
            .map(|((x, _), v)| (x.clone(), v.clone()))
            .collect();
        Ok(self.body.subst_many(&pairs))
    }
}
