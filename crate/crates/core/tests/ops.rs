mod common;

use common::{op_point, partial_against_fd};
use diffcbv::ops::template_var;
use diffcbv::{check_comp, op_eval, registered_ops, Ctx, OpError, Prim, Ty};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[test]
fn sigmoid_at_zero_matches_the_closed_form() {
    let want = 1.0 / (1.0 + 0.0_f64.exp());
    assert_eq!(op_eval("sigmoid", &[0.0]).unwrap(), want);
}

#[test]
fn registry_covers_the_named_ops() {
    let names: Vec<String> = registered_ops().into_iter().map(|s| s.name).collect();
    for n in ["const_c", "add", "sub", "mul", "div", "neg", "exp", "log", "sigmoid"] {
        assert!(names.contains(&n.to_string()), "{n}");
    }
}

#[test]
fn partials_typecheck_in_the_template_context() {
    for op in Prim::NAMED {
        let ctx = Ctx::from_bindings((1..=op.arity()).map(|j| (template_var(j), Ty::Real)));
        for i in 1..=op.arity() {
            check_comp(&ctx, &op.partial(i).unwrap(), &Ty::Real).unwrap_or_else(|e| panic!("{op} {i}: {e}"));
        }
    }
}

#[test]
fn partials_agree_with_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(0x0D5);
    for op in Prim::NAMED {
        for i in 1..=op.arity() {
            for _ in 0..100 {
                let xs = op_point(&mut rng, op);
                let (ad, fd, tol) = partial_against_fd(op, i, &xs);
                assert!((ad - fd).abs() <= tol, "{op} ∂{i} at {xs:?}: {ad} vs {fd}");
            }
        }
    }
}

proptest! {
    #[test]
    fn domain_predicate_decides_evaluation(
        which in 0..Prim::NAMED.len(),
        a in -1e3..1e3f64,
        b in prop_oneof![Just(0.0), -1e3..1e3f64],
    ) {
        let op = Prim::NAMED[which];
        let args = [a.clamp(-600.0, 600.0), b][..op.arity()].to_vec();
        match op.eval(&args) {
            Ok(v) => {
                prop_assert!(op.in_domain(&args));
                prop_assert!(v.is_finite());
            }
            // inputs are small enough that nothing overflows
            Err(OpError::Domain { .. }) => prop_assert!(!op.in_domain(&args)),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
