mod common;

use common::{beta_instance, corpus_states, outcomes_agree, Gen, LAWS};
use diffcbv::ast::{Comp, Val};
use diffcbv::desugar::iterate_via_rec;
use diffcbv::eval::{applicable_rules, is_terminal, run_by_steps, Machine, Step};
use diffcbv::ops::Prim;
use diffcbv::{apply_program, check_comp, corpus, load_program, run, step, Budget, Ctx, Outcome, Rule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn c(x: f64) -> Val {
    Val::Const(x)
}

fn program(name: &str) -> diffcbv::Program {
    corpus::get(name).unwrap().program()
}

#[test]
fn step_examples() {
    let t = Comp::bind("x", Comp::Return(c(3.0)), Comp::Return(Val::var("x")));
    assert!(matches!(step(&t).unwrap(), Step::Stepped(ref s, Rule::LetReturn) if *s == Comp::Return(c(3.0))));

    let t = Comp::Sign(c(3.0));
    assert!(matches!(step(&t).unwrap(), Step::Stepped(ref s, Rule::SignPos) if *s == Comp::Return(Val::bool(true))));

    match step(&Comp::Prim(Prim::Log, vec![c(-1.0)])).unwrap() {
        Step::DomainStuck(info) => {
            assert_eq!(info.op, "log");
            assert_eq!(info.args, vec![-1.0]);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn run_examples() {
    assert_eq!(run(&Comp::Return(c(3.0)), Budget::new(10)), Outcome::Value(c(3.0)));

    let diverge = program("diverge_rec");
    let out = apply_program(&diverge, &[c(0.0)], Budget::new(10_000)).unwrap();
    assert!(matches!(out.outcome, Outcome::OutOfFuel { steps: 10_000 }));

    let relu = program("relu");
    let at = |x: f64| apply_program(&relu, &[c(x)], Budget::default()).unwrap().outcome;
    assert_eq!(at(2.0), Outcome::Value(c(2.0)));
    assert_eq!(at(-2.0), Outcome::Value(c(0.0)));
    assert!(matches!(at(0.0), Outcome::DomainError { ref op, .. } if op == "sign"));

    let mul = load_program("params x : real, y : real;\nreturns real;\nbody mul(x, y)\n").unwrap();
    let out = apply_program(&mul, &[c(2.0), c(3.0)], Budget::default()).unwrap();
    assert_eq!(out.outcome, Outcome::Value(c(6.0)));
}

#[test]
fn apply_program_rejects_bad_arguments() {
    let relu = program("relu");
    assert!(apply_program(&relu, &[], Budget::default()).is_err());
    assert!(apply_program(&relu, &[Val::Unit], Budget::default()).is_err());
}

#[test]
fn exactly_one_rule_applies_along_corpus_traces() {
    let mut states = 0;
    corpus_states(|name, t, _| {
        let rules = applicable_rules(t);
        if is_terminal(t) {
            assert!(rules.is_empty(), "{name}: terminal state matched {rules:?}");
        } else {
            assert_eq!(rules.len(), 1, "{name}: {rules:?}");
        }
        states += 1;
    });
    assert!(states > 1000);
}

#[test]
fn every_state_rechecks_and_only_domain_errors_get_stuck() {
    corpus_states(|name, t, ty| {
        check_comp(&Ctx::new(), t, ty).unwrap_or_else(|e| panic!("{name}: {e}"));
        step(t).unwrap_or_else(|e| panic!("{name}: {e}"));
    });
}

#[test]
fn machine_agrees_with_reference_stepper_on_corpus() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for e in corpus::all() {
        let p = e.program();
        for _ in 0..4 {
            let t = p.apply(&(e.sample)(&mut rng)).unwrap();
            let budget = Budget::new(5_000);
            let a = diffcbv::eval::run_counted(&t, budget);
            let b = run_by_steps(&t, budget).unwrap();
            assert_eq!(a, b, "{}", e.name);
        }
    }
}

#[test]
fn iterate_matches_its_rec_encoding() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    for e in corpus::with_tag(corpus::Tag::Iterate) {
        let p = e.program();
        let encoded = diffcbv::Program {
            body: iterate_via_rec(&p.ctx(), &p.body).unwrap(),
            ..p.clone()
        };
        encoded.check().unwrap();
        for _ in 0..20 {
            let args = (e.sample)(&mut rng);
            let a = apply_program(&p, &args, Budget::default()).unwrap().outcome;
            let b = apply_program(&encoded, &args, Budget::default()).unwrap().outcome;
            assert!(outcomes_agree(&a, &b), "{}: {a} vs {b}", e.name);
        }
    }
}

#[test]
fn beta_laws_hold_observationally() {
    let mut g = Gen::terminating(0xBE7A);
    let budget = Budget::new(1_000_000);
    for i in 0..200 {
        let law = LAWS[i % LAWS.len()];
        let (lhs, rhs, ty) = beta_instance(&mut g, law);
        check_comp(&Ctx::new(), &lhs, &ty).unwrap();
        check_comp(&Ctx::new(), &rhs, &ty).unwrap();
        let (a, b) = (run(&lhs, budget), run(&rhs, budget));
        assert!(!matches!(a, Outcome::OutOfFuel { .. }), "{law:?}");
        assert!(outcomes_agree(&a, &b), "{law:?}: {a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn runs_are_monotone_in_budget(seed in any::<u64>(), extra in 0u64..1000) {
        let mut g = Gen::new(seed);
        let ty = g.ty(2);
        let t = g.comp(&Ctx::new(), &ty, 7);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let b = rng.random_range(1..200);
        if let Outcome::Value(v) = run(&t, Budget::new(b)) {
            prop_assert_eq!(run(&t, Budget::new(b + extra)), Outcome::Value(v));
        }
    }

    #[test]
    fn machine_agrees_with_reference_stepper(seed in any::<u64>(), b in 1u64..400) {
        let mut g = Gen::new(seed);
        let ty = g.ty(2);
        let t = g.comp(&Ctx::new(), &ty, 7);
        let a = diffcbv::eval::run_counted(&t, Budget::new(b));
        let r = run_by_steps(&t, Budget::new(b)).unwrap();
        prop_assert_eq!(a, r);
    }

    #[test]
    fn generated_traces_are_deterministic_and_typed(seed in any::<u64>()) {
        let mut g = Gen::new(seed);
        let ty = g.ty(2);
        let t = g.comp(&Ctx::new(), &ty, 7);
        let mut m = Machine::new(t);
        let mut ok = true;
        m.run_observed(Budget::new(500), &mut |_, _, m| {
            let s = m.state();
            ok &= check_comp(&Ctx::new(), &s, &ty).is_ok();
            ok &= is_terminal(&s) || applicable_rules(&s).len() == 1;
        }).unwrap();
        prop_assert!(ok);
    }
}
