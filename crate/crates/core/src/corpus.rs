//! The built-in program corpus, with input samplers for each program.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::ast::{Ty, Val};
use crate::program::Program;
use crate::surface::load_program;

/// Directory holding the `.dcbv` sources.
pub const CORPUS_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    /// Every parameter and the result are `real`, and the program is smooth
    /// on its sampled domain.
    RealOnly,
    /// Has points where `sign` sees zero.
    Kinked,
    /// Uses an operation with a restricted domain.
    Partial,
    Iterate,
    Rec,
    /// Never terminates.
    Diverges,
    HigherOrder,
    RecursiveData,
}

pub type Sampler = fn(&mut ChaCha20Rng) -> Vec<Val>;

pub struct Entry {
    pub name: &'static str,
    pub source: &'static str,
    pub tags: &'static [Tag],
    /// Draws random arguments inside the program's domain.
    pub sample: Sampler,
}

impl Entry {
    pub fn has(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    /// # Panics
    /// If the source does not load; corpus sources are checked by tests.
    pub fn program(&self) -> Program {
        load_program(self.source).unwrap_or_else(|e| panic!("corpus program {}: {e}", self.name))
    }

    pub fn path(&self) -> String {
        format!("{CORPUS_DIR}/{}.dcbv", self.name)
    }
}

fn uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> Val {
    Val::Const(rng.random_range(lo..hi))
}

fn one_real(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, -3.0, 3.0)]
}

fn positive(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, 0.2, 4.0)]
}

fn two_reals(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)]
}

fn division_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    let y = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    vec![uniform(rng, -2.0, 2.0), Val::Const(y)]
}

fn taylor_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, -2.0, 2.0)]
}

fn halve_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, 0.1, 40.0)]
}

fn pow_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    let n = rng.random_range(0..6) as f64;
    vec![uniform(rng, -2.0, 2.0), Val::Const(n)]
}

fn fact_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, 0.1, 5.0)]
}

fn list_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    let n = rng.random_range(0..=5);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    vec![Val::real_list(&xs)]
}

/// `T = μt. real + t × t`
pub fn tree_ty() -> Ty {
    Ty::mu("t", Ty::sum(Ty::Real, Ty::prod(Ty::var("t"), Ty::var("t"))))
}

pub fn random_tree(rng: &mut ChaCha20Rng, depth: u32) -> Val {
    let t = tree_ty();
    let unfolded = t.unfold().expect("mu type");
    if depth == 0 || rng.random_bool(0.4) {
        Val::roll(Val::inl(uniform(rng, -2.0, 2.0), unfolded), t)
    } else {
        let l = random_tree(rng, depth - 1);
        let r = random_tree(rng, depth - 1);
        Val::roll(Val::inr(Val::pair(l, r), unfolded), t)
    }
}

fn tree_args(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![random_tree(rng, 3)]
}

fn pair_arg(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![Val::pair(uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0))]
}

fn real_and_unit(rng: &mut ChaCha20Rng) -> Vec<Val> {
    vec![uniform(rng, -3.0, 3.0), Val::Unit]
}

macro_rules! entry {
    ($name:literal, [$($tag:ident),*], $sample:expr) => {
        Entry {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".dcbv")),
            tags: &[$(Tag::$tag),*],
            sample: $sample,
        }
    };
}

static CORPUS: [Entry; 30] = [
    entry!("square", [RealOnly], one_real),
    entry!("polynomial", [RealOnly], two_reals),
    entry!("sigmoid", [RealOnly], one_real),
    entry!("exp_log", [RealOnly, Partial], positive),
    entry!("division", [RealOnly, Partial], division_args),
    entry!("relu", [Kinked], one_real),
    entry!("log", [Partial], positive),
    entry!("taylor_exp", [Iterate, Kinked], taylor_args),
    entry!("newton_sqrt", [Iterate, Kinked, Partial], positive),
    entry!("halve", [Iterate, Kinked], halve_args),
    entry!("pow_rec", [Rec, Kinked], pow_args),
    entry!("diverge_rec", [Rec, Diverges], one_real),
    entry!("fact_rec", [Rec, Kinked], fact_args),
    entry!("list_sum", [Rec, RecursiveData], list_args),
    entry!("list_map_square", [Rec, RecursiveData], list_args),
    entry!("sum_map_square", [Rec, RecursiveData, HigherOrder], list_args),
    entry!("tree_sum", [Rec, RecursiveData], tree_args),
    entry!("stream", [Rec, RecursiveData, HigherOrder], one_real),
    entry!("twice", [HigherOrder], one_real),
    entry!("compose", [HigherOrder], one_real),
    entry!("pair_ops", [], pair_arg),
    entry!("classify", [Kinked], one_real),
    entry!("abs", [Kinked], one_real),
    entry!("void_helper", [HigherOrder], one_real),
    entry!("unit_case", [], real_and_unit),
    entry!("softplus", [], one_real),
    entry!("tanh", [], one_real),
    entry!("constants", [], one_real),
    entry!("gaussian", [], two_reals),
    entry!("mixed_output", [Kinked], two_reals),
];

pub fn all() -> &'static [Entry] {
    &CORPUS
}

pub fn get(name: &str) -> Option<&'static Entry> {
    CORPUS.iter().find(|e| e.name == name)
}

pub fn with_tag(tag: Tag) -> impl Iterator<Item = &'static Entry> {
    CORPUS.iter().filter(move |e| e.has(tag))
}
