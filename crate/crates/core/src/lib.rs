//! A fine-grain call-by-value language with partial primitives, real
//! conditionals, iteration, term recursion and iso-recursive types, together
//! with its forward-mode AD source transformation, a small-step interpreter
//! and a finite-difference oracle for checking derivatives.

pub mod ad;
pub mod ast;
pub mod corpus;
pub mod desugar;
pub mod eval;
pub mod ops;
pub mod oracle;
pub mod program;
pub mod surface;
pub mod typecheck;

pub use ad::{beta_simplify, d_comp, d_ctx, d_program, d_type, d_val};
pub use ast::{Comp, Fresh, Ty, Val};
pub use eval::{apply_program, run, step, Budget, Outcome, OutcomeClass, Rule, Step};
pub use ops::{op_eval, op_partial, registered_ops, OpError, OpSpec, Prim};
pub use oracle::{
    finite_diff, flatten, grad_check, seed, tangent_decompose, GradCheckConfig, Shape, TangentReport, Verdict,
};
pub use program::Program;
pub use surface::{load_program, FrontendError};
pub use typecheck::{check_comp, check_val, is_first_order, kind_check, synth_comp, synth_val, Ctx, TypeError};
