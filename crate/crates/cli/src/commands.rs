use std::fmt::Write as _;
use std::path::Path;

use diffcbv::ad::beta_simplify_program;
use diffcbv::eval::run_traced;
use diffcbv::oracle::{grad_check_batch, Case, DirectionSampler, Point, Summary, DIRECTION_SEED};
use diffcbv::surface::{args_for, print_program, print_ty, print_val};
use diffcbv::typecheck::Diagnostic;
use diffcbv::{
    corpus, d_program, grad_check, load_program, FrontendError, GradCheckConfig, Outcome,
    Program, TangentReport, Ty, Val,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::{Cli, Command, Opts};

const OK: u8 = 0;
const DIAGNOSTIC: u8 = 1;
const IO: u8 = 2;
const INTERNAL: u8 = 3;

/// Sampled points per corpus program.
const CORPUS_SAMPLES: usize = 5;

/// A failure that ends the command with a non-zero exit code.
enum Failure {
    Io(String),
    Diagnostic(Diagnostic),
    Internal(String),
}

impl Failure {
    fn arg(msg: impl Into<String>) -> Failure {
        Failure::Diagnostic(Diagnostic {
            code: "BAD_ARGUMENT",
            message: msg.into(),
            location: String::new(),
        })
    }
}

impl From<FrontendError> for Failure {
    fn from(e: FrontendError) -> Failure {
        Failure::Diagnostic(e.diagnostic())
    }
}

type CmdResult = Result<u8, Failure>;

pub fn dispatch(cli: &Cli) -> u8 {
    let opts = &cli.opts;
    let (file, result) = match &cli.command {
        Command::Check { file } => (Some(file.as_path()), check(file, opts)),
        Command::Ad { file } => (Some(file.as_path()), ad(file, opts)),
        Command::Run { file } => (Some(file.as_path()), run(file, opts)),
        Command::GradCheck { file } => (Some(file.as_path()), grad_check_cmd(file, opts)),
        Command::Corpus => (None, corpus_cmd(opts)),
    };
    match result {
        Ok(code) => code,
        Err(f) => report(file, opts, f),
    }
}

fn report(file: Option<&Path>, opts: &Opts, f: Failure) -> u8 {
    let file = file.map(|p| p.display().to_string()).unwrap_or_default();
    match f {
        Failure::Io(msg) => {
            eprintln!("error: {msg}");
            IO
        }
        Failure::Internal(msg) => {
            eprintln!("internal error: {msg}");
            INTERNAL
        }
        Failure::Diagnostic(d) => {
            if opts.json {
                eprintln!("{}", json!({ "file": file, "diagnostic": d }));
            } else if d.location.is_empty() {
                eprintln!("{file}: error[{}]: {}", d.code, d.message);
            } else {
                eprintln!("{file}:{}: error[{}]: {}", d.location, d.code, d.message);
            }
            DIAGNOSTIC
        }
    }
}

fn load(file: &Path) -> Result<Program, Failure> {
    let src = std::fs::read_to_string(file).map_err(|e| Failure::Io(format!("{}: {e}", file.display())))?;
    Ok(load_program(&src)?)
}

fn signature(p: &Program) -> String {
    let params: Vec<String> = p.params.iter().map(|(x, t)| format!("{x}: {}", print_ty(t))).collect();
    format!("({}) -> {}", params.join(", "), print_ty(&p.ret))
}

fn check(file: &Path, opts: &Opts) -> CmdResult {
    let p = load(file)?;
    if opts.json {
        println!("{}", json!({ "file": file.display().to_string(), "ok": true, "signature": signature(&p) }));
    } else {
        println!("ok {}", signature(&p));
    }
    Ok(OK)
}

fn ad(file: &Path, opts: &Opts) -> CmdResult {
    let p = load(file)?;
    let mut dp = d_program(&p);
    if opts.beta_simplify {
        dp = beta_simplify_program(&dp);
    }
    let text = print_program(&dp);
    if opts.json {
        println!("{}", json!({ "program": text }));
    } else {
        print!("{text}");
    }
    Ok(OK)
}

fn outcome_json(o: &Outcome, steps: u64) -> serde_json::Value {
    match o {
        Outcome::Value(v) => json!({ "outcome": "value", "value": print_val(v), "steps": steps }),
        Outcome::DomainError { op, args, step } => {
            json!({ "outcome": "domain_error", "op": op, "args": args, "step": step })
        }
        Outcome::OutOfFuel { steps } => json!({ "outcome": "out_of_fuel", "steps": steps }),
    }
}

fn run(file: &Path, opts: &Opts) -> CmdResult {
    let p = load(file)?;
    let args = args_for(opts.args.as_deref().unwrap_or(""), &p.params)?;
    let t = p.apply(&args).map_err(|e| Failure::Diagnostic(e.diagnostic()))?;
    let mut steps = 0;
    let outcome = run_traced(&t, opts.budget(), &mut |i, rule| {
        steps = i;
        if opts.trace {
            eprintln!("{i:>8} {}", rule.name());
        }
    })
    .map_err(|e| Failure::Internal(e.to_string()))?;
    if opts.json {
        println!("{}", outcome_json(&outcome, steps));
    } else {
        println!("{outcome}");
    }
    Ok(OK)
}

fn all_real(params: &[(String, Ty)]) -> bool {
    params.iter().all(|(_, t)| *t == Ty::Real)
}

/// The evaluation point from `--args`, `--point`, or both (structure from
/// the former, leaves from the latter).
fn point_args(p: &Program, opts: &Opts) -> Result<Vec<Val>, Failure> {
    let tys = p.param_types();
    let base = match &opts.args {
        Some(src) => Some(args_for(src, &p.params)?),
        None => None,
    };
    match (base, opts.point.as_ref().map(|c| &c.0)) {
        (Some(args), None) => Ok(args),
        (Some(args), Some(leaves)) => {
            let point = Point::of_args(&args, &tys).map_err(|e| Failure::arg(e.to_string()))?;
            if point.leaves.len() != leaves.len() {
                return Err(Failure::arg(format!(
                    "--point has {} entries but the arguments have {} real leaves",
                    leaves.len(),
                    point.leaves.len()
                )));
            }
            point.args_at(&tys, leaves).map_err(|e| Failure::arg(e.to_string()))
        }
        (None, Some(leaves)) if all_real(&p.params) => {
            if leaves.len() != tys.len() {
                return Err(Failure::arg(format!(
                    "--point has {} entries for {} parameter(s)",
                    leaves.len(),
                    tys.len()
                )));
            }
            Ok(leaves.iter().map(|x| Val::Const(*x)).collect())
        }
        (None, Some(_)) => Err(Failure::arg("parameters are not all real; give the point with --args")),
        (None, None) => Err(Failure::arg("grad-check needs --point or --args")),
    }
}

fn config(opts: &Opts) -> GradCheckConfig {
    GradCheckConfig {
        tol_abs: opts.tol_abs,
        tol_rel: opts.tol_rel,
        budget: opts.budget(),
        ..GradCheckConfig::default()
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

fn report_text(r: &TangentReport) -> String {
    let mut s = String::new();
    let opt = |v: &Option<Vec<f64>>| v.as_deref().map(fmt_vec).unwrap_or_else(|| "-".into());
    let _ = writeln!(s, "point        {}", fmt_vec(&r.point));
    let _ = writeln!(s, "direction    {}", fmt_vec(&r.direction));
    let _ = writeln!(s, "primal       {:?}", r.primal_outcome);
    let _ = writeln!(s, "derivative   {:?}", r.deriv_outcome);
    let _ = writeln!(s, "ad_tangent   {}", opt(&r.ad_tangent));
    let _ = writeln!(s, "fd_tangent   {}", opt(&r.fd_tangent));
    let _ = writeln!(s, "max_abs_err  {:e}", r.max_abs_err);
    let _ = writeln!(s, "max_rel_err  {:e}", r.max_rel_err);
    let _ = write!(s, "verdict      {}", r.verdict.as_str());
    if let Some(note) = &r.note {
        let _ = write!(s, " ({note})");
    }
    s
}

fn grad_check_cmd(file: &Path, opts: &Opts) -> CmdResult {
    let p = load(file)?;
    if !p.is_first_order() {
        return Err(Failure::arg("grad-check needs a first-order signature"));
    }
    let args = point_args(&p, opts)?;
    let n = Point::of_args(&args, &p.param_types())
        .map_err(|e| Failure::arg(e.to_string()))?
        .leaves
        .len();
    let direction = match &opts.dir {
        Some(d) => d.0.clone(),
        None => DirectionSampler::new(opts.seed.unwrap_or(DIRECTION_SEED)).sample(n),
    };
    let dp = d_program(&p);
    let r = grad_check(&p, &dp, &args, &direction, &config(opts)).map_err(|e| Failure::arg(e.to_string()))?;
    if opts.json {
        println!("{}", serde_json::to_string_pretty(&r).map_err(|e| Failure::Internal(e.to_string()))?);
    } else {
        println!("{}", report_text(&r));
    }
    Ok(if r.verdict == diffcbv::Verdict::Fail { DIAGNOSTIC } else { OK })
}

fn corpus_cmd(opts: &Opts) -> CmdResult {
    let seed = opts.seed.unwrap_or(DIRECTION_SEED);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut dirs = DirectionSampler::new(seed);
    let cfg = config(opts);
    let mut rows = Vec::new();
    let mut total = Summary::default();
    for e in corpus::all() {
        let p = load_program(e.source).map_err(|err| Failure::Internal(format!("{}: {err}", e.name)))?;
        let dp = d_program(&p);
        let ad_ok = dp.check().is_ok();
        let summary = if p.is_first_order() && !e.has(corpus::Tag::Diverges) {
            let cases: Vec<Case> = (0..CORPUS_SAMPLES)
                .map(|_| {
                    let args = (e.sample)(&mut rng);
                    let n = Point::of_args(&args, &p.param_types()).map(|pt| pt.leaves.len()).unwrap_or(0);
                    Case {
                        args,
                        direction: dirs.sample(n),
                    }
                })
                .collect();
            let reports: Vec<TangentReport> = grad_check_batch(&p, &dp, &cases, &cfg)
                .into_iter()
                .collect::<Result<_, _>>()
                .map_err(|err| Failure::Internal(format!("{}: {err}", e.name)))?;
            Some(Summary::of(&reports))
        } else {
            None
        };
        if let Some(s) = summary {
            total.total += s.total;
            total.pass += s.pass;
            total.fail += s.fail;
            total.skipped += s.skipped;
        }
        let tags: Vec<String> = e.tags.iter().map(|t| format!("{t:?}")).collect();
        rows.push((e.name, tags, ad_ok, summary));
    }

    let ad_failures = rows.iter().filter(|r| !r.2).count();
    if opts.json {
        let programs: Vec<_> = rows
            .iter()
            .map(|(name, tags, ad_ok, s)| json!({ "name": name, "tags": tags, "ad_typechecks": ad_ok, "grad_check": s }))
            .collect();
        println!("{}", json!({ "seed": format!("{seed:#x}"), "programs": programs, "summary": total }));
    } else {
        println!("{:<18} {:<34} {:>4} {:>5} {:>5} {:>5}", "program", "tags", "ad", "pass", "fail", "skip");
        for (name, tags, ad_ok, s) in &rows {
            let ad = if *ad_ok { "ok" } else { "FAIL" };
            let counts = match s {
                Some(s) => format!("{:>5} {:>5} {:>5}", s.pass, s.fail, s.skipped),
                None => format!("{:>5} {:>5} {:>5}", "-", "-", "-"),
            };
            println!("{name:<18} {:<34} {ad:>4} {counts}", tags.join(","));
        }
        println!(
            "{} programs, {} checks: {} pass, {} fail, {} skipped",
            rows.len(),
            total.total,
            total.pass,
            total.fail,
            total.skipped
        );
    }
    Ok(if total.fail > 0 || ad_failures > 0 { DIAGNOSTIC } else { OK })
}
